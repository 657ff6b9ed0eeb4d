#ifndef FUZZDIAG_TESTS_ORACLES_HPP
#define FUZZDIAG_TESTS_ORACLES_HPP

// Test-only reference computations. Nothing here calls into the library's
// evaluation path; they only read the plain data of the types under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "fuzzdiag/fuzzy.hpp"

namespace oracle {

/// Plain triangle with optional shoulders, written out case by case.
inline double tri(double l, double p, double r, bool ls, bool rs, double x) {
    if (x <= p) {
        if (ls) return 1.0;
        if (p == l) return x == p ? 1.0 : 0.0;
        return std::clamp((x - l) / (p - l), 0.0, 1.0);
    }
    if (rs) return 1.0;
    return std::clamp((r - x) / (r - p), 0.0, 1.0);
}

/// Membership of raw input `x`: clamp for linear variables; for circular
/// ones, take the best of the three copies x - L, x, x + L.
inline double degree(const fuzzdiag::LinguisticVariable& v, std::size_t term, double x) {
    const auto& mf = v.terms()[term].mf;
    auto f = [&](double z) { return tri(mf.left, mf.peak, mf.right, mf.left_shoulder, mf.right_shoulder, z); };
    if (!v.circular()) return f(std::clamp(x, v.domain_min(), v.domain_max()));
    const double L = v.length();
    double z = std::fmod(x - v.domain_min(), L);
    if (z < 0) z += L;
    z += v.domain_min();
    return std::max({f(z - L), f(z), f(z + L)});
}

struct Brute {
    double output = 0.0;
    double min_fired = 0.0;
    double max_fired = 0.0;
    double weight_sum = 0.0;
};

/// Product (or min) firing strengths followed by the weighted average,
/// looping over every rule with no shared state.
inline Brute evaluate(const fuzzdiag::RuleBase& rb, const std::vector<double>& inputs) {
    const auto& vars = rb.variables();
    std::vector<double> x(inputs.size());
    for (std::size_t p = 0; p < x.size(); ++p) {
        if (vars[p].circular()) {
            const double L = vars[p].length();
            double z = std::fmod(inputs[p] - vars[p].domain_min(), L);
            if (z < 0) z += L;
            x[p] = vars[p].domain_min() + z;
        } else {
            x[p] = std::clamp(inputs[p], vars[p].domain_min(), vars[p].domain_max());
        }
    }
    Brute b;
    double num = 0.0;
    bool any = false;
    for (const auto& rule : rb.rules()) {
        double w = 1.0;
        for (std::size_t p = 0; p < vars.size(); ++p) {
            const double m = degree(vars[p], rule.terms[p], inputs[p]);
            w = rb.tnorm() == fuzzdiag::TNorm::Product ? w * m : std::min(w, m);
        }
        double y = rule.coeffs[0];
        if (rule.coeffs.size() > 1)
            for (std::size_t p = 0; p < x.size(); ++p) y += rule.coeffs[p + 1] * x[p];
        if (w > 0) {
            num += w * y;
            b.weight_sum += w;
            b.min_fired = any ? std::min(b.min_fired, y) : y;
            b.max_fired = any ? std::max(b.max_fired, y) : y;
            any = true;
        }
    }
    b.output = num / b.weight_sum;
    return b;
}

/// Two-pass mean and sample variance.
inline std::pair<double, double> two_pass(const std::vector<double>& xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, xs.size() > 1 ? ss / static_cast<double>(xs.size() - 1) : 0.0};
}

/// Random Ruspini variable with 2..7 terms and random peaks.
inline fuzzdiag::LinguisticVariable random_variable(std::mt19937_64& rng, const std::string& name) {
    std::uniform_int_distribution<int> nterms(2, 7);
    std::bernoulli_distribution coin(0.3);
    std::uniform_real_distribution<double> lo(-5.0, 5.0);
    std::uniform_real_distribution<double> width(1.0, 30.0);
    const bool circular = coin(rng);
    const double a = lo(rng);
    const double b = a + width(rng);
    const int n = nterms(rng);
    std::uniform_real_distribution<double> in(a, b);
    std::vector<double> peaks;
    while (static_cast<int>(peaks.size()) < n) {
        double p = in(rng);
        if (std::find(peaks.begin(), peaks.end(), p) == peaks.end()) peaks.push_back(p);
    }
    std::sort(peaks.begin(), peaks.end());
    if (!circular) {
        peaks.front() = a;
        peaks.back() = b;
    }
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back(name + std::to_string(i));
    return fuzzdiag::LinguisticVariable::ruspini(name, a, b, circular, names, peaks);
}

/// Random complete two-input rule base with first-order consequents.
inline fuzzdiag::RuleBase random_rulebase(std::mt19937_64& rng, fuzzdiag::TNorm tnorm) {
    auto v1 = random_variable(rng, "u");
    auto v2 = random_variable(rng, "v");
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    std::bernoulli_distribution zero_order(0.25);
    std::vector<fuzzdiag::TSRule> rules;
    for (std::size_t i = 0; i < v1.size(); ++i)
        for (std::size_t j = 0; j < v2.size(); ++j) {
            fuzzdiag::TSRule r{{i, j}, {coef(rng)}};
            if (!zero_order(rng)) {
                r.coeffs.push_back(coef(rng));
                r.coeffs.push_back(coef(rng));
            }
            rules.push_back(r);
        }
    std::shuffle(rules.begin(), rules.end(), rng);
    return fuzzdiag::RuleBase({v1, v2}, rules, tnorm);
}

}  // namespace oracle

#endif  // FUZZDIAG_TESTS_ORACLES_HPP
