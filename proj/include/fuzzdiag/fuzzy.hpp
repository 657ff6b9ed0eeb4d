#ifndef FUZZDIAG_FUZZY_HPP
#define FUZZDIAG_FUZZY_HPP

// Takagi-Sugeno inference over triangular membership functions.
//
// Every type here is immutable once constructed and evaluation is a pure
// function, so a RuleBase can be shared between threads without locking.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fuzzdiag/errors.hpp"

namespace fuzzdiag {

/// Triangle (left, peak, right). A shoulder side holds membership at 1
/// beyond the peak instead of ramping down to the foot.
struct TriangularMF {
    double left = 0.0;
    double peak = 0.0;
    double right = 0.0;
    bool left_shoulder = false;
    bool right_shoulder = false;

    void validate() const {
        if (!std::isfinite(left) || !std::isfinite(peak) || !std::isfinite(right))
            throw ValidationError("membership function has non-finite vertex");
        if (!(left <= peak && peak <= right))
            throw ValidationError("membership function requires left <= peak <= right");
        if (!(left < right))
            throw ValidationError("membership function support is empty (left == right)");
    }

    /// Degree of `x` in [0, 1], no domain wrapping.
    double operator()(double x) const noexcept {
        if (x == peak) return 1.0;
        if (x < peak) {
            if (left_shoulder) return 1.0;
            if (x <= left) return 0.0;
            return (x - left) / (peak - left);
        }
        if (right_shoulder) return 1.0;
        if (x >= right) return 0.0;
        return (right - x) / (right - peak);
    }

    friend bool operator==(const TriangularMF&, const TriangularMF&) = default;
};

/// Non-negative remainder of `x` modulo `m`, in [0, m).
inline double positive_mod(double x, double m) {
    double r = std::fmod(x, m);
    if (r < 0.0) r += m;
    if (r >= m) r = 0.0;  // -tiny + m rounds up to m
    return r;
}

/// Membership of `x` in `mf`. With `circular_length`, `x` is first moved to
/// its representative in [mf.left, mf.left + length).
inline double membership(const TriangularMF& mf, double x,
                         std::optional<double> circular_length = std::nullopt) {
    if (circular_length) x = mf.left + positive_mod(x - mf.left, *circular_length);
    return mf(x);
}

struct Term {
    std::string name;
    TriangularMF mf;

    friend bool operator==(const Term&, const Term&) = default;
};

/// Named term set over [domain_min, domain_max], optionally circular.
///
/// Terms must form a Ruspini partition: each term's feet sit on the
/// neighbouring peaks, so memberships sum to one between the outer peaks
/// (everywhere, for a circular variable). A non-circular variable's outer
/// terms are shoulders whose outer foot equals their peak. A circular
/// variable's first and last terms reach across the wrap point.
class LinguisticVariable {
public:
    LinguisticVariable(std::string name, double domain_min, double domain_max, bool circular,
                       std::vector<Term> terms)
        : name_(std::move(name)),
          min_(domain_min),
          max_(domain_max),
          circular_(circular),
          terms_(std::move(terms)) {
        validate();
    }

    /// Builds the Ruspini layout from peaks alone.
    static LinguisticVariable ruspini(std::string name, double domain_min, double domain_max,
                                      bool circular, const std::vector<std::string>& term_names,
                                      const std::vector<double>& peaks) {
        if (term_names.size() != peaks.size())
            throw ValidationError("variable " + name + ": term names and peaks differ in count");
        return LinguisticVariable(std::move(name), domain_min, domain_max, circular,
                                  layout(domain_max - domain_min, circular, term_names, peaks));
    }

    const std::string& name() const noexcept { return name_; }
    double domain_min() const noexcept { return min_; }
    double domain_max() const noexcept { return max_; }
    double length() const noexcept { return max_ - min_; }
    bool circular() const noexcept { return circular_; }
    const std::vector<Term>& terms() const noexcept { return terms_; }
    std::size_t size() const noexcept { return terms_.size(); }

    std::vector<double> peaks() const {
        std::vector<double> out;
        out.reserve(terms_.size());
        for (const auto& t : terms_) out.push_back(t.mf.peak);
        return out;
    }

    std::optional<std::size_t> find_term(std::string_view term_name) const {
        for (std::size_t i = 0; i < terms_.size(); ++i)
            if (terms_[i].name == term_name) return i;
        return std::nullopt;
    }

    /// Clamps a linear input into the domain or wraps a circular one.
    double prepare(double x) const {
        if (circular_) return min_ + positive_mod(x - min_, length());
        return std::clamp(x, min_, max_);
    }

    /// Membership of the raw input `x` in term `term`, with clamping/wrapping.
    double membership(std::size_t term, double x) const {
        const auto& mf = terms_.at(term).mf;
        if (circular_) return fuzzdiag::membership(mf, x, length());
        return mf(std::clamp(x, min_, max_));
    }

    /// Same names, new peaks, Ruspini feet re-derived.
    LinguisticVariable with_peaks(const std::vector<double>& peaks) const {
        std::vector<std::string> names;
        names.reserve(terms_.size());
        for (const auto& t : terms_) names.push_back(t.name);
        return ruspini(name_, min_, max_, circular_, names, peaks);
    }

    friend bool operator==(const LinguisticVariable&, const LinguisticVariable&) = default;

private:
    static std::vector<Term> layout(double length, bool circular,
                                    const std::vector<std::string>& names,
                                    const std::vector<double>& peaks) {
        const std::size_t n = peaks.size();
        std::vector<Term> terms;
        terms.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            TriangularMF mf;
            mf.peak = peaks[i];
            if (circular) {
                mf.left = i == 0 ? peaks[n - 1] - length : peaks[i - 1];
                mf.right = i + 1 == n ? peaks[0] + length : peaks[i + 1];
            } else {
                mf.left = i == 0 ? peaks[i] : peaks[i - 1];
                mf.right = i + 1 == n ? peaks[i] : peaks[i + 1];
                mf.left_shoulder = i == 0;
                mf.right_shoulder = i + 1 == n;
            }
            terms.push_back({names[i], mf});
        }
        return terms;
    }

    void validate() const {
        const std::string where = "variable " + name_;
        if (name_.empty()) throw ValidationError("variable name is empty");
        if (!std::isfinite(min_) || !std::isfinite(max_) || !(min_ < max_))
            throw ValidationError(where + ": domain must satisfy min < max");
        if (terms_.size() < 2) throw ValidationError(where + ": needs at least two terms");
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            const auto& t = terms_[i];
            if (t.name.empty()) throw ValidationError(where + ": term name is empty");
            for (std::size_t j = 0; j < i; ++j)
                if (terms_[j].name == t.name)
                    throw ValidationError(where + ": duplicate term " + t.name);
            const double p = t.mf.peak;
            const bool inside = circular_ ? (p >= min_ && p < max_) : (p >= min_ && p <= max_);
            if (!inside) throw ValidationError(where + ": peak of " + t.name + " outside domain");
            if (i > 0 && !(terms_[i - 1].mf.peak < p))
                throw ValidationError(where + ": peaks must be strictly increasing");
        }
        std::vector<std::string> names;
        for (const auto& t : terms_) names.push_back(t.name);
        const auto expected = layout(length(), circular_, names, peaks());
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            if (!(terms_[i].mf == expected[i].mf))
                throw ValidationError(where + ": term " + terms_[i].name +
                                      " breaks the Ruspini layout (feet must sit on neighbour peaks)");
            terms_[i].mf.validate();
        }
    }

    std::string name_;
    double min_;
    double max_;
    bool circular_;
    std::vector<Term> terms_;
};

enum class TNorm { Product, Min };

inline const char* to_string(TNorm t) noexcept { return t == TNorm::Product ? "product" : "min"; }

/// One implication. `terms[p]` indexes the term of variable p; consequent
/// is a_0 + a_1*x_1 + ... + a_n*x_n, or the constant a_0 alone.
struct TSRule {
    std::vector<std::size_t> terms;
    std::vector<double> coeffs;

    friend bool operator==(const TSRule&, const TSRule&) = default;
};

/// Folds antecedent memberships with the chosen t-norm.
inline double combine(TNorm tnorm, std::span<const double> memberships) {
    double w = 1.0;
    for (double m : memberships) w = tnorm == TNorm::Product ? w * m : std::min(w, m);
    return w;
}

inline double firing_strength(const TSRule& rule, std::span<const double> inputs,
                              std::span<const LinguisticVariable> variables, TNorm tnorm) {
    if (inputs.size() != variables.size())
        throw ArityError("expected " + std::to_string(variables.size()) + " inputs, got " +
                         std::to_string(inputs.size()));
    if (rule.terms.size() != variables.size())
        throw ArityError("rule antecedent does not cover every variable");
    double w = 1.0;
    for (std::size_t p = 0; p < inputs.size(); ++p) {
        const double m = variables[p].membership(rule.terms[p], inputs[p]);
        w = tnorm == TNorm::Product ? w * m : std::min(w, m);
    }
    return w;
}

inline double rule_output(const TSRule& rule, std::span<const double> inputs) {
    if (rule.coeffs.size() == 1) return rule.coeffs[0];
    if (rule.coeffs.size() != inputs.size() + 1)
        throw ArityError("consequent has " + std::to_string(rule.coeffs.size()) +
                         " coefficients for " + std::to_string(inputs.size()) + " inputs");
    double y = rule.coeffs[0];
    for (std::size_t p = 0; p < inputs.size(); ++p) y += rule.coeffs[p + 1] * inputs[p];
    return y;
}

struct InferenceResult {
    std::vector<double> per_rule_weights;
    std::vector<double> rule_outputs;
    double output = 0.0;
};

/// Variables, a complete rule grid over them, and the t-norm.
class RuleBase {
public:
    RuleBase(std::vector<LinguisticVariable> variables, std::vector<TSRule> rules,
             TNorm tnorm = TNorm::Product)
        : variables_(std::move(variables)), rules_(std::move(rules)), tnorm_(tnorm) {
        validate();
    }

    const std::vector<LinguisticVariable>& variables() const noexcept { return variables_; }
    const std::vector<TSRule>& rules() const noexcept { return rules_; }
    TNorm tnorm() const noexcept { return tnorm_; }

    /// Index into rules() for a term combination.
    std::size_t rule_index(std::span<const std::size_t> terms) const {
        return index_.at(cell(terms));
    }

    RuleBase with_variable(std::size_t p, LinguisticVariable v) const {
        auto vars = variables_;
        vars.at(p) = std::move(v);
        return RuleBase(std::move(vars), rules_, tnorm_);
    }

    RuleBase with_tnorm(TNorm t) const { return RuleBase(variables_, rules_, t); }

    friend bool operator==(const RuleBase& a, const RuleBase& b) {
        return a.variables_ == b.variables_ && a.rules_ == b.rules_ && a.tnorm_ == b.tnorm_;
    }

private:
    std::size_t cell(std::span<const std::size_t> terms) const {
        std::size_t c = 0;
        for (std::size_t p = 0; p < variables_.size(); ++p) c = c * variables_[p].size() + terms[p];
        return c;
    }

    std::string describe(std::span<const std::size_t> terms) const {
        std::string s = "(";
        for (std::size_t p = 0; p < terms.size(); ++p) {
            if (p) s += ", ";
            s += variables_[p].terms()[terms[p]].name;
        }
        return s + ")";
    }

    void validate() {
        if (variables_.empty()) throw ValidationError("rule base has no variables");
        const std::size_t n = variables_.size();
        std::size_t cells = 1;
        for (const auto& v : variables_) cells *= v.size();
        index_.assign(cells, cells);
        for (std::size_t r = 0; r < rules_.size(); ++r) {
            const auto& rule = rules_[r];
            if (rule.terms.size() != n)
                throw ValidationError("rule " + std::to_string(r + 1) + " names " +
                                      std::to_string(rule.terms.size()) + " terms for " +
                                      std::to_string(n) + " variables");
            for (std::size_t p = 0; p < n; ++p)
                if (rule.terms[p] >= variables_[p].size())
                    throw ValidationError("rule " + std::to_string(r + 1) + " has a bad term index");
            if (rule.coeffs.size() != 1 && rule.coeffs.size() != n + 1)
                throw ValidationError("rule " + describe(rule.terms) + " needs 1 or " +
                                      std::to_string(n + 1) + " coefficients");
            for (double a : rule.coeffs)
                if (!std::isfinite(a))
                    throw ValidationError("rule " + describe(rule.terms) + " has a non-finite coefficient");
            const std::size_t c = cell(rule.terms);
            if (index_[c] != cells) throw ValidationError("duplicate rule for " + describe(rule.terms));
            index_[c] = r;
        }
        std::vector<std::size_t> terms(n, 0);
        for (std::size_t c = 0; c < cells; ++c) {
            if (index_[c] == cells) throw ValidationError("missing rule for " + describe(terms));
            for (std::size_t p = n; p-- > 0;) {
                if (++terms[p] < variables_[p].size()) break;
                terms[p] = 0;
            }
        }
    }

    std::vector<LinguisticVariable> variables_;
    std::vector<TSRule> rules_;
    TNorm tnorm_;
    std::vector<std::size_t> index_;
};

/// Weighted average of rule outputs; rules with zero weight are skipped.
inline double defuzzify(std::span<const double> weights, std::span<const double> outputs) {
    if (weights.size() != outputs.size())
        throw ArityError("weights and outputs differ in length");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] > 0.0) {
            num += weights[i] * outputs[i];
            den += weights[i];
        }
    }
    if (!(den > 0.0)) throw ZeroActivation("no rule fired for the given input");
    return num / den;
}

/// Weighted average of rule outputs, weights from the rule base's t-norm.
/// Inputs are clamped (linear) or wrapped (circular) before use.
inline InferenceResult evaluate(const RuleBase& rb, std::span<const double> inputs) {
    const auto& vars = rb.variables();
    if (inputs.size() != vars.size())
        throw ArityError("expected " + std::to_string(vars.size()) + " inputs, got " +
                         std::to_string(inputs.size()));
    std::vector<double> x(inputs.size());
    for (std::size_t p = 0; p < x.size(); ++p) {
        if (!std::isfinite(inputs[p]))
            throw ValidationError("input " + std::to_string(p) + " is not finite");
        x[p] = vars[p].prepare(inputs[p]);
    }
    std::vector<std::vector<double>> degrees(vars.size());
    for (std::size_t p = 0; p < vars.size(); ++p) {
        degrees[p].resize(vars[p].size());
        for (std::size_t t = 0; t < vars[p].size(); ++t) degrees[p][t] = vars[p].membership(t, x[p]);
    }

    InferenceResult res;
    const auto& rules = rb.rules();
    res.per_rule_weights.resize(rules.size());
    res.rule_outputs.resize(rules.size());
    for (std::size_t r = 0; r < rules.size(); ++r) {
        double w = 1.0;
        for (std::size_t p = 0; p < vars.size(); ++p) {
            const double m = degrees[p][rules[r].terms[p]];
            w = rb.tnorm() == TNorm::Product ? w * m : std::min(w, m);
        }
        res.per_rule_weights[r] = w;
        res.rule_outputs[r] = rule_output(rules[r], x);
    }
    res.output = defuzzify(res.per_rule_weights, res.rule_outputs);
    return res;
}

inline InferenceResult evaluate(const RuleBase& rb, std::initializer_list<double> inputs) {
    return evaluate(rb, std::span<const double>(inputs.begin(), inputs.size()));
}

}  // namespace fuzzdiag

#endif  // FUZZDIAG_FUZZY_HPP
