#ifndef FUZZDIAG_TUNER_HPP
#define FUZZDIAG_TUNER_HPP

// Online vertex displacement for the intensity variable.
//
// When a sample known to be normal still raises an alert, the peak of the
// term firing strongest at that sample moves toward it by
// eta * (x - peak). Moves are clipped so that peaks keep a minimum
// separation, stay inside the domain, and never drift further than
// max_total_disp from where tuning started. Feet are re-derived from the
// new peaks, so the Ruspini layout survives every step.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fuzzdiag/errors.hpp"
#include "fuzzdiag/fuzzy.hpp"
#include "fuzzdiag/rulebook.hpp"

namespace fuzzdiag {

struct TunerConfig {
    double eta = 0.05;
    double max_total_disp = 0.25;
    double keep_order_margin = 0.1;

    void validate() const {
        if (!(eta >= 0.0 && eta < 1.0)) throw ConfigError("tuner eta must lie in [0, 1)");
        if (!(max_total_disp >= 0.0) || !std::isfinite(max_total_disp))
            throw ConfigError("tuner max_total_disp must be non-negative");
        if (!(keep_order_margin > 0.0) || !std::isfinite(keep_order_margin))
            throw ConfigError("tuner keep_order_margin must be positive");
    }
};

enum class Label { Normal, Anomalous };

/// A variable under tuning plus the peaks it started from.
class TunedVariable {
public:
    explicit TunedVariable(LinguisticVariable v) : variable_(std::move(v)), anchor_(variable_.peaks()) {}

    const LinguisticVariable& variable() const noexcept { return variable_; }
    const std::vector<double>& anchor() const noexcept { return anchor_; }

    std::vector<double> displacement() const {
        auto d = variable_.peaks();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] -= anchor_[i];
        return d;
    }

    void set_variable(LinguisticVariable v) { variable_ = std::move(v); }

private:
    LinguisticVariable variable_;
    std::vector<double> anchor_;
};

/// Index of the term with the highest membership at `x`; ties go to the
/// lower index.
inline std::size_t strongest_term(const LinguisticVariable& v, double x) {
    std::size_t best = 0;
    double best_m = -1.0;
    for (std::size_t t = 0; t < v.size(); ++t) {
        const double m = v.membership(t, x);
        if (m > best_m) {
            best_m = m;
            best = t;
        }
    }
    return best;
}

inline TunedVariable online_tune_step(TunedVariable tv, double x, ActionLevel decided, Label label,
                                      const TunerConfig& cfg) {
    if (label != Label::Normal || decided == ActionLevel::Ignore) return tv;
    if (!std::isfinite(x)) throw ValidationError("tuning sample is not finite");
    const auto& v = tv.variable();
    x = v.prepare(x);
    const std::size_t k = strongest_term(v, x);
    auto peaks = v.peaks();
    const double peak = peaks[k];
    const double step = cfg.eta * (x - peak);
    if (step == 0.0) return tv;

    double lo = std::max(v.domain_min(), tv.anchor()[k] - cfg.max_total_disp);
    double hi = std::min(v.domain_max(), tv.anchor()[k] + cfg.max_total_disp);
    if (k > 0) lo = std::max(lo, peaks[k - 1] + cfg.keep_order_margin);
    if (k + 1 < peaks.size()) hi = std::min(hi, peaks[k + 1] - cfg.keep_order_margin);
    if (v.circular()) hi = std::min(hi, std::nextafter(v.domain_max(), v.domain_min()));

    // Clip in the direction of travel only; a peak never moves backwards.
    double moved = peak + step;
    if (step > 0.0)
        moved = std::min(moved, std::max(hi, peak));
    else
        moved = std::max(moved, std::min(lo, peak));
    if (moved == peak) return tv;
    peaks[k] = moved;
    tv.set_variable(v.with_peaks(peaks));
    return tv;
}

inline LinguisticVariable online_tune_step(const LinguisticVariable& v, double x, ActionLevel decided,
                                           Label label, const TunerConfig& cfg) {
    return online_tune_step(TunedVariable(v), x, decided, label, cfg).variable();
}

struct TuneSample {
    double ratio = 0.0;
    double tod = 0.0;
};

struct TuneReport {
    std::vector<std::string> term_names;
    std::vector<double> displacement;
    std::size_t samples_seen = 0;
    std::size_t steps_applied = 0;
    std::size_t false_alerts_before = 0;
    std::size_t false_alerts_after = 0;
    std::size_t held_out_size = 0;
    std::size_t train_alerts_before = 0;  // alerts raised on the tuning samples themselves
    std::size_t train_alerts_after = 0;
    std::size_t kept_samples = 0;         // samples consumed by the kept checkpoint
    std::vector<std::string> warnings;
};

/// Action for a (ratio, time-of-day) pair under `rb`.
inline ActionLevel decide_action(const RuleBase& rb, const TuneSample& s) {
    const double in[2] = {s.ratio, s.tod};
    return action_from_severity(evaluate(rb, in).output);
}

/// Held-out samples (all normal) that would still raise an alert.
inline std::size_t count_false_alerts(const RuleBase& rb, std::span<const TuneSample> held_out) {
    std::size_t n = 0;
    for (const auto& s : held_out)
        if (decide_action(rb, s) != ActionLevel::Ignore) ++n;
    return n;
}

struct TuneResult {
    RuleBase rulebase;
    TuneReport report;
};

/// Runs online steps over `samples` in order, tuning variable 0 (intensity)
/// of `rb`. Every sample is treated as normal traffic.
///
/// The online rule can drift a peak into territory where it raises more
/// alerts than it removes, so the pass is checkpointed: the untouched input,
/// every `samples.size() / checkpoints` samples, and the end state are each
/// scored by their false alerts on `samples`. A checkpoint replaces the
/// kept one only when it beats it by more than the square root of the kept
/// count, so gains within counting noise leave the rule base alone.
/// `held_out` is only ever scored, never selected on.
inline TuneResult batch_tune(const RuleBase& rb, std::span<const TuneSample> samples,
                             const TunerConfig& cfg, std::span<const TuneSample> held_out) {
    constexpr std::size_t checkpoints = 20;
    cfg.validate();
    if (rb.variables().size() != 2) throw ArityError("tuning expects an (intensity, time) rule base");
    TunedVariable tv(rb.variables()[0]);
    RuleBase current = rb;

    TuneReport report;
    for (const auto& t : tv.variable().terms()) report.term_names.push_back(t.name);
    report.held_out_size = held_out.size();
    report.false_alerts_before = count_false_alerts(rb, held_out);
    if (samples.empty()) report.warnings.push_back("no tuning samples; rule base left unchanged");

    const std::size_t every = std::max<std::size_t>(1, samples.size() / checkpoints);
    report.train_alerts_before = count_false_alerts(rb, samples);
    report.train_alerts_after = report.train_alerts_before;
    RuleBase best = rb;
    TunedVariable best_tv = tv;
    bool dirty = false;
    auto checkpoint = [&] {
        if (!dirty) return;
        dirty = false;
        const auto n = count_false_alerts(current, samples);
        const double best_n = static_cast<double>(report.train_alerts_after);
        if (static_cast<double>(n) < best_n - std::sqrt(best_n)) {
            report.train_alerts_after = n;
            report.kept_samples = report.samples_seen;
            best = current;
            best_tv = tv;
        }
    };
    for (const auto& s : samples) {
        ++report.samples_seen;
        const auto decided = decide_action(current, s);
        auto next = online_tune_step(tv, s.ratio, decided, Label::Normal, cfg);
        if (!(next.variable() == tv.variable())) {
            ++report.steps_applied;
            tv = std::move(next);
            current = current.with_variable(0, tv.variable());
            dirty = true;
        }
        if (report.samples_seen % every == 0) checkpoint();
    }
    checkpoint();
    report.displacement = best_tv.displacement();
    report.false_alerts_after = count_false_alerts(best, held_out);
    return {std::move(best), std::move(report)};
}

}  // namespace fuzzdiag

#endif  // FUZZDIAG_TUNER_HPP
