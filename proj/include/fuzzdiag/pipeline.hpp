#ifndef FUZZDIAG_PIPELINE_HPP
#define FUZZDIAG_PIPELINE_HPP

// Survey, detection and tuning drivers: record stream -> buckets ->
// features -> baseline ratio -> fuzzy severity -> alert.
//
// A record source is anything with `std::optional<FlowRecord> next()`
// (RecordReader, Generator, VectorSource).

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fuzzdiag/alerting.hpp"
#include "fuzzdiag/baseline.hpp"
#include "fuzzdiag/config.hpp"
#include "fuzzdiag/errors.hpp"
#include "fuzzdiag/fuzzy.hpp"
#include "fuzzdiag/ingest.hpp"
#include "fuzzdiag/rulebook.hpp"
#include "fuzzdiag/tuner.hpp"

namespace fuzzdiag {

class VectorSource {
public:
    explicit VectorSource(std::span<const FlowRecord> records) : records_(records) {}
    std::optional<FlowRecord> next() {
        if (pos_ == records_.size()) return std::nullopt;
        return records_[pos_++];
    }

private:
    std::span<const FlowRecord> records_;
    std::size_t pos_ = 0;
};

struct StreamStats {
    std::uint64_t records = 0;
    std::uint64_t rejected = 0;
    std::uint64_t buckets = 0;
};

/// Pulls every record from `src`, buckets it, and calls `on_bucket` for
/// each completed bucket in order.
template <class Source, class OnBucket>
StreamStats for_each_bucket(Source& src, double window_len, OnBucket&& on_bucket) {
    Bucketizer bz(window_len);
    std::vector<Bucket> ready;
    StreamStats st;
    auto drain = [&] {
        for (const auto& b : ready) {
            ++st.buckets;
            on_bucket(b);
        }
        ready.clear();
    };
    while (auto r = src.next()) {
        ++st.records;
        bz.push(*r, ready);
        drain();
    }
    bz.finish(ready);
    drain();
    st.rejected = bz.rejected();
    return st;
}

/// Rule bases indexed by ModuleKind: file overrides where configured,
/// built-in tables elsewhere.
inline std::vector<RuleBase> load_rulebases(const Config& cfg) {
    std::vector<RuleBase> out;
    for (auto k : all_modules) {
        const auto& path = cfg.rulebase_paths[index_of(k)];
        out.push_back(path.empty() ? build_rulebase(k, cfg.tnorm) : load_rulebase(path));
    }
    return out;
}

template <class Source>
StreamStats run_survey(Source& src, const Config& cfg, ProfileSet& profiles) {
    return for_each_bucket(src, cfg.window_len, [&](const Bucket& b) {
        for (const auto& f : features(b, cfg.link_capacity_bps)) profiles[f.module].survey_update(f);
    });
}

/// One fuzzy decision, before rate limiting.
struct Decision {
    ModuleKind module = ModuleKind::IpCount;
    double ts = 0.0;
    double value = 0.0;
    double ratio = 0.0;
    double tod = 0.0;
    double severity = 0.0;
    ActionLevel action = ActionLevel::Ignore;
    bool low_confidence = false;
    std::optional<RateDecision> rate;  // empty for Ignore
};

struct DetectSummary {
    StreamStats stream;
    std::array<std::array<std::uint64_t, 4>, 4> decisions{};   // [module][action]
    std::array<std::array<std::uint64_t, 4>, 4> dispatched{};  // [module][action]
    std::array<std::array<std::uint64_t, 4>, 4> suppressed{};  // [module][action]
    std::array<std::array<std::uint64_t, 4>, 4> pending{};     // [module][action]
    std::uint64_t cold_start = 0;
    std::uint64_t low_confidence = 0;
    std::uint64_t evaluated = 0;
};

/// Ready-to-alert mode.
class Detector {
public:
    Detector(const Config& cfg, ProfileSet profiles, std::vector<RuleBase> rulebases, Dispatcher& dispatcher)
        : cfg_(cfg),
          profiles_(std::move(profiles)),
          rulebases_(std::move(rulebases)),
          dispatcher_(dispatcher),
          suppression_(cfg.cooldown) {
        check_capacity(cfg.link_capacity_bps);
        if (rulebases_.size() != all_modules.size()) throw ConfigError("need one rule base per module");
        for (const auto& rb : rulebases_)
            if (rb.variables().size() != 2) throw ConfigError("rule bases must take (intensity, time) inputs");
    }

    void on_decision(std::function<void(const Decision&)> cb) { observer_ = std::move(cb); }

    void process(const Bucket& b) {
        const double tod = time_of_day(b.window_start, cfg_.utc_offset);
        for (const auto& f : features(b, cfg_.link_capacity_bps)) {
            const auto m = index_of(f.module);
            auto& profile = profiles_[f.module];
            NormalizedInput in;
            try {
                in = profile.normalize(f);
            } catch (const ColdStart&) {
                ++summary_.cold_start;
                if (cfg_.survey_in_detect) profile.survey_update(f);
                continue;
            }
            Decision d;
            d.module = f.module;
            d.ts = f.ts;
            d.value = f.value;
            d.ratio = in.ratio;
            d.tod = tod;
            d.low_confidence = in.low_confidence;
            const double x[2] = {in.ratio, tod};
            d.severity = evaluate(rulebases_[m], x).output;
            d.action = action_from_severity(d.severity);
            ++summary_.evaluated;
            if (in.low_confidence) ++summary_.low_confidence;
            ++summary_.decisions[m][code(d.action)];
            if (auto ev = decide(f.module, f.ts, d.severity, in.ratio, tod)) {
                d.rate = suppression_.rate_limit(*ev);
                if (*d.rate == RateDecision::Dispatch) {
                    ++summary_.dispatched[m][code(ev->action)];
                    dispatcher_.dispatch(*ev);
                } else {
                    ++summary_.suppressed[m][code(ev->action)];
                }
            }
            if (cfg_.survey_in_detect) profile.survey_update(f);
            if (observer_) observer_(d);
        }
    }

    template <class Source>
    DetectSummary run(Source& src) {
        summary_.stream = for_each_bucket(src, cfg_.window_len, [&](const Bucket& b) { process(b); });
        for (auto k : all_modules)
            for (int a = 1; a <= 3; ++a)
                summary_.pending[index_of(k)][a] = suppression_.pending(k, static_cast<ActionLevel>(a));
        return summary_;
    }

    const ProfileSet& profiles() const noexcept { return profiles_; }
    const SuppressionState& suppression() const noexcept { return suppression_; }

private:
    const Config& cfg_;
    ProfileSet profiles_;
    std::vector<RuleBase> rulebases_;
    Dispatcher& dispatcher_;
    SuppressionState suppression_;
    std::function<void(const Decision&)> observer_;
    DetectSummary summary_;
};

/// Normalized (ratio, time-of-day) samples per module for tuning.
struct TuneSamples {
    std::array<std::vector<TuneSample>, 4> per_module;
    std::uint64_t cold_start = 0;
    StreamStats stream;
};

template <class Source>
TuneSamples collect_tune_samples(Source& src, const Config& cfg, const ProfileSet& profiles) {
    TuneSamples out;
    out.stream = for_each_bucket(src, cfg.window_len, [&](const Bucket& b) {
        const double tod = time_of_day(b.window_start, cfg.utc_offset);
        for (const auto& f : features(b, cfg.link_capacity_bps)) {
            try {
                out.per_module[index_of(f.module)].push_back({profiles[f.module].normalize(f).ratio, tod});
            } catch (const ColdStart&) {
                ++out.cold_start;
            }
        }
    });
    return out;
}

}  // namespace fuzzdiag

#endif  // FUZZDIAG_PIPELINE_HPP
