#ifndef FUZZDIAG_SIMGEN_HPP
#define FUZZDIAG_SIMGEN_HPP

// Deterministic synthetic flow-record streams with injected anomalies.
//
// Traffic is generated one minute at a time. Each minute draws an IP and an
// IPX record count from the hourly profile times a log-normal noise factor
// (mean one, sigma = noise), rounds stochastically, and spreads records
// uniformly over the minute at millisecond resolution. Record sizes are
// normal around the profile mean with relative spread size_jitter.
//
// Only std::mt19937_64 raw output is used (no std distributions), so a seed
// yields the same stream on every standard library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fuzzdiag/errors.hpp"
#include "fuzzdiag/ingest.hpp"

namespace fuzzdiag {

enum class AnomalyKind { FlashCrowd, DeviceOutage, RouterFailure, NicFailureIpx };

inline const char* to_string(AnomalyKind k) noexcept {
    switch (k) {
        case AnomalyKind::FlashCrowd: return "FlashCrowd";
        case AnomalyKind::DeviceOutage: return "DeviceOutage";
        case AnomalyKind::RouterFailure: return "RouterFailure";
        case AnomalyKind::NicFailureIpx: return "NicFailureIpx";
    }
    return "?";
}

inline std::optional<AnomalyKind> anomaly_from_string(std::string_view s) {
    for (auto k : {AnomalyKind::FlashCrowd, AnomalyKind::DeviceOutage, AnomalyKind::RouterFailure,
                   AnomalyKind::NicFailureIpx})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

/// One injected event. `start` is an offset in seconds from the scenario
/// start. `magnitude` is the traffic multiplier for FlashCrowd and the
/// surviving fraction for RouterFailure (IP) and NicFailureIpx (IPX);
/// DeviceOutage drops everything and ignores it.
struct Anomaly {
    AnomalyKind kind = AnomalyKind::FlashCrowd;
    double start = 0.0;
    double duration = 0.0;
    double magnitude = 1.0;

    bool covers(double offset) const { return offset >= start && offset < start + duration; }
};

/// Hourly mean record rates (records per minute, UTC hour) and sizes.
struct DiurnalProfile {
    std::array<double, 24> ip_rate{150, 150, 150, 150, 150, 150, 200, 260, 330, 400, 400, 400,
                                   380, 400, 400, 400, 400, 350, 300, 260, 220, 190, 170, 160};
    std::array<double, 24> ipx_rate{60, 60, 60, 60, 60, 60, 60, 60, 60, 60, 60, 60,
                                    60, 60, 60, 60, 60, 60, 60, 60, 60, 60, 60, 60};
    double ip_mean_size = 12000.0;
    double ipx_mean_size = 300.0;
    double size_jitter = 0.1;
    double noise = 0.02;
};

struct ScenarioSpec {
    std::string name;
    double start = 1699920000.0;  // 2023-11-14 00:00 UTC
    double duration = 86400.0;
    DiurnalProfile base;
    std::vector<Anomaly> anomalies;

    void validate() const {
        const std::string where = "scenario " + (name.empty() ? std::string("<unnamed>") : name);
        if (!std::isfinite(start)) throw ValidationError(where + ": start must be finite");
        if (!(duration > 0.0) || std::fmod(duration, 60.0) != 0.0)
            throw ValidationError(where + ": duration must be a positive multiple of 60 s");
        if (!(base.noise >= 0.0 && base.noise < 1.0))
            throw ValidationError(where + ": noise fraction must lie in [0, 1)");
        if (!(base.size_jitter >= 0.0 && base.size_jitter < 1.0))
            throw ValidationError(where + ": size jitter must lie in [0, 1)");
        if (!(base.ip_mean_size >= 1.0) || !(base.ipx_mean_size >= 1.0))
            throw ValidationError(where + ": mean record sizes must be at least one byte");
        for (int h = 0; h < 24; ++h)
            if (!(base.ip_rate[h] >= 0.0) || !(base.ipx_rate[h] >= 0.0) || !std::isfinite(base.ip_rate[h]) ||
                !std::isfinite(base.ipx_rate[h]))
                throw ValidationError(where + ": hourly rates must be finite and non-negative");
        for (const auto& a : anomalies) {
            if (!(a.duration > 0.0) || !(a.start >= 0.0) || a.start + a.duration > duration)
                throw ValidationError(where + ": " + to_string(a.kind) + " window lies outside the scenario");
            const bool fraction = a.kind == AnomalyKind::RouterFailure || a.kind == AnomalyKind::NicFailureIpx;
            if (fraction && !(a.magnitude >= 0.0 && a.magnitude <= 1.0))
                throw ValidationError(where + ": " + to_string(a.kind) + " magnitude must lie in [0, 1]");
            if (a.kind == AnomalyKind::FlashCrowd && !(a.magnitude > 0.0 && std::isfinite(a.magnitude)))
                throw ValidationError(where + ": FlashCrowd magnitude must be positive");
        }
    }
};

class Generator {
public:
    Generator(ScenarioSpec spec, std::uint64_t seed) : spec_(std::move(spec)), rng_(seed) {
        spec_.validate();
        start_ms_ = std::llround(spec_.start * 1000.0);
        minutes_ = static_cast<std::int64_t>(spec_.duration / 60.0);
    }

    std::optional<FlowRecord> next() {
        while (pos_ == minute_.size()) {
            if (minute_index_ >= minutes_) return std::nullopt;
            fill_minute(minute_index_++);
        }
        return minute_[pos_++];
    }

    const ScenarioSpec& spec() const noexcept { return spec_; }

private:
    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    double gaussian() {
        // Box-Muller; u1 in (0, 1]
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double lognormal_factor(double sigma) {
        if (sigma == 0.0) return 1.0;
        return std::exp(sigma * gaussian() - 0.5 * sigma * sigma);
    }

    std::uint64_t stochastic_round(double x) {
        const double fl = std::floor(x);
        return static_cast<std::uint64_t>(fl) + (uniform() < x - fl ? 1 : 0);
    }

    void fill_minute(std::int64_t m) {
        minute_.clear();
        pos_ = 0;
        const double offset = static_cast<double>(m) * 60.0;
        const std::int64_t tick_ms = start_ms_ + m * 60000;
        const auto hour = static_cast<std::size_t>(
            time_of_day(static_cast<double>(tick_ms) / 1000.0));
        const auto& b = spec_.base;

        double ip = b.ip_rate[hour] * lognormal_factor(b.noise);
        double ipx = b.ipx_rate[hour] * lognormal_factor(b.noise);
        double ip_size = b.ip_mean_size;
        double ipx_size = b.ipx_mean_size;
        for (const auto& a : spec_.anomalies) {
            if (!a.covers(offset)) continue;
            switch (a.kind) {
                case AnomalyKind::FlashCrowd: {
                    // rate and record size each take the square root, so volume scales by magnitude
                    const double s = std::sqrt(a.magnitude);
                    ip *= s;
                    ipx *= s;
                    ip_size *= s;
                    ipx_size *= s;
                    break;
                }
                case AnomalyKind::DeviceOutage:
                    ip = 0.0;
                    ipx = 0.0;
                    break;
                case AnomalyKind::RouterFailure: ip *= a.magnitude; break;
                case AnomalyKind::NicFailureIpx: ipx *= a.magnitude; break;
            }
        }
        const auto n_ip = stochastic_round(ip);
        const auto n_ipx = stochastic_round(ipx);

        struct Draft {
            std::int64_t ms;
            FlowRecord rec;
        };
        std::vector<Draft> drafts;
        drafts.reserve(n_ip + n_ipx);
        auto emit = [&](Protocol proto, double mean_size) {
            Draft d;
            d.ms = tick_ms + static_cast<std::int64_t>(uniform() * 60000.0);
            const double size = mean_size * (1.0 + b.size_jitter * gaussian());
            d.rec.proto = proto;
            d.rec.bytes = static_cast<std::uint64_t>(std::max(1.0, std::round(size)));
            drafts.push_back(d);
        };
        for (std::uint64_t i = 0; i < n_ip; ++i) emit(Protocol::IP, ip_size);
        for (std::uint64_t i = 0; i < n_ipx; ++i) emit(Protocol::IPX, ipx_size);
        std::stable_sort(drafts.begin(), drafts.end(),
                         [](const Draft& x, const Draft& y) { return x.ms < y.ms; });
        for (auto& d : drafts) {
            d.rec.ts = static_cast<double>(d.ms) / 1000.0;
            minute_.push_back(d.rec);
        }
    }

    ScenarioSpec spec_;
    std::mt19937_64 rng_;
    std::int64_t start_ms_ = 0;
    std::int64_t minutes_ = 0;
    std::int64_t minute_index_ = 0;
    std::vector<FlowRecord> minute_;
    std::size_t pos_ = 0;
};

inline std::vector<FlowRecord> generate(const ScenarioSpec& spec, std::uint64_t seed) {
    Generator g(spec, seed);
    std::vector<FlowRecord> out;
    while (auto r = g.next()) out.push_back(*r);
    return out;
}

/// Shipped scenarios: a quiet week plus one day per anomaly kind. The
/// one-day scenarios start the day after the week ends.
inline std::map<std::string, ScenarioSpec> reference_scenarios() {
    constexpr double week_start = 1699920000.0;
    constexpr double day = 86400.0;
    constexpr double hour = 3600.0;
    std::map<std::string, ScenarioSpec> out;

    ScenarioSpec week;
    week.name = "baseline_week";
    week.start = week_start;
    week.duration = 7 * day;
    out.emplace(week.name, week);

    auto one_day = [&](std::string name, Anomaly a) {
        ScenarioSpec s;
        s.name = std::move(name);
        s.start = week_start + 7 * day;
        s.duration = day;
        s.anomalies.push_back(a);
        out.emplace(s.name, s);
    };
    one_day("flash_crowd", {AnomalyKind::FlashCrowd, 13 * hour, 4 * hour, 3.0});
    one_day("device_outage", {AnomalyKind::DeviceOutage, 15 * hour, 20 * 60.0, 0.0});
    one_day("router_failure", {AnomalyKind::RouterFailure, 11 * hour, 15 * 60.0, 0.02});
    one_day("nic_failure_ipx", {AnomalyKind::NicFailureIpx, 10.5 * hour, 3 * hour, 0.1});
    return out;
}

// ---------------------------------------------------------------------------
// Scenario files (JSON). Every field except "anomalies" entries is optional
// and falls back to the defaults above:
//   {"name": "...", "start": <epoch>, "duration": <s>,
//    "base": {"ip_rate": [24 numbers], "ipx_rate": [24 numbers],
//             "ip_mean_size": n, "ipx_mean_size": n, "size_jitter": f, "noise": f},
//    "anomalies": [{"kind": "FlashCrowd", "start": <offset s>, "duration": <s>, "magnitude": m}]}

inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("scenario must be a JSON object");
    ScenarioSpec s;
    try {
        s.name = j.value("name", std::string("custom"));
        s.start = j.value("start", s.start);
        s.duration = j.value("duration", s.duration);
        if (auto b = j.find("base"); b != j.end()) {
            auto rates = [&](const char* key, std::array<double, 24>& dst) {
                if (auto r = b->find(key); r != b->end()) {
                    if (!r->is_array() || r->size() != 24)
                        throw ValidationError(std::string("base.") + key + " needs 24 hourly values");
                    for (std::size_t h = 0; h < 24; ++h) dst[h] = (*r)[h].get<double>();
                }
            };
            rates("ip_rate", s.base.ip_rate);
            rates("ipx_rate", s.base.ipx_rate);
            s.base.ip_mean_size = b->value("ip_mean_size", s.base.ip_mean_size);
            s.base.ipx_mean_size = b->value("ipx_mean_size", s.base.ipx_mean_size);
            s.base.size_jitter = b->value("size_jitter", s.base.size_jitter);
            s.base.noise = b->value("noise", s.base.noise);
        }
        if (auto as = j.find("anomalies"); as != j.end()) {
            if (!as->is_array()) throw ValidationError("anomalies must be a list");
            for (const auto& a : *as) {
                auto kind = anomaly_from_string(a.at("kind").get<std::string>());
                if (!kind) throw ValidationError("unknown anomaly kind " + a.at("kind").dump());
                s.anomalies.push_back({*kind, a.at("start").get<double>(), a.at("duration").get<double>(),
                                       a.value("magnitude", 1.0)});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("scenario: ") + e.what());
    }
    s.validate();
    return s;
}

inline ScenarioSpec load_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read scenario " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(0, path + ": " + e.what());
    }
    return scenario_from_json(j);
}

}  // namespace fuzzdiag

#endif  // FUZZDIAG_SIMGEN_HPP
