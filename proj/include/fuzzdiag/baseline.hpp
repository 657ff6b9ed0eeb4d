#ifndef FUZZDIAG_BASELINE_HPP
#define FUZZDIAG_BASELINE_HPP

// Survey mode: per-module, per-time-slot traffic statistics, and the
// observed/baseline ratio fed to the fuzzy engine.
//
// Profile file grammar (version 1):
//
//   fuzzdiag-profile 1
//   profile <module> <slot_len> <weekly 0|1> <epsilon> <utc_offset> <slot count>
//   slot <index> <n> <mean> <m2>        (one line per slot, in order)
//   end
//   (more profile blocks)
//
// A block is accepted only when all of its slot lines and its `end` are
// present.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fuzzdiag/errors.hpp"
#include "fuzzdiag/ingest.hpp"
#include "fuzzdiag/rulebook.hpp"
#include "fuzzdiag/textio.hpp"

namespace fuzzdiag {

/// Welford accumulator for one time slot.
struct SlotStats {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }

    /// Sample variance; 0 for fewer than two observations.
    double variance() const { return n >= 2 ? std::max(0.0, m2 / static_cast<double>(n - 1)) : 0.0; }
    bool low_confidence() const { return n == 1; }

    friend bool operator==(const SlotStats&, const SlotStats&) = default;
};

struct NormalizedInput {
    double ratio = 0.0;
    double zscore = 0.0;
    bool low_confidence = false;
};

class BaselineProfile {
public:
    static constexpr double default_slot_len = 1800.0;
    static constexpr double default_epsilon = 1.0;

    explicit BaselineProfile(ModuleKind module, double slot_len = default_slot_len,
                             bool weekly = false, double epsilon = default_epsilon,
                             double utc_offset = 0.0)
        : module_(module), slot_len_(slot_len), weekly_(weekly), epsilon_(epsilon), utc_offset_(utc_offset) {
        if (!(slot_len > 0.0) || std::floor(slot_len) != slot_len ||
            std::fmod(86400.0, slot_len) != 0.0)
            throw ValidationError("slot length must be a whole number of seconds dividing 86400");
        if (!(epsilon > 0.0) || !std::isfinite(epsilon))
            throw ValidationError("epsilon must be positive");
        if (!std::isfinite(utc_offset)) throw ValidationError("utc offset must be finite");
        slots_.resize(slots_per_day() * (weekly ? 7 : 1));
    }

    ModuleKind module() const noexcept { return module_; }
    double slot_len() const noexcept { return slot_len_; }
    bool weekly() const noexcept { return weekly_; }
    double epsilon() const noexcept { return epsilon_; }
    double utc_offset() const noexcept { return utc_offset_; }
    std::size_t slots_per_day() const noexcept { return static_cast<std::size_t>(86400.0 / slot_len_); }
    const std::vector<SlotStats>& slots() const noexcept { return slots_; }

    std::size_t slot_index(double ts) const {
        auto s = static_cast<std::size_t>(seconds_of_day(ts, utc_offset_) / slot_len_);
        s = std::min(s, slots_per_day() - 1);
        if (weekly_) s += slots_per_day() * static_cast<std::size_t>(day_of_week(ts, utc_offset_));
        return s;
    }

    const SlotStats& slot_for(double ts) const { return slots_[slot_index(ts)]; }

    std::size_t covered_slots() const {
        return static_cast<std::size_t>(
            std::count_if(slots_.begin(), slots_.end(), [](const SlotStats& s) { return s.n > 0; }));
    }

    void survey_update(const FeatureSample& sample) {
        if (sample.module != module_)
            throw ValidationError(std::string("sample for ") + to_string(sample.module) +
                                  " given to the " + to_string(module_) + " profile");
        if (!std::isfinite(sample.value)) throw ValidationError("sample value is not finite");
        slots_[slot_index(sample.ts)].add(sample.value);
    }

    /// Ratio against the slot mean (floored at epsilon). Throws ColdStart
    /// for a slot nothing has been surveyed into.
    NormalizedInput normalize(const FeatureSample& sample) const {
        if (sample.module != module_)
            throw ValidationError(std::string("sample for ") + to_string(sample.module) +
                                  " given to the " + to_string(module_) + " profile");
        const auto& s = slot_for(sample.ts);
        if (s.n == 0)
            throw ColdStart(std::string(to_string(module_)) + " slot " +
                            std::to_string(slot_index(sample.ts)) + " has no survey data");
        NormalizedInput out;
        out.ratio = sample.value / std::max(s.mean, epsilon_);
        out.zscore = (sample.value - s.mean) / std::max(std::sqrt(s.variance()), epsilon_);
        out.low_confidence = s.low_confidence();
        return out;
    }

    friend bool operator==(const BaselineProfile&, const BaselineProfile&) = default;

private:
    friend std::vector<BaselineProfile> read_profiles(std::istream& is);

    ModuleKind module_;
    double slot_len_;
    bool weekly_;
    double epsilon_;
    double utc_offset_;
    std::vector<SlotStats> slots_;
};

inline BaselineProfile survey_update(BaselineProfile profile, const FeatureSample& sample) {
    profile.survey_update(sample);
    return profile;
}

inline NormalizedInput normalize(const BaselineProfile& profile, const FeatureSample& sample) {
    return profile.normalize(sample);
}

inline void write_profiles(std::ostream& os, std::span<const BaselineProfile> profiles) {
    using text::format_double;
    os << "fuzzdiag-profile 1\n";
    for (const auto& p : profiles) {
        os << "profile " << to_string(p.module()) << ' ' << format_double(p.slot_len()) << ' '
           << (p.weekly() ? 1 : 0) << ' ' << format_double(p.epsilon()) << ' '
           << format_double(p.utc_offset()) << ' ' << p.slots().size() << "\n";
        for (std::size_t i = 0; i < p.slots().size(); ++i) {
            const auto& s = p.slots()[i];
            os << "slot " << i << ' ' << s.n << ' ' << format_double(s.mean) << ' '
               << format_double(s.m2) << "\n";
        }
        os << "end\n";
    }
}

inline std::vector<BaselineProfile> read_profiles(std::istream& is) {
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    std::vector<BaselineProfile> out;
    std::optional<BaselineProfile> open;
    std::size_t expected_slot = 0;

    while (std::getline(is, line)) {
        ++lineno;
        const auto tok = text::tokens(line);
        if (tok.empty()) continue;
        if (!header) {
            if (tok.size() != 2 || tok[0] != "fuzzdiag-profile")
                throw ParseError(lineno, "expected 'fuzzdiag-profile 1' header");
            if (tok[1] != "1")
                throw ParseError(lineno, "unsupported profile version " + std::string(tok[1]));
            header = true;
            continue;
        }
        if (!open) {
            if (tok[0] != "profile" || tok.size() != 7)
                throw ParseError(lineno, "expected: profile <module> <slot_len> <weekly> <epsilon> <utc_offset> <slots>");
            auto kind = module_from_string(tok[1]);
            if (!kind) throw ParseError(lineno, "unknown module '" + std::string(tok[1]) + "'");
            const auto weekly = text::parse_uint(tok[3], lineno);
            if (weekly > 1) throw ParseError(lineno, "weekly flag must be 0 or 1");
            try {
                open.emplace(*kind, text::parse_double(tok[2], lineno), weekly == 1,
                             text::parse_double(tok[4], lineno), text::parse_double(tok[5], lineno));
            } catch (const ValidationError& e) {
                throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
            }
            if (text::parse_uint(tok[6], lineno) != open->slots_.size())
                throw ValidationError("line " + std::to_string(lineno) +
                                      ": slot count does not match slot length");
            for (const auto& p : out)
                if (p.module() == *kind)
                    throw ValidationError("line " + std::to_string(lineno) + ": duplicate profile for " +
                                          std::string(tok[1]));
            expected_slot = 0;
            continue;
        }
        if (tok[0] == "end" && tok.size() == 1) {
            if (expected_slot != open->slots_.size())
                throw ParseError(lineno, "profile block ended after " + std::to_string(expected_slot) +
                                             " of " + std::to_string(open->slots_.size()) + " slots");
            out.push_back(std::move(*open));
            open.reset();
            continue;
        }
        if (tok[0] != "slot" || tok.size() != 5) throw ParseError(lineno, "expected: slot <index> <n> <mean> <m2>");
        if (expected_slot >= open->slots_.size()) throw ParseError(lineno, "too many slot lines");
        if (text::parse_uint(tok[1], lineno) != expected_slot)
            throw ParseError(lineno, "slot lines out of order");
        SlotStats s;
        s.n = text::parse_uint(tok[2], lineno);
        s.mean = text::parse_double(tok[3], lineno);
        s.m2 = text::parse_double(tok[4], lineno);
        if (!std::isfinite(s.mean) || !std::isfinite(s.m2) || s.m2 < 0.0 || (s.n == 0 && (s.mean != 0.0 || s.m2 != 0.0)))
            throw ValidationError("line " + std::to_string(lineno) + ": inconsistent slot statistics");
        open->slots_[expected_slot++] = s;
    }
    if (!header) throw ParseError(lineno, "empty profile file");
    if (open) throw ParseError(lineno, "truncated profile: missing slots or 'end'");
    return out;
}

inline void save_profiles(std::span<const BaselineProfile> profiles, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write profile " + path);
    write_profiles(os, profiles);
    if (!os.flush()) throw Error("write failed for profile " + path);
}

inline std::vector<BaselineProfile> load_profiles(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot read profile " + path);
    return read_profiles(is);
}

inline void save_profile(const BaselineProfile& profile, const std::string& path) {
    save_profiles(std::span<const BaselineProfile>(&profile, 1), path);
}

inline BaselineProfile load_profile(const std::string& path) {
    auto all = load_profiles(path);
    if (all.size() != 1)
        throw ValidationError("expected exactly one profile in " + path + ", found " + std::to_string(all.size()));
    return std::move(all.front());
}

/// One profile per module, indexed by ModuleKind.
struct ProfileSet {
    std::vector<BaselineProfile> profiles;

    static ProfileSet fresh(double slot_len = BaselineProfile::default_slot_len, bool weekly = false,
                            double epsilon = BaselineProfile::default_epsilon, double utc_offset = 0.0) {
        ProfileSet set;
        for (auto k : all_modules) set.profiles.emplace_back(k, slot_len, weekly, epsilon, utc_offset);
        return set;
    }

    static ProfileSet from(std::vector<BaselineProfile> loaded) {
        ProfileSet set;
        for (auto k : all_modules) {
            auto it = std::find_if(loaded.begin(), loaded.end(),
                                   [k](const BaselineProfile& p) { return p.module() == k; });
            if (it == loaded.end())
                throw ValidationError(std::string("profile file lacks module ") + to_string(k));
            set.profiles.push_back(std::move(*it));
        }
        return set;
    }

    BaselineProfile& operator[](ModuleKind k) { return profiles[index_of(k)]; }
    const BaselineProfile& operator[](ModuleKind k) const { return profiles[index_of(k)]; }

    friend bool operator==(const ProfileSet&, const ProfileSet&) = default;
};

}  // namespace fuzzdiag

#endif  // FUZZDIAG_BASELINE_HPP
