#ifndef FUZZDIAG_INGEST_HPP
#define FUZZDIAG_INGEST_HPP

// Flow-record parsing, fixed-window bucketing and the four feature streams.
//
// Flow-record line format, version 1: one JSON object per line,
//   {"ts":<seconds since epoch>,"proto":"<IP|IPX|...>","bytes":<integer >= 0>}
// Unknown protocol names map to OTHER; unknown keys are ignored; blank
// lines are skipped by the readers.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fuzzdiag/errors.hpp"
#include "fuzzdiag/fuzzy.hpp"
#include "fuzzdiag/rulebook.hpp"
#include "fuzzdiag/textio.hpp"

namespace fuzzdiag {

enum class Protocol : std::uint8_t { IP, IPX, OTHER };

inline const char* to_string(Protocol p) noexcept {
    switch (p) {
        case Protocol::IP: return "IP";
        case Protocol::IPX: return "IPX";
        case Protocol::OTHER: return "OTHER";
    }
    return "OTHER";
}

inline Protocol protocol_from_string(std::string_view s) noexcept {
    if (s == "IP") return Protocol::IP;
    if (s == "IPX") return Protocol::IPX;
    return Protocol::OTHER;
}

struct FlowRecord {
    double ts = 0.0;
    Protocol proto = Protocol::OTHER;
    std::uint64_t bytes = 0;

    friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

inline FlowRecord parse_record(std::string_view line, std::size_t lineno = 0) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(lineno, std::string("malformed flow record: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(lineno, "flow record must be a JSON object");
    auto ts = j.find("ts");
    auto proto = j.find("proto");
    auto bytes = j.find("bytes");
    if (ts == j.end() || !ts->is_number()) throw ParseError(lineno, "flow record needs numeric 'ts'");
    if (proto == j.end() || !proto->is_string())
        throw ParseError(lineno, "flow record needs string 'proto'");
    if (bytes == j.end() || !bytes->is_number_integer())
        throw ParseError(lineno, "flow record needs integer 'bytes'");
    FlowRecord r;
    r.ts = ts->get<double>();
    if (!std::isfinite(r.ts)) throw ValidationError("line " + std::to_string(lineno) + ": ts is not finite");
    if (bytes->is_number_unsigned()) {
        r.bytes = bytes->get<std::uint64_t>();
    } else {
        const auto b = bytes->get<std::int64_t>();
        if (b < 0) throw ValidationError("line " + std::to_string(lineno) + ": negative byte count");
        r.bytes = static_cast<std::uint64_t>(b);
    }
    r.proto = protocol_from_string(proto->get_ref<const std::string&>());
    return r;
}

inline std::string format_record(const FlowRecord& r) {
    std::string s = "{\"ts\":";
    s += text::format_double(r.ts);
    s += ",\"proto\":\"";
    s += to_string(r.proto);
    s += "\",\"bytes\":";
    s += std::to_string(r.bytes);
    s += '}';
    return s;
}

/// Reads flow records line by line. Malformed lines propagate as errors
/// carrying their line number.
class RecordReader {
public:
    explicit RecordReader(std::istream& is) : is_(is) {}

    std::optional<FlowRecord> next() {
        while (std::getline(is_, line_)) {
            ++lineno_;
            if (text::split(line_).empty()) continue;
            return parse_record(line_, lineno_);
        }
        return std::nullopt;
    }

    std::size_t line() const noexcept { return lineno_; }

private:
    std::istream& is_;
    std::string line_;
    std::size_t lineno_ = 0;
};

struct Bucket {
    double window_start = 0.0;
    double window_len = 60.0;
    std::uint64_t ip_count = 0;
    std::uint64_t ipx_count = 0;
    std::uint64_t total_count = 0;
    std::uint64_t total_bytes = 0;

    friend bool operator==(const Bucket&, const Bucket&) = default;
};

/// Streaming half-open window aggregation.
///
/// The two newest windows stay open, so a record may arrive up to one window
/// late. Anything older than that lands in an already emitted bucket and is
/// rejected and counted. Windows with no records between the first and last
/// record are emitted as zero buckets.
class Bucketizer {
public:
    explicit Bucketizer(double window_len = 60.0, double origin = 0.0)
        : len_(window_len), origin_(origin) {
        if (!(window_len > 0.0) || !std::isfinite(window_len))
            throw ConfigError("window length must be positive");
        if (!std::isfinite(origin)) throw ConfigError("bucket origin must be finite");
    }

    /// Adds a record; completed buckets are appended to `out`. Returns false
    /// if the record was rejected as too old.
    bool push(const FlowRecord& r, std::vector<Bucket>& out) {
        const auto k = static_cast<std::int64_t>(std::floor((r.ts - origin_) / len_));
        if (open_.empty() && !started_) {
            started_ = true;
            next_ = k;
            open_.push_back(make(next_++));
        } else if (k < next_ - static_cast<std::int64_t>(open_.size())) {
            ++rejected_;
            return false;
        } else if (k >= next_) {
            advance(k, out);
        }
        const auto first = next_ - static_cast<std::int64_t>(open_.size());
        auto& b = open_[static_cast<std::size_t>(k - first)];
        ++b.total_count;
        b.total_bytes += r.bytes;
        if (r.proto == Protocol::IP) ++b.ip_count;
        if (r.proto == Protocol::IPX) ++b.ipx_count;
        return true;
    }

    /// Emits every still-open bucket.
    void finish(std::vector<Bucket>& out) {
        for (auto& b : open_) out.push_back(b);
        open_.clear();
    }

    std::uint64_t rejected() const noexcept { return rejected_; }
    double window_len() const noexcept { return len_; }

private:
    Bucket make(std::int64_t k) const {
        Bucket b;
        b.window_start = origin_ + static_cast<double>(k) * len_;
        b.window_len = len_;
        return b;
    }

    // Keeps windows k-1 and k open; everything older is emitted, with zero
    // buckets for windows nothing arrived in.
    void advance(std::int64_t k, std::vector<Bucket>& out) {
        auto first = next_ - static_cast<std::int64_t>(open_.size());
        while (!open_.empty() && first < k - 1) {
            out.push_back(open_.front());
            open_.pop_front();
            ++first;
        }
        for (; next_ < k - 1; ++next_) out.push_back(make(next_));
        for (; next_ <= k; ++next_) open_.push_back(make(next_));
    }

    double len_;
    double origin_;
    std::deque<Bucket> open_;
    std::int64_t next_ = 0;
    bool started_ = false;
    std::uint64_t rejected_ = 0;
};

/// Batch form of Bucketizer: every bucket for a finite, ordered stream.
inline std::vector<Bucket> bucketize(const std::vector<FlowRecord>& records, double window_len,
                                     double origin = 0.0, std::uint64_t* rejected = nullptr) {
    Bucketizer bz(window_len, origin);
    std::vector<Bucket> out;
    for (const auto& r : records) bz.push(r, out);
    bz.finish(out);
    if (rejected) *rejected = bz.rejected();
    return out;
}

struct FeatureSample {
    ModuleKind module = ModuleKind::IpCount;
    double ts = 0.0;
    double value = 0.0;
};

inline void check_capacity(double link_capacity_bps) {
    if (!(link_capacity_bps > 0.0) || !std::isfinite(link_capacity_bps))
        throw ConfigError("link capacity must be a positive number of bits per second");
}

/// Feature values for one bucket, indexed by ModuleKind.
inline std::array<FeatureSample, 4> features(const Bucket& b, double link_capacity_bps) {
    check_capacity(link_capacity_bps);
    if (!(b.window_len > 0.0)) throw ConfigError("window length must be positive");
    const double bytes = static_cast<double>(b.total_bytes);
    return {{
        {ModuleKind::IpCount, b.window_start, static_cast<double>(b.ip_count)},
        {ModuleKind::IpxCount, b.window_start, static_cast<double>(b.ipx_count)},
        {ModuleKind::Utilization, b.window_start,
         bytes * 8.0 / (link_capacity_bps * b.window_len) * 100.0},
        {ModuleKind::BytesPerSec, b.window_start, bytes / b.window_len},
    }};
}

/// Seconds since local midnight, in [0, 86400).
inline double seconds_of_day(double ts, double utc_offset_hours = 0.0) {
    return positive_mod(ts + utc_offset_hours * 3600.0, 86400.0);
}

/// Local hour of day in [0, 24).
inline double time_of_day(double ts, double utc_offset_hours = 0.0) {
    return seconds_of_day(ts, utc_offset_hours) / 3600.0;
}

/// Days since the epoch modulo 7 (0 = Thursday 1970-01-01), local time.
inline int day_of_week(double ts, double utc_offset_hours = 0.0) {
    const double days = std::floor((ts + utc_offset_hours * 3600.0) / 86400.0);
    return static_cast<int>(positive_mod(days, 7.0));
}

}  // namespace fuzzdiag

#endif  // FUZZDIAG_INGEST_HPP
