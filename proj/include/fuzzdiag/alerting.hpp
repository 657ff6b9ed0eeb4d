#ifndef FUZZDIAG_ALERTING_HPP
#define FUZZDIAG_ALERTING_HPP

// Alert events, repeat suppression and dispatch to sinks.
//
// Log line format, version 1 (one event per line, fields in this order):
//
//   ts=<epoch> module=<kind> action=<LOG|EMAIL|SMS> severity=<%.4f>
//   ratio=<%.4f> tod=<%.2f> suppressed=<n> downgraded=<0|1>
//
// <epoch> is the shortest decimal that reads back as the same double.

#include <cmath>
#include <condition_variable>
#include <csignal>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "fuzzdiag/errors.hpp"
#include "fuzzdiag/rulebook.hpp"
#include "fuzzdiag/textio.hpp"

namespace fuzzdiag {

struct AlertEvent {
    ModuleKind module = ModuleKind::IpCount;
    double ts = 0.0;
    double severity = 0.0;
    ActionLevel action = ActionLevel::Ignore;
    std::uint64_t suppressed_count = 0;
    double ratio = 0.0;
    double tod = 0.0;
    bool downgraded = false;
};

/// Ignore-band severities produce no event.
inline std::optional<AlertEvent> decide(ModuleKind module, double ts, double severity,
                                        double ratio = 0.0, double tod = 0.0) {
    const auto action = action_from_severity(severity);
    if (action == ActionLevel::Ignore) return std::nullopt;
    AlertEvent ev;
    ev.module = module;
    ev.ts = ts;
    ev.severity = severity;
    ev.action = action;
    ev.ratio = ratio;
    ev.tod = tod;
    return ev;
}

enum class RateDecision { Dispatch, Suppress };

/// Counter-based repeat suppression keyed by (module, action).
///
/// The first event for a key, and the first one at least `cooldown` seconds
/// after that key's last dispatch, goes out carrying the number of events
/// swallowed since; everything in between only bumps the counter.
class SuppressionState {
public:
    static constexpr double default_cooldown = 300.0;

    explicit SuppressionState(double cooldown = default_cooldown) : cooldown_(cooldown) {
        if (!(cooldown >= 0.0) || !std::isfinite(cooldown)) throw ConfigError("cooldown must be non-negative");
    }

    RateDecision rate_limit(AlertEvent& ev) {
        auto& e = keys_[{index_of(ev.module), code(ev.action)}];
        ++e.total;
        if (!e.seen || ev.ts - e.last_dispatch >= cooldown_) {
            e.seen = true;
            e.last_dispatch = ev.ts;
            ev.suppressed_count = e.counter;
            e.carried += e.counter;
            e.counter = 0;
            ++e.dispatched;
            return RateDecision::Dispatch;
        }
        ++e.counter;
        return RateDecision::Suppress;
    }

    struct KeyStats {
        bool seen = false;
        double last_dispatch = 0.0;
        std::uint64_t counter = 0;     // pending, not yet reported by a dispatch
        std::uint64_t dispatched = 0;
        std::uint64_t carried = 0;     // sum of suppressed_count over dispatches
        std::uint64_t total = 0;
    };

    KeyStats stats(ModuleKind m, ActionLevel a) const {
        auto it = keys_.find({index_of(m), code(a)});
        return it == keys_.end() ? KeyStats{} : it->second;
    }

    std::uint64_t pending(ModuleKind m, ActionLevel a) const { return stats(m, a).counter; }
    double cooldown() const noexcept { return cooldown_; }

private:
    double cooldown_;
    std::map<std::pair<std::size_t, int>, KeyStats> keys_;
};

inline RateDecision rate_limit(AlertEvent& ev, SuppressionState& state) { return state.rate_limit(ev); }

inline std::string format_log_line(const AlertEvent& ev) {
    char buf[160];
    std::snprintf(buf, sizeof buf, " severity=%.4f ratio=%.4f tod=%.2f suppressed=%llu downgraded=%d",
                  ev.severity, ev.ratio, ev.tod, static_cast<unsigned long long>(ev.suppressed_count),
                  ev.downgraded ? 1 : 0);
    std::string s = "ts=" + text::format_double(ev.ts) + " module=" + to_string(ev.module) +
                    " action=" + to_string(ev.action);
    return s + buf;
}

/// Strict inverse of format_log_line (to the printed precision).
inline AlertEvent parse_log_line(std::string_view line, std::size_t lineno = 0) {
    static constexpr std::string_view keys[] = {"ts", "module", "action", "severity",
                                                "ratio", "tod", "suppressed", "downgraded"};
    const auto tok = text::split(line);
    if (tok.size() != std::size(keys)) throw ParseError(lineno, "alert line needs 8 key=value fields");
    std::string_view val[std::size(keys)];
    for (std::size_t i = 0; i < tok.size(); ++i) {
        const auto eq = tok[i].find('=');
        if (eq == std::string_view::npos || tok[i].substr(0, eq) != keys[i])
            throw ParseError(lineno, "expected field '" + std::string(keys[i]) + "='");
        val[i] = tok[i].substr(eq + 1);
    }
    AlertEvent ev;
    ev.ts = text::parse_double(val[0], lineno);
    auto m = module_from_string(val[1]);
    if (!m) throw ParseError(lineno, "unknown module '" + std::string(val[1]) + "'");
    ev.module = *m;
    auto a = action_from_string(val[2]);
    if (!a || *a == ActionLevel::Ignore) throw ParseError(lineno, "bad action '" + std::string(val[2]) + "'");
    ev.action = *a;
    ev.severity = text::parse_double(val[3], lineno);
    ev.ratio = text::parse_double(val[4], lineno);
    ev.tod = text::parse_double(val[5], lineno);
    ev.suppressed_count = text::parse_uint(val[6], lineno);
    if (val[7] != "0" && val[7] != "1") throw ParseError(lineno, "downgraded must be 0 or 1");
    ev.downgraded = val[7] == "1";
    return ev;
}

/// External delivery channel for EMAIL/SMS events.
class Transport {
public:
    virtual ~Transport() = default;
    /// Delivers one serialized event. Returns false and fills `error` on failure.
    virtual bool deliver(const std::string& payload, std::string& error) = 0;
};

/// Runs a shell command per event with the payload on its standard input.
class CommandTransport : public Transport {
public:
    explicit CommandTransport(std::string command) : command_(std::move(command)) {
        // a command that exits without reading its input must not kill us
        std::signal(SIGPIPE, SIG_IGN);
    }

    bool deliver(const std::string& payload, std::string& error) override {
        FILE* p = ::popen(command_.c_str(), "w");
        if (!p) {
            error = "cannot start command";
            return false;
        }
        const bool wrote = std::fwrite(payload.data(), 1, payload.size(), p) == payload.size();
        const int status = ::pclose(p);
        if (!wrote || status != 0) {
            error = "command failed (status " + std::to_string(status) + ")";
            return false;
        }
        return true;
    }

private:
    std::string command_;
};

struct DeliveryRecord {
    bool logged = false;
    bool downgraded = false;
    bool queued = false;       // handed to the external sink queue
    bool overflowed = false;   // external sink queue was full
    std::string error;
};

struct DispatchStats {
    std::uint64_t logged = 0;
    std::uint64_t log_failures = 0;
    std::uint64_t downgraded = 0;
    std::uint64_t queued = 0;
    std::uint64_t delivered = 0;
    std::uint64_t delivery_failures = 0;
    std::uint64_t overflow = 0;
};

/// Writes every dispatched event to the log sink and hands EMAIL/SMS events
/// to their transports through a bounded queue drained by one worker
/// thread, so slow transports never stall detection. Log lines are written
/// in call order on the caller's thread.
class Dispatcher {
public:
    Dispatcher(std::ostream& log, std::unique_ptr<Transport> email = nullptr,
               std::unique_ptr<Transport> sms = nullptr, std::size_t queue_capacity = 1024)
        : log_(log), email_(std::move(email)), sms_(std::move(sms)), capacity_(queue_capacity) {
        if (email_ || sms_) worker_ = std::thread([this] { run(); });
    }

    Dispatcher(const Dispatcher&) = delete;
    Dispatcher& operator=(const Dispatcher&) = delete;

    ~Dispatcher() { close(); }

    DeliveryRecord dispatch(AlertEvent ev) {
        DeliveryRecord rec;
        Transport* t = ev.action == ActionLevel::Email ? email_.get()
                       : ev.action == ActionLevel::Sms ? sms_.get()
                                                       : nullptr;
        if (ev.action >= ActionLevel::Email && !t) {
            ev.downgraded = true;
            rec.downgraded = true;
        }
        const auto line = format_log_line(ev);
        log_ << line << '\n';
        log_.flush();
        std::lock_guard lk(mu_);
        if (log_) {
            rec.logged = true;
            ++stats_.logged;
        } else {
            log_.clear();
            ++stats_.log_failures;
            rec.error = "log sink write failed";
        }
        if (rec.downgraded) ++stats_.downgraded;
        if (t) {
            if (queue_.size() >= capacity_) {
                rec.overflowed = true;
                rec.error = "external sink queue full";
                ++stats_.overflow;
            } else {
                queue_.push_back({t, line + '\n'});
                rec.queued = true;
                ++stats_.queued;
                cv_.notify_one();
            }
        }
        return rec;
    }

    /// Blocks until every queued delivery has been attempted.
    void flush() {
        std::unique_lock lk(mu_);
        idle_.wait(lk, [this] { return queue_.empty() && !busy_; });
    }

    /// Drains the queue and stops the worker.
    void close() {
        {
            std::lock_guard lk(mu_);
            if (stopping_) return;
            stopping_ = true;
        }
        cv_.notify_all();
        if (worker_.joinable()) worker_.join();
    }

    DispatchStats stats() const {
        std::lock_guard lk(mu_);
        return stats_;
    }

    std::vector<std::string> delivery_errors() const {
        std::lock_guard lk(mu_);
        return errors_;
    }

private:
    struct Job {
        Transport* transport;
        std::string payload;
    };

    void run() {
        std::unique_lock lk(mu_);
        for (;;) {
            cv_.wait(lk, [this] { return stopping_ || !queue_.empty(); });
            if (queue_.empty()) {
                if (stopping_) break;
                continue;
            }
            Job job = std::move(queue_.front());
            queue_.pop_front();
            busy_ = true;
            lk.unlock();
            std::string error;
            const bool ok = job.transport->deliver(job.payload, error);
            lk.lock();
            busy_ = false;
            if (ok) {
                ++stats_.delivered;
            } else {
                ++stats_.delivery_failures;
                if (errors_.size() < 100) errors_.push_back(error);
            }
            if (queue_.empty()) idle_.notify_all();
        }
        idle_.notify_all();
    }

    std::ostream& log_;
    std::unique_ptr<Transport> email_;
    std::unique_ptr<Transport> sms_;
    std::size_t capacity_;

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable idle_;
    std::deque<Job> queue_;
    bool busy_ = false;
    bool stopping_ = false;
    DispatchStats stats_;
    std::vector<std::string> errors_;
    std::thread worker_;
};

}  // namespace fuzzdiag

#endif  // FUZZDIAG_ALERTING_HPP
