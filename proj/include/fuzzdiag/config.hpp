#ifndef FUZZDIAG_CONFIG_HPP
#define FUZZDIAG_CONFIG_HPP

// Runtime configuration, read from a JSON file. Every key is optional;
// unknown keys are rejected.
//
//   {
//     "window_len": 60,              bucket length, seconds
//     "slot_len": 1800,              baseline slot, seconds, divides 86400
//     "weekly_slots": false,         stratify slots by day of week
//     "utc_offset": 0,               hours added to UTC for time of day
//     "link_capacity_bps": 10000000,
//     "epsilon": 1.0,                floor for the baseline mean/std
//     "cooldown": 300,               suppression window, seconds
//     "tnorm": "product",            or "min"
//     "survey_in_detect": false,     keep updating the profile while detecting
//     "tuner": {"eta": 0.05, "max_total_disp": 0.25, "keep_order_margin": 0.1},
//     "profile": "profile.txt",
//     "rulebases": {"IpCount": "ip.rules", ...},
//     "sinks": {"log": "alerts.log",
//               "email": {"command": "mail-gw"} | {"http": "http://host/path", "auth_env": "TOKEN"},
//               "sms": (same shape as email),
//               "queue_capacity": 1024}
//   }

#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "fuzzdiag/errors.hpp"
#include "fuzzdiag/fuzzy.hpp"
#include "fuzzdiag/rulebook.hpp"
#include "fuzzdiag/tuner.hpp"

namespace fuzzdiag {

struct SinkDescriptor {
    std::string command;   // run with the event on stdin
    std::string http_url;  // POSTed as text/plain
    std::string auth_env;  // environment variable holding a bearer token

    bool configured() const { return !command.empty() || !http_url.empty(); }
};

struct SinkConfig {
    std::string log_path;  // empty: the caller's stream
    SinkDescriptor email;
    SinkDescriptor sms;
    std::size_t queue_capacity = 1024;
};

struct Config {
    double window_len = 60.0;
    double slot_len = 1800.0;
    bool weekly_slots = false;
    double utc_offset = 0.0;
    double link_capacity_bps = 10e6;
    double epsilon = 1.0;
    double cooldown = 300.0;
    TNorm tnorm = TNorm::Product;
    bool survey_in_detect = false;
    TunerConfig tuner;
    SinkConfig sinks;
    std::string profile_path;
    std::array<std::string, 4> rulebase_paths;

    void validate() const {
        auto positive = [](double v, const char* what) {
            if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
        };
        positive(window_len, "window_len");
        positive(slot_len, "slot_len");
        positive(link_capacity_bps, "link_capacity_bps");
        positive(epsilon, "epsilon");
        if (std::floor(slot_len) != slot_len || std::fmod(86400.0, slot_len) != 0.0)
            throw ConfigError("slot_len must be a whole number of seconds dividing 86400");
        if (!(cooldown >= 0.0) || !std::isfinite(cooldown)) throw ConfigError("cooldown must be non-negative");
        if (!std::isfinite(utc_offset) || std::fabs(utc_offset) > 24.0)
            throw ConfigError("utc_offset must lie within +-24 hours");
        if (sinks.queue_capacity == 0) throw ConfigError("sinks.queue_capacity must be positive");
        tuner.validate();
        for (std::size_t i = 0; i < rulebase_paths.size(); ++i) {
            if (rulebase_paths[i].empty()) continue;
            std::ifstream probe(rulebase_paths[i]);
            if (!probe)
                throw ConfigError(std::string("rule base for ") + to_string(all_modules[i]) +
                                  " is not readable: " + rulebase_paths[i]);
        }
    }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                           const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw ConfigError("unknown config key " + where + it.key());
    }
}

inline SinkDescriptor sink_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    reject_unknown(j, {"command", "http", "auth_env"}, where + ".");
    SinkDescriptor d;
    d.command = j.value("command", std::string());
    d.http_url = j.value("http", std::string());
    d.auth_env = j.value("auth_env", std::string());
    if (d.command.empty() == d.http_url.empty())
        throw ConfigError(where + " needs exactly one of \"command\" or \"http\"");
    return d;
}

}  // namespace detail

inline Config config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    Config c;
    try {
        detail::reject_unknown(j, {"window_len", "slot_len", "weekly_slots", "utc_offset", "link_capacity_bps",
                                   "epsilon", "cooldown", "tnorm", "survey_in_detect", "tuner", "profile",
                                   "rulebases", "sinks"},
                               "");
        c.window_len = j.value("window_len", c.window_len);
        c.slot_len = j.value("slot_len", c.slot_len);
        c.weekly_slots = j.value("weekly_slots", c.weekly_slots);
        c.utc_offset = j.value("utc_offset", c.utc_offset);
        c.link_capacity_bps = j.value("link_capacity_bps", c.link_capacity_bps);
        c.epsilon = j.value("epsilon", c.epsilon);
        c.cooldown = j.value("cooldown", c.cooldown);
        c.survey_in_detect = j.value("survey_in_detect", c.survey_in_detect);
        c.profile_path = j.value("profile", c.profile_path);
        const auto tn = j.value("tnorm", std::string("product"));
        if (tn == "product")
            c.tnorm = TNorm::Product;
        else if (tn == "min")
            c.tnorm = TNorm::Min;
        else
            throw ConfigError("tnorm must be \"product\" or \"min\"");
        if (auto t = j.find("tuner"); t != j.end()) {
            detail::reject_unknown(*t, {"eta", "max_total_disp", "keep_order_margin"}, "tuner.");
            c.tuner.eta = t->value("eta", c.tuner.eta);
            c.tuner.max_total_disp = t->value("max_total_disp", c.tuner.max_total_disp);
            c.tuner.keep_order_margin = t->value("keep_order_margin", c.tuner.keep_order_margin);
        }
        if (auto r = j.find("rulebases"); r != j.end()) {
            for (auto it = r->begin(); it != r->end(); ++it) {
                auto kind = module_from_string(it.key());
                if (!kind) throw ConfigError("unknown module in rulebases: " + it.key());
                c.rulebase_paths[index_of(*kind)] = it.value().get<std::string>();
            }
        }
        if (auto s = j.find("sinks"); s != j.end()) {
            detail::reject_unknown(*s, {"log", "email", "sms", "queue_capacity"}, "sinks.");
            c.sinks.log_path = s->value("log", std::string());
            if (auto e = s->find("email"); e != s->end()) c.sinks.email = detail::sink_from_json(*e, "sinks.email");
            if (auto e = s->find("sms"); e != s->end()) c.sinks.sms = detail::sink_from_json(*e, "sinks.sms");
            c.sinks.queue_capacity = s->value("queue_capacity", c.sinks.queue_capacity);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline Config load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return config_from_json(j);
}

}  // namespace fuzzdiag

#endif  // FUZZDIAG_CONFIG_HPP
