#ifndef FUZZDIAG_TOOLS_COMMANDS_HPP
#define FUZZDIAG_TOOLS_COMMANDS_HPP

// Subcommand bodies for the fuzzdiag CLI. Each takes its options and the
// process streams and returns the exit status, so tests can drive them
// in-process.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fuzzdiag/alerting.hpp"
#include "fuzzdiag/baseline.hpp"
#include "fuzzdiag/config.hpp"
#include "fuzzdiag/http_sink.hpp"
#include "fuzzdiag/ingest.hpp"
#include "fuzzdiag/pipeline.hpp"
#include "fuzzdiag/rulebook.hpp"
#include "fuzzdiag/simgen.hpp"
#include "fuzzdiag/tuner.hpp"

namespace fuzzdiag::cli {

enum Exit : int { ok = 0, usage = 1, config_error = 2, input_error = 3, cold_start = 4 };

struct Io {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
};

/// Opens `path` for reading, with "-" meaning the given stdin stream.
class Input {
public:
    Input(const std::string& path, std::istream& stdin_stream) {
        if (path == "-" || path.empty()) {
            is_ = &stdin_stream;
        } else {
            file_.open(path, std::ios::binary);
            if (!file_) throw Error("cannot read input " + path);
            is_ = &file_;
        }
    }
    std::istream& stream() { return *is_; }

private:
    std::ifstream file_;
    std::istream* is_ = nullptr;
};

/// Applies `--rules-dir`: DIR/<Module>.rules overrides the configured path.
inline void apply_rules_dir(Config& cfg, const std::string& dir) {
    if (dir.empty()) return;
    for (auto k : all_modules) {
        const auto p = std::filesystem::path(dir) / (std::string(to_string(k)) + ".rules");
        if (std::filesystem::exists(p)) cfg.rulebase_paths[index_of(k)] = p.string();
    }
}

inline std::unique_ptr<Transport> make_transport(const SinkDescriptor& d) {
    if (!d.command.empty()) return std::make_unique<CommandTransport>(d.command);
    if (!d.http_url.empty()) return std::make_unique<HttpTransport>(d.http_url, d.auth_env);
    return nullptr;
}

// ---------------------------------------------------------------------------

struct SurveyOptions {
    std::string input = "-";
    std::string profile;
    bool fresh = false;
};

inline int cmd_survey(const SurveyOptions& opt, const Config& cfg, Io io) {
    const std::string path = opt.profile.empty() ? cfg.profile_path : opt.profile;
    if (path.empty()) {
        io.err << "survey: no profile path (use --profile or \"profile\" in the config)\n";
        return config_error;
    }
    ProfileSet profiles;
    if (!opt.fresh && std::filesystem::exists(path)) {
        profiles = ProfileSet::from(load_profiles(path));
        for (const auto& p : profiles.profiles)
            if (p.slot_len() != cfg.slot_len || p.weekly() != cfg.weekly_slots || p.epsilon() != cfg.epsilon ||
                p.utc_offset() != cfg.utc_offset) {
                io.err << "survey: existing profile " << path
                       << " was built with different slot settings; use --fresh\n";
                return config_error;
            }
    } else {
        profiles = ProfileSet::fresh(cfg.slot_len, cfg.weekly_slots, cfg.epsilon, cfg.utc_offset);
    }

    Input in(opt.input, io.in);
    RecordReader reader(in.stream());
    const auto st = run_survey(reader, cfg, profiles);
    save_profiles(profiles.profiles, path);

    io.out << "survey: records=" << st.records << " buckets=" << st.buckets << " rejected=" << st.rejected << "\n";
    bool any_covered = false;
    for (const auto& p : profiles.profiles) {
        const auto covered = p.covered_slots();
        any_covered = any_covered || covered > 0;
        io.out << "  " << to_string(p.module()) << ": " << covered << "/" << p.slots().size() << " slots covered";
        if (covered < p.slots().size()) io.out << " (" << p.slots().size() - covered << " with n=0)";
        io.out << "\n";
    }
    io.out << "profile written to " << path << "\n";
    if (st.records == 0 || !any_covered) {
        io.err << "survey: input held no records; profile has no coverage\n";
        return input_error;
    }
    return ok;
}

// ---------------------------------------------------------------------------

struct DetectOptions {
    std::string input = "-";
    std::string profile;
    std::string log;
    std::string rules_dir;
};

inline void print_summary(std::ostream& os, const DetectSummary& s, const DispatchStats& ds) {
    os << "detect: records=" << s.stream.records << " buckets=" << s.stream.buckets
       << " rejected=" << s.stream.rejected << " evaluated=" << s.evaluated << " cold_start=" << s.cold_start
       << " low_confidence=" << s.low_confidence << "\n";
    char line[200];
    std::snprintf(line, sizeof line, "  %-12s %8s %8s %8s %8s | %-20s | %-20s | %s\n", "module", "IGNORE", "LOG",
                  "EMAIL", "SMS", "dispatched L/E/S", "suppressed L/E/S", "pending L/E/S");
    os << line;
    for (auto k : all_modules) {
        const auto m = index_of(k);
        const auto& d = s.decisions[m];
        auto triple = [&](const std::array<std::uint64_t, 4>& a) {
            return std::to_string(a[1]) + "/" + std::to_string(a[2]) + "/" + std::to_string(a[3]);
        };
        std::snprintf(line, sizeof line, "  %-12s %8llu %8llu %8llu %8llu | %-20s | %-20s | %s\n", to_string(k),
                      static_cast<unsigned long long>(d[0]), static_cast<unsigned long long>(d[1]),
                      static_cast<unsigned long long>(d[2]), static_cast<unsigned long long>(d[3]),
                      triple(s.dispatched[m]).c_str(), triple(s.suppressed[m]).c_str(),
                      triple(s.pending[m]).c_str());
        os << line;
    }
    os << "  sinks: logged=" << ds.logged << " downgraded=" << ds.downgraded << " delivered=" << ds.delivered
       << " delivery_failures=" << ds.delivery_failures << " overflow=" << ds.overflow
       << " log_failures=" << ds.log_failures << "\n";
}

inline int cmd_detect(const DetectOptions& opt, Config cfg, Io io) {
    apply_rules_dir(cfg, opt.rules_dir);
    const std::string profile_path = opt.profile.empty() ? cfg.profile_path : opt.profile;
    if (profile_path.empty() || !std::filesystem::exists(profile_path)) {
        io.err << "detect: no survey profile found; run `fuzzdiag survey` first\n";
        return config_error;
    }
    auto profiles = ProfileSet::from(load_profiles(profile_path));
    auto rulebases = load_rulebases(cfg);

    const std::string log_path = opt.log.empty() ? cfg.sinks.log_path : opt.log;
    std::ofstream log_file;
    if (!log_path.empty()) {
        log_file.open(log_path, std::ios::binary | std::ios::app);
        if (!log_file) {
            io.err << "detect: cannot open log sink " << log_path << "\n";
            return config_error;
        }
    }
    std::ostream& log = log_path.empty() ? io.out : log_file;
    Dispatcher dispatcher(log, make_transport(cfg.sinks.email), make_transport(cfg.sinks.sms),
                          cfg.sinks.queue_capacity);

    Input in(opt.input, io.in);
    RecordReader reader(in.stream());
    Detector det(cfg, std::move(profiles), std::move(rulebases), dispatcher);
    const auto summary = det.run(reader);
    dispatcher.close();
    print_summary(io.err, summary, dispatcher.stats());
    for (const auto& e : dispatcher.delivery_errors()) io.err << "  delivery error: " << e << "\n";
    if (cfg.survey_in_detect) save_profiles(det.profiles().profiles, profile_path);
    if (summary.evaluated == 0 && summary.cold_start > 0) {
        io.err << "detect: every sample fell in an unsurveyed slot\n";
        return cold_start;
    }
    return ok;
}

// ---------------------------------------------------------------------------

struct TuneOptions {
    std::string input = "-";
    std::string holdout;
    std::string profile;
    std::string rules_dir;
    std::string out_dir = ".";
};

inline int cmd_tune(const TuneOptions& opt, Config cfg, Io io) {
    apply_rules_dir(cfg, opt.rules_dir);
    const std::string profile_path = opt.profile.empty() ? cfg.profile_path : opt.profile;
    if (profile_path.empty() || !std::filesystem::exists(profile_path)) {
        io.err << "tune: no survey profile found; run `fuzzdiag survey` first\n";
        return config_error;
    }
    const auto profiles = ProfileSet::from(load_profiles(profile_path));
    auto rulebases = load_rulebases(cfg);

    Input in(opt.input, io.in);
    RecordReader reader(in.stream());
    const auto train = collect_tune_samples(reader, cfg, profiles);
    std::optional<TuneSamples> held;
    if (!opt.holdout.empty()) {
        Input h(opt.holdout, io.in);
        RecordReader hr(h.stream());
        held = collect_tune_samples(hr, cfg, profiles);
    }
    if (train.stream.records == 0) io.err << "tune: warning: empty input, rule bases written unchanged\n";

    std::filesystem::create_directories(opt.out_dir);
    for (auto k : all_modules) {
        const auto m = index_of(k);
        const auto& samples = train.per_module[m];
        const auto& held_out = held ? held->per_module[m] : samples;
        const auto result = batch_tune(rulebases[m], samples, cfg.tuner, held_out);
        const auto out = std::filesystem::path(opt.out_dir) / (std::string(to_string(k)) + ".rules");
        save_rulebase(result.rulebase, out.string());

        const auto& r = result.report;
        io.out << to_string(k) << ": samples=" << r.samples_seen << " steps=" << r.steps_applied
               << " false_alerts " << r.false_alerts_before << " -> " << r.false_alerts_after << " (held-out "
               << r.held_out_size << ")\n   training alerts " << r.train_alerts_before << " -> "
               << r.train_alerts_after << ", kept state after " << r.kept_samples << " samples\n   displacement:";
        for (std::size_t t = 0; t < r.displacement.size(); ++t)
            io.out << ' ' << r.term_names[t] << '=' << text::format_double(r.displacement[t]);
        io.out << "\n   written to " << out.string() << "\n";
        for (const auto& w : r.warnings) io.err << "tune: " << to_string(k) << ": warning: " << w << "\n";
    }
    if (train.cold_start > 0) io.err << "tune: skipped " << train.cold_start << " samples in unsurveyed slots\n";
    return ok;
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
    std::string scenario;
    std::uint64_t seed = 1;
    std::string out;
};

inline int cmd_simulate(const SimulateOptions& opt, Io io) {
    ScenarioSpec spec;
    const auto refs = reference_scenarios();
    if (auto it = refs.find(opt.scenario); it != refs.end()) {
        spec = it->second;
    } else if (std::filesystem::is_regular_file(opt.scenario)) {
        spec = load_scenario(opt.scenario);
    } else {
        io.err << "simulate: unknown scenario '" << opt.scenario << "'. Available:";
        for (const auto& [name, s] : refs) io.err << ' ' << name;
        io.err << " (or a scenario JSON file)\n";
        return input_error;
    }
    std::ofstream file;
    if (!opt.out.empty() && opt.out != "-") {
        file.open(opt.out, std::ios::binary | std::ios::trunc);
        if (!file) {
            io.err << "simulate: cannot write " << opt.out << "\n";
            return input_error;
        }
    }
    std::ostream& os = file.is_open() ? file : io.out;
    Generator g(spec, opt.seed);
    std::string line;
    while (auto r = g.next()) {
        line = format_record(*r);
        line += '\n';
        os.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
    os.flush();
    return os ? ok : input_error;
}

// ---------------------------------------------------------------------------

struct ReportOptions {
    std::string log;
    std::string plot_dir;
    std::size_t top = 5;
};

inline int cmd_report(const ReportOptions& opt, Io io) {
    Input in(opt.log, io.in);
    std::vector<AlertEvent> events;
    std::uint64_t skipped = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in.stream(), line)) {
        ++lineno;
        if (text::split(line).empty()) continue;
        try {
            events.push_back(parse_log_line(line, lineno));
        } catch (const ParseError& e) {
            ++skipped;
            io.err << "report: skipping " << e.what() << "\n";
        }
    }

    if (events.empty()) {
        io.out << "no alerts\n";
    } else {
        std::array<std::array<std::uint64_t, 4>, 4> counts{};
        std::array<std::uint64_t, 4> suppressed{};
        std::array<std::uint64_t, 4> downgraded{};
        for (const auto& e : events) {
            const auto m = index_of(e.module);
            ++counts[m][code(e.action)];
            suppressed[m] += e.suppressed_count;
            if (e.downgraded) ++downgraded[m];
        }
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-12s %6s %6s %6s %11s %11s\n", "module", "LOG", "EMAIL", "SMS",
                      "suppressed", "downgraded");
        io.out << buf;
        for (auto k : all_modules) {
            const auto m = index_of(k);
            std::snprintf(buf, sizeof buf, "%-12s %6llu %6llu %6llu %11llu %11llu\n", to_string(k),
                          static_cast<unsigned long long>(counts[m][1]), static_cast<unsigned long long>(counts[m][2]),
                          static_cast<unsigned long long>(counts[m][3]), static_cast<unsigned long long>(suppressed[m]),
                          static_cast<unsigned long long>(downgraded[m]));
            io.out << buf;
        }
        auto ranked = events;
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const AlertEvent& a, const AlertEvent& b) { return a.severity > b.severity; });
        ranked.resize(std::min(ranked.size(), opt.top));
        io.out << "top windows by severity:\n";
        for (const auto& e : ranked) io.out << "  " << format_log_line(e) << "\n";
    }
    io.out << "events=" << events.size() << " skipped=" << skipped << "\n";

    if (!opt.plot_dir.empty()) {
        std::filesystem::create_directories(opt.plot_dir);
        for (auto k : all_modules) {
            const auto p = std::filesystem::path(opt.plot_dir) / (std::string(to_string(k)) + ".dat");
            std::ofstream os(p);
            if (!os) throw Error("cannot write " + p.string());
            os << "# ts tod severity ratio action_code suppressed\n";
            for (const auto& e : events) {
                if (e.module != k) continue;
                char row[160];
                std::snprintf(row, sizeof row, " %.2f %.4f %.4f %d %llu\n", e.tod, e.severity, e.ratio,
                              code(e.action), static_cast<unsigned long long>(e.suppressed_count));
                os << text::format_double(e.ts) << row;
            }
        }
        io.out << "plot data written to " << opt.plot_dir << "\n";
    }
    return ok;
}

}  // namespace fuzzdiag::cli

#endif  // FUZZDIAG_TOOLS_COMMANDS_HPP
