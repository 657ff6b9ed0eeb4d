// fuzzdiag: survey, detect, tune, simulate, report.
//
// Exit status: 0 success, 1 usage, 2 configuration, 3 input, 4 cold start.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

fuzzdiag::Config load(const std::string& path) {
    return path.empty() ? fuzzdiag::Config{} : fuzzdiag::load_config(path);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace fuzzdiag;
    std::ios::sync_with_stdio(false);

    CLI::App app{"Fuzzy traffic-anomaly diagnostics"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);

    cli::SurveyOptions survey;
    auto* sv = app.add_subcommand("survey", "Learn the per-slot traffic baseline");
    sv->add_option("-i,--input", survey.input, "Flow-record file, '-' for stdin");
    sv->add_option("-p,--profile", survey.profile, "Profile file to create or extend");
    sv->add_flag("--fresh", survey.fresh, "Ignore an existing profile at the path");

    cli::DetectOptions detect;
    auto* dt = app.add_subcommand("detect", "Score traffic against the baseline and raise alerts");
    dt->add_option("-i,--input", detect.input, "Flow-record file, '-' for stdin");
    dt->add_option("-p,--profile", detect.profile, "Survey profile");
    dt->add_option("-l,--log", detect.log, "Alert log (appended); stdout when unset");
    dt->add_option("-r,--rules-dir", detect.rules_dir, "Directory of <Module>.rules overrides");

    cli::TuneOptions tune;
    auto* tn = app.add_subcommand("tune", "Adapt intensity terms to normal traffic");
    tn->add_option("-i,--input", tune.input, "Normal flow records, '-' for stdin");
    tn->add_option("--holdout", tune.holdout, "Normal records for before/after false-alert counts");
    tn->add_option("-p,--profile", tune.profile, "Survey profile");
    tn->add_option("-r,--rules-dir", tune.rules_dir, "Directory of <Module>.rules to start from");
    tn->add_option("-o,--out-dir", tune.out_dir, "Where tuned <Module>.rules are written");

    cli::SimulateOptions sim;
    auto* sm = app.add_subcommand("simulate", "Emit a synthetic flow-record stream");
    sm->add_option("scenario", sim.scenario, "Reference scenario name or scenario JSON file")->required();
    sm->add_option("-s,--seed", sim.seed, "Random seed");
    sm->add_option("-o,--out", sim.out, "Output file; stdout when unset");

    cli::ReportOptions report;
    auto* rp = app.add_subcommand("report", "Summarize an alert log");
    rp->add_option("log", report.log, "Alert log, '-' for stdin")->required();
    rp->add_option("--plot-dir", report.plot_dir, "Write per-module columnar data here");
    rp->add_option("--top", report.top, "Number of top windows to list");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? cli::ok : cli::usage;
    }

    cli::Io io{std::cin, std::cout, std::cerr};
    Config cfg;
    try {
        cfg = load(config_path);
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::config_error;
    }
    try {
        if (*sv) return cli::cmd_survey(survey, cfg, io);
        if (*dt) return cli::cmd_detect(detect, cfg, io);
        if (*tn) return cli::cmd_tune(tune, cfg, io);
        if (*sm) return cli::cmd_simulate(sim, io);
        if (*rp) return cli::cmd_report(report, io);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::config_error;
    } catch (const ColdStart& e) {
        std::cerr << "cold start: " << e.what() << "\n";
        return cli::cold_start;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::input_error;
    }
    return cli::usage;
}
