#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "commands.hpp"

using namespace fuzzdiag;
namespace fs = std::filesystem;

namespace {

const std::string cli_path = FUZZDIAG_CLI_PATH;

struct Run {
    int status = -1;
    std::string out;
};

Run sh(const std::string& cmd) {
    Run r;
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int st = ::pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
    std::ofstream os(p, std::ios::binary);
    os << s;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::path(::testing::TempDir()) /
              (std::string("fuzzdiag_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }

    std::string records(const ScenarioSpec& s, std::uint64_t seed) {
        std::string out;
        Generator g(s, seed);
        while (auto r = g.next()) out += format_record(*r) + "\n";
        return out;
    }

    int run_survey(const std::string& input, const std::string& profile, std::string* out = nullptr) {
        std::istringstream in(input);
        std::ostringstream o, e;
        cli::SurveyOptions opt;
        opt.profile = profile;
        const int rc = cli::cmd_survey(opt, cfg, {in, o, e});
        if (out) *out = o.str() + e.str();
        return rc;
    }

    fs::path dir;
    Config cfg;
};

// Quiet traffic over the first six hours of a day.
ScenarioSpec short_day(double hours = 6.0) {
    ScenarioSpec s;
    s.name = "short";
    s.duration = hours * 3600.0;
    return s;
}

}  // namespace

TEST_F(Cli, SurveyEmptyInputWritesProfileAndFails) {
    const auto prof = (dir / "p.txt").string();
    std::string msg;
    EXPECT_EQ(run_survey("", prof, &msg), cli::input_error);
    ASSERT_TRUE(fs::exists(prof));
    const auto set = ProfileSet::from(load_profiles(prof));
    for (const auto& p : set.profiles) EXPECT_EQ(p.covered_slots(), 0u);
    EXPECT_NE(msg.find("0/48 slots covered"), std::string::npos) << msg;
}

TEST_F(Cli, SurveyFullDayCoversEverySlot) {
    const auto prof = (dir / "p.txt").string();
    ScenarioSpec day;
    EXPECT_EQ(run_survey(records(day, 1), prof), cli::ok);
    for (const auto& p : ProfileSet::from(load_profiles(prof)).profiles) {
        EXPECT_EQ(p.covered_slots(), 48u);
        for (const auto& s : p.slots()) EXPECT_EQ(s.n, 30u);
    }
}

TEST_F(Cli, SurveyTwiceDoublesCountsKeepsMean) {
    const auto prof = (dir / "p.txt").string();
    const auto data = records(short_day(), 2);
    ASSERT_EQ(run_survey(data, prof), cli::ok);
    const auto once = ProfileSet::from(load_profiles(prof));
    ASSERT_EQ(run_survey(data, prof), cli::ok);
    const auto twice = ProfileSet::from(load_profiles(prof));
    for (auto k : all_modules) {
        const auto& a = once[k].slots();
        const auto& b = twice[k].slots();
        for (std::size_t i = 0; i < a.size(); ++i) {
            ASSERT_EQ(b[i].n, 2 * a[i].n);
            ASSERT_NEAR(b[i].mean, a[i].mean, 1e-9 * std::max(1.0, a[i].mean));
        }
    }
}

TEST_F(Cli, SurveyNeedsProfilePath) {
    std::istringstream in("");
    std::ostringstream o, e;
    EXPECT_EQ(cli::cmd_survey({}, cfg, {in, o, e}), cli::config_error);
}

TEST_F(Cli, DetectWithoutProfile) {
    std::istringstream in("");
    std::ostringstream o, e;
    cli::DetectOptions opt;
    opt.profile = (dir / "missing.txt").string();
    EXPECT_EQ(cli::cmd_detect(opt, cfg, {in, o, e}), cli::config_error);
}

TEST_F(Cli, DetectColdStart) {
    const auto prof = (dir / "p.txt").string();
    ASSERT_EQ(run_survey(records(short_day(2), 3), prof), cli::ok);
    auto later = short_day(1);
    later.start += 12 * 3600.0;
    std::istringstream in(records(later, 4));
    std::ostringstream o, e;
    cli::DetectOptions opt;
    opt.profile = prof;
    EXPECT_EQ(cli::cmd_detect(opt, cfg, {in, o, e}), cli::cold_start);
    EXPECT_NE(e.str().find("cold_start=240"), std::string::npos) << e.str();
}

TEST_F(Cli, DetectFlagsRouterFailureBySms) {
    const auto prof = (dir / "p.txt").string();
    ASSERT_EQ(run_survey(records(short_day(), 5), prof), cli::ok);
    auto s = short_day();
    s.start += 86400.0;
    s.anomalies.push_back({AnomalyKind::RouterFailure, 3 * 3600.0, 600.0, 0.02});
    std::istringstream in(records(s, 6));
    std::ostringstream o, e;
    cli::DetectOptions opt;
    opt.profile = prof;
    ASSERT_EQ(cli::cmd_detect(opt, cfg, {in, o, e}), cli::ok);
    bool sms = false;
    std::istringstream log(o.str());
    for (std::string line; std::getline(log, line);) {
        const auto ev = parse_log_line(line);
        if (ev.action == ActionLevel::Sms && ev.module == ModuleKind::IpCount) {
            EXPECT_GE(ev.ts, s.start + 3 * 3600.0);
            EXPECT_LT(ev.ts, s.start + 3 * 3600.0 + 600.0);
            EXPECT_TRUE(ev.downgraded);  // no sms sink configured
            sms = true;
        }
    }
    EXPECT_TRUE(sms) << o.str();
}

TEST_F(Cli, TuneEtaZeroWritesInputRulebases) {
    const auto prof = (dir / "p.txt").string();
    const auto data = records(short_day(), 7);
    ASSERT_EQ(run_survey(data, prof), cli::ok);
    const auto in_dir = dir / "in";
    fs::create_directories(in_dir);
    auto rb = build_rulebase(ModuleKind::IpCount);
    rb = rb.with_variable(0, rb.variables()[0].with_peaks({0.0, 0.45, 1.1, 1.5, 2.0}));
    for (auto k : all_modules) save_rulebase(rb, (in_dir / (std::string(to_string(k)) + ".rules")).string());

    cfg.tuner.eta = 0.0;
    std::istringstream in(data);
    std::ostringstream o, e;
    cli::TuneOptions opt;
    opt.profile = prof;
    opt.rules_dir = in_dir.string();
    opt.out_dir = (dir / "out").string();
    ASSERT_EQ(cli::cmd_tune(opt, cfg, {in, o, e}), cli::ok);
    for (auto k : all_modules) {
        const auto name = std::string(to_string(k)) + ".rules";
        EXPECT_EQ(slurp(dir / "out" / name), slurp(in_dir / name)) << name;
    }
}

TEST_F(Cli, TuneEmptyInputWarns) {
    const auto prof = (dir / "p.txt").string();
    ASSERT_EQ(run_survey(records(short_day(), 8), prof), cli::ok);
    std::istringstream in("");
    std::ostringstream o, e;
    cli::TuneOptions opt;
    opt.profile = prof;
    opt.out_dir = (dir / "out").string();
    ASSERT_EQ(cli::cmd_tune(opt, cfg, {in, o, e}), cli::ok);
    EXPECT_NE(e.str().find("warning"), std::string::npos);
    for (auto k : all_modules)
        EXPECT_TRUE(load_rulebase((dir / "out" / (std::string(to_string(k)) + ".rules")).string()) ==
                    build_rulebase(k));
}

TEST_F(Cli, TuneWithoutProfile) {
    std::istringstream in("");
    std::ostringstream o, e;
    cli::TuneOptions opt;
    opt.profile = (dir / "none").string();
    EXPECT_EQ(cli::cmd_tune(opt, cfg, {in, o, e}), cli::config_error);
}

TEST_F(Cli, SimulateDeterministicAndUnknownName) {
    std::istringstream in;
    std::ostringstream a, b, e;
    cli::SimulateOptions opt;
    const auto spec = dir / "s.json";
    spit(spec, R"({"name":"tiny","duration":600,"anomalies":[{"kind":"FlashCrowd","start":120,"duration":120,"magnitude":3}]})");
    opt.scenario = spec.string();
    opt.seed = 7;
    ASSERT_EQ(cli::cmd_simulate(opt, {in, a, e}), cli::ok);
    ASSERT_EQ(cli::cmd_simulate(opt, {in, b, e}), cli::ok);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_FALSE(a.str().empty());

    std::ostringstream none, err;
    opt.scenario = "volcano";
    EXPECT_EQ(cli::cmd_simulate(opt, {in, none, err}), cli::input_error);
    for (const auto& [name, s] : reference_scenarios()) EXPECT_NE(err.str().find(name), std::string::npos);
}

TEST_F(Cli, ReportCounts) {
    const auto log = dir / "alerts.log";
    spit(log,
         "ts=60 module=IpCount action=LOG severity=0.9000 ratio=1.3000 tod=1.00 suppressed=0 downgraded=0\n"
         "ts=120 module=IpCount action=LOG severity=1.0000 ratio=1.4000 tod=1.00 suppressed=2 downgraded=0\n"
         "ts=180 module=Utilization action=LOG severity=1.1000 ratio=1.4000 tod=1.00 suppressed=0 downgraded=0\n"
         "ts=240 module=IpCount action=SMS severity=3.0000 ratio=0.0100 tod=1.00 suppressed=0 downgraded=1\n");
    std::istringstream in;
    std::ostringstream o, e;
    cli::ReportOptions opt;
    opt.log = log.string();
    opt.plot_dir = (dir / "plot").string();
    ASSERT_EQ(cli::cmd_report(opt, {in, o, e}), cli::ok);
    const auto s = o.str();
    EXPECT_NE(s.find("IpCount           2      0      1           2           1"), std::string::npos) << s;
    EXPECT_NE(s.find("Utilization       1      0      0           0           0"), std::string::npos) << s;
    EXPECT_NE(s.find("events=4 skipped=0"), std::string::npos);
    const auto dat = slurp(dir / "plot" / "IpCount.dat");
    EXPECT_NE(dat.find("240 1.00 3.0000 0.0100 3 0"), std::string::npos) << dat;
}

TEST_F(Cli, ReportEmptyAndCorrupt) {
    std::istringstream empty("");
    std::ostringstream o, e;
    cli::ReportOptions opt;
    opt.log = "-";
    ASSERT_EQ(cli::cmd_report(opt, {empty, o, e}), cli::ok);
    EXPECT_NE(o.str().find("no alerts"), std::string::npos);

    std::istringstream corrupt(
        "ts=60 module=IpCount action=LOG severity=0.9000 ratio=1.3000 tod=1.00 suppressed=0 downgraded=0\n"
        "ts=61 module=IpCount action=LO\n");
    std::ostringstream o2, e2;
    ASSERT_EQ(cli::cmd_report(opt, {corrupt, o2, e2}), cli::ok);
    EXPECT_NE(o2.str().find("events=1 skipped=1"), std::string::npos) << o2.str();
    EXPECT_NE(e2.str().find("line 2"), std::string::npos) << e2.str();
}

TEST_F(Cli, ConfigStrictness) {
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"windw_len": 60})")), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"slot_len": 7000})")), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"tnorm": "max"})")), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"sinks": {"sms": {}}})")), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"rulebases": {"IpCount": "/no/such/file"}})")),
                 ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"link_capacity_bps": 0})")), ConfigError);
    const auto c = config_from_json(nlohmann::json::parse(
        R"({"tnorm": "min", "cooldown": 0, "tuner": {"eta": 0.2}, "sinks": {"email": {"command": "true"}}})"));
    EXPECT_EQ(c.tnorm, TNorm::Min);
    EXPECT_EQ(c.cooldown, 0.0);
    EXPECT_EQ(c.tuner.eta, 0.2);
    EXPECT_EQ(c.sinks.email.command, "true");
}

TEST_F(Cli, ProcessExitCodes) {
    EXPECT_EQ(sh(cli_path + " >/dev/null 2>&1").status, cli::usage);
    EXPECT_EQ(sh(cli_path + " bogus >/dev/null 2>&1").status, cli::usage);
    spit(dir / "bad.json", R"({"nope": 1})");
    EXPECT_EQ(sh(cli_path + " -c " + (dir / "bad.json").string() + " report - </dev/null >/dev/null 2>&1").status,
              cli::config_error);
    EXPECT_EQ(sh(cli_path + " simulate nowhere >/dev/null 2>&1").status, cli::input_error);
    EXPECT_EQ(sh(cli_path + " detect -p " + (dir / "none").string() + " </dev/null >/dev/null 2>&1").status,
              cli::config_error);
    spit(dir / "broken.jsonl", "{\"ts\":1,\"proto\":\"IP\",\"bytes\":1}\nnot json\n");
    const auto r = sh(cli_path + " survey -p " + (dir / "p").string() + " -i " + (dir / "broken.jsonl").string() +
                      " 2>&1");
    EXPECT_EQ(r.status, cli::input_error);
    EXPECT_NE(r.out.find("line 2"), std::string::npos) << r.out;
}

TEST_F(Cli, PipeMatchesFile) {
    const auto d = dir.string();
    spit(dir / "quiet.json", R"({"name":"quiet","duration":21600})");
    spit(dir / "event.json",
         R"({"name":"event","start":1700006400,"duration":21600,
             "anomalies":[{"kind":"RouterFailure","start":7200,"duration":900,"magnitude":0.02},
                          {"kind":"FlashCrowd","start":12000,"duration":3600,"magnitude":3}]})");
    ASSERT_EQ(sh(cli_path + " simulate " + d + "/quiet.json --seed 1 | " + cli_path + " survey -p " + d +
                 "/prof.txt >/dev/null 2>&1")
                  .status,
              0);
    ASSERT_EQ(sh(cli_path + " simulate " + d + "/event.json --seed 2 -o " + d + "/event.jsonl").status, 0);
    const auto piped = sh(cli_path + " simulate " + d + "/event.json --seed 2 | " + cli_path + " detect -p " + d +
                          "/prof.txt 2>/dev/null");
    const auto file = sh(cli_path + " detect -p " + d + "/prof.txt -i " + d + "/event.jsonl 2>/dev/null");
    ASSERT_EQ(piped.status, 0);
    ASSERT_EQ(file.status, 0);
    EXPECT_FALSE(piped.out.empty());
    EXPECT_EQ(piped.out, file.out);
    // the same run appended to a log file
    ASSERT_EQ(sh(cli_path + " detect -p " + d + "/prof.txt -i " + d + "/event.jsonl -l " + d +
                 "/alerts.log 2>/dev/null")
                  .status,
              0);
    EXPECT_EQ(slurp(dir / "alerts.log"), file.out);
    const auto rep = sh(cli_path + " report " + d + "/alerts.log");
    EXPECT_EQ(rep.status, 0);
    EXPECT_NE(rep.out.find("skipped=0"), std::string::npos);
}
