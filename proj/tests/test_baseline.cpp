#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fuzzdiag/baseline.hpp"
#include "oracles.hpp"

using namespace fuzzdiag;

namespace {

FeatureSample at(double ts, double v, ModuleKind m = ModuleKind::IpCount) { return {m, ts, v}; }

std::string dump(const std::vector<BaselineProfile>& ps) {
    std::ostringstream os;
    write_profiles(os, ps);
    return os.str();
}

std::vector<BaselineProfile> parse(const std::string& s) {
    std::istringstream is(s);
    return read_profiles(is);
}

}  // namespace

TEST(SurveyUpdate, TwoPointMean) {
    BaselineProfile p(ModuleKind::IpCount);
    p.survey_update(at(100, 10));
    EXPECT_TRUE(p.slot_for(100).low_confidence());
    EXPECT_EQ(p.slot_for(100).variance(), 0.0);
    p.survey_update(at(200, 20));
    EXPECT_EQ(p.slot_for(100).mean, 15.0);
    EXPECT_EQ(p.slot_for(100).n, 2u);
    EXPECT_EQ(p.slot_for(100).variance(), 50.0);
    EXPECT_FALSE(p.slot_for(100).low_confidence());
}

TEST(SurveyUpdate, ModuleMismatch) {
    BaselineProfile p(ModuleKind::IpCount);
    EXPECT_THROW(p.survey_update(at(0, 1, ModuleKind::IpxCount)), ValidationError);
    EXPECT_THROW(p.normalize(at(0, 1, ModuleKind::IpxCount)), ValidationError);
    EXPECT_THROW(p.survey_update(at(0, NAN)), ValidationError);
}

TEST(SurveyUpdate, MatchesTwoPassReference) {
    std::mt19937_64 rng(123);
    std::lognormal_distribution<double> d(5.0, 0.7);
    std::vector<double> xs;
    BaselineProfile p(ModuleKind::BytesPerSec);
    for (int i = 0; i < 1000; ++i) {
        xs.push_back(d(rng));
        p.survey_update(at(86400.0 * i + 60, xs.back(), ModuleKind::BytesPerSec));
    }
    const auto [mean, var] = oracle::two_pass(xs);
    const auto& s = p.slot_for(60);
    EXPECT_EQ(s.n, 1000u);
    EXPECT_NEAR(s.mean, mean, 1e-9);
    EXPECT_NEAR(s.variance(), var, 1e-9 * var);
    EXPECT_EQ(p.covered_slots(), 1u);
}

TEST(SurveyUpdate, MeanOrderIndependent) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 500.0);
    std::vector<double> xs(400);
    for (auto& x : xs) x = u(rng);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(xs.begin(), xs.end(), rng);
        SlotStats a;
        for (double x : xs) a.add(x);
        std::shuffle(xs.begin(), xs.end(), rng);
        SlotStats b;
        for (double x : xs) b.add(x);
        ASSERT_NEAR(a.mean, b.mean, 1e-9);
        ASSERT_NEAR(a.variance(), b.variance(), 1e-6);
    }
}

TEST(SlotIndex, DailyAndWeekly) {
    BaselineProfile d(ModuleKind::IpCount);
    EXPECT_EQ(d.slots().size(), 48u);
    EXPECT_EQ(d.slot_index(0), 0u);
    EXPECT_EQ(d.slot_index(1799.999), 0u);
    EXPECT_EQ(d.slot_index(1800), 1u);
    EXPECT_EQ(d.slot_index(86399.9), 47u);
    EXPECT_EQ(d.slot_index(86400 * 5 + 3600), 2u);

    BaselineProfile w(ModuleKind::IpCount, 1800, true);
    EXPECT_EQ(w.slots().size(), 48u * 7);
    EXPECT_EQ(w.slot_index(86400 * 2 + 1800), 48u * 2 + 1);
    EXPECT_EQ(w.slot_index(86400 * 7), 0u);

    BaselineProfile off(ModuleKind::IpCount, 3600, false, 1.0, 8.0);
    EXPECT_EQ(off.slot_index(3600.0 * 23), 7u);
}

TEST(SlotIndex, RejectsBadSlotLen) {
    EXPECT_THROW(BaselineProfile(ModuleKind::IpCount, 7000), ValidationError);
    EXPECT_THROW(BaselineProfile(ModuleKind::IpCount, 0), ValidationError);
    EXPECT_THROW(BaselineProfile(ModuleKind::IpCount, 1800.5), ValidationError);
    EXPECT_THROW(BaselineProfile(ModuleKind::IpCount, 1800, false, 0.0), ValidationError);
}

TEST(Normalize, Examples) {
    BaselineProfile p(ModuleKind::IpCount);
    p.survey_update(at(0, 100));
    EXPECT_EQ(p.normalize(at(10, 150)).ratio, 1.5);
    EXPECT_EQ(p.normalize(at(10, 0)).ratio, 0.0);
    EXPECT_TRUE(p.normalize(at(10, 0)).low_confidence);

    BaselineProfile z(ModuleKind::IpCount);
    z.survey_update(at(0, 0));
    EXPECT_EQ(z.normalize(at(10, 100)).ratio, 100.0);
}

TEST(Normalize, ColdStart) {
    BaselineProfile p(ModuleKind::IpCount);
    p.survey_update(at(0, 100));
    EXPECT_THROW(p.normalize(at(1800, 100)), ColdStart);
}

TEST(Normalize, MeanValuedSampleIsExactlyOne) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(2.0, 1e6);
    for (int i = 0; i < 200; ++i) {
        BaselineProfile p(ModuleKind::Utilization);
        for (int k = 0; k < 1 + i % 17; ++k) p.survey_update(at(k * 86400.0, u(rng), ModuleKind::Utilization));
        const double mean = p.slot_for(0).mean;
        ASSERT_EQ(p.normalize(at(5, mean, ModuleKind::Utilization)).ratio, 1.0);
    }
}

TEST(Normalize, ZScore) {
    BaselineProfile p(ModuleKind::IpCount);
    for (double v : {90.0, 110.0, 90.0, 110.0}) p.survey_update(at(0, v));
    const double sd = std::sqrt(p.slot_for(0).variance());
    EXPECT_NEAR(p.normalize(at(0, 100 + 2 * sd)).zscore, 2.0, 1e-12);
}

TEST(ProfileFile, RoundTripOneDay) {
    auto set = ProfileSet::fresh();
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1000.0);
    for (int m = 0; m < 1440; ++m)
        for (auto k : all_modules) set[k].survey_update(at(1699920000.0 + 60.0 * m, u(rng) / 3.0, k));
    const auto text = dump(set.profiles);
    const auto back = ProfileSet::from(parse(text));
    EXPECT_TRUE(back == set);
    EXPECT_EQ(dump(back.profiles), text);

    const std::string path = ::testing::TempDir() + "/one.profile";
    save_profile(set[ModuleKind::IpxCount], path);
    EXPECT_TRUE(load_profile(path) == set[ModuleKind::IpxCount]);
    save_profiles(set.profiles, path);
    EXPECT_THROW(load_profile(path), ValidationError);
    EXPECT_TRUE(ProfileSet::from(load_profiles(path)) == set);
}

TEST(ProfileFile, RoundTripWeeklyWithOffset) {
    BaselineProfile p(ModuleKind::IpxCount, 900, true, 0.25, -5.5);
    p.survey_update(at(12345.678, 0.1 + 0.2, ModuleKind::IpxCount));
    const auto back = parse(dump({p}));
    ASSERT_EQ(back.size(), 1u);
    EXPECT_TRUE(back[0] == p);
}

TEST(ProfileFile, TruncatedIsCorrupt) {
    auto set = ProfileSet::fresh();
    set[ModuleKind::IpCount].survey_update(at(0, 5));
    const auto text = dump(set.profiles);
    for (std::size_t cut : {text.size() / 3, text.size() / 2, text.size() - 5}) {
        const auto nl = text.rfind('\n', cut);
        EXPECT_THROW(parse(text.substr(0, nl + 1)), ParseError) << cut;
    }
    EXPECT_THROW(parse(""), ParseError);
}

TEST(ProfileFile, BadSlotLenRejected) {
    std::string text = "fuzzdiag-profile 1\nprofile IpCount 7000 0 1 0 12\n";
    EXPECT_THROW(parse(text), ValidationError);
}

TEST(ProfileFile, VersionAndConsistency) {
    EXPECT_THROW(parse("fuzzdiag-profile 2\n"), ParseError);
    auto text = dump({BaselineProfile(ModuleKind::IpCount, 43200)});
    EXPECT_NO_THROW(parse(text));
    auto neg = text;
    neg.replace(neg.find("slot 0 0 0 0"), 12, "slot 0 2 1 -1");
    EXPECT_THROW(parse(neg), ValidationError);
    auto order = text;
    order.replace(order.find("slot 1 "), 7, "slot 0 ");
    EXPECT_THROW(parse(order), ParseError);
    EXPECT_THROW(ProfileSet::from(parse(text)), ValidationError);
}
