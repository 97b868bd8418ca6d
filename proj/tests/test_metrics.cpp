#include "jtbf/duality.hpp"
#include "jtbf/metrics.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace jtbf;

TEST(Cdf, SmallSample) {
    const auto cdf = empirical_cdf({3.0, 1.0, 2.0});
    ASSERT_EQ(cdf.size(), 3u);
    EXPECT_DOUBLE_EQ(cdf_at(cdf, 2.0), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(cdf_at(cdf, 0.5), 0.0);
    EXPECT_DOUBLE_EQ(cdf_at(cdf, 1.999), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(cdf_at(cdf, 10.0), 1.0);
}

TEST(Cdf, ConstantSampleIsASingleStep) {
    const auto cdf = empirical_cdf(std::vector<double>(7, 4.2));
    ASSERT_EQ(cdf.size(), 1u);
    EXPECT_EQ(cdf_at(cdf, 4.1), 0.0);
    EXPECT_EQ(cdf_at(cdf, 4.2), 1.0);
}

TEST(Cdf, MatchesRankCounting) {
    Rng rng = make_rng(8, 8);
    std::normal_distribution<double> nd;
    std::vector<double> xs(10000);
    for (double& x : xs) x = std::round(nd(rng) * 20.0) / 20.0;  // force ties
    const auto cdf = empirical_cdf(xs);
    for (double q : {-2.0, -0.5, 0.0, 0.05, 1.3, 3.0}) {
        const auto count = std::count_if(xs.begin(), xs.end(), [&](double x) { return x <= q; });
        EXPECT_DOUBLE_EQ(cdf_at(cdf, q), static_cast<double>(count) / xs.size());
    }
}

TEST(Cdf, EmptyInputThrows) { EXPECT_THROW(empirical_cdf({}), Error); }

TEST(Evaluate, PerfectCsiMeetsTargetsExactly) {
    const NetworkScenario sc = build_scenario({{"radio", {{"csi_error_radius", 0.0}}}});
    const ChannelSet ch = generate_channels(sc, 4);
    const NrJtbfResult nr = solve_nr_jtbf(ch, sc.qos);
    ASSERT_TRUE(nr.beamformers.ok());
    BeamformerSet bf = nr.beamformers;
    // Nudge up so that round-off does not decide the >= comparison.
    bf.w *= std::sqrt(1.0 + 1e-9);
    const TrialRecord r = evaluate(bf, ch.h_true, sc.qos, ch.noise_power);
    for (Eigen::Index u = 0; u < r.sinr.size(); ++u) {
        EXPECT_TRUE(r.satisfied[static_cast<std::size_t>(u)]);
        EXPECT_NEAR(r.sinr(u) / sc.qos.sinr_target[0], 1.0, 1e-6);
    }
    EXPECT_NEAR(r.spectral_efficiency, sc.dims.n_ues() * std::log2(1.0 + sc.qos.sinr_target[0]), 1e-5);
}

TEST(Evaluate, ZeroBeamformers) {
    const NetworkScenario sc = build_scenario();
    const ChannelSet ch = generate_channels(sc, 1);
    BeamformerSet bf;
    bf.w = CMat::Zero(ch.h_est.rows(), sc.dims.n_ues());
    bf.per_bs_power = RVec::Zero(sc.dims.n_bs());
    const TrialRecord r = evaluate(bf, ch.h_true, sc.qos, ch.noise_power);
    EXPECT_EQ(r.spectral_efficiency, 0.0);
    EXPECT_EQ(r.power_efficiency, 0.0);
    for (bool s : r.satisfied) EXPECT_FALSE(s);
}

TEST(Evaluate, PowerEfficiencyScalesWithUnits) {
    const NetworkScenario sc = build_scenario();
    const ChannelSet ch = generate_channels(sc, 5);
    const NrJtbfResult nr = solve_nr_jtbf(ch, sc.qos);
    const TrialRecord r = evaluate(nr.beamformers, ch.h_true, sc.qos, ch.noise_power);
    EXPECT_NEAR(r.power_efficiency, r.spectral_efficiency / r.total_power, 1e-12 * r.power_efficiency);
    // Same ratio in bits/s/Hz per mW is exactly 1000 times smaller.
    EXPECT_NEAR(r.spectral_efficiency / (r.total_power * 1e3) * 1e3, r.power_efficiency, 1e-9 * r.power_efficiency);
}

TEST(Evaluate, CapViolationFlag) {
    const NetworkScenario sc = build_scenario();
    const ChannelSet ch = generate_channels(sc, 6);
    const NrJtbfResult nr = solve_nr_jtbf(ch, sc.qos);
    const double peak = nr.beamformers.per_bs_power.maxCoeff();
    EXPECT_FALSE(evaluate(nr.beamformers, ch.h_true, sc.qos, ch.noise_power, peak).cap_violated);
    EXPECT_TRUE(evaluate(nr.beamformers, ch.h_true, sc.qos, ch.noise_power, peak * 0.99).cap_violated);
}

TEST(Satisfaction, EqualsOneMinusCdfBelowTarget) {
    const NetworkScenario sc = build_scenario();
    std::vector<double> sinr_db;
    int satisfied = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const ChannelSet ch = generate_channels(sc, seed);
        const TrialRecord r = evaluate(solve_nr_jtbf(ch, sc.qos).beamformers, ch.h_true, sc.qos, ch.noise_power);
        for (Eigen::Index u = 0; u < r.sinr.size(); ++u) {
            sinr_db.push_back(r.sinr(u));
            satisfied += r.satisfied[static_cast<std::size_t>(u)];
        }
    }
    const auto cdf = empirical_cdf(sinr_db);
    const double gamma = sc.qos.sinr_target[0];
    const double below = cdf_at(cdf, std::nextafter(gamma, 0.0));
    EXPECT_DOUBLE_EQ(1.0 - below, static_cast<double>(satisfied) / sinr_db.size());
}

TEST(MonteCarlo, PerfectCsiIsDeterministic) {
    const NetworkScenario sc = build_scenario({{"radio", {{"csi_error_radius", 0.0}}}});
    const ChannelSet ch = generate_channels(sc, 7);
    BeamformerSet bf = solve_nr_jtbf(ch, sc.qos).beamformers;
    bf.w *= std::sqrt(1.0 + 1e-9);
    const RVec s = mc_satisfaction(bf, ch, sc.qos, 50, 1);
    EXPECT_EQ(s.minCoeff(), 1.0);
}

TEST(Reductions, OrderedSumAndQuantile) {
    EXPECT_EQ(ordered_sum({1e16, 1.0, -1e16, 1.0}), ordered_sum({1.0, -1e16, 1.0, 1e16}));
    EXPECT_DOUBLE_EQ(quantile({4.0, 1.0, 3.0, 2.0}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile({4.0, 1.0, 3.0, 2.0}, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile({4.0, 1.0, 3.0, 2.0}, 1.0), 4.0);
    EXPECT_TRUE(std::isnan(quantile({}, 0.5)));
}
