#include "jtbf/channel.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace jtbf;

TEST(Channel, PathlossFormula) {
    EXPECT_NEAR(pathloss_db(1.0), 145.4, 1e-12);
    EXPECT_NEAR(pathloss_db(0.5), 134.111, 1e-3);
    EXPECT_NEAR(pathloss_db(0.1), 107.9, 1e-12);
    EXPECT_THROW(pathloss_db(0.0), Error);
    EXPECT_THROW(pathloss_db(-1.0), Error);
}

TEST(Channel, ZeroErrorRadiusGivesExactEstimates) {
    const NetworkScenario sc = build_scenario({{"radio", {{"csi_error_radius", 0.0}}}});
    const ChannelSet ch = generate_channels(sc, 3);
    EXPECT_EQ((ch.h_true - ch.h_est).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Channel, DeterministicPerSeed) {
    const NetworkScenario sc = build_scenario();
    const ChannelSet a = generate_channels(sc, 9);
    const ChannelSet b = generate_channels(sc, 9);
    EXPECT_TRUE(a.h_true == b.h_true);
    EXPECT_TRUE(a.h_est == b.h_est);
    EXPECT_TRUE(a.large_scale == b.large_scale);
    const ChannelSet c = generate_channels(sc, 10);
    EXPECT_FALSE(a.h_est == c.h_est);
}

TEST(Channel, LargeScaleMatchesLinkBudget) {
    const NetworkScenario sc = build_scenario();
    const ChannelSet ch = generate_channels(sc, 4);
    for (int k = 0; k < sc.dims.n_bs(); ++k)
        for (int u = 0; u < sc.dims.n_ues(); ++u) {
            const double d_km = distance(ch.geometry.bs_positions[k], ch.geometry.ue_positions[u]) / 1000.0;
            const double expected = 5.0 - (145.4 + 37.5 * std::log10(d_km)) + ch.shadowing_db(k, u);
            EXPECT_NEAR(ch.large_scale_db(k, u), expected, 1e-9);
        }
}

// Normalized small-scale part and normalized error, entry by entry, over many drops.
namespace {
struct Samples {
    std::vector<cd> fading;
    std::vector<CVec> error;
};

Samples collect(int min_entries) {
    const NetworkScenario sc = build_scenario();
    Samples s;
    for (std::uint64_t seed = 1; static_cast<int>(s.fading.size()) < min_entries; ++seed) {
        const ChannelSet ch = generate_channels(sc, seed);
        for (int k = 0; k < sc.dims.n_bs(); ++k)
            for (int u = 0; u < sc.dims.n_ues(); ++u) {
                const CVec est = ch.link_est(k, u) / ch.large_scale(k, u);
                const CVec err = (ch.link_true(k, u) - ch.link_est(k, u)) / ch.large_scale(k, u);
                for (Eigen::Index a = 0; a < est.size(); ++a) s.fading.push_back(est(a));
                s.error.push_back(err);
            }
    }
    return s;
}
}  // namespace

TEST(Channel, FadingHasUnitVariance) {
    const Samples s = collect(100000);
    double var = 0.0;
    for (cd z : s.fading) var += std::norm(z);
    var /= static_cast<double>(s.fading.size());
    EXPECT_GE(var, 0.99);
    EXPECT_LE(var, 1.01);
}

TEST(Channel, ErrorCovarianceIsTenthOfIdentity) {
    const Samples s = collect(4 * 100000);
    const Eigen::Index nt = s.error.front().size();
    CMat cov = CMat::Zero(nt, nt);
    for (const CVec& e : s.error) cov += e * e.adjoint();
    cov /= static_cast<double>(s.error.size());
    for (Eigen::Index i = 0; i < nt; ++i)
        for (Eigen::Index j = 0; j < nt; ++j) {
            const double target = i == j ? 0.1 : 0.0;
            EXPECT_NEAR(std::abs(cov(i, j) - target), 0.0, 0.02 * 0.1) << i << "," << j;
        }
}

TEST(Channel, ApplyCsiErrorZeroCovarianceIsIdentity) {
    Rng rng = make_rng(1, 1);
    const CVec h = complex_normal_vector(rng, 4);
    EXPECT_TRUE(apply_csi_error(h, CMat::Zero(4, 4), std::uint64_t{5}) == h);
}

TEST(Channel, ApplyCsiErrorVariance) {
    Rng rng = make_rng(2, 1);
    const int n = 100000;
    double var_unit = 0.0, mse = 0.0;
    const CVec zero = CVec::Zero(4);
    const CMat q1 = CMat::Identity(4, 4);
    const CMat q01 = 0.1 * CMat::Identity(4, 4);
    for (int i = 0; i < n; ++i) {
        var_unit += apply_csi_error(zero, q1, rng).squaredNorm() / 4.0;
        mse += apply_csi_error(zero, q01, rng).squaredNorm() / 4.0;
    }
    EXPECT_NEAR(var_unit / n, 1.0, 0.02);
    EXPECT_NEAR(mse / n, 0.1, 0.002);
}

TEST(Channel, ApplyCsiErrorRejectsNonPsd) {
    CMat q = CMat::Identity(2, 2);
    q(1, 1) = -0.5;
    EXPECT_THROW(apply_csi_error(CVec::Zero(2), q, std::uint64_t{1}), Error);
    CMat nh = CMat::Identity(2, 2);
    nh(0, 1) = cd(0.0, 1.0);
    EXPECT_THROW(apply_csi_error(CVec::Zero(2), nh, std::uint64_t{1}), Error);
}

TEST(Channel, FreshDrawsHaveExpectedErrorEnergy) {
    const NetworkScenario sc = build_scenario();
    const ChannelSet ch = generate_channels(sc, 6);
    Rng rng = make_rng(6, 77);
    const int n = 100000;
    RMat acc = RMat::Zero(sc.dims.n_bs(), sc.dims.n_ues());
    for (int i = 0; i < n; ++i) {
        const CMat h = sample_true_channels(ch, rng);
        for (int k = 0; k < sc.dims.n_bs(); ++k)
            for (int u = 0; u < sc.dims.n_ues(); ++u)
                acc(k, u) += (h.col(u).segment(k * 4, 4) - ch.link_est(k, u)).squaredNorm();
    }
    for (int k = 0; k < sc.dims.n_bs(); ++k)
        for (int u = 0; u < sc.dims.n_ues(); ++u) {
            const double expected = ch.large_scale(k, u) * ch.large_scale(k, u) * 0.1 * 4.0;
            EXPECT_NEAR(acc(k, u) / n / expected, 1.0, 0.03);
        }
}

TEST(Channel, CsvDumpHasOneRowPerAntenna) {
    const NetworkScenario sc = build_scenario();
    const ChannelSet ch = generate_channels(sc, 2);
    std::ostringstream os;
    write_channels_csv(os, ch);
    const std::string s = os.str();
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 9 * 3 * 4);
}
