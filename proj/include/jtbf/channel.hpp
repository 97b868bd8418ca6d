#pragma once

// True and estimated channels with distance pathloss, lognormal shadowing and
// Gaussian CSI error applied to the small-scale part.

#include "jtbf/common.hpp"
#include "jtbf/scenario.hpp"

#include <Eigen/Eigenvalues>

#include <iomanip>
#include <ostream>

namespace jtbf {

inline double pathloss_db(double distance_km, double intercept_db = 145.4, double slope_db = 37.5) {
    if (!(distance_km > 0.0)) throw Error("pathloss_db: distance must be positive");
    return intercept_db + slope_db * std::log10(distance_km);
}

/// Channels of every (BS, UE) pair. Column u of `h_true` / `h_est` is UE u's
/// network-wide channel: BS k occupies rows [k*N_t, (k+1)*N_t).
struct ChannelSet {
    Dimensions dims;
    Geometry geometry;
    CMat h_true;
    CMat h_est;
    RMat large_scale;   // linear amplitude per (BS, UE)
    RMat shadowing_db;  // per (BS, UE)
    double csi_error_radius = 0.0;  // every error covariance is radius^2 * I on the normalized channel
    double noise_power = 1.0;

    Eigen::Index n_ant() const { return dims.n_tx_antennas; }

    auto link_true(int k, int u) const { return h_true.col(u).segment(Eigen::Index(k) * n_ant(), n_ant()); }
    auto link_est(int k, int u) const { return h_est.col(u).segment(Eigen::Index(k) * n_ant(), n_ant()); }

    CMat error_cov(int /*k*/, int /*u*/) const {
        return CMat::Identity(n_ant(), n_ant()) * (csi_error_radius * csi_error_radius);
    }

    /// Standard deviation of each entry of the effective error on link (k, u).
    double effective_error_std(int k, int u) const { return large_scale(k, u) * csi_error_radius; }

    /// Large-scale gain in dB: antenna gain - pathloss + shadowing.
    double large_scale_db(int k, int u) const { return 20.0 * std::log10(large_scale(k, u)); }
};

/// Channels for a given UE placement.
inline ChannelSet generate_channels(const NetworkScenario& sc, const Geometry& geometry, std::uint64_t seed) {
    const Dimensions& dm = sc.dims;
    const int nb = dm.n_bs();
    const int nu = dm.n_ues();
    const Eigen::Index nt = dm.n_tx_antennas;
    if (static_cast<int>(geometry.ue_positions.size()) != nu) throw Error("generate_channels: UEs not placed");

    ChannelSet ch;
    ch.dims = dm;
    ch.geometry = geometry;
    ch.csi_error_radius = sc.radio.csi_error_radius;
    ch.noise_power = sc.radio.noise_power;
    ch.h_true.resize(nb * nt, nu);
    ch.h_est.resize(nb * nt, nu);
    ch.large_scale.resize(nb, nu);
    ch.shadowing_db.resize(nb, nu);

    Rng rng_shadow = make_rng(seed, 1);
    Rng rng_small = make_rng(seed, 2);
    Rng rng_err = make_rng(seed, 3);
    std::normal_distribution<double> shadow(0.0, 1.0);

    for (int u = 0; u < nu; ++u) {
        for (int k = 0; k < nb; ++k) {
            const double d_km = distance(geometry.bs_positions[static_cast<std::size_t>(k)],
                                         geometry.ue_positions[static_cast<std::size_t>(u)]) /
                                1000.0;
            const double sh = sc.radio.shadowing_sigma_db * shadow(rng_shadow);
            const double gain_db = sc.radio.antenna_gain_db -
                                   pathloss_db(d_km, sc.radio.pathloss_intercept_db, sc.radio.pathloss_slope_db) +
                                   sh;
            const double amp = std::pow(10.0, gain_db / 20.0);
            ch.shadowing_db(k, u) = sh;
            ch.large_scale(k, u) = amp;
            const CVec small = complex_normal_vector(rng_small, nt);
            const CVec err = complex_normal_vector(rng_err, nt) * sc.radio.csi_error_radius;
            ch.h_est.col(u).segment(k * nt, nt) = amp * small;
            ch.h_true.col(u).segment(k * nt, nt) = amp * (small + err);
        }
    }
    return ch;
}

/// Places UEs and draws channels from a single seed.
inline ChannelSet generate_channels(const NetworkScenario& sc, std::uint64_t seed) {
    return generate_channels(sc, place_ues(sc, seed), seed);
}

/// Q^{1/2} for a Hermitian PSD covariance; rejects matrices with negative eigenvalues.
inline CMat psd_sqrt(const CMat& q) {
    if (q.rows() != q.cols()) throw Error("covariance must be square");
    if ((q - q.adjoint()).norm() > 1e-12 * std::max(1.0, q.norm())) throw Error("covariance must be Hermitian");
    Eigen::SelfAdjointEigenSolver<CMat> es(q);
    const RVec ev = es.eigenvalues();
    const double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -tol) throw Error("covariance is not positive semidefinite");
    return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
}

/// One draw of h_est + Q^{1/2} v with v ~ CN(0, I).
inline CVec apply_csi_error(const CVec& h_est, const CMat& error_cov, Rng& rng) {
    if (error_cov.rows() != h_est.size()) throw Error("apply_csi_error: dimension mismatch");
    return h_est + psd_sqrt(error_cov) * complex_normal_vector(rng, h_est.size());
}

inline CVec apply_csi_error(const CVec& h_est, const CMat& error_cov, std::uint64_t seed) {
    Rng rng = make_rng(seed, 4);
    return apply_csi_error(h_est, error_cov, rng);
}

/// Fresh true-channel realization around the estimates: every link gets
/// large_scale * radius * v added, v ~ CN(0, I).
inline CMat sample_true_channels(const ChannelSet& ch, Rng& rng) {
    CMat h = ch.h_est;
    const Eigen::Index nt = ch.n_ant();
    for (int u = 0; u < ch.h_est.cols(); ++u)
        for (int k = 0; k < ch.large_scale.rows(); ++k)
            h.col(u).segment(k * nt, nt) += ch.effective_error_std(k, u) * complex_normal_vector(rng, nt);
    return h;
}

/// CSV dump: one row per (BS, UE, antenna).
inline void write_channels_csv(std::ostream& os, const ChannelSet& ch) {
    os << "bs,ue,antenna,large_scale_db,est_re,est_im,true_re,true_im\n";
    os << std::setprecision(17);
    const Eigen::Index nt = ch.n_ant();
    for (int k = 0; k < ch.large_scale.rows(); ++k)
        for (int u = 0; u < ch.large_scale.cols(); ++u)
            for (Eigen::Index a = 0; a < nt; ++a) {
                const cd e = ch.h_est(k * nt + a, u);
                const cd t = ch.h_true(k * nt + a, u);
                os << k << ',' << u << ',' << a << ',' << ch.large_scale_db(k, u) << ',' << e.real() << ','
                   << e.imag() << ',' << t.real() << ',' << t.imag() << '\n';
            }
}

}  // namespace jtbf
