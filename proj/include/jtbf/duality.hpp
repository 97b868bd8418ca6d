#pragma once

// Exact power-minimal downlink beamforming through the virtual uplink:
// fixed-point iteration on the dual variables, MMSE receive directions and
// the linear power-scaling system.
//
// Each UE v has a serving cluster S_v. With g_{v,u} the stacked channel from the
// BSs of S_v to UE u (normalized by the noise standard deviation):
//   Theta_v  = I + sum_u lambda_u g_{v,u} g_{v,u}^H
//   lambda_v = 1 / ((1 + 1/gamma_v) g_{v,v}^H Theta_v^{-1} g_{v,v})
//   w_hat_v  = Theta_v^{-1} g_{v,v}
// For a single-BS cluster this is the per-BS form; for a full cell it is the
// same expression on the stacked cell channel.

#include "jtbf/beamforming.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <limits>

namespace jtbf {

struct DualityOptions {
    double tol = 1e-9;
    int max_iters = 500;
    double cond_warn = 1e12;
};

struct DualState {
    RVec lambda;                    // physical units: lambda_u * noise_power is in watts
    std::vector<CMat> theta;        // per UE cluster, normalized
    std::vector<CVec> w_ul;         // per UE, over its cluster antennas
    std::vector<double> residuals;  // max relative lambda change per iteration
    int iterations = 0;
    bool converged = false;
};

struct ScalingSystem {
    RMat F;
    RVec rhs;
    RVec power_scaling;  // delta per UE
    double rcond = 0.0;
    bool ill_conditioned = false;
};

struct NrJtbfResult {
    BeamformerSet beamformers;
    DualState dual;
    ScalingSystem scaling;
    double dual_power = 0.0;  // sum_u lambda_u * noise_power
};

namespace detail {

/// Cluster channel matrices: cluster[v].col(u) = g_{v,u}.
inline std::vector<CMat> cluster_channels(const CMat& h_norm, const ServingSets& serving, Eigen::Index nt) {
    std::vector<CMat> out;
    out.reserve(serving.size());
    for (const auto& s : serving) out.push_back(gather_rows(h_norm, cluster_rows(s, nt)));
    return out;
}

}  // namespace detail

/// Theta for one cluster given its channel matrix (columns = all UEs).
inline CMat compute_theta(const RVec& lambda, const CMat& g_cluster) {
    CMat theta = g_cluster * lambda.cast<cd>().asDiagonal() * g_cluster.adjoint();
    theta.diagonal().array() += 1.0;
    return theta;
}

/// One fixed-point update for every UE.
inline RVec update_lambda(const std::vector<CMat>& theta, const std::vector<CMat>& g, const RVec& gamma) {
    RVec out(static_cast<Eigen::Index>(g.size()));
    for (std::size_t v = 0; v < g.size(); ++v) {
        const auto iv = static_cast<Eigen::Index>(v);
        const CVec gvv = g[v].col(iv);
        const Eigen::LLT<CMat> llt(theta[v]);
        const double a = std::real(gvv.dot(llt.solve(gvv)));
        if (!(a > 0.0)) throw Error("UE " + std::to_string(v) + " has an all-zero serving channel");
        out(iv) = 1.0 / ((1.0 + 1.0 / gamma(iv)) * a);
    }
    return out;
}

inline CVec mmse_receive_beamformer(const CMat& theta, const CVec& g_own) {
    return Eigen::LLT<CMat>(theta).solve(g_own);
}

/// F delta = 1 in normalized units (noise power 1).
inline ScalingSystem build_scaling_system(const std::vector<CVec>& w_ul, const std::vector<CMat>& g, const RVec& gamma,
                                          double cond_warn = 1e12) {
    const auto n = static_cast<Eigen::Index>(g.size());
    ScalingSystem sys;
    sys.F.resize(n, n);
    for (Eigen::Index u = 0; u < n; ++u) {
        for (Eigen::Index v = 0; v < n; ++v) {
            const double c = std::norm(g[static_cast<std::size_t>(v)].col(u).dot(w_ul[static_cast<std::size_t>(v)]));
            sys.F(u, v) = (u == v) ? c / gamma(u) : -c;
        }
    }
    sys.rhs = RVec::Ones(n);
    const Eigen::PartialPivLU<RMat> lu(sys.F);
    sys.rcond = lu.rcond();
    sys.ill_conditioned = !(sys.rcond * cond_warn > 1.0);
    sys.power_scaling = lu.solve(sys.rhs);
    return sys;
}

/// Minimum-power beamformers meeting every SINR target on `h_design`, for arbitrary
/// serving clusters. NR-JTBF uses full-cell clusters, NR-NJTBF single-BS clusters.
inline NrJtbfResult solve_duality(const CMat& h_design, const ServingSets& serving, const RVec& gamma,
                                  double noise_power, const Dimensions& dm, const DualityOptions& opt = {}) {
    const Eigen::Index nt = dm.n_tx_antennas;
    const auto nu = static_cast<Eigen::Index>(serving.size());
    const double sigma = std::sqrt(noise_power);
    const std::vector<CMat> g = detail::cluster_channels(h_design / sigma, serving, nt);

    NrJtbfResult res;
    auto& bf = res.beamformers;
    bf.serving = serving;
    bf.w = CMat::Zero(h_design.rows(), nu);
    auto fail = [&](SolveStatus st, std::string msg) {
        bf.status = st;
        bf.message = std::move(msg);
        finalize_powers(bf, dm, h_design, noise_power);
        return res;
    };

    RVec lambda = RVec::Ones(nu);
    std::vector<CMat> theta(static_cast<std::size_t>(nu));
    auto refresh_theta = [&] {
        for (Eigen::Index v = 0; v < nu; ++v) theta[static_cast<std::size_t>(v)] = compute_theta(lambda, g[static_cast<std::size_t>(v)]);
    };

    auto& dual = res.dual;
    try {
        for (int it = 0; it < opt.max_iters; ++it) {
            refresh_theta();
            const RVec next = update_lambda(theta, g, gamma);
            const double r = ((next - lambda).cwiseAbs().array() / lambda.array()).maxCoeff();
            lambda = next;
            dual.residuals.push_back(r);
            dual.iterations = it + 1;
            if (!std::isfinite(r) || !lambda.allFinite() || lambda.maxCoeff() > 1e300)
                return fail(SolveStatus::infeasible, "dual variables diverge");
            if (r < opt.tol) {
                dual.converged = true;
                break;
            }
        }
    } catch (const Error& e) {
        return fail(SolveStatus::infeasible, e.what());
    }

    refresh_theta();
    dual.lambda = lambda / noise_power;
    dual.theta = theta;
    dual.w_ul.resize(static_cast<std::size_t>(nu));
    for (Eigen::Index v = 0; v < nu; ++v) {
        const auto sv = static_cast<std::size_t>(v);
        dual.w_ul[sv] = mmse_receive_beamformer(theta[sv], g[sv].col(v));
    }
    res.dual_power = lambda.sum();

    res.scaling = build_scaling_system(dual.w_ul, g, gamma, opt.cond_warn);
    const RVec& delta = res.scaling.power_scaling;
    if (!delta.allFinite() || res.scaling.rcond == 0.0) return fail(SolveStatus::infeasible, "singular scaling system");
    if (delta.minCoeff() <= 0.0) return fail(SolveStatus::infeasible, "negative power scaling");

    for (Eigen::Index v = 0; v < nu; ++v) {
        const auto rows = cluster_rows(serving[static_cast<std::size_t>(v)], nt);
        const CVec wv = std::sqrt(delta(v)) * dual.w_ul[static_cast<std::size_t>(v)];
        for (std::size_t i = 0; i < rows.size(); ++i) bf.w(rows[i], v) = wv(static_cast<Eigen::Index>(i));
    }
    bf.status = dual.converged ? SolveStatus::optimal : SolveStatus::max_iter;
    if (!dual.converged) bf.message = "fixed point not converged, residual " + std::to_string(dual.residuals.back());
    if (res.scaling.ill_conditioned) bf.message += (bf.message.empty() ? "" : "; ") + std::string("ill-conditioned scaling system");
    finalize_powers(bf, dm, h_design, noise_power);
    return res;
}

/// NR-JTBF: every BS of the UE's cell transmits jointly.
inline NrJtbfResult solve_nr_jtbf(const ChannelSet& ch, const QosSpec& qos, const DualityOptions& opt = {}) {
    const RVec gamma = Eigen::Map<const RVec>(qos.sinr_target.data(), static_cast<Eigen::Index>(qos.sinr_target.size()));
    return solve_duality(ch.h_est, jt_serving_sets(ch.dims), gamma, ch.noise_power, ch.dims, opt);
}

}  // namespace jtbf
