#pragma once

// Chance-constrained joint-transmission design: Bernstein-type safe
// approximation of the outage constraints, semidefinite relaxation, and
// rank-one recovery by principal eigenvectors or Gaussian randomization.
//
// UE u's beamformer covariance W_u lives on its serving cluster (all BSs of its
// cell). For UE u and cell l, with A_l = [l == cell(u)] W_u / gamma_u - sum_{v in U_l, v != u} W_v,
// g_l the estimated stacked channel from cell l and E_l the per-entry error
// standard deviations, the received SINR margin under error E_l v_l is
//   sum_l d_l + v_l^H Omega_l v_l + 2 Re(omega_l^H v_l),
//   Omega_l = E_l A_l E_l,  omega_l = E_l A_l g_l,  d_l = g_l^H A_l g_l.
// All quantities are normalized by the noise standard deviation.

#include "jtbf/beamforming.hpp"
#include "jtbf/conic/program.hpp"

#include <Eigen/Eigenvalues>

namespace jtbf {

/// Symbolic Bernstein terms of one UE: per cell, the signed combination of W's
/// forming A_l, the error scaling and the estimated channel.
struct BernsteinBlock {
    int cell = 0;
    std::vector<std::pair<int, double>> coefs;  // (UE whose W enters, coefficient)
    RVec error_std;                             // diagonal of E_l, normalized
    CVec channel;                               // g_l, normalized
};

struct BernsteinTerms {
    int ue = 0;
    double tau = 0.0;
    std::vector<BernsteinBlock> blocks;
};

/// Numeric Bernstein terms at fixed W values.
struct BernsteinValues {
    std::vector<CMat> omega_mat;
    std::vector<CVec> omega_vec;
    std::vector<double> d;
};

inline std::vector<BernsteinTerms> build_bernstein_terms(const ChannelSet& ch, const QosSpec& qos) {
    const Dimensions& dm = ch.dims;
    const Eigen::Index nt = dm.n_tx_antennas;
    const double sigma = std::sqrt(ch.noise_power);
    std::vector<BernsteinTerms> out;
    for (int u = 0; u < dm.n_ues(); ++u) {
        BernsteinTerms t;
        t.ue = u;
        t.tau = qos.bernstein_tau[static_cast<std::size_t>(u)];
        for (int l = 0; l < dm.n_cells; ++l) {
            BernsteinBlock b;
            b.cell = l;
            for (int j = 0; j < dm.n_ues_per_cell; ++j) {
                const int v = dm.flatten_ue(l, j);
                if (v == u) b.coefs.emplace_back(v, 1.0 / qos.sinr_target[static_cast<std::size_t>(u)]);
                else b.coefs.emplace_back(v, -1.0);
            }
            b.error_std.resize(dm.n_bs_per_cell * nt);
            b.channel.resize(dm.n_bs_per_cell * nt);
            for (int bb = 0; bb < dm.n_bs_per_cell; ++bb) {
                const int k = dm.flatten_bs(l, bb);
                b.error_std.segment(bb * nt, nt).setConstant(ch.effective_error_std(k, u) / sigma);
                b.channel.segment(bb * nt, nt) = ch.link_est(k, u) / sigma;
            }
            t.blocks.push_back(std::move(b));
        }
        out.push_back(std::move(t));
    }
    return out;
}

/// Evaluates Omega, omega and d for given W values (indexed by UE).
inline BernsteinValues evaluate_bernstein(const BernsteinTerms& t, const std::vector<CMat>& w) {
    BernsteinValues v;
    for (const auto& b : t.blocks) {
        const auto m = b.channel.size();
        CMat a = CMat::Zero(m, m);
        for (const auto& [ue, c] : b.coefs) a += c * w[static_cast<std::size_t>(ue)];
        const CMat e = b.error_std.cast<cd>().asDiagonal();
        v.omega_mat.push_back(e * a * e);
        v.omega_vec.push_back(e * (a * b.channel));
        v.d.push_back(b.channel.dot(a * b.channel).real());
    }
    return v;
}

/// sum_k Tr(Omega_k) - sqrt(2 tau) sqrt(sum_k ||Omega_k||^2 + 2 ||omega_k||^2) - tau lambda^-,
/// lambda^- = max(0, max_k lambda_max(-Omega_k)).
inline double bernstein_lhs(const std::vector<CMat>& omega_mat, const std::vector<CVec>& omega_vec, double tau) {
    double tr = 0.0, sq = 0.0, lminus = 0.0;
    for (const CMat& om : omega_mat) {
        tr += om.trace().real();
        sq += om.squaredNorm();
        if (om.size() == 0) continue;
        Eigen::SelfAdjointEigenSolver<CMat> es(om, Eigen::EigenvaluesOnly);
        lminus = std::max(lminus, -es.eigenvalues()(0));
    }
    for (const CVec& ov : omega_vec) sq += 2.0 * ov.squaredNorm();
    return tr - std::sqrt(2.0 * tau) * std::sqrt(sq) - tau * lminus;
}

/// Deterministic part plus Bernstein bound: the constraint is margin >= 1 (normalized noise).
inline double bernstein_margin(const BernsteinTerms& t, const std::vector<CMat>& w) {
    const BernsteinValues v = evaluate_bernstein(t, w);
    double d = 0.0;
    for (double x : v.d) d += x;
    return d + bernstein_lhs(v.omega_mat, v.omega_vec, t.tau);
}

struct RobustOptions {
    conic::IpmOptions ipm;
    int n_samples = 200;
    double rank_one_tol = 1e-4;
};

struct LiftedSolution {
    std::vector<CMat> w;     // per UE, over its serving cluster
    std::vector<double> x;   // slack per UE
    double objective = 0.0;  // watts
    conic::ConicSolution raw;
    bool ok() const { return raw.optimal(); }
};

namespace detail {

inline bool structurally_psd(const BernsteinBlock& b) {
    for (const auto& [ue, c] : b.coefs)
        if (c < 0.0) return false;
    return true;
}

}  // namespace detail

/// Lifted convex program. Variable v is W of UE v; scalar u is the slack x_u.
inline conic::ConicProgram assemble_robust_program(const std::vector<BernsteinTerms>& terms, const Dimensions& dm) {
    conic::ConicProgram p;
    const Eigen::Index m = dm.cluster_antennas();
    for (int u = 0; u < dm.n_ues(); ++u) {
        p.add_psd(m);
        p.objective.matrix_terms.emplace_back(u, CMat::Identity(m, m));
    }
    for (const auto& t : terms) {
        bool has_error = false;
        for (const auto& b : t.blocks) has_error = has_error || b.error_std.maxCoeff() > 0.0;

        // sum_l Tr(Omega_l) + d_l as a linear functional.
        conic::LinearFunctional mean;
        for (const auto& b : t.blocks) {
            const CMat eg = CMat(b.error_std.cwiseAbs2().cast<cd>().asDiagonal()) + b.channel * b.channel.adjoint();
            for (const auto& [ue, c] : b.coefs) mean.matrix_terms.emplace_back(ue, c * eg);
        }
        if (!has_error) {
            mean.constant = -1.0;
            p.linear.push_back(std::move(mean));
            continue;
        }

        const int x = p.add_scalar();
        const double inv = 1.0 / std::sqrt(2.0 * t.tau);
        conic::SocConstraint soc;
        soc.bound = mean;
        for (auto& [ue, c] : soc.bound.matrix_terms) c *= inv;
        soc.bound.scalar_terms.emplace_back(x, -t.tau * inv);
        soc.bound.constant = -inv;
        for (const auto& b : t.blocks) {
            const CMat e = b.error_std.cast<cd>().asDiagonal();
            conic::AffineHermitian om;
            om.dim = m;
            conic::AffineVector ov;
            ov.dim = m;
            for (const auto& [ue, c] : b.coefs) {
                om.terms.push_back({ue, c, e});
                ov.terms.push_back({ue, std::sqrt(2.0) * c, e, b.channel});
            }
            if (!detail::structurally_psd(b)) {
                conic::AffineHermitian lmi = om;
                lmi.scalar_terms.emplace_back(x, CMat::Identity(m, m));
                p.lmis.push_back(std::move(lmi));
            }
            soc.matrix_parts.push_back(std::move(om));
            soc.vector_parts.push_back(std::move(ov));
        }
        p.socs.push_back(std::move(soc));
    }
    return p;
}

inline LiftedSolution solve_lifted(const std::vector<BernsteinTerms>& terms, const Dimensions& dm,
                                   const conic::IpmOptions& opt = {}) {
    const conic::ConicProgram p = assemble_robust_program(terms, dm);
    LiftedSolution sol;
    sol.raw = conic::solve(p, opt);
    sol.w = sol.raw.psd_values;
    sol.x = sol.raw.scalar_values;
    sol.objective = sol.raw.objective_value;
    return sol;
}

struct RankOneReport {
    bool used_randomization = false;
    int feasible_candidates = 0;
    double lifted_objective = 0.0;
};

struct RobustResult {
    BeamformerSet beamformers;
    LiftedSolution lifted;
    RankOneReport rank_one;
};

namespace detail {

/// Smallest common scale making every UE's Bernstein constraint hold at rank-one
/// covariances alpha * w w^H; the margin is homogeneous of degree one in alpha.
/// Returns a non-positive value if some UE's margin is non-positive.
inline double common_scale(const std::vector<BernsteinTerms>& terms, const std::vector<CVec>& w) {
    std::vector<CMat> ww;
    ww.reserve(w.size());
    for (const CVec& v : w) ww.push_back(v * v.adjoint());
    double alpha = 0.0;
    for (const auto& t : terms) {
        const double q = bernstein_margin(t, ww);
        if (!(q > 0.0)) return -1.0;
        alpha = std::max(alpha, 1.0 / q);
    }
    return alpha;
}

}  // namespace detail

/// Rank-one beamformers from a lifted solution. Principal eigenvectors when every
/// W is numerically rank one, Gaussian randomization otherwise.
inline RobustResult extract_rank_one(const LiftedSolution& lifted, const ChannelSet& ch,
                                     const std::vector<BernsteinTerms>& terms, int n_samples, std::uint64_t seed,
                                     double rank_one_tol = 1e-4) {
    const Dimensions& dm = ch.dims;
    RobustResult res;
    res.lifted = lifted;
    res.rank_one.lifted_objective = lifted.objective;
    auto& bf = res.beamformers;
    bf.serving = jt_serving_sets(dm);
    bf.w = CMat::Zero(ch.h_est.rows(), dm.n_ues());
    const auto nu = static_cast<std::size_t>(dm.n_ues());

    std::vector<CMat> factors(nu);  // W_u = F F^H
    std::vector<CVec> principal(nu);
    bool all_rank_one = true;
    for (std::size_t u = 0; u < nu; ++u) {
        Eigen::SelfAdjointEigenSolver<CMat> es(lifted.w[u]);
        const RVec ev = es.eigenvalues().cwiseMax(0.0);
        const double tr = ev.sum();
        const Eigen::Index top = ev.size() - 1;
        principal[u] = std::sqrt(ev(top)) * es.eigenvectors().col(top);
        factors[u] = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
        if (!(tr > 0.0) || ev(top) / tr < 1.0 - rank_one_tol) all_rank_one = false;
    }

    std::vector<CVec> best;
    double best_power = std::numeric_limits<double>::infinity();
    auto consider = [&](const std::vector<CVec>& cand) {
        const double alpha = detail::common_scale(terms, cand);
        if (!(alpha > 0.0) || !std::isfinite(alpha)) return;
        ++res.rank_one.feasible_candidates;
        double p = 0.0;
        for (const CVec& v : cand) p += alpha * v.squaredNorm();
        if (p < best_power) {
            best_power = p;
            best = cand;
            for (CVec& v : best) v *= std::sqrt(alpha);
        }
    };

    consider(principal);
    if (!all_rank_one) {
        res.rank_one.used_randomization = true;
        Rng rng = make_rng(seed, 0x5a4d);
        for (int s = 0; s < n_samples; ++s) {
            std::vector<CVec> cand(nu);
            for (std::size_t u = 0; u < nu; ++u) cand[u] = factors[u] * complex_normal_vector(rng, factors[u].cols());
            consider(cand);
        }
    }

    if (best.empty()) {
        bf.status = SolveStatus::rank_one_failure;
        bf.message = "no feasible rank-one candidate";
    } else {
        for (std::size_t u = 0; u < nu; ++u) {
            const auto rows = cluster_rows(bf.serving[u], dm.n_tx_antennas);
            for (std::size_t i = 0; i < rows.size(); ++i) bf.w(rows[i], static_cast<Eigen::Index>(u)) = best[u](static_cast<Eigen::Index>(i));
        }
        bf.status = SolveStatus::optimal;
    }
    finalize_powers(bf, dm, ch.h_est, ch.noise_power);
    return res;
}

/// R-JTBF: lifted solve plus rank-one recovery.
inline RobustResult solve_r_jtbf(const ChannelSet& ch, const QosSpec& qos, std::uint64_t seed, const RobustOptions& opt = {}) {
    const auto terms = build_bernstein_terms(ch, qos);
    LiftedSolution lifted = solve_lifted(terms, ch.dims, opt.ipm);
    if (!lifted.ok()) {
        RobustResult res;
        res.lifted = lifted;
        auto& bf = res.beamformers;
        bf.serving = jt_serving_sets(ch.dims);
        bf.w = CMat::Zero(ch.h_est.rows(), ch.dims.n_ues());
        bf.status = lifted.raw.status == conic::IpmStatus::primal_infeasible ? SolveStatus::infeasible
                  : lifted.raw.status == conic::IpmStatus::max_iter         ? SolveStatus::max_iter
                                                                            : SolveStatus::numerical_failure;
        bf.message = std::string("lifted program: ") + conic::to_string(lifted.raw.status);
        finalize_powers(bf, ch.dims, ch.h_est, ch.noise_power);
        return res;
    }
    return extract_rank_one(lifted, ch, terms, opt.n_samples, seed, opt.rank_one_tol);
}

}  // namespace jtbf
