#pragma once

// Beamformer containers, serving clusters and downlink SINR evaluation.

#include "jtbf/channel.hpp"
#include "jtbf/common.hpp"
#include "jtbf/scenario.hpp"

#include <string>
#include <vector>

namespace jtbf {

enum class SolveStatus { optimal, infeasible, max_iter, numerical_failure, rank_one_failure };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::max_iter: return "max_iter";
        case SolveStatus::numerical_failure: return "numerical_failure";
        case SolveStatus::rank_one_failure: return "rank_one_failure";
    }
    return "unknown";
}

/// Serving BSs (flattened indices, ascending) per UE.
using ServingSets = std::vector<std::vector<int>>;

/// Every BS of the UE's own cell.
inline ServingSets jt_serving_sets(const Dimensions& dm) {
    ServingSets s(static_cast<std::size_t>(dm.n_ues()));
    for (int u = 0; u < dm.n_ues(); ++u) {
        const int c = dm.cell_of_ue(u);
        for (int b = 0; b < dm.n_bs_per_cell; ++b) s[static_cast<std::size_t>(u)].push_back(dm.flatten_bs(c, b));
    }
    return s;
}

/// The in-cell BS with the largest large-scale gain towards the UE.
inline ServingSets single_bs_serving_sets(const ChannelSet& ch) {
    const Dimensions& dm = ch.dims;
    ServingSets s(static_cast<std::size_t>(dm.n_ues()));
    for (int u = 0; u < dm.n_ues(); ++u) {
        const int c = dm.cell_of_ue(u);
        int best = dm.flatten_bs(c, 0);
        for (int b = 1; b < dm.n_bs_per_cell; ++b) {
            const int k = dm.flatten_bs(c, b);
            if (ch.large_scale(k, u) > ch.large_scale(best, u)) best = k;
        }
        s[static_cast<std::size_t>(u)] = {best};
    }
    return s;
}

/// The cell's anchor BS (local index 0, at the cell center) for every UE of the cell.
inline ServingSets anchor_serving_sets(const Dimensions& dm) {
    ServingSets s(static_cast<std::size_t>(dm.n_ues()));
    for (int u = 0; u < dm.n_ues(); ++u) s[static_cast<std::size_t>(u)] = {dm.flatten_bs(dm.cell_of_ue(u), 0)};
    return s;
}

/// The geometrically nearest in-cell BS.
inline ServingSets nearest_serving_sets(const ChannelSet& ch) {
    const Dimensions& dm = ch.dims;
    ServingSets s(static_cast<std::size_t>(dm.n_ues()));
    for (int u = 0; u < dm.n_ues(); ++u) {
        const Point ue = ch.geometry.ue_positions[static_cast<std::size_t>(u)];
        const int c = dm.cell_of_ue(u);
        int best = dm.flatten_bs(c, 0);
        for (int b = 1; b < dm.n_bs_per_cell; ++b) {
            const int k = dm.flatten_bs(c, b);
            if (distance(ch.geometry.bs_positions[static_cast<std::size_t>(k)], ue) <
                distance(ch.geometry.bs_positions[static_cast<std::size_t>(best)], ue))
                best = k;
        }
        s[static_cast<std::size_t>(u)] = {best};
    }
    return s;
}

/// Rows of the network-wide antenna stack that belong to the given BSs.
inline std::vector<Eigen::Index> cluster_rows(const std::vector<int>& bss, Eigen::Index nt) {
    std::vector<Eigen::Index> rows;
    rows.reserve(bss.size() * static_cast<std::size_t>(nt));
    for (int k : bss)
        for (Eigen::Index a = 0; a < nt; ++a) rows.push_back(Eigen::Index(k) * nt + a);
    return rows;
}

inline CMat gather_rows(const CMat& m, const std::vector<Eigen::Index>& rows) {
    CMat out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

/// Downlink beamformers. Column u of `w` is UE u's network-wide beamformer; it is
/// zero outside the UE's serving BSs.
struct BeamformerSet {
    CMat w;
    ServingSets serving;
    RVec per_ue_power;
    RVec per_bs_power;
    double total_power = 0.0;
    RVec achieved_sinr;  // against the CSI used for the design
    SolveStatus status = SolveStatus::optimal;
    std::string message;

    bool ok() const { return status == SolveStatus::optimal; }
};

/// Per-UE SINR for network-wide beamformers `w` on network-wide channels `h`.
/// The signal and every interference term are coherent sums over the transmitting BSs.
inline RVec dl_sinr_all(const CMat& w, const CMat& h, double noise_power) {
    const CMat g = h.adjoint() * w;  // g(u, v) = h_u^H w_v
    RVec out(g.rows());
    for (Eigen::Index u = 0; u < g.rows(); ++u) {
        const double sig = std::norm(g(u, u));
        const double tot = g.row(u).cwiseAbs2().sum();
        out(u) = sig / (tot - sig + noise_power);
    }
    return out;
}

inline double dl_sinr(const CMat& w, const CMat& h, double noise_power, int ue) {
    return dl_sinr_all(w, h, noise_power)(ue);
}

/// Fills power bookkeeping and the design-CSI SINR.
inline void finalize_powers(BeamformerSet& bf, const Dimensions& dm, const CMat& h_design, double noise_power) {
    const Eigen::Index nt = dm.n_tx_antennas;
    bf.per_ue_power = bf.w.colwise().squaredNorm().transpose();
    bf.per_bs_power = RVec::Zero(dm.n_bs());
    for (int k = 0; k < dm.n_bs(); ++k) bf.per_bs_power(k) = bf.w.middleRows(k * nt, nt).squaredNorm();
    bf.total_power = bf.per_ue_power.sum();
    bf.achieved_sinr = dl_sinr_all(bf.w, h_design, noise_power);
}

}  // namespace jtbf
