#pragma once

// Reference schemes: single-BS (non-joint) minimum-power beamforming and
// network-wide zero-forcing at full power.

#include "jtbf/duality.hpp"

#include <Eigen/QR>

namespace jtbf {

/// Which single BS serves a UE in the non-joint scheme. `anchor` keeps one BS per
/// cell (the cell-center site), i.e. the joint scheme with one BS per cell; the
/// other BSs stay silent. `strongest` and `nearest` pick per UE among all in-cell BSs.
enum class NjtbfServing { anchor, strongest, nearest };

inline const char* to_string(NjtbfServing s) {
    switch (s) {
        case NjtbfServing::anchor: return "anchor";
        case NjtbfServing::strongest: return "strongest";
        case NjtbfServing::nearest: return "nearest";
    }
    return "unknown";
}

inline NjtbfServing parse_njtbf_serving(const std::string& s) {
    for (NjtbfServing k : {NjtbfServing::anchor, NjtbfServing::strongest, NjtbfServing::nearest})
        if (s == to_string(k)) return k;
    throw ConfigError("unknown NR-NJTBF serving rule '" + s + "' (expected anchor, strongest or nearest)");
}

inline ServingSets njtbf_serving_sets(const ChannelSet& ch, NjtbfServing rule) {
    switch (rule) {
        case NjtbfServing::strongest: return single_bs_serving_sets(ch);
        case NjtbfServing::nearest: return nearest_serving_sets(ch);
        case NjtbfServing::anchor: break;
    }
    return anchor_serving_sets(ch.dims);
}

/// NR-NJTBF: minimum-power beamforming with single-BS clusters; non-serving BSs only interfere.
inline NrJtbfResult solve_nr_njtbf(const ChannelSet& ch, const QosSpec& qos, const DualityOptions& opt = {},
                                   NjtbfServing rule = NjtbfServing::anchor) {
    const RVec gamma = Eigen::Map<const RVec>(qos.sinr_target.data(), static_cast<Eigen::Index>(qos.sinr_target.size()));
    return solve_duality(ch.h_est, njtbf_serving_sets(ch, rule), gamma, ch.noise_power, ch.dims, opt);
}

struct ZfConfig {
    double power_per_bs = dbm_to_watts(24.0);  // watts
    double regularization = 0.0;
};

/// Zero-forcing on the network-wide estimated channel, D = H (H^H H + r I)^{-1}.
/// Every UE gets an equal share of the aggregate budget n_bs * power_per_bs, so the
/// network transmits at full power while a single scalar per UE keeps the nulls exact.
inline BeamformerSet solve_zf(const ChannelSet& ch, const ZfConfig& cfg = {}) {
    const Dimensions& dm = ch.dims;
    const CMat& h = ch.h_est;
    if (h.rows() < h.cols())
        throw Error("zero-forcing needs at least as many transmit antennas (" + std::to_string(h.rows()) +
                    ") as UEs (" + std::to_string(h.cols()) + ")");
    if (!(cfg.power_per_bs > 0.0)) throw Error("zero-forcing power per BS must be positive");
    if (cfg.regularization < 0.0) throw Error("zero-forcing regularization must be >= 0");
    Eigen::ColPivHouseholderQR<CMat> qr(h);
    if (qr.rank() < h.cols())
        throw Error("zero-forcing channel matrix is rank deficient: rank " + std::to_string(qr.rank()) + " < " +
                    std::to_string(h.cols()) + " UEs");
    CMat gram = h.adjoint() * h;
    gram.diagonal().array() += cfg.regularization;
    const CMat d = h * gram.ldlt().solve(CMat::Identity(h.cols(), h.cols()));

    BeamformerSet bf;
    bf.serving.assign(static_cast<std::size_t>(dm.n_ues()), {});
    for (int u = 0; u < dm.n_ues(); ++u)
        for (int k = 0; k < dm.n_bs(); ++k) bf.serving[static_cast<std::size_t>(u)].push_back(k);
    const double per_ue = cfg.power_per_bs * dm.n_bs() / dm.n_ues();
    bf.w = d;
    for (Eigen::Index u = 0; u < d.cols(); ++u) bf.w.col(u) *= std::sqrt(per_ue) / d.col(u).norm();
    bf.status = SolveStatus::optimal;
    finalize_powers(bf, dm, ch.h_est, ch.noise_power);
    return bf;
}

}  // namespace jtbf
