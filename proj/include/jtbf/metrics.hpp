#pragma once

// Achieved SINR on true channels, target satisfaction, spectral and power
// efficiency, empirical CDFs and Monte-Carlo outage checks.

#include "jtbf/beamforming.hpp"
#include "jtbf/channel.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace jtbf {

struct TrialRecord {
    std::string scheme;
    SolveStatus status = SolveStatus::optimal;
    RVec sinr;                    // linear, true CSI
    std::vector<bool> satisfied;  // sinr >= target
    double total_power = 0.0;     // watts
    RVec per_bs_power;            // watts
    double max_bs_power = 0.0;
    bool cap_violated = false;
    double spectral_efficiency = 0.0;  // bits/s/Hz, summed over UEs
    double power_efficiency = 0.0;     // bits/s/Hz per watt
    std::uint64_t seed = 0;
};

/// Evaluates beamformers designed on estimated CSI against `h_true`.
inline TrialRecord evaluate(const BeamformerSet& bf, const CMat& h_true, const QosSpec& qos, double noise_power,
                            double bs_power_cap = std::numeric_limits<double>::infinity()) {
    TrialRecord r;
    r.status = bf.status;
    r.sinr = dl_sinr_all(bf.w, h_true, noise_power);
    r.satisfied.resize(static_cast<std::size_t>(r.sinr.size()));
    for (Eigen::Index u = 0; u < r.sinr.size(); ++u) {
        r.satisfied[static_cast<std::size_t>(u)] = r.sinr(u) >= qos.sinr_target[static_cast<std::size_t>(u)];
        r.spectral_efficiency += std::log2(1.0 + r.sinr(u));
    }
    r.total_power = bf.w.squaredNorm();
    r.per_bs_power = bf.per_bs_power;
    r.max_bs_power = bf.per_bs_power.size() ? bf.per_bs_power.maxCoeff() : 0.0;
    r.cap_violated = r.max_bs_power > bs_power_cap * (1.0 + 1e-12);
    r.power_efficiency = r.total_power > 0.0 ? r.spectral_efficiency / r.total_power : 0.0;
    return r;
}

/// Right-continuous empirical CDF: sorted distinct values with P[X <= value].
inline std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> samples) {
    if (samples.empty()) throw Error("empirical_cdf: no samples");
    std::sort(samples.begin(), samples.end());
    std::vector<std::pair<double, double>> out;
    const auto n = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (i + 1 < samples.size() && samples[i + 1] == samples[i]) continue;
        out.emplace_back(samples[i], static_cast<double>(i + 1) / n);
    }
    return out;
}

/// Evaluates a step CDF at x.
inline double cdf_at(const std::vector<std::pair<double, double>>& cdf, double x) {
    auto it = std::upper_bound(cdf.begin(), cdf.end(), x, [](double v, const auto& p) { return v < p.first; });
    if (it == cdf.begin()) return 0.0;
    return std::prev(it)->second;
}

/// Per-UE fraction of fresh CSI-error draws for which SINR >= target.
inline RVec mc_satisfaction(const BeamformerSet& bf, const ChannelSet& ch, const QosSpec& qos, int n_draws,
                            std::uint64_t seed) {
    const Eigen::Index nu = bf.w.cols();
    RVec hits = RVec::Zero(nu);
    Rng rng = make_rng(seed, 0x3c);
    for (int d = 0; d < n_draws; ++d) {
        const CMat h = sample_true_channels(ch, rng);
        const RVec s = dl_sinr_all(bf.w, h, ch.noise_power);
        for (Eigen::Index u = 0; u < nu; ++u)
            if (s(u) >= qos.sinr_target[static_cast<std::size_t>(u)]) hits(u) += 1.0;
    }
    return hits / static_cast<double>(n_draws);
}

/// Order-independent sum: sorted before accumulation.
inline double ordered_sum(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return std::accumulate(v.begin(), v.end(), 0.0);
}

/// Linear-interpolated quantile of unsorted samples, q in [0, 1].
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace jtbf
