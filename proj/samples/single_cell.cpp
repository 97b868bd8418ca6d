// One drop of the default three-cell network: solve every scheme on the
// estimated channels and report power and true-channel SINR per UE.

#include "jtbf/baselines.hpp"
#include "jtbf/metrics.hpp"
#include "jtbf/robust.hpp"

#include <iomanip>
#include <iostream>

int main(int argc, char** argv) {
    using namespace jtbf;
    const std::uint64_t seed = argc > 1 ? std::stoull(argv[1]) : 1;
    const NetworkScenario sc = build_scenario({{"qos", {{"sinr_target_db", 6.0}, {"outage_tolerance", 0.1}}}});
    const ChannelSet ch = generate_channels(sc, seed);

    auto report = [&](const char* name, const BeamformerSet& bf) {
        std::cout << std::left << std::setw(9) << name << " status " << to_string(bf.status);
        if (!bf.ok()) {
            std::cout << " (" << bf.message << ")\n";
            return;
        }
        const TrialRecord r = evaluate(bf, ch.h_true, sc.qos, ch.noise_power, sc.radio.max_bs_power);
        std::cout << std::fixed << std::setprecision(2) << "  power " << watts_to_dbm(r.total_power) << " dBm  SINR [dB]";
        for (Eigen::Index u = 0; u < r.sinr.size(); ++u) std::cout << ' ' << linear_to_db(r.sinr(u));
        std::cout << (r.cap_violated ? "  (BS cap exceeded)" : "") << '\n';
    };

    report("NR-JTBF", solve_nr_jtbf(ch, sc.qos).beamformers);
    report("R-JTBF", solve_r_jtbf(ch, sc.qos, seed).beamformers);
    report("NR-NJTBF", solve_nr_njtbf(ch, sc.qos).beamformers);
    report("ZF", solve_zf(ch));
    std::cout << "target 6.00 dB, noise " << std::setprecision(3) << std::scientific << ch.noise_power << " W\n";
}
