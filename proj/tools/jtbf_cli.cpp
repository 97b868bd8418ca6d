#include "jtbf/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Joint-transmission beamforming Monte-Carlo simulator"};
    app.require_subcommand(1);

    std::string plan_path;
    std::string out_dir;
    int drops = 0;
    std::uint64_t seed = 0;
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    bool quiet = false;
    auto* sim = app.add_subcommand("simulate", "Run an experiment plan and write CSV plus manifest");
    sim->add_option("--plan", plan_path, "Plan file (JSON)")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", out_dir, "Output directory")->required();
    auto* drops_opt = sim->add_option("--drops", drops, "Override the plan's drop count")->check(CLI::PositiveNumber);
    auto* seed_opt = sim->add_option("--seed", seed, "Override the plan's base seed");
    sim->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    sim->add_flag("--quiet", quiet, "No progress output");

    std::string in_dir;
    auto* sum = app.add_subcommand("summarize", "Aggregate the CSVs of a run directory into summary.csv");
    sum->add_option("--in", in_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            jtbf::ExperimentPlan plan = jtbf::load_plan(plan_path);
            if (*drops_opt) plan.n_drops = drops;
            if (*seed_opt) plan.base_seed = seed;
            std::size_t last_pct = 101;
            auto progress = [&](std::size_t done, std::size_t total) {
                if (quiet) return;
                const std::size_t pct = done * 100 / total;
                if (pct != last_pct) {
                    std::cerr << "\r" << plan.figure << ": " << done << "/" << total << " jobs" << std::flush;
                    last_pct = pct;
                }
            };
            const auto result = jtbf::run_plan(plan, threads, progress);
            if (!quiet) std::cerr << "\n";
            jtbf::write_outputs(out_dir, plan, result);
            std::cout << "wrote " << result.rows.size() << " rows to " << out_dir << " (manifest "
                      << result.manifest_hash << ")\n";
            for (const auto& [scheme, by_status] : result.failures)
                for (const auto& [status, n] : by_status)
                    std::cout << "  " << scheme << ": " << n << " drop(s) " << status << "\n";
        } else if (*sum) {
            const auto rows = jtbf::summarize_directory(in_dir);
            std::cout << "wrote " << rows.size() << " aggregate rows to " << in_dir << "/summary.csv\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
