#pragma once

// Seeded Monte-Carlo experiments: plan parsing, parallel drop execution, CSV and
// manifest output, and order-independent aggregation of result files.

#include "jtbf/baselines.hpp"
#include "jtbf/duality.hpp"
#include "jtbf/metrics.hpp"
#include "jtbf/robust.hpp"
#include "jtbf/scenario.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

namespace jtbf {

inline constexpr const char* kVersion = "1.0.0";

enum class Scheme { nr_jtbf, r_jtbf, nr_njtbf, zf };

inline const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::nr_jtbf: return "NR-JTBF";
        case Scheme::r_jtbf: return "R-JTBF";
        case Scheme::nr_njtbf: return "NR-NJTBF";
        case Scheme::zf: return "ZF";
    }
    return "unknown";
}

inline Scheme parse_scheme(const std::string& s) {
    for (Scheme k : {Scheme::nr_jtbf, Scheme::r_jtbf, Scheme::nr_njtbf, Scheme::zf})
        if (s == to_string(k)) return k;
    throw ConfigError("unknown scheme '" + s + "' (expected NR-JTBF, R-JTBF, NR-NJTBF or ZF)");
}

struct ExperimentPlan {
    std::string figure = "run";
    nlohmann::json scenario = nlohmann::json::object();
    std::vector<Scheme> schemes{Scheme::nr_jtbf, Scheme::r_jtbf, Scheme::nr_njtbf, Scheme::zf};
    std::string sweep_variable = "none";  // gamma_db, one_minus_rho, n_tx_antennas, none
    std::vector<double> sweep_values;     // empty for none
    int n_drops = 500;
    std::uint64_t base_seed = 1;
    int mc_draws = 0;  // fresh CSI-error draws per R-JTBF solution, 0 disables
    int randomization_samples = 200;
    double zf_power_per_bs_dbm = 24.0;
    NjtbfServing njtbf_serving = NjtbfServing::anchor;

    std::size_t n_points() const { return sweep_values.empty() ? 1 : sweep_values.size(); }
};

inline nlohmann::json to_json(const ExperimentPlan& p) {
    nlohmann::json j;
    j["figure"] = p.figure;
    j["scenario"] = p.scenario;
    j["schemes"] = nlohmann::json::array();
    for (Scheme s : p.schemes) j["schemes"].push_back(to_string(s));
    j["sweep"] = {{"variable", p.sweep_variable}, {"values", p.sweep_values}};
    j["n_drops"] = p.n_drops;
    j["base_seed"] = p.base_seed;
    j["mc_draws"] = p.mc_draws;
    j["randomization_samples"] = p.randomization_samples;
    j["zf_power_per_bs_dbm"] = p.zf_power_per_bs_dbm;
    j["njtbf_serving"] = to_string(p.njtbf_serving);
    return j;
}

/// Scenario of sweep point `i` (sweep value applied on top of the base config).
inline NetworkScenario scenario_at(const ExperimentPlan& p, std::size_t i) {
    if (p.sweep_variable == "none") return build_scenario(p.scenario);
    const double v = p.sweep_values.at(i);
    if (p.sweep_variable == "n_tx_antennas") {
        nlohmann::json cfg = p.scenario;
        cfg["dimensions"]["n_tx_antennas"] = static_cast<int>(v);
        return build_scenario(cfg);
    }
    NetworkScenario sc = build_scenario(p.scenario);
    if (p.sweep_variable == "gamma_db") return with_sinr_target(sc, db_to_linear(v));
    return with_outage_tolerance(sc, 1.0 - v);
}

inline ExperimentPlan parse_plan(const nlohmann::json& j) {
    static const std::set<std::string> keys{"figure",  "scenario",  "schemes",  "sweep", "n_drops", "base_seed",
                                            "mc_draws", "randomization_samples", "zf_power_per_bs_dbm", "njtbf_serving"};
    if (!j.is_object()) throw ConfigError("plan: expected an object");
    for (const auto& [k, v] : j.items())
        if (!keys.count(k)) throw ConfigError("plan: unknown key '" + k + "'");
    ExperimentPlan p;
    try {
        if (j.contains("figure")) p.figure = j.at("figure").get<std::string>();
        if (p.figure.empty()) throw ConfigError("plan.figure: must not be empty");
        for (char c : p.figure)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
                throw ConfigError("plan.figure: only letters, digits, '_' and '-' are allowed");
        if (j.contains("scenario")) p.scenario = j.at("scenario");
        if (j.contains("schemes")) {
            p.schemes.clear();
            for (const auto& s : j.at("schemes")) p.schemes.push_back(parse_scheme(s.get<std::string>()));
            if (p.schemes.empty()) throw ConfigError("plan.schemes: must not be empty");
            std::set<Scheme> uniq(p.schemes.begin(), p.schemes.end());
            if (uniq.size() != p.schemes.size()) throw ConfigError("plan.schemes: duplicate scheme");
        }
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            for (const auto& [k, v] : s.items())
                if (k != "variable" && k != "values") throw ConfigError("plan.sweep: unknown key '" + k + "'");
            p.sweep_variable = s.value("variable", std::string("none"));
            if (s.contains("values")) p.sweep_values = s.at("values").get<std::vector<double>>();
        }
        if (j.contains("n_drops")) p.n_drops = j.at("n_drops").get<int>();
        if (j.contains("base_seed")) p.base_seed = j.at("base_seed").get<std::uint64_t>();
        if (j.contains("mc_draws")) p.mc_draws = j.at("mc_draws").get<int>();
        if (j.contains("randomization_samples")) p.randomization_samples = j.at("randomization_samples").get<int>();
        if (j.contains("zf_power_per_bs_dbm")) p.zf_power_per_bs_dbm = j.at("zf_power_per_bs_dbm").get<double>();
        if (j.contains("njtbf_serving")) p.njtbf_serving = parse_njtbf_serving(j.at("njtbf_serving").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("plan: ") + e.what());
    }

    const std::string& sv = p.sweep_variable;
    if (sv != "gamma_db" && sv != "one_minus_rho" && sv != "n_tx_antennas" && sv != "none")
        throw ConfigError("plan.sweep.variable: expected gamma_db, one_minus_rho, n_tx_antennas or none");
    if (sv == "none" && !p.sweep_values.empty()) throw ConfigError("plan.sweep.values: must be empty when variable is none");
    if (sv != "none" && p.sweep_values.empty()) throw ConfigError("plan.sweep.values: must not be empty");
    for (std::size_t i = 1; i < p.sweep_values.size(); ++i)
        if (!(p.sweep_values[i] > p.sweep_values[i - 1]))
            throw ConfigError("plan.sweep.values: must be strictly increasing");
    for (double v : p.sweep_values) {
        if (!std::isfinite(v)) throw ConfigError("plan.sweep.values: must be finite");
        if (sv == "one_minus_rho" && !(v > 0.0 && v < 1.0))
            throw ConfigError("plan.sweep.values: one_minus_rho must lie in (0, 1)");
        if (sv == "n_tx_antennas" && !(v >= 1.0 && v == std::floor(v)))
            throw ConfigError("plan.sweep.values: n_tx_antennas must be positive integers");
    }
    if (p.n_drops < 1) throw ConfigError("plan.n_drops: must be >= 1");
    if (p.mc_draws < 0) throw ConfigError("plan.mc_draws: must be >= 0");
    if (p.randomization_samples < 1) throw ConfigError("plan.randomization_samples: must be >= 1");
    for (std::size_t i = 0; i < p.n_points(); ++i) scenario_at(p, i);  // validates the scenario config
    return p;
}

inline ExperimentPlan load_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open plan file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_plan(j);
}

inline std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Hash of the canonical plan and the library version; stamped on every CSV row.
inline std::string plan_hash(const ExperimentPlan& p) {
    return hex64(fnv1a64(to_json(p).dump() + "|" + kVersion));
}

/// Seed of a drop. Shared by all sweep points so that points differ only in the
/// swept quantity (common random numbers).
inline std::uint64_t drop_seed(std::uint64_t base_seed, int drop) {
    return hash64({base_seed, static_cast<std::uint64_t>(drop)});
}

/// One CSV row: one UE of one scheme in one drop at one sweep point.
struct TrialRow {
    std::string manifest_hash;
    std::string figure;
    std::string sweep_variable;
    double sweep_value = 0.0;
    int drop = 0;
    std::uint64_t seed = 0;
    std::string scheme;
    std::string status;
    int ue = 0;
    double sinr_db = 0.0;
    bool satisfied = false;
    double mc_satisfaction = std::numeric_limits<double>::quiet_NaN();
    double total_power_w = 0.0;
    double max_bs_power_w = 0.0;
    bool cap_violated = false;
    double spectral_efficiency = 0.0;
    double power_efficiency = 0.0;

    bool ok() const { return status == "optimal"; }
};

inline const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols{
        "manifest_hash", "figure",         "sweep_variable", "sweep_value",   "drop",
        "seed",          "scheme",         "status",         "ue",            "sinr_db",
        "satisfied",     "mc_satisfaction", "total_power_w", "max_bs_power_w", "cap_violated",
        "spectral_efficiency", "power_efficiency"};
    return cols;
}

/// Solves every scheme of one drop and evaluates it on the drop's true channels.
inline std::vector<TrialRow> run_drop(const ExperimentPlan& p, const NetworkScenario& sc, double sweep_value,
                                      int drop, const std::string& hash) {
    const std::uint64_t seed = drop_seed(p.base_seed, drop);
    const ChannelSet ch = generate_channels(sc, seed);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<TrialRow> rows;
    for (Scheme s : p.schemes) {
        BeamformerSet bf;
        try {
            switch (s) {
                case Scheme::nr_jtbf: bf = solve_nr_jtbf(ch, sc.qos).beamformers; break;
                case Scheme::nr_njtbf: bf = solve_nr_njtbf(ch, sc.qos, {}, p.njtbf_serving).beamformers; break;
                case Scheme::r_jtbf: {
                    RobustOptions opt;
                    opt.n_samples = p.randomization_samples;
                    bf = solve_r_jtbf(ch, sc.qos, hash64({seed, 0x52}), opt).beamformers;
                    break;
                }
                case Scheme::zf: {
                    ZfConfig cfg;
                    cfg.power_per_bs = dbm_to_watts(p.zf_power_per_bs_dbm);
                    bf = solve_zf(ch, cfg);
                    break;
                }
            }
        } catch (const Error& e) {
            bf = BeamformerSet{};
            bf.status = SolveStatus::numerical_failure;
            bf.message = e.what();
        }
        const bool ok = bf.status == SolveStatus::optimal;
        TrialRecord rec;
        RVec mc;
        if (ok) {
            rec = evaluate(bf, ch.h_true, sc.qos, ch.noise_power, sc.radio.max_bs_power);
            if (s == Scheme::r_jtbf && p.mc_draws > 0) mc = mc_satisfaction(bf, ch, sc.qos, p.mc_draws, hash64({seed, 0x4d43}));
        }
        for (int u = 0; u < sc.dims.n_ues(); ++u) {
            TrialRow r;
            r.manifest_hash = hash;
            r.figure = p.figure;
            r.sweep_variable = p.sweep_variable;
            r.sweep_value = sweep_value;
            r.drop = drop;
            r.seed = seed;
            r.scheme = to_string(s);
            r.status = to_string(bf.status);
            r.ue = u;
            if (ok) {
                r.sinr_db = linear_to_db(rec.sinr(u));
                r.satisfied = rec.satisfied[static_cast<std::size_t>(u)];
                if (mc.size()) r.mc_satisfaction = mc(u);
                r.total_power_w = rec.total_power;
                r.max_bs_power_w = rec.max_bs_power;
                r.cap_violated = rec.cap_violated;
                r.spectral_efficiency = rec.spectral_efficiency;
                r.power_efficiency = rec.power_efficiency;
            } else {
                r.sinr_db = r.total_power_w = r.max_bs_power_w = r.spectral_efficiency = r.power_efficiency = nan;
            }
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

struct RunResult {
    std::string manifest_hash;
    std::vector<TrialRow> rows;  // sweep point major, then drop, scheme, UE
    std::vector<std::uint64_t> seeds;
    std::map<std::string, std::map<std::string, int>> failures;  // scheme -> status -> drops
};

/// Runs every (sweep point, drop) job on `threads` workers. Results are stored by
/// job index, so the output does not depend on scheduling.
inline RunResult run_plan(const ExperimentPlan& p, int threads = 1,
                          const std::function<void(std::size_t, std::size_t)>& progress = {}) {
    RunResult out;
    out.manifest_hash = plan_hash(p);
    std::vector<NetworkScenario> scenarios;
    for (std::size_t i = 0; i < p.n_points(); ++i) scenarios.push_back(scenario_at(p, i));
    for (int d = 0; d < p.n_drops; ++d) out.seeds.push_back(drop_seed(p.base_seed, d));

    const std::size_t n_jobs = p.n_points() * static_cast<std::size_t>(p.n_drops);
    std::vector<std::vector<TrialRow>> results(n_jobs);
    std::vector<std::string> errors(n_jobs);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        for (std::size_t job = next++; job < n_jobs; job = next++) {
            const std::size_t point = job / static_cast<std::size_t>(p.n_drops);
            const int drop = static_cast<int>(job % static_cast<std::size_t>(p.n_drops));
            const double value = p.sweep_values.empty() ? 0.0 : p.sweep_values[point];
            try {
                results[job] = run_drop(p, scenarios[point], value, drop, out.manifest_hash);
            } catch (const std::exception& e) {
                errors[job] = e.what();
            }
            const std::size_t n = ++done;
            if (progress) {
                std::lock_guard<std::mutex> lock(progress_mutex);
                progress(n, n_jobs);
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(n_jobs)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t job = 0; job < n_jobs; ++job) {
        if (!errors[job].empty()) throw Error("drop job " + std::to_string(job) + ": " + errors[job]);
        for (auto& r : results[job]) {
            if (r.ue == 0 && !r.ok()) ++out.failures[r.scheme][r.status];
            out.rows.push_back(std::move(r));
        }
    }
    return out;
}

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv(std::ostream& os, const std::vector<TrialRow>& rows) {
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    for (const auto& r : rows) {
        os << r.manifest_hash << ',' << r.figure << ',' << r.sweep_variable << ',' << format_double(r.sweep_value) << ','
           << r.drop << ',' << r.seed << ',' << r.scheme << ',' << r.status << ',' << r.ue << ','
           << format_double(r.sinr_db) << ',' << (r.satisfied ? 1 : 0) << ',' << format_double(r.mc_satisfaction) << ','
           << format_double(r.total_power_w) << ',' << format_double(r.max_bs_power_w) << ','
           << (r.cap_violated ? 1 : 0) << ',' << format_double(r.spectral_efficiency) << ','
           << format_double(r.power_efficiency) << '\n';
    }
}

/// Parses a result CSV. Errors name the source and the 1-based line.
inline std::vector<TrialRow> read_csv(std::istream& is, const std::string& source = "csv") {
    std::vector<TrialRow> rows;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& msg) { return Error(source + ":" + std::to_string(line_no) + ": " + msg); };
    auto split = [](const std::string& s) {
        std::vector<std::string> f;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) f.push_back(item);
        if (!s.empty() && s.back() == ',') f.emplace_back();
        return f;
    };
    auto num = [&](const std::string& s, const char* col) {
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (s.empty() || pos != s.size()) throw fail(std::string("column ") + col + ": not a number '" + s + "'");
        return v;
    };
    auto integer = [&](const std::string& s, const char* col) -> long long {
        std::size_t pos = 0;
        long long v = 0;
        try {
            v = std::stoll(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (s.empty() || pos != s.size()) throw fail(std::string("column ") + col + ": not an integer '" + s + "'");
        return v;
    };
    auto flag = [&](const std::string& s, const char* col) {
        if (s != "0" && s != "1") throw fail(std::string("column ") + col + ": expected 0 or 1");
        return s == "1";
    };

    if (!std::getline(is, line)) throw Error(source + ":1: missing header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (split(line) != csv_columns()) throw fail("unexpected header");
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != csv_columns().size())
            throw fail("expected " + std::to_string(csv_columns().size()) + " fields, got " + std::to_string(f.size()));
        TrialRow r;
        r.manifest_hash = f[0];
        r.figure = f[1];
        r.sweep_variable = f[2];
        r.sweep_value = num(f[3], "sweep_value");
        r.drop = static_cast<int>(integer(f[4], "drop"));
        try {
            std::size_t pos = 0;
            r.seed = std::stoull(f[5], &pos);
            if (pos != f[5].size()) throw std::invalid_argument("seed");
        } catch (const std::exception&) {
            throw fail("column seed: not an unsigned integer '" + f[5] + "'");
        }
        r.scheme = f[6];
        try {
            parse_scheme(r.scheme);
        } catch (const Error& e) {
            throw fail(std::string("column scheme: ") + e.what());
        }
        r.status = f[7];
        r.ue = static_cast<int>(integer(f[8], "ue"));
        r.sinr_db = num(f[9], "sinr_db");
        r.satisfied = flag(f[10], "satisfied");
        r.mc_satisfaction = num(f[11], "mc_satisfaction");
        r.total_power_w = num(f[12], "total_power_w");
        r.max_bs_power_w = num(f[13], "max_bs_power_w");
        r.cap_violated = flag(f[14], "cap_violated");
        r.spectral_efficiency = num(f[15], "spectral_efficiency");
        r.power_efficiency = num(f[16], "power_efficiency");
        if (r.manifest_hash.empty()) throw fail("empty manifest_hash");
        rows.push_back(std::move(r));
    }
    return rows;
}

/// Aggregate of one (figure, sweep value, scheme) group over successful drops.
struct SummaryRow {
    std::string figure;
    std::string sweep_variable;
    double sweep_value = 0.0;
    std::string scheme;
    int n_drops = 0;   // all drops of the group
    int n_ok = 0;      // drops that entered the aggregates
    int n_failed = 0;
    double mean_power_w = 0.0;
    double mean_power_dbm = 0.0;  // mean of per-drop dBm
    double power_dbm_p10 = 0.0;
    double power_dbm_p50 = 0.0;
    double power_dbm_p90 = 0.0;
    double satisfaction_rate = 0.0;  // over (drop, UE) pairs
    double mean_mc_satisfaction = 0.0;
    double min_mc_satisfaction = 0.0;
    double mean_sinr_db = 0.0;
    double mean_spectral_efficiency = 0.0;
    double power_efficiency = 0.0;  // sum SE / sum power
    double cap_violation_rate = 0.0;
};

inline const std::vector<std::string>& summary_columns() {
    static const std::vector<std::string> cols{
        "figure",        "sweep_variable", "sweep_value",    "scheme",        "n_drops",
        "n_ok",          "n_failed",       "mean_power_w",   "mean_power_dbm", "power_dbm_p10",
        "power_dbm_p50", "power_dbm_p90",  "satisfaction_rate", "mean_mc_satisfaction", "min_mc_satisfaction",
        "mean_sinr_db",  "mean_spectral_efficiency", "power_efficiency", "cap_violation_rate"};
    return cols;
}

/// Groups rows and reduces them. Every reduction sorts its inputs first, so any
/// permutation of `rows` gives bit-identical output.
inline std::vector<SummaryRow> aggregate(const std::vector<TrialRow>& rows) {
    using Key = std::tuple<std::string, std::string, double, std::string>;
    struct Acc {
        std::map<int, std::string> drop_status;
        std::vector<double> power, power_dbm, se, cap, sat, mc, sinr_db;
        std::set<int> seen_ok;
    };
    std::map<Key, Acc> groups;
    for (const auto& r : rows) {
        Acc& a = groups[Key{r.figure, r.sweep_variable, r.sweep_value, r.scheme}];
        auto [it, fresh] = a.drop_status.emplace(r.drop, r.status);
        if (!fresh && it->second != r.status)
            throw Error("inconsistent status for drop " + std::to_string(r.drop) + " of " + r.scheme);
        if (!r.ok()) continue;
        a.sat.push_back(r.satisfied ? 1.0 : 0.0);
        a.sinr_db.push_back(r.sinr_db);
        if (!std::isnan(r.mc_satisfaction)) a.mc.push_back(r.mc_satisfaction);
        if (a.seen_ok.insert(r.drop).second) {
            a.power.push_back(r.total_power_w);
            a.power_dbm.push_back(watts_to_dbm(r.total_power_w));
            a.se.push_back(r.spectral_efficiency);
            a.cap.push_back(r.cap_violated ? 1.0 : 0.0);
        }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto mean = [&](const std::vector<double>& v) { return v.empty() ? nan : ordered_sum(v) / static_cast<double>(v.size()); };
    std::vector<SummaryRow> out;
    for (const auto& [k, a] : groups) {
        SummaryRow s;
        std::tie(s.figure, s.sweep_variable, s.sweep_value, s.scheme) = k;
        s.n_drops = static_cast<int>(a.drop_status.size());
        s.n_ok = static_cast<int>(a.power.size());
        s.n_failed = s.n_drops - s.n_ok;
        s.mean_power_w = mean(a.power);
        s.mean_power_dbm = mean(a.power_dbm);
        s.power_dbm_p10 = quantile(a.power_dbm, 0.1);
        s.power_dbm_p50 = quantile(a.power_dbm, 0.5);
        s.power_dbm_p90 = quantile(a.power_dbm, 0.9);
        s.satisfaction_rate = mean(a.sat);
        s.mean_mc_satisfaction = mean(a.mc);
        s.min_mc_satisfaction = a.mc.empty() ? nan : *std::min_element(a.mc.begin(), a.mc.end());
        s.mean_sinr_db = mean(a.sinr_db);
        s.mean_spectral_efficiency = mean(a.se);
        s.power_efficiency = a.power.empty() ? nan : ordered_sum(a.se) / ordered_sum(a.power);
        s.cap_violation_rate = mean(a.cap);
        out.push_back(std::move(s));
    }
    return out;
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
    const auto& cols = summary_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    for (const auto& s : rows) {
        os << s.figure << ',' << s.sweep_variable << ',' << format_double(s.sweep_value) << ',' << s.scheme << ','
           << s.n_drops << ',' << s.n_ok << ',' << s.n_failed;
        for (double v : {s.mean_power_w, s.mean_power_dbm, s.power_dbm_p10, s.power_dbm_p50, s.power_dbm_p90,
                         s.satisfaction_rate, s.mean_mc_satisfaction, s.min_mc_satisfaction, s.mean_sinr_db,
                         s.mean_spectral_efficiency, s.power_efficiency, s.cap_violation_rate})
            os << ',' << format_double(v);
        os << '\n';
    }
}

inline nlohmann::json make_manifest(const ExperimentPlan& p, const RunResult& r) {
    nlohmann::json m;
    m["manifest_hash"] = r.manifest_hash;
    m["version"] = kVersion;
    m["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                         std::to_string(EIGEN_MINOR_VERSION);
    m["plan"] = to_json(p);
    m["seeds"] = r.seeds;
    m["n_rows"] = r.rows.size();
    m["failures"] = r.failures;
    m["files"] = {p.figure + ".csv"};
    return m;
}

/// Writes <dir>/<figure>.csv and <dir>/manifest.json.
inline void write_outputs(const std::filesystem::path& dir, const ExperimentPlan& p, const RunResult& r) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir / (p.figure + ".csv"), std::ios::binary);
        if (!os) throw Error("cannot write " + (dir / (p.figure + ".csv")).string());
        write_csv(os, r.rows);
    }
    std::ofstream ms(dir / "manifest.json", std::ios::binary);
    if (!ms) throw Error("cannot write " + (dir / "manifest.json").string());
    ms << make_manifest(p, r).dump(2) << '\n';
}

/// Reads every result CSV in `dir`, checks them against manifest.json and writes
/// summary.csv. Returns the aggregate rows.
inline std::vector<SummaryRow> summarize_directory(const std::filesystem::path& dir) {
    std::ifstream ms(dir / "manifest.json");
    if (!ms) throw Error("missing " + (dir / "manifest.json").string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(ms);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error((dir / "manifest.json").string() + ": " + e.what());
    }
    const std::string hash = manifest.value("manifest_hash", std::string());
    if (hash.empty()) throw Error("manifest.json: missing manifest_hash");

    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".csv" && e.path().filename() != "summary.csv")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("no result CSV files in " + dir.string());

    std::vector<TrialRow> rows;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw Error("cannot read " + f.string());
        auto part = read_csv(in, f.filename().string());
        for (std::size_t i = 0; i < part.size(); ++i)
            if (part[i].manifest_hash != hash)
                throw Error(f.filename().string() + ": row " + std::to_string(i + 2) + " carries manifest hash " +
                            part[i].manifest_hash + ", expected " + hash);
        rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    auto summary = aggregate(rows);
    std::ofstream os(dir / "summary.csv", std::ios::binary);
    if (!os) throw Error("cannot write " + (dir / "summary.csv").string());
    write_summary_csv(os, summary);
    return summary;
}

}  // namespace jtbf
