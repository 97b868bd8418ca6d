#pragma once

// Network geometry, dimensions, indexing and QoS targets shared by every solver.
//
// Indexing is 0-based throughout: base station k = cell * n_bs_per_cell + b and
// user u = cell * n_ues_per_cell + j.

#include "jtbf/common.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace jtbf {

struct Dimensions {
    int n_cells = 3;
    int n_bs_per_cell = 3;
    int n_tx_antennas = 4;
    int n_ues_per_cell = 1;

    int n_bs() const { return n_cells * n_bs_per_cell; }
    int n_ues() const { return n_cells * n_ues_per_cell; }
    int cluster_antennas() const { return n_bs_per_cell * n_tx_antennas; }

    int flatten_bs(int cell, int bs) const { return cell * n_bs_per_cell + bs; }
    std::pair<int, int> unflatten_bs(int k) const { return {k / n_bs_per_cell, k % n_bs_per_cell}; }
    int flatten_ue(int cell, int ue) const { return cell * n_ues_per_cell + ue; }
    std::pair<int, int> unflatten_ue(int u) const { return {u / n_ues_per_cell, u % n_ues_per_cell}; }
    int cell_of_bs(int k) const { return k / n_bs_per_cell; }
    int cell_of_ue(int u) const { return u / n_ues_per_cell; }
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Geometry {
    double inter_cell_distance = 500.0;  // meters
    double cell_radius = 250.0;          // UEs are dropped uniformly in a disc of this radius
    std::vector<Point> cell_centers;
    std::vector<Point> bs_positions;  // indexed by flattened BS
    std::vector<Point> ue_positions;  // indexed by flattened UE; empty until placed
};

struct QosSpec {
    std::vector<double> sinr_target;        // linear, per UE
    std::vector<double> outage_tolerance;   // per UE, in (0, 1)
    std::vector<double> bernstein_tau;      // -ln(outage_tolerance)
};

struct RadioParams {
    double max_bs_power = dbm_to_watts(24.0);  // watts
    double antenna_gain_db = 5.0;
    double bandwidth_hz = 10e6;
    double noise_psd_dbm_hz = -174.0;
    double noise_power = 0.0;  // watts, derived
    double shadowing_sigma_db = 8.0;
    double csi_error_radius = std::sqrt(0.1);
    double pathloss_intercept_db = 145.4;
    double pathloss_slope_db = 37.5;
};

inline double noise_power_watts(double noise_psd_dbm_hz, double bandwidth_hz) {
    return std::pow(10.0, (noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz) - 30.0) / 10.0);
}

struct NetworkScenario {
    Dimensions dims;
    Geometry geometry;  // cell centers and BS sites; UEs are placed per drop
    QosSpec qos;
    RadioParams radio;
    double min_bs_distance = 10.0;  // meters, exclusion radius around every BS
    std::uint64_t seed = 1;
};

/// Triangular-lattice cell centers, nearest to the origin first. The first three
/// form a mutually adjacent triangle, the first seven a center cell plus its ring.
inline std::vector<Point> triangular_lattice(int count, double spacing) {
    struct Site {
        Point p;
        long ring_key;
        double angle;
    };
    std::vector<Site> sites;
    const int reach = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count)))) + 2;
    for (int a = -reach; a <= reach; ++a) {
        for (int b = -reach; b <= reach; ++b) {
            Point p{spacing * (a + 0.5 * b), spacing * (std::sqrt(3.0) / 2.0) * b};
            const double r = std::hypot(p.x, p.y) / spacing;
            double ang = std::atan2(p.y, p.x);
            if (ang < -1e-12) ang += 2.0 * std::numbers::pi;
            sites.push_back({p, std::lround(r * 1e6), ang});
        }
    }
    std::sort(sites.begin(), sites.end(), [](const Site& l, const Site& r) {
        if (l.ring_key != r.ring_key) return l.ring_key < r.ring_key;
        return l.angle < r.angle - 1e-12;
    });
    std::vector<Point> out;
    for (int i = 0; i < count; ++i) out.push_back(sites[static_cast<std::size_t>(i)].p);
    return out;
}

/// One BS at the cell center, the rest on a circle of radius d/4 at equal angles.
inline std::vector<Point> place_base_stations(const std::vector<Point>& centers, int n_bs_per_cell,
                                              double inter_cell_distance) {
    std::vector<Point> out;
    const double r = inter_cell_distance / 4.0;
    for (const Point& c : centers) {
        out.push_back(c);
        const int ring = n_bs_per_cell - 1;
        for (int b = 0; b < ring; ++b) {
            const double ang = 2.0 * std::numbers::pi * b / ring;
            out.push_back({c.x + r * std::cos(ang), c.y + r * std::sin(ang)});
        }
    }
    return out;
}

/// Uniform samples in a disc, optionally rejecting points within `exclusion` of any site.
inline std::vector<Point> sample_uniform_disc(Point center, double radius, int count, Rng& rng,
                                              const std::vector<Point>& exclusion_sites = {},
                                              double exclusion = 0.0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Point> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    while (static_cast<int>(out.size()) < count) {
        const double rr = radius * std::sqrt(unit(rng));
        const double th = 2.0 * std::numbers::pi * unit(rng);
        const Point p{center.x + rr * std::cos(th), center.y + rr * std::sin(th)};
        bool ok = true;
        for (const Point& s : exclusion_sites) {
            if (distance(p, s) < exclusion) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(p);
    }
    return out;
}

namespace detail {

inline const std::set<std::string>& allowed_keys(const std::string& section) {
    static const std::set<std::string> top{"dimensions", "geometry", "qos", "radio", "seed"};
    static const std::set<std::string> dims{"n_cells", "n_bs_per_cell", "n_tx_antennas", "n_ues_per_cell"};
    static const std::set<std::string> geo{"inter_cell_distance_m", "min_bs_distance_m"};
    static const std::set<std::string> qos{"sinr_target_db", "outage_tolerance"};
    static const std::set<std::string> radio{"max_bs_power_dbm",   "antenna_gain_dbi",     "bandwidth_hz",
                                             "noise_psd_dbm_hz",   "shadowing_sigma_db",   "csi_error_radius",
                                             "pathloss_intercept_db", "pathloss_slope_db"};
    static const std::set<std::string> none;
    if (section.empty()) return top;
    if (section == "dimensions") return dims;
    if (section == "geometry") return geo;
    if (section == "qos") return qos;
    if (section == "radio") return radio;
    return none;
}

inline void check_keys(const nlohmann::json& obj, const std::string& section) {
    const std::string where = section.empty() ? std::string("config") : section;
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    const auto& allowed = allowed_keys(section);
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.contains(key)) throw ConfigError(where + ": unknown field '" + key + "'");
    }
}

inline double get_number(const nlohmann::json& obj, const std::string& section, const std::string& key,
                         double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(section + "." + key + ": expected a number");
    return v.get<double>();
}

inline int get_positive_int(const nlohmann::json& obj, const std::string& section, const std::string& key,
                            int fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) throw ConfigError(section + "." + key + ": expected an integer");
    const int n = v.get<int>();
    if (n < 1) throw ConfigError(section + "." + key + ": must be >= 1");
    return n;
}

/// Scalar applies to every UE; an array must have one entry per UE.
inline std::vector<double> get_per_ue(const nlohmann::json& obj, const std::string& section, const std::string& key,
                                      double fallback, int n_ues) {
    if (!obj.contains(key)) return std::vector<double>(static_cast<std::size_t>(n_ues), fallback);
    const auto& v = obj.at(key);
    if (v.is_number()) return std::vector<double>(static_cast<std::size_t>(n_ues), v.get<double>());
    if (!v.is_array()) throw ConfigError(section + "." + key + ": expected a number or an array of numbers");
    if (static_cast<int>(v.size()) != n_ues)
        throw ConfigError(section + "." + key + ": expected " + std::to_string(n_ues) + " entries, got " +
                          std::to_string(v.size()));
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(section + "." + key + ": array entries must be numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

}  // namespace detail

/// Resolves a JSON configuration (all fields optional, defaults are the reference
/// simulation parameters) into a scenario with derived quantities populated.
inline NetworkScenario build_scenario(const nlohmann::json& config = nlohmann::json::object()) {
    using detail::check_keys;
    check_keys(config, "");
    const nlohmann::json empty = nlohmann::json::object();
    auto section = [&](const char* name) -> const nlohmann::json& {
        if (!config.contains(name)) return empty;
        check_keys(config.at(name), name);
        return config.at(name);
    };

    NetworkScenario sc;
    const auto& jd = section("dimensions");
    sc.dims.n_cells = detail::get_positive_int(jd, "dimensions", "n_cells", 3);
    sc.dims.n_bs_per_cell = detail::get_positive_int(jd, "dimensions", "n_bs_per_cell", 3);
    sc.dims.n_tx_antennas = detail::get_positive_int(jd, "dimensions", "n_tx_antennas", 4);
    sc.dims.n_ues_per_cell = detail::get_positive_int(jd, "dimensions", "n_ues_per_cell", 1);

    const auto& jg = section("geometry");
    const double d = detail::get_number(jg, "geometry", "inter_cell_distance_m", 500.0);
    if (!(d > 0.0)) throw ConfigError("geometry.inter_cell_distance_m: must be > 0");
    sc.min_bs_distance = detail::get_number(jg, "geometry", "min_bs_distance_m", 10.0);
    if (!(sc.min_bs_distance > 0.0) || sc.min_bs_distance >= d / 8.0)
        throw ConfigError("geometry.min_bs_distance_m: must be in (0, inter_cell_distance_m / 8)");

    const auto& jq = section("qos");
    const int n_ues = sc.dims.n_ues();
    const auto gamma_db = detail::get_per_ue(jq, "qos", "sinr_target_db", 6.0, n_ues);
    const auto outage = detail::get_per_ue(jq, "qos", "outage_tolerance", 0.1, n_ues);
    for (std::size_t u = 0; u < gamma_db.size(); ++u) {
        if (!std::isfinite(gamma_db[u])) throw ConfigError("qos.sinr_target_db: must be finite");
        if (!(outage[u] > 0.0 && outage[u] < 1.0))
            throw ConfigError("qos.outage_tolerance: must lie in the open interval (0, 1)");
        sc.qos.sinr_target.push_back(db_to_linear(gamma_db[u]));
        sc.qos.outage_tolerance.push_back(outage[u]);
        sc.qos.bernstein_tau.push_back(-std::log(outage[u]));
    }

    const auto& jr = section("radio");
    auto& r = sc.radio;
    r.max_bs_power = dbm_to_watts(detail::get_number(jr, "radio", "max_bs_power_dbm", 24.0));
    r.antenna_gain_db = detail::get_number(jr, "radio", "antenna_gain_dbi", 5.0);
    r.bandwidth_hz = detail::get_number(jr, "radio", "bandwidth_hz", 10e6);
    if (!(r.bandwidth_hz > 0.0)) throw ConfigError("radio.bandwidth_hz: must be > 0");
    r.noise_psd_dbm_hz = detail::get_number(jr, "radio", "noise_psd_dbm_hz", -174.0);
    r.shadowing_sigma_db = detail::get_number(jr, "radio", "shadowing_sigma_db", 8.0);
    if (r.shadowing_sigma_db < 0.0) throw ConfigError("radio.shadowing_sigma_db: must be >= 0");
    r.csi_error_radius = detail::get_number(jr, "radio", "csi_error_radius", std::sqrt(0.1));
    if (!(r.csi_error_radius >= 0.0)) throw ConfigError("radio.csi_error_radius: must be >= 0");
    r.pathloss_intercept_db = detail::get_number(jr, "radio", "pathloss_intercept_db", 145.4);
    r.pathloss_slope_db = detail::get_number(jr, "radio", "pathloss_slope_db", 37.5);
    r.noise_power = noise_power_watts(r.noise_psd_dbm_hz, r.bandwidth_hz);

    if (config.contains("seed")) {
        if (!config.at("seed").is_number_unsigned() && !config.at("seed").is_number_integer())
            throw ConfigError("seed: expected a non-negative integer");
        sc.seed = config.at("seed").get<std::uint64_t>();
    }

    sc.geometry.inter_cell_distance = d;
    sc.geometry.cell_radius = d / 2.0;
    sc.geometry.cell_centers = triangular_lattice(sc.dims.n_cells, d);
    sc.geometry.bs_positions = place_base_stations(sc.geometry.cell_centers, sc.dims.n_bs_per_cell, d);
    return sc;
}

/// Drops every cell's UEs uniformly in that cell's disc, outside the BS exclusion radius.
inline Geometry place_ues(const NetworkScenario& sc, std::uint64_t seed) {
    Geometry g = sc.geometry;
    g.ue_positions.clear();
    Rng rng = make_rng(seed, 0x75e5);
    for (int c = 0; c < sc.dims.n_cells; ++c) {
        auto pts = sample_uniform_disc(g.cell_centers[static_cast<std::size_t>(c)], g.cell_radius,
                                       sc.dims.n_ues_per_cell, rng, g.bs_positions, sc.min_bs_distance);
        g.ue_positions.insert(g.ue_positions.end(), pts.begin(), pts.end());
    }
    return g;
}

/// Index of the cell whose center is nearest to `p`.
inline int nearest_cell(const Geometry& g, Point p) {
    int best = 0;
    double best_d = distance(p, g.cell_centers.front());
    for (std::size_t c = 1; c < g.cell_centers.size(); ++c) {
        const double dd = distance(p, g.cell_centers[c]);
        if (dd < best_d) {
            best_d = dd;
            best = static_cast<int>(c);
        }
    }
    return best;
}

/// Same scenario with every UE's SINR target replaced (linear).
inline NetworkScenario with_sinr_target(NetworkScenario sc, double gamma_linear) {
    std::fill(sc.qos.sinr_target.begin(), sc.qos.sinr_target.end(), gamma_linear);
    return sc;
}

/// Same scenario with every UE's outage tolerance replaced; tau is re-derived.
inline NetworkScenario with_outage_tolerance(NetworkScenario sc, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("qos.outage_tolerance: must lie in (0, 1)");
    for (std::size_t u = 0; u < sc.qos.outage_tolerance.size(); ++u) {
        sc.qos.outage_tolerance[u] = delta;
        sc.qos.bernstein_tau[u] = -std::log(delta);
    }
    return sc;
}

}  // namespace jtbf
