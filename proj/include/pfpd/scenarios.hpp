#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfpd/config.hpp"
#include "pfpd/io.hpp"
#include "pfpd/normalization.hpp"
#include "pfpd/solver.hpp"

namespace pfpd {

/// Crack tip extraction rule: the damaged point (D >= threshold) that
/// maximizes the advance coordinate inside the search region.
struct TrackingSpec {
    bool enabled = false;
    double threshold = 0.5;
    int axis = 0;        // advance coordinate
    int direction = 1;   // +1 advancing toward +axis, -1 toward -axis
    double min_coord = 0.0;  // notch tip coordinate; tip must lie beyond
    Vec3 region_lo = Vec3::Constant(-1e300);
    Vec3 region_hi = Vec3::Constant(1e300);
};

struct CrackTipSample {
    double t = 0.0;
    bool has_tip = false;
    Vec3 pos = Vec3::Zero();
};

struct CrackTipTrace {
    std::vector<CrackTipSample> samples;
};

inline CrackTipSample track_crack_tip(const std::vector<double>& damage,
                                      const PointCloud& cloud,
                                      const TrackingSpec& spec, double t) {
    CrackTipSample sample;
    sample.t = t;
    double best = -1e300;
    for (int i = 0; i < cloud.size(); ++i) {
        if (damage[i] < spec.threshold) continue;
        const Vec3& x = cloud.X[i];
        bool inside = true;
        for (int c = 0; c < 3; ++c)
            inside = inside && x[c] >= spec.region_lo[c] && x[c] <= spec.region_hi[c];
        if (!inside) continue;
        const double adv = spec.direction * x[spec.axis];
        if (adv <= spec.direction * spec.min_coord) continue;
        if (adv > best) {
            best = adv;
            sample.pos = x;
            sample.has_tip = true;
        }
    }
    return sample;
}

/// Tip speeds from centered finite differences over the trace, smoothed by
/// a 3-sample moving average. First valid sample gets speed 0.
inline std::vector<double> trace_speeds(const CrackTipTrace& trace) {
    const auto& s = trace.samples;
    const int n = static_cast<int>(s.size());
    std::vector<double> raw(n, 0.0);
    for (int k = 0; k < n; ++k) {
        if (!s[k].has_tip) continue;
        const int prev = k - 1, next = k + 1;
        if (prev >= 0 && next < n && s[prev].has_tip && s[next].has_tip) {
            raw[k] = (s[next].pos - s[prev].pos).norm() / (s[next].t - s[prev].t);
        } else if (prev >= 0 && s[prev].has_tip) {
            raw[k] = (s[k].pos - s[prev].pos).norm() / (s[k].t - s[prev].t);
        }
    }
    std::vector<double> smooth(n, 0.0);
    for (int k = 0; k < n; ++k) {
        double sum = 0.0;
        int cnt = 0;
        for (int j = std::max(0, k - 1); j <= std::min(n - 1, k + 1); ++j) {
            sum += raw[j];
            ++cnt;
        }
        smooth[k] = sum / cnt;
    }
    return smooth;
}

/// Angle (degrees) between the least-squares line through damaged points in
/// the given region and a reference direction, via the principal axis of
/// the in-plane point scatter.
inline std::optional<double> crack_angle_degrees(const std::vector<double>& damage,
                                                 const PointCloud& cloud,
                                                 double threshold, const Vec3& lo,
                                                 const Vec3& hi,
                                                 const Eigen::Vector2d& reference) {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    int cnt = 0;
    for (int i = 0; i < cloud.size(); ++i) {
        if (damage[i] < threshold) continue;
        const Vec3& p = cloud.X[i];
        bool inside = true;
        for (int c = 0; c < 3; ++c) inside = inside && p[c] >= lo[c] && p[c] <= hi[c];
        if (!inside) continue;
        sx += p[0];
        sy += p[1];
        sxx += p[0] * p[0];
        syy += p[1] * p[1];
        sxy += p[0] * p[1];
        ++cnt;
    }
    if (cnt < 5) return std::nullopt;
    const double mx = sx / cnt, my = sy / cnt;
    Eigen::Matrix2d cov;
    cov << sxx / cnt - mx * mx, sxy / cnt - mx * my, sxy / cnt - mx * my,
        syy / cnt - my * my;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    const Eigen::Vector2d dir = es.eigenvectors().col(1);  // largest eigenvalue
    const double c = std::abs(dir.dot(reference.normalized())) / dir.norm();
    return std::acos(std::min(1.0, c)) * 180.0 / 3.14159265358979323846;
}

/// Fully resolved simulation setup.
struct Scenario {
    std::string name;
    System sys;
    SimState state;
    std::vector<BoundaryCondition> bcs;
    std::vector<PrecrackPlane> precracks;
    PointSet no_failure;
    TrackingSpec tracking;
    double dt = 0.0;
    double t_end = 0.0;
    double track_interval = 2e-6;
    long output_every = 0;  // steps between snapshots; 0 = auto
    long seed = 0;
};

namespace detail {

inline void apply_precracks_and_zones(Scenario& sc) {
    for (const auto& pc : sc.precracks)
        for_each_precrack_bond(sc.sys.cloud, sc.sys.neigh, pc,
                               [&](std::size_t b) { sc.sys.bonds.break_bond(b); });
    if (!sc.no_failure.empty())
        mark_failure_exempt(sc.sys.bonds, sc.sys.neigh, sc.no_failure);
}

inline void finish_build(Scenario& sc, const Config& cfg) {
    const KernelSpec kspec{kernel_kind_from_string(cfg.get_string("kernel", "cubic")),
                           sc.sys.neigh.horizon};
    sc.sys.kernel = kspec;
    sc.sys.bk = build_bond_kernels(sc.sys.cloud, sc.sys.neigh, kspec);
    sc.sys.cfg.basis = basis_from_string(cfg.get_string("basis", "C1"));
    sc.sys.cfg.s_c = cfg.get_double("s_c", 0.95);
    sc.sys.cfg.model = damage_model_from_string(cfg.get_string("damage", "pfpd"));
    sc.sys.cfg.driving =
        driving_force_from_string(cfg.get_string("driving_force", "energy"));
    sc.sys.finalize();
    sc.state.resize(sc.sys.cloud.size());
    apply_precracks_and_zones(sc);
    const double safety = cfg.get_double("safety", 0.5);
    sc.dt = cfg.has("dt") ? cfg.get_double("dt", 0.0)
                          : stable_time_step(sc.sys.cloud, sc.sys.mat, safety);
    sc.track_interval = cfg.get_double("track_interval", 2e-6);
    sc.output_every = cfg.get_long("output_every", 0);
    sc.seed = cfg.get_long("seed", 0);
}

inline MaterialParams material_from_config(const Config& cfg, double rho, double E,
                                           double nu, double Gc, double horizon,
                                           KernelKind kind,
                                           std::optional<double> eps_c_default) {
    const KernelSpec kspec{kind, horizon};
    const double c0 = normalization_constant(kspec);
    std::optional<double> eps_c = eps_c_default;
    if (cfg.has("epsilon_c")) eps_c = cfg.get_double("epsilon_c", 0.0);
    return derive_params(cfg.get_double("material.rho", rho),
                         cfg.get_double("material.E", E),
                         cfg.get_double("material.nu", nu),
                         cfg.get_double("material.Gc", Gc), horizon, c0, eps_c);
}

inline Scenario build_mode_plate(const Config& cfg, bool mode_ii) {
    Scenario sc;
    sc.name = mode_ii ? "mode_ii" : "mode_i";
    const bool desk = cfg.get_string("preset", "full") == "desk";
    const double L = cfg.get_double("grid.l", 0.1);
    const long n = cfg.get_long("grid.n", desk ? 60 : 120);
    const double dx = L / static_cast<double>(n);
    const long nz = std::max(1L, n / 10);
    sc.sys.cloud = generate_grid(L, L, nz * dx, dx);
    sc.sys.neigh = build_neighborhoods(sc.sys.cloud, cfg.get_double("horizon_ratio", 3),
                                       cfg.get_double("eps_delta", 0.015));
    sc.sys.mat = material_from_config(
        cfg, 2500.0, 32e9, 0.25, 100.0, sc.sys.neigh.horizon,
        kernel_kind_from_string(cfg.get_string("kernel", "cubic")), std::nullopt);

    // central notch from the left edge to the plate center
    PrecrackPlane notch;
    notch.point = Vec3(0.0, 0.5 * L, 0.0);
    notch.normal = Vec3::UnitY();
    notch.extent_lo = Vec3::Constant(-1e300);
    notch.extent_hi = Vec3(0.5 * L, 1e300, 1e300);
    sc.precracks.push_back(notch);

    PointSet top = tag_layers(sc.sys.cloud, "top", 1, true, 1);
    PointSet bottom = tag_layers(sc.sys.cloud, "bottom", 1, false, 1);
    const double u_dot = cfg.get_double("bc.speed", mode_ii ? 0.1 : 0.2);
    const Vec3 dir = mode_ii ? Vec3::UnitX() : Vec3::UnitY();
    BoundaryCondition bc_top, bc_bot;
    bc_top.set = top;
    bc_top.value = [dir, u_dot](double) { return Vec3(u_dot * dir); };
    bc_bot.set = bottom;
    bc_bot.value = [dir, u_dot](double) { return Vec3(-u_dot * dir); };
    sc.bcs = {bc_top, bc_bot};

    sc.no_failure.name = "boundary_layers";
    sc.no_failure.indices = top.indices;
    sc.no_failure.indices.insert(sc.no_failure.indices.end(), bottom.indices.begin(),
                                 bottom.indices.end());
    std::sort(sc.no_failure.indices.begin(), sc.no_failure.indices.end());

    sc.tracking.enabled = true;
    sc.tracking.axis = 0;
    sc.tracking.direction = 1;
    sc.tracking.min_coord = 0.5 * L;
    sc.t_end = cfg.get_double("t_end", 1.71e-4);
    finish_build(sc, cfg);
    return sc;
}

inline Scenario build_btt(const Config& cfg) {
    Scenario sc;
    sc.name = "btt";
    const bool desk = cfg.get_string("preset", "full") == "desk";
    const double lx = cfg.get_double("grid.lx", 0.1);
    const double ly = 0.4 * lx;
    const double lz = 0.04 * lx;
    const long ny = cfg.get_long("grid.ny", desk ? 50 : 100);
    const double dx = ly / static_cast<double>(ny);
    sc.sys.cloud = generate_grid(lx, ly, lz, dx);
    sc.sys.neigh = build_neighborhoods(sc.sys.cloud, cfg.get_double("horizon_ratio", 3),
                                       cfg.get_double("eps_delta", 0.015));
    sc.sys.mat = material_from_config(
        cfg, 2450.0, 32e9, 0.25, 3.0, sc.sys.neigh.horizon,
        kernel_kind_from_string(cfg.get_string("kernel", "cubic")), std::nullopt);

    PrecrackPlane notch;
    notch.point = Vec3(0.0, 0.5 * ly, 0.0);
    notch.normal = Vec3::UnitY();
    notch.extent_lo = Vec3::Constant(-1e300);
    notch.extent_hi = Vec3(0.5 * lx, 1e300, 1e300);
    sc.precracks.push_back(notch);

    const double sigma = cfg.get_double("bc.sigma", 1e6);
    BoundaryCondition bc_top, bc_bot;
    bc_top.kind = BoundaryCondition::Kind::neumann_force_density;
    bc_top.set = tag_layers(sc.sys.cloud, "top", 1, true, 1);
    bc_top.value = [sigma, dx](double) { return Vec3(0.0, sigma / dx, 0.0); };
    bc_bot.kind = BoundaryCondition::Kind::neumann_force_density;
    bc_bot.set = tag_layers(sc.sys.cloud, "bottom", 1, false, 1);
    bc_bot.value = [sigma, dx](double) { return Vec3(0.0, -sigma / dx, 0.0); };
    sc.bcs = {bc_top, bc_bot};

    sc.tracking.enabled = true;
    sc.tracking.axis = 0;
    sc.tracking.direction = 1;
    sc.tracking.min_coord = 0.5 * lx;  // branches allowed: y unbounded
    sc.t_end = cfg.get_double("t_end", 5e-5);
    finish_build(sc, cfg);
    return sc;
}

inline Scenario build_kalthoff_winkler(const Config& cfg) {
    Scenario sc;
    sc.name = "kalthoff_winkler";
    const bool desk = cfg.get_string("preset", "full") == "desk";
    const double lx = 0.1, ly = 0.2, lz = 0.009;
    // desk spacing chosen so the grid rounds to 55 x 111 x 5
    const double dx = cfg.get_double("grid.dx", desk ? 1.805e-3 : 0.9e-3);
    sc.sys.cloud = generate_grid(lx, ly, lz, dx);
    sc.sys.neigh = build_neighborhoods(sc.sys.cloud, cfg.get_double("horizon_ratio", 3),
                                       cfg.get_double("eps_delta", 0.015));
    sc.sys.mat = material_from_config(
        cfg, 8000.0, 190e9, 0.3, 34000.0, sc.sys.neigh.horizon,
        kernel_kind_from_string(cfg.get_string("kernel", "cubic")), std::nullopt);

    // two vertical notches from the impacted edge, 50 mm long, 50 mm apart
    const double notch_y0 = ly - 0.05;
    for (double notch_x : {0.25 * lx, 0.75 * lx}) {
        PrecrackPlane notch;
        notch.point = Vec3(notch_x, 0.0, 0.0);
        notch.normal = Vec3::UnitX();
        notch.extent_lo = Vec3(-1e300, notch_y0, -1e300);
        notch.extent_hi = Vec3::Constant(1e300);
        sc.precracks.push_back(notch);
    }

    // impact between the notches on the first five point layers
    const double v0 = cfg.get_double("bc.v0", 16.5);
    const double t1 = cfg.get_double("bc.t1", 1e-5);
    BoundaryCondition impact;
    impact.set = tag_point_set(sc.sys.cloud, "impact", [&](const Vec3& x) {
        return x[1] > ly - 5.0 * dx && x[0] > 0.25 * lx && x[0] < 0.75 * lx;
    });
    impact.value = [v0, t1](double t) {
        const double v = t <= t1 ? v0 * t / t1 : v0;
        return Vec3(0.0, -v, 0.0);
    };
    sc.bcs = {impact};

    sc.no_failure = tag_layers(sc.sys.cloud, "support", 1, false, 3);

    // trace the crack from the left notch tip, advancing downward
    sc.tracking.enabled = true;
    sc.tracking.axis = 1;
    sc.tracking.direction = -1;
    sc.tracking.min_coord = notch_y0;
    sc.tracking.region_hi = Vec3(0.5 * lx, 1e300, 1e300);
    sc.t_end = cfg.get_double("t_end", 2e-4);
    finish_build(sc, cfg);
    return sc;
}

}  // namespace detail

inline Scenario build_scenario(const Config& cfg) {
    const std::string name = cfg.get_string("scenario", "");
    if (name == "mode_i") return detail::build_mode_plate(cfg, false);
    if (name == "mode_ii") return detail::build_mode_plate(cfg, true);
    if (name == "btt") return detail::build_btt(cfg);
    if (name == "kalthoff_winkler") return detail::build_kalthoff_winkler(cfg);
    throw ConfigError("unknown scenario: '" + name + "'");
}

inline Scenario build_scenario(const std::string& name,
                               const std::vector<std::string>& overrides = {}) {
    Config cfg;
    cfg.set("scenario", name);
    for (const auto& kv : overrides) cfg.apply_override(kv);
    return build_scenario(cfg);
}

/// Pre-run checks: point sets non-empty, Dirichlet sets non-overlapping,
/// time step inside the stability bound.
inline void validate_scenario(const Scenario& sc) {
    validate_boundary_conditions(sc.bcs, sc.sys.cloud.size());
    if (sc.dt <= 0.0 || sc.dt > sc.sys.cloud.dx / sc.sys.mat.c_d)
        throw ConfigError("time step " + std::to_string(sc.dt) +
                          " violates the stability bound");
    if (sc.t_end <= 0.0) throw ConfigError("t_end must be positive");
}

struct RunSummary {
    long steps = 0;
    double runtime_seconds = 0.0;
    double max_damage = 0.0;
    double c0 = 0.0;
    std::string out_dir;
};

inline RunSummary run_simulation(Scenario& sc, const std::string& out_dir,
                                 SnapshotFormat fmt = SnapshotFormat::vtk_legacy_points,
                                 CrackTipTrace* trace_out = nullptr) {
    validate_scenario(sc);
    std::filesystem::create_directories(out_dir);
    const auto t_start = std::chrono::steady_clock::now();

    const long n_steps =
        static_cast<long>(std::ceil(sc.t_end / sc.dt - 1e-9));
    const long track_every =
        std::max(1L, static_cast<long>(std::llround(sc.track_interval / sc.dt)));
    const long output_every =
        sc.output_every > 0 ? sc.output_every : std::max(1L, n_steps / 20);

    initialize_acceleration(sc.sys, sc.state, sc.bcs);
    TimeseriesWriter ts(out_dir + "/timeseries.csv");
    CrackTipTrace trace;
    const double half_cR = 0.5 * sc.sys.mat.c_R;

    auto emit = [&](bool snapshot) {
        const Diagnostics diag = global_diagnostics(sc.sys, sc.state);
        CrackTipSample tip;
        if (sc.tracking.enabled) {
            tip = track_crack_tip(sc.state.D, sc.sys.cloud, sc.tracking, sc.state.t);
            trace.samples.push_back(tip);
        }
        double speed = 0.0;
        if (tip.has_tip) {
            const auto speeds = trace_speeds(trace);
            speed = speeds.back();
        }
        ts.append(sc.state.t, diag, tip.has_tip, tip.pos, speed, half_cR);
        if (snapshot) {
            char name[64];
            std::snprintf(name, sizeof(name), "/snapshot_%06ld.%s", sc.state.step,
                          fmt == SnapshotFormat::csv ? "csv" : "vtk");
            write_snapshot(sc.state, sc.sys.cloud, out_dir + name, fmt);
        }
    };

    emit(true);
    for (long k = 1; k <= n_steps; ++k) {
        velocity_verlet_step(sc.sys, sc.state, sc.dt, sc.bcs);
        if (k % track_every == 0 || k % output_every == 0 || k == n_steps)
            emit(k % output_every == 0 || k == n_steps);
    }

    RunSummary summary;
    summary.steps = sc.state.step;
    summary.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    compute_point_damage(sc.sys, sc.state);
    for (double d : sc.state.D) summary.max_damage = std::max(summary.max_damage, d);
    summary.c0 = sc.sys.mat.c0;
    summary.out_dir = out_dir;
    if (trace_out) *trace_out = trace;
    return summary;
}

}  // namespace pfpd
