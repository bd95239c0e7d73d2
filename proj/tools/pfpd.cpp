// Command-line driver: scenario runs, normalization-constant queries, and
// setup validation.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "pfpd/scenarios.hpp"

namespace {

void set_threads(int threads) {
#ifdef _OPENMP
    if (threads <= 0) {
        if (const char* env = std::getenv("PFPD_THREADS")) threads = std::atoi(env);
    }
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

pfpd::Config assemble_config(const std::string& scenario,
                             const std::string& config_path,
                             const std::string& preset, double t_end,
                             const std::vector<std::string>& overrides) {
    pfpd::Config cfg;
    if (!config_path.empty()) cfg = pfpd::Config::from_file(config_path);
    if (!scenario.empty()) cfg.set("scenario", scenario);
    if (!preset.empty()) cfg.set("preset", preset);
    if (t_end > 0.0) cfg.set("t_end", pfpd::detail::fmt(t_end));
    for (const auto& kv : overrides) cfg.apply_override(kv);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"meshfree peridynamic fracture solver"};
    app.require_subcommand(1);

    std::string scenario, config_path, out_dir = "out", preset, format = "vtk";
    std::vector<std::string> overrides;
    int threads = 0;
    double t_end = 0.0;

    auto* run = app.add_subcommand("run", "run a benchmark scenario");
    run->add_option("--scenario", scenario,
                    "mode_i | mode_ii | btt | kalthoff_winkler");
    run->add_option("--config", config_path, "key=value config file");
    run->add_option("--override", overrides, "override config entry, key=value");
    run->add_option("--out-dir", out_dir, "output directory");
    run->add_option("--preset", preset, "full | desk");
    run->add_option("--t-end", t_end, "simulated end time [s]");
    run->add_option("--threads", threads, "worker thread count");
    run->add_option("--format", format, "snapshot format: vtk | csv");

    std::string kernel = "cubic", profile_path;
    auto* c0 = app.add_subcommand("c0", "print the normalization constant");
    c0->add_option("--kernel", kernel, "cubic | linear | constant");
    c0->add_option("--profile", profile_path, "write xi,f_omega samples to CSV");

    std::string v_scenario, v_config;
    std::vector<std::string> v_overrides;
    auto* validate = app.add_subcommand("validate", "check a setup without running");
    validate->add_option("--scenario", v_scenario, "scenario name");
    validate->add_option("--config", v_config, "key=value config file");
    validate->add_option("--override", v_overrides, "override config entry");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            set_threads(threads);
            auto cfg = assemble_config(scenario, config_path, preset, t_end, overrides);
            pfpd::Scenario sc = pfpd::build_scenario(cfg);
            const auto fmt = format == "csv" ? pfpd::SnapshotFormat::csv
                                             : pfpd::SnapshotFormat::vtk_legacy_points;
            std::printf("scenario %s: %d points, dt = %.6e s, %ld steps\n",
                        sc.name.c_str(), sc.sys.cloud.size(), sc.dt,
                        static_cast<long>(std::ceil(sc.t_end / sc.dt)));
            const pfpd::RunSummary s = pfpd::run_simulation(sc, out_dir, fmt);
            std::printf(
                "done: %ld steps in %.1f s, max damage %.4f, c0 = %.12g, "
                "output in %s\n",
                s.steps, s.runtime_seconds, s.max_damage, s.c0, s.out_dir.c_str());
        } else if (c0->parsed()) {
            const pfpd::KernelSpec spec{pfpd::kernel_kind_from_string(kernel), 1.0};
            std::printf("c0(%s) = %.15g\n", kernel.c_str(),
                        pfpd::normalization_constant(spec));
            if (!profile_path.empty()) {
                pfpd::write_c0_profile(pfpd::c0_profile(spec), profile_path);
                std::printf("profile written to %s\n", profile_path.c_str());
            }
        } else if (validate->parsed()) {
            auto cfg = assemble_config(v_scenario, v_config, "", 0.0, v_overrides);
            pfpd::Scenario sc = pfpd::build_scenario(cfg);
            pfpd::validate_scenario(sc);
            std::printf(
                "ok: scenario %s, %d points, %zu bonds, dt = %.6e s, "
                "horizon = %.6e m\n",
                sc.name.c_str(), sc.sys.cloud.size(), sc.sys.neigh.bond_count(),
                sc.dt, sc.sys.neigh.horizon);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
