#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pfpd/damage.hpp"
#include "pfpd/discretization.hpp"
#include "pfpd/kernels.hpp"
#include "pfpd/kinematics.hpp"
#include "pfpd/material.hpp"

namespace pfpd {

struct SolverConfig {
    DamageModel model = DamageModel::pfpd;
    DrivingForceMode driving = DrivingForceMode::energy;
    BasisKind basis = BasisKind::C1;
    double s_c = 0.95;
};

/// Discretized body plus all per-bond reference data and mutable damage /
/// kinematic caches. Built once per scenario.
struct System {
    PointCloud cloud;
    NeighborSystem neigh;
    KernelSpec kernel;
    BondKernels bk;
    MaterialParams mat;
    SolverConfig cfg;

    BondState bonds;
    KinematicCache cache;
    std::vector<double> h;        // per-bond kinematic weight fed to the cache
    std::vector<Mat3> F;          // per-point nonlocal deformation gradient

    // per-thread force buffers, merged in fixed order for determinism
    std::vector<std::vector<Vec3>> force_buf;
    std::vector<std::vector<Mat3>> bond_P_buf;  // per-thread bond stress scratch

    void finalize() {
        bonds.resize(neigh.bond_count());
        cache.basis = cfg.basis;
        cache.resize(cloud.size(), neigh.bond_count());
        h.assign(neigh.bond_count(), 1.0);
        F.assign(cloud.size(), Mat3::Identity());
        int n_threads = 1;
#ifdef _OPENMP
        n_threads = omp_get_max_threads();
#endif
        force_buf.assign(n_threads, std::vector<Vec3>(cloud.size(), Vec3::Zero()));
        std::size_t max_family = 0;
        for (int i = 0; i < cloud.size(); ++i)
            max_family = std::max(max_family, neigh.end(i) - neigh.begin(i));
        bond_P_buf.assign(n_threads, std::vector<Mat3>(max_family));
    }
};

struct SimState {
    std::vector<Vec3> u, v, a, b_int, b_ext;
    std::vector<double> D;
    double t = 0.0;
    long step = 0;

    void resize(int n) {
        u.assign(n, Vec3::Zero());
        v.assign(n, Vec3::Zero());
        a.assign(n, Vec3::Zero());
        b_int.assign(n, Vec3::Zero());
        b_ext.assign(n, Vec3::Zero());
        D.assign(n, 0.0);
    }
};

struct BoundaryCondition {
    enum class Kind { dirichlet_velocity, neumann_force_density };
    Kind kind = Kind::dirichlet_velocity;
    PointSet set;
    std::function<Vec3(double)> value;
    std::array<bool, 3> mask = {true, true, true};
};

inline void validate_boundary_conditions(const std::vector<BoundaryCondition>& bcs,
                                         int n_points) {
    std::vector<std::array<std::uint8_t, 3>> taken(n_points, {0, 0, 0});
    for (const auto& bc : bcs) {
        if (bc.set.empty())
            throw std::invalid_argument("boundary condition '" + bc.set.name +
                                        "': empty point set");
        if (bc.kind != BoundaryCondition::Kind::dirichlet_velocity) continue;
        for (int i : bc.set.indices)
            for (int c = 0; c < 3; ++c)
                if (bc.mask[c]) {
                    if (taken[i][c])
                        throw std::invalid_argument(
                            "overlapping dirichlet sets on point " + std::to_string(i));
                    taken[i][c] = 1;
                }
    }
}

inline void apply_dirichlet_velocity(SimState& state,
                                     const std::vector<BoundaryCondition>& bcs,
                                     double t) {
    for (const auto& bc : bcs) {
        if (bc.kind != BoundaryCondition::Kind::dirichlet_velocity) continue;
        const Vec3 val = bc.value(t);
        for (int i : bc.set.indices)
            for (int c = 0; c < 3; ++c)
                if (bc.mask[c]) state.v[i][c] = val[c];
    }
}

inline void apply_neumann_force_density(SimState& state,
                                        const std::vector<BoundaryCondition>& bcs,
                                        double t) {
    std::fill(state.b_ext.begin(), state.b_ext.end(), Vec3::Zero());
    for (const auto& bc : bcs) {
        if (bc.kind != BoundaryCondition::Kind::neumann_force_density) continue;
        const Vec3 val = bc.value(t);
        for (int i : bc.set.indices)
            for (int c = 0; c < 3; ++c)
                if (bc.mask[c]) state.b_ext[i][c] = val[c];
    }
}

inline void apply_boundary_conditions(SimState& state,
                                      const std::vector<BoundaryCondition>& bcs,
                                      double t) {
    apply_dirichlet_velocity(state, bcs, t);
    apply_neumann_force_density(state, bcs, t);
}

namespace detail {

inline void zero_force_buffers(System& sys) {
    for (auto& buf : sys.force_buf)
        std::fill(buf.begin(), buf.end(), Vec3::Zero());
}

/// Merge per-thread buffers into b_int in fixed thread order.
inline void merge_force_buffers(const System& sys, std::vector<Vec3>& b_int) {
    const int n = sys.cloud.size();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        Vec3 acc = Vec3::Zero();
        for (const auto& buf : sys.force_buf) acc += buf[i];
        b_int[i] = acc;
    }
}

inline void check_finite(const std::vector<Vec3>& b_int, long step) {
    for (std::size_t i = 0; i < b_int.size(); ++i)
        if (!b_int[i].allFinite())
            throw std::runtime_error("non-finite internal force at point " +
                                     std::to_string(i) + ", step " +
                                     std::to_string(step));
}

inline void nonlocal_gradients(System& sys, const std::vector<Vec3>& u) {
    const int n = sys.cloud.size();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
        sys.F[i] = nonlocal_deformation_gradient(i, sys.neigh, sys.cache, u);
}

}  // namespace detail

/// PFPD force evaluation (phase-field damage). Rebuilds moment matrices for
/// points carrying bonds above s_c, assembles nonlocal gradients, then per
/// bond: bond deformation gradient, crack driving force, history/phase-field
/// update, degraded stress, non-uniform stress and force state.
inline void internal_force_pfpd(System& sys, SimState& state) {
    const auto& neigh = sys.neigh;
    const auto& cloud = sys.cloud;
    const int n = cloud.size();
    const double s_c = sys.cfg.s_c;

    // Step 1: mark and rebuild points whose family carries s > s_c
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        bool dirty = sys.cache.dirty[i] != 0;
        for (std::size_t b = neigh.begin(i); b < neigh.end(i) && !dirty; ++b)
            if (sys.bonds.s[b] > s_c) dirty = true;
        if (dirty) {
            for (std::size_t b = neigh.begin(i); b < neigh.end(i); ++b)
                sys.h[b] = kinematic_degradation(sys.bonds.s[b], s_c);
            sys.cache.dirty[i] = 1;
        }
    }
    rebuild_dirty_points(sys.cache, cloud, neigh, sys.bk, sys.h);

    // Step 2: nonlocal deformation gradients
    detail::nonlocal_gradients(sys, state.u);

    // Step 3: bond stress, damage update, force density
    detail::zero_force_buffers(sys);
#pragma omp parallel
    {
        int tid = 0;
#ifdef _OPENMP
        tid = omp_get_thread_num();
#endif
        auto& b_int = sys.force_buf[tid];
        auto& bond_P = sys.bond_P_buf[tid];
#pragma omp for schedule(static)
        for (int i = 0; i < n; ++i) {
            Mat3 Tnu = Mat3::Zero();
            for (std::size_t b = neigh.begin(i); b < neigh.end(i); ++b) {
                const int j = neigh.nbr[b];
                const Vec3& xi = neigh.xi[b];
                const Vec3 dx_cur = xi + (state.u[j] - state.u[i]);
                const Mat3 Fb =
                    bond_deformation_gradient(sys.F[i], sys.F[j], xi, dx_cur);
                const auto [P0, psi0] = svk_stress_and_energy(sys.mat, Fb);
                (void)psi0;
                if (!sys.bonds.exempt[b]) {
                    const double Y =
                        crack_driving_force(sys.cfg.driving, sys.mat, Fb);
                    update_history_and_phasefield(Y, sys.mat.Y_c,
                                                  sys.bonds.history[b],
                                                  sys.bonds.s[b]);
                }
                const Mat3 P = bond_degradation(sys.bonds.s[b]) * P0;
                bond_P[b - neigh.begin(i)] = P;
                const double inv_len2 = 1.0 / xi.squaredNorm();
                Tnu.noalias() +=
                    sys.bk.phi[b] * cloud.vol[j] *
                    (P - (P * xi) * (xi.transpose() * inv_len2));
            }
            for (std::size_t b = neigh.begin(i); b < neigh.end(i); ++b) {
                const int j = neigh.nbr[b];
                const Vec3& xi = neigh.xi[b];
                const Mat3& P = bond_P[b - neigh.begin(i)];
                // bond projection carries 1/|Xi|^2 so the force state is the
                // exact variational derivative of the bond strain energy
                const Vec3 T = sys.bk.phi[b] * (P * xi) / xi.squaredNorm() +
                               Tnu * sys.cache.grad_phi[b] / cloud.vol[j];
                b_int[i] += T * cloud.vol[j];
                b_int[j] -= T * cloud.vol[i];
            }
        }
    }
    detail::merge_force_buffers(sys, state.b_int);
    detail::check_finite(state.b_int, state.step);
}

/// Baseline BAQP force evaluation with critical-stretch bond deletion.
/// Identical structure; failed bonds drop out of the moment matrix and of
/// the force assembly entirely.
inline void internal_force_baqp(System& sys, SimState& state) {
    const auto& neigh = sys.neigh;
    const auto& cloud = sys.cloud;
    const int n = cloud.size();

    // Step 0: bond failure
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        for (std::size_t b = neigh.begin(i); b < neigh.end(i); ++b) {
            if (sys.bonds.d[b] == 0) continue;
            const int j = neigh.nbr[b];
            const double cur_len =
                (neigh.xi[b] + (state.u[j] - state.u[i])).norm();
            const std::uint8_t d_new = critical_stretch_check(
                neigh.xi_norm[b], cur_len, sys.mat.eps_c,
                sys.bonds.exempt[b] != 0, sys.bonds.d[b]);
            if (d_new != sys.bonds.d[b]) {
                sys.bonds.d[b] = d_new;
                sys.cache.dirty[i] = 1;  // the mirrored bond dirties j
            }
        }
    }

    // Step 1: rebuild where damage changed, with h = d
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        if (!sys.cache.dirty[i]) continue;
        for (std::size_t b = neigh.begin(i); b < neigh.end(i); ++b)
            sys.h[b] = static_cast<double>(sys.bonds.d[b]);
    }
    rebuild_dirty_points(sys.cache, cloud, neigh, sys.bk, sys.h);

    // Step 2: nonlocal deformation gradients
    detail::nonlocal_gradients(sys, state.u);

    // Step 3: bond stress and force density, active bonds only
    detail::zero_force_buffers(sys);
#pragma omp parallel
    {
        int tid = 0;
#ifdef _OPENMP
        tid = omp_get_thread_num();
#endif
        auto& b_int = sys.force_buf[tid];
        auto& bond_P = sys.bond_P_buf[tid];
#pragma omp for schedule(static)
        for (int i = 0; i < n; ++i) {
            Mat3 Tnu = Mat3::Zero();
            for (std::size_t b = neigh.begin(i); b < neigh.end(i); ++b) {
                if (sys.bonds.d[b] == 0) continue;
                const int j = neigh.nbr[b];
                const Vec3& xi = neigh.xi[b];
                const Vec3 dx_cur = xi + (state.u[j] - state.u[i]);
                const Mat3 Fb =
                    bond_deformation_gradient(sys.F[i], sys.F[j], xi, dx_cur);
                const auto [P, psi0] = svk_stress_and_energy(sys.mat, Fb);
                (void)psi0;
                bond_P[b - neigh.begin(i)] = P;
                const double inv_len2 = 1.0 / xi.squaredNorm();
                Tnu.noalias() +=
                    sys.bk.phi[b] * cloud.vol[j] *
                    (P - (P * xi) * (xi.transpose() * inv_len2));
            }
            for (std::size_t b = neigh.begin(i); b < neigh.end(i); ++b) {
                if (sys.bonds.d[b] == 0) continue;
                const int j = neigh.nbr[b];
                const Vec3& xi = neigh.xi[b];
                const Mat3& P = bond_P[b - neigh.begin(i)];
                const Vec3 T = sys.bk.phi[b] * (P * xi) / xi.squaredNorm() +
                               Tnu * sys.cache.grad_phi[b] / cloud.vol[j];
                b_int[i] += T * cloud.vol[j];
                b_int[j] -= T * cloud.vol[i];
            }
        }
    }
    detail::merge_force_buffers(sys, state.b_int);
    detail::check_finite(state.b_int, state.step);
}

inline void internal_force(System& sys, SimState& state) {
    if (sys.cfg.model == DamageModel::pfpd)
        internal_force_pfpd(sys, state);
    else
        internal_force_baqp(sys, state);
}

/// CFL-type bound on the dilatational wave speed: dt = safety * dx / c_d.
inline double stable_time_step(const PointCloud& cloud, const MaterialParams& mat,
                               double safety = 0.5) {
    if (safety <= 0.0)
        throw std::invalid_argument("stable_time_step: safety must be positive");
    return safety * cloud.dx / mat.c_d;
}

/// Initial force evaluation so the first Verlet half-kick sees a consistent
/// acceleration. Call once before stepping.
inline void initialize_acceleration(System& sys, SimState& state,
                                    const std::vector<BoundaryCondition>& bcs) {
    apply_boundary_conditions(state, bcs, state.t);
    internal_force(sys, state);
    const double inv_rho = 1.0 / sys.mat.rho;
    for (int i = 0; i < sys.cloud.size(); ++i)
        state.a[i] = (state.b_int[i] + state.b_ext[i]) * inv_rho;
    for (const auto& bc : bcs) {
        if (bc.kind != BoundaryCondition::Kind::dirichlet_velocity) continue;
        for (int i : bc.set.indices)
            for (int c = 0; c < 3; ++c)
                if (bc.mask[c]) state.a[i][c] = 0.0;
    }
}

/// Explicit velocity-Verlet step with Dirichlet velocity overrides applied
/// at the half and full step.
inline void velocity_verlet_step(System& sys, SimState& state, double dt,
                                 const std::vector<BoundaryCondition>& bcs) {
    if (dt <= 0.0) throw std::invalid_argument("velocity_verlet_step: dt <= 0");
    const int n = sys.cloud.size();
    const double half = 0.5 * dt;
    for (int i = 0; i < n; ++i) state.v[i] += half * state.a[i];
    apply_dirichlet_velocity(state, bcs, state.t + half);
    for (int i = 0; i < n; ++i) state.u[i] += dt * state.v[i];
    apply_neumann_force_density(state, bcs, state.t + dt);

    internal_force(sys, state);

    const double inv_rho = 1.0 / sys.mat.rho;
    for (int i = 0; i < n; ++i)
        state.a[i] = (state.b_int[i] + state.b_ext[i]) * inv_rho;
    for (const auto& bc : bcs) {
        if (bc.kind != BoundaryCondition::Kind::dirichlet_velocity) continue;
        for (int i : bc.set.indices)
            for (int c = 0; c < 3; ++c)
                if (bc.mask[c]) state.a[i][c] = 0.0;
    }
    for (int i = 0; i < n; ++i) state.v[i] += half * state.a[i];
    apply_dirichlet_velocity(state, bcs, state.t + dt);
    state.t += dt;
    ++state.step;
}

/// Global scalar diagnostics; the crack dissipation uses gamma_c(s) = s.
struct Diagnostics {
    double kinetic = 0.0;
    double strain = 0.0;
    double crack = 0.0;
    Vec3 total_internal_force = Vec3::Zero();
    double max_velocity = 0.0;
    double max_damage = 0.0;
};

/// Point damage for the active model: kernel-weighted phase-field average
/// (PFPD) or volume-weighted failed-bond fraction (baseline).
inline void compute_point_damage(const System& sys, SimState& state) {
    const int n = sys.cloud.size();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        if (sys.cfg.model == DamageModel::pfpd) {
            state.D[i] = point_damage(i, sys.cloud, sys.neigh, sys.bk, sys.bonds.s);
        } else {
            double failed = 0.0, total = 0.0;
            for (std::size_t b = sys.neigh.begin(i); b < sys.neigh.end(i); ++b) {
                const double vj = sys.cloud.vol[sys.neigh.nbr[b]];
                total += vj;
                if (sys.bonds.d[b] == 0) failed += vj;
            }
            state.D[i] = total > 0.0 ? failed / total : 0.0;
        }
    }
}

inline Diagnostics global_diagnostics(const System& sys, SimState& state) {
    Diagnostics diag;
    const auto& neigh = sys.neigh;
    const auto& cloud = sys.cloud;
    const int n = cloud.size();
    const double crack_scale = sys.mat.Gc / (sys.mat.c0 * sys.mat.horizon);
    for (int i = 0; i < n; ++i) {
        const double vi = cloud.vol[i];
        diag.kinetic += 0.5 * sys.mat.rho * state.v[i].squaredNorm() * vi;
        diag.total_internal_force += state.b_int[i] * vi;
        diag.max_velocity = std::max(diag.max_velocity, state.v[i].norm());
        double strain_i = 0.0, crack_i = 0.0;
        for (std::size_t b = neigh.begin(i); b < neigh.end(i); ++b) {
            const int j = neigh.nbr[b];
            const double vj = cloud.vol[j];
            crack_i += sys.bk.phi[b] * crack_scale * sys.bonds.s[b] * vj;
            if (sys.cfg.model == DamageModel::critical_stretch &&
                sys.bonds.d[b] == 0)
                continue;
            const Vec3 dx_cur = neigh.xi[b] + (state.u[j] - state.u[i]);
            const Mat3 Fb = bond_deformation_gradient(sys.F[i], sys.F[j],
                                                      neigh.xi[b], dx_cur);
            const auto [P0, psi0] = svk_stress_and_energy(sys.mat, Fb);
            (void)P0;
            strain_i += sys.bk.phi[b] * bond_degradation(sys.bonds.s[b]) * psi0 * vj;
        }
        diag.strain += strain_i * vi;
        diag.crack += crack_i * vi;
    }
    compute_point_damage(sys, state);
    for (int i = 0; i < n; ++i)
        diag.max_damage = std::max(diag.max_damage, state.D[i]);
    if (!std::isfinite(diag.kinetic) || !std::isfinite(diag.strain) ||
        !std::isfinite(diag.crack))
        throw std::runtime_error("global_diagnostics: non-finite energy");
    return diag;
}

}  // namespace pfpd
