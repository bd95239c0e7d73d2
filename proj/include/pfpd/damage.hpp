#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfpd/discretization.hpp"
#include "pfpd/kernels.hpp"
#include "pfpd/material.hpp"

namespace pfpd {

enum class DamageModel { pfpd, critical_stretch };
enum class DrivingForceMode { energy, stress };

inline DamageModel damage_model_from_string(const std::string& name) {
    if (name == "pfpd") return DamageModel::pfpd;
    if (name == "critical_stretch") return DamageModel::critical_stretch;
    throw std::invalid_argument("unknown damage model: '" + name + "'");
}

inline DrivingForceMode driving_force_from_string(const std::string& name) {
    if (name == "energy") return DrivingForceMode::energy;
    if (name == "stress") return DrivingForceMode::stress;
    throw std::invalid_argument("unknown driving_force: '" + name + "'");
}

/// Per-bond damage state for both models. Pre-cracked bonds carry an
/// infinite history so s stays pinned at 1 under any later max().
struct BondState {
    std::vector<double> s;         // bond phase-field, 0 intact .. 1 broken
    std::vector<double> history;   // running max of the crack driving force
    std::vector<std::uint8_t> d;   // baseline failure flag, 1 active
    std::vector<std::uint8_t> exempt;  // no-failure zone membership

    static constexpr double precrack_sentinel =
        std::numeric_limits<double>::infinity();

    void resize(std::size_t n_bonds) {
        s.assign(n_bonds, 0.0);
        history.assign(n_bonds, 0.0);
        d.assign(n_bonds, 1);
        exempt.assign(n_bonds, 0);
    }

    void break_bond(std::size_t b) {
        s[b] = 1.0;
        history[b] = precrack_sentinel;
        d[b] = 0;
    }
};

/// A bond is exempt from damage if either endpoint lies in a no-failure set.
inline void mark_failure_exempt(BondState& state, const NeighborSystem& neigh,
                                const PointSet& no_fail) {
    std::vector<std::uint8_t> in_set(neigh.offset.size() - 1, 0);
    for (int i : no_fail.indices) in_set[i] = 1;
    const int n = static_cast<int>(neigh.offset.size()) - 1;
    for (int i = 0; i < n; ++i)
        for (std::size_t b = neigh.begin(i); b < neigh.end(i); ++b)
            if (in_set[i] || in_set[neigh.nbr[b]]) state.exempt[b] = 1;
}

/// Energetic degradation g(s) = (1-s)^2.
inline double bond_degradation(double s) {
    const double u = 1.0 - s;
    return u * u;
}

/// Crack driving force of a bond deformation gradient: tensile strain
/// energy density, or the Macaulay-squared maximum principal Cauchy stress
/// over 2E.
inline double crack_driving_force(DrivingForceMode mode, const MaterialParams& mat,
                                  const Mat3& F_bond) {
    if (mode == DrivingForceMode::energy) return tensile_energy_split(mat, F_bond);
    const double s1 = std::max(0.0, max_principal_cauchy_stress(mat, F_bond));
    return s1 * s1 / (2.0 * mat.E);
}

/// Irreversible history and phase-field update:
///   H' = max(H, Y),  s' = min(1, H'/(H' + Y_c)).
inline void update_history_and_phasefield(double Y, double Y_c, double& history,
                                          double& s) {
    history = std::max(history, Y);
    if (std::isinf(history)) {
        s = 1.0;
        return;
    }
    s = std::min(1.0, history / (history + Y_c));
}

/// Kernel-weighted point damage D = sum_j Phi_ij s_ij V_j.
inline double point_damage(int i, const PointCloud& cloud, const NeighborSystem& neigh,
                           const BondKernels& bk, std::span<const double> s) {
    if (neigh.begin(i) == neigh.end(i)) return 0.0;  // isolated
    double num = 0.0, den = 0.0;
    for (std::size_t b = neigh.begin(i); b < neigh.end(i); ++b) {
        const double w = bk.phi[b] * cloud.vol[neigh.nbr[b]];
        num += w * s[b];
        den += w;
    }
    return den > 0.0 ? num / den : 0.0;
}

/// Baseline bond deletion: fails iff strain strictly exceeds eps_c, failure
/// is permitted, and the bond was still active. Irreversible.
inline std::uint8_t critical_stretch_check(double ref_length, double cur_length,
                                           double eps_c, bool failure_exempt,
                                           std::uint8_t d_prev) {
    if (ref_length <= 0.0)
        throw std::domain_error("critical_stretch_check: ref_length must be positive");
    if (d_prev == 0) return 0;
    if (failure_exempt) return 1;
    const double strain = (cur_length - ref_length) / ref_length;
    return strain > eps_c ? 0 : 1;
}

}  // namespace pfpd
