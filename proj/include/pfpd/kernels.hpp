#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfpd/discretization.hpp"
#include "pfpd/quadrature.hpp"

namespace pfpd {

enum class KernelKind { constant, linear, cubic_bspline };

inline KernelKind kernel_kind_from_string(const std::string& name) {
    if (name == "constant") return KernelKind::constant;
    if (name == "linear") return KernelKind::linear;
    if (name == "cubic") return KernelKind::cubic_bspline;
    throw std::invalid_argument("unknown kernel: '" + name + "'");
}

inline std::string to_string(KernelKind k) {
    switch (k) {
        case KernelKind::constant: return "constant";
        case KernelKind::linear: return "linear";
        case KernelKind::cubic_bspline: return "cubic";
    }
    return "?";
}

/// Spherical influence function with compact support of radius delta.
struct KernelSpec {
    KernelKind kind = KernelKind::cubic_bspline;
    double horizon = 1.0;
};

/// psi(|Xi|). Zero beyond the horizon; constant kernel is stored
/// unnormalized (all downstream formulas divide by omega_0).
inline double kernel_value(const KernelSpec& spec, double bond_length) {
    if (bond_length <= 0.0)
        throw std::domain_error("kernel_value: bond_length must be positive");
    const double d = spec.horizon;
    const double q = bond_length / d;
    if (q > 1.0) return 0.0;
    constexpr double pi = 3.14159265358979323846;
    switch (spec.kind) {
        case KernelKind::constant:
            return 1.0;
        case KernelKind::linear:
            return 3.0 / (pi * d * d * d) * (1.0 - q);
        case KernelKind::cubic_bspline: {
            const double c = 8.0 / (pi * d * d * d);
            if (q <= 0.5) return c * (1.0 - 6.0 * q * q + 6.0 * q * q * q);
            const double u = 1.0 - q;
            return c * 2.0 * u * u * u;
        }
    }
    return 0.0;
}

/// Radial breakpoints of the piecewise kernel definition in normalized
/// coordinates rho = r/delta, used to split quadrature intervals.
inline std::vector<double> kernel_breakpoints(const KernelSpec& spec) {
    if (spec.kind == KernelKind::cubic_bspline) return {0.5};
    return {};
}

/// 4 pi int_0^delta psi(r) r^2 dr. Equals 1 for the normalized kernels.
inline double continuum_kernel_integral(const KernelSpec& spec) {
    const double d = spec.horizon;
    auto f = [&](double rho) {
        return kernel_value(spec, rho * d) * rho * rho;
    };
    constexpr double pi = 3.14159265358979323846;
    double sum = 0.0;
    double lo = 0.0;
    for (double bp : kernel_breakpoints(spec)) {
        sum += gauss64().integrate(f, lo, bp);
        lo = bp;
    }
    sum += gauss64().integrate(f, lo, 1.0);
    return 4.0 * pi * d * d * d * sum;
}

/// Discrete kernel integral omega_0(X_i) = sum_j psi(|Xi_ij|) V_j.
struct KernelIntegralField {
    std::vector<double> omega0;
    std::vector<std::uint8_t> isolated;
};

inline KernelIntegralField discrete_kernel_integrals(const PointCloud& cloud,
                                                     const NeighborSystem& neigh,
                                                     const KernelSpec& spec) {
    const int n = cloud.size();
    KernelIntegralField field;
    field.omega0.assign(n, 0.0);
    field.isolated.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        double w = 0.0;
        for (std::size_t b = neigh.offset[i]; b < neigh.offset[i + 1]; ++b)
            w += kernel_value(spec, neigh.xi_norm[b]) * cloud.vol[neigh.nbr[b]];
        field.omega0[i] = w;
        if (neigh.offset[i] == neigh.offset[i + 1]) field.isolated[i] = 1;
    }
    return field;
}

/// Averaged bond kernel Phi(i,j) = (psi/omega0(i) + psi/omega0(j)) / 2.
/// Symmetric exactly, since all built-in kernels are spherical.
inline double averaged_bond_kernel(double psi, double omega0_i, double omega0_j) {
    if (omega0_i <= 0.0 || omega0_j <= 0.0)
        throw std::domain_error("averaged_bond_kernel: degenerate family (omega0 <= 0)");
    return 0.5 * psi * (1.0 / omega0_i + 1.0 / omega0_j);
}

/// Per-bond kernel values psi and averaged bond kernels Phi, fixed in the
/// reference configuration.
struct BondKernels {
    std::vector<double> psi;
    std::vector<double> phi;
    KernelIntegralField integrals;
};

inline BondKernels build_bond_kernels(const PointCloud& cloud,
                                      const NeighborSystem& neigh,
                                      const KernelSpec& spec) {
    BondKernels bk;
    bk.integrals = discrete_kernel_integrals(cloud, neigh, spec);
    bk.psi.resize(neigh.bond_count());
    bk.phi.resize(neigh.bond_count());
    for (int i = 0; i < cloud.size(); ++i) {
        for (std::size_t b = neigh.offset[i]; b < neigh.offset[i + 1]; ++b) {
            const int j = neigh.nbr[b];
            bk.psi[b] = kernel_value(spec, neigh.xi_norm[b]);
            bk.phi[b] = averaged_bond_kernel(bk.psi[b], bk.integrals.omega0[i],
                                             bk.integrals.omega0[j]);
        }
    }
    return bk;
}

}  // namespace pfpd
