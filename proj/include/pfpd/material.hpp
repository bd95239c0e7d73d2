#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include "pfpd/discretization.hpp"

namespace pfpd {

/// Saint Venant-Kirchhoff material with derived elastic and fracture
/// parameters. All values in SI base units.
struct MaterialParams {
    double rho = 0.0;   // mass density
    double E = 0.0;     // Young's modulus
    double nu = 0.0;    // Poisson's ratio
    double Gc = 0.0;    // critical energy release rate

    double lambda = 0.0;  // first Lame parameter
    double mu = 0.0;      // shear modulus (= G)
    double c_s = 0.0;     // shear wave speed
    double c_d = 0.0;     // dilatational wave speed
    double c_R = 0.0;     // Rayleigh wave speed estimate
    double Y_c = 0.0;     // critical crack driving force
    double sigma_c = 0.0; // critical stress
    double c0 = 0.0;      // kernel normalization constant used
    double horizon = 0.0;
    double eps_c = 0.0;   // critical stretch (baseline model only)
};

inline MaterialParams derive_params(double rho, double E, double nu, double Gc,
                                    double horizon, double c0,
                                    std::optional<double> eps_c = std::nullopt) {
    if (rho <= 0.0 || E <= 0.0 || Gc <= 0.0)
        throw std::invalid_argument("derive_params: rho, E, Gc must be positive");
    if (nu <= -1.0 || nu >= 0.5)
        throw std::invalid_argument("derive_params: nu must be in (-1, 1/2)");
    if (horizon <= 0.0 || c0 <= 0.0)
        throw std::invalid_argument("derive_params: horizon and c0 must be positive");
    MaterialParams m;
    m.rho = rho;
    m.E = E;
    m.nu = nu;
    m.Gc = Gc;
    m.horizon = horizon;
    m.c0 = c0;
    m.lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    m.mu = E / (2.0 * (1.0 + nu));
    m.c_s = std::sqrt(m.mu / rho);
    m.c_d = std::sqrt((m.lambda + 2.0 * m.mu) / rho);
    m.c_R = m.c_s * (0.862 + 1.14 * nu) / (1.0 + nu);
    m.Y_c = Gc / (2.0 * c0 * horizon);
    m.sigma_c = std::sqrt(E * Gc / (c0 * horizon));
    if (eps_c) {
        m.eps_c = *eps_c;
    } else {
        // bond-based energy criterion, documented convenience default only
        m.eps_c = std::sqrt(5.0 * Gc / (9.0 * E * horizon));
    }
    return m;
}

struct InvertedElementError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// First Piola-Kirchhoff stress and strain energy density of the
/// Saint Venant-Kirchhoff model:
///   E_GL = (F^T F - I)/2,  S = lambda tr(E) I + 2 mu E,  P = F S,
///   psi0 = lambda/2 tr(E)^2 + mu E:E.
inline std::pair<Mat3, double> svk_stress_and_energy(const MaterialParams& m,
                                                     const Mat3& F) {
    if (F.determinant() <= 0.0)
        throw InvertedElementError("svk_stress_and_energy: det F <= 0");
    const Mat3 Egl = 0.5 * (F.transpose() * F - Mat3::Identity());
    const double tr = Egl.trace();
    const Mat3 S = m.lambda * tr * Mat3::Identity() + 2.0 * m.mu * Egl;
    const double psi0 =
        0.5 * m.lambda * tr * tr + m.mu * Egl.cwiseProduct(Egl).sum();
    return {F * S, psi0};
}

namespace detail {
inline double macaulay(double x) { return x > 0.0 ? x : 0.0; }
}  // namespace detail

/// Tensile part of the SVK strain energy density via a spectral split on
/// the Green-Lagrange strain:
///   psi0+ = lambda/2 <tr E>+^2 + mu sum_a <eps_a>+^2.
inline double tensile_energy_split(const MaterialParams& m, const Mat3& F) {
    if (F.determinant() <= 0.0)
        throw InvertedElementError("tensile_energy_split: det F <= 0");
    const Mat3 Egl = 0.5 * (F.transpose() * F - Mat3::Identity());
    Eigen::SelfAdjointEigenSolver<Mat3> es;
    es.computeDirect(Egl, Eigen::EigenvaluesOnly);
    const auto& eps = es.eigenvalues();
    double sum_pos = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double e = detail::macaulay(eps[a]);
        sum_pos += e * e;
    }
    const double trp = detail::macaulay(Egl.trace());
    return 0.5 * m.lambda * trp * trp + m.mu * sum_pos;
}

/// Compressive complement of the split; psi0+ + psi0- = psi0.
inline double compressive_energy_split(const MaterialParams& m, const Mat3& F) {
    const Mat3 Egl = 0.5 * (F.transpose() * F - Mat3::Identity());
    Eigen::SelfAdjointEigenSolver<Mat3> es;
    es.computeDirect(Egl, Eigen::EigenvaluesOnly);
    const auto& eps = es.eigenvalues();
    double sum_neg = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double e = std::min(eps[a], 0.0);
        sum_neg += e * e;
    }
    const double tr = Egl.trace();
    const double trn = std::min(tr, 0.0);
    // split tr^2 = <tr>+^2 + <tr>-^2 (one of the two is zero)
    return 0.5 * m.lambda * trn * trn + m.mu * sum_neg;
}

/// Largest eigenvalue of the symmetrized Cauchy stress sigma = P F^T / det F.
inline double max_principal_cauchy_stress(const MaterialParams& m, const Mat3& F) {
    const double J = F.determinant();
    if (J <= 0.0)
        throw InvertedElementError("max_principal_cauchy_stress: det F <= 0");
    const auto [P, psi0] = svk_stress_and_energy(m, F);
    (void)psi0;
    const Mat3 sigma = (P * F.transpose()) / J;
    const Mat3 sym = 0.5 * (sigma + sigma.transpose());
    Eigen::SelfAdjointEigenSolver<Mat3> es;
    es.computeDirect(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[2];
}

}  // namespace pfpd
