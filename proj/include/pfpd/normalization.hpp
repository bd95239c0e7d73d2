#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pfpd/kernels.hpp"
#include "pfpd/quadrature.hpp"

namespace pfpd {

/// Geometric volume fraction of the spherical cap cut off by a plane at
/// normalized distance xi from the sphere center.
inline double cap_volume_fraction(double xi) {
    if (xi < 0.0 || xi > 1.0)
        throw std::domain_error("cap_volume_fraction: xi outside [0,1]");
    return 0.5 - 0.75 * xi + 0.25 * xi * xi * xi;
}

namespace detail {

/// int over [lo,hi] of psi(rho*delta) * f(rho), split at the kernel's
/// piecewise breakpoints to keep the quadrature spectrally accurate.
template <class F>
double radial_integral(const KernelSpec& spec, double lo, double hi, F&& f) {
    auto g = [&](double rho) {
        return kernel_value(spec, rho * spec.horizon) * f(rho);
    };
    double sum = 0.0;
    double a = lo;
    for (double bp : kernel_breakpoints(spec)) {
        if (bp > a && bp < hi) {
            sum += gauss64().integrate(g, a, bp);
            a = bp;
        }
    }
    sum += gauss64().integrate(g, a, hi);
    return sum;
}

}  // namespace detail

/// Kernel-weighted volume fraction of the spherical cap,
///   f_omega(xi) = int_xi^1 psi(rho d) rho (rho - xi) drho
///               / (2 int_0^1 psi(rho d) rho^2 drho).
/// Independent of the horizon for the built-in kernels.
inline double kernel_cap_fraction(const KernelSpec& spec, double xi) {
    if (xi < 0.0 || xi > 1.0)
        throw std::domain_error("kernel_cap_fraction: xi outside [0,1]");
    if (xi == 1.0) return 0.0;
    const double num = detail::radial_integral(
        spec, xi, 1.0, [&](double rho) { return rho * (rho - xi); });
    const double den = detail::radial_integral(
        spec, 0.0, 1.0, [](double rho) { return rho * rho; });
    return num / (2.0 * den);
}

/// Griffith-consistency normalization constant,
///   c0 = int_0^1 psi(rho d) rho^3 drho / (2 int_0^1 psi(rho d) rho^2 drho).
inline double normalization_constant(const KernelSpec& spec) {
    const double num = detail::radial_integral(
        spec, 0.0, 1.0, [](double rho) { return rho * rho * rho; });
    const double den = detail::radial_integral(
        spec, 0.0, 1.0, [](double rho) { return rho * rho; });
    return num / (2.0 * den);
}

/// Monte-Carlo estimate of the kernel-weighted cap fraction: points drawn
/// uniformly in the horizon ball around a center at height xi*delta above
/// the plane, kernel-weighted fraction landing below the plane.
struct McCapResult {
    double estimate = 0.0;
    double standard_error = 0.0;
    bool low_sample_warning = false;
};

inline McCapResult mc_cap_fraction_oracle(const KernelSpec& spec, double xi,
                                          std::uint64_t n_samples,
                                          std::uint64_t seed) {
    if (xi < 0.0 || xi > 1.0)
        throw std::domain_error("mc_cap_fraction_oracle: xi outside [0,1]");
    McCapResult res;
    res.low_sample_warning = n_samples < 10000;
    const double d = spec.horizon;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // ratio estimator sum(w*b)/sum(w) with delta-method standard error
    double sw = 0.0, swb = 0.0, sww = 0.0, swwb = 0.0, swbwb = 0.0;
    for (std::uint64_t k = 0; k < n_samples; ++k) {
        const double r = d * std::cbrt(unif(rng));    // uniform in ball
        const double ct = 2.0 * unif(rng) - 1.0;      // cos(theta)
        unif(rng);                                    // azimuth (unused by symmetry)
        const double z = xi * d + r * ct;
        const double w = r > 0.0 ? kernel_value(spec, r) : 0.0;
        const double wb = z < 0.0 ? w : 0.0;
        sw += w;
        swb += wb;
        sww += w * w;
        swwb += w * wb;
        swbwb += wb * wb;
    }
    if (sw == 0.0) return res;
    const double n = static_cast<double>(n_samples);
    const double f = swb / sw;
    const double mw = sw / n;
    const double var_wb = swbwb / n - (swb / n) * (swb / n);
    const double var_w = sww / n - mw * mw;
    const double cov = swwb / n - (swb / n) * mw;
    const double var_f = (var_wb - 2.0 * f * cov + f * f * var_w) / (mw * mw);
    res.estimate = f;
    res.standard_error = std::sqrt(std::max(0.0, var_f) / n);
    return res;
}

/// f_omega sampled on a uniform xi-grid, plus the closed-form c0.
struct CapFractionProfile {
    std::vector<std::pair<double, double>> samples;  // (xi, f_omega)
    double c0 = 0.0;
};

inline CapFractionProfile c0_profile(const KernelSpec& spec, int n_points = 101) {
    CapFractionProfile p;
    p.c0 = normalization_constant(spec);
    p.samples.reserve(n_points);
    for (int k = 0; k < n_points; ++k) {
        const double xi = static_cast<double>(k) / (n_points - 1);
        p.samples.emplace_back(xi, kernel_cap_fraction(spec, xi));
    }
    return p;
}

}  // namespace pfpd
