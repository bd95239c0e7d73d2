#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace pfpd {

/// Gauss-Legendre rule with N points on [-1, 1], nodes found by Newton
/// iteration on the Legendre recurrence.
template <std::size_t N>
struct GaussLegendre {
    std::array<double, N> node{};
    std::array<double, N> weight{};

    GaussLegendre() {
        const double pi = 3.14159265358979323846;
        for (std::size_t i = 0; i < (N + 1) / 2; ++i) {
            double x = std::cos(pi * (static_cast<double>(i) + 0.75) /
                                (static_cast<double>(N) + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = 0.0;
                for (std::size_t k = 0; k < N; ++k) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * k + 1.0) * x * p1 - k * p2) / (k + 1.0);
                }
                dp = N * (x * p0 - p1) / (x * x - 1.0);
                const double dx = p0 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            node[i] = -x;
            node[N - 1 - i] = x;
            weight[i] = 2.0 / ((1.0 - x * x) * dp * dp);
            weight[N - 1 - i] = weight[i];
        }
    }

    /// Integrate f over [a, b].
    template <class F>
    double integrate(F&& f, double a, double b) const {
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double sum = 0.0;
        for (std::size_t i = 0; i < N; ++i)
            sum += weight[i] * f(mid + half * node[i]);
        return half * sum;
    }
};

inline const GaussLegendre<64>& gauss64() {
    static const GaussLegendre<64> rule;
    return rule;
}

}  // namespace pfpd
