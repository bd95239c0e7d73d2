#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfpd/discretization.hpp"
#include "pfpd/kernels.hpp"

namespace pfpd {

enum class BasisKind { C1, RK1 };

inline BasisKind basis_from_string(const std::string& name) {
    if (name == "C1") return BasisKind::C1;
    if (name == "RK1") return BasisKind::RK1;
    throw std::invalid_argument("unknown basis: '" + name + "'");
}

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

/// C1 basis: H(Xi) = Xi. RK1 basis: H(Xi) = (1, Xi).
inline Vec3 monomial_basis_c1(const Vec3& xi) { return xi; }
inline Vec4 monomial_basis_rk1(const Vec3& xi) {
    return Vec4(1.0, xi[0], xi[1], xi[2]);
}

/// Kinematic degradation: 1 up to the threshold s_c, then a quadratic
/// ramp to h(1) = 0. For s_c = 1 the branch condition makes h identically 1.
inline double kinematic_degradation(double s, double s_c) {
    if (s <= s_c) return 1.0;
    const double r = (1.0 - s) / (1.0 - s_c);
    return r * r;
}

/// Per-point moment matrix inverse data and per-bond shape-function
/// derivative vectors. grad_phi stores the full RK derivative including the
/// neighbor volume factor, as used in the force state.
struct KinematicCache {
    BasisKind basis = BasisKind::C1;
    std::vector<Vec3> grad_phi;          // per bond
    std::vector<std::uint8_t> singular;  // per point
    std::vector<std::uint8_t> dirty;     // per point

    void resize(int n_points, std::size_t n_bonds) {
        grad_phi.assign(n_bonds, Vec3::Zero());
        singular.assign(n_points, 0);
        dirty.assign(n_points, 1);
    }
};

namespace detail {

constexpr double kConditionLimit = 1e12;

/// Rebuild M and grad_phi rows for point i. Returns the singularity flag.
/// MatM is Mat3 (C1) or Mat4 (RK1); Basis maps a bond vector to the
/// monomial vector; GradH0 is the target derivative matrix.
template <class MatM, class BasisFn, class GradH0>
bool assemble_point(int i, const PointCloud& cloud, const NeighborSystem& neigh,
                    const BondKernels& bk, std::span<const double> h_values,
                    BasisFn&& basis, const GradH0& grad_h0,
                    std::vector<Vec3>& grad_phi) {
    MatM M = MatM::Zero();
    for (std::size_t b = neigh.begin(i); b < neigh.end(i); ++b) {
        const auto H = basis(neigh.xi[b]);
        M.noalias() += bk.psi[b] * h_values[b] * cloud.vol[neigh.nbr[b]] * H * H.transpose();
    }
    Eigen::SelfAdjointEigenSolver<MatM> es;
    es.compute(M, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double lmax = ev[MatM::RowsAtCompileTime - 1];
    const double lmin = ev[0];
    if (!(lmax > 0.0) || lmin <= 0.0 || lmax / lmin > kConditionLimit) {
        for (std::size_t b = neigh.begin(i); b < neigh.end(i); ++b)
            grad_phi[b] = Vec3::Zero();
        return true;
    }
    const MatM Minv = M.inverse();
    for (std::size_t b = neigh.begin(i); b < neigh.end(i); ++b) {
        const auto H = basis(neigh.xi[b]);
        grad_phi[b] = bk.psi[b] * h_values[b] * cloud.vol[neigh.nbr[b]] *
                      (grad_h0 * (Minv * H));
    }
    return false;
}

}  // namespace detail

/// Rebuild the cache rows of every dirty point from the given per-bond
/// kinematic weights (h(s) for PFPD, the failure flag d for the baseline).
inline void rebuild_dirty_points(KinematicCache& cache, const PointCloud& cloud,
                                 const NeighborSystem& neigh, const BondKernels& bk,
                                 std::span<const double> h_values) {
    const int n = cloud.size();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        if (!cache.dirty[i]) continue;
        bool sing;
        if (cache.basis == BasisKind::C1) {
            sing = detail::assemble_point<Mat3>(i, cloud, neigh, bk, h_values,
                                                monomial_basis_c1, Mat3::Identity(),
                                                cache.grad_phi);
        } else {
            Eigen::Matrix<double, 3, 4> grad_h0 = Eigen::Matrix<double, 3, 4>::Zero();
            grad_h0.block<3, 3>(0, 1) = Mat3::Identity();
            sing = detail::assemble_point<Mat4>(i, cloud, neigh, bk, h_values,
                                                monomial_basis_rk1, grad_h0,
                                                cache.grad_phi);
        }
        cache.singular[i] = sing ? 1 : 0;
        cache.dirty[i] = 0;
    }
}

/// F = I + sum_j DU_ij (x) grad_phi_ij; identity for flagged points.
inline Mat3 nonlocal_deformation_gradient(int i, const NeighborSystem& neigh,
                                          const KinematicCache& cache,
                                          std::span<const Vec3> u) {
    if (cache.singular[i]) return Mat3::Identity();
    Mat3 F = Mat3::Identity();
    for (std::size_t b = neigh.begin(i); b < neigh.end(i); ++b) {
        const Vec3 du = u[neigh.nbr[b]] - u[i];
        F.noalias() += du * cache.grad_phi[b].transpose();
    }
    return F;
}

/// Bond-associated deformation gradient:
///   F_b = F_av + (dx_cur - F_av Xi) (x) Xi / |Xi|^2,  F_av = (F_i + F_j)/2.
/// Exactly reproduces the bond deformation: F_b Xi = dx_cur.
inline Mat3 bond_deformation_gradient(const Mat3& F_i, const Mat3& F_j,
                                      const Vec3& xi, const Vec3& dx_cur) {
    const Mat3 F_av = 0.5 * (F_i + F_j);
    const Vec3 corr = dx_cur - F_av * xi;
    return F_av + corr * (xi.transpose() / xi.squaredNorm());
}

}  // namespace pfpd
