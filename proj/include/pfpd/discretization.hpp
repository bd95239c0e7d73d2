#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace pfpd {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Uniform point cloud: positions at cell centers of the bounding box,
/// one point per cell, volume dx^3 each.
struct PointCloud {
    std::vector<Vec3> X;
    std::vector<double> vol;
    double dx = 0.0;
    int nx = 0, ny = 0, nz = 0;

    int size() const { return static_cast<int>(X.size()); }
};

inline PointCloud generate_grid(double lx, double ly, double lz, double dx) {
    if (dx <= 0.0) throw std::invalid_argument("generate_grid: dx must be positive");
    if (lx < dx || ly < dx || lz < dx)
        throw std::invalid_argument("generate_grid: degenerate box");
    PointCloud c;
    c.dx = dx;
    c.nx = static_cast<int>(std::llround(lx / dx));
    c.ny = static_cast<int>(std::llround(ly / dx));
    c.nz = static_cast<int>(std::llround(lz / dx));
    c.X.reserve(static_cast<std::size_t>(c.nx) * c.ny * c.nz);
    for (int k = 0; k < c.nz; ++k)
        for (int j = 0; j < c.ny; ++j)
            for (int i = 0; i < c.nx; ++i)
                c.X.emplace_back((i + 0.5) * dx, (j + 0.5) * dx, (k + 0.5) * dx);
    c.vol.assign(c.X.size(), dx * dx * dx);
    return c;
}

/// Per-point families with flat bond-indexed storage. Each ordered pair
/// (i, j) is stored once under i's family; families are complete, so the
/// undirected bond appears under both endpoints.
struct NeighborSystem {
    double horizon = 0.0;
    double horizon_ratio = 0.0;
    double eps_delta = 0.015;
    std::vector<std::size_t> offset;  // size N+1
    std::vector<int> nbr;             // neighbor index per bond
    std::vector<Vec3> xi;             // reference bond vector per bond
    std::vector<double> xi_norm;      // reference bond length per bond

    std::size_t bond_count() const { return nbr.size(); }
    std::size_t begin(int i) const { return offset[i]; }
    std::size_t end(int i) const { return offset[i + 1]; }
};

namespace detail {
struct CellHash {
    std::size_t operator()(const std::array<int, 3>& c) const {
        std::size_t h = 146527;
        for (int v : c) h = h * 1000003u + static_cast<std::size_t>(v + (1 << 20));
        return h;
    }
};
}  // namespace detail

inline NeighborSystem build_neighborhoods(const PointCloud& cloud, double m,
                                          double eps_delta = 0.015) {
    if (m < 1.0) throw std::invalid_argument("build_neighborhoods: m must be >= 1");
    NeighborSystem ns;
    ns.horizon_ratio = m;
    ns.eps_delta = eps_delta;
    ns.horizon = (m + eps_delta) * cloud.dx;
    const double delta = ns.horizon;
    const double delta2 = delta * delta;
    const int n = cloud.size();

    // cell list with cell size >= delta
    std::unordered_map<std::array<int, 3>, std::vector<int>, detail::CellHash> cells;
    auto cell_of = [&](const Vec3& x) {
        return std::array<int, 3>{static_cast<int>(std::floor(x[0] / delta)),
                                  static_cast<int>(std::floor(x[1] / delta)),
                                  static_cast<int>(std::floor(x[2] / delta))};
    };
    for (int i = 0; i < n; ++i) cells[cell_of(cloud.X[i])].push_back(i);

    ns.offset.assign(n + 1, 0);
    std::vector<std::vector<int>> fam(n);
    for (int i = 0; i < n; ++i) {
        const auto c = cell_of(cloud.X[i]);
        auto& f = fam[i];
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx_ = -1; dx_ <= 1; ++dx_) {
                    auto it = cells.find({c[0] + dx_, c[1] + dy, c[2] + dz});
                    if (it == cells.end()) continue;
                    for (int j : it->second) {
                        if (j == i) continue;
                        if ((cloud.X[j] - cloud.X[i]).squaredNorm() <= delta2)
                            f.push_back(j);
                    }
                }
        std::sort(f.begin(), f.end());
        ns.offset[i + 1] = ns.offset[i] + f.size();
    }
    ns.nbr.reserve(ns.offset[n]);
    ns.xi.reserve(ns.offset[n]);
    ns.xi_norm.reserve(ns.offset[n]);
    for (int i = 0; i < n; ++i)
        for (int j : fam[i]) {
            ns.nbr.push_back(j);
            ns.xi.push_back(cloud.X[j] - cloud.X[i]);
            ns.xi_norm.push_back(ns.xi.back().norm());
        }
    return ns;
}

/// Named, sorted, duplicate-free index set for boundary conditions and
/// no-failure zones.
struct PointSet {
    std::string name;
    std::vector<int> indices;

    bool empty() const { return indices.empty(); }
};

template <class Pred>
PointSet tag_point_set(const PointCloud& cloud, const std::string& name, Pred&& pred) {
    PointSet set;
    set.name = name;
    for (int i = 0; i < cloud.size(); ++i)
        if (pred(cloud.X[i])) set.indices.push_back(i);
    return set;
}

/// Axis-aligned box membership, inclusive bounds.
inline PointSet tag_box(const PointCloud& cloud, const std::string& name,
                        const Vec3& lo, const Vec3& hi) {
    return tag_point_set(cloud, name, [&](const Vec3& x) {
        return x[0] >= lo[0] && x[0] <= hi[0] && x[1] >= lo[1] && x[1] <= hi[1] &&
               x[2] >= lo[2] && x[2] <= hi[2];
    });
}

/// n point layers measured from a face of the grid bounding box.
/// axis in {0,1,2}; from_max selects the far face.
inline PointSet tag_layers(const PointCloud& cloud, const std::string& name, int axis,
                           bool from_max, int layers) {
    const int count = axis == 0 ? cloud.nx : axis == 1 ? cloud.ny : cloud.nz;
    const double extent = count * cloud.dx;
    const double cut = layers * cloud.dx;
    return tag_point_set(cloud, name, [&](const Vec3& x) {
        return from_max ? x[axis] > extent - cut : x[axis] < cut;
    });
}

/// Infinitely thin planar notch segment. Bonds whose endpoints change sign
/// strictly across the plane and whose crossing point lies inside the
/// extent box are broken.
struct PrecrackPlane {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitY();
    Vec3 extent_lo = Vec3::Zero();
    Vec3 extent_hi = Vec3::Zero();
};

/// Visits every bond crossing the notch; the callback receives the bond index.
template <class OnBrokenBond>
void for_each_precrack_bond(const PointCloud& cloud, const NeighborSystem& neigh,
                            const PrecrackPlane& pc, OnBrokenBond&& on_bond) {
    const Vec3 n = pc.normal.normalized();
    for (int i = 0; i < cloud.size(); ++i) {
        const double zi = (cloud.X[i] - pc.point).dot(n);
        for (std::size_t b = neigh.begin(i); b < neigh.end(i); ++b) {
            const int j = neigh.nbr[b];
            const double zj = (cloud.X[j] - pc.point).dot(n);
            if (!(zi * zj < 0.0)) continue;  // strict sign change only
            const double t = zi / (zi - zj);
            const Vec3 hit = cloud.X[i] + t * (cloud.X[j] - cloud.X[i]);
            bool inside = true;
            for (int k = 0; k < 3; ++k)
                inside = inside && hit[k] >= pc.extent_lo[k] && hit[k] <= pc.extent_hi[k];
            if (inside) on_bond(b);
        }
    }
}

}  // namespace pfpd
