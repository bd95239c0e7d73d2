#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfpd/discretization.hpp"
#include "pfpd/normalization.hpp"
#include "pfpd/solver.hpp"

namespace pfpd {

enum class SnapshotFormat { vtk_legacy_points, csv };

namespace detail {

/// 17 significant digits: doubles round-trip exactly, output is byte-stable.
inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace detail

/// Legacy ASCII VTK unstructured grid of vertices with point data u, v, D.
inline void write_snapshot_vtk(const SimState& state, const PointCloud& cloud,
                               const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    const int n = cloud.size();
    out << "# vtk DataFile Version 3.0\n";
    out << "pfpd snapshot step " << state.step << "\n";
    out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << n << " double\n";
    for (int i = 0; i < n; ++i)
        out << detail::fmt(cloud.X[i][0]) << ' ' << detail::fmt(cloud.X[i][1]) << ' '
            << detail::fmt(cloud.X[i][2]) << '\n';
    out << "CELLS " << n << ' ' << 2 * n << '\n';
    for (int i = 0; i < n; ++i) out << "1 " << i << '\n';
    out << "CELL_TYPES " << n << '\n';
    for (int i = 0; i < n; ++i) out << "1\n";
    out << "POINT_DATA " << n << '\n';
    out << "VECTORS u double\n";
    for (int i = 0; i < n; ++i)
        out << detail::fmt(state.u[i][0]) << ' ' << detail::fmt(state.u[i][1]) << ' '
            << detail::fmt(state.u[i][2]) << '\n';
    out << "VECTORS v double\n";
    for (int i = 0; i < n; ++i)
        out << detail::fmt(state.v[i][0]) << ' ' << detail::fmt(state.v[i][1]) << ' '
            << detail::fmt(state.v[i][2]) << '\n';
    out << "SCALARS D double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < n; ++i) out << detail::fmt(state.D[i]) << '\n';
}

inline void write_snapshot_csv(const SimState& state, const PointCloud& cloud,
                               const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "id,x,y,z,ux,uy,uz,vx,vy,vz,D\n";
    for (int i = 0; i < cloud.size(); ++i) {
        out << i;
        for (int c = 0; c < 3; ++c) out << ',' << detail::fmt(cloud.X[i][c]);
        for (int c = 0; c < 3; ++c) out << ',' << detail::fmt(state.u[i][c]);
        for (int c = 0; c < 3; ++c) out << ',' << detail::fmt(state.v[i][c]);
        out << ',' << detail::fmt(state.D[i]) << '\n';
    }
}

inline void write_snapshot(const SimState& state, const PointCloud& cloud,
                           const std::string& path, SnapshotFormat format) {
    if (format == SnapshotFormat::vtk_legacy_points)
        write_snapshot_vtk(state, cloud, path);
    else
        write_snapshot_csv(state, cloud, path);
}

/// f_omega profile CSV with columns xi,f_omega.
inline void write_c0_profile(const CapFractionProfile& profile,
                             const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "xi,f_omega\n";
    for (const auto& [xi, f] : profile.samples)
        out << detail::fmt(xi) << ',' << detail::fmt(f) << '\n';
}

/// Appending time-series writer for diagnostics and the crack tip trace.
class TimeseriesWriter {
  public:
    explicit TimeseriesWriter(const std::string& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
        out_ << "t,E_kin,E_strain,E_crack,tip_x,tip_y,tip_speed,"
                "tip_speed_over_half_cR\n";
    }

    void append(double t, const Diagnostics& diag, bool has_tip, const Vec3& tip,
                double tip_speed, double half_cR) {
        out_ << detail::fmt(t) << ',' << detail::fmt(diag.kinetic) << ','
             << detail::fmt(diag.strain) << ',' << detail::fmt(diag.crack) << ',';
        if (has_tip)
            out_ << detail::fmt(tip[0]) << ',' << detail::fmt(tip[1]) << ','
                 << detail::fmt(tip_speed) << ','
                 << detail::fmt(tip_speed / half_cR);
        else
            out_ << "nan,nan,0,0";
        out_ << '\n';
        out_.flush();
    }

  private:
    std::ofstream out_;
};

}  // namespace pfpd
