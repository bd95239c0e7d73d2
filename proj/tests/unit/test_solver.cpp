#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "pfpd/normalization.hpp"
#include "pfpd/solver.hpp"

using namespace pfpd;

namespace {

System make_system(double lx, double ly, double lz, double dx, double Gc = 100.0,
                   DamageModel model = DamageModel::pfpd,
                   std::optional<double> eps_c = std::nullopt) {
    System sys;
    sys.cloud = generate_grid(lx, ly, lz, dx);
    sys.neigh = build_neighborhoods(sys.cloud, 3.0);
    sys.kernel = {KernelKind::cubic_bspline, sys.neigh.horizon};
    sys.bk = build_bond_kernels(sys.cloud, sys.neigh, sys.kernel);
    sys.mat = derive_params(2500.0, 32e9, 0.25, Gc, sys.neigh.horizon,
                            normalization_constant(sys.kernel), eps_c);
    sys.cfg.model = model;
    sys.finalize();
    return sys;
}

// straight-line reimplementation of the undamaged force assembly, written
// without the solver's caches or buffers, as an independent oracle
std::vector<Vec3> dense_reference_force(const System& sys,
                                        const std::vector<Vec3>& u) {
    const auto& n = sys.neigh;
    const auto& c = sys.cloud;
    const int np = c.size();

    // per-bond gradient weights from scratch
    std::vector<Vec3> gphi(n.bond_count());
    for (int i = 0; i < np; ++i) {
        Mat3 M = Mat3::Zero();
        for (std::size_t b = n.begin(i); b < n.end(i); ++b)
            M += sys.bk.psi[b] * n.xi[b] * n.xi[b].transpose() *
                 c.vol[n.nbr[b]];
        Mat3 Minv = M.inverse();
        for (std::size_t b = n.begin(i); b < n.end(i); ++b)
            gphi[b] = sys.bk.psi[b] * c.vol[n.nbr[b]] * Minv * n.xi[b];
    }

    std::vector<Mat3> F(np);
    for (int i = 0; i < np; ++i) {
        Mat3 Fi = Mat3::Identity();
        for (std::size_t b = n.begin(i); b < n.end(i); ++b)
            Fi += (u[n.nbr[b]] - u[i]) * gphi[b].transpose();
        F[i] = Fi;
    }

    std::vector<Vec3> force(np, Vec3::Zero());
    for (int i = 0; i < np; ++i) {
        // non-uniform stress
        Mat3 Tnu = Mat3::Zero();
        std::vector<Mat3> Pb(n.end(i) - n.begin(i));
        for (std::size_t b = n.begin(i); b < n.end(i); ++b) {
            const int j = n.nbr[b];
            const Vec3 xi = n.xi[b];
            const Vec3 dxc = xi + u[j] - u[i];
            Mat3 Fav = 0.5 * (F[i] + F[j]);
            Mat3 Fb = Fav + (dxc - Fav * xi) * xi.transpose() / xi.squaredNorm();
            Mat3 E = 0.5 * (Fb.transpose() * Fb - Mat3::Identity());
            Mat3 S = sys.mat.lambda * E.trace() * Mat3::Identity() +
                     2.0 * sys.mat.mu * E;
            Mat3 P = Fb * S;
            Pb[b - n.begin(i)] = P;
            Tnu += sys.bk.phi[b] *
                   (P - (P * xi) * xi.transpose() / xi.squaredNorm()) * c.vol[j];
        }
        for (std::size_t b = n.begin(i); b < n.end(i); ++b) {
            const int j = n.nbr[b];
            const Vec3 xi = n.xi[b];
            const Mat3& P = Pb[b - n.begin(i)];
            const Vec3 T =
                sys.bk.phi[b] * P * xi / xi.squaredNorm() + Tnu * gphi[b] / c.vol[j];
            force[i] += T * c.vol[j];
            force[j] -= T * c.vol[i];
        }
    }
    return force;
}

}  // namespace

TEST_CASE("rigid translation produces zero force", "[solver]") {
    System sys = make_system(6.0, 4.0, 4.0, 1.0);
    SimState state;
    state.resize(sys.cloud.size());
    for (auto& ui : state.u) ui = Vec3(0.3, -0.1, 0.7);
    internal_force(sys, state);
    for (const auto& f : state.b_int) CHECK(f.norm() < 1e-6);
}

TEST_CASE("internal force conserves linear momentum", "[solver]") {
    System sys = make_system(6.0, 4.0, 4.0, 1.0);
    SimState state;
    state.resize(sys.cloud.size());
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(-0.01, 0.01);
    for (auto& ui : state.u) ui = Vec3(d(rng), d(rng), d(rng));
    internal_force(sys, state);
    Vec3 total = Vec3::Zero();
    double scale = 0.0;
    for (int i = 0; i < sys.cloud.size(); ++i) {
        total += state.b_int[i] * sys.cloud.vol[i];
        scale += state.b_int[i].norm() * sys.cloud.vol[i];
    }
    CHECK(total.norm() <= 1e-12 * scale);
}

TEST_CASE("solver matches a dense reference implementation", "[solver]") {
    System sys = make_system(10.0, 4.0, 4.0, 1.0, 1e30);  // no damage triggers
    SimState state;
    state.resize(sys.cloud.size());
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> d(-0.005, 0.005);
    for (int i = 0; i < sys.cloud.size(); ++i) {
        state.u[i] = Vec3(0.01 * sys.cloud.X[i][0] + d(rng), d(rng), d(rng));
    }
    internal_force(sys, state);
    const std::vector<Vec3> ref = dense_reference_force(sys, state.u);
    double max_ref = 0.0;
    for (const auto& f : ref) max_ref = std::max(max_ref, f.norm());
    REQUIRE(max_ref > 0.0);
    for (int i = 0; i < sys.cloud.size(); ++i)
        CHECK((state.b_int[i] - ref[i]).norm() <= 1e-9 * max_ref);
}

TEST_CASE("velocity Verlet is exact for constant acceleration", "[solver]") {
    // uniform body force, uniform motion: no internal force develops
    System sys = make_system(4.0, 2.0, 2.0, 1.0);
    SimState state;
    state.resize(sys.cloud.size());
    PointSet all = tag_point_set(sys.cloud, "all", [](const Vec3&) { return true; });
    BoundaryCondition g;
    g.kind = BoundaryCondition::Kind::neumann_force_density;
    g.set = all;
    g.value = [](double) { return Vec3(0.0, 0.0, -9.81 * 2500.0); };
    std::vector<BoundaryCondition> bcs{g};
    const double dt = 1e-4;
    initialize_acceleration(sys, state, bcs);
    for (int k = 0; k < 100; ++k) velocity_verlet_step(sys, state, dt, bcs);
    const double t = state.t;
    CHECK(t == Catch::Approx(100 * dt).epsilon(1e-12));
    for (int i = 0; i < sys.cloud.size(); ++i) {
        CHECK(state.u[i][2] == Catch::Approx(-0.5 * 9.81 * t * t).epsilon(1e-10));
        CHECK(state.v[i][2] == Catch::Approx(-9.81 * t).epsilon(1e-10));
    }
}

TEST_CASE("free vibration conserves total energy", "[solver]") {
    System sys = make_system(6.0e-2, 2.0e-2, 2.0e-2, 0.5e-2, 1e30);
    SimState state;
    state.resize(sys.cloud.size());
    // gentle longitudinal velocity perturbation
    for (int i = 0; i < sys.cloud.size(); ++i)
        state.v[i] = Vec3(0.1 * std::sin(3.14159 * sys.cloud.X[i][0] / 6e-2), 0, 0);
    std::vector<BoundaryCondition> bcs;
    const double dt = stable_time_step(sys.cloud, sys.mat, 0.4);
    initialize_acceleration(sys, state, bcs);
    const Diagnostics d0 = global_diagnostics(sys, state);
    const double e0 = d0.kinetic + d0.strain;
    REQUIRE(e0 > 0.0);
    for (int k = 0; k < 2000; ++k) velocity_verlet_step(sys, state, dt, bcs);
    const Diagnostics d1 = global_diagnostics(sys, state);
    const double e1 = d1.kinetic + d1.strain;
    CHECK(std::abs(e1 - e0) < 1e-2 * e0);
}

TEST_CASE("boundary condition machinery", "[solver]") {
    System sys = make_system(4.0, 4.0, 2.0, 1.0);
    SimState state;
    state.resize(sys.cloud.size());

    SECTION("validation rejects empty and overlapping sets") {
        BoundaryCondition empty;
        CHECK_THROWS_AS(validate_boundary_conditions({empty}, sys.cloud.size()),
                        std::invalid_argument);
        BoundaryCondition a, b;
        a.set = tag_layers(sys.cloud, "top", 1, true, 1);
        a.value = [](double) { return Vec3::Zero(); };
        b.set = a.set;
        b.value = a.value;
        CHECK_THROWS_AS(validate_boundary_conditions({a, b}, sys.cloud.size()),
                        std::invalid_argument);
        // disjoint masks on the same set are fine
        a.mask = {true, false, false};
        b.mask = {false, true, true};
        CHECK_NOTHROW(validate_boundary_conditions({a, b}, sys.cloud.size()));
    }

    SECTION("dirichlet pins velocity components and zeros acceleration") {
        BoundaryCondition bc;
        bc.set = tag_layers(sys.cloud, "top", 1, true, 1);
        bc.value = [](double t) { return Vec3(0.0, 2.0 * t, 0.0); };
        std::vector<BoundaryCondition> bcs{bc};
        initialize_acceleration(sys, state, bcs);
        velocity_verlet_step(sys, state, 1e-4, bcs);
        for (int i : bc.set.indices) {
            CHECK(state.v[i][1] == Catch::Approx(2.0 * state.t).epsilon(1e-12));
            CHECK(state.a[i].norm() == 0.0);
        }
    }

    SECTION("neumann sets the external force density") {
        BoundaryCondition bc;
        bc.kind = BoundaryCondition::Kind::neumann_force_density;
        bc.set = tag_layers(sys.cloud, "top", 1, true, 1);
        bc.value = [](double) { return Vec3(0.0, 7.5, 0.0); };
        apply_neumann_force_density(state, {bc}, 0.0);
        for (int i : bc.set.indices) CHECK(state.b_ext[i] == Vec3(0.0, 7.5, 0.0));
        int outside = 0;
        for (int i = 0; i < sys.cloud.size(); ++i)
            if (state.b_ext[i].norm() == 0.0) ++outside;
        CHECK(outside == sys.cloud.size() - static_cast<int>(bc.set.indices.size()));
    }
}

TEST_CASE("damage models agree when damage cannot trigger", "[solver]") {
    // phase-field with huge Gc vs deletion with huge critical stretch:
    // identical assembly arithmetic, bitwise-equal forces
    System pf = make_system(5.0, 3.0, 2.0, 1.0, 1e30, DamageModel::pfpd);
    System cs =
        make_system(5.0, 3.0, 2.0, 1.0, 1e30, DamageModel::critical_stretch, 1e30);
    SimState sa, sb;
    sa.resize(pf.cloud.size());
    sb.resize(cs.cloud.size());
    PointSet top = tag_layers(pf.cloud, "top", 1, true, 1);
    BoundaryCondition bc;
    bc.set = top;
    bc.value = [](double) { return Vec3(0.0, 0.05, 0.0); };
    std::vector<BoundaryCondition> bcs{bc};
    const double dt = stable_time_step(pf.cloud, pf.mat, 0.4);
    initialize_acceleration(pf, sa, bcs);
    initialize_acceleration(cs, sb, bcs);
    for (int k = 0; k < 100; ++k) {
        velocity_verlet_step(pf, sa, dt, bcs);
        velocity_verlet_step(cs, sb, dt, bcs);
    }
    for (int i = 0; i < pf.cloud.size(); ++i) {
        CHECK(sa.u[i] == sb.u[i]);
        CHECK(sa.b_int[i] == sb.b_int[i]);
    }
}

TEST_CASE("time step bound", "[solver]") {
    PointCloud c = generate_grid(1.0, 1.0, 1.0, 0.1);
    MaterialParams m =
        derive_params(2500.0, 32e9, 0.25, 100.0, 0.3, 31.0 / 140.0, std::nullopt);
    CHECK(stable_time_step(c, m) == Catch::Approx(0.5 * 0.1 / m.c_d).epsilon(1e-15));
    CHECK_THROWS(stable_time_step(c, m, 0.0));
    CHECK_THROWS(stable_time_step(c, m, -1.0));
}

TEST_CASE("repeated runs are bitwise deterministic", "[solver]") {
    auto run_once = [] {
        System sys = make_system(5.0e-2, 2.0e-2, 1.0e-2, 0.5e-2, 10.0);
        SimState state;
        state.resize(sys.cloud.size());
        BoundaryCondition bc;
        bc.set = tag_layers(sys.cloud, "top", 1, true, 1);
        bc.value = [](double) { return Vec3(0.0, 1.0, 0.0); };
        std::vector<BoundaryCondition> bcs{bc};
        const double dt = stable_time_step(sys.cloud, sys.mat, 0.4);
        initialize_acceleration(sys, state, bcs);
        for (int k = 0; k < 200; ++k) velocity_verlet_step(sys, state, dt, bcs);
        return state;
    };
    SimState a = run_once();
    SimState b = run_once();
    for (std::size_t i = 0; i < a.u.size(); ++i) {
        CHECK(a.u[i] == b.u[i]);
        CHECK(a.v[i] == b.v[i]);
        CHECK(a.b_int[i] == b.b_int[i]);
    }
}
