#include <catch2/catch_amalgamated.hpp>

#include "pfpd/kernels.hpp"

using namespace pfpd;

TEST_CASE("kernel values and support", "[kernels]") {
    const double pi = 3.14159265358979323846;

    SECTION("cubic B-spline at characteristic points") {
        KernelSpec spec{KernelKind::cubic_bspline, 2.0};
        // peak value 8/(pi d^3) at r -> 0+
        CHECK(kernel_value(spec, 1e-14) ==
              Catch::Approx(8.0 / (pi * 8.0)).epsilon(1e-12));
        // q = 1/2: both branches give 2/(pi d^3) -- continuity check
        const double mid = 8.0 / (pi * 8.0) * 0.25;
        CHECK(kernel_value(spec, 1.0 - 1e-10) == Catch::Approx(mid).epsilon(1e-6));
        CHECK(kernel_value(spec, 1.0 + 1e-10) == Catch::Approx(mid).epsilon(1e-6));
        CHECK(kernel_value(spec, 2.0) == 0.0);
        CHECK(kernel_value(spec, 2.5) == 0.0);
    }

    SECTION("linear kernel") {
        KernelSpec spec{KernelKind::linear, 1.0};
        CHECK(kernel_value(spec, 0.5) == Catch::Approx(3.0 / pi * 0.5).epsilon(1e-14));
        CHECK(kernel_value(spec, 1.0) == 0.0);
    }

    SECTION("constant kernel") {
        KernelSpec spec{KernelKind::constant, 1.0};
        CHECK(kernel_value(spec, 0.3) == 1.0);
        CHECK(kernel_value(spec, 1.5) == 0.0);
    }

    SECTION("zero separation rejected") {
        KernelSpec spec{KernelKind::cubic_bspline, 1.0};
        CHECK_THROWS_AS(kernel_value(spec, 0.0), std::domain_error);
        CHECK_THROWS_AS(kernel_value(spec, -0.1), std::domain_error);
    }

    SECTION("kernel name parsing") {
        CHECK(kernel_kind_from_string("cubic") == KernelKind::cubic_bspline);
        CHECK(kernel_kind_from_string("linear") == KernelKind::linear);
        CHECK(kernel_kind_from_string("constant") == KernelKind::constant);
        CHECK_THROWS_AS(kernel_kind_from_string("quartic"), std::invalid_argument);
    }
}

TEST_CASE("continuum kernel integral", "[kernels]") {
    // cubic B-spline integrates to 1 over the ball by construction
    for (double delta : {0.5, 1.0, 3.0}) {
        KernelSpec spec{KernelKind::cubic_bspline, delta};
        CHECK(continuum_kernel_integral(spec) == Catch::Approx(1.0).epsilon(1e-12));
    }
    // linear: 4 pi d^3 * 3/(pi d^3) * int_0^1 q^2 (1-q) dq = 12 * 1/12 = 1
    KernelSpec lin{KernelKind::linear, 2.0};
    CHECK(continuum_kernel_integral(lin) == Catch::Approx(1.0).epsilon(1e-12));
    // constant: 4/3 pi d^3
    KernelSpec con{KernelKind::constant, 2.0};
    CHECK(continuum_kernel_integral(con) ==
          Catch::Approx(4.0 / 3.0 * 3.14159265358979323846 * 8.0).epsilon(1e-12));
}

TEST_CASE("discrete kernel sums on a grid", "[kernels]") {
    // interior of a 9^3 grid with m = 3: Sum psi V approximates 1
    PointCloud cloud = generate_grid(9.0, 9.0, 9.0, 1.0);
    NeighborSystem neigh = build_neighborhoods(cloud, 3.0);
    KernelSpec spec{KernelKind::cubic_bspline, neigh.horizon};
    KernelIntegralField field = discrete_kernel_integrals(cloud, neigh, spec);
    int center = -1;
    for (int i = 0; i < cloud.size(); ++i)
        if ((cloud.X[i] - Vec3(4.5, 4.5, 4.5)).norm() < 1e-9) center = i;
    REQUIRE(center >= 0);
    // families exclude the point itself, so add back the self term psi(0) V
    const double self_term = kernel_value(spec, 1e-12) * cloud.vol[center];
    CHECK(field.omega0[center] + self_term == Catch::Approx(1.0).epsilon(0.02));
    CHECK_FALSE(field.isolated[center]);

    SECTION("averaged bond kernel is symmetric") {
        BondKernels bk = build_bond_kernels(cloud, neigh, spec);
        for (int i = 0; i < cloud.size(); ++i) {
            for (std::size_t b = neigh.begin(i); b < neigh.end(i); ++b) {
                const int j = neigh.nbr[b];
                if (j < i) continue;
                // locate the mirrored bond j -> i
                for (std::size_t bb = neigh.begin(j); bb < neigh.end(j); ++bb) {
                    if (neigh.nbr[bb] == i) {
                        CHECK(bk.phi[b] == bk.phi[bb]);
                        break;
                    }
                }
            }
        }
    }

    SECTION("partition of unity at the center point") {
        BondKernels bk = build_bond_kernels(cloud, neigh, spec);
        double sum = 0.0;
        for (std::size_t b = neigh.begin(center); b < neigh.end(center); ++b)
            sum += bk.phi[b] * cloud.vol[neigh.nbr[b]];
        // Phi averages 1/omega0(i) and 1/omega0(j); exact unity only holds
        // for uniform omega0, so allow the boundary-induced spread
        CHECK(sum == Catch::Approx(1.0).epsilon(0.02));
    }

    SECTION("averaged kernel rejects degenerate normalizers") {
        CHECK_THROWS_AS(averaged_bond_kernel(1.0, 0.0, 1.0), std::domain_error);
    }
}
