#include "hjb/grid.hpp"

#include <doctest.h>

#include <random>

using namespace hjb;

TEST_CASE("uniform grid builder") {
    SpatialGrid1D g = build_uniform_grid(0.0, 5.0, 5);
    CHECK(g.num_nodes() == 6);
    CHECK(g.is_uniform());
    for (int i = 0; i <= 5; ++i) CHECK(g.node(i) == doctest::Approx(i).epsilon(1e-14));
    CHECK(g.max_spacing() == doctest::Approx(1.0));

    SpatialGrid1D fine = build_uniform_grid(0.0, 5.0, 40);
    CHECK(fine.max_spacing() == doctest::Approx(0.125));

    SpatialGrid1D sym = build_uniform_grid(-M_PI, M_PI, 4);
    CHECK(sym.node(0) == doctest::Approx(-M_PI));
    CHECK(sym.node(1) == doctest::Approx(-M_PI / 2));
    CHECK(sym.node(2) == doctest::Approx(0.0));
    CHECK(sym.node(4) == doctest::Approx(M_PI));

    CHECK_THROWS_AS(build_uniform_grid(0.0, 5.0, 1), InvalidArgument);
    CHECK_THROWS_AS(build_uniform_grid(5.0, 5.0, 4), InvalidArgument);
}

TEST_CASE("butterfly grid refinement ladder") {
    for (int k : {0, 1, 2}) {
        SpatialGrid1D g = build_butterfly_grid(k);
        CHECK(g.num_cells() == 60 * (1 << k));
        CHECK(g.min_spacing() == doctest::Approx(0.5 / (1 << k)));
        CHECK(g.max_spacing() == doctest::Approx(10.0 / (1 << k)));
        CHECK(g.xmin() == doctest::Approx(0.0));
        CHECK(g.xmax() == doctest::Approx(200.0));
    }
    // Breakpoints are grid nodes at every level.
    SpatialGrid1D g0 = build_butterfly_grid(0);
    for (double b : {0.0, 40.0, 80.0, 88.0, 98.0, 102.0, 112.0, 120.0, 160.0, 200.0}) {
        bool found = false;
        for (int i = 0; i < g0.num_nodes(); ++i)
            if (std::abs(g0.node(i) - b) < 1e-12) found = true;
        CHECK(found);
    }
    CHECK_THROWS_AS(build_butterfly_grid(-1), InvalidArgument);
}

TEST_CASE("linear interpolation basics") {
    SpatialGrid1D g = build_uniform_grid(0.0, 1.0, 2);
    VectorXd vals(3);
    vals << 0.0, 2.0, 4.0;
    SUBCASE("reproduces nodal values and lines") {
        CHECK(interp_linear(g, vals, 0.5) == doctest::Approx(2.0));
        CHECK(interp_linear(g, vals, 0.25) == doctest::Approx(1.0));
        // grid {0, 1} with values {0, 2}
        SpatialGrid1D g2 = build_uniform_grid(0.0, 2.0, 2);
        VectorXd v2(3);
        v2 << 0.0, 2.0, 4.0;
        CHECK(interp_linear(g2, v2, 0.25) == doctest::Approx(0.5));
    }
    SUBCASE("clamps outside the grid") {
        CHECK(interp_linear(g, vals, -3.0) == doctest::Approx(0.0));
        CHECK(interp_linear(g, vals, 7.0) == doctest::Approx(4.0));
    }
    SUBCASE("rejects non-finite points") {
        CHECK_THROWS_AS(interp_linear(g, vals, std::nan("")), InvalidArgument);
    }
}

TEST_CASE("interpolation is monotone and nonexpansive") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> ur(-1.0, 1.0);
    std::uniform_real_distribution<double> ux(-0.5, 2.5);
    SpatialGrid1D g = build_uniform_grid(0.0, 2.0, 17);
    for (int trial = 0; trial < 200; ++trial) {
        VectorXd a(g.num_nodes()), bump(g.num_nodes());
        for (int i = 0; i < a.size(); ++i) a[i] = ur(rng);
        for (int i = 0; i < a.size(); ++i) bump[i] = std::abs(ur(rng));
        VectorXd b = a + bump;
        const double x = ux(rng);
        const double ia = interp_linear(g, a, x);
        const double ib = interp_linear(g, b, x);
        CHECK(ia <= ib + 1e-14);
        CHECK(std::abs(ia - ib) <= (a - b).cwiseAbs().maxCoeff() + 1e-14);
    }
}

TEST_CASE("periodic bilinear interpolation") {
    PeriodicGrid2D g(64);
    SUBCASE("constants and nodes") {
        VectorXd c = VectorXd::Constant(g.num_nodes(), 3.25);
        CHECK(interp_bilinear_periodic(g, c, {0.37, -2.6}) == doctest::Approx(3.25));
        VectorXd f(g.num_nodes());
        for (int i = 0; i < 64; ++i)
            for (int j = 0; j < 64; ++j)
                f[g.flat_index(i, j)] = std::sin(g.coord(i)) * std::sin(g.coord(j));
        CHECK(interp_bilinear_periodic(g, f, g.node(5, 9)) ==
              doctest::Approx(f[g.flat_index(5, 9)]).epsilon(1e-13));
        // Within O(dx^2) of the smooth field away from nodes.
        const double exact = std::sin(0.3) * std::sin(0.7);
        CHECK(std::abs(interp_bilinear_periodic(g, f, {0.3, 0.7}) - exact) < 1e-2);
    }
    SUBCASE("periodic wrap and monotonicity") {
        std::mt19937 rng(11);
        std::uniform_real_distribution<double> ur(-1.0, 1.0);
        VectorXd a(g.num_nodes()), bump(g.num_nodes());
        for (int i = 0; i < a.size(); ++i) a[i] = ur(rng);
        for (int i = 0; i < a.size(); ++i) bump[i] = std::abs(ur(rng));
        VectorXd b = a + bump;
        for (int trial = 0; trial < 100; ++trial) {
            const Vector2d p(8.0 * ur(rng), 8.0 * ur(rng)); // wraps several periods
            const double ia = interp_bilinear_periodic(g, a, p);
            const double ib = interp_bilinear_periodic(g, b, p);
            CHECK(ia <= ib + 1e-14);
            CHECK(std::abs(ia - ib) <= bump.maxCoeff() + 1e-14);
        }
        CHECK_THROWS_AS(interp_bilinear_periodic(g, a, {std::nan(""), 0.0}), InvalidArgument);
    }
}

TEST_CASE("non-uniform second difference") {
    SUBCASE("hand-evaluated example") {
        // Nodes {0, 1, 3}, values {0, 0, 6}: D2 = (2/3)(0 - 1.5*0 + 6/2) = 2.
        VectorXd nodes(3);
        nodes << 0.0, 1.0, 3.0;
        SpatialGrid1D g(nodes);
        VectorXd u(3);
        u << 0.0, 0.0, 6.0;
        CHECK(d2_nonuniform(u, g, 1) == doctest::Approx(2.0));
        CHECK_THROWS_AS(d2_nonuniform(u, g, 0), InvalidArgument);
        CHECK_THROWS_AS(d2_nonuniform(u, g, 2), InvalidArgument);
    }
    SUBCASE("exact on quadratics over random grids") {
        std::mt19937 rng(23);
        std::uniform_real_distribution<double> ur(0.1, 1.0);
        std::uniform_real_distribution<double> uc(-2.0, 2.0);
        for (int trial = 0; trial < 100; ++trial) {
            const int n = 12;
            VectorXd nodes(n);
            nodes[0] = uc(rng);
            for (int i = 1; i < n; ++i) nodes[i] = nodes[i - 1] + ur(rng);
            SpatialGrid1D g(nodes);
            const double a = uc(rng), b = uc(rng), c = uc(rng);
            VectorXd u(n);
            for (int i = 0; i < n; ++i) u[i] = a * nodes[i] * nodes[i] + b * nodes[i] + c;
            for (int i = 1; i < n - 1; ++i)
                CHECK(d2_nonuniform(u, g, i) == doctest::Approx(2.0 * a).epsilon(1e-9));
        }
        // Linear data on a uniform grid annihilates exactly.
        SpatialGrid1D g = build_uniform_grid(0.0, 1.0, 10);
        VectorXd lin = g.nodes();
        for (int i = 1; i < g.num_nodes() - 1; ++i)
            CHECK(d2_nonuniform(lin, g, i) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("second-order decay on the refined payoff grid interior") {
        auto u_of = [](double x) { return std::sin(x / 20.0); };
        auto upp_of = [](double x) { return -std::sin(x / 20.0) / 400.0; };
        // Fixed interior probe points away from spacing breakpoints.
        const double probes[] = {20.0, 60.0, 100.0, 140.0, 180.0};
        for (double xp : probes) {
            double prev_err = 0.0;
            for (int k = 0; k <= 2; ++k) {
                SpatialGrid1D g = build_butterfly_grid(k);
                VectorXd u(g.num_nodes());
                for (int i = 0; i < g.num_nodes(); ++i) u[i] = u_of(g.node(i));
                int ip = 0;
                for (int i = 0; i < g.num_nodes(); ++i)
                    if (std::abs(g.node(i) - xp) < 1e-9) ip = i;
                const double err = std::abs(d2_nonuniform(u, g, ip) - upp_of(xp));
                if (k > 0) CHECK(prev_err / err >= 3.5);
                prev_err = err;
            }
        }
    }
}

TEST_CASE("time grid") {
    TimeGrid t(20.0, 40);
    CHECK(t.dt() == doctest::Approx(0.5));
    CHECK(t.node(0) == 0.0);
    CHECK(t.node(40) == doctest::Approx(20.0));
    CHECK_THROWS_AS(TimeGrid(0.0, 4), InvalidArgument);
}
