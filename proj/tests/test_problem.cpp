#include "hjb/problem.hpp"

#include <doctest.h>

#include <random>

using namespace hjb;

TEST_CASE("control sets") {
    ControlSet interval = ControlSet::interval(0.0, 1.5, 61);
    CHECK(interval.size() == 61);
    CHECK(interval.scalar(0) == doctest::Approx(0.0));
    CHECK(interval.scalar(60) == doctest::Approx(1.5));
    CHECK(interval.mesh_step() == doctest::Approx(0.025));

    ControlSet circle = ControlSet::unit_circle(16);
    CHECK(circle.size() == 16);
    CHECK(circle.mesh_step() == doctest::Approx(2.0 * M_PI / 16));
    for (int k = 0; k < 16; ++k)
        CHECK(circle.vec2(k).squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(ControlSet::interval(1.0, 0.0, 5), InvalidArgument);
    CHECK_THROWS_AS(ControlSet::finite_list({}), InvalidArgument);
}

TEST_CASE("mean-variance problem") {
    HJBProblem pb = make_mean_variance_problem();
    CHECK(pb.dimension == 1);
    CHECK(pb.horizon == doctest::Approx(20.0));
    CHECK(pb.xmax == doctest::Approx(5.0));
    CHECK(pb.controls.size() == 61);

    SUBCASE("initial datum vertex and boundary value at t = 0") {
        CHECK(pb.initial(14.47 / 2.0) == doctest::Approx(0.0));
        // g(0) reduces to v0(x_max) = (5 - 7.235)^2.
        CHECK(pb.right.kind == BoundaryCondition::Kind::DirichletFromFunction);
        CHECK(pb.right.value(0.0) == doctest::Approx(4.995225));
        CHECK(pb.left.kind == BoundaryCondition::Kind::InfluxNoCondition);
    }
    SUBCASE("transport coefficient at x = 0") {
        for (double a : {0.0, 0.7, 1.5})
            CHECK(pb.drift(0.3, 0.0, a) == doctest::Approx(-0.1));
        CHECK(pb.sigma(0.0, 0.0, 1.5) == doctest::Approx(0.0));
    }
    SUBCASE("initial datum is convex and nonnegative") {
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> ux(0.0, 5.0);
        const double h = 1e-3;
        for (int s = 0; s < 200; ++s) {
            const double x = 0.1 + 0.96 * ux(rng);
            CHECK(pb.initial(x) >= 0.0);
            CHECK(pb.initial(x + h) - 2.0 * pb.initial(x) + pb.initial(x - h) >= -1e-12);
        }
    }
    SUBCASE("boundary data stays on the solution scale over the horizon") {
        for (double t : {0.0, 5.0, 10.0, 20.0}) CHECK(std::abs(pb.right.value(t)) < 100.0);
    }
    CHECK_THROWS_AS(make_mean_variance_problem({.T = -1.0}), InvalidArgument);
    check_problem_finite(pb);
}

TEST_CASE("uncertain volatility problem") {
    HJBProblem pb = make_uncertain_vol_problem();
    CHECK(pb.controls.size() == 2);
    CHECK(pb.horizon == doctest::Approx(0.1));

    SUBCASE("butterfly payoff values") {
        CHECK(pb.initial(100.0) == doctest::Approx(10.0));
        CHECK(pb.initial(90.0) == doctest::Approx(0.0));
        CHECK(pb.initial(110.0) == doctest::Approx(0.0));
    }
    SUBCASE("payoff is continuous, piecewise linear, supported in [K1, K2]") {
        for (double x = 0.0; x <= 200.0; x += 0.5) {
            if (x <= 90.0 || x >= 110.0) CHECK(pb.initial(x) == doctest::Approx(0.0));
            CHECK(std::abs(pb.initial(x + 1e-9) - pb.initial(x)) < 1e-8);
        }
        // Linear between kinks: midpoint identity on [90, 100].
        CHECK(pb.initial(95.0) == doctest::Approx(0.5 * (pb.initial(90.0) + pb.initial(100.0))));
    }
    SUBCASE("coefficients") {
        CHECK(pb.drift(0.0, 50.0, 0.2) == doctest::Approx(-5.0));
        CHECK(pb.discount(0.0, 7.0, 0.2) == doctest::Approx(0.1));
        CHECK(pb.sigma(0.0, 10.0, 0.25) == doctest::Approx(2.5));
    }
    CHECK_THROWS_AS(make_uncertain_vol_problem({.sigma_min = 0.3, .sigma_max = 0.2}),
                    InvalidArgument);
    check_problem_finite(pb);
}

TEST_CASE("2d benchmark problem") {
    HJBProblem pb = make_2d_problem(32);
    CHECK(pb.dimension == 2);
    CHECK(pb.controls.size() == 32);
    CHECK(pb.horizon == doctest::Approx(0.5));

    SUBCASE("exact solution values and datum consistency") {
        CHECK(pb.exact2(0.5, {M_PI / 2, M_PI / 2}) == doctest::Approx(1.5));
        std::mt19937 rng(5);
        std::uniform_real_distribution<double> ux(-M_PI, M_PI);
        for (int s = 0; s < 100; ++s) {
            const Vector2d x(ux(rng), ux(rng));
            CHECK(pb.exact2(0.0, x) == doctest::Approx(pb.initial2(x)).epsilon(1e-13));
        }
    }
    SUBCASE("running cost stores the negated benchmark cost") {
        // The benchmark's cost at (t=0, x=0) is 2 |a|^2 = 2 on the unit circle.
        for (int k = 0; k < pb.controls.size(); ++k)
            CHECK(pb.running_cost2(0.0, {0.0, 0.0}, pb.controls.vec2(k)) ==
                  doctest::Approx(-2.0).epsilon(1e-12));
    }
    SUBCASE("exact solution satisfies the PDE residual at the optimal control") {
        std::mt19937 rng(9);
        std::uniform_real_distribution<double> ux(-M_PI, M_PI);
        std::uniform_real_distribution<double> ut(0.0, 0.5);
        for (int s = 0; s < 200; ++s) {
            const double t = ut(rng);
            const Vector2d x(ux(rng), ux(rng));
            // Analytic derivatives of v = (2 - t) sin x1 sin x2.
            const double s1 = std::sin(x[0]), s2 = std::sin(x[1]);
            const double c1 = std::cos(x[0]), c2 = std::cos(x[1]);
            const double vt = -s1 * s2;
            const double v11 = -(2.0 - t) * s1 * s2;
            const double v22 = v11;
            const double v12 = (2.0 - t) * c1 * c2;
            // Pointwise optimal control is orthogonal to (cos x1, cos x2).
            Vector2d w(c1, c2);
            Vector2d a = w.norm() > 1e-14 ? Vector2d(-c2, c1).normalized() : Vector2d(1.0, 0.0);
            const Vector2d sg = pb.sigma2(t, x, a);
            const double trace_term =
                0.5 * (sg[0] * sg[0] * v11 + 2.0 * sg[0] * sg[1] * v12 + sg[1] * sg[1] * v22);
            const double residual = vt - trace_term + pb.running_cost2(t, x, a);
            CHECK(std::abs(residual) <= 1e-10);
        }
    }
    CHECK_THROWS_AS(make_2d_problem(0), InvalidArgument);
    check_problem_finite(pb);
}

TEST_CASE("problem registry") {
    CHECK(make_problem_by_name("mean-variance").name == "mean-variance");
    CHECK(make_problem_by_name("uncertain-vol").name == "uncertain-vol");
    CHECK(make_problem_by_name("diffusion-2d").dimension == 2);
    CHECK(make_problem_by_name("mean-variance", {{"x_max", 6.0}}).xmax == doctest::Approx(6.0));
    CHECK_THROWS_AS(make_problem_by_name("nope"), InvalidArgument);
}

TEST_CASE("manufactured problems solve their own PDE") {
    for (const HJBProblem& pb :
         {make_manufactured_trig_problem(), make_manufactured_quadratic_problem()}) {
        std::mt19937 rng(17);
        std::uniform_real_distribution<double> ux(0.0, 2.0);
        std::uniform_real_distribution<double> ut(0.0, 1.0);
        const double h = 1e-5;
        for (int s = 0; s < 50; ++s) {
            const double t = ut(rng), x = 0.2 + 0.8 * ux(rng);
            const double vt = (pb.exact(t + h, x) - pb.exact(t - h, x)) / (2.0 * h);
            const double vx = (pb.exact(t, x + h) - pb.exact(t, x - h)) / (2.0 * h);
            const double vxx =
                (pb.exact(t, x + h) - 2.0 * pb.exact(t, x) + pb.exact(t, x - h)) / (h * h);
            const double a = pb.controls.scalar(0);
            const double residual = vt - 0.5 * std::pow(pb.sigma(t, x, a), 2) * vxx +
                                    pb.drift(t, x, a) * vx + pb.discount(t, x, a) * pb.exact(t, x) +
                                    pb.running_cost(t, x, a);
            CHECK(std::abs(residual) < 1e-5);
        }
    }
}
