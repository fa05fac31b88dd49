#include "hjb/problem.hpp"

#include <random>

namespace hjb {

ControlSet ControlSet::finite_list(std::vector<double> values) {
    require(!values.empty(), "control set must be nonempty");
    ControlSet cs;
    cs.points_.resize(static_cast<int>(values.size()), 1);
    for (int k = 0; k < cs.points_.rows(); ++k) cs.points_(k, 0) = values[k];
    cs.mesh_step_ = 0.0;
    return cs;
}

ControlSet ControlSet::interval(double lo, double hi, int count) {
    require(count >= 1, "control set must be nonempty");
    require(hi >= lo, "empty control interval");
    ControlSet cs;
    cs.points_.resize(count, 1);
    if (count == 1) {
        cs.points_(0, 0) = 0.5 * (lo + hi);
    } else {
        for (int k = 0; k < count; ++k)
            cs.points_(k, 0) = lo + (hi - lo) * k / (count - 1);
    }
    cs.mesh_step_ = count > 1 ? (hi - lo) / (count - 1) : hi - lo;
    return cs;
}

ControlSet ControlSet::unit_circle(int count) {
    require(count >= 1, "control set must be nonempty");
    ControlSet cs;
    cs.points_.resize(count, 2);
    for (int k = 0; k < count; ++k) {
        const double theta = 2.0 * M_PI * k / count;
        cs.points_(k, 0) = std::cos(theta);
        cs.points_(k, 1) = std::sin(theta);
    }
    cs.mesh_step_ = 2.0 * M_PI / count;
    return cs;
}

HJBProblem make_mean_variance_problem(const MeanVarianceParams& p) {
    require(p.T > 0.0, "horizon must be positive");
    require(p.a_max >= 0.0, "empty control interval");
    HJBProblem prob;
    prob.name = "mean-variance";
    prob.dimension = 1;
    prob.xmin = 0.0;
    prob.xmax = p.x_max;
    prob.horizon = p.T;
    prob.time_dependent = false;

    const double r = p.r, sig = p.sigma, xi = p.xi, c = p.c, gamma = p.gamma;
    prob.sigma = [sig](double, double x, double a) { return sig * a * x; };
    prob.drift = [c, r, sig, xi](double, double x, double a) {
        return -(c + x * (r + a * sig * xi));
    };
    prob.discount = [](double, double, double) { return 0.0; };
    prob.running_cost = [](double, double, double) { return 0.0; };
    prob.initial = [gamma](double x) {
        const double d = x - 0.5 * gamma;
        return d * d;
    };
    prob.controls = ControlSet::interval(0.0, p.a_max, p.control_points);
    prob.left = BoundaryCondition::influx();
    // Dirichlet value transported along the characteristics of the a = 0
    // equation v_t - (c + r x) v_x = 0 traced back to the initial datum.
    const double xmax = p.x_max;
    auto v0 = prob.initial;
    prob.right = BoundaryCondition::dirichlet([v0, c, r, xmax](double t) {
        return v0((std::exp(r * t) * (c + r * xmax) - c) / r);
    });
    check_problem_finite(prob, 64);
    return prob;
}

HJBProblem make_uncertain_vol_problem(const UncertainVolParams& p) {
    require(p.sigma_min <= p.sigma_max, "sigma_min must not exceed sigma_max");
    require(p.T > 0.0, "horizon must be positive");
    HJBProblem prob;
    prob.name = "uncertain-vol";
    prob.dimension = 1;
    prob.xmin = 0.0;
    prob.xmax = 200.0;
    prob.horizon = p.T;
    prob.time_dependent = false;

    const double r = p.r, K1 = p.K1, K2 = p.K2;
    prob.sigma = [](double, double x, double a) { return a * x; };
    prob.drift = [r](double, double x, double) { return -r * x; };
    prob.discount = [r](double, double, double) { return r; };
    prob.running_cost = [](double, double, double) { return 0.0; };
    prob.initial = [K1, K2](double x) {
        auto call = [](double s) { return std::max(s, 0.0); };
        return call(x - K1) - 2.0 * call(x - 0.5 * (K1 + K2)) + call(x - K2);
    };
    prob.controls = ControlSet::finite_list({p.sigma_min, p.sigma_max});
    prob.left = BoundaryCondition::dirichlet([](double) { return 0.0; });
    prob.right = BoundaryCondition::dirichlet([](double) { return 0.0; });
    check_problem_finite(prob, 64);
    return prob;
}

HJBProblem make_2d_problem(int control_points) {
    require(control_points >= 1, "control set must be nonempty");
    HJBProblem prob;
    prob.name = "diffusion-2d";
    prob.dimension = 2;
    prob.xmin = -M_PI;
    prob.xmax = M_PI;
    prob.horizon = 0.5;
    prob.time_dependent = true;

    prob.sigma2 = [](double, const Vector2d&, const Vector2d& a) {
        return Vector2d(std::sqrt(2.0) * a);
    };
    // Stored in the v_t + sup(...+ l) = 0 convention; the benchmark's cost
    // enters the supremum with a negative sign.
    prob.running_cost2 = [](double t, const Vector2d& x, const Vector2d& a) {
        const double s = std::sin(x[0]) * std::sin(x[1]);
        const double c1 = std::cos(x[0]), c2 = std::cos(x[1]);
        return -((1.0 - t) * s + (2.0 - t) * (a[0] * a[0] * c1 * c1 + a[1] * a[1] * c2 * c2));
    };
    prob.initial2 = [](const Vector2d& x) { return 2.0 * std::sin(x[0]) * std::sin(x[1]); };
    prob.exact2 = [](double t, const Vector2d& x) {
        return (2.0 - t) * std::sin(x[0]) * std::sin(x[1]);
    };
    prob.controls = ControlSet::unit_circle(control_points);
    prob.left = BoundaryCondition::periodic();
    prob.right = BoundaryCondition::periodic();
    check_problem_finite(prob, 64);
    return prob;
}

namespace {

HJBProblem make_manufactured(double sigma0, double b0, double f0,
                             std::function<double(double, double)> v,
                             std::function<double(double, double)> vt,
                             std::function<double(double, double)> vx,
                             std::function<double(double, double)> vxx,
                             const char* name) {
    HJBProblem prob;
    prob.name = name;
    prob.dimension = 1;
    prob.xmin = 0.0;
    prob.xmax = 2.0;
    prob.horizon = 1.0;
    prob.time_dependent = true; // running cost carries the time dependence
    prob.sigma = [sigma0](double, double, double) { return sigma0; };
    prob.drift = [b0](double, double, double) { return b0; };
    prob.discount = [f0](double, double, double) { return f0; };
    // l := -(v_t - 1/2 sigma^2 v_xx + b v_x + f v) so that v solves the PDE.
    prob.running_cost = [=](double t, double x, double) {
        return -(vt(t, x) - 0.5 * sigma0 * sigma0 * vxx(t, x) + b0 * vx(t, x) + f0 * v(t, x));
    };
    prob.initial = [v](double x) { return v(0.0, x); };
    prob.exact = v;
    prob.controls = ControlSet::finite_list({0.0});
    prob.left = BoundaryCondition::dirichlet([v](double t) { return v(t, 0.0); });
    prob.right = BoundaryCondition::dirichlet([v](double t) { return v(t, 2.0); });
    return prob;
}

} // namespace

HJBProblem make_manufactured_trig_problem(double sigma0, double b0, double f0) {
    auto v = [](double t, double x) { return std::exp(-t) * std::sin(x); };
    auto vt = [](double t, double x) { return -std::exp(-t) * std::sin(x); };
    auto vx = [](double t, double x) { return std::exp(-t) * std::cos(x); };
    auto vxx = [](double t, double x) { return -std::exp(-t) * std::sin(x); };
    return make_manufactured(sigma0, b0, f0, v, vt, vx, vxx, "manufactured-trig");
}

HJBProblem make_manufactured_quadratic_problem(double sigma0, double b0, double f0) {
    auto v = [](double t, double x) { return std::exp(-t) * (1.0 + x + x * x); };
    auto vt = [](double t, double x) { return -std::exp(-t) * (1.0 + x + x * x); };
    auto vx = [](double t, double x) { return std::exp(-t) * (1.0 + 2.0 * x); };
    auto vxx = [](double t, double) { return 2.0 * std::exp(-t); };
    return make_manufactured(sigma0, b0, f0, v, vt, vx, vxx, "manufactured-quad");
}

HJBProblem make_problem_by_name(const std::string& name,
                                const std::map<std::string, double>& overrides) {
    auto get = [&overrides](const std::string& key, double fallback) {
        auto it = overrides.find(key);
        return it == overrides.end() ? fallback : it->second;
    };
    if (name == "mean-variance") {
        MeanVarianceParams p;
        p.r = get("r", p.r);
        p.sigma = get("sigma", p.sigma);
        p.xi = get("xi", p.xi);
        p.c = get("c", p.c);
        p.T = get("T", p.T);
        p.gamma = get("gamma", p.gamma);
        p.a_max = get("a_max", p.a_max);
        p.x_max = get("x_max", p.x_max);
        p.control_points = static_cast<int>(get("control_points", p.control_points));
        return make_mean_variance_problem(p);
    }
    if (name == "uncertain-vol") {
        UncertainVolParams p;
        p.r = get("r", p.r);
        p.sigma_min = get("sigma_min", p.sigma_min);
        p.sigma_max = get("sigma_max", p.sigma_max);
        p.T = get("T", p.T);
        p.K1 = get("K1", p.K1);
        p.K2 = get("K2", p.K2);
        return make_uncertain_vol_problem(p);
    }
    if (name == "diffusion-2d") {
        return make_2d_problem(static_cast<int>(get("control_points", 32)));
    }
    throw InvalidArgument("unknown problem: " + name +
                          " (expected mean-variance, uncertain-vol or diffusion-2d)");
}

void check_problem_finite(const HJBProblem& problem, int samples, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> ux(problem.xmin, problem.xmax);
    std::uniform_real_distribution<double> ut(0.0, problem.horizon);
    std::uniform_int_distribution<int> uk(0, problem.controls.size() - 1);
    for (int s = 0; s < samples; ++s) {
        const double t = ut(rng);
        const int k = uk(rng);
        if (problem.dimension == 1) {
            const double x = ux(rng);
            const double a = problem.controls.scalar(k);
            for (double val : {problem.sigma(t, x, a), problem.drift(t, x, a),
                               problem.discount(t, x, a), problem.running_cost(t, x, a),
                               problem.initial(x)}) {
                if (!is_finite(val))
                    throw NumericalError("non-finite coefficient value in problem " + problem.name);
            }
        } else {
            const Vector2d x(ux(rng), ux(rng));
            const Vector2d a = problem.controls.vec2(k);
            const Vector2d sv = problem.sigma2(t, x, a);
            if (!sv.allFinite() || !is_finite(problem.running_cost2(t, x, a)) ||
                !is_finite(problem.initial2(x)))
                throw NumericalError("non-finite coefficient value in problem " + problem.name);
        }
    }
}

} // namespace hjb
