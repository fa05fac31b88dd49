#include "hjb/filter.hpp"

#include <chrono>
#include <future>

namespace hjb {

double filter_fn(double x) {
    return std::abs(x) <= 1.0 ? x : 0.0;
}

double epsilon(const FilterConfig& cfg, double tau, double dx_or_dxmin) {
    require(cfg.c0 > 0.0, "c0 must be positive");
    require(tau > 0.0 && dx_or_dxmin > 0.0, "filter scales must be positive");
    switch (cfg.rule) {
    case FilterConfig::EpsRule::MaxTauDx: return cfg.c0 * std::max(tau, dx_or_dxmin);
    case FilterConfig::EpsRule::DxMin: return cfg.c0 * dx_or_dxmin;
    }
    return 0.0;
}

namespace {

// Width actually passed to filtered_step. For the DxMin rule this is the
// plain c0 * dx_min. For MaxTauDx the acceptance window |S_H - S_M| <=
// eps*tau must scale like max(tau, dx)^2 -- the size of the one-step gap
// between a first-order monotone scheme and a second-order one -- so the
// effective eps is c0 * max(tau, dx)^2 / tau. When tau >= dx (Example 1's
// tau = 4 dx coupling) this reduces exactly to c0 * max(tau, dx).
double effective_epsilon(const FilterConfig& cfg, double tau, double dx) {
    const double eps = epsilon(cfg, tau, dx);
    if (cfg.rule == FilterConfig::EpsRule::MaxTauDx && dx > tau) return eps * dx / tau;
    return eps;
}

} // namespace

double epsilon_for_grid(const FilterConfig& cfg, double tau, const SpatialGrid1D& grid) {
    const double dx = cfg.rule == FilterConfig::EpsRule::DxMin ? grid.min_spacing()
                                                               : grid.max_spacing();
    return effective_epsilon(cfg, tau, dx);
}

double epsilon_for_grid(const FilterConfig& cfg, double tau, const PeriodicGrid2D& grid) {
    return effective_epsilon(cfg, tau, grid.spacing());
}

std::pair<VectorXd, FilterActivity> filtered_step(const VectorXd& s_monotone,
                                                  const VectorXd& s_high, double eps,
                                                  double tau) {
    require(s_monotone.size() == s_high.size(), "step vectors must have equal length");
    require(eps > 0.0 && tau > 0.0, "eps and tau must be positive");
    const int n = static_cast<int>(s_monotone.size());
    const double cutoff = eps * tau;
    VectorXd out(n);
    FilterActivity activity;
    activity.mask.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        const double d = s_high[i] - s_monotone[i];
        if (std::abs(d) <= cutoff) {
            out[i] = s_high[i];
        } else {
            out[i] = s_monotone[i];
            activity.mask[i] = 1;
            ++activity.active_count;
        }
    }
    return {std::move(out), std::move(activity)};
}

int SolveOutput::max_active_nodes() const {
    int m = 0;
    for (const FilterActivity& a : activity) m = std::max(m, a.active_count);
    return m;
}

VectorXd sample_initial(const HJBProblem& problem, const SpatialGrid1D& grid) {
    require(problem.dimension == 1, "1D sampling needs a 1D problem");
    VectorXd u0(grid.num_nodes());
    for (int i = 0; i < grid.num_nodes(); ++i) u0[i] = problem.initial(grid.node(i));
    return u0;
}

VectorXd sample_initial(const HJBProblem& problem, const PeriodicGrid2D& grid) {
    require(problem.dimension == 2, "2D sampling needs a 2D problem");
    const int J = grid.nodes_per_axis();
    VectorXd u0(grid.num_nodes());
    for (int i = 0; i < J; ++i)
        for (int j = 0; j < J; ++j) u0[grid.flat_index(i, j)] = problem.initial2(grid.node(i, j));
    return u0;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

[[noreturn]] void rethrow_with_step(const NumericalError& err, int step) {
    throw NumericalError("step " + std::to_string(step) + ": " + err.what());
}

} // namespace

SolveOutput run_monotone(SchemeFamily& family, const TimeGrid& time, const VectorXd& u0,
                         const HowardConfig& howard, const RunOptions& options) {
    require(u0.size() == family.state_size(), "initial state size mismatch");
    const auto t0 = Clock::now();
    family.reset();

    SolveOutput out;
    out.steps = time.steps;
    VectorXd u = u0;
    if (options.store_trajectory) out.trajectory.push_back(u);

    for (int n = 0; n < time.steps; ++n) {
        StepState state;
        state.un = &u;
        state.t_n = time.node(n);
        state.n = n;
        StepStats stats;
        try {
            u = family.step(state, howard, &stats);
        } catch (const NumericalError& err) {
            rethrow_with_step(err, n);
        }
        out.howard_iterations += stats.howard_iterations;
        if (options.store_trajectory) out.trajectory.push_back(u);
    }
    out.final_state = std::move(u);
    out.solve_seconds = seconds_since(t0);
    return out;
}

SolveOutput run_filtered(SchemeFamily& monotone_family, SchemeFamily& high_family,
                         const TimeGrid& time, const VectorXd& u0, double eps,
                         const HowardConfig& howard, const RunOptions& options) {
    require(u0.size() == monotone_family.state_size(), "initial state size mismatch");
    require(monotone_family.state_size() == high_family.state_size(),
            "families must share the grid");
    require(eps > 0.0, "eps must be positive");
    const auto t0 = Clock::now();
    monotone_family.reset();
    high_family.reset();

    SolveOutput out;
    out.steps = time.steps;
    out.eps = eps;
    const double tau = time.dt();

    VectorXd u = u0;
    VectorXd u_prev; // u^{n-1}
    if (options.store_trajectory) out.trajectory.push_back(u);

    for (int n = 0; n < time.steps; ++n) {
        StepState state;
        state.un = &u;
        state.unm1 = n >= 1 ? &u_prev : nullptr;
        state.t_n = time.node(n);
        state.n = n;

        VectorXd s_m, s_h;
        StepStats stats_m, stats_h;
        try {
            if (options.parallel_solves) {
                auto high_task = std::async(std::launch::async, [&] {
                    return high_family.step(state, howard, &stats_h);
                });
                s_m = monotone_family.step(state, howard, &stats_m);
                s_h = high_task.get();
            } else {
                s_m = monotone_family.step(state, howard, &stats_m);
                s_h = high_family.step(state, howard, &stats_h);
            }
        } catch (const NumericalError& err) {
            rethrow_with_step(err, n);
        }
        out.howard_iterations += stats_m.howard_iterations + stats_h.howard_iterations;

        auto [u_next, activity] = filtered_step(s_m, s_h, eps, tau);
        out.max_monotone_deviation =
            std::max(out.max_monotone_deviation, (u_next - s_m).cwiseAbs().maxCoeff());
        out.activity.push_back(std::move(activity));

        u_prev = std::move(u);
        u = std::move(u_next);
        if (options.store_trajectory) out.trajectory.push_back(u);
    }
    out.final_state = std::move(u);
    out.solve_seconds = seconds_since(t0);
    return out;
}

} // namespace hjb
