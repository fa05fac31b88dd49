#ifndef HJB_FILTER_HPP
#define HJB_FILTER_HPP

#include "hjb/scheme.hpp"

#include <cstdint>
#include <vector>

namespace hjb {

/// Bounded filter: identity on [-1, 1] (endpoints included), zero outside.
double filter_fn(double x);

struct FilterConfig {
    enum class EpsRule {
        MaxTauDx, // eps = c0 * max(tau, dx)
        DxMin,    // eps = c0 * dx_min
    };
    double c0 = 1.0;
    EpsRule rule = EpsRule::MaxTauDx;
};

/// The filter width for a given time step and the rule-dependent spacing
/// (dx for MaxTauDx, dx_min for DxMin).
double epsilon(const FilterConfig& cfg, double tau, double dx_or_dxmin);

/// Effective filter width used by the runners: c0 * dx_min for the DxMin
/// rule; c0 * max(tau, dx)^2 / tau for MaxTauDx (identical to
/// epsilon(cfg, ...) whenever tau >= dx).
double epsilon_for_grid(const FilterConfig& cfg, double tau, const SpatialGrid1D& grid);
double epsilon_for_grid(const FilterConfig& cfg, double tau, const PeriodicGrid2D& grid);

/// Per-step filter activity: mask is true where the high-order value was
/// rejected and the monotone value used instead.
struct FilterActivity {
    std::vector<std::uint8_t> mask;
    int active_count = 0;
};

/// Blend of the two one-step values,
///   u_i = sM_i + eps*tau * F((sH_i - sM_i) / (eps*tau)),
/// evaluated branch-exactly: the high-order value where the discrepancy is
/// within eps*tau, the monotone value elsewhere.
std::pair<VectorXd, FilterActivity> filtered_step(const VectorXd& s_monotone,
                                                  const VectorXd& s_high, double eps,
                                                  double tau);

struct RunOptions {
    bool store_trajectory = false;
    /// Run the two per-step solves of the filtered scheme concurrently.
    bool parallel_solves = false;
};

struct SolveOutput {
    VectorXd final_state;
    std::vector<VectorXd> trajectory; // filled when requested; includes u^0
    std::vector<FilterActivity> activity; // empty for pure monotone runs
    double solve_seconds = 0.0;
    long howard_iterations = 0;
    int steps = 0;
    /// max over steps of ||u^{n+1} - S_M(u^n)||_inf (filtered runs only);
    /// bounded by eps*tau by construction.
    double max_monotone_deviation = 0.0;
    double eps = 0.0;

    int max_active_nodes() const;
};

/// Time loop of the plain monotone scheme u^{n+1} = S_M(u^n).
SolveOutput run_monotone(SchemeFamily& monotone_family, const TimeGrid& time,
                         const VectorXd& u0, const HowardConfig& howard = {},
                         const RunOptions& options = {});

/// Filtered scheme: u^{n+1} = S_M(u^n) + eps*tau F((S_H - S_M)/(eps*tau)).
/// The first step of a two-step high-order family uses its dedicated
/// first-step rule and is filtered like every other step. Throws
/// NumericalError annotated with the step index if an implicit solve fails.
SolveOutput run_filtered(SchemeFamily& monotone_family, SchemeFamily& high_family,
                         const TimeGrid& time, const VectorXd& u0, double eps,
                         const HowardConfig& howard = {}, const RunOptions& options = {});

/// Initial data sampled at the grid nodes.
VectorXd sample_initial(const HJBProblem& problem, const SpatialGrid1D& grid);
VectorXd sample_initial(const HJBProblem& problem, const PeriodicGrid2D& grid);

} // namespace hjb

#endif
