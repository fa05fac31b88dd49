#ifndef HJB_HARNESS_HPP
#define HJB_HARNESS_HPP

#include "hjb/filter.hpp"
#include "hjb/highorder.hpp"
#include "hjb/monotone.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hjb {

struct ErrorTriple {
    double l1 = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
};

/// Discrete norms of u - ref with trapezoidal weights (half cells at the
/// boundaries). Nodes with exclude.first <= x_i <= exclude.second are
/// dropped from all three norms.
ErrorTriple error_norms(const VectorXd& u, const VectorXd& ref, const SpatialGrid1D& grid,
                        std::optional<std::pair<double, double>> exclude = {});

/// Uniform-weight norms on the periodic grid (cell area dx^2).
ErrorTriple error_norms(const VectorXd& u, const VectorXd& ref, const PeriodicGrid2D& grid);

/// log(e_coarse/e_fine) / log(ratio); NaN when either error is nonpositive.
double observed_order(double e_coarse, double e_fine, double ratio = 2.0);

// ---------------------------------------------------------------------------
// Convergence studies

enum class ReferenceMode { Exact, FineGrid };

struct StudyConfig {
    std::string problem = "mean-variance";
    std::map<std::string, double> problem_overrides;
    SchemeKind monotone = SchemeKind::IE;
    std::optional<SchemeKind> high;     // no value: pure monotone runs
    FilterConfig filter{5.0, FilterConfig::EpsRule::MaxTauDx};
    int level_lo = 0;
    int level_hi = 3;
    ReferenceMode ref_mode = ReferenceMode::FineGrid;
    int ref_level = 6;
    std::optional<std::pair<double, double>> exclude;
    std::optional<double> probe;
    std::string out_dir = "out";
    std::string label; // CSV base name; derived from the config when empty
    HowardConfig howard;
    bool parallel_solves = false;
    bool write_csv = true;
    bool write_activity_csv = true;
};

struct LevelResult {
    int level = 0;
    int N = 0, J = 0, P = 0;
    ErrorTriple err;
    std::optional<ErrorTriple> local;
    std::optional<double> probe_value;
    std::optional<double> probe_error;
    int filter_active_nodes = 0;        // max over steps
    double filter_active_fraction = 0.0;
    double cpu_seconds = 0.0;
    bool ok = true;
    std::string message;
};

struct ConvergenceTable {
    std::vector<LevelResult> rows;

    std::vector<double> errors(int which /*0:L1 1:L2 2:Linf*/, bool local = false) const;
    std::vector<double> probe_values() const;
    /// Orders from successive rows; NaN for the first row / invalid pairs.
    static std::vector<double> orders_from(const std::vector<double>& errs);
    /// Orders of successive probe-value differences (the value-tracking
    /// convention used by the uncertain-volatility benchmark).
    static std::vector<double> probe_diff_orders(const std::vector<double>& values);
};

struct StudyResult {
    ConvergenceTable table;
    std::string csv_path;
    std::vector<std::string> activity_csv_paths;
};

/// Grid/time/control sizes and problem instance for one refinement level of
/// a named benchmark:
///   mean-variance: N = J = 40 * 2^k, uniform grid on (0, 5)
///   uncertain-vol: N = 25 * 2^k on the non-uniform payoff grid, J = 60 * 2^k
///   diffusion-2d:  N = J = P = 4 * 2^k, periodic grid
struct LevelSetup {
    HJBProblem problem;
    std::optional<SpatialGrid1D> grid1d;
    std::optional<PeriodicGrid2D> grid2d;
    TimeGrid time;
    int N = 0, J = 0, P = 0;
};
LevelSetup make_level_setup(const std::string& problem_name,
                            const std::map<std::string, double>& overrides, int level);

/// One solve with the study's scheme configuration on the given level.
SolveOutput solve_level(const LevelSetup& setup, SchemeKind monotone,
                        std::optional<SchemeKind> high, const FilterConfig& filter,
                        const HowardConfig& howard, const RunOptions& options = {});

/// Reference solution on its own (fine) grid, restricted onto coarse grids
/// by exact node sampling when nested, linear interpolation otherwise.
struct ReferenceSolution {
    VectorXd values;
    std::optional<SpatialGrid1D> grid1d;
    std::optional<PeriodicGrid2D> grid2d;
    bool from_exact = false;
    std::function<double(double)> exact1d;         // v(T, .) when from_exact
    std::function<double(const Vector2d&)> exact2d;

    VectorXd restrict_to(const SpatialGrid1D& coarse) const;
    VectorXd restrict_to(const PeriodicGrid2D& coarse) const;
};

/// Computes (or loads from the run-directory cache) the fine-grid reference
/// run described by cfg at cfg.ref_level. Exact mode samples the attached
/// solution and bypasses all solves.
ReferenceSolution compute_reference(const StudyConfig& cfg);

/// Runs every level of the study against the reference implied by cfg, or
/// against external_ref when supplied (e.g. one high-order reference shared
/// by several scheme variants).
StudyResult run_convergence_study(const StudyConfig& cfg,
                                  const ReferenceSolution* external_ref = nullptr);

// ---------------------------------------------------------------------------
// Monotone-consistency-constant estimates guiding the choice of c0

struct CvmEstimate {
    double value = 0.0;
    bool rough = false; // true when derivatives come from a numerical solution
};

/// 1/2 ||v_tt|| + 1/2 || w(x) v_xx || with second differences of a stored
/// trajectory; w is the problem-specific drift weight.
CvmEstimate estimate_cvm_from_trajectory(const SpatialGrid1D& grid, const TimeGrid& time,
                                         const std::vector<VectorXd>& trajectory,
                                         const std::function<double(double)>& drift_weight);

/// Semi-Lagrangian bound for the 2D benchmark with analytic derivative
/// norms and the fixed coupling ratio dx/tau:
///   1/2 ||v_tt|| + 2/3 ||D^4 v|| + 1/8 (dx/tau)^2 ||D^2 v||.
double estimate_cvm_sl2d(double vtt_norm, double d2_norm, double d4_norm, double dx_over_tau);

/// Benchmark dispatch used by the CLI: trajectory-based for mean-variance,
/// analytic for diffusion-2d.
CvmEstimate estimate_cvm(const std::string& problem_name, int level,
                         const HowardConfig& howard = {});

// ---------------------------------------------------------------------------
// Truncation audits on exact solutions

/// Max-norm one-step consistency residual (1/tau) sup_a (M^a v^{n+1} - G^a)
/// of the scheme applied to the problem's exact solution, measured over
/// full-stencil interior rows at time t_eval.
double truncation_residual(SchemeKind kind, const HJBProblem& problem, int cells, double tau,
                           double t_eval);

/// Same for the 2D schemes on the periodic grid.
double truncation_residual_2d(SchemeKind kind, const HJBProblem& problem, int nodes_per_axis,
                              double tau, double t_eval);

struct TruncationAudit {
    std::vector<double> residuals;
    std::vector<double> ratios; // residuals[k] / residuals[k+1]
};

/// Residuals under simultaneous (tau, dx) halving.
TruncationAudit truncation_ratio_audit(SchemeKind kind, const HJBProblem& problem,
                                       int base_cells, double base_tau, int levels,
                                       double t_eval);

// ---------------------------------------------------------------------------
// CSV helpers (comma separated, LF endings, 6 significant digits)

std::string format_sci(double v);
std::string csv_field(std::optional<double> v);

} // namespace hjb

#endif
