#ifndef HJB_PROBLEM_HPP
#define HJB_PROBLEM_HPP

#include "hjb/common.hpp"
#include "hjb/grid.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>

namespace hjb {

/// Discretized control set. Controls are stored as rows of a P x m matrix
/// (m = 1 for scalar controls, m = 2 for the unit-circle controls).
class ControlSet {
public:
    static ControlSet finite_list(std::vector<double> values);
    static ControlSet interval(double lo, double hi, int count);
    static ControlSet unit_circle(int count);

    int size() const { return static_cast<int>(points_.rows()); }
    int dim() const { return static_cast<int>(points_.cols()); }
    double scalar(int k) const { return points_(k, 0); }
    Vector2d vec2(int k) const { return points_.row(k).transpose(); }

    /// Control mesh step: 2*pi/P for the circle, grid step for an interval.
    double mesh_step() const { return mesh_step_; }

private:
    MatrixXd points_;
    double mesh_step_ = 0.0;
};

struct BoundaryCondition {
    enum class Kind {
        DirichletFromFunction, // value g(t) imposed on the boundary node
        InfluxNoCondition,     // scheme degenerates to one-sided transport there
        Periodic,
    };
    Kind kind = Kind::DirichletFromFunction;
    std::function<double(double)> value; // g(t), Dirichlet only

    static BoundaryCondition dirichlet(std::function<double(double)> g) {
        return {Kind::DirichletFromFunction, std::move(g)};
    }
    static BoundaryCondition influx() { return {Kind::InfluxNoCondition, nullptr}; }
    static BoundaryCondition periodic() { return {Kind::Periodic, nullptr}; }
};

/// Problem description for
///   v_t + sup_a ( -1/2 sigma^2 v_xx + b v_x + f v + l ) = 0,  v(0,.) = v0,
/// and its two-dimensional analogue with diffusion vector sigma_a,
///   v_t + sup_a ( -1/2 Tr(sigma_a sigma_a^T D^2 v) + l ) = 0.
/// All coefficient callables must be pure and safe for concurrent use.
struct HJBProblem {
    std::string name;
    int dimension = 1;

    // 1D coefficients (t, x, a).
    std::function<double(double, double, double)> sigma;
    std::function<double(double, double, double)> drift;
    std::function<double(double, double, double)> discount;
    std::function<double(double, double, double)> running_cost;
    std::function<double(double)> initial;
    std::function<double(double, double)> exact; // optional v(t,x)

    // 2D coefficients (t, x, a); controls are 2-vectors.
    std::function<Vector2d(double, const Vector2d&, const Vector2d&)> sigma2;
    std::function<double(double, const Vector2d&, const Vector2d&)> running_cost2;
    std::function<double(const Vector2d&)> initial2;
    std::function<double(double, const Vector2d&)> exact2; // optional

    ControlSet controls = ControlSet::finite_list({0.0});
    BoundaryCondition left;
    BoundaryCondition right;

    double xmin = 0.0;
    double xmax = 1.0;
    double horizon = 1.0;

    /// True when any coefficient depends on t (disables operator caching).
    bool time_dependent = false;

    bool has_exact() const { return dimension == 1 ? bool(exact) : bool(exact2); }
};

struct MeanVarianceParams {
    double r = 0.03;
    double sigma = 0.15;
    double xi = 0.33;
    double c = 0.1;
    double T = 20.0;
    double gamma = 14.47;
    double a_max = 1.5;
    double x_max = 5.0;
    int control_points = 61;
};

struct UncertainVolParams {
    double r = 0.1;
    double sigma_min = 0.15;
    double sigma_max = 0.25;
    double T = 0.1;
    double K1 = 90.0;
    double K2 = 110.0;
};

HJBProblem make_mean_variance_problem(const MeanVarianceParams& p = {});
HJBProblem make_uncertain_vol_problem(const UncertainVolParams& p = {});
HJBProblem make_2d_problem(int control_points);

/// 1D single-control problems with a known smooth solution, used for
/// truncation-error audits. The running cost is chosen so that the attached
/// exact solution solves the PDE identically.
HJBProblem make_manufactured_trig_problem(double sigma0 = 0.5, double b0 = 0.7,
                                          double f0 = 0.3);
HJBProblem make_manufactured_quadratic_problem(double sigma0 = 0.5, double b0 = 0.7,
                                               double f0 = 0.3);

/// CLI problem lookup: "mean-variance", "uncertain-vol", "diffusion-2d".
/// Overrides are applied to the parameter struct fields by name.
HJBProblem make_problem_by_name(const std::string& name,
                                const std::map<std::string, double>& overrides = {});

/// Samples coefficients over the domain and admissible controls and checks
/// for non-finite values; throws NumericalError on failure.
void check_problem_finite(const HJBProblem& problem, int samples = 128,
                          unsigned seed = 20240901);

} // namespace hjb

#endif
