#ifndef HJB_SCHEME_HPP
#define HJB_SCHEME_HPP

#include "hjb/common.hpp"
#include "hjb/grid.hpp"
#include "hjb/howard.hpp"
#include "hjb/problem.hpp"
#include "hjb/stencil.hpp"

#include <memory>

namespace hjb {

enum class SchemeKind { IE, SL, BDF2, CN, CNRannacher, FD2D };

const char* scheme_name(SchemeKind kind);
SchemeKind scheme_from_name(const std::string& name);

/// Data available when computing u^{n+1}.
struct StepState {
    const VectorXd* un = nullptr;   // u^n
    const VectorXd* unm1 = nullptr; // u^{n-1}; null while n = 0
    double t_n = 0.0;
    int n = 0;
};

struct StepStats {
    int howard_iterations = 0;
    double final_residual = 0.0;
};

/// A one-step (or two-step) scheme bound to a problem, a grid and a time
/// step, exposed in the abstract per-control row form
///   sup_a ( M^a u^{n+1} - G^a(previous levels) ) = 0.
/// Explicit schemes have M = I and are evaluated directly; implicit schemes
/// are solved by policy iteration with warm starts across time steps.
class SchemeFamily {
public:
    virtual ~SchemeFamily() = default;

    SchemeKind kind() const { return kind_; }
    bool is_explicit() const { return explicit_; }
    bool is_two_step() const { return two_step_; }
    int state_size() const { return state_size_; }
    double dt() const { return tau_; }
    const HJBProblem& problem() const { return *problem_; }
    const ControlSet& controls() const { return problem_->controls; }

    /// Row i of (M^a, G^a) at time level t_next for the given control index
    /// and previous-level data. Boundary rows follow the problem's
    /// boundary specification.
    virtual StencilRow assemble_row(double t_next, int i, int control,
                                    const StepState& state) const = 0;

    /// Advances one time step; throws NumericalError when an implicit solve
    /// does not converge.
    virtual VectorXd step(const StepState& state, const HowardConfig& cfg,
                          StepStats* stats = nullptr) = 0;

    /// Clears warm-start data so the next step starts cold.
    virtual void reset() {}

protected:
    SchemeFamily(SchemeKind kind, bool is_explicit, bool two_step, int state_size,
                 const HJBProblem* problem, double tau)
        : kind_(kind), explicit_(is_explicit), two_step_(two_step),
          state_size_(state_size), problem_(problem), tau_(tau) {}

    SchemeKind kind_;
    bool explicit_;
    bool two_step_;
    int state_size_;
    const HJBProblem* problem_;
    double tau_;
};

/// Builds a scheme family on a 1D grid (IE, SL, BDF2, CN, CNRannacher).
std::unique_ptr<SchemeFamily> make_family(SchemeKind kind, const HJBProblem& problem,
                                          const SpatialGrid1D& grid, double tau);

/// Builds a scheme family on the periodic 2D grid (SL, FD2D).
std::unique_ptr<SchemeFamily> make_family(SchemeKind kind, const HJBProblem& problem,
                                          const PeriodicGrid2D& grid, double tau);

} // namespace hjb

#endif
