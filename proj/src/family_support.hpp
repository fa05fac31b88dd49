#ifndef HJB_FAMILY_SUPPORT_HPP
#define HJB_FAMILY_SUPPORT_HPP

#include "hjb/grid.hpp"
#include "hjb/problem.hpp"
#include "hjb/scheme.hpp"
#include "hjb/stencil.hpp"

#include <climits>
#include <limits>
#include <sstream>

namespace hjb::detail {

// Derivative weights at x_i of the quadratic through {x_i, x_{i-1}, x_{i-2}}
// (side < 0) or {x_i, x_{i+1}, x_{i+2}} (side > 0). On a uniform grid these
// are the (3, -4, 1)/(2h) shifted stencils.
struct OneSided3 {
    double w0, w1, w2; // weights of u_i, u_{i+-1}, u_{i+-2}
};

inline OneSided3 one_sided_d1_weights(const SpatialGrid1D& g, int i, int side) {
    if (side < 0) {
        const double alpha = g.spacing(i - 1);
        const double beta = alpha + g.spacing(i - 2);
        return {(alpha + beta) / (alpha * beta), -beta / (alpha * (beta - alpha)),
                alpha / (beta * (beta - alpha))};
    }
    const double alpha = g.spacing(i);
    const double beta = alpha + g.spacing(i + 1);
    return {-(alpha + beta) / (alpha * beta), beta / (alpha * (beta - alpha)),
            -alpha / (beta * (beta - alpha))};
}

enum class DriftScheme {
    Upwind1,  // first-order one-sided differences (IE)
    Shifted2, // second-order shifted three-point stencils (BDF2)
    Central2, // classical second-order centered difference (CN)
};

// Adds scale * (row of L^a(t)) to `row`, where
//   L^a = -1/2 sigma^2 D2 + drift terms + f Id.
// Interior rows use the non-uniform second difference. Upwinded drift terms
// are b^+ D1(-) - b^- D1(+); each shifted second-order side falls back to
// first-order upwind on its own wherever its stencil does not fit. Boundary
// rows implement the boundary specification: Dirichlet rows get no spatial
// part (handled by the caller as identity rows) and influx rows degenerate
// to one-sided transport without diffusion.
inline void add_operator_terms(StencilRow& row, const HJBProblem& pb, const SpatialGrid1D& g,
                               double t, int i, double a, DriftScheme drift, double scale) {
    const int n = g.num_nodes();
    const double x = g.node(i);
    const double b = pb.drift(t, x, a);
    const double bp = std::max(b, 0.0);
    const double bm = std::max(-b, 0.0);
    const double f = pb.discount(t, x, a);

    const bool left_boundary = (i == 0);
    const bool right_boundary = (i == n - 1);

    if (!left_boundary && !right_boundary) {
        const double half_s2 = 0.5 * std::pow(pb.sigma(t, x, a), 2);
        if (half_s2 != 0.0) {
            const D2Weights w = d2_nonuniform_weights(g, i);
            row.add(i - 1, -scale * half_s2 * w.minus);
            row.add(i, -scale * half_s2 * w.center);
            row.add(i + 1, -scale * half_s2 * w.plus);
        }
    }

    if (drift == DriftScheme::Central2 && !left_boundary && !right_boundary) {
        const double b_val = bp - bm;
        if (b_val != 0.0) {
            const double hm = g.spacing(i - 1);
            const double hp = g.spacing(i);
            row.add(i - 1, scale * b_val * (-hp / (hm * (hm + hp))));
            row.add(i, scale * b_val * ((hp - hm) / (hm * hp)));
            row.add(i + 1, scale * b_val * (hm / (hp * (hm + hp))));
        }
        if (f != 0.0) row.add(i, scale * f);
        return;
    }

    const bool second_minus = drift == DriftScheme::Shifted2 && i >= 2;
    const bool second_plus = drift == DriftScheme::Shifted2 && i <= n - 3;

    if (bp > 0.0 && !left_boundary) {
        if (second_minus) {
            const OneSided3 w = one_sided_d1_weights(g, i, -1);
            row.add(i, scale * bp * w.w0);
            row.add(i - 1, scale * bp * w.w1);
            row.add(i - 2, scale * bp * w.w2);
        } else {
            const double h = g.spacing(i - 1);
            row.add(i, scale * bp / h);
            row.add(i - 1, -scale * bp / h);
        }
    }
    if (bm > 0.0 && !right_boundary) {
        if (second_plus) {
            const OneSided3 w = one_sided_d1_weights(g, i, +1);
            row.add(i, -scale * bm * w.w0);
            row.add(i + 1, -scale * bm * w.w1);
            row.add(i + 2, -scale * bm * w.w2);
        } else {
            const double h = g.spacing(i);
            row.add(i, scale * bm / h);
            row.add(i + 1, -scale * bm / h);
        }
    }
    if (f != 0.0) row.add(i, scale * f);
}

// Full spatial-operator row including the boundary treatment; Dirichlet
// rows are returned empty.
inline StencilRow spatial_operator_row(const HJBProblem& pb, const SpatialGrid1D& g, double t,
                                       int i, double a, DriftScheme drift) {
    StencilRow row;
    row.row = i;
    const int n = g.num_nodes();
    if (i == 0 || i == n - 1) {
        const BoundaryCondition& bc = i == 0 ? pb.left : pb.right;
        switch (bc.kind) {
        case BoundaryCondition::Kind::DirichletFromFunction:
            return row;
        case BoundaryCondition::Kind::InfluxNoCondition:
            add_operator_terms(row, pb, g, t, i, a, drift, 1.0);
            return row;
        case BoundaryCondition::Kind::Periodic:
            throw InvalidArgument("periodic boundaries are not supported on 1D grids");
        }
    }
    add_operator_terms(row, pb, g, t, i, a, drift, 1.0);
    return row;
}

inline bool is_dirichlet_row(const HJBProblem& pb, int i, int n) {
    if (i == 0) return pb.left.kind == BoundaryCondition::Kind::DirichletFromFunction;
    if (i == n - 1) return pb.right.kind == BoundaryCondition::Kind::DirichletFromFunction;
    return false;
}

inline double dirichlet_value(const HJBProblem& pb, int i, int /*n*/, double t) {
    return (i == 0 ? pb.left : pb.right).value(t);
}

[[noreturn]] inline void throw_howard_failure(const char* scheme, double residual, int iters) {
    std::ostringstream oss;
    oss << scheme << ": policy iteration did not converge (" << iters
        << " iterations, residual " << residual << ")";
    throw NumericalError(oss.str());
}

// y = band * x for the row-wise band storage band(i, d) = A(i, i + d - bw).
inline void banded_apply(const MatrixXd& band, int bw, const VectorXd& x, VectorXd& y) {
    const int n = static_cast<int>(band.rows());
    y.setZero(n);
    for (int d = 0; d <= 2 * bw; ++d) {
        const int off = d - bw;
        const int r0 = std::max(0, -off);
        const int len = n - std::max(0, off) - r0;
        if (len <= 0) continue;
        y.segment(r0, len).array() +=
            band.col(d).segment(r0, len).array() * x.segment(r0 + off, len).array();
    }
}

// Shared machinery of the 1D implicit families: banded per-control operator
// storage, matrix caching keyed on the step variant, warm-started policy
// iteration. The rows produced by assemble_row are authoritative; fill_rhs
// implementations are vectorized equivalents of their rhs part.
class ImplicitBanded1DFamily : public SchemeFamily {
public:
    VectorXd step(const StepState& state, const HowardConfig& cfg, StepStats* stats) override {
        const double t_next = state.t_n + tau_;
        const int variant = matrix_variant(state.n);
        if (problem_->time_dependent || built_variant_ != variant) {
            build_matrix(t_next, state);
            built_variant_ = problem_->time_dependent ? INT_MIN : variant;
        }
        fill_rhs(t_next, state);
        const std::vector<int>* warm =
            warm_policy_.size() == static_cast<size_t>(state_size_) ? &warm_policy_ : nullptr;
        PolicyIterationResult res = howard_solve(pp_, *state.un, cfg, warm);
        if (stats) {
            stats->howard_iterations = res.iterations;
            stats->final_residual = res.final_residual;
        }
        if (!res.converged)
            throw_howard_failure(scheme_name(kind_), res.final_residual, res.iterations);
        warm_policy_ = std::move(res.policy);
        return std::move(res.x);
    }

    void reset() override {
        warm_policy_.clear();
        built_variant_ = INT_MIN;
        lvec_time_ = std::numeric_limits<double>::quiet_NaN();
    }

    const BandedPolicyProblem& policy_problem() const { return pp_; }

protected:
    ImplicitBanded1DFamily(SchemeKind kind, bool two_step, const HJBProblem* pb,
                           const SpatialGrid1D* grid, double tau, int bw)
        : SchemeFamily(kind, false, two_step, grid->num_nodes(), pb, tau), grid_(grid),
          pp_(grid->num_nodes(), bw, pb->controls.size()) {}

    virtual int matrix_variant(int) const { return 0; }
    virtual void fill_rhs(double t_next, const StepState& state) = 0;

    void build_matrix(double t_next, const StepState& state) {
        const int bw = pp_.bandwidth();
        for (int a = 0; a < pp_.num_controls(); ++a) {
            MatrixXd& band = pp_.band(a);
            band.setZero();
            for (int i = 0; i < state_size_; ++i) {
                const StencilRow row = assemble_row(t_next, i, a, state);
                for (int e = 0; e < row.size; ++e) {
                    const int d = row.cols[e] - i + bw;
                    if (d < 0 || d > 2 * bw)
                        throw NumericalError("stencil exceeds the banded storage");
                    band(i, d) = row.coefs[e];
                }
            }
        }
    }

    // Running-cost vectors per control at the given time, with Dirichlet
    // rows zeroed; recomputed only when the evaluation time changes.
    void ensure_running_cost(double t) {
        const bool cached = !lvec_.empty() && std::isfinite(lvec_time_);
        if (cached && (!problem_->time_dependent || lvec_time_ == t)) return;
        const int n = state_size_;
        lvec_.assign(pp_.num_controls(), VectorXd::Zero(n));
        for (int a = 0; a < pp_.num_controls(); ++a) {
            const double ca = problem_->controls.scalar(a);
            for (int i = 0; i < n; ++i) {
                if (is_dirichlet_row(*problem_, i, n)) continue;
                lvec_[a][i] = problem_->running_cost(t, grid_->node(i), ca);
            }
        }
        lvec_time_ = t;
    }

    void overwrite_dirichlet_rhs(double t_next) {
        const int n = state_size_;
        for (int i : {0, n - 1}) {
            if (!is_dirichlet_row(*problem_, i, n)) continue;
            const double g = dirichlet_value(*problem_, i, n, t_next);
            for (int a = 0; a < pp_.num_controls(); ++a) pp_.rhs(a)[i] = g;
        }
    }

    const SpatialGrid1D* grid_;
    BandedPolicyProblem pp_;
    int built_variant_ = INT_MIN;
    std::vector<int> warm_policy_;
    std::vector<VectorXd> lvec_;
    double lvec_time_ = std::numeric_limits<double>::quiet_NaN();
};

} // namespace hjb::detail

#endif
