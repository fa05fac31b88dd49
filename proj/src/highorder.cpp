#include "hjb/highorder.hpp"

#include "hjb/monotone.hpp"

#include "family_support.hpp"

namespace hjb {

using detail::spatial_operator_row;

double bdf2_d1(const VectorXd& values, double dx, int i, StencilSide side) {
    require(dx > 0.0, "spacing must be positive");
    const int n = static_cast<int>(values.size());
    if (side == StencilSide::Minus) {
        require(i >= 2 && i < n, "minus-side stencil needs i >= 2");
        return (3.0 * values[i] - 4.0 * values[i - 1] + values[i - 2]) / (2.0 * dx);
    }
    require(i >= 0 && i <= n - 3, "plus-side stencil needs i <= J-2");
    return -(3.0 * values[i] - 4.0 * values[i + 1] + values[i + 2]) / (2.0 * dx);
}

namespace {

// Common assembly of the implicit part: time_diag * I + tau * L(t_next),
// with Dirichlet rows replaced by identity rows carrying g(t_next).
StencilRow implicit_row(const HJBProblem& pb, const SpatialGrid1D& grid, double tau,
                        double t_next, int i, double a, double time_diag,
                        detail::DriftScheme drift) {
    const int n = grid.num_nodes();
    StencilRow row;
    row.row = i;
    if (detail::is_dirichlet_row(pb, i, n)) {
        row.add(i, 1.0);
        row.rhs = detail::dirichlet_value(pb, i, n, t_next);
        return row;
    }
    row.add(i, time_diag);
    const StencilRow op = spatial_operator_row(pb, grid, t_next, i, a, drift);
    for (int s = 0; s < op.size; ++s) row.add(op.cols[s], tau * op.coefs[s]);
    return row;
}

} // namespace

StencilRow assemble_bdf2_row(const HJBProblem& pb, const SpatialGrid1D& grid, double tau,
                             double t_next, int i, double a, const VectorXd& un,
                             const VectorXd& unm1) {
    require(pb.dimension == 1, "BDF2 rows are one-dimensional");
    StencilRow row = implicit_row(pb, grid, tau, t_next, i, a, 1.5, detail::DriftScheme::Shifted2);
    if (!detail::is_dirichlet_row(pb, i, grid.num_nodes()))
        row.rhs = 2.0 * un[i] - 0.5 * unm1[i] - tau * pb.running_cost(t_next, grid.node(i), a);
    return row;
}

StencilRow assemble_bdf2_first_row(const HJBProblem& pb, const SpatialGrid1D& grid, double tau,
                                   double t_next, int i, double a, const VectorXd& u0) {
    require(pb.dimension == 1, "BDF2 rows are one-dimensional");
    StencilRow row = implicit_row(pb, grid, tau, t_next, i, a, 1.0, detail::DriftScheme::Shifted2);
    if (!detail::is_dirichlet_row(pb, i, grid.num_nodes()))
        row.rhs = u0[i] - tau * pb.running_cost(t_next, grid.node(i), a);
    return row;
}

StencilRow assemble_cn_row(const HJBProblem& pb, const SpatialGrid1D& grid, double tau,
                           double t_next, int i, double a, const VectorXd& un) {
    require(pb.dimension == 1, "CN rows are one-dimensional");
    StencilRow row = implicit_row(pb, grid, 0.5 * tau, t_next, i, a, 1.0,
                                  detail::DriftScheme::Central2);
    if (!detail::is_dirichlet_row(pb, i, grid.num_nodes())) {
        const double t_n = t_next - tau;
        // Trapezoidal average of the nonlinear operator: the explicit half
        // step carries its own optimization over the control set.
        double explicit_sup = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < pb.controls.size(); ++k) {
            const StencilRow op = spatial_operator_row(pb, grid, t_n, i, pb.controls.scalar(k),
                                                       detail::DriftScheme::Central2);
            explicit_sup = std::max(explicit_sup, op.apply(un));
        }
        row.rhs = un[i] - 0.5 * tau * explicit_sup -
                  tau * pb.running_cost(t_next - 0.5 * tau, grid.node(i), a);
    }
    return row;
}

StencilRow assemble_fd2d_row(const HJBProblem& pb, const PeriodicGrid2D& grid, double tau,
                             double t_next, int i, int j, const Vector2d& a,
                             const VectorXd& un) {
    require(pb.dimension == 2, "FD2D rows need a 2D problem");
    const double dx = grid.spacing();
    const int idx = grid.flat_index(i, j);
    const Vector2d x = grid.node(i, j);
    const Vector2d s = pb.sigma2(t_next, x, a);
    const double cxx = 0.5 * s[0] * s[0];
    const double cyy = 0.5 * s[1] * s[1];
    const double cxy = s[0] * s[1];

    StencilRow row;
    row.row = idx;
    row.add(idx, 1.0);
    const double w2 = tau / (dx * dx);
    // -1/2 Tr(sigma sigma^T D^2 u): centered second differences plus the
    // four-corner cross stencil.
    row.add(idx, 2.0 * w2 * (cxx + cyy));
    row.add(grid.flat_index(i + 1, j), -w2 * cxx);
    row.add(grid.flat_index(i - 1, j), -w2 * cxx);
    row.add(grid.flat_index(i, j + 1), -w2 * cyy);
    row.add(grid.flat_index(i, j - 1), -w2 * cyy);
    const double wc = 0.25 * tau * cxy / (dx * dx);
    row.add(grid.flat_index(i + 1, j + 1), -wc);
    row.add(grid.flat_index(i - 1, j - 1), -wc);
    row.add(grid.flat_index(i + 1, j - 1), wc);
    row.add(grid.flat_index(i - 1, j + 1), wc);

    row.rhs = un[idx] - tau * pb.running_cost2(t_next, x, a);
    return row;
}

namespace {

class Bdf2Family final : public detail::ImplicitBanded1DFamily {
public:
    Bdf2Family(const HJBProblem& pb, const SpatialGrid1D& grid, double tau)
        : ImplicitBanded1DFamily(SchemeKind::BDF2, true, &pb, &grid, tau, 2) {}

    StencilRow assemble_row(double t_next, int i, int control,
                            const StepState& state) const override {
        const double a = problem_->controls.scalar(control);
        if (state.n == 0)
            return assemble_bdf2_first_row(*problem_, *grid_, tau_, t_next, i, a, *state.un);
        return assemble_bdf2_row(*problem_, *grid_, tau_, t_next, i, a, *state.un, *state.unm1);
    }

protected:
    int matrix_variant(int n) const override { return n == 0 ? 0 : 1; }

    void fill_rhs(double t_next, const StepState& state) override {
        ensure_running_cost(t_next);
        if (state.n == 0) {
            for (int a = 0; a < pp_.num_controls(); ++a)
                pp_.rhs(a) = *state.un - tau_ * lvec_[a];
        } else {
            require(state.unm1 != nullptr, "BDF2 needs the previous two levels");
            for (int a = 0; a < pp_.num_controls(); ++a)
                pp_.rhs(a) = 2.0 * *state.un - 0.5 * *state.unm1 - tau_ * lvec_[a];
        }
        overwrite_dirichlet_rhs(t_next);
    }
};

class CnFamily final : public detail::ImplicitBanded1DFamily {
public:
    CnFamily(const HJBProblem& pb, const SpatialGrid1D& grid, double tau, bool rannacher)
        : ImplicitBanded1DFamily(rannacher ? SchemeKind::CNRannacher : SchemeKind::CN, false,
                                 &pb, &grid, tau, 2),
          rannacher_(rannacher) {}

    StencilRow assemble_row(double t_next, int i, int control,
                            const StepState& state) const override {
        const double a = problem_->controls.scalar(control);
        if (rannacher_ && state.n < 2)
            return assemble_ie_row(*problem_, *grid_, tau_, t_next, i, a, *state.un);
        return assemble_cn_row(*problem_, *grid_, tau_, t_next, i, a, *state.un);
    }

protected:
    int matrix_variant(int n) const override { return (rannacher_ && n < 2) ? 0 : 1; }

    void fill_rhs(double t_next, const StepState& state) override {
        if (rannacher_ && state.n < 2) {
            ensure_running_cost(t_next);
            for (int a = 0; a < pp_.num_controls(); ++a)
                pp_.rhs(a) = *state.un - tau_ * lvec_[a];
            overwrite_dirichlet_rhs(t_next);
            return;
        }
        ensure_running_cost(t_next - 0.5 * tau_);
        ensure_explicit_operator(t_next - tau_);
        VectorXd lu(state_size_), sup_lu(state_size_);
        for (int a = 0; a < pp_.num_controls(); ++a) {
            detail::banded_apply(explicit_op_[a], 2, *state.un, lu);
            sup_lu = a == 0 ? lu : sup_lu.cwiseMax(lu);
        }
        for (int a = 0; a < pp_.num_controls(); ++a)
            pp_.rhs(a) = *state.un - 0.5 * tau_ * sup_lu - tau_ * lvec_[a];
        overwrite_dirichlet_rhs(t_next);
    }

private:
    // Spatial operator bands at the explicit time level; Dirichlet rows are
    // zero rows by construction.
    void ensure_explicit_operator(double t_n) {
        const bool cached = !explicit_op_.empty() && std::isfinite(explicit_time_);
        if (cached && (!problem_->time_dependent || explicit_time_ == t_n)) return;
        explicit_op_.assign(pp_.num_controls(), MatrixXd::Zero(state_size_, 5));
        for (int a = 0; a < pp_.num_controls(); ++a) {
            const double ca = problem_->controls.scalar(a);
            for (int i = 0; i < state_size_; ++i) {
                const StencilRow op = spatial_operator_row(*problem_, *grid_, t_n, i, ca, detail::DriftScheme::Central2);
                for (int e = 0; e < op.size; ++e)
                    explicit_op_[a](i, op.cols[e] - i + 2) = op.coefs[e];
            }
        }
        explicit_time_ = t_n;
    }

    bool rannacher_;
    std::vector<MatrixXd> explicit_op_;
    double explicit_time_ = std::numeric_limits<double>::quiet_NaN();
};

class Fd2dFamily final : public SchemeFamily {
public:
    Fd2dFamily(const HJBProblem& pb, const PeriodicGrid2D& grid, double tau)
        : SchemeFamily(SchemeKind::FD2D, false, false, grid.num_nodes(), &pb, tau),
          grid_(&grid), pp_(stencil_pattern(grid), pb.controls.size()) {}

    StencilRow assemble_row(double t_next, int i, int control,
                            const StepState& state) const override {
        const int J = grid_->nodes_per_axis();
        return assemble_fd2d_row(*problem_, *grid_, tau_, t_next, i / J, i % J,
                                 problem_->controls.vec2(control), *state.un);
    }

    VectorXd step(const StepState& state, const HowardConfig& cfg, StepStats* stats) override {
        const double t_next = state.t_n + tau_;
        fill(t_next, state);
        const std::vector<int>* warm =
            warm_policy_.size() == static_cast<size_t>(state_size_) ? &warm_policy_ : nullptr;
        PolicyIterationResult res = howard_solve(pp_, *state.un, cfg, warm);
        if (stats) {
            stats->howard_iterations = res.iterations;
            stats->final_residual = res.final_residual;
        }
        if (!res.converged)
            detail::throw_howard_failure("FD2D", res.final_residual, res.iterations);
        warm_policy_ = std::move(res.policy);
        return std::move(res.x);
    }

    void reset() override {
        warm_policy_.clear();
        matrix_ready_ = false;
    }

    const NinePointPolicyProblem& policy_problem() const { return pp_; }

private:
    static Eigen::MatrixXi stencil_pattern(const PeriodicGrid2D& grid) {
        const int J = grid.nodes_per_axis();
        Eigen::MatrixXi cols(grid.num_nodes(), 9);
        for (int i = 0; i < J; ++i)
            for (int j = 0; j < J; ++j) {
                const int r = grid.flat_index(i, j);
                int s = 0;
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj)
                        cols(r, s++) = grid.flat_index(i + di, j + dj);
            }
        return cols;
    }

    void fill(double t_next, const StepState& state) {
        const int J = grid_->nodes_per_axis();
        const bool need_matrix = !matrix_ready_ || problem_->time_dependent;
        for (int a = 0; a < pp_.num_controls(); ++a) {
            const Vector2d ca = problem_->controls.vec2(a);
            MatrixXd& coef = pp_.coefs(a);
            if (need_matrix) coef.setZero();
            for (int i = 0; i < J; ++i)
                for (int j = 0; j < J; ++j) {
                    const int r = grid_->flat_index(i, j);
                    if (need_matrix) {
                        const StencilRow row = assemble_fd2d_row(*problem_, *grid_, tau_, t_next,
                                                                 i, j, ca, *state.un);
                        // Slot layout must match stencil_pattern ordering.
                        int s = 0;
                        for (int di = -1; di <= 1; ++di)
                            for (int dj = -1; dj <= 1; ++dj)
                                coef(r, s++) = row.coef(grid_->flat_index(i + di, j + dj));
                        pp_.rhs(a)[r] = row.rhs;
                    } else {
                        pp_.rhs(a)[r] =
                            (*state.un)[r] -
                            tau_ * problem_->running_cost2(t_next, grid_->node(i, j), ca);
                    }
                }
        }
        matrix_ready_ = true;
    }

    const PeriodicGrid2D* grid_;
    NinePointPolicyProblem pp_;
    std::vector<int> warm_policy_;
    bool matrix_ready_ = false;
};

} // namespace

VectorXd bdf2_first_step(const HJBProblem& pb, const SpatialGrid1D& grid, double tau,
                         const VectorXd& u0, const HowardConfig& cfg) {
    Bdf2Family family(pb, grid, tau);
    StepState state;
    state.un = &u0;
    state.t_n = 0.0;
    state.n = 0;
    return family.step(state, cfg, nullptr);
}

std::unique_ptr<SchemeFamily> make_bdf2_family(const HJBProblem& pb, const SpatialGrid1D& grid,
                                               double tau) {
    return std::make_unique<Bdf2Family>(pb, grid, tau);
}

std::unique_ptr<SchemeFamily> make_cn_family(const HJBProblem& pb, const SpatialGrid1D& grid,
                                             double tau, bool rannacher) {
    return std::make_unique<CnFamily>(pb, grid, tau, rannacher);
}

std::unique_ptr<SchemeFamily> make_fd2d_family(const HJBProblem& pb, const PeriodicGrid2D& grid,
                                               double tau) {
    return std::make_unique<Fd2dFamily>(pb, grid, tau);
}

} // namespace hjb
