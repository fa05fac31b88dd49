#include "hjb/monotone.hpp"

#include "family_support.hpp"

#include <random>

namespace hjb {

using detail::spatial_operator_row;

StencilRow assemble_ie_row(const HJBProblem& pb, const SpatialGrid1D& grid, double tau,
                           double t_next, int i, double a, const VectorXd& un) {
    require(pb.dimension == 1, "IE rows are one-dimensional");
    const int n = grid.num_nodes();
    StencilRow row;
    row.row = i;
    if (detail::is_dirichlet_row(pb, i, n)) {
        row.add(i, 1.0);
        row.rhs = detail::dirichlet_value(pb, i, n, t_next);
        return row;
    }
    row.add(i, 1.0);
    StencilRow op = spatial_operator_row(pb, grid, t_next, i, a, detail::DriftScheme::Upwind1);
    for (int s = 0; s < op.size; ++s) row.add(op.cols[s], tau * op.coefs[s]);
    row.rhs = un[i] - tau * pb.running_cost(t_next, grid.node(i), a);
    return row;
}

namespace {

double sl_bracket(const HJBProblem& pb, const SpatialGrid1D& grid, double tau, double t_n,
                  const VectorXd& un, int i, double a) {
    const double x = grid.node(i);
    const double foot = x - tau * pb.drift(t_n, x, a);
    const double shift = std::sqrt(tau) * pb.sigma(t_n, x, a);
    const double avg =
        0.5 * (interp_linear(grid, un, foot + shift) + interp_linear(grid, un, foot - shift));
    return avg - tau * pb.discount(t_n, x, a) * un[i] - tau * pb.running_cost(t_n, x, a);
}

double sl_bracket_2d(const HJBProblem& pb, const PeriodicGrid2D& grid, double tau, double t_n,
                     const VectorXd& un, int i, int j, const Vector2d& a) {
    const Vector2d x = grid.node(i, j);
    const Vector2d shift = std::sqrt(tau) * pb.sigma2(t_n, x, a);
    const double avg = 0.5 * (interp_bilinear_periodic(grid, un, x + shift) +
                              interp_bilinear_periodic(grid, un, x - shift));
    return avg - tau * pb.running_cost2(t_n, x, a);
}

} // namespace

VectorXd sl_step(const HJBProblem& pb, const SpatialGrid1D& grid, double tau, double t_n,
                 const VectorXd& un) {
    require(pb.dimension == 1, "sl_step expects a 1D problem");
    require(un.size() == grid.num_nodes(), "state size mismatch");
    const int n = grid.num_nodes();
    const int P = pb.controls.size();
    VectorXd out(n);
    for (int i = 0; i < n; ++i) {
        double best = sl_bracket(pb, grid, tau, t_n, un, i, pb.controls.scalar(0));
        for (int k = 1; k < P; ++k)
            best = std::min(best, sl_bracket(pb, grid, tau, t_n, un, i, pb.controls.scalar(k)));
        out[i] = best;
    }
    return out;
}

VectorXd sl_step_2d(const HJBProblem& pb, const PeriodicGrid2D& grid, double tau, double t_n,
                    const VectorXd& un) {
    require(pb.dimension == 2, "sl_step_2d expects a 2D problem");
    require(un.size() == grid.num_nodes(), "state size mismatch");
    const int J = grid.nodes_per_axis();
    const int P = pb.controls.size();
    VectorXd out(grid.num_nodes());
    for (int i = 0; i < J; ++i) {
        for (int j = 0; j < J; ++j) {
            double best = sl_bracket_2d(pb, grid, tau, t_n, un, i, j, pb.controls.vec2(0));
            for (int k = 1; k < P; ++k)
                best = std::min(best,
                                sl_bracket_2d(pb, grid, tau, t_n, un, i, j, pb.controls.vec2(k)));
            out[grid.flat_index(i, j)] = best;
        }
    }
    return out;
}

namespace {

class IeFamily final : public detail::ImplicitBanded1DFamily {
public:
    IeFamily(const HJBProblem& pb, const SpatialGrid1D& grid, double tau)
        : ImplicitBanded1DFamily(SchemeKind::IE, false, &pb, &grid, tau, 1) {}

    StencilRow assemble_row(double t_next, int i, int control,
                            const StepState& state) const override {
        return assemble_ie_row(*problem_, *grid_, tau_, t_next, i,
                               problem_->controls.scalar(control), *state.un);
    }

protected:
    void fill_rhs(double t_next, const StepState& state) override {
        ensure_running_cost(t_next);
        for (int a = 0; a < pp_.num_controls(); ++a)
            pp_.rhs(a) = *state.un - tau_ * lvec_[a];
        overwrite_dirichlet_rhs(t_next);
    }
};

class SlFamily final : public SchemeFamily {
public:
    SlFamily(const HJBProblem& pb, const SpatialGrid1D& grid, double tau)
        : SchemeFamily(SchemeKind::SL, true, false, grid.num_nodes(), &pb, tau), grid_(&grid) {}

    StencilRow assemble_row(double t_next, int i, int control,
                            const StepState& state) const override {
        StencilRow row;
        row.row = i;
        row.add(i, 1.0);
        if (detail::is_dirichlet_row(*problem_, i, state_size_)) {
            row.rhs = detail::dirichlet_value(*problem_, i, state_size_, t_next);
        } else {
            row.rhs = sl_bracket(*problem_, *grid_, tau_, state.t_n, *state.un, i,
                                 problem_->controls.scalar(control));
        }
        return row;
    }

    VectorXd step(const StepState& state, const HowardConfig&, StepStats* stats) override {
        VectorXd out = sl_step(*problem_, *grid_, tau_, state.t_n, *state.un);
        const double t_next = state.t_n + tau_;
        const int n = state_size_;
        if (detail::is_dirichlet_row(*problem_, 0, n)) out[0] = problem_->left.value(t_next);
        if (detail::is_dirichlet_row(*problem_, n - 1, n))
            out[n - 1] = problem_->right.value(t_next);
        if (stats) *stats = {};
        return out;
    }

private:
    const SpatialGrid1D* grid_;
};

class Sl2dFamily final : public SchemeFamily {
public:
    Sl2dFamily(const HJBProblem& pb, const PeriodicGrid2D& grid, double tau)
        : SchemeFamily(SchemeKind::SL, true, false, grid.num_nodes(), &pb, tau), grid_(&grid) {}

    StencilRow assemble_row(double, int i, int control, const StepState& state) const override {
        StencilRow row;
        row.row = i;
        row.add(i, 1.0);
        const int J = grid_->nodes_per_axis();
        row.rhs = sl_bracket_2d(*problem_, *grid_, tau_, state.t_n, *state.un, i / J, i % J,
                                problem_->controls.vec2(control));
        return row;
    }

    VectorXd step(const StepState& state, const HowardConfig&, StepStats* stats) override {
        if (stats) *stats = {};
        return sl_step_2d(*problem_, *grid_, tau_, state.t_n, *state.un);
    }

private:
    const PeriodicGrid2D* grid_;
};

} // namespace

std::unique_ptr<SchemeFamily> make_ie_family(const HJBProblem& pb, const SpatialGrid1D& grid,
                                             double tau) {
    return std::make_unique<IeFamily>(pb, grid, tau);
}

std::unique_ptr<SchemeFamily> make_sl_family(const HJBProblem& pb, const SpatialGrid1D& grid,
                                             double tau) {
    return std::make_unique<SlFamily>(pb, grid, tau);
}

std::unique_ptr<SchemeFamily> make_sl2d_family(const HJBProblem& pb, const PeriodicGrid2D& grid,
                                               double tau) {
    return std::make_unique<Sl2dFamily>(pb, grid, tau);
}

VectorXd monotone_step(SchemeFamily& family, const StepState& state, const HowardConfig& cfg,
                       StepStats* stats) {
    require(family.kind() == SchemeKind::IE || family.kind() == SchemeKind::SL,
            "monotone_step expects the IE or SL family");
    return family.step(state, cfg, stats);
}

A1Report validate_a1(const SchemeFamily& family, int sample_count, unsigned seed) {
    A1Report report;
    report.min_diag_margin = std::numeric_limits<double>::infinity();
    const int n = family.state_size();
    const int P = family.controls().size();
    const double tau = family.dt();

    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> ui(0, n - 1);
    std::uniform_int_distribution<int> ua(0, P - 1);
    std::uniform_real_distribution<double> ur(-1.0, 1.0);
    std::uniform_real_distribution<double> upos(0.0, 1.0);

    auto random_vec = [&] {
        VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = ur(rng);
        return v;
    };

    const VectorXd base = random_vec();
    const VectorXd base_prev = random_vec();
    StepState state;
    state.un = &base;
    state.unm1 = &base_prev;
    state.t_n = 0.0;
    state.n = family.is_two_step() ? 1 : (family.kind() == SchemeKind::CNRannacher ? 2 : 0);
    const double t_next = state.t_n + tau;

    // Sign pattern and diagonal dominance of sampled rows.
    for (int s = 0; s < sample_count; ++s) {
        const int i = ui(rng);
        const int a = ua(rng);
        const StencilRow row = family.assemble_row(t_next, i, a, state);
        ++report.rows_checked;
        const double diag = row.diag();
        const double scale = std::max(1.0, std::abs(diag));
        if (diag <= 0.0)
            report.violations.push_back({i, a, "nonpositive diagonal", diag});
        for (int e = 0; e < row.size; ++e) {
            if (row.cols[e] != i && row.coefs[e] > 1e-12 * scale)
                report.violations.push_back({i, a, "positive off-diagonal", row.coefs[e]});
        }
        report.min_diag_margin =
            std::min(report.min_diag_margin, std::abs(diag) - row.offdiag_abs_sum());
    }

    // Monotonicity and Lipschitz bound of G under comparable state pairs.
    const int pair_count = std::max(1, sample_count / 10);
    for (int p = 0; p < pair_count; ++p) {
        VectorXd phi = random_vec(), phi_prev = random_vec();
        VectorXd bump(n), bump_prev(n);
        for (int i = 0; i < n; ++i) bump[i] = upos(rng);
        for (int i = 0; i < n; ++i) bump_prev[i] = upos(rng);
        VectorXd psi = phi + bump, psi_prev = phi_prev + bump_prev;

        StepState sphi = state, spsi = state;
        sphi.un = &phi;
        sphi.unm1 = &phi_prev;
        spsi.un = &psi;
        spsi.unm1 = &psi_prev;

        const double dist = std::max(bump.maxCoeff(), family.is_two_step() ? bump_prev.maxCoeff() : 0.0);
        double gdiff_max = 0.0;
        for (int s = 0; s < 8; ++s) {
            const int i = ui(rng);
            const int a = ua(rng);
            const double g_phi = family.assemble_row(t_next, i, a, sphi).rhs;
            const double g_psi = family.assemble_row(t_next, i, a, spsi).rhs;
            if (g_phi > g_psi + 1e-12 * std::max(1.0, std::abs(g_phi)))
                report.violations.push_back({i, a, "G not monotone", g_phi - g_psi});
            gdiff_max = std::max(gdiff_max, std::abs(g_phi - g_psi));
        }
        ++report.pairs_checked;
        report.g_lipschitz_factor = std::max(report.g_lipschitz_factor, gdiff_max / dist);
    }
    report.g_lipschitz_C = std::max(0.0, (report.g_lipschitz_factor - 1.0) / tau);
    if (!std::isfinite(report.min_diag_margin)) report.min_diag_margin = 0.0;
    return report;
}

} // namespace hjb
