#include "hjb/harness.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace hjb {

namespace fs = std::filesystem;

ErrorTriple error_norms(const VectorXd& u, const VectorXd& ref, const SpatialGrid1D& grid,
                        std::optional<std::pair<double, double>> exclude) {
    require(u.size() == ref.size(), "error_norms: length mismatch");
    require(u.size() == grid.num_nodes(), "error_norms: grid mismatch");
    const int n = grid.num_nodes();
    ErrorTriple out;
    double l2sq = 0.0;
    int kept = 0;
    for (int i = 0; i < n; ++i) {
        const double x = grid.node(i);
        if (exclude && x >= exclude->first && x <= exclude->second) continue;
        ++kept;
        const double w = 0.5 * ((i > 0 ? grid.spacing(i - 1) : 0.0) +
                                (i + 1 < n ? grid.spacing(i) : 0.0));
        const double e = std::abs(u[i] - ref[i]);
        out.l1 += w * e;
        l2sq += w * e * e;
        out.linf = std::max(out.linf, e);
    }
    require(kept > 0, "error_norms: all nodes excluded");
    out.l2 = std::sqrt(l2sq);
    return out;
}

ErrorTriple error_norms(const VectorXd& u, const VectorXd& ref, const PeriodicGrid2D& grid) {
    require(u.size() == ref.size(), "error_norms: length mismatch");
    require(u.size() == grid.num_nodes(), "error_norms: grid mismatch");
    const double w = grid.spacing() * grid.spacing();
    ErrorTriple out;
    double l2sq = 0.0;
    for (int i = 0; i < u.size(); ++i) {
        const double e = std::abs(u[i] - ref[i]);
        out.l1 += w * e;
        l2sq += w * e * e;
        out.linf = std::max(out.linf, e);
    }
    out.l2 = std::sqrt(l2sq);
    return out;
}

double observed_order(double e_coarse, double e_fine, double ratio) {
    if (!(e_coarse > 0.0) || !(e_fine > 0.0) || !(ratio > 0.0) || ratio == 1.0)
        return std::numeric_limits<double>::quiet_NaN();
    return std::log(e_coarse / e_fine) / std::log(ratio);
}

// ---------------------------------------------------------------------------

std::vector<double> ConvergenceTable::errors(int which, bool local) const {
    std::vector<double> out;
    for (const LevelResult& r : rows) {
        const ErrorTriple* e = local ? (r.local ? &*r.local : nullptr) : &r.err;
        double v = std::numeric_limits<double>::quiet_NaN();
        if (r.ok && e) v = which == 0 ? e->l1 : which == 1 ? e->l2 : e->linf;
        out.push_back(v);
    }
    return out;
}

std::vector<double> ConvergenceTable::probe_values() const {
    std::vector<double> out;
    for (const LevelResult& r : rows)
        out.push_back(r.probe_value ? *r.probe_value : std::numeric_limits<double>::quiet_NaN());
    return out;
}

std::vector<double> ConvergenceTable::orders_from(const std::vector<double>& errs) {
    std::vector<double> out(errs.size(), std::numeric_limits<double>::quiet_NaN());
    for (size_t k = 1; k < errs.size(); ++k) out[k] = observed_order(errs[k - 1], errs[k]);
    return out;
}

std::vector<double> ConvergenceTable::probe_diff_orders(const std::vector<double>& values) {
    std::vector<double> out(values.size(), std::numeric_limits<double>::quiet_NaN());
    for (size_t k = 2; k < values.size(); ++k) {
        const double d_prev = std::abs(values[k - 1] - values[k - 2]);
        const double d_cur = std::abs(values[k] - values[k - 1]);
        out[k] = observed_order(d_prev, d_cur);
    }
    return out;
}

// ---------------------------------------------------------------------------

LevelSetup make_level_setup(const std::string& problem_name,
                            const std::map<std::string, double>& overrides, int level) {
    require(level >= 0, "level must be nonnegative");
    LevelSetup setup;
    const int scale = 1 << level;
    if (problem_name == "mean-variance") {
        auto ov = overrides;
        if (ov.count("control_doubling") && ov.at("control_doubling") != 0.0) {
            const double base = ov.count("control_points") ? ov.at("control_points") : 61.0;
            ov["control_points"] = (base - 1.0) * scale + 1.0;
        }
        ov.erase("control_doubling");
        setup.problem = make_problem_by_name(problem_name, ov);
        setup.N = 40 * scale;
        setup.J = 40 * scale;
        setup.grid1d = build_uniform_grid(setup.problem.xmin, setup.problem.xmax, setup.J);
    } else if (problem_name == "uncertain-vol") {
        setup.problem = make_problem_by_name(problem_name, overrides);
        setup.N = 25 * scale;
        setup.J = 60 * scale;
        setup.grid1d = build_butterfly_grid(level);
    } else if (problem_name == "diffusion-2d") {
        setup.N = 4 * scale;
        setup.J = 4 * scale;
        auto ov = overrides;
        if (!ov.count("control_points")) ov["control_points"] = setup.J;
        setup.problem = make_problem_by_name(problem_name, ov);
        setup.grid2d = PeriodicGrid2D(setup.J);
    } else {
        throw InvalidArgument("no refinement ladder for problem: " + problem_name);
    }
    setup.P = setup.problem.controls.size();
    setup.time = TimeGrid(setup.problem.horizon, setup.N);
    return setup;
}

SolveOutput solve_level(const LevelSetup& setup, SchemeKind monotone,
                        std::optional<SchemeKind> high, const FilterConfig& filter,
                        const HowardConfig& howard, const RunOptions& options) {
    const double tau = setup.time.dt();
    if (setup.grid1d) {
        auto mono = make_family(monotone, setup.problem, *setup.grid1d, tau);
        const VectorXd u0 = sample_initial(setup.problem, *setup.grid1d);
        if (!high) return run_monotone(*mono, setup.time, u0, howard, options);
        auto hi = make_family(*high, setup.problem, *setup.grid1d, tau);
        const double eps = epsilon_for_grid(filter, tau, *setup.grid1d);
        return run_filtered(*mono, *hi, setup.time, u0, eps, howard, options);
    }
    auto mono = make_family(monotone, setup.problem, *setup.grid2d, tau);
    const VectorXd u0 = sample_initial(setup.problem, *setup.grid2d);
    if (!high) return run_monotone(*mono, setup.time, u0, howard, options);
    auto hi = make_family(*high, setup.problem, *setup.grid2d, tau);
    const double eps = epsilon_for_grid(filter, tau, *setup.grid2d);
    return run_filtered(*mono, *hi, setup.time, u0, eps, howard, options);
}

// ---------------------------------------------------------------------------
// Reference solutions

VectorXd ReferenceSolution::restrict_to(const SpatialGrid1D& coarse) const {
    VectorXd out(coarse.num_nodes());
    if (from_exact) {
        for (int i = 0; i < coarse.num_nodes(); ++i) out[i] = exact1d(coarse.node(i));
        return out;
    }
    require(grid1d.has_value(), "reference has no 1D grid");
    const double tol = 1e-9 * grid1d->min_spacing();
    for (int i = 0; i < coarse.num_nodes(); ++i) {
        const double x = coarse.node(i);
        const int c = grid1d->cell_containing(x);
        int nearest = std::abs(grid1d->node(c) - x) <= std::abs(grid1d->node(c + 1) - x) ? c
                                                                                        : c + 1;
        if (std::abs(grid1d->node(nearest) - x) <= tol)
            out[i] = values[nearest];
        else
            out[i] = interp_linear(*grid1d, values, x);
    }
    return out;
}

VectorXd ReferenceSolution::restrict_to(const PeriodicGrid2D& coarse) const {
    VectorXd out(coarse.num_nodes());
    if (from_exact) {
        const int Jc = coarse.nodes_per_axis();
        for (int i = 0; i < Jc; ++i)
            for (int j = 0; j < Jc; ++j) out[coarse.flat_index(i, j)] = exact2d(coarse.node(i, j));
        return out;
    }
    require(grid2d.has_value(), "reference has no 2D grid");
    const int Jf = grid2d->nodes_per_axis();
    const int Jc = coarse.nodes_per_axis();
    if (Jf % Jc == 0) {
        const int stride = Jf / Jc;
        for (int i = 0; i < Jc; ++i)
            for (int j = 0; j < Jc; ++j)
                out[coarse.flat_index(i, j)] = values[grid2d->flat_index(i * stride, j * stride)];
    } else {
        for (int i = 0; i < Jc; ++i)
            for (int j = 0; j < Jc; ++j)
                out[coarse.flat_index(i, j)] =
                    interp_bilinear_periodic(*grid2d, values, coarse.node(i, j));
    }
    return out;
}

namespace {

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

std::string scheme_slug(const StudyConfig& cfg) {
    std::ostringstream oss;
    oss << scheme_name(cfg.monotone);
    if (cfg.high) {
        oss << "_" << scheme_name(*cfg.high) << "_c0-" << sanitize(std::to_string(cfg.filter.c0));
        oss << (cfg.filter.rule == FilterConfig::EpsRule::DxMin ? "_dxmin" : "_maxtaudx");
    } else {
        oss << "_none";
    }
    return oss.str();
}

std::string reference_cache_path(const StudyConfig& cfg) {
    std::ostringstream oss;
    oss << cfg.out_dir << "/ref_" << cfg.problem << "_" << scheme_slug(cfg) << "_L"
        << cfg.ref_level << ".csv";
    return oss.str();
}

bool load_reference_csv(const std::string& path, int expected, VectorXd& values) {
    std::ifstream in(path);
    if (!in) return false;
    std::string line;
    std::getline(in, line); // header
    values.resize(expected);
    int count = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto pos = line.find_last_of(',');
        if (pos == std::string::npos) return false;
        if (count >= expected) return false;
        values[count++] = std::strtod(line.c_str() + pos + 1, nullptr);
    }
    return count == expected;
}

void store_reference_csv(const std::string& path, const LevelSetup& setup,
                         const VectorXd& values) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path);
    char buf[64];
    if (setup.grid1d) {
        out << "x,value\n";
        for (int i = 0; i < values.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g", setup.grid1d->node(i), values[i]);
            out << buf << "\n";
        }
    } else {
        out << "i,j,value\n";
        const int J = setup.grid2d->nodes_per_axis();
        for (int i = 0; i < J; ++i)
            for (int j = 0; j < J; ++j) {
                std::snprintf(buf, sizeof buf, "%d,%d,%.17g", i, j,
                              values[setup.grid2d->flat_index(i, j)]);
                out << buf << "\n";
            }
    }
}

} // namespace

ReferenceSolution compute_reference(const StudyConfig& cfg) {
    ReferenceSolution ref;
    if (cfg.ref_mode == ReferenceMode::Exact) {
        LevelSetup setup = make_level_setup(cfg.problem, cfg.problem_overrides, cfg.level_lo);
        require(setup.problem.has_exact(), "problem has no exact solution");
        ref.from_exact = true;
        const double T = setup.problem.horizon;
        if (setup.problem.dimension == 1) {
            auto exact = setup.problem.exact;
            ref.exact1d = [exact, T](double x) { return exact(T, x); };
        } else {
            auto exact = setup.problem.exact2;
            ref.exact2d = [exact, T](const Vector2d& x) { return exact(T, x); };
        }
        return ref;
    }

    LevelSetup setup = make_level_setup(cfg.problem, cfg.problem_overrides, cfg.ref_level);
    ref.grid1d = setup.grid1d;
    ref.grid2d = setup.grid2d;
    const int n = setup.grid1d ? setup.grid1d->num_nodes() : setup.grid2d->num_nodes();

    const std::string path = reference_cache_path(cfg);
    if (load_reference_csv(path, n, ref.values)) return ref;

    RunOptions options;
    options.parallel_solves = cfg.parallel_solves;
    SolveOutput out =
        solve_level(setup, cfg.monotone, cfg.high, cfg.filter, cfg.howard, options);
    ref.values = std::move(out.final_state);
    store_reference_csv(path, setup, ref.values);
    return ref;
}

// ---------------------------------------------------------------------------
// Study driver

std::string format_sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.5E", v);
    return buf;
}

std::string csv_field(std::optional<double> v) {
    if (!v || !std::isfinite(*v)) return "";
    return format_sci(*v);
}

namespace {

std::string study_label(const StudyConfig& cfg) {
    if (!cfg.label.empty()) return cfg.label;
    return cfg.problem + "_" + scheme_slug(cfg);
}

void write_activity_csv(const std::string& path, const SolveOutput& out) {
    std::ofstream file(path);
    file << "step,node,active\n";
    for (size_t n = 0; n < out.activity.size(); ++n) {
        const FilterActivity& a = out.activity[n];
        for (size_t i = 0; i < a.mask.size(); ++i)
            if (a.mask[i]) file << n + 1 << "," << i << ",1\n";
    }
}

} // namespace

StudyResult run_convergence_study(const StudyConfig& cfg,
                                  const ReferenceSolution* external_ref) {
    require(cfg.level_lo >= 0 && cfg.level_hi >= cfg.level_lo, "bad level range");
    StudyResult result;
    const std::string label = study_label(cfg);
    fs::create_directories(cfg.out_dir);

    ReferenceSolution ref = external_ref ? *external_ref : compute_reference(cfg);
    std::optional<double> probe_ref;
    if (cfg.probe) {
        if (ref.from_exact)
            probe_ref = ref.exact1d(*cfg.probe);
        else if (ref.grid1d)
            probe_ref = interp_linear(*ref.grid1d, ref.values, *cfg.probe);
    }

    for (int level = cfg.level_lo; level <= cfg.level_hi; ++level) {
        LevelResult row;
        row.level = level;
        LevelSetup setup = make_level_setup(cfg.problem, cfg.problem_overrides, level);
        row.N = setup.N;
        row.J = setup.J;
        row.P = setup.P;
        try {
            RunOptions options;
            options.parallel_solves = cfg.parallel_solves;
            SolveOutput out =
                solve_level(setup, cfg.monotone, cfg.high, cfg.filter, cfg.howard, options);
            row.cpu_seconds = out.solve_seconds;
            row.filter_active_nodes = out.max_active_nodes();
            row.filter_active_fraction =
                out.final_state.size() > 0
                    ? static_cast<double>(row.filter_active_nodes) / out.final_state.size()
                    : 0.0;

            VectorXd refvals = setup.grid1d ? ref.restrict_to(*setup.grid1d)
                                            : ref.restrict_to(*setup.grid2d);
            if (setup.grid1d) {
                row.err = error_norms(out.final_state, refvals, *setup.grid1d);
                if (cfg.exclude)
                    row.local = error_norms(out.final_state, refvals, *setup.grid1d, cfg.exclude);
                if (cfg.probe) {
                    row.probe_value = interp_linear(*setup.grid1d, out.final_state, *cfg.probe);
                    if (probe_ref) row.probe_error = std::abs(*row.probe_value - *probe_ref);
                }
            } else {
                row.err = error_norms(out.final_state, refvals, *setup.grid2d);
            }
            if (cfg.write_activity_csv && cfg.high) {
                std::string path =
                    cfg.out_dir + "/" + label + "_activity_L" + std::to_string(level) + ".csv";
                write_activity_csv(path, out);
                result.activity_csv_paths.push_back(path);
            }
        } catch (const std::exception& err) {
            row.ok = false;
            row.message = err.what();
            std::cerr << "level " << level << " failed: " << err.what() << "\n";
        }
        result.table.rows.push_back(std::move(row));
    }

    if (cfg.write_csv) {
        const std::string path = cfg.out_dir + "/" + label + ".csv";
        std::ofstream file(path);
        file << "N,J,P,errL1,ordL1,errL2,ordL2,errLinf,ordLinf,filter_active_nodes,cpu_s";
        if (cfg.probe) file << ",probe_value,probe_error,probe_order";
        if (cfg.exclude)
            file << ",loc_errL1,loc_ordL1,loc_errL2,loc_ordL2,loc_errLinf,loc_ordLinf";
        file << "\n";

        const ConvergenceTable& tab = result.table;
        const auto ordL1 = ConvergenceTable::orders_from(tab.errors(0));
        const auto ordL2 = ConvergenceTable::orders_from(tab.errors(1));
        const auto ordLi = ConvergenceTable::orders_from(tab.errors(2));
        const auto probe_ord = ConvergenceTable::probe_diff_orders(tab.probe_values());
        const auto locL1 = ConvergenceTable::orders_from(tab.errors(0, true));
        const auto locL2 = ConvergenceTable::orders_from(tab.errors(1, true));
        const auto locLi = ConvergenceTable::orders_from(tab.errors(2, true));

        for (size_t k = 0; k < tab.rows.size(); ++k) {
            const LevelResult& r = tab.rows[k];
            file << r.N << "," << r.J << "," << r.P << ",";
            if (r.ok) {
                file << format_sci(r.err.l1) << "," << csv_field(ordL1[k]) << ","
                     << format_sci(r.err.l2) << "," << csv_field(ordL2[k]) << ","
                     << format_sci(r.err.linf) << "," << csv_field(ordLi[k]);
            } else {
                file << ",,,,,";
            }
            file << "," << r.filter_active_nodes << "," << format_sci(r.cpu_seconds);
            if (cfg.probe)
                file << "," << csv_field(r.probe_value) << "," << csv_field(r.probe_error) << ","
                     << csv_field(probe_ord[k]);
            if (cfg.exclude) {
                if (r.ok && r.local) {
                    file << "," << format_sci(r.local->l1) << "," << csv_field(locL1[k]) << ","
                         << format_sci(r.local->l2) << "," << csv_field(locL2[k]) << ","
                         << format_sci(r.local->linf) << "," << csv_field(locLi[k]);
                } else {
                    file << ",,,,,,";
                }
            }
            file << "\n";
        }
        result.csv_path = path;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Consistency-constant estimates

CvmEstimate estimate_cvm_from_trajectory(const SpatialGrid1D& grid, const TimeGrid& time,
                                         const std::vector<VectorXd>& trajectory,
                                         const std::function<double(double)>& drift_weight) {
    require(trajectory.size() >= 3, "need at least three time levels");
    const double tau = time.dt();
    double vtt = 0.0;
    double wvxx = 0.0;
    for (size_t n = 0; n + 2 < trajectory.size(); ++n) {
        const VectorXd& um = trajectory[n];
        const VectorXd& u0 = trajectory[n + 1];
        const VectorXd& up = trajectory[n + 2];
        vtt = std::max(vtt, (up - 2.0 * u0 + um).cwiseAbs().maxCoeff() / (tau * tau));
    }
    for (const VectorXd& u : trajectory)
        for (int i = 1; i + 1 < grid.num_nodes(); ++i)
            wvxx = std::max(wvxx,
                            std::abs(drift_weight(grid.node(i)) * d2_nonuniform(u, grid, i)));
    return {0.5 * vtt + 0.5 * wvxx, true};
}

double estimate_cvm_sl2d(double vtt_norm, double d2_norm, double d4_norm, double dx_over_tau) {
    return 0.5 * vtt_norm + (2.0 / 3.0) * d4_norm +
           0.125 * dx_over_tau * dx_over_tau * d2_norm;
}

CvmEstimate estimate_cvm(const std::string& problem_name, int level, const HowardConfig& howard) {
    if (problem_name == "diffusion-2d") {
        // Exact solution: v_tt = 0 and all second/fourth derivatives bounded
        // by 2; the refinement ladder couples dx = 4 pi tau.
        return {estimate_cvm_sl2d(0.0, 2.0, 2.0, 4.0 * M_PI), false};
    }
    if (problem_name == "mean-variance") {
        LevelSetup setup = make_level_setup(problem_name, {}, level);
        RunOptions options;
        options.store_trajectory = true;
        FilterConfig filter{5.0, FilterConfig::EpsRule::MaxTauDx};
        SolveOutput out = solve_level(setup, SchemeKind::IE, SchemeKind::BDF2, filter, howard,
                                      options);
        MeanVarianceParams p;
        auto weight = [p](double x) {
            return p.c + x * (p.r + p.a_max * p.sigma * p.xi);
        };
        return estimate_cvm_from_trajectory(*setup.grid1d, setup.time, out.trajectory, weight);
    }
    throw InvalidArgument("no consistency-constant estimate for problem: " + problem_name);
}

// ---------------------------------------------------------------------------
// Truncation audits

namespace {

double residual_from_rows(const SchemeFamily& family, const StepState& state, double t_next,
                          const VectorXd& v_next, int i_lo, int i_hi) {
    const int P = family.controls().size();
    double worst = 0.0;
    for (int i = i_lo; i <= i_hi; ++i) {
        double rowmax = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < P; ++a) {
            const StencilRow row = family.assemble_row(t_next, i, a, state);
            rowmax = std::max(rowmax, row.apply(v_next) - row.rhs);
        }
        worst = std::max(worst, std::abs(rowmax) / family.dt());
    }
    return worst;
}

} // namespace

double truncation_residual(SchemeKind kind, const HJBProblem& problem, int cells, double tau,
                           double t_eval) {
    require(problem.dimension == 1 && bool(problem.exact),
            "1D truncation audit needs an exact solution");
    const SpatialGrid1D grid = build_uniform_grid(problem.xmin, problem.xmax, cells);
    auto family = make_family(kind, problem, grid, tau);

    auto sample = [&](double t) {
        VectorXd v(grid.num_nodes());
        for (int i = 0; i < grid.num_nodes(); ++i) v[i] = problem.exact(t, grid.node(i));
        return v;
    };
    const VectorXd vm1 = sample(t_eval - tau);
    const VectorXd v0 = sample(t_eval);
    const VectorXd v1 = sample(t_eval + tau);

    StepState state;
    state.un = &v0;
    state.unm1 = &vm1;
    state.t_n = t_eval;
    state.n = family->is_two_step() ? 1 : (kind == SchemeKind::CNRannacher ? 2 : 0);
    // Measure on a fixed interior window: the near-boundary fallback rows
    // are first order by design, and semi-Lagrangian feet leave the domain
    // within a sqrt(tau) distance of the boundary.
    const double margin = 0.15 * (problem.xmax - problem.xmin);
    int i_lo = 2, i_hi = grid.num_nodes() - 3;
    while (i_lo < i_hi && grid.node(i_lo) < problem.xmin + margin) ++i_lo;
    while (i_hi > i_lo && grid.node(i_hi) > problem.xmax - margin) --i_hi;
    return residual_from_rows(*family, state, t_eval + tau, v1, i_lo, i_hi);
}

double truncation_residual_2d(SchemeKind kind, const HJBProblem& problem, int nodes_per_axis,
                              double tau, double t_eval) {
    require(problem.dimension == 2 && bool(problem.exact2),
            "2D truncation audit needs an exact solution");
    const PeriodicGrid2D grid(nodes_per_axis);
    auto family = make_family(kind, problem, grid, tau);

    auto sample = [&](double t) {
        VectorXd v(grid.num_nodes());
        for (int i = 0; i < nodes_per_axis; ++i)
            for (int j = 0; j < nodes_per_axis; ++j)
                v[grid.flat_index(i, j)] = problem.exact2(t, grid.node(i, j));
        return v;
    };
    const VectorXd vm1 = sample(t_eval - tau);
    const VectorXd v0 = sample(t_eval);
    const VectorXd v1 = sample(t_eval + tau);

    StepState state;
    state.un = &v0;
    state.unm1 = &vm1;
    state.t_n = t_eval;
    state.n = family->is_two_step() ? 1 : 0;
    return residual_from_rows(*family, state, t_eval + tau, v1, 0, grid.num_nodes() - 1);
}

TruncationAudit truncation_ratio_audit(SchemeKind kind, const HJBProblem& problem,
                                       int base_cells, double base_tau, int levels,
                                       double t_eval) {
    TruncationAudit audit;
    for (int k = 0; k < levels; ++k)
        audit.residuals.push_back(
            truncation_residual(kind, problem, base_cells << k, base_tau / (1 << k), t_eval));
    for (int k = 0; k + 1 < levels; ++k)
        audit.ratios.push_back(audit.residuals[k] / audit.residuals[k + 1]);
    return audit;
}

} // namespace hjb
