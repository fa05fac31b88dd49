// Command-line front end: single solves, convergence studies, structural
// audits and consistency-constant estimates for the HJB filtered-scheme
// library.

#include "hjb/harness.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace hjb;

struct CommonArgs {
    std::string problem = "mean-variance";
    std::string monotone = "ie";
    std::string high = "none";
    double c0 = 5.0;
    std::string eps_rule = "max-tau-dx";
    std::string out_dir = "out";
    int threads = 1;
    unsigned seed = 1234;
    std::vector<std::string> overrides; // key=value problem parameters
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--problem", args.problem,
                    "mean-variance | uncertain-vol | diffusion-2d");
    cmd->add_option("--monotone", args.monotone, "ie | sl");
    cmd->add_option("--high", args.high, "bdf2 | cn | cn-rannacher | fd2d | none");
    cmd->add_option("--c0", args.c0, "filter coefficient");
    cmd->add_option("--eps-rule", args.eps_rule, "max-tau-dx | dx-min");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--threads", args.threads, "worker threads (2 runs the two solves of a filtered step concurrently)");
    cmd->add_option("--seed", args.seed, "seed for randomized audits");
    cmd->add_option("--param", args.overrides, "problem parameter override key=value");
}

std::map<std::string, double> parse_overrides(const std::vector<std::string>& raw) {
    std::map<std::string, double> out;
    for (const std::string& kv : raw) {
        const auto pos = kv.find('=');
        if (pos == std::string::npos)
            throw CLI::ValidationError("--param expects key=value, got: " + kv);
        out[kv.substr(0, pos)] = std::stod(kv.substr(pos + 1));
    }
    return out;
}

FilterConfig make_filter(const CommonArgs& args) {
    FilterConfig f;
    f.c0 = args.c0;
    if (args.eps_rule == "max-tau-dx")
        f.rule = FilterConfig::EpsRule::MaxTauDx;
    else if (args.eps_rule == "dx-min")
        f.rule = FilterConfig::EpsRule::DxMin;
    else
        throw CLI::ValidationError("unknown --eps-rule: " + args.eps_rule);
    return f;
}

StudyConfig make_study_config(const CommonArgs& args) {
    StudyConfig cfg;
    cfg.problem = args.problem;
    cfg.problem_overrides = parse_overrides(args.overrides);
    cfg.monotone = scheme_from_name(args.monotone);
    if (args.high != "none") cfg.high = scheme_from_name(args.high);
    cfg.filter = make_filter(args);
    cfg.out_dir = args.out_dir;
    cfg.parallel_solves = args.threads > 1;
    return cfg;
}

std::pair<int, int> parse_levels(const std::string& spec) {
    const auto pos = spec.find("..");
    if (pos == std::string::npos) {
        const int k = std::stoi(spec);
        return {k, k};
    }
    return {std::stoi(spec.substr(0, pos)), std::stoi(spec.substr(pos + 2))};
}

void write_solution_csv(const std::string& path, const LevelSetup& setup, const VectorXd& u) {
    std::ofstream file(path);
    if (setup.grid1d) {
        file << "x,u\n";
        for (int i = 0; i < u.size(); ++i)
            file << format_sci(setup.grid1d->node(i)) << "," << format_sci(u[i]) << "\n";
    } else {
        file << "i,j,x1,x2,u\n";
        const int J = setup.grid2d->nodes_per_axis();
        for (int i = 0; i < J; ++i)
            for (int j = 0; j < J; ++j) {
                const Vector2d x = setup.grid2d->node(i, j);
                file << i << "," << j << "," << format_sci(x[0]) << "," << format_sci(x[1])
                     << "," << format_sci(u[setup.grid2d->flat_index(i, j)]) << "\n";
            }
    }
}

int cmd_solve(const CommonArgs& args, int level) {
    StudyConfig cfg = make_study_config(args);
    LevelSetup setup = make_level_setup(cfg.problem, cfg.problem_overrides, level);
    RunOptions options;
    options.parallel_solves = cfg.parallel_solves;
    SolveOutput out = solve_level(setup, cfg.monotone, cfg.high, cfg.filter, cfg.howard, options);

    std::filesystem::create_directories(cfg.out_dir);
    const std::string base = cfg.out_dir + "/" + cfg.problem + "_solve_L" + std::to_string(level);
    write_solution_csv(base + ".csv", setup, out.final_state);
    std::cout << "solution: " << base << ".csv\n";
    if (cfg.high) {
        std::ofstream act(base + "_activity.csv");
        act << "step,node,active\n";
        for (size_t n = 0; n < out.activity.size(); ++n)
            for (size_t i = 0; i < out.activity[n].mask.size(); ++i)
                if (out.activity[n].mask[i]) act << n + 1 << "," << i << ",1\n";
        std::cout << "filter activity: " << base << "_activity.csv (max active nodes "
                  << out.max_active_nodes() << ")\n";
    }
    std::cout << "steps: " << out.steps << ", howard iterations: " << out.howard_iterations
              << ", solve seconds: " << out.solve_seconds << "\n";
    return 0;
}

int cmd_study(const CommonArgs& args, const std::string& levels, const std::string& exclude,
              double probe, bool has_probe, const std::string& ref) {
    StudyConfig cfg = make_study_config(args);
    std::tie(cfg.level_lo, cfg.level_hi) = parse_levels(levels);
    if (!exclude.empty()) {
        const auto pos = exclude.find(':');
        if (pos == std::string::npos)
            throw CLI::ValidationError("--exclude expects lo:hi");
        cfg.exclude = {std::stod(exclude.substr(0, pos)), std::stod(exclude.substr(pos + 1))};
    }
    if (has_probe) cfg.probe = probe;
    if (ref == "exact") {
        cfg.ref_mode = ReferenceMode::Exact;
    } else if (ref.rfind("fine:", 0) == 0) {
        cfg.ref_mode = ReferenceMode::FineGrid;
        cfg.ref_level = std::stoi(ref.substr(5));
    } else {
        throw CLI::ValidationError("--ref expects exact or fine:<level>");
    }

    StudyResult result = run_convergence_study(cfg);
    std::cout << "study CSV: " << result.csv_path << "\n";
    const auto l1 = result.table.errors(0);
    const auto ordLi = ConvergenceTable::orders_from(result.table.errors(2));
    for (size_t k = 0; k < result.table.rows.size(); ++k) {
        const LevelResult& r = result.table.rows[k];
        std::cout << "  N=" << r.N << " J=" << r.J << " P=" << r.P;
        if (r.ok)
            std::cout << " errL1=" << format_sci(l1[k]) << " errLinf=" << format_sci(r.err.linf)
                      << " ordLinf=" << csv_field(ordLi[k])
                      << " active=" << r.filter_active_nodes;
        else
            std::cout << " FAILED: " << r.message;
        std::cout << "\n";
    }
    return 0;
}

int cmd_validate(const CommonArgs& args, int samples, int level) {
    const auto overrides = parse_overrides(args.overrides);
    LevelSetup setup = make_level_setup(args.problem, overrides, level);
    const double tau = setup.time.dt();

    auto report_for = [&](SchemeKind kind) {
        std::unique_ptr<SchemeFamily> family;
        if (setup.grid1d)
            family = make_family(kind, setup.problem, *setup.grid1d, tau);
        else
            family = make_family(kind, setup.problem, *setup.grid2d, tau);
        A1Report rep = validate_a1(*family, samples, args.seed);
        std::cout << scheme_name(kind) << ": " << rep.violations.size() << " violations, delta="
                  << rep.min_diag_margin << ", G Lipschitz factor=" << rep.g_lipschitz_factor
                  << " (fitted C=" << rep.g_lipschitz_C << ")\n";
        for (size_t v = 0; v < std::min<size_t>(rep.violations.size(), 5); ++v)
            std::cout << "    row " << rep.violations[v].row << " control "
                      << rep.violations[v].control << ": " << rep.violations[v].kind << " ("
                      << rep.violations[v].magnitude << ")\n";
        return rep;
    };

    std::cout << "A1 audit, problem " << args.problem << ", level " << level << ":\n";
    if (setup.grid1d) {
        report_for(SchemeKind::IE);
        report_for(SchemeKind::SL);
        report_for(SchemeKind::BDF2);
        report_for(SchemeKind::CN);
    } else {
        report_for(SchemeKind::SL);
        report_for(SchemeKind::FD2D);
    }

    std::cout << "A2'/A3 truncation ratios on manufactured solutions:\n";
    const HJBProblem trig = make_manufactured_trig_problem();
    for (SchemeKind kind : {SchemeKind::IE, SchemeKind::SL, SchemeKind::BDF2, SchemeKind::CN}) {
        TruncationAudit audit = truncation_ratio_audit(kind, trig, 25, 0.05, 4, 0.4);
        std::cout << "  " << scheme_name(kind) << " residual ratios:";
        for (double r : audit.ratios) std::cout << " " << r;
        std::cout << "\n";
    }
    return 0;
}

int cmd_estimate_cvm(const CommonArgs& args, int level) {
    CvmEstimate est = estimate_cvm(args.problem, level);
    std::cout << "C_M^v estimate for " << args.problem << " (level " << level
              << "): " << est.value << (est.rough ? " (rough, from numerical solution)" : "")
              << "\n";
    std::cout << "choose c0 > estimate for local high-order consistency\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Filtered high-order schemes for time-dependent HJB equations"};
    app.set_config("--config", "",
                   "flat key=value config file: keys are <subcommand>.<flag>, e.g. "
                   "study.levels=0..4 (or an INI [study] section); flags override the file");
    app.require_subcommand(1);

    CommonArgs solve_args, study_args, validate_args, cvm_args;
    int solve_level_arg = 0;

    CLI::App* solve = app.add_subcommand("solve", "single run, writes solution + activity CSV");
    add_common(solve, solve_args);
    solve->add_option("--level", solve_level_arg, "refinement level");

    CLI::App* study = app.add_subcommand("study", "convergence study, writes table CSV");
    add_common(study, study_args);
    std::string levels = "0..3", exclude, ref = "fine:6";
    double probe = 0.0;
    bool has_probe = false;
    study->add_option("--levels", levels, "k0..k1 refinement range");
    study->add_option("--exclude", exclude, "lo:hi interval excluded from local norms");
    auto* popt = study->add_option("--probe", probe, "probe point for value tracking");
    study->add_option("--ref", ref, "exact | fine:<level>");

    CLI::App* validate = app.add_subcommand("validate", "A1/A3 property audits");
    add_common(validate, validate_args);
    int samples = 400, validate_level = 1;
    validate->add_option("--samples", samples, "sampled rows per audit");
    validate->add_option("--level", validate_level, "refinement level");

    CLI::App* cvm = app.add_subcommand("estimate-cvm", "monotone consistency constant");
    add_common(cvm, cvm_args);
    int cvm_level = 3;
    cvm->add_option("--level", cvm_level, "refinement level");

    CLI11_PARSE(app, argc, argv);
    has_probe = popt->count() > 0;

    try {
        if (solve->parsed()) return cmd_solve(solve_args, solve_level_arg);
        if (study->parsed())
            return cmd_study(study_args, levels, exclude, probe, has_probe, ref);
        if (validate->parsed()) return cmd_validate(validate_args, samples, validate_level);
        if (cvm->parsed()) return cmd_estimate_cvm(cvm_args, cvm_level);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
