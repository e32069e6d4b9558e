// homowave: effective-coefficient computation, micro/macro SPDE simulation
// and Monte Carlo verification studies for the damped stochastic wave
// equation with rapidly oscillating coefficients.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "homowave/cell_problem.hpp"
#include "homowave/effective_model.hpp"
#include "homowave/harness.hpp"
#include "homowave/problem.hpp"
#include "homowave/wave_sim.hpp"

namespace {

using namespace homowave;

std::vector<double> parse_csv_doubles(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        out.push_back(std::stod(text.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ProblemDefinition load_validated(const std::string& path, bool skip_validation) {
    ProblemDefinition pd = ProblemDefinition::load(path);
    if (skip_validation) return pd;
    const ValidationReport report = validate_problem(pd);
    if (!report.all_pass()) {
        std::fprintf(stderr, "%s: problem fails validation:\n", path.c_str());
        for (const auto& c : report.checks)
            std::fprintf(stderr, "  %-12s %s  observed %.6g (declared %.6g)\n", c.name.c_str(),
                         c.pass ? "pass" : "FAIL", c.observed, c.limit);
        throw ProblemError("validation failed; use --skip-validation to force");
    }
    return pd;
}

void print_tensor(const SymTensor& t) {
    if (t.dim == 1) {
        std::printf("a~ = [ %.12g ]\n", t(0, 0));
        return;
    }
    std::printf("a~ = [ %.12g  %.12g ]\n     [ %.12g  %.12g ]\n", t(0, 0), t(0, 1), t(1, 0),
                t(1, 1));
}

int cmd_cell_solve(const std::string& problem, const std::string& x_text, int n, double tol,
                   double period, const std::string& dump_chi, bool skip_validation) {
    const ProblemDefinition pd = load_validated(problem, skip_validation);
    std::vector<double> x = x_text.empty() ? std::vector<double>(pd.dim, 0.5)
                                           : parse_csv_doubles(x_text);
    if (static_cast<int>(x.size()) != pd.dim)
        throw ProblemError("--x must list one coordinate per dimension");

    CellSolveOptions opt;
    opt.tol = tol;
    opt.quasiperiodic_period = period;
    const CorrectorSet cs = correctors_basis(pd, x, CellGrid(n, pd.dim), opt);

    print_tensor(cs.a_eff);
    std::printf("grid n = %d, relative residual = %.3e\n", cs.grid.n, cs.residual);
    std::printf("eigenvalues: min %.9g, max %.9g (declared alpha %.6g)\n", cs.a_eff.eigen_min(),
                cs.a_eff.eigen_max(), pd.alpha);
    for (std::size_t j = 0; j < cs.chi.size(); ++j)
        std::printf("chi_%zu: grid mean %.3e, rms %.6g\n", j + 1,
                    pairwise_mean(cs.chi[j].values), cs.chi[j].l2_norm());
    if (cs.approximate)
        std::printf("note: quasi-periodic coefficients solved by commensurate truncation "
                    "(period %.6g); the result is an engineering approximation\n",
                    cs.grid.period);

    if (!dump_chi.empty()) {
        std::ofstream out(dump_chi, std::ios::trunc);
        if (!out) throw ProblemError("cannot write " + dump_chi);
        out << "index";
        for (int d = 0; d < pd.dim; ++d) out << ",y" << d + 1;
        for (int d = 0; d < pd.dim; ++d) out << ",chi" << d + 1;
        out << "\n";
        const double h = cs.grid.spacing();
        for (std::size_t i = 0; i < cs.grid.nodes(); ++i) {
            out << i;
            if (pd.dim == 1) {
                out << ',' << g17(static_cast<double>(i) * h);
            } else {
                out << ',' << g17(static_cast<double>(i % static_cast<std::size_t>(cs.grid.n)) * h)
                    << ',' << g17(static_cast<double>(i / static_cast<std::size_t>(cs.grid.n)) * h);
            }
            for (int d = 0; d < pd.dim; ++d)
                out << ',' << g17(cs.chi[static_cast<std::size_t>(d)].values[i]);
            out << "\n";
        }
        std::printf("corrector fields written to %s\n", dump_chi.c_str());
    }
    return 0;
}

int cmd_effective(const std::string& problem, const std::string& out_prefix,
                  const std::string& x_text, int cell_n, int v_nodes, double v_max,
                  bool skip_validation) {
    const ProblemDefinition pd = load_validated(problem, skip_validation);
    std::vector<double> x = x_text.empty() ? std::vector<double>(pd.dim, 0.5)
                                           : parse_csv_doubles(x_text);

    const CellGrid grid(cell_n > 0 ? cell_n : (pd.dim == 1 ? 256 : 128), pd.dim);
    const CorrectorSet cs = correctors_basis(pd, x, grid);
    print_tensor(cs.a_eff);

    {
        std::ofstream out(out_prefix + "_atilde.csv", std::ios::trunc);
        for (int i = 0; i < pd.dim; ++i) {
            for (int j = 0; j < pd.dim; ++j) out << (j ? "," : "") << g17(cs.a_eff(i, j));
            out << "\n";
        }
    }

    HomogenizeOptions hopt;
    if (v_nodes > 0) hopt.v_nodes = v_nodes;
    if (v_max > 0.0) hopt.v_max = v_max;
    EffectiveNonlinearity eff = make_effective_nonlinearity(pd, hopt);
    std::ofstream out(out_prefix + "_tables.csv", std::ios::trunc);
    out << "v,f_tilde";
    for (int k = 0; k < pd.noise_dim; ++k) out << ",g_tilde" << k + 1;
    out << "\n";
    std::vector<double> grid_v = eff.mode == EffectiveNonlinearity::Mode::Tabulated
                                     ? eff.v_grid
                                     : make_v_grid(pd, hopt.v_nodes, hopt.v_max);
    for (double v : grid_v) {
        out << g17(v) << ',' << g17(eff.drift(v));
        for (int k = 0; k < pd.noise_dim; ++k) out << ',' << g17(eff.noise(k, v));
        out << "\n";
    }
    std::printf("wrote %s_atilde.csv and %s_tables.csv (%zu nodes, %s mode)\n",
                out_prefix.c_str(), out_prefix.c_str(), grid_v.size(),
                eff.mode == EffectiveNonlinearity::Mode::Tabulated ? "tabulated" : "closed-form");
    return 0;
}

int cmd_simulate(const std::string& problem, const std::string& mode_name, double eps, int nx,
                 int nt, std::uint64_t seed, std::uint64_t path_index, const std::string& out_path,
                 int dump_fields, int cell_n, bool skip_validation) {
    const ProblemDefinition pd = load_validated(problem, skip_validation);
    const SpatialGrid grid(pd.dim, nx);
    const WienerPath path = WienerPath::sample(pd.noise_dim, nt, pd.horizon, seed, path_index);

    SimulationMode mode;
    EffectiveModel model;
    if (mode_name == "micro") {
        mode = MicroMode{eps};
    } else if (mode_name == "macro") {
        model = build_effective_model(pd, cell_n);
        MacroMode mm;
        mm.tensor = model.tensor_callable(pd);
        mm.eff = &model.nonlinearity;
        mode = mm;
    } else {
        throw ProblemError("--mode must be micro or macro");
    }

    const int stride = dump_fields > 0 ? dump_fields : std::max(1, nt / 256);
    const SolutionTrajectory traj = simulate(pd, mode, grid, path, stride);

    const DirichletOperator laplacian = DirichletOperator::laplacian(grid);
    const double volume = std::pow(grid.spacing(), pd.dim);
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw ProblemError("cannot write " + out_path);
    out << "t,u_L2,u_H1,v_L2\n";
    std::vector<double> tmp(grid.interior());
    for (std::size_t s = 0; s < traj.snapshot_times.size(); ++s) {
        double l2 = 0.0, vl2 = 0.0, h1 = 0.0;
        laplacian.apply(traj.u_snapshots[s], tmp);
        for (std::size_t i = 0; i < tmp.size(); ++i) {
            l2 += traj.u_snapshots[s][i] * traj.u_snapshots[s][i];
            vl2 += traj.v_snapshots[s][i] * traj.v_snapshots[s][i];
            h1 += tmp[i] * traj.u_snapshots[s][i];
        }
        out << g17(traj.snapshot_times[s]) << ',' << g17(std::sqrt(l2 * volume)) << ','
            << g17(std::sqrt(h1 * volume)) << ',' << g17(std::sqrt(vl2 * volume)) << "\n";
    }

    if (dump_fields > 0) {
        const std::string fields_path = out_path + ".fields.csv";
        std::ofstream fout(fields_path, std::ios::trunc);
        fout << "t,index,u,v\n";
        for (std::size_t s = 0; s < traj.snapshot_times.size(); ++s)
            for (std::size_t i = 0; i < traj.u_snapshots[s].size(); ++i)
                fout << g17(traj.snapshot_times[s]) << ',' << i << ','
                     << g17(traj.u_snapshots[s][i]) << ',' << g17(traj.v_snapshots[s][i]) << "\n";
        std::printf("full fields written to %s\n", fields_path.c_str());
    }

    std::printf("simulated %s run: %d steps, %zu snapshots\n", mode_name.c_str(), nt,
                traj.snapshot_times.size());
    std::printf("sup ||u||_H1^2 = %.9g, sup ||v||_L2^2 = %.9g, int ||v||_H1^2 dt = %.9g\n",
                traj.sup_h1_sq, traj.sup_l2_sq, traj.int_h1_v);
    std::printf("trajectory written to %s\n", out_path.c_str());
    return 0;
}

int cmd_converge(const std::string& problem, const std::string& eps_text, int paths,
                 std::uint64_t seed, const std::string& out_dir, double delta, double delta_rel,
                 int workers, int cell_n) {
    const ProblemDefinition pd = ProblemDefinition::load(problem);
    StudyConfig cfg;
    cfg.eps_ladder = parse_csv_doubles(eps_text);
    cfg.paths = paths;
    cfg.master_seed = seed;
    cfg.delta = delta;
    cfg.delta_rel = delta_rel;
    cfg.workers = workers;
    cfg.cell_n = cell_n;

    const ConvergenceStudy study = run_convergence_study(pd, cfg);
    emit_study(study, out_dir);

    std::printf("delta = %.6g (macro reference norm %.6g)\n", study.delta_used,
                study.macro_ref_norm);
    std::printf("%-12s %-10s %-14s %-14s %s\n", "eps", "completed", "median D", "mean D",
                "exceedance");
    for (const EpsSummary& s : study.summaries)
        std::printf("%-12.6g %-10d %-14.6e %-14.6e %.4f\n", s.eps, s.completed, s.median_d,
                    s.mean_d, s.exceedance);
    std::printf("verdicts: median strictly decreasing: %s; exceedance non-increasing: %s; "
                "final exceedance zero: %s\n",
                study.medians_strictly_decreasing ? "pass" : "FAIL",
                study.exceedance_non_increasing ? "pass" : "FAIL",
                study.final_exceedance_zero ? "pass" : "FAIL");
    std::printf("report written to %s\n", out_dir.c_str());
    return study.all_verdicts() ? 0 : 1;
}

int cmd_verify(const std::string& problem, const std::string& eps_text, int paths,
               std::uint64_t seed, const std::string& out_dir, int workers, int cell_n) {
    const ProblemDefinition pd = ProblemDefinition::load(problem);
    StudyConfig cfg;
    cfg.eps_ladder = parse_csv_doubles(eps_text);
    cfg.paths = paths;
    cfg.master_seed = seed;
    cfg.workers = workers;
    cfg.cell_n = cell_n;

    const EffectiveModel model = build_effective_model(pd, cfg.cell_n, cfg.cell_tol,
                                                       cfg.homogenize);
    const EstimateReport report = verify_apriori(pd, cfg, &model);
    emit_estimates(report, out_dir);

    std::printf("%-12s", "eps");
    for (const auto& name : report.functional_names) std::printf(" %-13s", name.c_str());
    std::printf("\n");
    for (std::size_t r = 0; r < report.eps.size(); ++r) {
        std::printf("%-12.6g", report.eps[r]);
        for (double v : report.values[r]) std::printf(" %-13.4e", v);
        std::printf("\n");
    }
    std::printf("modulus(theta)/theta per eps:");
    for (std::size_t r = 0; r < report.eps.size(); ++r) {
        std::printf("  [");
        for (int j = 0; j < 3; ++j)
            std::printf("%s%.3e", j ? " " : "",
                        report.modulus[r][static_cast<std::size_t>(j)] /
                            ((j == 0 ? 1.0 : j == 1 ? 2.0 : 4.0) * report.dt_coarse));
        std::printf("]");
    }
    std::printf("\n");

    // discrete pathwise uniqueness on the coarsest rung
    const std::vector<LadderRung> rungs = build_ladder(pd, cfg.eps_ladder);
    const WienerPath path =
        WienerPath::sample(pd.noise_dim, rungs.front().n_t, pd.horizon, seed, 0);
    const bool unique = pathwise_uniqueness_check(pd, model, rungs.front().grid, path);

    std::printf("verdicts: uniform boundedness: %s; modulus linear in theta: %s; "
                "pathwise uniqueness: %s\n",
                report.uniform_bounded ? "pass" : "FAIL",
                report.modulus_linear ? "pass" : "FAIL", unique ? "pass" : "FAIL");
    std::printf("estimates written to %s\n", out_dir.c_str());
    return (report.all_verdicts() && unique) ? 0 : 1;
}

int cmd_ucv(const std::string& chi_text, const std::string& theta_text,
            const std::string& eps_text, int nt, std::uint64_t seed, const std::string& out_dir) {
    const std::vector<std::string> tvars{"t"};
    const std::vector<std::string> tauvars{"tau"};
    const Expression chi = Expression::parse(chi_text, tvars);
    const Expression theta = Expression::parse(theta_text, tauvars);
    const std::vector<double> eps = parse_csv_doubles(eps_text);

    const std::vector<UcvRow> rows = ucv_diagnostic(chi, theta, eps, nt, seed);
    std::printf("%-12s %-14s %-14s %-14s %s\n", "eps", "QV(1)", "sup|Phi|^2", "integral", "bound");
    bool all_pass = true;
    for (const UcvRow& row : rows) {
        std::printf("%-12.6g %-14.8g %-14.8g %-14.6g %s\n", row.eps, row.quadratic_variation,
                    row.sup_abs * row.sup_abs, row.stochastic_integral,
                    row.pass ? "pass" : "FAIL");
        all_pass = all_pass && row.pass;
    }
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream out(std::filesystem::path(out_dir) / "ucv.csv", std::ios::trunc);
        out << "eps,qv,sup_sq,integral,pass\n";
        for (const UcvRow& row : rows)
            out << g17(row.eps) << ',' << g17(row.quadratic_variation) << ','
                << g17(row.sup_abs * row.sup_abs) << ',' << g17(row.stochastic_integral) << ','
                << (row.pass ? 1 : 0) << "\n";
    }
    return all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"homogenization toolkit for the semilinear damped stochastic wave equation"};
    app.require_subcommand(1);

    std::string problem, x_text, out, mode_name = "micro", eps_text, chi_text, theta_text;
    std::string dump_chi;
    int n = 256, nx = 255, nt = 1024, paths = 16, workers = 1, cell_n = 0, v_nodes = 0;
    int dump_fields = 0;
    double tol = 1e-10, period = 1.0, eps = 0.0625, delta = 0.0, delta_rel = 0.10, v_max = 0.0;
    std::uint64_t seed = 7, path_index = 0;
    bool skip_validation = false;

    auto* cell = app.add_subcommand("cell-solve", "solve the periodic cell problem at one point");
    cell->add_option("--problem", problem, "problem TOML file")->required();
    cell->add_option("--x", x_text, "macro point, comma separated (default: cell center)");
    cell->add_option("--n", n, "cell grid resolution per axis (power of two)");
    cell->add_option("--tol", tol, "relative residual tolerance");
    cell->add_option("--period", period, "commensurate truncation period (quasi-periodic only)");
    cell->add_option("--dump-chi", dump_chi, "write corrector fields to this CSV");
    cell->add_flag("--skip-validation", skip_validation, "skip the (A1)/(A2) sampling checks");

    auto* eff = app.add_subcommand("effective", "compute a~, f~ and g~ tables");
    eff->add_option("--problem", problem)->required();
    eff->add_option("--out", out, "output prefix")->required();
    eff->add_option("--x", x_text, "macro point for a~");
    eff->add_option("--cell-n", cell_n, "cell resolution (default 256 / 128)");
    eff->add_option("--v-nodes", v_nodes, "tabulation nodes (default 513)");
    eff->add_option("--v-max", v_max, "tabulation half-range (default: derived)");
    eff->add_flag("--skip-validation", skip_validation);

    auto* sim = app.add_subcommand("simulate", "integrate one micro or macro trajectory");
    sim->add_option("--problem", problem)->required();
    sim->add_option("--mode", mode_name, "micro | macro")->required();
    sim->add_option("--eps", eps, "oscillation scale (micro mode)");
    sim->add_option("--nx", nx, "interior nodes per axis");
    sim->add_option("--nt", nt, "time steps");
    sim->add_option("--seed", seed, "master seed");
    sim->add_option("--path", path_index, "path index");
    sim->add_option("--out", out, "trajectory CSV")->required();
    sim->add_option("--dump-fields", dump_fields, "also dump full fields every STRIDE steps");
    sim->add_option("--cell-n", cell_n, "cell resolution for macro mode");
    sim->add_flag("--skip-validation", skip_validation);

    auto* conv = app.add_subcommand("converge", "micro-vs-homogenized Monte Carlo study");
    conv->add_option("--problem", problem)->required();
    conv->add_option("--eps", eps_text, "epsilon ladder, comma separated, decreasing")->required();
    conv->add_option("--paths", paths, "Monte Carlo paths");
    conv->add_option("--seed", seed, "master seed");
    conv->add_option("--out", out, "output directory")->required();
    conv->add_option("--delta", delta, "absolute exceedance threshold");
    conv->add_option("--delta-rel", delta_rel, "threshold as a fraction of ||u0||");
    conv->add_option("--workers", workers, "worker threads");
    conv->add_option("--cell-n", cell_n, "cell resolution");

    auto* ver = app.add_subcommand("verify", "a-priori estimate and uniqueness checks");
    ver->add_option("--problem", problem)->required();
    ver->add_option("--eps", eps_text)->required();
    ver->add_option("--paths", paths);
    ver->add_option("--seed", seed);
    ver->add_option("--out", out, "output directory")->required();
    ver->add_option("--workers", workers);
    ver->add_option("--cell-n", cell_n);

    auto* ucv = app.add_subcommand("ucv", "uniformly-controlled-variations diagnostic");
    ucv->add_option("--chi", chi_text, "expression in t")->required();
    ucv->add_option("--theta", theta_text, "expression in tau")->required();
    ucv->add_option("--eps", eps_text, "epsilon ladder")->required();
    ucv->add_option("--nt", nt, "time steps on [0, 1]");
    ucv->add_option("--seed", seed);
    ucv->add_option("--out", out, "optional output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cell->parsed())
            return cmd_cell_solve(problem, x_text, n, tol, period, dump_chi, skip_validation);
        if (eff->parsed())
            return cmd_effective(problem, out, x_text, cell_n, v_nodes, v_max, skip_validation);
        if (sim->parsed())
            return cmd_simulate(problem, mode_name, eps, nx, nt, seed, path_index, out,
                                dump_fields, cell_n, skip_validation);
        if (conv->parsed())
            return cmd_converge(problem, eps_text, paths, seed, out, delta, delta_rel, workers,
                                cell_n);
        if (ver->parsed()) return cmd_verify(problem, eps_text, paths, seed, out, workers, cell_n);
        if (ucv->parsed()) return cmd_ucv(chi_text, theta_text, eps_text, nt, seed, out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "homowave: error: %s\n", e.what());
        return 2;
    }
    return 0;
}
