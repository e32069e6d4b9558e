#ifndef HOMOWAVE_HARNESS_HPP
#define HOMOWAVE_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "homowave/cell_problem.hpp"
#include "homowave/effective_model.hpp"
#include "homowave/problem.hpp"
#include "homowave/wave_sim.hpp"

// Monte Carlo studies over coupled Wiener paths: the micro and homogenized
// equations are integrated per (eps, path) on the same grid with the same
// coarsened master increments, the L^2(Q_T) gap is aggregated into exceedance
// statistics, and the a-priori energy functionals are estimated per eps.

namespace homowave {

class HarnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline int next_pow2(int v) {
    int p = 1;
    while (p < v) p *= 2;
    return p;
}

// Samples an interior field of the fine grid at the nodes of a nested
// coarser grid ((nx_c + 1) divides (nx_f + 1)).
inline std::vector<double> restrict_field(std::span<const double> fine, int dim, int nx_f,
                                          int nx_c) {
    const int factor = (nx_f + 1) / (nx_c + 1);
    if ((nx_f + 1) % (nx_c + 1) != 0)
        throw HarnessError("grids are not nested; cannot restrict");
    std::vector<double> coarse;
    if (dim == 1) {
        coarse.resize(static_cast<std::size_t>(nx_c));
        for (int i = 0; i < nx_c; ++i)
            coarse[static_cast<std::size_t>(i)] =
                fine[static_cast<std::size_t>((i + 1) * factor - 1)];
        return coarse;
    }
    coarse.resize(static_cast<std::size_t>(nx_c) * static_cast<std::size_t>(nx_c));
    for (int j = 0; j < nx_c; ++j)
        for (int i = 0; i < nx_c; ++i)
            coarse[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_c) +
                   static_cast<std::size_t>(i)] =
                fine[(static_cast<std::size_t>((j + 1) * factor - 1)) *
                         static_cast<std::size_t>(nx_f) +
                     static_cast<std::size_t>((i + 1) * factor - 1)];
    return coarse;
}

inline double median_of(std::vector<double> v) {
    if (v.empty()) throw HarnessError("median of an empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline void run_tasks(std::size_t count, int workers, const std::function<void(std::size_t)>& task) {
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(workers, static_cast<int>(count));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                task(i);
            }
        });
    for (auto& t : pool) t.join();
}

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

// Exceedance fraction #{e > delta} / #e; the empirical complement CDF.
inline double estimate_exceedance(std::span<const double> errors, double delta) {
    if (errors.empty()) throw HarnessError("exceedance of an empty error vector");
    std::size_t count = 0;
    for (double e : errors)
        if (e > delta) ++count;
    return static_cast<double>(count) / static_cast<double>(errors.size());
}

struct StudyConfig {
    std::vector<double> eps_ladder; // strictly decreasing
    int paths = 16;
    std::uint64_t master_seed = 7;
    double delta = 0.0;      // absolute threshold; 0 derives delta_rel * ||u0||
    double delta_rel = 0.10; // fraction of the macro reference norm
    int workers = 1;
    int cell_n = 0;          // 0: 256 in 1d, 128 in 2d
    double cell_tol = 1e-10;
    HomogenizeOptions homogenize;
    int validation_samples = 256;
};

struct LadderRung {
    double eps = 0.0;
    SpatialGrid grid;
    int n_t = 0;
    int stride = 1; // snapshots land on the coarsest time grid
};

struct PathRecord {
    double eps = 0.0;
    int path = 0;
    bool ok = false;
    std::string error;
    double d = 0.0; // L^2(Q_T) gap on the common coarsest grid
    double sup_h1_sq = 0.0, sup_l2_sq = 0.0, int_h1_v = 0.0; // micro functionals
    double macro_norm = 0.0; // restricted L^2(Q_T) norm of the macro run
    std::vector<double> modulus; // H^-1 increment modulus at theta = {1,2,4} * dt_c
};

struct EpsSummary {
    double eps = 0.0;
    int completed = 0;
    double median_d = 0.0;
    double mean_d = 0.0;
    double exceedance = 0.0;
};

struct ConvergenceStudy {
    StudyConfig config;
    std::vector<LadderRung> rungs;
    std::vector<PathRecord> records; // rung-major, path-minor
    std::vector<EpsSummary> summaries;
    double delta_used = 0.0;
    double macro_ref_norm = 0.0; // mean ||u0|| over completed paths, coarsest rung
    bool medians_strictly_decreasing = false;
    bool exceedance_non_increasing = false;
    bool final_exceedance_zero = false;

    bool all_verdicts() const {
        return medians_strictly_decreasing && exceedance_non_increasing && final_exceedance_zero;
    }
};

// Effective model bundle shared by the macro runs of a study.
struct EffectiveModel {
    SymTensor a_eff;                  // valid when x_independent
    bool x_independent = true;
    EffectiveNonlinearity nonlinearity;
    CellGrid cell_grid;
    double cell_residual = 0.0;

    DirichletOperator::TensorCallable tensor_callable(const ProblemDefinition& pd,
                                                      double cell_tol = 1e-10) const {
        if (x_independent) {
            const SymTensor a = a_eff;
            return [a](std::span<const double>) { return a; };
        }
        const CellGrid grid = cell_grid;
        const ProblemDefinition* p = &pd;
        const double tol = cell_tol;
        return [p, grid, tol](std::span<const double> x) {
            CellSolveOptions opt;
            opt.tol = tol;
            return correctors_basis(*p, x, grid, opt).a_eff;
        };
    }
};

inline EffectiveModel build_effective_model(const ProblemDefinition& pd, int cell_n = 0,
                                            double cell_tol = 1e-10,
                                            const HomogenizeOptions& homog = {}) {
    EffectiveModel model;
    model.cell_grid = CellGrid(cell_n > 0 ? cell_n : (pd.dim == 1 ? 256 : 128), pd.dim);
    model.x_independent = !pd.a_depends_on_x();
    if (model.x_independent) {
        const std::vector<double> origin(static_cast<std::size_t>(pd.dim), 0.0);
        CellSolveOptions opt;
        opt.tol = cell_tol;
        const CorrectorSet cs = correctors_basis(pd, origin, model.cell_grid, opt);
        model.a_eff = cs.a_eff;
        model.cell_residual = cs.residual;
    }
    model.nonlinearity = make_effective_nonlinearity(pd, homog);
    return model;
}

// Per-eps grids: h <= eps/16 and dt <= eps/16, both rounded to the next
// power of two so every rung nests in the master grid.
inline std::vector<LadderRung> build_ladder(const ProblemDefinition& pd,
                                            std::span<const double> eps_ladder) {
    if (eps_ladder.empty()) throw HarnessError("empty epsilon ladder");
    std::vector<LadderRung> rungs;
    for (std::size_t i = 0; i < eps_ladder.size(); ++i) {
        const double eps = eps_ladder[i];
        if (!(eps > 0.0) || (i > 0 && eps >= eps_ladder[i - 1]))
            throw HarnessError("epsilon ladder must be positive and strictly decreasing");
        LadderRung rung;
        rung.eps = eps;
        const int inv_h = detail::next_pow2(static_cast<int>(std::ceil(16.0 / eps)));
        rung.grid = SpatialGrid(pd.dim, inv_h - 1);
        rung.n_t = detail::next_pow2(static_cast<int>(std::ceil(16.0 * pd.horizon / eps)));
        rungs.push_back(rung);
    }
    for (auto& rung : rungs) rung.stride = rung.n_t / rungs.front().n_t;
    return rungs;
}

namespace detail {

// Squared L^2(Q_T) norm of a trajectory difference, both restricted to the
// coarse space-time grid by node sampling; left Riemann sum in time.
inline double restricted_l2qt_sq(const SolutionTrajectory& x, const SolutionTrajectory* y,
                                 int nx_c, double dt_c) {
    const int dim = x.grid.dim;
    const double volume = std::pow(1.0 / (nx_c + 1), dim);
    double total = 0.0;
    const std::size_t steps = x.snapshot_times.size() - 1; // left sum: skip the last snapshot
    for (std::size_t k = 0; k < steps; ++k) {
        std::vector<double> rx = restrict_field(x.u_snapshots[k], dim, x.grid.nx, nx_c);
        if (y) {
            const std::vector<double> ry = restrict_field(y->u_snapshots[k], dim, y->grid.nx, nx_c);
            for (std::size_t i = 0; i < rx.size(); ++i) rx[i] -= ry[i];
        }
        double s = 0.0;
        for (double v : rx) s += v * v;
        total += s * volume * dt_c;
    }
    return total;
}

} // namespace detail

// Theorem-style convergence study: for every path the micro and homogenized
// equations run on the same rung grid with the same coarsened master
// increments, so the measured gap is the homogenization error alone.
inline ConvergenceStudy run_convergence_study(const ProblemDefinition& pd, const StudyConfig& cfg,
                                              const EffectiveModel* prebuilt = nullptr) {
    {
        const ValidationReport report = validate_problem(pd, cfg.validation_samples);
        if (!report.all_pass()) {
            std::string what = "problem failed validation:";
            for (const auto& c : report.checks)
                if (!c.pass) what += " " + c.name;
            throw HarnessError(what);
        }
    }

    ConvergenceStudy study;
    study.config = cfg;
    study.rungs = build_ladder(pd, cfg.eps_ladder);

    EffectiveModel local_model;
    const EffectiveModel* model = prebuilt;
    if (!model) {
        local_model = build_effective_model(pd, cfg.cell_n, cfg.cell_tol, cfg.homogenize);
        model = &local_model;
    }
    const DirichletOperator::TensorCallable macro_tensor =
        model->tensor_callable(pd, cfg.cell_tol);

    const int master_nt = study.rungs.back().n_t;
    const int n_rungs = static_cast<int>(study.rungs.size());
    const int coarse_nx = study.rungs.front().grid.nx;
    const double dt_c = pd.horizon / study.rungs.front().n_t;

    study.records.assign(static_cast<std::size_t>(n_rungs) * static_cast<std::size_t>(cfg.paths),
                         {});

    const SpatialGrid coarse_grid(pd.dim, coarse_nx);
    const NegSobolevNorm coarse_h1m(coarse_grid);

    auto task = [&](std::size_t index) {
        const int rung_idx = static_cast<int>(index) / cfg.paths;
        const int path_idx = static_cast<int>(index) % cfg.paths;
        const LadderRung& rung = study.rungs[static_cast<std::size_t>(rung_idx)];
        PathRecord& rec = study.records[index];
        rec.eps = rung.eps;
        rec.path = path_idx;
        try {
            const WienerPath master = WienerPath::sample(pd.noise_dim, master_nt, pd.horizon,
                                                         cfg.master_seed,
                                                         static_cast<std::uint64_t>(path_idx));
            const WienerPath run_path = master.coarsen(master_nt / rung.n_t);

            const SolutionTrajectory micro =
                simulate(pd, MicroMode{rung.eps}, rung.grid, run_path, rung.stride);
            MacroMode macro_mode;
            macro_mode.tensor = macro_tensor;
            macro_mode.eff = &model->nonlinearity;
            const SolutionTrajectory macro =
                simulate(pd, macro_mode, rung.grid, run_path, rung.stride);

            rec.d = std::sqrt(detail::restricted_l2qt_sq(micro, &macro, coarse_nx, dt_c));
            rec.macro_norm = std::sqrt(detail::restricted_l2qt_sq(macro, nullptr, coarse_nx, dt_c));
            rec.sup_h1_sq = micro.sup_h1_sq;
            rec.sup_l2_sq = micro.sup_l2_sq;
            rec.int_h1_v = micro.int_h1_v;

            // H^-1 increment modulus of the micro velocity on the coarse grid
            const std::size_t snaps = micro.snapshot_times.size();
            std::vector<std::vector<double>> v_coarse(snaps);
            for (std::size_t s = 0; s < snaps; ++s)
                v_coarse[s] =
                    detail::restrict_field(micro.v_snapshots[s], pd.dim, rung.grid.nx, coarse_nx);
            rec.modulus.assign(3, 0.0);
            std::vector<double> diff(coarse_grid.interior());
            const int thetas[3] = {1, 2, 4};
            for (int j = 0; j < 3; ++j) {
                const std::size_t lag = static_cast<std::size_t>(thetas[j]);
                double acc = 0.0;
                for (std::size_t k = 0; k + lag < snaps; ++k) {
                    for (std::size_t i = 0; i < diff.size(); ++i)
                        diff[i] = v_coarse[k + lag][i] - v_coarse[k][i];
                    const double norm = coarse_h1m(diff);
                    acc += norm * norm * dt_c;
                }
                rec.modulus[static_cast<std::size_t>(j)] = acc;
            }
            rec.ok = true;
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
            std::fprintf(stderr, "homowave: warning: path %d at eps %.6g failed and is excluded: %s\n",
                         path_idx, rung.eps, e.what());
        }
    };
    detail::run_tasks(study.records.size(), cfg.workers, task);

    // reference norm and threshold from the coarsest rung's macro runs
    {
        std::vector<double> norms;
        for (int p = 0; p < cfg.paths; ++p) {
            const PathRecord& rec = study.records[static_cast<std::size_t>(p)];
            if (rec.ok) norms.push_back(rec.macro_norm);
        }
        if (norms.empty()) throw HarnessError("every path of the coarsest rung failed");
        study.macro_ref_norm = pairwise_mean(norms);
    }
    study.delta_used = cfg.delta > 0.0 ? cfg.delta : cfg.delta_rel * study.macro_ref_norm;

    for (int r = 0; r < n_rungs; ++r) {
        EpsSummary s;
        s.eps = study.rungs[static_cast<std::size_t>(r)].eps;
        std::vector<double> errors;
        for (int p = 0; p < cfg.paths; ++p) {
            const PathRecord& rec =
                study.records[static_cast<std::size_t>(r) * static_cast<std::size_t>(cfg.paths) +
                              static_cast<std::size_t>(p)];
            if (rec.ok) errors.push_back(rec.d);
        }
        s.completed = static_cast<int>(errors.size());
        if (!errors.empty()) {
            s.median_d = detail::median_of(errors);
            s.mean_d = pairwise_mean(errors);
            s.exceedance = estimate_exceedance(errors, study.delta_used);
        }
        study.summaries.push_back(s);
    }

    study.medians_strictly_decreasing = true;
    study.exceedance_non_increasing = true;
    for (std::size_t r = 1; r < study.summaries.size(); ++r) {
        if (!(study.summaries[r].median_d < study.summaries[r - 1].median_d))
            study.medians_strictly_decreasing = false;
        if (study.summaries[r].exceedance > study.summaries[r - 1].exceedance)
            study.exceedance_non_increasing = false;
    }
    study.final_exceedance_zero = study.summaries.back().exceedance == 0.0;
    return study;
}

struct EstimateReport {
    std::vector<double> eps;
    std::vector<std::string> functional_names;
    // values[rung][functional]
    std::vector<std::vector<double>> values;
    // Monte Carlo mean of the H^-1 increment modulus, [rung][theta in {1,2,4} dt_c]
    std::vector<std::vector<double>> modulus;
    double dt_coarse = 0.0;
    bool uniform_bounded = false; // max over eps <= 1.5 x value at the largest eps
    bool modulus_linear = false;  // modulus(theta)/theta within a factor 3
    bool all_verdicts() const { return uniform_bounded && modulus_linear; }
};

// Monte Carlo estimates of the a-priori functionals (second and fourth
// moments of the energy sups, the damping integral) and the H^-1 increment
// modulus, with uniformity verdicts across the eps ladder.
inline EstimateReport verify_apriori(const ProblemDefinition& pd, const StudyConfig& cfg,
                                     const EffectiveModel* prebuilt = nullptr) {
    const ConvergenceStudy study = run_convergence_study(pd, cfg, prebuilt);
    EstimateReport report;
    report.functional_names = {"sup_H1_sq", "sup_L2_sq", "int_H1_v", "sup_H1_4th", "sup_L2_4th"};
    report.dt_coarse = pd.horizon / study.rungs.front().n_t;

    const int n_rungs = static_cast<int>(study.rungs.size());
    for (int r = 0; r < n_rungs; ++r) {
        std::vector<double> s1, s2, iv, s1_4, s2_4, m1, m2, m4;
        for (int p = 0; p < cfg.paths; ++p) {
            const PathRecord& rec =
                study.records[static_cast<std::size_t>(r) * static_cast<std::size_t>(cfg.paths) +
                              static_cast<std::size_t>(p)];
            if (!rec.ok) continue;
            s1.push_back(rec.sup_h1_sq);
            s2.push_back(rec.sup_l2_sq);
            iv.push_back(rec.int_h1_v);
            s1_4.push_back(rec.sup_h1_sq * rec.sup_h1_sq);
            s2_4.push_back(rec.sup_l2_sq * rec.sup_l2_sq);
            m1.push_back(rec.modulus[0]);
            m2.push_back(rec.modulus[1]);
            m4.push_back(rec.modulus[2]);
        }
        if (s1.empty()) throw HarnessError("every path failed at one rung");
        report.eps.push_back(study.rungs[static_cast<std::size_t>(r)].eps);
        report.values.push_back({pairwise_mean(s1), pairwise_mean(s2), pairwise_mean(iv),
                                 pairwise_mean(s1_4), pairwise_mean(s2_4)});
        report.modulus.push_back({pairwise_mean(m1), pairwise_mean(m2), pairwise_mean(m4)});
    }

    report.uniform_bounded = true;
    for (std::size_t f = 0; f < report.functional_names.size(); ++f) {
        const double reference = report.values.front()[f];
        for (int r = 1; r < n_rungs; ++r)
            if (report.values[static_cast<std::size_t>(r)][f] >
                1.5 * reference + 1e-30)
                report.uniform_bounded = false;
    }
    report.modulus_linear = true;
    const double thetas[3] = {1.0, 2.0, 4.0};
    for (int r = 0; r < n_rungs; ++r) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double ratio =
                report.modulus[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] /
                (thetas[j] * report.dt_coarse);
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        if (hi > 3.0 * lo + 1e-30) report.modulus_linear = false;
    }
    return report;
}

// Two identical macro runs must agree bitwise; discrete pathwise uniqueness.
inline bool pathwise_uniqueness_check(const ProblemDefinition& pd, const EffectiveModel& model,
                                      const SpatialGrid& grid, const WienerPath& path,
                                      int snapshot_stride = 1) {
    MacroMode mode;
    const DirichletOperator::TensorCallable tensor = model.tensor_callable(pd);
    mode.tensor = tensor;
    mode.eff = &model.nonlinearity;
    const SolutionTrajectory a = simulate(pd, mode, grid, path, snapshot_stride);
    const SolutionTrajectory b = simulate(pd, mode, grid, path, snapshot_stride);
    if (a.snapshot_times != b.snapshot_times) return false;
    if (a.u_snapshots != b.u_snapshots || a.v_snapshots != b.v_snapshots) return false;
    return a.sup_h1_sq == b.sup_h1_sq && a.sup_l2_sq == b.sup_l2_sq && a.int_h1_v == b.int_h1_v;
}

struct UcvRow {
    double eps = 0.0;
    double quadratic_variation = 0.0; // sum |Phi(t_n, t_n/eps)|^2 dt at t = 1
    double sup_abs = 0.0;             // sampled sup |Phi|
    double stochastic_integral = 0.0; // sum Phi dW, reference output
    bool pass = false;
};

// Appendix-style UCV check for Phi(t, tau) = chi(t) theta(tau): the discrete
// quadratic variation at t = 1 may not exceed sup|Phi|^2.
inline std::vector<UcvRow> ucv_diagnostic(const Expression& chi, const Expression& theta,
                                          std::span<const double> eps_ladder, int n_t,
                                          std::uint64_t master_seed, double tol = 1e-6) {
    if (n_t < 1) throw HarnessError("ucv diagnostic needs at least one step");
    const double dt = 1.0 / n_t;
    const WienerPath path = WienerPath::sample(1, n_t, 1.0, master_seed, 0);

    auto phi = [&](double t, double eps) {
        const double arg_t[1] = {t};
        const double arg_tau[1] = {t / eps};
        const double value = chi.evaluate(std::span<const double>(arg_t, 1)) *
                             theta.evaluate(std::span<const double>(arg_tau, 1));
        if (!std::isfinite(value))
            throw HarnessError("unbounded integrand detected in the UCV diagnostic");
        return value;
    };

    std::vector<UcvRow> rows;
    for (const double eps : eps_ladder) {
        if (!(eps > 0.0)) throw HarnessError("epsilon must be positive");
        UcvRow row;
        row.eps = eps;
        // sup sampled on the quadrature nodes and a 4x refinement
        for (int s = 0; s < 4 * n_t; ++s)
            row.sup_abs = std::max(row.sup_abs, std::abs(phi(static_cast<double>(s) * dt / 4.0, eps)));
        std::vector<double> qv_terms(static_cast<std::size_t>(n_t));
        double integral = 0.0;
        for (int s = 0; s < n_t; ++s) {
            const double value = phi(static_cast<double>(s) * dt, eps);
            qv_terms[static_cast<std::size_t>(s)] = value * value * dt;
            integral += value * path.at(s, 0);
        }
        row.quadratic_variation = pairwise_sum(qv_terms);
        row.stochastic_integral = integral;
        row.pass = row.quadratic_variation <= row.sup_abs * row.sup_abs + tol;
        rows.push_back(row);
    }
    return rows;
}

// ---- persistence ------------------------------------------------------

inline void emit_study(const ConvergenceStudy& study, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    {
        std::ofstream csv(fs::path(out_dir) / "errors.csv", std::ios::trunc);
        if (!csv) throw HarnessError("cannot write errors.csv under " + out_dir);
        csv << "eps,path,D,sup_H1_sq,sup_L2_sq\n";
        for (const PathRecord& rec : study.records) {
            if (!rec.ok) continue;
            csv << detail::format_g17(rec.eps) << ',' << rec.path << ','
                << detail::format_g17(rec.d) << ',' << detail::format_g17(rec.sup_h1_sq) << ','
                << detail::format_g17(rec.sup_l2_sq) << '\n';
        }
    }

    nlohmann::ordered_json j;
    j["config"]["eps"] = study.config.eps_ladder;
    j["config"]["paths"] = study.config.paths;
    j["config"]["seed"] = study.config.master_seed;
    j["config"]["delta"] = study.delta_used;
    j["config"]["delta_rel"] = study.config.delta_rel;
    {
        std::vector<int> nx, nt;
        for (const auto& rung : study.rungs) {
            nx.push_back(rung.grid.nx);
            nt.push_back(rung.n_t);
        }
        j["config"]["nx"] = nx;
        j["config"]["nt"] = nt;
    }
    j["macro_ref_norm"] = study.macro_ref_norm;
    j["medians"] = nlohmann::ordered_json::array();
    j["means"] = nlohmann::ordered_json::array();
    j["exceedance"] = nlohmann::ordered_json::array();
    j["completed"] = nlohmann::ordered_json::array();
    for (const EpsSummary& s : study.summaries) {
        j["medians"].push_back(s.median_d);
        j["means"].push_back(s.mean_d);
        j["exceedance"].push_back(s.exceedance);
        j["completed"].push_back(s.completed);
    }
    j["failed_paths"] = nlohmann::ordered_json::array();
    for (const PathRecord& rec : study.records)
        if (!rec.ok)
            j["failed_paths"].push_back({{"eps", rec.eps}, {"path", rec.path}, {"error", rec.error}});
    j["verdicts"]["median_strictly_decreasing"] = study.medians_strictly_decreasing;
    j["verdicts"]["exceedance_non_increasing"] = study.exceedance_non_increasing;
    j["verdicts"]["final_exceedance_zero"] = study.final_exceedance_zero;
    j["verdicts"]["all"] = study.all_verdicts();

    std::ofstream out(fs::path(out_dir) / "summary.json", std::ios::trunc);
    if (!out) throw HarnessError("cannot write summary.json under " + out_dir);
    out << j.dump(2) << '\n';
}

inline void emit_estimates(const EstimateReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "estimates.csv", std::ios::trunc);
    if (!csv) throw HarnessError("cannot write estimates.csv under " + out_dir);
    csv << "eps,functional,value\n";
    for (std::size_t r = 0; r < report.eps.size(); ++r) {
        for (std::size_t f = 0; f < report.functional_names.size(); ++f)
            csv << detail::format_g17(report.eps[r]) << ',' << report.functional_names[f] << ','
                << detail::format_g17(report.values[r][f]) << '\n';
        const char* names[3] = {"modulus_theta1", "modulus_theta2", "modulus_theta4"};
        for (int j = 0; j < 3; ++j)
            csv << detail::format_g17(report.eps[r]) << ',' << names[j] << ','
                << detail::format_g17(report.modulus[r][static_cast<std::size_t>(j)]) << '\n';
    }
}

} // namespace homowave

#endif
