#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "homowave/harness.hpp"
#include "test_util.hpp"

using namespace homowave;
using Catch::Approx;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

StudyConfig tiny_config() {
    StudyConfig cfg;
    cfg.eps_ladder = {0.5, 0.25};
    cfg.paths = 3;
    cfg.master_seed = 21;
    cfg.cell_n = 64;
    return cfg;
}

} // namespace

TEST_CASE("exceedance estimator counts strict exceedances", "[harness]") {
    const std::vector<double> errors = {0.1, 0.2, 0.3};
    REQUIRE(estimate_exceedance(errors, 0.15) == Approx(2.0 / 3.0));
    REQUIRE(estimate_exceedance(errors, std::numeric_limits<double>::infinity()) == 0.0);
    const std::vector<double> zeros(5, 0.0);
    REQUIRE(estimate_exceedance(zeros, 0.01) == 0.0);
    REQUIRE_THROWS_AS(estimate_exceedance({}, 0.1), HarnessError);

    // complement CDF: non-increasing in delta
    double prev = 1.0;
    for (double delta : {0.05, 0.1, 0.15, 0.2, 0.25, 0.35}) {
        const double e = estimate_exceedance(errors, delta);
        REQUIRE(e <= prev);
        prev = e;
    }
}

TEST_CASE("ladder grids satisfy the mesh preconditions and nest", "[harness]") {
    const ProblemDefinition pd = testutil::benchmark_1d();
    const std::vector<double> eps = {0.125, 0.0625, 0.03125, 0.015625};
    const std::vector<LadderRung> rungs = build_ladder(pd, eps);
    for (std::size_t i = 0; i < rungs.size(); ++i) {
        const double h = rungs[i].grid.spacing();
        const double dt = pd.horizon / rungs[i].n_t;
        REQUIRE(h <= eps[i] / 16.0 * (1.0 + 1e-12));
        REQUIRE(dt <= eps[i] / 16.0 * (1.0 + 1e-12));
        if (i > 0) {
            REQUIRE((rungs[i].grid.nx + 1) % (rungs[0].grid.nx + 1) == 0);
            REQUIRE(rungs[i].n_t % rungs[0].n_t == 0);
            REQUIRE(rungs[i].stride == rungs[i].n_t / rungs[0].n_t);
        }
    }
    REQUIRE_THROWS_AS(build_ladder(pd, std::vector<double>{0.25, 0.25}), HarnessError);
}

TEST_CASE("degenerate constant-coefficient study has exactly zero error", "[harness]") {
    const ProblemDefinition pd = testutil::constant_1d();
    const StudyConfig cfg = tiny_config();
    const ConvergenceStudy study = run_convergence_study(pd, cfg);
    for (const PathRecord& rec : study.records) {
        REQUIRE(rec.ok);
        REQUIRE(rec.d == 0.0);
    }
    for (const EpsSummary& s : study.summaries) {
        REQUIRE(s.median_d == 0.0);
        REQUIRE(s.exceedance == 0.0);
    }
    REQUIRE(study.exceedance_non_increasing);
    REQUIRE(study.final_exceedance_zero);
}

TEST_CASE("studies are byte-identical across worker counts", "[harness]") {
    const ProblemDefinition pd = testutil::benchmark_1d();
    StudyConfig cfg = tiny_config();

    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "homowave_test_workers";
    fs::remove_all(base);

    cfg.workers = 1;
    emit_study(run_convergence_study(pd, cfg), (base / "w1").string());
    cfg.workers = 3;
    emit_study(run_convergence_study(pd, cfg), (base / "w3").string());

    REQUIRE(slurp(base / "w1" / "errors.csv") == slurp(base / "w3" / "errors.csv"));
    REQUIRE(slurp(base / "w1" / "summary.json") == slurp(base / "w3" / "summary.json"));
    fs::remove_all(base);
}

TEST_CASE("report emission is idempotent", "[harness]") {
    const ProblemDefinition pd = testutil::constant_1d();
    const ConvergenceStudy study = run_convergence_study(pd, tiny_config());
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "homowave_test_emit";
    fs::remove_all(dir);
    emit_study(study, dir.string());
    const std::string first_csv = slurp(dir / "errors.csv");
    const std::string first_json = slurp(dir / "summary.json");
    emit_study(study, dir.string());
    REQUIRE(slurp(dir / "errors.csv") == first_csv);
    REQUIRE(slurp(dir / "summary.json") == first_json);
    fs::remove_all(dir);
}

TEST_CASE("empty study emits a header-only errors table", "[harness]") {
    ConvergenceStudy study;
    study.summaries = {};
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "homowave_test_empty";
    fs::remove_all(dir);
    emit_study(study, dir.string());
    REQUIRE(slurp(dir / "errors.csv") == "eps,path,D,sup_H1_sq,sup_L2_sq\n");
    fs::remove_all(dir);
}

TEST_CASE("pathwise uniqueness check", "[harness]") {
    const ProblemDefinition pd = testutil::constant_1d();
    const EffectiveModel model = build_effective_model(pd, 64);
    const SpatialGrid grid(1, 31);
    const WienerPath path = WienerPath::sample(1, 64, pd.horizon, 3, 0);
    REQUIRE(pathwise_uniqueness_check(pd, model, grid, path, 8));

    // the check can fail: a perturbed initial velocity produces a different
    // trajectory, as does a different path index
    ProblemDefinition perturbed = pd;
    perturbed.u1 = Expression::parse("0.001", ProblemDefinition::initial_vars(pd.dim));
    MacroMode mode;
    const auto tensor = model.tensor_callable(pd);
    mode.tensor = tensor;
    mode.eff = &model.nonlinearity;
    const SolutionTrajectory a = simulate(pd, mode, grid, path, 8);
    const SolutionTrajectory b = simulate(perturbed, mode, grid, path, 8);
    REQUIRE(a.u_snapshots != b.u_snapshots);

    const WienerPath other = WienerPath::sample(1, 64, pd.horizon, 3, 1);
    const SolutionTrajectory c = simulate(pd, mode, grid, other, 8);
    REQUIRE(a.u_snapshots != c.u_snapshots);
}

TEST_CASE("a-priori estimates on the degenerate problem", "[harness]") {
    // zero data, zero forcing: every functional vanishes and the verdicts pass
    const ProblemDefinition pd = testutil::problem_from(R"TOML(
[problem]
dimension = 1
horizon = 0.5
alpha = 1.0
[coefficients]
a = ["1"]
f = "0"
g = ["0"]
u0 = "0"
u1 = "0"
)TOML");
    StudyConfig cfg = tiny_config();
    const EstimateReport report = verify_apriori(pd, cfg);
    for (const auto& row : report.values)
        for (double v : row) REQUIRE(v == 0.0);
    REQUIRE(report.uniform_bounded);
    // modulus ratios are 0/theta: the linearity proxy degenerates to equality
    REQUIRE(report.modulus_linear);
}

TEST_CASE("deterministic problems give path-independent estimates", "[harness]") {
    ProblemDefinition pd = testutil::problem_from(R"TOML(
[problem]
dimension = 1
horizon = 0.5
alpha = 1.0
c1 = 2.0
[coefficients]
a = ["2 + sin(2*pi*y1)"]
f = "1 - v"
g = ["0"]
u0 = "sin(pi*x1)"
u1 = "0"
[algebra_y]
kind = "periodic"
[algebra_tau]
kind = "periodic"
)TOML");
    StudyConfig cfg = tiny_config();
    cfg.paths = 2;
    const EstimateReport a = verify_apriori(pd, cfg);
    cfg.paths = 3;
    const EstimateReport b = verify_apriori(pd, cfg);
    for (std::size_t r = 0; r < a.values.size(); ++r)
        for (std::size_t f = 0; f < a.values[r].size(); ++f)
            REQUIRE(a.values[r][f] == b.values[r][f]);
}

TEST_CASE("estimates.csv carries one row per (eps, functional)", "[harness]") {
    const ProblemDefinition pd = testutil::constant_1d();
    const EstimateReport report = verify_apriori(pd, tiny_config());
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "homowave_test_est";
    fs::remove_all(dir);
    emit_estimates(report, dir.string());
    const std::string text = slurp(dir / "estimates.csv");
    std::size_t rows = 0;
    for (char c : text)
        if (c == '\n') ++rows;
    REQUIRE(rows == 1 + report.eps.size() * (report.functional_names.size() + 3));
    fs::remove_all(dir);
}

TEST_CASE("ucv diagnostic bounds the quadratic variation", "[harness]") {
    const std::vector<std::string> tvars{"t"};
    const std::vector<std::string> tauvars{"tau"};
    const std::vector<double> eps = {0.125, 0.0625, 0.03125, 0.015625};

    // Phi = sin(2 pi t) sin(2 pi tau): |Phi| <= 1 so QV(1) <= 1
    {
        const Expression chi = Expression::parse("sin(2*pi*t)", tvars);
        const Expression theta = Expression::parse("sin(2*pi*tau)", tauvars);
        const auto rows = ucv_diagnostic(chi, theta, eps, 1024, 7);
        REQUIRE(rows.size() == eps.size());
        for (const UcvRow& row : rows) {
            REQUIRE(row.pass);
            REQUIRE(row.quadratic_variation <= 1.0 + 1e-6);
            REQUIRE(row.sup_abs <= 1.0 + 1e-12);
        }
    }
    // Phi = c: QV(1) = c^2 exactly on the dyadic grid
    {
        const Expression chi = Expression::parse("1.5", tvars);
        const Expression theta = Expression::parse("1", tauvars);
        const auto rows = ucv_diagnostic(chi, theta, eps, 512, 7);
        for (const UcvRow& row : rows) REQUIRE(row.quadratic_variation == 2.25);
    }
    // Phi = 0: zero variation and zero integral
    {
        const Expression chi = Expression::parse("0", tvars);
        const Expression theta = Expression::parse("sin(tau)", tauvars);
        const auto rows = ucv_diagnostic(chi, theta, eps, 256, 7);
        for (const UcvRow& row : rows) {
            REQUIRE(row.quadratic_variation == 0.0);
            REQUIRE(row.stochastic_integral == 0.0);
        }
    }
    // unbounded integrands are rejected (the sample grid hits the pole)
    {
        const Expression chi = Expression::parse("1/(0.5 - t)", tvars);
        const Expression theta = Expression::parse("1", tauvars);
        REQUIRE_THROWS_AS(ucv_diagnostic(chi, theta, eps, 256, 7), std::exception);
    }
}

TEST_CASE("studies refuse problems that fail validation", "[harness]") {
    ProblemDefinition pd = testutil::constant_1d();
    pd.c2 = 0.01; // declared Lipschitz bound contradicts f = tanh(v)
    REQUIRE_THROWS_WITH(run_convergence_study(pd, tiny_config()),
                        Catch::Matchers::ContainsSubstring("failed validation"));
}
