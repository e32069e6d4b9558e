#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "homowave/wave_sim.hpp"
#include "test_util.hpp"

using namespace homowave;
using Catch::Approx;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

Eigen::MatrixXd dense_of(const DirichletOperator& op, std::size_t n) {
    Eigen::MatrixXd m(n, n);
    std::vector<double> e(n, 0.0), col(n);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        op.apply(e, col);
        for (std::size_t i = 0; i < n; ++i) m(static_cast<long>(i), static_cast<long>(j)) = col[i];
        e[j] = 0.0;
    }
    return m;
}

} // namespace

TEST_CASE("identity stiffness is the textbook tridiagonal stencil", "[wave]") {
    const SpatialGrid grid(1, 15);
    const DirichletOperator K = DirichletOperator::laplacian(grid);
    const double h2 = grid.spacing() * grid.spacing();
    const Eigen::MatrixXd m = dense_of(K, grid.interior());
    for (long i = 0; i < 15; ++i)
        for (long j = 0; j < 15; ++j) {
            const double expected = i == j ? 2.0 / h2 : (std::abs(i - j) == 1 ? -1.0 / h2 : 0.0);
            REQUIRE(m(i, j) == expected);
        }
}

TEST_CASE("stiffness is exactly symmetric and spectrally bounded below", "[wave]") {
    const ProblemDefinition pd = testutil::benchmark_1d();
    const double eps = 1.0; // resolution constraint satisfied trivially
    const SpatialGrid grid(1, 31);
    auto tensor = [&](std::span<const double> x) {
        const double y[1] = {x[0]};
        return pd.eval_a(x, std::span<const double>(y, 1));
    };
    const DirichletOperator K = DirichletOperator::assemble(grid, tensor);
    const Eigen::MatrixXd m = dense_of(K, grid.interior());
    REQUIRE((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);

    // dense eigensolve oracle: lambda_min >= alpha pi^2 (1 - O(h^2))
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    const double h = grid.spacing();
    REQUIRE(eig.eigenvalues()(0) >=
            pd.alpha * kPi * kPi * (1.0 - kPi * kPi * h * h / 12.0) - 1e-9);
    (void)eps;
}

TEST_CASE("2d identity stiffness matches the dense 5-point oracle", "[wave]") {
    const SpatialGrid grid(2, 15);
    const DirichletOperator K = DirichletOperator::laplacian(grid);
    const Eigen::MatrixXd m = dense_of(K, grid.interior());
    REQUIRE((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    const double h = grid.spacing();
    const double lam1 = 2.0 * (2.0 - 2.0 * std::cos(kPi * h)) / (h * h);
    REQUIRE(eig.eigenvalues()(0) == Approx(lam1).epsilon(1e-10));
}

TEST_CASE("one implicit step matches a dense solve", "[wave]") {
    const ProblemDefinition pd = testutil::constant_1d();
    const SpatialGrid grid(1, 15);
    const double dt = 1.0 / 64.0;
    auto tensor = [&](std::span<const double> x) {
        const double y[1] = {0.0};
        return pd.eval_a(x, std::span<const double>(y, 1));
    };
    const DirichletOperator K = DirichletOperator::assemble(grid, tensor);
    const DirichletOperator L = DirichletOperator::laplacian(grid);
    const ImplicitStepSolver solver(grid, K, L, dt);

    const std::size_t n = grid.interior();
    SpdeState state;
    state.u.resize(n);
    state.v.resize(n);
    std::vector<double> coords(1);
    for (std::size_t i = 0; i < n; ++i) {
        grid.node(i, coords);
        state.u[i] = std::sin(kPi * coords[0]);
        state.v[i] = 0.25 * std::sin(2.0 * kPi * coords[0]);
    }
    const double dw[1] = {0.017};
    auto phi = [](std::size_t, double v) { return 0.5 * v + 0.1; };
    auto gamma = [](int, std::size_t, double v) { return 1.0 + 0.5 * v; };
    const SpdeState next = step_semi_implicit(state, dt, K, solver, phi, gamma, 1,
                                              std::span<const double>(dw, 1));

    // dense oracle for (I + dt L + dt^2 K) v1 = v0 - dt K u0 + dt phi + gamma dW
    const Eigen::MatrixXd Kd = dense_of(K, n);
    const Eigen::MatrixXd Ld = dense_of(L, n);
    const Eigen::MatrixXd M =
        Eigen::MatrixXd::Identity(static_cast<long>(n), static_cast<long>(n)) + dt * Ld +
        dt * dt * Kd;
    Eigen::VectorXd rhs(static_cast<long>(n));
    for (std::size_t i = 0; i < n; ++i) {
        double kv = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            kv += Kd(static_cast<long>(i), static_cast<long>(j)) * state.u[j];
        rhs(static_cast<long>(i)) =
            state.v[i] - dt * kv + dt * phi(i, state.v[i]) + gamma(0, i, state.v[i]) * dw[0];
    }
    const Eigen::VectorXd v1 = M.llt().solve(rhs);
    for (std::size_t i = 0; i < n; ++i) {
        REQUIRE(next.v[i] == Approx(v1(static_cast<long>(i))).margin(1e-11));
        REQUIRE(next.u[i] == Approx(state.u[i] + dt * v1(static_cast<long>(i))).margin(1e-11));
    }
}

TEST_CASE("zero data stays exactly zero", "[wave]") {
    const ProblemDefinition pd = testutil::problem_from(R"TOML(
[problem]
dimension = 1
horizon = 1.0
alpha = 1.0
[coefficients]
a = ["1"]
f = "0"
g = ["0"]
u0 = "0"
u1 = "0"
)TOML");
    const SpatialGrid grid(1, 31);
    const WienerPath path = WienerPath::sample(1, 64, pd.horizon, 3, 0);
    const SolutionTrajectory tr = simulate(pd, MicroMode{2.0}, grid, path, 8);
    for (const auto& snap : tr.u_snapshots)
        for (double v : snap) REQUIRE(v == 0.0);
    REQUIRE(tr.sup_h1_sq == 0.0);
    REQUIRE(tr.sup_l2_sq == 0.0);
    REQUIRE(tr.int_h1_v == 0.0);
}

TEST_CASE("sine mode follows its damped oscillator to first order in dt", "[wave]") {
    const ProblemDefinition pd = testutil::problem_from(R"TOML(
[problem]
dimension = 1
horizon = 1.0
alpha = 1.0
[coefficients]
a = ["1"]
f = "0"
g = ["0"]
u0 = "sin(pi*x1)"
u1 = "0"
)TOML");
    const SpatialGrid grid(1, 127);
    const double h = grid.spacing();
    const double lam = (2.0 - 2.0 * std::cos(kPi * h)) / (h * h); // discrete eigenvalue

    // closed form of z'' + lam z' + lam z = 0, z(0) = 1, z'(0) = 0
    auto exact = [&](double t) {
        const double s = std::sqrt(lam * lam - 4.0 * lam);
        const double r1 = 0.5 * (-lam + s), r2 = 0.5 * (-lam - s);
        const double c2 = -r1 / (r2 - r1);
        return (1.0 - c2) * std::exp(r1 * t) + c2 * std::exp(r2 * t);
    };

    double prev_err = 0.0;
    for (int nt : {256, 512, 1024}) {
        const WienerPath path = WienerPath::sample(1, nt, pd.horizon, 1, 0);
        const SolutionTrajectory tr = simulate(pd, MicroMode{1.0}, grid, path, nt);
        const std::size_t mid = grid.interior() / 2;
        std::vector<double> coords(1);
        grid.node(mid, coords);
        const double amplitude = tr.u_snapshots.back()[mid] / std::sin(kPi * coords[0]);
        const double err = std::abs(amplitude - exact(1.0));
        if (prev_err > 0.0) REQUIRE(err < 0.6 * prev_err); // ~ O(dt)
        prev_err = err;
    }
    REQUIRE(prev_err < 5e-4);
}

TEST_CASE("dissipativity of the unforced scheme", "[wave]") {
    // discrete energy  0.5 ||v||^2 + 0.5 <K u, u>  is non-increasing stepwise
    const ProblemDefinition pd = testutil::laminate_2d();
    const double eps = 0.125;
    const SpatialGrid grid(2, 31);
    const WienerPath path = WienerPath::sample(1, 256, pd.horizon, 5, 0);
    const SolutionTrajectory tr = simulate(pd, MicroMode{eps}, grid, path, 1);

    auto tensor = [&](std::span<const double> x) {
        double y[2] = {detail::wrap_unit(x[0] / eps), detail::wrap_unit(x[1] / eps)};
        return pd.eval_a(x, std::span<const double>(y, 2));
    };
    const DirichletOperator K = DirichletOperator::assemble(grid, tensor);
    const double volume = std::pow(grid.spacing(), 2);
    double prev = 1e300;
    std::vector<double> tmp(grid.interior());
    for (std::size_t s = 0; s < tr.snapshot_times.size(); ++s) {
        K.apply(tr.u_snapshots[s], tmp);
        double e = 0.0;
        for (std::size_t i = 0; i < tmp.size(); ++i)
            e += 0.5 * tr.v_snapshots[s][i] * tr.v_snapshots[s][i] +
                 0.5 * tmp[i] * tr.u_snapshots[s][i];
        e *= volume;
        REQUIRE(e <= prev * (1.0 + 1e-12) + 1e-300);
        prev = e;
    }
}

TEST_CASE("micro equals macro bitwise for constant coefficients", "[wave]") {
    const ProblemDefinition pd = testutil::constant_1d();

    // the effective tensor of a constant coefficient is that constant, exactly
    const double origin[1] = {0.0};
    const CorrectorSet cs =
        correctors_basis(pd, std::span<const double>(origin, 1), CellGrid(256, 1));
    REQUIRE(cs.a_eff(0, 0) == 1.5);
    for (double v : cs.chi[0].values) REQUIRE(v == 0.0);

    const EffectiveNonlinearity eff = make_effective_nonlinearity(pd);
    const SpatialGrid grid(1, 127);
    const WienerPath path = WienerPath::sample(1, 256, pd.horizon, 7, 11);

    const SolutionTrajectory micro = simulate(pd, MicroMode{0.125}, grid, path, 16);
    MacroMode mm;
    const SymTensor a_eff = cs.a_eff;
    mm.tensor = [a_eff](std::span<const double>) { return a_eff; };
    mm.eff = &eff;
    const SolutionTrajectory macro = simulate(pd, mm, grid, path, 16);

    REQUIRE(micro.u_snapshots == macro.u_snapshots);
    REQUIRE(micro.v_snapshots == macro.v_snapshots);
    REQUIRE(micro.sup_h1_sq == macro.sup_h1_sq);
    REQUIRE(micro.int_h1_v == macro.int_h1_v);
}

TEST_CASE("runs are bitwise reproducible", "[wave]") {
    const ProblemDefinition pd = testutil::benchmark_1d();
    const SpatialGrid grid(1, 127);
    const WienerPath path = WienerPath::sample(1, 64, pd.horizon, 9, 2);
    const SolutionTrajectory a = simulate(pd, MicroMode{0.125}, grid, path, 8);
    const SolutionTrajectory b = simulate(pd, MicroMode{0.125}, grid, path, 8);
    REQUIRE(a.u_snapshots == b.u_snapshots);
    REQUIRE(a.v_snapshots == b.v_snapshots);
}

TEST_CASE("micro mesh preconditions are enforced", "[wave]") {
    const ProblemDefinition pd = testutil::benchmark_1d();
    const SpatialGrid grid(1, 63); // h = 1/64 > eps/16 for eps = 1/8
    const WienerPath path = WienerPath::sample(1, 64, pd.horizon, 9, 2);
    REQUIRE_THROWS_WITH(simulate(pd, MicroMode{0.125 / 4.0}, grid, path, 8),
                        Catch::Matchers::ContainsSubstring("eps/16"));
}

TEST_CASE("wiener increments have the contracted statistics", "[wave]") {
    const int paths = 10000;
    const int nt = 4;
    const double T = 1.0;
    const double dt = T / nt;
    for (int step = 0; step < nt; ++step) {
        double mean = 0.0, var = 0.0;
        for (int p = 0; p < paths; ++p) {
            const WienerPath w = WienerPath::sample(1, nt, T, 2024, static_cast<std::uint64_t>(p));
            mean += w.at(step, 0);
            var += w.at(step, 0) * w.at(step, 0);
        }
        mean /= paths;
        var = var / paths - mean * mean;
        REQUIRE(std::abs(mean) <= 4.0 * std::sqrt(dt) / std::sqrt(static_cast<double>(paths)));
        REQUIRE(var == Approx(dt).epsilon(0.05));
    }
}

TEST_CASE("coarsening sums consecutive increments exactly", "[wave]") {
    const WienerPath w = WienerPath::sample(2, 64, 0.5, 11, 4);
    const WienerPath c2 = w.coarsen(2);
    for (int s = 0; s < c2.n_t; ++s)
        for (int k = 0; k < 2; ++k)
            REQUIRE(c2.at(s, k) == w.at(2 * s, k) + w.at(2 * s + 1, k));
    REQUIRE(c2.dt() == 2.0 * w.dt());
    REQUIRE_THROWS_AS(w.coarsen(3), SimulationError);

    // identical key -> identical increments
    const WienerPath w2 = WienerPath::sample(2, 64, 0.5, 11, 4);
    REQUIRE(w.increments == w2.increments);
    const WienerPath other = WienerPath::sample(2, 64, 0.5, 11, 5);
    REQUIRE(w.increments != other.increments);
}

TEST_CASE("H^-1 norm oracle and scaling", "[wave]") {
    const SpatialGrid grid(1, 1023);
    std::vector<double> r(grid.interior());
    std::vector<double> coords(1);
    for (std::size_t i = 0; i < r.size(); ++i) {
        grid.node(i, coords);
        r[i] = std::sin(kPi * coords[0]);
    }
    const NegSobolevNorm norm(grid);
    REQUIRE(norm(r) == Approx(1.0 / (kPi * std::sqrt(2.0))).margin(1e-4));

    std::vector<double> zero(grid.interior(), 0.0);
    REQUIRE(norm(zero) == 0.0);

    // power-of-two scalings commute exactly with the solve
    std::vector<double> scaled = r;
    for (double& v : scaled) v *= 4.0;
    REQUIRE(norm(scaled) == 4.0 * norm(r));
    for (double& v : scaled) v *= -2.0;
    REQUIRE(norm(scaled) == 8.0 * norm(r));
    // a general scaling holds to roundoff
    std::vector<double> scaled3 = r;
    for (double& v : scaled3) v *= 3.0;
    REQUIRE(norm(scaled3) == Approx(3.0 * norm(r)).epsilon(1e-12));
}

TEST_CASE("energy functionals of a hand-built trajectory", "[wave]") {
    const SpatialGrid grid(1, 1023);
    SolutionTrajectory tr;
    tr.grid = grid;
    std::vector<double> u(grid.interior());
    std::vector<double> coords(1);
    for (std::size_t i = 0; i < u.size(); ++i) {
        grid.node(i, coords);
        u[i] = std::sin(kPi * coords[0]);
    }
    for (int s = 0; s <= 4; ++s) {
        tr.snapshot_times.push_back(0.25 * s);
        tr.u_snapshots.push_back(u);
        tr.v_snapshots.push_back(std::vector<double>(grid.interior(), 0.0));
    }
    const EnergyFunctionals f = energy_functionals(tr);
    REQUIRE(f.sup_h1_sq == Approx(kPi * kPi / 2.0).margin(1e-3));
    REQUIRE(f.sup_l2_sq == 0.0);
    REQUIRE(f.int_h1_v == 0.0);

    // functionals are invariant under snapshot refinement (same states)
    SolutionTrajectory coarse = tr;
    coarse.snapshot_times = {0.0, 0.5, 1.0};
    coarse.u_snapshots = {u, u, u};
    coarse.v_snapshots.assign(3, std::vector<double>(grid.interior(), 0.0));
    const EnergyFunctionals g = energy_functionals(coarse);
    REQUIRE(g.sup_h1_sq == f.sup_h1_sq);
}
