#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "homowave/effective_model.hpp"
#include "test_util.hpp"

using namespace homowave;
using Catch::Approx;

namespace {

ProblemDefinition drift_problem(const std::string& f_expr) {
    return testutil::problem_from(R"TOML(
[problem]
dimension = 1
horizon = 1.0
alpha = 1.0
c1 = 16.0
c2 = 3.0
c3 = 16.0
c4 = 3.0
[coefficients]
a = ["1"]
f = ")TOML" + f_expr + R"TOML("
g = ["0"]
u0 = "0"
u1 = "sin(pi*x1)"
)TOML");
}

ProblemDefinition noise_problem(const std::string& g_expr) {
    return testutil::problem_from(R"TOML(
[problem]
dimension = 1
horizon = 1.0
alpha = 1.0
c1 = 16.0
c2 = 3.0
c3 = 16.0
c4 = 3.0
[coefficients]
a = ["1"]
f = "0"
g = [")TOML" + g_expr + R"TOML("]
u0 = "0"
u1 = "sin(pi*x1)"
)TOML");
}

} // namespace

TEST_CASE("homogenized drift of the reference nonlinearities", "[effective]") {
    // f = sin(2 pi tau) + v -> f~(v) = v
    {
        const ProblemDefinition pd = drift_problem("sin(2*pi*tau) + v");
        const EffectiveNonlinearity eff = make_effective_nonlinearity(pd);
        REQUIRE(eff.mode == EffectiveNonlinearity::Mode::Tabulated);
        for (double v : {-3.0, -0.7, 0.0, 1.3, 4.0})
            REQUIRE(eff.drift(v) == Approx(v).margin(1e-10));
    }
    // f = cos(2 pi y1) v -> f~ = 0
    {
        const EffectiveNonlinearity eff =
            make_effective_nonlinearity(drift_problem("cos(2*pi*y1)*v"));
        for (double v : {-2.0, 0.5, 3.0}) REQUIRE(eff.drift(v) == Approx(0.0).margin(1e-10));
    }
    // f = (2 + sin(2 pi y1)) v -> f~(v) = 2v
    {
        const EffectiveNonlinearity eff =
            make_effective_nonlinearity(drift_problem("(2 + sin(2*pi*y1))*v"));
        for (double v : {-2.0, 0.5, 3.0}) REQUIRE(eff.drift(v) == Approx(2.0 * v).margin(1e-9));
    }
}

TEST_CASE("homogenized noise is the quadratic mean", "[effective]") {
    // g = v -> g~(v) = |v| (the quadratic mean loses the sign)
    {
        const EffectiveNonlinearity eff = make_effective_nonlinearity(noise_problem("v"));
        REQUIRE(eff.mode == EffectiveNonlinearity::Mode::ClosedFormMean);
        REQUIRE(eff.noise(0, -2.5) == 2.5);
        REQUIRE(eff.noise(0, 1.25) == 1.25);
    }
    // g = 2 + sin(2 pi y1) -> g~ = sqrt(4.5)
    {
        const EffectiveNonlinearity eff =
            make_effective_nonlinearity(noise_problem("2 + sin(2*pi*y1)"));
        for (double v : {-1.0, 0.0, 2.0})
            REQUIRE(eff.noise(0, v) == Approx(std::sqrt(4.5)).margin(1e-8));
    }
    // g = 0 -> g~ = 0
    {
        const EffectiveNonlinearity eff = make_effective_nonlinearity(noise_problem("0"));
        REQUIRE(eff.noise(0, 1.0) == 0.0);
    }
}

TEST_CASE("quadratic means stay nonnegative on the grid", "[effective]") {
    const EffectiveNonlinearity eff =
        make_effective_nonlinearity(noise_problem("sin(2*pi*y1)*tanh(v)"));
    REQUIRE(eff.mode == EffectiveNonlinearity::Mode::Tabulated);
    for (double g : eff.noise_table[0]) REQUIRE(g >= 0.0);
    // sqrt(M(sin^2)) |tanh(v)| = |tanh(v)|/sqrt(2)
    REQUIRE(eff.noise(0, 1.0) == Approx(std::tanh(1.0) / std::sqrt(2.0)).margin(1e-8));
}

TEST_CASE("closed-form mode keeps (y,tau)-independent nonlinearities exact", "[effective]") {
    const ProblemDefinition pd = testutil::constant_1d();
    const EffectiveNonlinearity eff = make_effective_nonlinearity(pd);
    REQUIRE(eff.mode == EffectiveNonlinearity::Mode::ClosedFormMean);
    for (double v : {-4.0, -0.5, 0.0, 0.5, 4.0}) {
        const double y[1] = {0.0};
        REQUIRE(eff.drift(v) == pd.eval_f(y, 0.0, v));
        REQUIRE(eff.noise(0, v) == pd.eval_g(0, y, 0.0, v));
    }
}

TEST_CASE("evaluation outside the grid clamps", "[effective]") {
    const EffectiveNonlinearity eff =
        make_effective_nonlinearity(drift_problem("sin(2*pi*tau) + v"));
    const double vmax = eff.v_max();
    REQUIRE(eff.drift(vmax + 100.0) == eff.drift(vmax));
    REQUIRE(eff.drift(eff.v_min() - 100.0) == eff.drift(eff.v_min()));
}

TEST_CASE("tabulation grid is strictly increasing and covers the range", "[effective]") {
    const ProblemDefinition pd = testutil::benchmark_1d();
    const EffectiveNonlinearity eff = make_effective_nonlinearity(pd);
    REQUIRE(eff.v_grid.size() == 513);
    for (std::size_t i = 1; i < eff.v_grid.size(); ++i)
        REQUIRE(eff.v_grid[i] > eff.v_grid[i - 1]);
    // range: 4 max|u1| + sqrt(c1)(1+T); u1 = 0 here
    REQUIRE(eff.v_max() >= std::sqrt(pd.c1) * (1.0 + pd.horizon));
}

TEST_CASE("structure verification reports inherited constants", "[effective]") {
    // f~(v) = v against c2 = 1: worst ratio 1, pass
    {
        ProblemDefinition pd = drift_problem("sin(2*pi*tau) + v");
        pd.c2 = 1.0;
        const EffectiveNonlinearity eff = make_effective_nonlinearity(pd);
        const StructureReport report = verify_structure(eff, pd.c1, pd.c2, pd.c3, pd.c4);
        REQUIRE(report.check("lipschitz_f").pass);
        REQUIRE(report.check("lipschitz_f").worst == Approx(1.0).margin(1e-6));
    }
    // constant g~: worst ratio 0
    {
        const EffectiveNonlinearity eff =
            make_effective_nonlinearity(noise_problem("2 + sin(2*pi*y1)"));
        const StructureReport report = verify_structure(eff, 16.0, 3.0, 16.0, 3.0);
        REQUIRE(report.check("lipschitz_g").pass);
        REQUIRE(report.check("lipschitz_g").worst <= 1e-7);
        REQUIRE(report.check("noise_nonnegative").pass);
    }
    // deliberate violation: f~(v) = 2v against declared c2 = 1
    {
        ProblemDefinition pd = drift_problem("(2 + sin(2*pi*y1))*v");
        const EffectiveNonlinearity eff = make_effective_nonlinearity(pd);
        const StructureReport report = verify_structure(eff, 16.0, 1.0, 16.0, 3.0);
        REQUIRE_FALSE(report.check("lipschitz_f").pass);
        REQUIRE(report.check("lipschitz_f").worst == Approx(2.0).margin(1e-6));
    }
}

TEST_CASE("Lipschitz and growth inheritance over sampled pairs", "[effective]") {
    const ProblemDefinition pd = testutil::benchmark_1d();
    const EffectiveNonlinearity eff = make_effective_nonlinearity(pd);
    const StructureReport report = verify_structure(eff, pd.c1, pd.c2, pd.c3, pd.c4, 1000, 1e-6);
    REQUIRE(report.check("lipschitz_f").worst <= pd.c2 + 1e-6);
    REQUIRE(report.check("lipschitz_g").worst <= pd.c4 + 1e-6);
    REQUIRE(report.check("growth_f").worst <= pd.c1 * (1.0 + 1e-6));
    REQUIRE(report.check("growth_g").worst <= pd.c3 * (1.0 + 1e-6));
}

TEST_CASE("quasi-periodic noise squares expand their frequency list", "[effective]") {
    // g(y, v) = cos(y) + cos(sqrt(2) y): M(g^2) = 1 (each mode carries 1/2)
    const ProblemDefinition pd = testutil::problem_from(R"TOML(
[problem]
dimension = 1
horizon = 1.0
alpha = 1.0
c1 = 16.0
c3 = 16.0
[coefficients]
a = ["1"]
f = "0"
g = ["cos(y1) + cos(1.4142135623730951*y1)"]
u0 = "0"
u1 = "sin(pi*x1)"
[algebra_y]
kind = "quasiperiodic"
frequencies = [[1.0], [1.4142135623730951]]
)TOML");
    const EffectiveNonlinearity eff = make_effective_nonlinearity(pd);
    REQUIRE(eff.noise(0, 0.3) == Approx(1.0).margin(1e-6));
}
