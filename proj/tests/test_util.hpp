#ifndef HOMOWAVE_TEST_UTIL_HPP
#define HOMOWAVE_TEST_UTIL_HPP

#include <string>
#include <vector>

#include "homowave/problem.hpp"

namespace testutil {

inline homowave::ProblemDefinition problem_from(const std::string& toml_text) {
    return homowave::ProblemDefinition::from_table(homowave::toml::Table::parse(toml_text));
}

// criterion-style 1d benchmark: oscillating laminate coefficient,
// time-oscillating drift, y-oscillating noise
inline homowave::ProblemDefinition benchmark_1d() {
    return problem_from(R"TOML(
[problem]
dimension = 1
horizon = 0.5
noise_dim = 1
alpha = 1.0
c1 = 4.0
c2 = 1.0
c3 = 9.0
c4 = 1.0

[coefficients]
a = ["2 + sin(2*pi*y1)"]
f = "sin(2*pi*tau) + v"
g = ["2 + sin(2*pi*y1)"]
u0 = "sin(pi*x1)"
u1 = "0"

[algebra_y]
kind = "periodic"

[algebra_tau]
kind = "periodic"
)TOML");
}

// constant coefficients, (y,tau)-independent nonlinearities with g > 0
inline homowave::ProblemDefinition constant_1d() {
    return problem_from(R"TOML(
[problem]
dimension = 1
horizon = 0.5
noise_dim = 1
alpha = 1.5
c1 = 1.0
c2 = 1.0
c3 = 9.5
c4 = 1.0

[coefficients]
a = ["1.5"]
f = "tanh(v)"
g = ["2 + tanh(v)"]
u0 = "sin(pi*x1)"
u1 = "0"

[algebra_y]
kind = "periodic"

[algebra_tau]
kind = "periodic"
)TOML");
}

inline homowave::ProblemDefinition laminate_2d() {
    return problem_from(R"TOML(
[problem]
dimension = 2
horizon = 0.5
noise_dim = 1
alpha = 1.0
c1 = 1.0
c2 = 1.0
c3 = 1.0
c4 = 1.0

[coefficients]
a = ["2 + sin(2*pi*y1)", "0", "0", "2 + sin(2*pi*y1)"]
f = "0"
g = ["0"]
u0 = "sin(pi*x1)*sin(pi*x2)"
u1 = "0"

[algebra_y]
kind = "periodic"

[algebra_tau]
kind = "periodic"
)TOML");
}

} // namespace testutil

#endif
