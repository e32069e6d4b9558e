#ifndef HOMOWAVE_CG_HPP
#define HOMOWAVE_CG_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "homowave/reduce.hpp"

namespace homowave {

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CgOptions {
    double rel_tol = 1e-10;
    long max_iterations = 10000;
    // Stop immediately with x = 0 when ||b|| is below this absolute floor
    // (a numerically zero right-hand side, e.g. constant-coefficient loads).
    double zero_rhs_floor = 0.0;
    // Re-project the iterate and residual onto zero grid mean every step;
    // required when the operator has the constants as kernel.
    bool project_zero_mean = false;
    // Optional Jacobi preconditioner.
    std::span<const double> diagonal{};
};

struct CgResult {
    long iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

namespace detail {

inline double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline void remove_mean(std::span<double> x) {
    const double m = pairwise_mean(x);
    for (double& v : x) v -= m;
}

} // namespace detail

// Plain preconditioned conjugate gradient; x holds the initial guess on
// entry and the solution on exit. Sequential and deterministic.
template <class Op>
CgResult conjugate_gradient(const Op& apply, std::span<const double> b, std::span<double> x,
                            const CgOptions& opt) {
    const std::size_t n = b.size();
    const double bnorm = std::sqrt(detail::dot(b, b));
    if (bnorm <= opt.zero_rhs_floor) {
        for (double& v : x) v = 0.0;
        return {0, 0.0, true};
    }

    std::vector<double> r(n), p(n), ap(n), z;
    apply(x, std::span<double>(r));
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    if (opt.project_zero_mean) {
        detail::remove_mean(x);
        detail::remove_mean(r);
    }

    const bool precond = !opt.diagonal.empty();
    if (precond) z.resize(n);
    auto apply_precond = [&](std::span<const double> in, std::span<double> out) {
        for (std::size_t i = 0; i < n; ++i) out[i] = in[i] / opt.diagonal[i];
    };

    if (precond)
        apply_precond(r, z);
    double rz = precond ? detail::dot(r, z) : detail::dot(r, r);
    for (std::size_t i = 0; i < n; ++i) p[i] = precond ? z[i] : r[i];

    double rnorm = std::sqrt(detail::dot(r, r));
    CgResult result;
    result.rel_residual = rnorm / bnorm;
    if (result.rel_residual <= opt.rel_tol) {
        result.converged = true;
        return result;
    }

    for (long it = 1; it <= opt.max_iterations; ++it) {
        apply(p, std::span<double>(ap));
        const double pap = detail::dot(p, ap);
        if (!(pap > 0.0))
            throw SolverError("conjugate gradient broke down (operator not positive definite)");
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
        for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * ap[i];
        if (opt.project_zero_mean) {
            detail::remove_mean(x);
            detail::remove_mean(r);
        }
        rnorm = std::sqrt(detail::dot(r, r));
        result.iterations = it;
        result.rel_residual = rnorm / bnorm;
        if (result.rel_residual <= opt.rel_tol) {
            result.converged = true;
            return result;
        }
        double rz_next;
        if (precond) {
            apply_precond(r, z);
            rz_next = detail::dot(r, z);
        } else {
            rz_next = rnorm * rnorm;
        }
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = (precond ? z[i] : r[i]) + beta * p[i];
    }
    return result;
}

} // namespace homowave

#endif
