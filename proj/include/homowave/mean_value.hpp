#ifndef HOMOWAVE_MEAN_VALUE_HPP
#define HOMOWAVE_MEAN_VALUE_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "homowave/reduce.hpp"
#include "homowave/rng.hpp"

// Mean values M(u) for the supported algebras with mean value, and the
// iterated mean on product algebras. This is the single analytic primitive
// behind the effective drift, noise and tensor.

namespace homowave {

class MeanValueError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AlgebraTag {
    enum class Kind { Periodic, QuasiPeriodic, LimitAtInfinity };

    Kind kind = Kind::Periodic;
    int dim = 1;
    // QuasiPeriodic: declared frequency vectors of the trig-polynomial inputs.
    std::vector<std::vector<double>> frequencies;
    // LimitAtInfinity: either a declared limit or extrapolation from radius R0.
    bool has_declared_limit = false;
    double declared_limit = 0.0;
    double extrapolation_radius = 8.0;

    static AlgebraTag periodic(int dim = 1) {
        AlgebraTag t;
        t.kind = Kind::Periodic;
        t.dim = dim;
        return t;
    }

    static AlgebraTag quasi_periodic(std::vector<std::vector<double>> freqs, int dim = 1) {
        AlgebraTag t;
        t.kind = Kind::QuasiPeriodic;
        t.dim = dim;
        t.frequencies = std::move(freqs);
        int zero_count = 0;
        for (std::size_t i = 0; i < t.frequencies.size(); ++i) {
            if (static_cast<int>(t.frequencies[i].size()) != dim)
                throw MeanValueError("frequency vector dimension mismatch");
            double norm = 0.0;
            for (double c : t.frequencies[i]) norm += c * c;
            if (norm == 0.0) ++zero_count;
            for (std::size_t j = i + 1; j < t.frequencies.size(); ++j) {
                double diff = 0.0;
                for (int k = 0; k < dim; ++k)
                    diff = std::max(diff, std::abs(t.frequencies[i][static_cast<std::size_t>(k)] -
                                                   t.frequencies[j][static_cast<std::size_t>(k)]));
                if (diff == 0.0) throw MeanValueError("duplicate frequency vector");
            }
        }
        if (zero_count > 1) throw MeanValueError("zero frequency listed more than once");
        return t;
    }

    static AlgebraTag limit_declared(double limit) {
        AlgebraTag t;
        t.kind = Kind::LimitAtInfinity;
        t.has_declared_limit = true;
        t.declared_limit = limit;
        return t;
    }

    static AlgebraTag limit_extrapolate(double radius) {
        if (!(radius > 0.0)) throw MeanValueError("extrapolation radius must be positive");
        AlgebraTag t;
        t.kind = Kind::LimitAtInfinity;
        t.has_declared_limit = false;
        t.extrapolation_radius = radius;
        return t;
    }
};

struct MeanValueResult {
    double value = 0.0;
    double estimated_error = 0.0;
    enum class Method { Quadrature, ZeroFrequency, Limit } method = Method::Quadrature;
};

struct MeanOptions {
    int periodic_order_1d = 256;
    int periodic_order_2d = 128;
    double limit_tolerance = 1e-6;     // extrapolation spread gate
    double trig_fit_tolerance = 1e-7;  // residual gate for quasi-periodic fits

    int periodic_order(int dim) const { return dim >= 2 ? periodic_order_2d : periodic_order_1d; }
};

namespace detail {

// Composite midpoint sum over [0,1]^k with order nodes per axis.
template <class F>
double midpoint_average(F&& u, int dim, int order) {
    const std::size_t n = static_cast<std::size_t>(order);
    std::vector<double> values;
    if (dim == 1) {
        values.resize(n);
        double y[1];
        for (std::size_t i = 0; i < n; ++i) {
            y[0] = (static_cast<double>(i) + 0.5) / static_cast<double>(order);
            values[i] = u(std::span<const double>(y, 1));
        }
    } else {
        values.resize(n * n);
        double y[2];
        for (std::size_t i = 0; i < n; ++i) {
            y[0] = (static_cast<double>(i) + 0.5) / static_cast<double>(order);
            for (std::size_t j = 0; j < n; ++j) {
                y[1] = (static_cast<double>(j) + 0.5) / static_cast<double>(order);
                values[i * n + j] = u(std::span<const double>(y, 2));
            }
        }
    }
    return pairwise_mean(values);
}

} // namespace detail

// Mean of a unit-periodic function by the composite midpoint rule with
// order^k nodes; spectrally accurate for smooth periodic integrands. The
// error estimate is the Richardson comparison against order/2.
template <class F>
MeanValueResult mean_periodic(F&& u, int dim, int order) {
    if (dim < 1 || dim > 2) throw MeanValueError("periodic mean supports dim 1 or 2");
    if (order < 1) throw MeanValueError("quadrature order must be positive");
    MeanValueResult r;
    r.method = MeanValueResult::Method::Quadrature;
    r.value = detail::midpoint_average(u, dim, order);
    if (order >= 2) {
        const double coarse = detail::midpoint_average(u, dim, order / 2);
        r.estimated_error = std::abs(r.value - coarse);
    }
    return r;
}

// Explicit trig polynomial c0 + sum_k (a_k cos(l_k . y) + b_k sin(l_k . y)).
struct TrigMode {
    std::vector<double> frequency;
    double cos_coeff = 0.0;
    double sin_coeff = 0.0;
};

struct TrigPolynomial {
    int dim = 1;
    double constant = 0.0;
    std::vector<TrigMode> modes;

    double evaluate(std::span<const double> y) const {
        double s = constant;
        for (const TrigMode& m : modes) {
            double phase = 0.0;
            for (int k = 0; k < dim; ++k)
                phase += m.frequency[static_cast<std::size_t>(k)] * y[static_cast<std::size_t>(k)];
            s += m.cos_coeff * std::cos(phase) + m.sin_coeff * std::sin(phase);
        }
        return s;
    }
};

// The Bohr mean of any nonzero-frequency mode is zero, so the mean of a
// trig polynomial is its zero-frequency content, exactly.
inline MeanValueResult mean_quasiperiodic(const TrigPolynomial& p) {
    MeanValueResult r;
    r.method = MeanValueResult::Method::ZeroFrequency;
    r.value = p.constant;
    for (const TrigMode& m : p.modes) {
        double norm = 0.0;
        for (double c : m.frequency) norm += c * c;
        if (norm == 0.0) r.value += m.cos_coeff;
    }
    r.estimated_error = 0.0;
    return r;
}

// Least-squares fit of an evaluable onto the declared trig-polynomial form.
// Rejects (throws) when the residual exceeds tol: inputs outside the declared
// form are not approximated, because the truncation error of a ball average
// is uncontrollable without frequency information.
template <class F>
TrigPolynomial fit_trig_polynomial(F&& u, const std::vector<std::vector<double>>& freqs, int dim,
                                   double tol) {
    std::vector<std::vector<double>> nonzero;
    for (const auto& f : freqs) {
        double norm = 0.0;
        for (double c : f) norm += c * c;
        if (norm > 0.0) nonzero.push_back(f);
    }
    const std::size_t k = nonzero.size();
    const std::size_t cols = 1 + 2 * k;

    const std::size_t rows = std::max<std::size_t>(64, 8 * cols);
    SequenceRng rng(0x7f4a7c15u, 11);
    const double box = 16.0;
    std::vector<double> design(rows * cols);
    std::vector<double> rhs(rows);
    std::vector<std::vector<double>> points(rows, std::vector<double>(static_cast<std::size_t>(dim)));
    for (std::size_t r = 0; r < rows; ++r) {
        for (int d = 0; d < dim; ++d)
            points[r][static_cast<std::size_t>(d)] = rng.next_uniform(-box, box);
        design[r * cols] = 1.0;
        for (std::size_t j = 0; j < k; ++j) {
            double phase = 0.0;
            for (int d = 0; d < dim; ++d)
                phase += nonzero[j][static_cast<std::size_t>(d)] *
                         points[r][static_cast<std::size_t>(d)];
            design[r * cols + 1 + 2 * j] = std::cos(phase);
            design[r * cols + 2 + 2 * j] = std::sin(phase);
        }
        rhs[r] = u(std::span<const double>(points[r].data(), static_cast<std::size_t>(dim)));
    }

    // normal equations, Cholesky-free: plain Gaussian elimination with
    // partial pivoting on the (small) cols x cols system
    std::vector<double> ata(cols * cols, 0.0);
    std::vector<double> atb(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < cols; ++i) {
            atb[i] += design[r * cols + i] * rhs[r];
            for (std::size_t j = 0; j < cols; ++j)
                ata[i * cols + j] += design[r * cols + i] * design[r * cols + j];
        }
    }
    std::vector<double> coef = atb;
    {
        std::vector<double> m = ata;
        std::vector<std::size_t> perm(cols);
        for (std::size_t i = 0; i < cols; ++i) perm[i] = i;
        for (std::size_t c = 0; c < cols; ++c) {
            std::size_t piv = c;
            for (std::size_t r = c + 1; r < cols; ++r)
                if (std::abs(m[r * cols + c]) > std::abs(m[piv * cols + c])) piv = r;
            if (std::abs(m[piv * cols + c]) < 1e-12)
                throw MeanValueError("trig-polynomial fit is singular; check the frequency list");
            if (piv != c) {
                for (std::size_t j = 0; j < cols; ++j) std::swap(m[piv * cols + j], m[c * cols + j]);
                std::swap(coef[piv], coef[c]);
            }
            for (std::size_t r = c + 1; r < cols; ++r) {
                const double factor = m[r * cols + c] / m[c * cols + c];
                for (std::size_t j = c; j < cols; ++j) m[r * cols + j] -= factor * m[c * cols + j];
                coef[r] -= factor * coef[c];
            }
        }
        for (std::size_t c = cols; c-- > 0;) {
            for (std::size_t j = c + 1; j < cols; ++j) coef[c] -= m[c * cols + j] * coef[j];
            coef[c] /= m[c * cols + c];
        }
    }

    TrigPolynomial p;
    p.dim = dim;
    p.constant = coef[0];
    for (std::size_t j = 0; j < k; ++j) {
        TrigMode m;
        m.frequency = nonzero[j];
        m.cos_coeff = coef[1 + 2 * j];
        m.sin_coeff = coef[2 + 2 * j];
        p.modes.push_back(std::move(m));
    }

    double residual = 0.0;
    double scale = 1.0;
    for (std::size_t r = 0; r < rows; ++r) {
        residual = std::max(residual, std::abs(rhs[r] - p.evaluate(std::span<const double>(
                                                            points[r].data(),
                                                            static_cast<std::size_t>(dim)))));
        scale = std::max(scale, std::abs(rhs[r]));
    }
    if (residual > tol * scale)
        throw MeanValueError(
            "input is not a trig polynomial on the declared frequencies (residual " +
            std::to_string(residual) + ")");
    return p;
}

// M(u) = L for a function with a limit at infinity: the Cesaro average over
// expanding balls of such a function converges to its limit. In extrapolate
// mode L is the average of u at +-R0, +-2R0, +-4R0, gated on their spread.
template <class F>
MeanValueResult mean_limit_at_infinity(F&& u, const AlgebraTag& tag, double tol = 1e-6) {
    if (tag.kind != AlgebraTag::Kind::LimitAtInfinity)
        throw MeanValueError("tag is not limit-at-infinity");
    MeanValueResult r;
    r.method = MeanValueResult::Method::Limit;
    if (tag.has_declared_limit) {
        r.value = tag.declared_limit;
        r.estimated_error = 0.0;
        return r;
    }
    const double r0 = tag.extrapolation_radius;
    double samples[6];
    double lo = 0.0, hi = 0.0;
    for (int j = 0; j < 3; ++j) {
        const double radius = r0 * static_cast<double>(1 << j);
        double point[1] = {radius};
        samples[2 * j] = u(std::span<const double>(point, 1));
        point[0] = -radius;
        samples[2 * j + 1] = u(std::span<const double>(point, 1));
    }
    lo = hi = samples[0];
    for (double s : samples) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    if (hi - lo > tol)
        throw MeanValueError("limit extrapolation did not converge (spread " +
                             std::to_string(hi - lo) + " > tolerance)");
    r.value = pairwise_mean(std::span<const double>(samples, 6));
    r.estimated_error = 0.0;
    return r;
}

// Single-algebra dispatch for an evaluable u on R^k.
template <class F>
MeanValueResult mean_value(F&& u, const AlgebraTag& tag, const MeanOptions& opt = {}) {
    switch (tag.kind) {
        case AlgebraTag::Kind::Periodic:
            return mean_periodic(u, tag.dim, opt.periodic_order(tag.dim));
        case AlgebraTag::Kind::QuasiPeriodic:
            return mean_quasiperiodic(
                fit_trig_polynomial(u, tag.frequencies, tag.dim, opt.trig_fit_tolerance));
        case AlgebraTag::Kind::LimitAtInfinity:
            return mean_limit_at_infinity(u, tag, opt.limit_tolerance);
    }
    throw MeanValueError("unknown algebra tag");
}

// Iterated mean on the product algebra A_y (.) A_tau: the tau-mean applied
// pointwise at each y node, then the y-mean; error estimates add.
template <class F>
MeanValueResult mean_product(F&& u, const AlgebraTag& tag_y, const AlgebraTag& tag_tau,
                             const MeanOptions& opt = {}) {
    double worst_inner = 0.0;
    auto outer = [&](std::span<const double> y) {
        auto slice = [&](std::span<const double> tau) { return u(y, tau[0]); };
        const MeanValueResult inner = mean_value(slice, tag_tau, opt);
        worst_inner = std::max(worst_inner, inner.estimated_error);
        return inner.value;
    };
    MeanValueResult r = mean_value(outer, tag_y, opt);
    r.estimated_error += worst_inner;
    return r;
}

} // namespace homowave

#endif
