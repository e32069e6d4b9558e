#ifndef HOMOWAVE_EFFECTIVE_MODEL_HPP
#define HOMOWAVE_EFFECTIVE_MODEL_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "homowave/mean_value.hpp"
#include "homowave/problem.hpp"

// Homogenized drift f~(v) = M(f(.,.,v)) and noise g~_k(v) = M(|g_k(.,.,v)|^2)^1/2,
// tabulated on a shared v grid (nested quadrature inside every SPDE step would
// dominate runtime) or evaluated in closed form when f, g do not depend on the
// cell variables at all.

namespace homowave {

class EffectiveModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EffectiveNonlinearity {
    enum class Mode { ClosedFormMean, Tabulated };

    Mode mode = Mode::Tabulated;
    int dim = 1;
    int m = 1;

    // tabulated representation (shared v grid, strictly increasing)
    std::vector<double> v_grid;
    std::vector<double> drift_table;
    std::vector<std::vector<double>> noise_table; // [component][node]

    // closed-form representation: the micro expressions, which are
    // (y,tau)-independent, evaluated through the same path as the micro run
    Expression f_expr;
    std::vector<Expression> g_expr;

    EffectiveNonlinearity() = default;
    EffectiveNonlinearity(const EffectiveNonlinearity& other)
        : mode(other.mode), dim(other.dim), m(other.m), v_grid(other.v_grid),
          drift_table(other.drift_table), noise_table(other.noise_table), f_expr(other.f_expr),
          g_expr(other.g_expr), clamp_warned(other.clamp_warned.load()) {}
    EffectiveNonlinearity& operator=(const EffectiveNonlinearity& other) {
        if (this != &other) {
            mode = other.mode;
            dim = other.dim;
            m = other.m;
            v_grid = other.v_grid;
            drift_table = other.drift_table;
            noise_table = other.noise_table;
            f_expr = other.f_expr;
            g_expr = other.g_expr;
            clamp_warned.store(other.clamp_warned.load());
        }
        return *this;
    }

    mutable std::atomic<bool> clamp_warned{false};

    double drift(double v) const {
        if (mode == Mode::ClosedFormMean) return eval_closed(f_expr, v);
        return interpolate(drift_table, v);
    }

    // g~_k >= 0 by construction (it is a quadratic mean)
    double noise(int k, double v) const {
        if (mode == Mode::ClosedFormMean)
            return std::abs(eval_closed(g_expr[static_cast<std::size_t>(k)], v));
        return interpolate(noise_table[static_cast<std::size_t>(k)], v);
    }

    double v_min() const { return v_grid.front(); }
    double v_max() const { return v_grid.back(); }

private:
    double eval_closed(const Expression& e, double v) const {
        // variable layout y1..yd, tau, v; the cell slots are unused
        double vals[4] = {0.0, 0.0, 0.0, 0.0};
        vals[static_cast<std::size_t>(dim) + 1] = v;
        return e.evaluate(std::span<const double>(vals, static_cast<std::size_t>(dim) + 2));
    }

    double interpolate(const std::vector<double>& table, double v) const {
        if (v <= v_grid.front() || v >= v_grid.back()) {
            if (v < v_grid.front() || v > v_grid.back()) warn_clamp(v);
            return v <= v_grid.front() ? table.front() : table.back();
        }
        const auto it = std::upper_bound(v_grid.begin(), v_grid.end(), v);
        const std::size_t hi = static_cast<std::size_t>(it - v_grid.begin());
        const std::size_t lo = hi - 1;
        const double w = (v - v_grid[lo]) / (v_grid[hi] - v_grid[lo]);
        return table[lo] + w * (table[hi] - table[lo]);
    }

    void warn_clamp(double v) const {
        if (clamp_warned.exchange(true)) return;
        std::fprintf(stderr,
                     "homowave: warning: effective nonlinearity evaluated outside its "
                     "tabulation range (v = %g, range [%g, %g]); clamping\n",
                     v, v_grid.front(), v_grid.back());
    }
};

// Uniform tabulation grid over [-V, V]. V defaults to 4x the sampled max of
// |u1| plus forcing headroom sqrt(c1) (1 + T).
inline std::vector<double> make_v_grid(const ProblemDefinition& pd, int nodes = 513,
                                       double v_max = 0.0) {
    if (nodes < 2) throw EffectiveModelError("v grid needs at least 2 nodes");
    if (v_max <= 0.0) {
        double u1_max = 0.0;
        const int samples = 257;
        std::vector<double> x(static_cast<std::size_t>(pd.dim));
        if (pd.dim == 1) {
            for (int i = 0; i < samples; ++i) {
                x[0] = static_cast<double>(i) / (samples - 1);
                u1_max = std::max(u1_max, std::abs(pd.u1.evaluate(x)));
            }
        } else {
            for (int i = 0; i < samples; ++i)
                for (int j = 0; j < samples; ++j) {
                    x[0] = static_cast<double>(i) / (samples - 1);
                    x[1] = static_cast<double>(j) / (samples - 1);
                    u1_max = std::max(u1_max, std::abs(pd.u1.evaluate(x)));
                }
        }
        v_max = std::max(1.0, 4.0 * u1_max + std::sqrt(pd.c1) * (1.0 + pd.horizon));
    }
    std::vector<double> grid(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i)
        grid[static_cast<std::size_t>(i)] =
            -v_max + 2.0 * v_max * static_cast<double>(i) / (nodes - 1);
    return grid;
}

namespace detail {

// Frequency list of the square of a trig polynomial on the declared list:
// pairwise sums and differences, canonicalized.
inline std::vector<std::vector<double>> squared_frequencies(
    const std::vector<std::vector<double>>& freqs) {
    std::vector<std::vector<double>> out;
    auto canon = [](std::vector<double> f) {
        for (double c : f) {
            if (c > 0.0) break;
            if (c < 0.0) {
                for (double& x : f) x = -x;
                break;
            }
        }
        return f;
    };
    auto push_unique = [&](std::vector<double> f) {
        double norm = 0.0;
        for (double c : f) norm += std::abs(c);
        if (norm < 1e-12) return; // zero mode is the constant term
        f = canon(std::move(f));
        for (const auto& existing : out) {
            double diff = 0.0;
            for (std::size_t k = 0; k < f.size(); ++k) diff += std::abs(existing[k] - f[k]);
            if (diff < 1e-12) return;
        }
        out.push_back(std::move(f));
    };
    for (const auto& f : freqs) push_unique(f);
    for (std::size_t i = 0; i < freqs.size(); ++i)
        for (std::size_t j = i; j < freqs.size(); ++j) {
            std::vector<double> sum(freqs[i].size()), diff(freqs[i].size());
            for (std::size_t k = 0; k < freqs[i].size(); ++k) {
                sum[k] = freqs[i][k] + freqs[j][k];
                diff[k] = freqs[i][k] - freqs[j][k];
            }
            push_unique(std::move(sum));
            if (i != j) push_unique(std::move(diff));
        }
    return out;
}

inline AlgebraTag tag_for_square(const AlgebraTag& tag) {
    if (tag.kind != AlgebraTag::Kind::QuasiPeriodic) return tag;
    return AlgebraTag::quasi_periodic(squared_frequencies(tag.frequencies), tag.dim);
}

} // namespace detail

struct HomogenizeOptions {
    MeanOptions mean;
    int v_nodes = 513;
    double v_max = 0.0; // 0: derive from the problem
};

// f~ component: per grid node the product mean of f(.,.,v). When f does not
// reference the cell variables the exact closed form is kept instead.
inline void homogenize_drift(const ProblemDefinition& pd, EffectiveNonlinearity& eff,
                             const HomogenizeOptions& opt = {}) {
    if (eff.mode == EffectiveNonlinearity::Mode::ClosedFormMean) return;
    eff.drift_table.resize(eff.v_grid.size());
    for (std::size_t i = 0; i < eff.v_grid.size(); ++i) {
        const double v = eff.v_grid[i];
        auto u = [&](std::span<const double> y, double tau) { return pd.eval_f(y, tau, v); };
        const MeanValueResult r = mean_product(u, pd.algebra_y, pd.algebra_tau, opt.mean);
        eff.drift_table[i] = r.value;
    }
}

// g~_k(v) = sqrt(M(|g_k(.,.,v)|^2)); nonnegative by construction.
inline void homogenize_noise(const ProblemDefinition& pd, EffectiveNonlinearity& eff,
                             const HomogenizeOptions& opt = {}) {
    if (eff.mode == EffectiveNonlinearity::Mode::ClosedFormMean) return;
    const AlgebraTag tag_y = detail::tag_for_square(pd.algebra_y);
    const AlgebraTag tag_tau = detail::tag_for_square(pd.algebra_tau);
    eff.noise_table.assign(static_cast<std::size_t>(pd.noise_dim), {});
    for (int k = 0; k < pd.noise_dim; ++k) {
        auto& table = eff.noise_table[static_cast<std::size_t>(k)];
        table.resize(eff.v_grid.size());
        for (std::size_t i = 0; i < eff.v_grid.size(); ++i) {
            const double v = eff.v_grid[i];
            auto u = [&](std::span<const double> y, double tau) {
                const double gv = pd.eval_g(k, y, tau, v);
                return gv * gv;
            };
            const MeanValueResult r = mean_product(u, tag_y, tag_tau, opt.mean);
            if (r.value < -r.estimated_error - 1e-12)
                throw EffectiveModelError("mean of |g|^2 came out negative beyond its error "
                                          "estimate; quadrature breakdown");
            table[i] = std::sqrt(std::max(0.0, r.value));
        }
    }
}

inline EffectiveNonlinearity make_effective_nonlinearity(const ProblemDefinition& pd,
                                                         const HomogenizeOptions& opt = {}) {
    EffectiveNonlinearity eff;
    eff.dim = pd.dim;
    eff.m = pd.noise_dim;
    if (!pd.fg_depend_on_cell_variables()) {
        eff.mode = EffectiveNonlinearity::Mode::ClosedFormMean;
        eff.f_expr = pd.f;
        eff.g_expr = pd.g;
        eff.v_grid = {-1.0, 1.0}; // range bookkeeping only
        return eff;
    }
    eff.mode = EffectiveNonlinearity::Mode::Tabulated;
    eff.v_grid = make_v_grid(pd, opt.v_nodes, opt.v_max);
    homogenize_drift(pd, eff, opt);
    homogenize_noise(pd, eff, opt);
    return eff;
}

struct StructureCheck {
    std::string name;
    double worst = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct StructureReport {
    std::vector<StructureCheck> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    const StructureCheck& check(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return c;
        throw EffectiveModelError("no such structure check: " + name);
    }
};

// Checks that f~ and g~ inherit the growth and Lipschitz structure of f and
// g over sampled pairs (v1, v2). The quadratic mean contracts, so the g~
// Lipschitz constant cannot exceed c4.
inline StructureReport verify_structure(const EffectiveNonlinearity& eff, double c1, double c2,
                                        double c3, double c4, int pair_count = 1000,
                                        double tol = 1e-6) {
    StructureReport report;
    SequenceRng rng(0x5bd1e995u, 3);
    const double lo = eff.v_min(), hi = eff.v_max();

    double lip_f = 0.0, grow_f = 0.0, grow_g = 0.0;
    std::vector<double> lip_g(static_cast<std::size_t>(eff.m), 0.0);
    for (int s = 0; s < pair_count; ++s) {
        const double v1 = rng.next_uniform(lo, hi);
        const double v2 = rng.next_uniform(lo, hi);
        grow_f = std::max(grow_f, eff.drift(v1) * eff.drift(v1) / (1.0 + v1 * v1));
        double g2 = 0.0;
        for (int k = 0; k < eff.m; ++k) {
            const double gv = eff.noise(k, v1);
            g2 += gv * gv;
        }
        grow_g = std::max(grow_g, g2 / (1.0 + v1 * v1));
        if (std::abs(v1 - v2) < 1e-9) continue;
        lip_f = std::max(lip_f, std::abs(eff.drift(v1) - eff.drift(v2)) / std::abs(v1 - v2));
        for (int k = 0; k < eff.m; ++k)
            lip_g[static_cast<std::size_t>(k)] =
                std::max(lip_g[static_cast<std::size_t>(k)],
                         std::abs(eff.noise(k, v1) - eff.noise(k, v2)) / std::abs(v1 - v2));
    }

    report.checks.push_back({"growth_f", grow_f, c1, grow_f <= c1 + tol});
    report.checks.push_back({"lipschitz_f", lip_f, c2, lip_f <= c2 + tol});
    report.checks.push_back({"growth_g", grow_g, c3, grow_g <= c3 + tol});
    double lip_g_worst = 0.0;
    for (double l : lip_g) lip_g_worst = std::max(lip_g_worst, l);
    report.checks.push_back({"lipschitz_g", lip_g_worst, c4, lip_g_worst <= c4 + tol});

    // nonnegativity of every tabulated g~ node
    double g_min = 0.0;
    if (eff.mode == EffectiveNonlinearity::Mode::Tabulated)
        for (const auto& table : eff.noise_table)
            for (double v : table) g_min = std::min(g_min, v);
    report.checks.push_back({"noise_nonnegative", g_min, 0.0, g_min >= 0.0});
    return report;
}

} // namespace homowave

#endif
