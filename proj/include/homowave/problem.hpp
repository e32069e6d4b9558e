#ifndef HOMOWAVE_PROBLEM_HPP
#define HOMOWAVE_PROBLEM_HPP

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "homowave/expr.hpp"
#include "homowave/mean_value.hpp"
#include "homowave/rng.hpp"
#include "homowave/tensor.hpp"
#include "homowave/toml_lite.hpp"

namespace homowave {

class ProblemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A validated micro problem: coefficient matrix a(x,y), drift f(y,tau,v),
// noise g_k(y,tau,v), initial data, algebra tags and the declared constants
// of the growth/Lipschitz/ellipticity assumptions.
struct ProblemDefinition {
    int dim = 1;          // spatial dimension, 1 or 2
    double horizon = 1.0; // T
    int noise_dim = 1;    // m

    double alpha = 1.0;
    double c1 = 1.0, c2 = 1.0, c3 = 1.0, c4 = 1.0;

    std::vector<Expression> a; // row-major dim*dim, variables x1..xd, y1..yd
    Expression f;              // variables y1..yd, tau, v
    std::vector<Expression> g; // noise components, same variables as f
    Expression u0;             // variables x1..xd
    Expression u1;

    AlgebraTag algebra_y = AlgebraTag::periodic(1);
    AlgebraTag algebra_tau = AlgebraTag::periodic(1);

    const Expression& a_entry(int i, int j) const {
        return a[static_cast<std::size_t>(i * dim + j)];
    }

    // Evaluates the (symmetrized) coefficient tensor at (x, y).
    SymTensor eval_a(std::span<const double> x, std::span<const double> y) const {
        std::vector<double> vals(static_cast<std::size_t>(2 * dim));
        for (int k = 0; k < dim; ++k) {
            vals[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(k)];
            vals[static_cast<std::size_t>(dim + k)] = y[static_cast<std::size_t>(k)];
        }
        SymTensor t;
        t.dim = dim;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) t(i, j) = a_entry(i, j).evaluate(vals);
        return t;
    }

    double eval_f(std::span<const double> y, double tau, double v) const {
        std::vector<double> vals(static_cast<std::size_t>(dim + 2));
        for (int k = 0; k < dim; ++k) vals[static_cast<std::size_t>(k)] = y[static_cast<std::size_t>(k)];
        vals[static_cast<std::size_t>(dim)] = tau;
        vals[static_cast<std::size_t>(dim + 1)] = v;
        return f.evaluate(vals);
    }

    double eval_g(int k, std::span<const double> y, double tau, double v) const {
        std::vector<double> vals(static_cast<std::size_t>(dim + 2));
        for (int i = 0; i < dim; ++i) vals[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)];
        vals[static_cast<std::size_t>(dim)] = tau;
        vals[static_cast<std::size_t>(dim + 1)] = v;
        return g[static_cast<std::size_t>(k)].evaluate(vals);
    }

    bool a_depends_on_x() const {
        for (int k = 0; k < dim; ++k) {
            const std::string name = "x" + std::to_string(k + 1);
            for (const Expression& e : a)
                if (e.uses_variable(name)) return true;
        }
        return false;
    }

    bool fg_depend_on_cell_variables() const {
        std::vector<std::string> names;
        for (int k = 0; k < dim; ++k) names.push_back("y" + std::to_string(k + 1));
        names.emplace_back("tau");
        for (const auto& n : names) {
            if (f.uses_variable(n)) return true;
            for (const Expression& e : g)
                if (e.uses_variable(n)) return true;
        }
        return false;
    }

    static std::vector<std::string> coeff_vars(int dim) {
        std::vector<std::string> v;
        for (int k = 0; k < dim; ++k) v.push_back("x" + std::to_string(k + 1));
        for (int k = 0; k < dim; ++k) v.push_back("y" + std::to_string(k + 1));
        return v;
    }

    static std::vector<std::string> nonlinearity_vars(int dim) {
        std::vector<std::string> v;
        for (int k = 0; k < dim; ++k) v.push_back("y" + std::to_string(k + 1));
        v.emplace_back("tau");
        v.emplace_back("v");
        return v;
    }

    static std::vector<std::string> initial_vars(int dim) {
        std::vector<std::string> v;
        for (int k = 0; k < dim; ++k) v.push_back("x" + std::to_string(k + 1));
        return v;
    }

    static ProblemDefinition from_table(const toml::Table& t);
    static ProblemDefinition load(const std::string& path) {
        return from_table(toml::Table::parse_file(path));
    }
};

namespace detail {

inline AlgebraTag algebra_from_table(const toml::Table& t, const std::string& section, int dim) {
    const std::string kind = t.get_string(section + ".kind", "periodic");
    if (kind == "periodic") return AlgebraTag::periodic(dim);
    if (kind == "quasiperiodic") {
        std::vector<std::vector<double>> freqs;
        for (const toml::Value& row : t.get_array(section + ".frequencies")) {
            if (row.kind == toml::Value::Kind::Number) {
                freqs.push_back({row.number});
            } else if (row.kind == toml::Value::Kind::Array) {
                std::vector<double> f;
                for (const toml::Value& c : row.array) f.push_back(c.number);
                freqs.push_back(std::move(f));
            } else {
                throw ProblemError(section + ".frequencies: expected numeric rows");
            }
        }
        return AlgebraTag::quasi_periodic(std::move(freqs), dim);
    }
    if (kind == "limit_at_infinity") {
        if (t.has(section + ".limit")) return AlgebraTag::limit_declared(t.get_double(section + ".limit"));
        return AlgebraTag::limit_extrapolate(t.get_double(section + ".radius", 8.0));
    }
    throw ProblemError(section + ".kind: unsupported algebra \"" + kind + "\"");
}

} // namespace detail

inline ProblemDefinition ProblemDefinition::from_table(const toml::Table& t) {
    ProblemDefinition pd;
    pd.dim = static_cast<int>(t.get_int("problem.dimension"));
    if (pd.dim != 1 && pd.dim != 2) throw ProblemError("problem.dimension must be 1 or 2");
    pd.horizon = t.get_double("problem.horizon");
    if (!(pd.horizon > 0.0)) throw ProblemError("problem.horizon must be positive");
    pd.noise_dim = static_cast<int>(t.get_int("problem.noise_dim", 1));
    if (pd.noise_dim < 1) throw ProblemError("problem.noise_dim must be >= 1");
    pd.alpha = t.get_double("problem.alpha");
    if (!(pd.alpha > 0.0)) throw ProblemError("problem.alpha must be positive");
    pd.c1 = t.get_double("problem.c1", 1.0);
    pd.c2 = t.get_double("problem.c2", 1.0);
    pd.c3 = t.get_double("problem.c3", 1.0);
    pd.c4 = t.get_double("problem.c4", 1.0);
    if (!(pd.c1 > 0.0 && pd.c2 > 0.0 && pd.c3 > 0.0 && pd.c4 > 0.0))
        throw ProblemError("constants c1..c4 must be positive");

    const auto cvars = coeff_vars(pd.dim);
    const auto nvars = nonlinearity_vars(pd.dim);
    const auto ivars = initial_vars(pd.dim);

    const std::vector<std::string> a_src = t.string_array("coefficients.a");
    if (a_src.size() != static_cast<std::size_t>(pd.dim * pd.dim))
        throw ProblemError("coefficients.a must list dim*dim entries (row-major)");
    for (const std::string& s : a_src) pd.a.push_back(Expression::parse(s, cvars));

    pd.f = Expression::parse(t.get_string("coefficients.f"), nvars);
    for (const std::string& s : t.string_array("coefficients.g"))
        pd.g.push_back(Expression::parse(s, nvars));
    if (pd.g.size() != static_cast<std::size_t>(pd.noise_dim))
        throw ProblemError("coefficients.g must list noise_dim entries");

    pd.u0 = Expression::parse(t.get_string("coefficients.u0"), ivars);
    pd.u1 = Expression::parse(t.get_string("coefficients.u1"), ivars);

    pd.algebra_y = detail::algebra_from_table(t, "algebra_y", pd.dim);
    pd.algebra_tau = detail::algebra_from_table(t, "algebra_tau", 1);
    return pd;
}

struct ValidationCheck {
    std::string name;
    bool pass = false;
    double observed = 0.0; // worst constant seen
    double limit = 0.0;    // declared bound (with slack applied at comparison)
    std::string note;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }

    const ValidationCheck& check(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return c;
        throw ProblemError("no such validation check: " + name);
    }
};

struct ValidationOptions {
    double symmetry_tol = 1e-9;
    double ellipticity_slack = 1e-6;
    double constant_slack = 1e-9; // slack on growth/Lipschitz constants
    std::uint64_t seed = 0x62d9a1f3c0ffee01ULL; // fixed; reproducible reports
};

// Samples the (A1)/(A2) bounds at 10*sample_count pseudo-random points of
// [0,1]^d x [0,1] x [-10,10] and reports pass/fail with the worst observed
// constants. Sampling can only falsify the almost-everywhere bounds, never
// prove them.
inline ValidationReport validate_problem(const ProblemDefinition& pd, int sample_count = 256,
                                         const ValidationOptions& opt = {}) {
    if (sample_count < 100) throw ProblemError("sample_count must be at least 100");
    const int n = 10 * sample_count;
    ValidationReport report;

    auto sample_point = [&](SequenceRng& rng, std::vector<double>& x, std::vector<double>& y) {
        for (int k = 0; k < pd.dim; ++k) {
            x[static_cast<std::size_t>(k)] = rng.next_uniform01();
            y[static_cast<std::size_t>(k)] = rng.next_uniform01();
        }
    };

    // symmetry of a
    {
        ValidationCheck c;
        c.name = "symmetry";
        c.limit = opt.symmetry_tol;
        double worst = 0.0;
        if (pd.dim > 1) {
            SequenceRng rng(opt.seed, 1);
            std::vector<double> x(static_cast<std::size_t>(pd.dim)), y(static_cast<std::size_t>(pd.dim));
            for (int s = 0; s < n; ++s) {
                sample_point(rng, x, y);
                SymTensor t = pd.eval_a(x, y);
                worst = std::max(worst, t.max_asymmetry());
            }
        }
        c.observed = worst;
        c.pass = worst <= opt.symmetry_tol;
        report.checks.push_back(c);
    }

    // ellipticity: min over samples of (a xi . xi)/|xi|^2 >= alpha - slack
    {
        ValidationCheck c;
        c.name = "ellipticity";
        c.limit = pd.alpha;
        SequenceRng rng(opt.seed, 2);
        std::vector<double> x(static_cast<std::size_t>(pd.dim)), y(static_cast<std::size_t>(pd.dim));
        std::vector<double> xi(static_cast<std::size_t>(pd.dim));
        double worst = std::numeric_limits<double>::infinity();
        for (int s = 0; s < n; ++s) {
            sample_point(rng, x, y);
            double norm2 = 0.0;
            for (int k = 0; k < pd.dim; ++k) {
                xi[static_cast<std::size_t>(k)] = rng.next_uniform(-1.0, 1.0);
                norm2 += xi[static_cast<std::size_t>(k)] * xi[static_cast<std::size_t>(k)];
            }
            if (norm2 < 1e-12) continue;
            SymTensor t = pd.eval_a(x, y);
            t.symmetrize();
            worst = std::min(worst, t.quad(xi) / norm2);
        }
        c.observed = worst;
        c.pass = worst >= pd.alpha - opt.ellipticity_slack;
        c.note = "worst ratio (a xi.xi)/|xi|^2";
        report.checks.push_back(c);
    }

    // growth and Lipschitz bounds of f and g
    auto growth_check = [&](const std::string& name, std::uint64_t stream, double bound,
                            auto&& value_norm2) {
        ValidationCheck c;
        c.name = name;
        c.limit = bound;
        SequenceRng rng(opt.seed, stream);
        std::vector<double> x(static_cast<std::size_t>(pd.dim)), y(static_cast<std::size_t>(pd.dim));
        double worst = 0.0;
        for (int s = 0; s < n; ++s) {
            sample_point(rng, x, y);
            const double tau = rng.next_uniform01();
            const double v = rng.next_uniform(-10.0, 10.0);
            worst = std::max(worst, value_norm2(y, tau, v) / (1.0 + v * v));
        }
        c.observed = worst;
        c.pass = worst <= bound * (1.0 + opt.constant_slack) + opt.constant_slack;
        report.checks.push_back(c);
    };

    growth_check("growth_f", 3, pd.c1, [&](std::span<const double> y, double tau, double v) {
        const double fv = pd.eval_f(y, tau, v);
        return fv * fv;
    });
    growth_check("growth_g", 4, pd.c3, [&](std::span<const double> y, double tau, double v) {
        double s = 0.0;
        for (int k = 0; k < pd.noise_dim; ++k) {
            const double gv = pd.eval_g(k, y, tau, v);
            s += gv * gv;
        }
        return s;
    });

    auto lipschitz_check = [&](const std::string& name, std::uint64_t stream, double bound,
                               auto&& diff_norm) {
        ValidationCheck c;
        c.name = name;
        c.limit = bound;
        SequenceRng rng(opt.seed, stream);
        std::vector<double> x(static_cast<std::size_t>(pd.dim)), y(static_cast<std::size_t>(pd.dim));
        double worst = 0.0;
        for (int s = 0; s < n; ++s) {
            sample_point(rng, x, y);
            const double tau = rng.next_uniform01();
            const double v1 = rng.next_uniform(-10.0, 10.0);
            const double v2 = rng.next_uniform(-10.0, 10.0);
            if (std::abs(v1 - v2) < 1e-8) continue;
            worst = std::max(worst, diff_norm(y, tau, v1, v2) / std::abs(v1 - v2));
        }
        c.observed = worst;
        c.pass = worst <= bound * (1.0 + opt.constant_slack) + opt.constant_slack;
        report.checks.push_back(c);
    };

    lipschitz_check("lipschitz_f", 5, pd.c2,
                    [&](std::span<const double> y, double tau, double v1, double v2) {
                        return std::abs(pd.eval_f(y, tau, v1) - pd.eval_f(y, tau, v2));
                    });
    lipschitz_check("lipschitz_g", 6, pd.c4,
                    [&](std::span<const double> y, double tau, double v1, double v2) {
                        double s = 0.0;
                        for (int k = 0; k < pd.noise_dim; ++k) {
                            const double d = pd.eval_g(k, y, tau, v1) - pd.eval_g(k, y, tau, v2);
                            s += d * d;
                        }
                        return std::sqrt(s);
                    });

    return report;
}

} // namespace homowave

#endif
