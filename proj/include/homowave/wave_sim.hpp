#ifndef HOMOWAVE_WAVE_SIM_HPP
#define HOMOWAVE_WAVE_SIM_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "homowave/cg.hpp"
#include "homowave/effective_model.hpp"
#include "homowave/problem.hpp"
#include "homowave/rng.hpp"
#include "homowave/tensor.hpp"

// Semi-implicit time stepping of the damped stochastic wave equation on a
// Dirichlet grid over (0,1)^d:
//   (I + dt L + dt^2 K) v_{n+1} = v_n - dt K u_n + dt phi(., v_n) + sum_k gamma_k(., v_n) dW_k
//   u_{n+1} = u_n + dt v_{n+1}
// with K the conservative stiffness of the coefficient tensor and L the
// Dirichlet Laplacian (the damping). The stiff linear terms are implicit,
// drift and noise explicit; the scheme is unconditionally stable and
// dissipative for phi = gamma = 0.

namespace homowave {

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SpatialGrid {
    int dim = 1;
    int nx = 63; // interior nodes per axis; Dirichlet boundary all around

    SpatialGrid() = default;
    SpatialGrid(int dim_, int nx_) : dim(dim_), nx(nx_) {
        if (dim != 1 && dim != 2) throw SimulationError("spatial dimension must be 1 or 2");
        if (nx < 15) throw SimulationError("need at least 15 interior nodes per axis");
    }

    double spacing() const { return 1.0 / (nx + 1); }
    std::size_t interior() const {
        return dim == 1 ? static_cast<std::size_t>(nx)
                        : static_cast<std::size_t>(nx) * static_cast<std::size_t>(nx);
    }
    // interior node coordinates of flat index
    void node(std::size_t idx, std::span<double> out) const {
        const double h = spacing();
        if (dim == 1) {
            out[0] = (static_cast<double>(idx) + 1.0) * h;
        } else {
            out[0] = (static_cast<double>(idx % static_cast<std::size_t>(nx)) + 1.0) * h;
            out[1] = (static_cast<double>(idx / static_cast<std::size_t>(nx)) + 1.0) * h;
        }
    }
};

// Conservative second-order operator -div(A grad .) on interior nodes,
// assembled from the tensor sampled at the staggered element points
// (interval midpoints / triangle centroids). Symmetric by construction.
class DirichletOperator {
public:
    using TensorCallable = std::function<SymTensor(std::span<const double>)>;

    static DirichletOperator assemble(const SpatialGrid& grid, const TensorCallable& tensor) {
        DirichletOperator op;
        op.grid_ = grid;
        const double h = grid.spacing();
        const double inv_h2 = 1.0 / (h * h);
        if (grid.dim == 1) {
            const std::size_t cells = static_cast<std::size_t>(grid.nx) + 1;
            std::vector<double> coeff(cells);
            double x[1];
            for (std::size_t e = 0; e < cells; ++e) {
                x[0] = (static_cast<double>(e) + 0.5) * h;
                const SymTensor t = tensor(std::span<const double>(x, 1));
                if (!(t(0, 0) > 0.0)) throw SimulationError("non-SPD coefficient sample");
                coeff[e] = t(0, 0);
            }
            const std::size_t n = grid.interior();
            op.diag_.resize(n);
            op.ce_.assign(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                op.diag_[i] = (coeff[i] + coeff[i + 1]) * inv_h2;
                if (i + 1 < n) op.ce_[i] = -coeff[i + 1] * inv_h2;
            }
            return op;
        }

        const std::size_t n = static_cast<std::size_t>(grid.nx);
        op.diag_.assign(n * n, 0.0);
        op.ce_.assign(n * n, 0.0);
        op.cn_.assign(n * n, 0.0);
        op.cd_.assign(n * n, 0.0);
        const long nx = grid.nx;
        // global node (gi, gj) in 0..nx+1; interior index (gi-1) + (gj-1)*nx
        auto interior_index = [nx](long gi, long gj) -> long {
            if (gi < 1 || gi > nx || gj < 1 || gj > nx) return -1;
            return (gi - 1) + (gj - 1) * nx;
        };
        double x[2];
        SymTensor t;
        // triangle node offsets and integer gradients, lower then upper
        static const int tri_nodes[2][3][2] = {{{0, 0}, {1, 0}, {1, 1}}, {{0, 0}, {1, 1}, {0, 1}}};
        static const int tri_grads[2][3][2] = {{{-1, 0}, {1, -1}, {0, 1}},
                                               {{0, -1}, {1, 0}, {-1, 1}}};
        static const double tri_centroid[2][2] = {{2.0 / 3.0, 1.0 / 3.0}, {1.0 / 3.0, 2.0 / 3.0}};
        for (long cj = 0; cj <= nx; ++cj) {
            for (long ci = 0; ci <= nx; ++ci) {
                for (int tri = 0; tri < 2; ++tri) {
                    x[0] = (static_cast<double>(ci) + tri_centroid[tri][0]) * h;
                    x[1] = (static_cast<double>(cj) + tri_centroid[tri][1]) * h;
                    t = tensor(std::span<const double>(x, 2));
                    if (t.max_asymmetry() > 1e-8 * (1.0 + std::abs(t(0, 0)) + std::abs(t(1, 1))))
                        throw SimulationError("non-symmetric coefficient sample");
                    t.symmetrize();
                    if (!(t.eigen_min() > 0.0)) throw SimulationError("non-SPD coefficient sample");
                    long gidx[3];
                    for (int p = 0; p < 3; ++p)
                        gidx[p] = interior_index(ci + tri_nodes[tri][p][0],
                                                 cj + tri_nodes[tri][p][1]);
                    for (int p = 0; p < 3; ++p) {
                        if (gidx[p] < 0) continue;
                        for (int q = p; q < 3; ++q) {
                            if (gidx[q] < 0) continue;
                            const double gp0 = tri_grads[tri][p][0], gp1 = tri_grads[tri][p][1];
                            const double gq0 = tri_grads[tri][q][0], gq1 = tri_grads[tri][q][1];
                            const double k = 0.5 *
                                             (gp0 * (t(0, 0) * gq0 + t(0, 1) * gq1) +
                                              gp1 * (t(0, 1) * gq0 + t(1, 1) * gq1)) *
                                             inv_h2;
                            if (p == q) {
                                op.diag_[static_cast<std::size_t>(gidx[p])] += k;
                            } else {
                                op.add_coupling(gidx[p], gidx[q], k);
                            }
                        }
                    }
                }
            }
        }
        return op;
    }

    static DirichletOperator laplacian(const SpatialGrid& grid) {
        return assemble(grid, [&](std::span<const double>) {
            return SymTensor::identity(grid.dim);
        });
    }

    void apply(std::span<const double> u, std::span<double> out) const {
        const std::size_t n = u.size();
        if (grid_.dim == 1) {
            for (std::size_t i = 0; i < n; ++i) {
                double s = diag_[i] * u[i];
                if (i + 1 < n) s += ce_[i] * u[i + 1];
                if (i > 0) s += ce_[i - 1] * u[i - 1];
                out[i] = s;
            }
            return;
        }
        const std::size_t nx = static_cast<std::size_t>(grid_.nx);
        for (std::size_t j = 0; j < nx; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                const std::size_t k = j * nx + i;
                double s = diag_[k] * u[k];
                if (i + 1 < nx) s += ce_[k] * u[k + 1];
                if (i > 0) s += ce_[k - 1] * u[k - 1];
                if (j + 1 < nx) s += cn_[k] * u[k + nx];
                if (j > 0) s += cn_[k - nx] * u[k - nx];
                if (i + 1 < nx && j + 1 < nx) s += cd_[k] * u[k + nx + 1];
                if (i > 0 && j > 0) s += cd_[k - nx - 1] * u[k - nx - 1];
                out[k] = s;
            }
        }
    }

    void operator()(std::span<const double> u, std::span<double> out) const { apply(u, out); }

    double quadratic_form(std::span<const double> u) const {
        std::vector<double> tmp(u.size());
        apply(u, tmp);
        double s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) s += tmp[i] * u[i];
        return s;
    }

    const SpatialGrid& grid() const { return grid_; }
    std::span<const double> diagonal() const { return diag_; }
    std::span<const double> east() const { return ce_; }
    std::span<const double> north() const { return cn_; }
    std::span<const double> northeast() const { return cd_; }

private:
    void add_coupling(long a, long b, double k) {
        // classify the (a, b) edge as east / north / north-east of min(a, b)
        const long lo = std::min(a, b), hi = std::max(a, b);
        const long nx = grid_.nx;
        if (hi == lo + 1)
            ce_[static_cast<std::size_t>(lo)] += k;
        else if (hi == lo + nx)
            cn_[static_cast<std::size_t>(lo)] += k;
        else if (hi == lo + nx + 1)
            cd_[static_cast<std::size_t>(lo)] += k;
        else
            throw SimulationError("unexpected mesh edge");
    }

    SpatialGrid grid_;
    std::vector<double> diag_, ce_, cn_, cd_;
};

// m-dimensional Brownian increments on a master time grid. Each increment
// is a pure function of (master seed, path index, step, component), so paths
// are coupled across resolutions and independent of evaluation order.
struct WienerPath {
    int m = 1;
    int n_t = 1;
    double horizon = 1.0;
    std::uint64_t master_seed = 0;
    std::uint64_t path_index = 0;
    std::vector<double> increments; // step-major, n_t * m

    double dt() const { return horizon / n_t; }
    double at(int step, int comp) const {
        return increments[static_cast<std::size_t>(step) * static_cast<std::size_t>(m) +
                          static_cast<std::size_t>(comp)];
    }

    static WienerPath sample(int m, int n_t, double horizon, std::uint64_t master_seed,
                             std::uint64_t path_index) {
        if (n_t < 1) throw SimulationError("need at least one time step");
        WienerPath p;
        p.m = m;
        p.n_t = n_t;
        p.horizon = horizon;
        p.master_seed = master_seed;
        p.path_index = path_index;
        p.increments.resize(static_cast<std::size_t>(n_t) * static_cast<std::size_t>(m));
        const double scale = std::sqrt(p.dt());
        for (int s = 0; s < n_t; ++s)
            for (int k = 0; k < m; ++k)
                p.increments[static_cast<std::size_t>(s) * static_cast<std::size_t>(m) +
                             static_cast<std::size_t>(k)] =
                    scale * standard_normal(master_seed, path_index, static_cast<std::uint64_t>(s),
                                            static_cast<std::uint64_t>(k));
        return p;
    }

    // Coarsens by summing groups of consecutive increments (in index order).
    // Couplings across the epsilon ladder always coarsen the master path
    // directly, never an already-coarsened one.
    WienerPath coarsen(int factor) const {
        if (factor < 1 || n_t % factor != 0) throw SimulationError("coarsening factor must divide n_t");
        WienerPath p;
        p.m = m;
        p.n_t = n_t / factor;
        p.horizon = horizon;
        p.master_seed = master_seed;
        p.path_index = path_index;
        p.increments.assign(static_cast<std::size_t>(p.n_t) * static_cast<std::size_t>(m), 0.0);
        for (int s = 0; s < n_t; ++s)
            for (int k = 0; k < m; ++k)
                p.increments[static_cast<std::size_t>(s / factor) * static_cast<std::size_t>(m) +
                             static_cast<std::size_t>(k)] += at(s, k);
        return p;
    }
};

struct SpdeState {
    std::vector<double> u, v; // interior nodes; the boundary is identically 0
    double t = 0.0;
};

struct SolutionTrajectory {
    SpatialGrid grid;
    double dt = 0.0;
    int n_t = 0;
    int snapshot_stride = 1;
    std::vector<double> snapshot_times;
    std::vector<std::vector<double>> u_snapshots;
    std::vector<std::vector<double>> v_snapshots;
    // running functionals accumulated at step resolution
    double sup_h1_sq = 0.0;
    double sup_l2_sq = 0.0;
    double int_h1_v = 0.0;
};

// Factor-once context for (I + dt L + dt^2 K): direct tridiagonal solve in
// 1d, conjugate gradient on the merged stencil in 2d.
class ImplicitStepSolver {
public:
    ImplicitStepSolver(const SpatialGrid& grid, const DirichletOperator& stiffness,
                       const DirichletOperator& damping, double dt, double cg_tol = 1e-10)
        : grid_(grid), cg_tol_(cg_tol) {
        const std::size_t n = grid.interior();
        diag_.resize(n);
        ce_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            diag_[i] = 1.0 + dt * damping.diagonal()[i] + dt * dt * stiffness.diagonal()[i];
            ce_[i] = dt * damping.east()[i] + dt * dt * stiffness.east()[i];
        }
        if (grid.dim == 1) {
            // Thomas factorization of the SPD tridiagonal system
            lower_.assign(n, 0.0);
            pivot_ = diag_;
            for (std::size_t i = 1; i < n; ++i) {
                lower_[i] = ce_[i - 1] / pivot_[i - 1];
                pivot_[i] = diag_[i] - lower_[i] * ce_[i - 1];
            }
            return;
        }
        cn_.resize(n);
        cd_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            cn_[i] = dt * damping.north()[i] + dt * dt * stiffness.north()[i];
            cd_[i] = dt * damping.northeast()[i] + dt * dt * stiffness.northeast()[i];
        }
    }

    // Solves into x; x carries the initial guess (previous velocity) in 2d.
    void solve(std::span<const double> rhs, std::span<double> x) const {
        const std::size_t n = rhs.size();
        if (grid_.dim == 1) {
            for (std::size_t i = 0; i < n; ++i)
                x[i] = rhs[i] - (i > 0 ? lower_[i] * x[i - 1] : 0.0);
            x[n - 1] /= pivot_[n - 1];
            for (std::size_t i = n - 1; i-- > 0;) x[i] = (x[i] - ce_[i] * x[i + 1]) / pivot_[i];
            return;
        }
        auto apply = [&](std::span<const double> in, std::span<double> out) {
            const std::size_t nx = static_cast<std::size_t>(grid_.nx);
            for (std::size_t j = 0; j < nx; ++j) {
                for (std::size_t i = 0; i < nx; ++i) {
                    const std::size_t k = j * nx + i;
                    double s = diag_[k] * in[k];
                    if (i + 1 < nx) s += ce_[k] * in[k + 1];
                    if (i > 0) s += ce_[k - 1] * in[k - 1];
                    if (j + 1 < nx) s += cn_[k] * in[k + nx];
                    if (j > 0) s += cn_[k - nx] * in[k - nx];
                    if (i + 1 < nx && j + 1 < nx) s += cd_[k] * in[k + nx + 1];
                    if (i > 0 && j > 0) s += cd_[k - nx - 1] * in[k - nx - 1];
                    out[k] = s;
                }
            }
        };
        CgOptions opt;
        opt.rel_tol = cg_tol_;
        opt.max_iterations = 20000;
        const CgResult r = conjugate_gradient(apply, rhs, x, opt);
        if (!r.converged)
            throw SimulationError("implicit step solve did not converge (relative residual " +
                                  std::to_string(r.rel_residual) + ")");
    }

private:
    SpatialGrid grid_;
    double cg_tol_;
    std::vector<double> diag_, ce_, cn_, cd_;
    std::vector<double> lower_, pivot_; // 1d factorization
};

// One semi-implicit step. phi and gamma evaluate drift and noise fields at
// the current velocity; dw holds the m increments of this step.
template <class Drift, class Noise>
SpdeState step_semi_implicit(const SpdeState& state, double dt, const DirichletOperator& stiffness,
                             const ImplicitStepSolver& solver, Drift&& phi, Noise&& gamma, int m,
                             std::span<const double> dw) {
    const std::size_t n = state.u.size();
    SpdeState next;
    next.t = state.t + dt;
    next.u = state.u;
    next.v.assign(n, 0.0);

    std::vector<double> rhs(n);
    stiffness.apply(state.u, rhs);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = state.v[i] - dt * rhs[i];
    for (std::size_t i = 0; i < n; ++i) rhs[i] += dt * phi(i, state.v[i]);
    for (int k = 0; k < m; ++k) {
        const double dwk = dw[static_cast<std::size_t>(k)];
        if (dwk == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) rhs[i] += gamma(k, i, state.v[i]) * dwk;
    }

    next.v = state.v; // initial guess for the iterative branch
    solver.solve(rhs, next.v);
    for (std::size_t i = 0; i < n; ++i) next.u[i] += dt * next.v[i];
    return next;
}

struct MicroMode {
    double eps = 0.0625;
};

struct MacroMode {
    DirichletOperator::TensorCallable tensor; // effective tensor a~(x)
    const EffectiveNonlinearity* eff = nullptr;
};

using SimulationMode = std::variant<MicroMode, MacroMode>;

struct SimulateOptions {
    double cg_tol = 1e-10;
};

namespace detail {

inline double wrap_unit(double x) {
    const double r = std::fmod(x, 1.0);
    return r < 0.0 ? r + 1.0 : r;
}

} // namespace detail

// Integrates the micro or the homogenized equation over the path's time
// grid. Micro runs must resolve the oscillation: h <= eps/16, dt <= eps/16.
inline SolutionTrajectory simulate(const ProblemDefinition& pd, const SimulationMode& mode,
                                   const SpatialGrid& grid, const WienerPath& path,
                                   int snapshot_stride = 1, const SimulateOptions& opt = {}) {
    if (grid.dim != pd.dim) throw SimulationError("grid dimension does not match the problem");
    if (path.m != pd.noise_dim) throw SimulationError("path noise dimension mismatch");
    if (snapshot_stride < 1 || path.n_t % snapshot_stride != 0)
        throw SimulationError("snapshot stride must divide the number of time steps");
    const double dt = path.horizon / path.n_t;
    const double h = grid.spacing();

    const bool micro = std::holds_alternative<MicroMode>(mode);
    const double eps = micro ? std::get<MicroMode>(mode).eps : 0.0;
    if (micro) {
        if (h > eps / 16.0 * (1.0 + 1e-12) || dt > eps / 16.0 * (1.0 + 1e-12))
            throw SimulationError("micro run requires h <= eps/16 and dt <= eps/16 to resolve "
                                  "the x/eps and t/eps oscillations");
    } else if (std::get<MacroMode>(mode).eff == nullptr) {
        throw SimulationError("macro mode needs an effective nonlinearity");
    }

    const bool y_periodic = pd.algebra_y.kind == AlgebraTag::Kind::Periodic;
    const bool tau_periodic = pd.algebra_tau.kind == AlgebraTag::Kind::Periodic;

    // stiffness tensor: a(x, x/eps) for micro, a~ for macro
    DirichletOperator::TensorCallable tensor;
    if (micro) {
        tensor = [&pd, eps, y_periodic](std::span<const double> x) {
            double y[2];
            for (int k = 0; k < pd.dim; ++k) {
                const double raw = x[static_cast<std::size_t>(k)] / eps;
                y[k] = y_periodic ? detail::wrap_unit(raw) : raw;
            }
            return pd.eval_a(x, std::span<const double>(y, static_cast<std::size_t>(pd.dim)));
        };
    } else {
        tensor = std::get<MacroMode>(mode).tensor;
    }

    const DirichletOperator stiffness = DirichletOperator::assemble(grid, tensor);
    const DirichletOperator damping = DirichletOperator::laplacian(grid);
    const ImplicitStepSolver solver(grid, stiffness, damping, dt, opt.cg_tol);

    const std::size_t n = grid.interior();
    SpdeState state;
    state.u.resize(n);
    state.v.resize(n);
    std::vector<double> coords(static_cast<std::size_t>(pd.dim));
    std::vector<std::vector<double>> node_y(micro ? n : 0,
                                            std::vector<double>(static_cast<std::size_t>(pd.dim)));
    for (std::size_t i = 0; i < n; ++i) {
        grid.node(i, coords);
        state.u[i] = pd.u0.evaluate(coords);
        state.v[i] = pd.u1.evaluate(coords);
        if (micro)
            for (int k = 0; k < pd.dim; ++k) {
                const double raw = coords[static_cast<std::size_t>(k)] / eps;
                node_y[i][static_cast<std::size_t>(k)] = y_periodic ? detail::wrap_unit(raw) : raw;
            }
    }

    const EffectiveNonlinearity* eff = micro ? nullptr : std::get<MacroMode>(mode).eff;

    SolutionTrajectory traj;
    traj.grid = grid;
    traj.dt = dt;
    traj.n_t = path.n_t;
    traj.snapshot_stride = snapshot_stride;

    const double volume = std::pow(h, pd.dim);
    std::vector<double> scratch(n);
    auto update_sup = [&](const SpdeState& s) {
        damping.apply(s.u, scratch);
        double h1 = 0.0, l2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            h1 += scratch[i] * s.u[i];
            l2 += s.v[i] * s.v[i];
        }
        traj.sup_h1_sq = std::max(traj.sup_h1_sq, h1 * volume);
        traj.sup_l2_sq = std::max(traj.sup_l2_sq, l2 * volume);
    };
    auto snapshot = [&](const SpdeState& s) {
        traj.snapshot_times.push_back(s.t);
        traj.u_snapshots.push_back(s.u);
        traj.v_snapshots.push_back(s.v);
    };

    snapshot(state);
    double current_tau = 0.0;
    auto drift = [&](std::size_t i, double v) {
        if (!micro) return eff->drift(v);
        return pd.eval_f(node_y[i], current_tau, v);
    };
    auto noise = [&](int k, std::size_t i, double v) {
        if (!micro) return eff->noise(k, v);
        return pd.eval_g(k, node_y[i], current_tau, v);
    };

    for (int step = 0; step < path.n_t; ++step) {
        update_sup(state);
        damping.apply(state.v, scratch);
        double h1v = 0.0;
        for (std::size_t i = 0; i < n; ++i) h1v += scratch[i] * state.v[i];
        traj.int_h1_v += h1v * volume * dt;

        if (micro) {
            const double raw_tau = state.t / eps;
            current_tau = tau_periodic ? detail::wrap_unit(raw_tau) : raw_tau;
        }
        const std::span<const double> dw(path.increments.data() +
                                             static_cast<std::size_t>(step) *
                                                 static_cast<std::size_t>(path.m),
                                         static_cast<std::size_t>(path.m));
        state = step_semi_implicit(state, dt, stiffness, solver, drift, noise, path.m, dw);

        for (std::size_t i = 0; i < n; ++i)
            if (!std::isfinite(state.u[i]) || !std::isfinite(state.v[i]))
                throw SimulationError("non-finite state after step " + std::to_string(step + 1));
        if ((step + 1) % snapshot_stride == 0) snapshot(state);
    }
    update_sup(state);
    return traj;
}

// Discrete H^-1 norm: solve the Dirichlet-Laplacian problem L w = r by CG
// and return sqrt(<r, w> h^d).
class NegSobolevNorm {
public:
    explicit NegSobolevNorm(const SpatialGrid& grid)
        : grid_(grid), laplacian_(DirichletOperator::laplacian(grid)) {}

    double operator()(std::span<const double> r) const {
        double norm_sq = 0.0;
        for (double x : r) norm_sq += x * x;
        if (norm_sq == 0.0) return 0.0;
        std::vector<double> w(r.size(), 0.0);
        CgOptions opt;
        opt.rel_tol = 1e-10;
        opt.max_iterations = 50000;
        const CgResult res = conjugate_gradient(laplacian_, r, std::span<double>(w), opt);
        if (!res.converged)
            throw SimulationError("H^-1 norm solve did not converge");
        double s = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) s += r[i] * w[i];
        return std::sqrt(s * std::pow(grid_.spacing(), grid_.dim));
    }

private:
    SpatialGrid grid_;
    DirichletOperator laplacian_;
};

inline double h_minus1_norm(std::span<const double> r, const SpatialGrid& grid) {
    return NegSobolevNorm(grid)(r);
}

struct EnergyFunctionals {
    double sup_h1_sq = 0.0;
    double sup_l2_sq = 0.0;
    double int_h1_v = 0.0;
};

// Snapshot-resolution functionals of Lemma-style energies: sup ||u||_{H^1_0}^2,
// sup ||v||_{L^2}^2 and the left Riemann sum of ||v||_{H^1_0}^2 over the
// snapshot times.
inline EnergyFunctionals energy_functionals(const SolutionTrajectory& traj) {
    EnergyFunctionals out;
    const DirichletOperator laplacian = DirichletOperator::laplacian(traj.grid);
    const double volume = std::pow(traj.grid.spacing(), traj.grid.dim);
    std::vector<double> tmp(traj.grid.interior());
    for (std::size_t s = 0; s < traj.snapshot_times.size(); ++s) {
        laplacian.apply(traj.u_snapshots[s], tmp);
        double h1 = 0.0, l2 = 0.0, h1v = 0.0;
        for (std::size_t i = 0; i < tmp.size(); ++i) {
            h1 += tmp[i] * traj.u_snapshots[s][i];
            l2 += traj.v_snapshots[s][i] * traj.v_snapshots[s][i];
        }
        laplacian.apply(traj.v_snapshots[s], tmp);
        for (std::size_t i = 0; i < tmp.size(); ++i) h1v += tmp[i] * traj.v_snapshots[s][i];
        out.sup_h1_sq = std::max(out.sup_h1_sq, h1 * volume);
        out.sup_l2_sq = std::max(out.sup_l2_sq, l2 * volume);
        if (s + 1 < traj.snapshot_times.size())
            out.int_h1_v += h1v * volume * (traj.snapshot_times[s + 1] - traj.snapshot_times[s]);
    }
    return out;
}

} // namespace homowave

#endif
