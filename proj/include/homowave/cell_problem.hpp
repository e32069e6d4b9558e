#ifndef HOMOWAVE_CELL_PROBLEM_HPP
#define HOMOWAVE_CELL_PROBLEM_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "homowave/cg.hpp"
#include "homowave/problem.hpp"
#include "homowave/reduce.hpp"
#include "homowave/tensor.hpp"

// Periodic cell problem: -div_y( a(x,.) (xi + grad_y pi) ) = 0 on the unit
// cell, discretized by a conservative P1 scheme on a uniform grid (two
// triangles per cell in 2d, elements in 1d) with the coefficient sampled at
// the staggered element points. Correctors have zero grid mean; the
// effective tensor is the grid mean of the flux a (I + grad chi).

namespace homowave {

class CellError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CellGrid {
    int n = 256;         // nodes per axis (periodic wrap)
    int dim = 1;
    double period = 1.0; // cell edge length; 1 except for quasi-periodic truncation

    CellGrid() = default;
    CellGrid(int n_, int dim_, double period_ = 1.0) : n(n_), dim(dim_), period(period_) {
        if (dim != 1 && dim != 2) throw CellError("cell grid dimension must be 1 or 2");
        if (n < 8 || (n & (n - 1)) != 0)
            throw CellError("cell resolution must be a power of two >= 8");
        if (!(period > 0.0)) throw CellError("cell period must be positive");
    }

    double spacing() const { return period / n; }
    std::size_t nodes() const {
        return dim == 1 ? static_cast<std::size_t>(n)
                        : static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    }
    std::size_t elements() const {
        return dim == 1 ? static_cast<std::size_t>(n)
                        : 2 * static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    }
};

// Coefficient tensor sampled at the element evaluation points: interval
// midpoints in 1d, triangle centroids in 2d (lower triangle first).
struct CellTensorField {
    CellGrid grid;
    std::vector<SymTensor> samples; // grid.elements() entries

    // Element evaluation point, in cell coordinates.
    static void element_point(const CellGrid& g, std::size_t e, std::span<double> out) {
        const double h = g.spacing();
        if (g.dim == 1) {
            out[0] = (static_cast<double>(e) + 0.5) * h;
            return;
        }
        const std::size_t cell = e / 2;
        const std::size_t i = cell % static_cast<std::size_t>(g.n);
        const std::size_t j = cell / static_cast<std::size_t>(g.n);
        if (e % 2 == 0) { // lower triangle {(i,j),(i+1,j),(i+1,j+1)}
            out[0] = (static_cast<double>(i) + 2.0 / 3.0) * h;
            out[1] = (static_cast<double>(j) + 1.0 / 3.0) * h;
        } else { // upper triangle {(i,j),(i+1,j+1),(i,j+1)}
            out[0] = (static_cast<double>(i) + 1.0 / 3.0) * h;
            out[1] = (static_cast<double>(j) + 2.0 / 3.0) * h;
        }
    }
};

struct CellField {
    CellGrid grid;
    std::vector<double> values; // nodal, grid.nodes() entries

    double l2_norm() const {
        double s = 0.0;
        for (double v : values) s += v * v;
        return std::sqrt(s / static_cast<double>(values.size()));
    }
};

struct CorrectorSet {
    std::vector<double> x; // macro point
    CellGrid grid;
    std::vector<CellField> chi; // one corrector per direction
    SymTensor a_eff;
    double residual = 0.0; // worst relative CG residual over directions
    bool approximate = false; // set for quasi-periodic commensurate truncation
};

namespace detail {

// Assembled periodic P1 operator in stencil form. In 1d the couplings are
// the element coefficients over h; in 2d the edge couplings come from the
// two triangles sharing each edge.
struct PeriodicCellOperator {
    const CellGrid grid;
    std::vector<double> diag;
    std::vector<double> ce, cn, cd; // east, north, diagonal couplings (2d)
    std::vector<double> coeff;      // element scalars (1d)

    explicit PeriodicCellOperator(const CellTensorField& a) : grid(a.grid) {
        const std::size_t n = static_cast<std::size_t>(grid.n);
        if (grid.dim == 1) {
            coeff.resize(n);
            for (std::size_t i = 0; i < n; ++i) coeff[i] = a.samples[i](0, 0);
            diag.resize(n);
            const double h = grid.spacing();
            for (std::size_t i = 0; i < n; ++i)
                diag[i] = (coeff[(i + n - 1) % n] + coeff[i]) / h;
            return;
        }
        ce.assign(n * n, 0.0);
        cn.assign(n * n, 0.0);
        cd.assign(n * n, 0.0);
        diag.assign(n * n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t jm = (j + n - 1) % n;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t im = (i + n - 1) % n;
                const auto idx = [&](std::size_t ii, std::size_t jj) { return jj * n + ii; };
                const SymTensor& t1 = a.samples[2 * idx(i, j)];
                const SymTensor& t2 = a.samples[2 * idx(i, j) + 1];
                const SymTensor& t2_s = a.samples[2 * idx(i, jm) + 1]; // cell below
                const SymTensor& t1_w = a.samples[2 * idx(im, j)];     // cell to the west
                const SymTensor& t1_sw = a.samples[2 * idx(im, jm)];
                const SymTensor& t2_sw = a.samples[2 * idx(im, jm) + 1];
                const std::size_t k = idx(i, j);
                ce[k] = 0.5 * (t1(0, 1) - t1(0, 0)) + 0.5 * (t2_s(0, 1) - t2_s(0, 0));
                cn[k] = 0.5 * (t2(0, 1) - t2(1, 1)) + 0.5 * (t1_w(0, 1) - t1_w(1, 1));
                cd[k] = -0.5 * (t1(0, 1) + t2(0, 1));
                diag[k] = 0.5 * (t1(0, 0) + t2(1, 1) + t1_sw(1, 1) + t2_sw(0, 0)) +
                          0.5 * (t1_w(0, 0) - 2.0 * t1_w(0, 1) + t1_w(1, 1)) +
                          0.5 * (t2_s(0, 0) - 2.0 * t2_s(0, 1) + t2_s(1, 1));
            }
        }
    }

    void operator()(std::span<const double> p, std::span<double> out) const {
        const std::size_t n = static_cast<std::size_t>(grid.n);
        if (grid.dim == 1) {
            const double h = grid.spacing();
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t ip = (i + 1) % n;
                const std::size_t im = (i + n - 1) % n;
                out[i] = diag[i] * p[i] - (coeff[i] * p[ip] + coeff[im] * p[im]) / h;
            }
            return;
        }
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t jp = (j + 1) % n;
            const std::size_t jm = (j + n - 1) % n;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t ip = (i + 1) % n;
                const std::size_t im = (i + n - 1) % n;
                const std::size_t k = j * n + i;
                out[k] = diag[k] * p[k] + ce[k] * p[j * n + ip] + ce[j * n + im] * p[j * n + im] +
                         cn[k] * p[jp * n + i] + cn[jm * n + i] * p[jm * n + i] +
                         cd[k] * p[jp * n + ip] + cd[jm * n + im] * p[jm * n + im];
            }
        }
    }

    // Load vector for direction xi: b_P = -sum_T |T| (A_T xi) . grad phi_P.
    std::vector<double> load(const CellTensorField& a, std::span<const double> xi) const {
        const std::size_t n = static_cast<std::size_t>(grid.n);
        std::vector<double> b(grid.nodes(), 0.0);
        if (grid.dim == 1) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t im = (i + n - 1) % n;
                b[i] = xi[0] * (coeff[i] - coeff[im]);
            }
            return b;
        }
        const double h = grid.spacing();
        const double w = 0.5 * h; // |T| / h
        double flux[2];
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t jp = (j + 1) % n;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t ip = (i + 1) % n;
                const std::size_t cell = j * n + i;
                const std::size_t p00 = j * n + i, p10 = j * n + ip, p11 = jp * n + ip,
                                  p01 = jp * n + i;
                a.samples[2 * cell].matvec(xi, flux);
                b[p00] += w * flux[0];
                b[p10] += w * (-flux[0] + flux[1]);
                b[p11] += w * (-flux[1]);
                a.samples[2 * cell + 1].matvec(xi, flux);
                b[p00] += w * flux[1];
                b[p11] += w * (-flux[0]);
                b[p01] += w * (flux[0] - flux[1]);
            }
        }
        return b;
    }
};

// Per-element gradient of a nodal field.
inline void element_gradient(const CellGrid& g, std::span<const double> p, std::size_t e,
                             std::span<double> out) {
    const std::size_t n = static_cast<std::size_t>(g.n);
    const double h = g.spacing();
    if (g.dim == 1) {
        out[0] = (p[(e + 1) % n] - p[e]) / h;
        return;
    }
    const std::size_t cell = e / 2;
    const std::size_t i = cell % n;
    const std::size_t j = cell / n;
    const std::size_t ip = (i + 1) % n, jp = (j + 1) % n;
    const double p00 = p[j * n + i], p10 = p[j * n + ip], p11 = p[jp * n + ip],
                 p01 = p[jp * n + i];
    if (e % 2 == 0) {
        out[0] = (p10 - p00) / h;
        out[1] = (p11 - p10) / h;
    } else {
        out[0] = (p11 - p01) / h;
        out[1] = (p01 - p00) / h;
    }
}

} // namespace detail

// Samples a(x, .) on the cell grid for a fixed macro point.
inline CellTensorField sample_cell_tensor(const ProblemDefinition& pd, std::span<const double> x,
                                          const CellGrid& grid) {
    CellTensorField field;
    field.grid = grid;
    field.samples.resize(grid.elements());
    std::vector<double> y(static_cast<std::size_t>(grid.dim));
    for (std::size_t e = 0; e < field.samples.size(); ++e) {
        CellTensorField::element_point(grid, e, y);
        field.samples[e] = pd.eval_a(x, y);
    }
    return field;
}

struct CellSolveResult {
    CellField field;
    double rel_residual = 0.0;
};

// Solves the cell problem for one direction xi; the returned field has zero
// grid mean (projected after every CG iterate).
inline CellSolveResult solve_corrector(const CellTensorField& a, std::span<const double> xi,
                                       double tol = 1e-10) {
    const CellGrid& grid = a.grid;
    if (static_cast<int>(xi.size()) != grid.dim) throw CellError("direction dimension mismatch");

    double scale = 0.0;
    for (const SymTensor& t : a.samples) {
        if (t.max_asymmetry() > 1e-8 * (1.0 + std::abs(t(0, 0)) + std::abs(t.dim > 1 ? t(1, 1) : 0.0)))
            throw CellError("non-symmetric coefficient sample detected");
        SymTensor s = t;
        s.symmetrize();
        if (!(s.eigen_min() > 0.0)) throw CellError("non-SPD coefficient sample detected");
        double row[2] = {0.0, 0.0};
        s.matvec(xi, row);
        scale = std::max(scale, std::max(std::abs(row[0]), grid.dim > 1 ? std::abs(row[1]) : 0.0));
    }

    detail::PeriodicCellOperator op(a);
    const std::vector<double> b = op.load(a, xi);

    CellField out;
    out.grid = grid;
    out.values.assign(grid.nodes(), 0.0);

    CgOptions cg;
    cg.rel_tol = std::min(tol, 1e-12);
    cg.max_iterations = 50L * grid.n;
    cg.project_zero_mean = true;
    // numerically-zero loads (constant coefficients) resolve to the exact
    // zero corrector instead of iterating on roundoff
    cg.zero_rhs_floor = 4096.0 * 2.220446049250313e-16 * scale *
                        std::sqrt(static_cast<double>(grid.nodes())) * grid.spacing();

    const CgResult r = conjugate_gradient(op, b, std::span<double>(out.values), cg);
    if (!r.converged && r.rel_residual > tol)
        throw CellError("cell solve did not converge (relative residual " +
                        std::to_string(r.rel_residual) + "); the grid may be too coarse or the "
                        "coefficient close to losing ellipticity");
    // exact zero-mean on exit
    const double mean = pairwise_mean(out.values);
    for (double& v : out.values) v -= mean;
    return {std::move(out), r.rel_residual};
}

struct CellSolveOptions {
    double tol = 1e-10;
    // Commensurate truncation period for quasi-periodic coefficients; the
    // solve treats a(x,.) restricted to [0,L)^d as L-periodic and flags the
    // result approximate.
    double quasiperiodic_period = 1.0;
};

// Correctors for all canonical directions plus the effective tensor
// a~_ij = <sum_k a_ik (delta_kj + d chi_j / d y_k)> with the grid mean taken
// consistently with the discretization (element average).
inline CorrectorSet correctors_basis(const ProblemDefinition& pd, std::span<const double> x,
                                     const CellGrid& grid_in, const CellSolveOptions& opt = {}) {
    if (pd.algebra_y.kind == AlgebraTag::Kind::LimitAtInfinity)
        throw CellError("cell problems are supported for periodic (and truncated quasi-periodic) "
                        "spatial algebras only");
    CellGrid grid = grid_in;
    const bool approximate = pd.algebra_y.kind == AlgebraTag::Kind::QuasiPeriodic;
    if (approximate) grid = CellGrid(grid_in.n, grid_in.dim, opt.quasiperiodic_period);

    const CellTensorField a = sample_cell_tensor(pd, x, grid);

    CorrectorSet cs;
    cs.x.assign(x.begin(), x.end());
    cs.grid = grid;
    cs.approximate = approximate;

    std::vector<std::vector<double>> gradients(static_cast<std::size_t>(grid.dim));
    for (int j = 0; j < grid.dim; ++j) {
        std::vector<double> xi(static_cast<std::size_t>(grid.dim), 0.0);
        xi[static_cast<std::size_t>(j)] = 1.0;
        CellSolveResult r = solve_corrector(a, xi, opt.tol);
        cs.residual = std::max(cs.residual, r.rel_residual);
        cs.chi.push_back(std::move(r.field));
    }

    cs.a_eff.dim = grid.dim;
    std::vector<double> grad(static_cast<std::size_t>(grid.dim));
    std::vector<double> contrib(grid.elements());
    double flux[2];
    for (int j = 0; j < grid.dim; ++j) {
        for (int i = 0; i < grid.dim; ++i) {
            for (std::size_t e = 0; e < grid.elements(); ++e) {
                detail::element_gradient(grid, cs.chi[static_cast<std::size_t>(j)].values, e, grad);
                grad[static_cast<std::size_t>(j)] += 1.0;
                a.samples[e].matvec(grad, flux);
                contrib[e] = flux[i];
                grad[static_cast<std::size_t>(j)] -= 1.0;
            }
            cs.a_eff(i, j) = pairwise_mean(contrib);
        }
    }
    return cs;
}

// First-order corrector reconstruction u1(x, y) = grad u0(x) . chi(x, y)
// for one macro point; diagnostics only.
inline CellField reconstruct_corrector_field(std::span<const double> grad_u0,
                                             const CorrectorSet& cs) {
    if (grad_u0.size() != cs.chi.size())
        throw CellError("gradient dimension does not match corrector set");
    CellField u1;
    u1.grid = cs.grid;
    u1.values.assign(cs.grid.nodes(), 0.0);
    for (std::size_t j = 0; j < cs.chi.size(); ++j)
        for (std::size_t k = 0; k < u1.values.size(); ++k)
            u1.values[k] += grad_u0[j] * cs.chi[j].values[k];
    return u1;
}

struct EffectiveTensorField {
    bool x_independent = true;
    std::vector<std::vector<double>> points;
    std::vector<SymTensor> values;
    double worst_residual = 0.0;
    bool approximate = false;

    const SymTensor& at(std::size_t i) const { return values[x_independent ? 0 : i]; }
};

// Effective tensor over a set of macro points. When no a[i][j] references an
// x variable the single corrector solve is broadcast.
inline EffectiveTensorField effective_tensor_field(const ProblemDefinition& pd,
                                                   const std::vector<std::vector<double>>& points,
                                                   const CellGrid& grid,
                                                   const CellSolveOptions& opt = {}) {
    EffectiveTensorField field;
    field.points = points;
    field.x_independent = !pd.a_depends_on_x();
    if (field.x_independent) {
        const std::vector<double> origin(static_cast<std::size_t>(pd.dim), 0.0);
        CorrectorSet cs = correctors_basis(pd, origin, grid, opt);
        field.values.push_back(cs.a_eff);
        field.worst_residual = cs.residual;
        field.approximate = cs.approximate;
        return field;
    }
    for (const auto& x : points) {
        CorrectorSet cs = correctors_basis(pd, x, grid, opt);
        field.values.push_back(cs.a_eff);
        field.worst_residual = std::max(field.worst_residual, cs.residual);
        field.approximate = cs.approximate;
    }
    return field;
}

} // namespace homowave

#endif
