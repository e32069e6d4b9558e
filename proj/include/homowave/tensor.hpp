#ifndef HOMOWAVE_TENSOR_HPP
#define HOMOWAVE_TENSOR_HPP

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>

namespace homowave {

// Small dense symmetric d x d tensor, d in {1,2}. Row-major storage.
struct SymTensor {
    int dim = 1;
    std::array<double, 4> a{0.0, 0.0, 0.0, 0.0};

    static SymTensor identity(int dim, double scale = 1.0) {
        SymTensor t;
        t.dim = dim;
        t.a = {scale, 0.0, 0.0, scale};
        if (dim == 1) t.a = {scale, 0.0, 0.0, 0.0};
        return t;
    }

    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i * 2 + j)]; }
    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i * 2 + j)]; }

    // quadratic form xi . A xi
    double quad(std::span<const double> xi) const {
        if (dim == 1) return a[0] * xi[0] * xi[0];
        return a[0] * xi[0] * xi[0] + 2.0 * a[1] * xi[0] * xi[1] + a[3] * xi[1] * xi[1];
    }

    void matvec(std::span<const double> x, std::span<double> out) const {
        if (dim == 1) {
            out[0] = a[0] * x[0];
        } else {
            out[0] = a[0] * x[0] + a[1] * x[1];
            out[1] = a[2] * x[0] + a[3] * x[1];
        }
    }

    double eigen_min() const {
        if (dim == 1) return a[0];
        const double mean = 0.5 * (a[0] + a[3]);
        const double rad = std::sqrt(0.25 * (a[0] - a[3]) * (a[0] - a[3]) + a[1] * a[2]);
        return mean - rad;
    }

    double eigen_max() const {
        if (dim == 1) return a[0];
        const double mean = 0.5 * (a[0] + a[3]);
        const double rad = std::sqrt(0.25 * (a[0] - a[3]) * (a[0] - a[3]) + a[1] * a[2]);
        return mean + rad;
    }

    double max_asymmetry() const { return dim == 1 ? 0.0 : std::abs(a[1] - a[2]); }

    void symmetrize() {
        if (dim == 2) {
            const double off = 0.5 * (a[1] + a[2]);
            a[1] = off;
            a[2] = off;
        }
    }
};

inline SymTensor operator+(const SymTensor& x, const SymTensor& y) {
    SymTensor r = x;
    for (std::size_t i = 0; i < 4; ++i) r.a[i] += y.a[i];
    return r;
}

inline SymTensor operator*(double s, const SymTensor& x) {
    SymTensor r = x;
    for (std::size_t i = 0; i < 4; ++i) r.a[i] *= s;
    return r;
}

inline double max_abs_diff(const SymTensor& x, const SymTensor& y) {
    double m = 0.0;
    for (std::size_t i = 0; i < 4; ++i) m = std::max(m, std::abs(x.a[i] - y.a[i]));
    return m;
}

} // namespace homowave

#endif
