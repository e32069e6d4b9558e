#ifndef HOMOWAVE_REDUCE_HPP
#define HOMOWAVE_REDUCE_HPP

#include <cstddef>
#include <span>

namespace homowave {

// Pairwise (binary-tree) summation in index order. Every reported mean and
// quadrature sum goes through this so the result is independent of how
// callers partition the work, and on 2^k equal summands every partial sum
// is exact (powers of two only rescale the exponent), so a constant field
// averages to exactly its value.
inline double pairwise_sum(std::span<const double> v) {
    switch (v.size()) {
        case 0: return 0.0;
        case 1: return v[0];
        case 2: return v[0] + v[1];
        default: {
            const std::size_t half = v.size() / 2;
            return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
        }
    }
}

inline double pairwise_mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    return pairwise_sum(v) / static_cast<double>(v.size());
}

} // namespace homowave

#endif
