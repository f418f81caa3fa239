#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace bermex {

/// Pairwise (cascade) summation; the reduction order depends only on the length.
inline double pairwise_sum(std::span<const double> xs) {
    constexpr std::size_t leaf = 64;
    if (xs.size() <= leaf) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

struct MeanSe {
    double mean = 0.0;
    double std_err = 0.0;
};

/// Sample mean and standard error (sample standard deviation / sqrt(n)).
MeanSe mean_se(std::span<const double> xs);

}  // namespace bermex
