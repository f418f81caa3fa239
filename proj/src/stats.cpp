#include "bermex/stats.hpp"

#include <vector>

namespace bermex {

MeanSe mean_se(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n == 0) return {};
    const double mean = pairwise_sum(xs) / static_cast<double>(n);
    if (n == 1) return {mean, 0.0};
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double e = xs[i] - mean;
        sq[i] = e * e;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace bermex
