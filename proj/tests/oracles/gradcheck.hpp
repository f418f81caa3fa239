#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "bermex/nn.hpp"
#include "bermex/rng.hpp"

namespace oracle {

/// Relative error between backprop and central finite differences of L = sum_b w_b F(x_b),
/// measured as ||g_bp - g_fd|| / max(||g_fd||, 1e-300) over all parameters.
inline double gradient_relative_error(const bermex::NetSpec& spec, int batch, std::uint64_t seed, double h = 1e-5) {
    using namespace bermex;
    NetParams params = init_params(spec);
    PathRng rng(seed, 1);
    for (auto& b : params.biases)
        for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = 0.1 * rng.normal();
    RowMatrix x(batch, spec.input_dim);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    Eigen::VectorXd w(batch);
    for (int i = 0; i < batch; ++i) w[i] = rng.normal();

    ForwardCache cache;
    forward(spec, params, x, &cache);
    const std::vector<double> bp = backward(spec, params, cache, w).flatten();

    std::vector<double> flat = params.flatten();
    std::vector<double> fd(flat.size());
    NetParams probe = params;
    for (std::size_t k = 0; k < flat.size(); ++k) {
        const double keep = flat[k];
        flat[k] = keep + h;
        probe.assign(flat);
        const double up = w.dot(forward(spec, probe, x));
        flat[k] = keep - h;
        probe.assign(flat);
        const double down = w.dot(forward(spec, probe, x));
        flat[k] = keep;
        fd[k] = (up - down) / (2 * h);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < fd.size(); ++k) {
        num += (bp[k] - fd[k]) * (bp[k] - fd[k]);
        den += fd[k] * fd[k];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

}  // namespace oracle
