#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracle {

struct BinomialResult {
    double price = 0.0;
    /// Continuation value at each exercise date, on the node nearest to the query spot.
    std::vector<double> continuation;
};

/// Cox-Ross-Rubinstein tree for a Bermudan put exercisable at `dates` equally spaced dates
/// after t0 (the last one is maturity). `steps` must be a multiple of `dates`.
inline double bermudan_put_crr(double s0, double strike, double r, double q, double sigma, double maturity,
                               int dates, int steps, bool american = false) {
    if (steps % dates != 0) throw std::invalid_argument("steps must be a multiple of the date count");
    const double dt = maturity / steps;
    const double u = std::exp(sigma * std::sqrt(dt));
    const double d = 1.0 / u;
    const double p = (std::exp((r - q) * dt) - d) / (u - d);
    const double disc = std::exp(-r * dt);
    const int every = steps / dates;
    std::vector<double> v(static_cast<std::size_t>(steps) + 1);
    for (int j = 0; j <= steps; ++j) v[j] = std::max(strike - s0 * std::pow(u, 2 * j - steps), 0.0);
    for (int k = steps - 1; k >= 0; --k) {
        const bool exercise = american || (k > 0 && k % every == 0);
        for (int j = 0; j <= k; ++j) {
            double c = disc * (p * v[j + 1] + (1.0 - p) * v[j]);
            if (exercise) c = std::max(c, strike - s0 * std::pow(u, 2 * j - k));
            v[j] = c;
        }
    }
    return v[0];
}

/// European put by Black-Scholes.
inline double bs_put(double s0, double strike, double r, double q, double sigma, double maturity) {
    const double sd = sigma * std::sqrt(maturity);
    const double d1 = (std::log(s0 / strike) + (r - q + 0.5 * sigma * sigma) * maturity) / sd;
    const double d2 = d1 - sd;
    auto N = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    return strike * std::exp(-r * maturity) * N(-d2) - s0 * std::exp(-q * maturity) * N(-d1);
}

/// Two independent assets on a product of CRR trees; Bermudan max-call with exercise at
/// `dates` equally spaced dates after t0.
inline double bermudan_max_call_2d(double s0, double strike, double r, double q, double sigma, double maturity,
                                   int dates, int steps) {
    if (steps % dates != 0) throw std::invalid_argument("steps must be a multiple of the date count");
    const double dt = maturity / steps;
    const double u = std::exp(sigma * std::sqrt(dt));
    const double d = 1.0 / u;
    const double p = (std::exp((r - q) * dt) - d) / (u - d);
    const double disc = std::exp(-r * dt);
    const int every = steps / dates;
    const std::size_t w = static_cast<std::size_t>(steps) + 1;
    std::vector<double> v(w * w);
    std::vector<double> spot(w);
    auto fill_spot = [&](int k) {
        for (int j = 0; j <= k; ++j) spot[j] = s0 * std::pow(u, 2 * j - k);
    };
    fill_spot(steps);
    for (int i = 0; i <= steps; ++i)
        for (int j = 0; j <= steps; ++j) v[i * w + j] = std::max(std::max(spot[i], spot[j]) - strike, 0.0);
    const double pp = p * p, pd = p * (1 - p), dd = (1 - p) * (1 - p);
    for (int k = steps - 1; k >= 0; --k) {
        const bool exercise = k > 0 && k % every == 0;
        fill_spot(k);
        for (int i = 0; i <= k; ++i) {
            double* row = &v[i * w];
            const double* up = &v[(i + 1) * w];
            for (int j = 0; j <= k; ++j) {
                double c = disc * (pp * up[j + 1] + pd * (up[j] + row[j + 1]) + dd * row[j]);
                if (exercise) c = std::max(c, std::max(spot[i], spot[j]) - strike);
                row[j] = c;
            }
        }
    }
    return v[0];
}

}  // namespace oracle
