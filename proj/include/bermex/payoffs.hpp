#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bermex/mc_engine.hpp"

namespace bermex {

enum class PayoffKind { MaxCall, Put, ArithmeticBasketPut, ArithmeticBasketCall, GeometricBasketCall };

std::string to_string(PayoffKind kind);
PayoffKind payoff_kind_from_string(const std::string& name);

/// A payoff identical at every exercise date. `assets` is the number of price
/// components the payoff reads, starting at `state_offset` in the state vector
/// (Heston states are (variance, price), so the offset is 1 there).
struct Contract {
    PayoffKind kind = PayoffKind::Put;
    double strike = 100.0;
    int assets = 1;
    int state_offset = 0;

    int state_dim() const noexcept { return assets + state_offset; }
    void validate() const;
};

double payoff(const Contract& contract, std::span<const double> x);

/// Strict inequality: g(x) = 0 counts as out of the money.
inline bool is_itm(const Contract& contract, std::span<const double> x) { return payoff(contract, x) > 0.0; }

/// Payoff of every row of a (rows x state_dim) matrix.
template <typename Derived>
Eigen::VectorXd payoff_rows(const Contract& contract, const Eigen::DenseBase<Derived>& states) {
    Eigen::VectorXd out(states.rows());
    std::vector<double> row(static_cast<std::size_t>(states.cols()));
    for (Eigen::Index m = 0; m < states.rows(); ++m) {
        for (Eigen::Index j = 0; j < states.cols(); ++j) row[static_cast<std::size_t>(j)] = states(m, j);
        out[m] = payoff(contract, row);
    }
    return out;
}

/// e^{-r (t_to - t_from)}.
double discount(double r, double t_from, double t_to);

}  // namespace bermex
