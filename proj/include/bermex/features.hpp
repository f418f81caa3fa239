#pragma once

#include <Eigen/Core>

#include "bermex/mc_engine.hpp"
#include "bermex/payoffs.hpp"

namespace bermex {

/// Network inputs: the state, optionally followed by the immediate payoff.
RowMatrix make_features(const Contract& contract, const Eigen::Ref<const RowMatrix>& states, bool append_payoff);

/// Affine standardisation of network inputs: (x - mean) * inv_std, column-wise.
struct FeatureScaler {
    Eigen::VectorXd mean;
    Eigen::VectorXd inv_std;

    static FeatureScaler identity(int dim);
    /// Column means and inverse standard deviations; constant columns get inv_std = 1.
    static FeatureScaler fit(const Eigen::Ref<const RowMatrix>& features);

    void apply_inplace(RowMatrix& features) const;
    bool empty() const noexcept { return mean.size() == 0; }
};

}  // namespace bermex
