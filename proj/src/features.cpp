#include "bermex/features.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace bermex {

RowMatrix make_features(const Contract& contract, const Eigen::Ref<const RowMatrix>& states, bool append_payoff) {
    if (states.cols() != contract.state_dim()) throw std::invalid_argument("state width does not match the contract");
    RowMatrix out(states.rows(), states.cols() + (append_payoff ? 1 : 0));
    out.leftCols(states.cols()) = states;
    if (append_payoff) out.col(states.cols()) = payoff_rows(contract, states);
    return out;
}

FeatureScaler FeatureScaler::identity(int dim) {
    return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

FeatureScaler FeatureScaler::fit(const Eigen::Ref<const RowMatrix>& features) {
    const Eigen::Index n = features.rows();
    if (n < 1) throw std::invalid_argument("cannot fit a scaler on zero rows");
    FeatureScaler s;
    s.mean = features.colwise().mean().transpose();
    s.inv_std.resize(features.cols());
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
        const double var = (features.col(j).array() - s.mean[j]).square().sum() / static_cast<double>(n);
        const double sd = std::sqrt(var);
        s.inv_std[j] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[j])) ? 1.0 / sd : 1.0;
    }
    return s;
}

void FeatureScaler::apply_inplace(RowMatrix& features) const {
    if (empty()) return;
    if (features.cols() != mean.size()) throw std::invalid_argument("scaler width does not match the features");
    features.rowwise() -= mean.transpose();
    features.array().rowwise() *= inv_std.transpose().array();
}

}  // namespace bermex
