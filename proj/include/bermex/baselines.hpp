#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bermex/dos.hpp"
#include "bermex/regression.hpp"
#include "bermex/stats.hpp"

namespace bermex {

/// Regression-based Bermudan pricer: least squares Monte Carlo (one global fit per date)
/// or the stochastic grid bundling method (one fit per bundle and date). Exercise at t_n
/// iff g > 0 and g >= the fitted continuation value.
class BaselineModel : public StoppingRule, public ValueFunction {
public:
    enum class Kind { Lsm, Sgbm };

    BaselineModel(Kind kind, Contract contract, TimeGrid grid, double r, BasisSet basis, bool itm_only, int bundles);

    const Contract& contract() const override { return contract_; }
    const TimeGrid& grid() const override { return grid_; }
    std::vector<std::uint8_t> decide_interior(int n, const Eigen::Ref<const RowMatrix>& states) const override;
    /// g at t_N and in the exercise region, the continuation value elsewhere; at t_0 the price.
    /// With itm_only fits the continuation value of out-of-the-money states is an extrapolation.
    Eigen::VectorXd value(int n, const Eigen::Ref<const RowMatrix>& states) const override;

    /// The price's standard error at t_0.
    double sampling_error(int n) const override { return n == 0 ? price.std_err : 0.0; }

    /// Fitted continuation value at an interior date.
    Eigen::VectorXd continuation(int n, const Eigen::Ref<const RowMatrix>& states) const;

    Kind kind() const noexcept { return kind_; }
    double rate() const noexcept { return r_; }
    const BasisSet& basis() const noexcept { return basis_; }
    bool itm_only() const noexcept { return itm_only_; }
    int bundles() const noexcept { return bundles_; }

    /// In-sample price: max(g(x_0), mean discounted cashflow of the fitting paths).
    MeanSe price;
    std::vector<Eigen::VectorXd> coef;  ///< LSM, indexed by date; empty where no fit exists
    std::vector<LocalOls> local;        ///< SGBM, indexed by date
    std::vector<std::string> warnings;

private:
    friend BaselineModel fit_baseline(BaselineModel model, const PathSet& paths);

    Kind kind_;
    Contract contract_;
    TimeGrid grid_;
    double r_;
    BasisSet basis_;
    bool itm_only_;
    int bundles_;
};

/// Longstaff-Schwartz backward pass. `itm_only` restricts each regression to g > 0 samples.
BaselineModel lsm_fit(const PathSet& paths, const Contract& contract, const BasisSet& basis, bool itm_only, double r);

/// Bundled regression of the realised discounted cashflows on all samples of each bundle;
/// bundles are equally sized by the largest price component.
BaselineModel sgbm_fit(const PathSet& paths, const Contract& contract, const BasisSet& basis, int bundles, double r);

/// Exercise decision of a fitted baseline on arbitrary states at date n.
std::vector<std::uint8_t> baseline_exercise_region(const BaselineModel& model, int n,
                                                   const Eigen::Ref<const RowMatrix>& states);

}  // namespace bermex
