#include "bermex/baselines.hpp"

#include <stdexcept>

namespace bermex {

BaselineModel::BaselineModel(Kind kind, Contract contract, TimeGrid grid, double r, BasisSet basis, bool itm_only,
                             int bundles)
    : kind_(kind), contract_(contract), grid_(std::move(grid)), r_(r), basis_(basis), itm_only_(itm_only),
      bundles_(bundles) {
    contract_.validate();
    if (bundles_ < 1) throw std::invalid_argument("bundle count must be >= 1");
    coef.resize(grid_.dates().size());
    local.resize(grid_.dates().size());
}

Eigen::VectorXd BaselineModel::continuation(int n, const Eigen::Ref<const RowMatrix>& states) const {
    if (n <= 0 || n >= grid_.intervals()) throw std::out_of_range("continuation values live at dates 1..N-1");
    const auto un = static_cast<std::size_t>(n);
    if (kind_ == Kind::Lsm) {
        if (coef[un].size() == 0) return Eigen::VectorXd::Constant(states.rows(), std::numeric_limits<double>::infinity());
        return basis_.design(states) * coef[un];
    }
    if (local[un].bundles() == 0) return Eigen::VectorXd::Constant(states.rows(), std::numeric_limits<double>::infinity());
    return local[un].predict(basis_.design(states), bundling_statistic(contract_, states));
}

std::vector<std::uint8_t> BaselineModel::decide_interior(int n, const Eigen::Ref<const RowMatrix>& states) const {
    const Eigen::VectorXd c = continuation(n, states);
    const Eigen::VectorXd g = payoff_rows(contract_, states);
    std::vector<std::uint8_t> f(static_cast<std::size_t>(states.rows()));
    for (Eigen::Index m = 0; m < g.size(); ++m) f[static_cast<std::size_t>(m)] = g[m] > 0.0 && g[m] >= c[m];
    return f;
}

Eigen::VectorXd BaselineModel::value(int n, const Eigen::Ref<const RowMatrix>& states) const {
    const Eigen::VectorXd g = payoff_rows(contract_, states);
    if (n == grid_.intervals()) return g;
    if (n == 0) return Eigen::VectorXd::Constant(states.rows(), price.mean);
    const Eigen::VectorXd c = continuation(n, states);
    Eigen::VectorXd v(g.size());
    for (Eigen::Index m = 0; m < g.size(); ++m) v[m] = g[m] > 0.0 && g[m] >= c[m] ? g[m] : c[m];
    return v;
}

BaselineModel fit_baseline(BaselineModel model, const PathSet& paths) {
    if (paths.dim() != model.contract_.state_dim()) throw std::invalid_argument("path dimension does not match the contract");
    if (paths.grid().dates() != model.grid_.dates()) throw std::invalid_argument("paths use different exercise dates");
    const int last = paths.grid().intervals();
    const auto rows = static_cast<Eigen::Index>(paths.paths());
    const Contract& contract = model.contract_;
    Eigen::VectorXd cf = payoff_rows(contract, paths.at_date(last));
    for (int n = last - 1; n >= 1; --n) {
        const auto un = static_cast<std::size_t>(n);
        const auto x = paths.at_date(n);
        const Eigen::VectorXd g = payoff_rows(contract, x);
        const Eigen::VectorXd target = discount(model.r_, paths.grid().date(n), paths.grid().date(n + 1)) * cf;
        const Eigen::MatrixXd phi = model.basis_.design(x);
        const std::string where = "date " + std::to_string(n) + ": ";
        if (model.kind_ == BaselineModel::Kind::Lsm) {
            std::vector<Eigen::Index> keep;
            for (Eigen::Index m = 0; m < rows; ++m)
                if (!model.itm_only_ || g[m] > 0.0) keep.push_back(m);
            if (keep.empty()) {
                model.warnings.push_back(where + "no in-the-money samples, never exercising");
                cf = target;
                continue;
            }
            Eigen::MatrixXd sub(static_cast<Eigen::Index>(keep.size()), phi.cols());
            Eigen::VectorXd ys(static_cast<Eigen::Index>(keep.size()));
            for (std::size_t i = 0; i < keep.size(); ++i) {
                sub.row(static_cast<Eigen::Index>(i)) = phi.row(keep[i]);
                ys[static_cast<Eigen::Index>(i)] = target[keep[i]];
            }
            const auto fit = fit_ols(sub, ys);
            if (fit.rank_deficient)
                model.warnings.push_back(where + "rank-deficient design (rank " + std::to_string(fit.rank) +
                                         "), minimum-norm solution used");
            model.coef[un] = fit.coef;
        } else {
            std::vector<std::string> w;
            model.local[un] = fit_ols_local(phi, target, bundling_statistic(contract, x), model.bundles_, &w);
            for (auto& msg : w) model.warnings.push_back(where + msg);
        }
        const auto f = model.decide_interior(n, x);
        for (Eigen::Index m = 0; m < rows; ++m) cf[m] = f[static_cast<std::size_t>(m)] ? g[m] : target[m];
    }
    const Eigen::VectorXd y0 = discount(model.r_, paths.grid().date(0), paths.grid().date(1)) * cf;
    const MeanSe cont = mean_se(std::span<const double>(y0.data(), static_cast<std::size_t>(y0.size())));
    const double g0 = payoff(contract, paths.state(0, 0));
    model.price = g0 > cont.mean ? MeanSe{g0, 0.0} : cont;
    return model;
}

BaselineModel lsm_fit(const PathSet& paths, const Contract& contract, const BasisSet& basis, bool itm_only, double r) {
    return fit_baseline(BaselineModel(BaselineModel::Kind::Lsm, contract, paths.grid(), r, basis, itm_only, 1), paths);
}

BaselineModel sgbm_fit(const PathSet& paths, const Contract& contract, const BasisSet& basis, int bundles, double r) {
    return fit_baseline(BaselineModel(BaselineModel::Kind::Sgbm, contract, paths.grid(), r, basis, false, bundles), paths);
}

std::vector<std::uint8_t> baseline_exercise_region(const BaselineModel& model, int n,
                                                   const Eigen::Ref<const RowMatrix>& states) {
    return model.decide(n, states);
}

}  // namespace bermex
