#include <cmath>
#include <filesystem>
#include <memory>

#include "doctest.h"

#include "bermex/dos.hpp"
#include "bermex/regression.hpp"
#include "bermex/rng.hpp"

using namespace bermex;

namespace {

class BelowLevel : public StoppingRule {
public:
    BelowLevel(TimeGrid grid, double level) : contract_{PayoffKind::Put, 40.0, 1, 0}, grid_(std::move(grid)), level_(level) {}
    const Contract& contract() const override { return contract_; }
    const TimeGrid& grid() const override { return grid_; }
    std::vector<std::uint8_t> decide_interior(int, const Eigen::Ref<const RowMatrix>& s) const override {
        std::vector<std::uint8_t> f(static_cast<std::size_t>(s.rows()));
        for (Eigen::Index i = 0; i < s.rows(); ++i) f[static_cast<std::size_t>(i)] = s(i, 0) < level_;
        return f;
    }

private:
    Contract contract_;
    TimeGrid grid_;
    double level_;
};

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    PathRng rng(seed, 0);
    Eigen::MatrixXd a(rows, cols);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    return a;
}

}  // namespace

TEST_CASE("laguerre polynomials") {
    for (double x : {0.0, 0.3, 1.7, 4.2}) {
        CHECK(laguerre(0, x) == 1.0);
        CHECK(laguerre(1, x) == doctest::Approx(1 - x));
        CHECK(laguerre(2, x) == doctest::Approx((x * x - 4 * x + 2) / 2));
        CHECK(laguerre(3, x) == doctest::Approx((-x * x * x + 9 * x * x - 18 * x + 6) / 6));
        CHECK(weighted_laguerre(2, x) == doctest::Approx(std::exp(-x / 2) * laguerre(2, x)));
    }
}

TEST_CASE("basis presets") {
    const Contract mc{PayoffKind::MaxCall, 100.0, 2, 0};
    for (auto p : {BasisPreset::Constant, BasisPreset::Monomial, BasisPreset::LsmBs, BasisPreset::SgbmBs}) {
        const auto b = BasisSet::make(p, mc);
        RowMatrix x(3, 2);
        x << 90, 110, 100, 100, 120, 80;
        const auto d = b.design(x);
        CHECK(d.cols() == b.size());
        CHECK(static_cast<int>(b.names().size()) == b.size());
        CHECK(d.col(0).isOnes());
        CHECK(basis_preset_from_string(to_string(p)) == p);
    }
    const Contract hp{PayoffKind::Put, 100.0, 1, 1};
    CHECK(BasisSet::make(BasisPreset::LsmHeston, hp).size() == 8);
    CHECK(BasisSet::make(BasisPreset::SgbmHeston, hp).size() == 6);
}

TEST_CASE("ols residuals are orthogonal to the design") {
    const auto X = random_matrix(500, 6, 1);
    const Eigen::VectorXd y = random_matrix(500, 1, 2).col(0);
    const auto fit = fit_ols(X, y);
    const Eigen::VectorXd res = y - X * fit.coef;
    CHECK((X.transpose() * res).norm() < 1e-8 * y.norm());
    CHECK(fit.rank == 6);
    CHECK_FALSE(fit.rank_deficient);
}

TEST_CASE("ols recovers in-span targets and handles rank deficiency") {
    const auto X = random_matrix(300, 4, 3);
    Eigen::VectorXd beta(4);
    beta << 1.5, -2.0, 0.25, 3.0;
    const auto fit = fit_ols(X, X * beta);
    CHECK((fit.coef - beta).cwiseAbs().maxCoeff() < 1e-10);

    Eigen::MatrixXd dup(300, 5);
    dup << X, X.col(0);
    const auto md = fit_ols(dup, X * beta);
    CHECK(md.rank_deficient);
    CHECK(md.rank == 4);
    CHECK((dup * md.coef - X * beta).norm() < 1e-9 * (X * beta).norm());
    CHECK(md.coef[0] == doctest::Approx(md.coef[4]).epsilon(1e-9));
}

TEST_CASE("one bundle equals the global fit exactly") {
    const auto X = random_matrix(400, 5, 4);
    const Eigen::VectorXd y = random_matrix(400, 1, 5).col(0);
    const Eigen::VectorXd stat = random_matrix(400, 1, 6).col(0);
    const auto local = fit_ols_local(X, y, stat, 1);
    const auto global = fit_ols(X, y);
    CHECK(local.bundles() == 1);
    CHECK(local.coef[0] == global.coef);
}

TEST_CASE("bundles are equal in size and boundary queries go to the lower bundle") {
    const auto X = random_matrix(1000, 3, 7);
    const Eigen::VectorXd y = random_matrix(1000, 1, 8).col(0);
    Eigen::VectorXd stat(1000);
    for (int i = 0; i < 1000; ++i) stat[i] = (i * 7919) % 1000;
    const auto local = fit_ols_local(X, y, stat, 4);
    CHECK(local.bundles() == 4);
    for (auto c : local.counts) CHECK(c == 250);
    CHECK(local.upper[0] == 249.0);
    CHECK(local.bundle_of(249.0) == 0);
    CHECK(local.bundle_of(249.5) == 1);
    CHECK(local.bundle_of(-1e9) == 0);
    CHECK(local.bundle_of(1e9) == 3);
    const auto few = fit_ols_local(X.topRows(3), y.head(3), stat.head(3), 10);
    CHECK(few.bundles() == 3);
}

TEST_CASE("value surface follows the exercise rule") {
    const auto model = GbmModel::symmetric(1, 36.0, 0.06, 0.0, 0.2);
    const auto grid = TimeGrid::uniform(1.0, 4);
    const auto paths = simulate_gbm(model, grid, 1 << 14, Measure::q(), 9);
    auto rule = std::make_shared<BelowLevel>(grid, 32.0);
    RegressionConfig cfg;
    cfg.method = RegressionMethod::OlsGlobal;
    cfg.basis = BasisPreset::Monomial;
    cfg.degree = 3;
    const auto surface = fit_surface(rule, paths, 0.06, cfg);

    RowMatrix x(5, 1);
    x << 25, 31.9, 32, 40, 50;
    for (int n = 1; n < 4; ++n) {
        const auto v = surface.value(n, x);
        CHECK(v[0] == 15.0);
        CHECK(v[1] == doctest::Approx(8.1));
        CHECK(v[2] > 0.0);
    }
    const auto vN = surface.value(4, x);
    CHECK(vN[3] == 0.0);
    CHECK(vN[0] == 15.0);
    const auto cf = build_cashflows(*rule, paths, 0.06);
    CHECK(surface.value(0, paths.at_date(0))[0] == doctest::Approx(cf.column(0).mean()).epsilon(1e-12));

    const auto dir = std::filesystem::temp_directory_path() / "bermex_surface_test";
    std::filesystem::remove_all(dir);
    surface.save(dir);
    const auto back = ValueSurface::load(dir, rule);
    for (int n = 0; n <= 4; ++n) CHECK(back.value(n, x) == surface.value(n, x));
    std::filesystem::remove_all(dir);
}

TEST_CASE("payoff-shift relu surface never falls below the payoff") {
    const auto model = GbmModel::symmetric(1, 36.0, 0.06, 0.0, 0.2);
    const auto grid = TimeGrid::uniform(1.0, 3);
    const auto paths = simulate_gbm(model, grid, 1 << 12, Measure::q(), 10);
    auto rule = std::make_shared<BelowLevel>(grid, 30.0);
    RegressionConfig cfg;
    cfg.method = RegressionMethod::Nn;
    cfg.output_mode = OutputMode::PayoffShiftRelu;
    cfg.steps = 100;
    cfg.batch_size = 512;
    cfg.hidden = {8, 8};
    const auto surface = fit_surface(rule, paths, 0.06, cfg);
    PathRng rng(2, 0);
    RowMatrix x(20000, 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 0) = 10.0 + 60.0 * rng.uniform();
    const Eigen::VectorXd g = payoff_rows(rule->contract(), x);
    for (int n = 1; n < 3; ++n) CHECK((surface.regression_value(n, x) - g).minCoeff() >= 0.0);
}
