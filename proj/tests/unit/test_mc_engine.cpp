#include <cmath>
#include <sstream>

#include <boost/math/distributions/lognormal.hpp>

#include "doctest.h"
#include "heston.hpp"

#include "bermex/errors.hpp"
#include "bermex/mc_engine.hpp"
#include "bermex/pathset_io.hpp"
#include "bermex/rng.hpp"
#include "bermex/stats.hpp"

using namespace bermex;

TEST_CASE("philox streams are reproducible and distinct") {
    PathRng a(42, 7), b(42, 7), c(42, 8);
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        CHECK(x > 0.0);
        CHECK(x < 1.0);
        CHECK(x != c.uniform());
    }
    CHECK(derive_seed(1, "train_paths") != derive_seed(1, "val_paths"));
    CHECK(derive_seed(1, "train_paths") == derive_seed(1, "train_paths"));
}

TEST_CASE("normal draws have unit variance") {
    PathRng rng(3, 0);
    std::vector<double> xs(200000), sq(200000);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = rng.normal();
        sq[i] = xs[i] * xs[i];
    }
    const auto m = mean_se(xs);
    const auto v = mean_se(sq);
    CHECK(std::abs(m.mean) < 4 * m.std_err);
    CHECK(std::abs(v.mean - 1.0) < 4 * v.std_err);
}

TEST_CASE("time grid") {
    const auto g = TimeGrid::uniform(3.0, 9, 2);
    CHECK(g.intervals() == 9);
    CHECK(g.substeps() == 2);
    CHECK(g.date(9) == doctest::Approx(3.0));
    CHECK(g.index_of(1.0) == 3);
    CHECK_THROWS_AS(g.index_of(0.5), std::invalid_argument);
}

TEST_CASE("gbm terminal mean and correlation") {
    auto model = GbmModel::symmetric(2, 100.0, 0.05, 0.1, 0.2, 0.5);
    const auto grid = TimeGrid::uniform(1.0, 4);
    const auto paths = simulate_gbm(model, grid, 1 << 17, Measure::q(), 11);
    std::vector<double> s(paths.paths()), z1(paths.paths()), z2(paths.paths()), prod(paths.paths());
    for (std::size_t m = 0; m < paths.paths(); ++m) {
        s[m] = paths.state(m, 4)[0];
        z1[m] = std::log(paths.state(m, 4)[0] / 100.0);
        z2[m] = std::log(paths.state(m, 4)[1] / 100.0);
    }
    const auto ms = mean_se(s);
    CHECK(std::abs(ms.mean - 100.0 * std::exp(-0.05)) < 4 * ms.std_err);
    const double mean_log = (0.05 - 0.1 - 0.02);
    for (std::size_t m = 0; m < paths.paths(); ++m) prod[m] = (z1[m] - mean_log) * (z2[m] - mean_log) / 0.04;
    const auto corr = mean_se(prod);
    CHECK(std::abs(corr.mean - 0.5) < 4 * corr.std_err);
}

TEST_CASE("paths are deterministic per seed and independent of the path count") {
    auto model = GbmModel::symmetric(3, 100.0, 0.03, 0.0, 0.25, 0.2);
    const auto grid = TimeGrid::uniform(1.0, 5);
    const auto a = simulate_gbm(model, grid, 1000, Measure::q(), 5);
    const auto b = simulate_gbm(model, grid, 500, Measure::q(), 5);
    for (std::size_t m = 0; m < 500; ++m)
        for (int n = 0; n <= 5; ++n)
            for (int j = 0; j < 3; ++j) CHECK(a.state(m, n)[j] == b.state(m, n)[j]);
}

TEST_CASE("correlation factor") {
    Eigen::MatrixXd rho(3, 3);
    rho << 1, 0.3, 0.2, 0.3, 1, 0.1, 0.2, 0.1, 1;
    const auto L = correlation_factor(rho);
    CHECK((L * L.transpose() - rho).norm() < 1e-14);

    Eigen::MatrixXd singular = Eigen::MatrixXd::Ones(2, 2);
    const auto Ls = correlation_factor(singular);
    CHECK((Ls * Ls.transpose() - singular).norm() < 1e-12);

    Eigen::MatrixXd bad(3, 3);
    bad << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1;
    try {
        correlation_factor(bad);
        FAIL("expected a numeric error");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("minor") != std::string::npos);
    }
}

TEST_CASE("one-dimensional transition density matches the lognormal law") {
    auto model = GbmModel::symmetric(1, 100.0, 0.05, 0.02, 0.3);
    model.mu_p = Eigen::VectorXd::Constant(1, 0.12);
    const double dt = 0.4;
    for (double y : {60.0, 95.0, 100.0, 140.0}) {
        const double x = 100.0;
        const boost::math::lognormal_distribution<double> q(std::log(x) + (0.05 - 0.02 - 0.045) * dt, 0.3 * std::sqrt(dt));
        const boost::math::lognormal_distribution<double> p(std::log(x) + (0.12 - 0.02 - 0.045) * dt, 0.3 * std::sqrt(dt));
        const double xs[] = {x}, ys[] = {y};
        CHECK(gbm_transition_density(model, MeasureKind::Q, 0.0, dt, xs, ys) ==
              doctest::Approx(boost::math::pdf(q, y)).epsilon(1e-12));
        CHECK(gbm_transition_density(model, MeasureKind::P, 0.0, dt, xs, ys) ==
              doctest::Approx(boost::math::pdf(p, y)).epsilon(1e-12));
    }
}

TEST_CASE("likelihood ratio is a Q-martingale with mean one") {
    auto model = GbmModel::symmetric(2, 100.0, 0.05, 0.1, 0.2);
    model.mu_p = Eigen::VectorXd::Constant(2, 0.15);
    const auto grid = TimeGrid::uniform(3.0, 9);
    const auto paths = simulate_gbm(model, grid, 1 << 16, Measure::q(), 21);
    const LogLikelihoodRatio llr(model, grid);
    for (int n : {1, 5, 9}) {
        std::vector<double> l(paths.paths());
        for (std::size_t m = 0; m < paths.paths(); ++m) l[m] = std::exp(llr.cumulative(paths.path(m))[n]);
        const auto s = mean_se(l);
        CHECK(std::abs(s.mean - 1.0) < 4 * s.std_err);
    }
    const auto full = paths.path(0);
    const double lr = likelihood_ratio(model, grid, full.first(3 * 2));
    CHECK(lr == doctest::Approx(std::exp(llr.cumulative(full)[2])).epsilon(1e-12));
}

TEST_CASE("switched paths use the real-world drift only up to the switch date") {
    auto model = GbmModel::symmetric(1, 100.0, 0.05, 0.0, 0.2);
    model.mu_p = Eigen::VectorXd::Constant(1, 0.25);
    const auto grid = TimeGrid::uniform(2.0, 4);
    const auto sw = simulate_switched(model, grid, 2, 1 << 17, 8);
    std::vector<double> s2(sw.paths()), ratio(sw.paths());
    for (std::size_t m = 0; m < sw.paths(); ++m) {
        s2[m] = sw.state(m, 2)[0];
        ratio[m] = sw.state(m, 4)[0] / sw.state(m, 2)[0];
    }
    const auto a = mean_se(s2);
    const auto b = mean_se(ratio);
    CHECK(std::abs(a.mean - 100.0 * std::exp(0.25)) < 4 * a.std_err);
    CHECK(std::abs(b.mean - std::exp(0.05)) < 4 * b.std_err);
    CHECK(sw.measure() == Measure::switched(2));
    CHECK_THROWS(simulate_switched(model, grid, 0.3, 10, 1));
}

TEST_CASE("heston QE matches the semi-analytic european put") {
    HestonModel h{100.0, 0.0348, 0.04, 0.0, 1.15, 0.0348, 0.459, -0.64};
    const auto grid = TimeGrid::uniform(0.25, 1, 20);
    const auto paths = simulate_heston(h, grid, 1 << 18, 17, {1.5, true});
    std::vector<double> put(paths.paths()), fwd(paths.paths());
    for (std::size_t m = 0; m < paths.paths(); ++m) {
        const double s = paths.state(m, 1)[1];
        put[m] = std::exp(-0.04 * 0.25) * std::max(100.0 - s, 0.0);
        fwd[m] = s;
        CHECK(paths.state(m, 1)[0] >= 0.0);
    }
    const auto p = mean_se(put);
    const auto f = mean_se(fwd);
    const double ref = oracle::heston_put({100.0, 0.0348, 0.04, 0.0, 1.15, 0.0348, 0.459, -0.64}, 100.0, 0.25);
    CHECK(std::abs(p.mean - ref) < 4 * p.std_err);
    CHECK(std::abs(f.mean - 100.0 * std::exp(0.01)) < 4 * f.std_err);
    CHECK_FALSE(h.feller_satisfied());
}

TEST_CASE("path set binary round trip") {
    auto model = GbmModel::symmetric(2, 100.0, 0.05, 0.1, 0.2);
    const auto grid = TimeGrid::uniform(3.0, 9);
    model.mu_p = Eigen::VectorXd::Constant(2, 0.1);
    const auto paths = simulate_gbm(model, grid, 64, Measure::p(), 99);
    std::stringstream buf;
    write_pathset(buf, paths);
    const auto back = read_pathset(buf);
    CHECK(back.paths() == 64);
    CHECK(back.dim() == 2);
    CHECK(back.grid() == grid);
    CHECK(back.measure() == Measure::p());
    CHECK(back.seed() == 99);
    CHECK(std::equal(back.raw().begin(), back.raw().end(), paths.raw().begin()));

    std::stringstream bad("XXXX");
    CHECK_THROWS(read_pathset(bad));
}
