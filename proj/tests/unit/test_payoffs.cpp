#include <cmath>
#include <vector>

#include "doctest.h"

#include "bermex/features.hpp"
#include "bermex/payoffs.hpp"
#include "bermex/rng.hpp"

using namespace bermex;

TEST_CASE("payoff values") {
    const Contract mc{PayoffKind::MaxCall, 100.0, 2, 0};
    const double a[] = {90.0, 105.0};
    CHECK(payoff(mc, a) == 5.0);
    const double atm[] = {100.0, 100.0};
    CHECK(payoff(mc, atm) == 0.0);
    CHECK_FALSE(is_itm(mc, atm));

    const Contract put{PayoffKind::Put, 100.0, 1, 0};
    const double s110[] = {110.0}, s9999[] = {99.99};
    CHECK(payoff(put, s110) == 0.0);
    CHECK(is_itm(put, s9999));

    const Contract basket{PayoffKind::ArithmeticBasketPut, 100.0, 5, 0};
    const std::vector<double> flat(5, 100.0);
    CHECK(payoff(basket, flat) == 0.0);
    const std::vector<double> low{90, 95, 100, 105, 80};
    CHECK(payoff(basket, low) == doctest::Approx(6.0));

    const Contract geo{PayoffKind::GeometricBasketCall, 100.0, 2, 0};
    const double g[] = {121.0, 100.0};
    CHECK(payoff(geo, g) == doctest::Approx(10.0));

    const Contract heston_put{PayoffKind::Put, 100.0, 1, 1};
    const double state[] = {0.04, 90.0};
    CHECK(payoff(heston_put, state) == 10.0);
    CHECK_THROWS_AS(payoff(heston_put, s110), std::invalid_argument);
}

TEST_CASE("names round trip") {
    for (auto k : {PayoffKind::MaxCall, PayoffKind::Put, PayoffKind::ArithmeticBasketPut,
                   PayoffKind::ArithmeticBasketCall, PayoffKind::GeometricBasketCall})
        CHECK(payoff_kind_from_string(to_string(k)) == k);
    CHECK_THROWS(payoff_kind_from_string("straddle"));
    CHECK_THROWS(Contract{PayoffKind::Put, -1.0, 1, 0}.validate());
}

TEST_CASE("payoff properties on random states") {
    PathRng rng(1, 0);
    const Contract mc{PayoffKind::MaxCall, 100.0, 3, 0};
    const Contract put{PayoffKind::Put, 100.0, 1, 0};
    for (int i = 0; i < 10000; ++i) {
        double x[3] = {50 + 100 * rng.uniform(), 50 + 100 * rng.uniform(), 50 + 100 * rng.uniform()};
        const double g = payoff(mc, x);
        CHECK(g >= 0.0);
        CHECK(is_itm(mc, x) == (g > 0.0));
        double bumped[3] = {x[0] + 1e-7, x[1], x[2]};
        CHECK(payoff(mc, bumped) >= g);
        CHECK(std::abs(payoff(mc, bumped) - g) <= 1e-7 + 1e-12);
        double s[1] = {x[0]}, s_up[1] = {x[0] + 1.0};
        CHECK(payoff(put, s_up) <= payoff(put, s));
    }
}

TEST_CASE("discounting") {
    CHECK(discount(0.05, 1.0, 1.0) == 1.0);
    CHECK(discount(0.0, 0.0, 3.0) == 1.0);
    CHECK(discount(0.05, 0.0, 3.0) == doctest::Approx(std::exp(-0.15)).epsilon(1e-15));
}

TEST_CASE("features and scaler") {
    const Contract put{PayoffKind::Put, 100.0, 1, 0};
    RowMatrix x(3, 1);
    x << 90, 100, 110;
    auto f = make_features(put, x, true);
    CHECK(f.cols() == 2);
    CHECK(f(0, 1) == 10.0);
    const auto sc = FeatureScaler::fit(f);
    sc.apply_inplace(f);
    CHECK(std::abs(f.col(0).mean()) < 1e-12);
    CHECK(std::abs(f.col(1).mean()) < 1e-12);
    CHECK(FeatureScaler::identity(2).inv_std.isOnes());
}
