#include <cmath>

#include "binomial.hpp"
#include "doctest.h"

#include "bermex/baselines.hpp"

using namespace bermex;

namespace {

const Contract kPut{PayoffKind::Put, 40.0, 1, 0};

PathSet put_paths(std::size_t m, int dates, std::uint64_t seed) {
    const auto model = GbmModel::symmetric(1, 36.0, 0.06, 0.0, 0.2);
    return simulate_gbm(model, TimeGrid::uniform(1.0, dates), m, Measure::q(), seed);
}

}  // namespace

TEST_CASE("lsm prices the one-dimensional put close to the tree") {
    const auto paths = put_paths(1 << 17, 10, 1);
    const auto lsm = lsm_fit(paths, kPut, BasisSet::make(BasisPreset::LsmBs, kPut), true, 0.06);
    const double ref = oracle::bermudan_put_crr(36, 40, 0.06, 0, 0.2, 1, 10, 6000);
    CHECK(std::abs(lsm.price.mean / ref - 1.0) < 0.01);
    CHECK(lsm.price.mean >= oracle::bs_put(36, 40, 0.06, 0, 0.2, 1) - 3 * lsm.price.std_err);
    const auto oos = price_lower_bound(lsm, put_paths(1 << 17, 10, 2), 0.06);
    CHECK(oos.mean <= ref + 3 * oos.std_err);
}

TEST_CASE("itm-only and all-sample lsm agree within noise") {
    const auto paths = put_paths(1 << 16, 5, 3);
    const auto basis = BasisSet::make(BasisPreset::LsmBs, kPut);
    const auto itm = lsm_fit(paths, kPut, basis, true, 0.06);
    const auto all = lsm_fit(paths, kPut, basis, false, 0.06);
    CHECK(std::abs(itm.price.mean - all.price.mean) < 3 * std::hypot(itm.price.std_err, all.price.std_err));
}

TEST_CASE("sgbm with one bundle matches a global regression") {
    const auto paths = put_paths(1 << 14, 4, 4);
    const auto basis = BasisSet::make(BasisPreset::SgbmBs, kPut);
    const auto one = sgbm_fit(paths, kPut, basis, 1, 0.06);
    const auto global = lsm_fit(paths, kPut, basis, false, 0.06);
    for (int n = 1; n < 4; ++n) {
        REQUIRE(one.local[static_cast<std::size_t>(n)].bundles() == 1);
        CHECK((one.local[static_cast<std::size_t>(n)].coef[0] - global.coef[static_cast<std::size_t>(n)]).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(one.price.mean == global.price.mean);
}

TEST_CASE("baseline exercise regions") {
    const auto paths = put_paths(1 << 14, 4, 5);
    const auto lsm = lsm_fit(paths, kPut, BasisSet::make(BasisPreset::LsmBs, kPut), true, 0.06);
    RowMatrix x(4, 1);
    x << 20, 30, 45, 60;
    const auto f = baseline_exercise_region(lsm, 2, x);
    CHECK(f[0] == 1);
    CHECK(f[2] == 0);
    CHECK(f[3] == 0);
    const auto last = baseline_exercise_region(lsm, 4, x);
    CHECK(last == std::vector<std::uint8_t>{1, 1, 1, 1});
    const auto all = lsm_fit(paths, kPut, BasisSet::make(BasisPreset::LsmBs, kPut), false, 0.06);
    const auto v = all.value(2, x);
    const auto c = all.continuation(2, x);
    const auto fa = baseline_exercise_region(all, 2, x);
    for (int i = 0; i < 4; ++i) CHECK(v[i] == (fa[static_cast<std::size_t>(i)] ? std::max(40.0 - x(i, 0), 0.0) : c[i]));
    CHECK(v[2] > 0.0);
    CHECK(lsm.value(0, paths.at_date(0))[0] == lsm.price.mean);
}
