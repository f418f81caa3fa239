#include <cmath>
#include <filesystem>

#include "doctest.h"

#include "bermex/dos.hpp"
#include "bermex/payoffs.hpp"

using namespace bermex;

namespace {

/// Exercise a put whenever the spot is below a fixed level.
class ThresholdRule : public StoppingRule {
public:
    ThresholdRule(TimeGrid grid, double level) : contract_{PayoffKind::Put, 40.0, 1, 0}, grid_(std::move(grid)), level_(level) {}
    const Contract& contract() const override { return contract_; }
    const TimeGrid& grid() const override { return grid_; }
    std::vector<std::uint8_t> decide_interior(int, const Eigen::Ref<const RowMatrix>& states) const override {
        std::vector<std::uint8_t> f(static_cast<std::size_t>(states.rows()));
        for (Eigen::Index i = 0; i < states.rows(); ++i) f[static_cast<std::size_t>(i)] = states(i, 0) < level_;
        return f;
    }

private:
    Contract contract_;
    TimeGrid grid_;
    double level_;
};

PathSet put_paths(std::size_t m, int dates, std::uint64_t seed) {
    const auto model = GbmModel::symmetric(1, 36.0, 0.06, 0.0, 0.2);
    return simulate_gbm(model, TimeGrid::uniform(1.0, dates), m, Measure::q(), seed);
}

TrainConfig quick_config(FilterMode mode) {
    TrainConfig cfg;
    cfg.batch_size = 1024;
    cfg.steps_fresh = 150;
    cfg.steps_warm = 60;
    cfg.filter = mode;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("stopping index by scan, by sum-product and by brute force") {
    const int N = 6;
    for (int bits = 0; bits < (1 << (N + 1)); ++bits) {
        std::vector<std::uint8_t> f(N + 1);
        for (int n = 0; n <= N; ++n) f[n] = (bits >> n) & 1;
        for (int from = 0; from <= N; ++from) {
            int expected = N;
            for (int n = std::max(from, 1); n < N; ++n)
                if (f[n]) {
                    expected = n;
                    break;
                }
            CHECK(first_hit(f, from) == expected);
            CHECK(stopping_index_sum_product(f, from) == expected);
        }
    }
}

TEST_CASE("cashflow recursion under a fixed rule") {
    const auto paths = put_paths(2000, 5, 3);
    const ThresholdRule rule(paths.grid(), 33.0);
    const auto cf = build_cashflows(rule, paths, 0.06);
    const auto tau = stopping_indices(rule, paths);
    const double dt = 0.2;
    for (std::size_t m = 0; m < paths.paths(); ++m) {
        CHECK(cf.stop(m, 0) == tau[m]);
        CHECK(tau[m] == stopping_time(rule, paths.path(m)));
        for (int n = 0; n <= 5; ++n) {
            int k = 5;
            for (int j = std::max(n, 1); j < 5; ++j)
                if (paths.state(m, j)[0] < 33.0) {
                    k = j;
                    break;
                }
            CHECK(cf.stop(m, n) == k);
            const double g = std::max(40.0 - paths.state(m, k)[0], 0.0);
            CHECK(cf.cashflow(m, n) == doctest::Approx(std::exp(-0.06 * dt * (k - n)) * g).epsilon(1e-13));
        }
    }
    const auto frac = exercise_fraction(rule, paths);
    double total = 0.0;
    for (double x : frac) total += x;
    CHECK(total == doctest::Approx(1.0));
    CHECK(frac[0] == 0.0);
    const auto p = price_lower_bound(rule, paths, 0.06);
    CHECK(p.mean == doctest::Approx(cf.column(0).mean()).epsilon(1e-12));
}

TEST_CASE("A2 policy never exercises out of the money") {
    const auto paths = put_paths(1 << 13, 5, 11);
    const Contract put{PayoffKind::Put, 40.0, 1, 0};
    const auto policy = train_policy(paths, put, 0.06, quick_config(FilterMode::A2));
    RowMatrix x(200, 1);
    for (int i = 0; i < 200; ++i) x(i, 0) = 20.0 + 40.0 * i / 199.0;
    for (int n = 1; n < 5; ++n) {
        const auto f = policy.decide(n, x);
        for (int i = 0; i < 200; ++i)
            if (x(i, 0) >= 40.0) CHECK(f[static_cast<std::size_t>(i)] == 0);
    }
    CHECK(policy.decide(0, x) == std::vector<std::uint8_t>(200, 0));
    CHECK(policy.decide(5, x) == std::vector<std::uint8_t>(200, 1));
}

TEST_CASE("A3 policy decisions are monotone in time") {
    const auto paths = put_paths(1 << 13, 5, 12);
    const Contract put{PayoffKind::Put, 40.0, 1, 0};
    const auto policy = train_policy(paths, put, 0.06, quick_config(FilterMode::A3));
    RowMatrix x(400, 1);
    for (int i = 0; i < 400; ++i) x(i, 0) = 20.0 + 40.0 * i / 399.0;
    for (int n = 1; n < 5; ++n) {
        const auto f = policy.decide(n, x);
        const auto next = policy.decide(n + 1, x);
        for (std::size_t i = 0; i < f.size(); ++i) CHECK(f[i] <= next[i]);
    }
}

TEST_CASE("policy bundle round trip and degenerate dates") {
    const auto paths = put_paths(1 << 12, 4, 13);
    const Contract put{PayoffKind::Put, 40.0, 1, 0};
    auto policy = train_policy(paths, put, 0.06, quick_config(FilterMode::A1));
    const auto dir = std::filesystem::temp_directory_path() / "bermex_policy_test";
    std::filesystem::remove_all(dir);
    policy.save(dir);
    const auto back = DecisionPolicy::load(dir);
    for (int n = 1; n < 4; ++n) {
        CHECK(back.network(n) == policy.network(n));
        CHECK(back.decide(n, paths.at_date(n)) == policy.decide(n, paths.at_date(n)));
    }
    CHECK(back.mode() == FilterMode::A1);
    policy.set_degenerate(2);
    CHECK_FALSE(policy.has_network(2));
    const auto f = policy.decide(2, paths.at_date(2));
    CHECK(std::all_of(f.begin(), f.end(), [](std::uint8_t v) { return v == 0; }));
    std::filesystem::remove_all(dir);
}

TEST_CASE("training is deterministic given the seed") {
    const auto paths = put_paths(1 << 12, 3, 14);
    const Contract put{PayoffKind::Put, 40.0, 1, 0};
    const auto a = train_policy(paths, put, 0.06, quick_config(FilterMode::A2));
    const auto b = train_policy(paths, put, 0.06, quick_config(FilterMode::A2));
    for (int n = 1; n < 3; ++n) CHECK(a.network(n) == b.network(n));
    CHECK(filter_mode_from_string(to_string(FilterMode::A3)) == FilterMode::A3);
}
