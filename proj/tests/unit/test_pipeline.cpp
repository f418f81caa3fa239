#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "bermex/config.hpp"
#include "bermex/pipeline.hpp"

using namespace bermex;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(const fs::path& out) {
    std::istringstream in(R"([experiment]
seed = 3
[model]
type = gbm
assets = 2
s0 = 100
r = 0.05
q = 0.1
sigma = 0.2
[contract]
payoff = max_call
strike = 100
[grid]
maturity = 3
intervals = 4
[paths]
train = 4096
valuation = 4096
regression = 2048
exposure = 4096
[training]
steps_fresh = 40
steps_warm = 20
batch_size = 512
[regression]
steps = 40
batch_size = 512
[exposure]
estimators = EE1_Q, EE2_Q, PFE_Q, EE1_P, EE2_P, EE3_P, PFE_P
mu_p = 0.15
[baselines]
sgbm = true
sgbm_bundles = 4
[boundary]
enabled = true
lo = 80, 80
hi = 140, 140
points = 4, 4
)");
    auto c = parse_config(in);
    c.output_dir = out.string();
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("pipeline runs are byte-identical for one seed") {
    const auto base = fs::temp_directory_path() / "bermex_pipeline_test";
    fs::remove_all(base);
    const auto a = run_pipeline(small_config(base / "a"));
    const auto b = run_pipeline(small_config(base / "b"));
    for (const char* f : {"price_report.csv", "exposure_profile.csv", "exposure_profile_sgbm.csv", "exercise_fraction.csv",
                          "boundary_grid.csv"}) {
        INFO(f);
        REQUIRE(fs::exists(base / "a" / f));
        CHECK(slurp(base / "a" / f) == slurp(base / "b" / f));
    }
    CHECK(fs::exists(base / "a" / "policy" / "manifest.json"));
    CHECK(fs::exists(base / "a" / "surface" / "manifest.json"));
    CHECK(slurp(base / "a" / "run_report.json").find("\"status\": \"ok\"") != std::string::npos);

    CHECK(a.exposure.select("EE3_P", "P(mu=0.15)").size() == 5);
    CHECK(a.exposure.select("EE2_Q", "Q").back().value == 0.0);

    std::ostringstream cmp;
    compare_profiles({a.exposure, b.exposure}, {"a", "b"}, cmp);
    std::istringstream lines(cmp.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "estimator,measure,alpha,date_index,t,value_a,value_b,diff_b_a,se_b_a");
    while (std::getline(lines, line)) {
        const auto diff = line.substr(0, line.rfind(','));
        CHECK(diff.substr(diff.rfind(',') + 1) == "0");
    }

    ExposureProfile shifted = b.exposure;
    for (auto& r : shifted.rows) r.t += 0.5;
    std::ostringstream sink;
    CHECK_THROWS_AS(compare_profiles({a.exposure, shifted}, {"a", "b"}, sink), std::invalid_argument);
    fs::remove_all(base);
}

TEST_CASE("price mode skips regression and exposure") {
    const auto base = fs::temp_directory_path() / "bermex_price_test";
    fs::remove_all(base);
    RunOptions opt;
    opt.exposure = false;
    const auto r = run_pipeline(small_config(base), opt);
    CHECK(r.exposure.rows.empty());
    CHECK_FALSE(fs::exists(base / "exposure_profile.csv"));
    CHECK_FALSE(fs::exists(base / "surface"));
    std::ifstream in(base / "price_report.csv");
    const auto prices = read_price_report(in);
    CHECK(prices.size() == r.prices.size());
    fs::remove_all(base);
}

TEST_CASE("stage seeds depend only on the master seed and stage name") {
    const auto a = StageSeeds::derive(5), b = StageSeeds::derive(5), c = StageSeeds::derive(6);
    CHECK(a.train_paths == b.train_paths);
    CHECK(a.train_paths != a.exposure_paths);
    CHECK(a.train_paths != c.train_paths);
}

TEST_CASE("boundary grid spec") {
    const auto g = BoundaryGrid::parse("60:200:3,50:60:2");
    const auto x = g.states();
    CHECK(x.rows() == 6);
    CHECK(x(0, 0) == 60.0);
    CHECK(x(5, 0) == 200.0);
    CHECK(x(1, 1) == 60.0);
    CHECK_THROWS(BoundaryGrid::parse("60:200"));
    CHECK_THROWS(BoundaryGrid::parse("60:50:3"));
}
