#include <sstream>

#include "doctest.h"

#include "bermex/config.hpp"
#include "bermex/errors.hpp"

using namespace bermex;

namespace {

const char* kGbm = R"([experiment]
name = demo
seed = 17

[model]
type = gbm
assets = 2
s0 = 100, 95
r = 0.05
q = 0.1
sigma = 0.2, 0.25
rho = 1, 0.3; 0.3, 1

[contract]
payoff = max_call
strike = 100

[grid]
maturity = 3
intervals = 9

[paths]
train = 2^12
exposure = 5000

[training]
filter = A3
hidden = 20, 20
lr_warm = 0.0001

[exposure]
estimators = EE1_Q, EE2_P, EE3_P
alphas = 0.05, 0.95
mu_p = 0.15; -0.05, 0.1
)";

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

int error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

}  // namespace

TEST_CASE("parse a gbm configuration") {
    const auto c = parse(kGbm);
    CHECK(c.name == "demo");
    CHECK(c.seed == 17);
    CHECK(c.gbm.dim() == 2);
    CHECK(c.gbm.s0[1] == 95.0);
    CHECK(c.gbm.rho(0, 1) == 0.3);
    CHECK(c.train_paths == 4096);
    CHECK(c.exposure_paths == 5000);
    CHECK(c.training.filter == FilterMode::A3);
    CHECK(c.training.hidden == std::vector<int>{20, 20});
    CHECK(c.real_world.size() == 2);
    CHECK(c.real_world[0].mu == Eigen::Vector2d(0.15, 0.15));
    CHECK(c.real_world[1].mu == Eigen::Vector2d(-0.05, 0.1));
    CHECK(c.real_world[0].label == "P(mu=0.15)");
    CHECK(c.grid().intervals() == 9);
}

TEST_CASE("serialize then parse is the identity") {
    const auto c = parse(kGbm);
    const std::string text = serialize_config(c);
    const auto back = parse(text);
    CHECK(serialize_config(back) == text);
    CHECK(back.gbm.sigma == c.gbm.sigma);
    CHECK(back.real_world[1].mu == c.real_world[1].mu);

    const std::string heston = "[model]\ntype = heston\ns0 = 100\nnu0 = 0.0348\nr = 0.04\nkappa = 1.15\ntheta = 0.0348\n"
                               "xi = 0.459\nrho = -0.64\nmartingale_correction = true\n[contract]\npayoff = put\nstrike = 100\n"
                               "[grid]\nmaturity = 0.25\nintervals = 10\n";
    const auto h = parse(heston);
    CHECK(h.model == ModelKind::Heston);
    CHECK(h.contract.state_offset == 1);
    CHECK(h.qe.martingale_correction);
    CHECK(serialize_config(parse(serialize_config(h))) == serialize_config(h));
    CHECK(h.heston.xi == 0.459);
}

TEST_CASE("errors name the line and field") {
    std::string bad = kGbm;
    bad.replace(bad.find("strike = 100"), 12, "strike = -4");
    try {
        parse(bad);
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(e.field().rfind("contract", 0) == 0);
        CHECK(e.line() == 16);
    }
    std::string unknown = kGbm;
    unknown.replace(unknown.find("[grid]"), 6, "[grid]\nsteps = 3");
    CHECK(error_line(unknown) == 19);
    std::string alpha = kGbm;
    alpha.replace(alpha.find("0.05, 0.95"), 10, "0.05, 1.5");
    CHECK(error_line(alpha) == 33);
    std::string est = kGbm;
    est.replace(est.find("EE3_P"), 5, "EE9_P");
    CHECK(error_line(est) == 32);
    CHECK(error_line("[model]\ntype = lognormal\n") == 2);
    CHECK(error_line("name = x\n") == 1);
    CHECK(error_line("[model]\ntype = gbm\n[extra]\nk = 1\n") == 3);
}

TEST_CASE("semantic validation") {
    std::string no_drift = kGbm;
    no_drift.replace(no_drift.find("mu_p = 0.15; -0.05, 0.1"), 23, "");
    CHECK_THROWS_AS(parse(no_drift), ConfigError);
    std::string bad_rho = kGbm;
    bad_rho.replace(bad_rho.find("1, 0.3; 0.3, 1"), 14, "1, 2; 2, 1");
    CHECK_THROWS_AS(parse(bad_rho), ConfigError);
    std::string heston_p = "[model]\ntype = heston\ns0 = 100\nnu0 = 0.04\nr = 0.04\nkappa = 1\ntheta = 0.04\nxi = 0.3\n"
                           "[contract]\npayoff = put\nstrike = 100\n[exposure]\nestimators = EE3_P\nmu_p = 0.1\n";
    CHECK_THROWS_AS(parse(heston_p), ConfigError);
}
