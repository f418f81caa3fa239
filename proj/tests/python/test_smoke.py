import math
from pathlib import Path

import numpy as np
import pytest

import bermex

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


def put_setup(paths=1 << 14, seed=1):
    model = bermex.GbmModel.symmetric(1, 36.0, 0.06, 0.0, 0.2)
    grid = bermex.TimeGrid.uniform(1.0, 3)
    return model, grid, bermex.simulate_gbm(model, grid, paths, seed)


def test_simulation_shape_and_martingale():
    model, grid, paths = put_setup(1 << 16)
    s = paths.states
    assert s.shape == (1 << 16, 4, 1)
    assert not s.flags.writeable
    assert np.all(s[:, 0, 0] == 36.0)
    disc = np.exp(-0.06 * np.asarray(grid.dates)) * s[:, :, 0].mean(axis=0)
    se = s[:, -1, 0].std() / math.sqrt(s.shape[0])
    assert abs(disc[-1] - 36.0) < 4 * se


def test_simulation_is_deterministic():
    _, _, a = put_setup(seed=7)
    _, _, b = put_setup(seed=7)
    _, _, c = put_setup(seed=8)
    assert np.array_equal(a.states, b.states)
    assert not np.array_equal(a.states, c.states)


def test_payoff_vectorised():
    c = bermex.Contract("max_call", 100.0, assets=2)
    np.testing.assert_allclose(c(np.array([[90.0, 120.0], [80.0, 70.0]])), [20.0, 0.0])


def test_policy_and_baselines_price_the_put():
    _, _, train = put_setup(1 << 15, seed=2)
    _, _, val = put_setup(1 << 16, seed=3)
    contract = bermex.Contract("put", 40.0)
    policy = bermex.train_policy(train, contract, 0.06, steps_fresh=200, steps_warm=100, batch_size=2048, seed=4)
    dos = bermex.price_lower_bound(policy, val, 0.06)
    lsm = bermex.lsm_fit(train, contract, 0.06)
    assert dos["value"] == pytest.approx(4.31, abs=0.08)
    assert lsm.price["value"] == pytest.approx(4.31, abs=0.08)
    fractions = bermex.exercise_fraction(policy, val)
    assert sum(fractions) == pytest.approx(1.0)
    otm = policy.decide(1, np.array([[45.0], [50.0]]))
    assert list(otm) == [0, 0]


def test_exposure_rows():
    _, _, train = put_setup(1 << 14, seed=5)
    contract = bermex.Contract("put", 40.0)
    policy = bermex.train_policy(train, contract, 0.06, steps_fresh=100, steps_warm=50, batch_size=1024, seed=6)
    surface = bermex.fit_surface(policy, train, 0.06, steps=100, batch_size=1024, seed=7)
    rows = bermex.exposure_q(policy, surface, train, 0.06, [0.025, 0.975])
    estimators = {r["estimator"] for r in rows}
    assert estimators == {"EE1_Q", "EE2_Q", "PFE_Q"}
    last = [r for r in rows if r["date_index"] == 3 and r["estimator"].startswith("EE")]
    assert all(r["value"] == 0.0 for r in last)
    assert bermex.pfe_index(0.975, 1000) == 975
    assert bermex.pfe_index(0.025, 1000) == 25


def test_config_errors_are_value_errors():
    text = (CONFIGS / "heston_setB.cfg").read_text()
    bermex.parse_config(text).validate()
    with pytest.raises(bermex.ConfigError, match="strike"):
        bermex.parse_config(text.replace("strike = 100", "strike = -1"))
    with pytest.raises(ValueError):
        bermex.parse_config("[nonsense]\nx = 1\n")


def test_small_pipeline(tmp_path):
    config = bermex.load_config(CONFIGS / "maxcall_2d.cfg")
    config.train_paths = config.valuation_paths = config.exposure_paths = 1 << 12
    config.regression_paths = 1 << 11
    config.training_steps = (40, 20)
    config.regression_steps = 40
    config.boundary_enabled = False
    report = bermex.run_pipeline(config, tmp_path)
    methods = {(p["method"], p["estimate"]) for p in report["prices"]}
    assert ("dos", "lower_bound") in methods
    assert (tmp_path / "price_report.csv").exists()
    assert (tmp_path / "exposure_profile.csv").exists()
    assert report["exposure"]
