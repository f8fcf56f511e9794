import json
import math

import pytest

import marketlab as ml


def test_presets_listed_and_parse():
    names = ml.preset_names()
    assert "calibration" in names
    assert "cluster-grid" in names
    for name in names:
        doc = json.loads(ml.preset_text(name))
        assert doc["schema_version"] == 1


def test_calibration_gte():
    assert ml.gte_true("calibration") == pytest.approx(0.031069112294347, abs=1e-9)


def test_steady_state_conserves_flow():
    out = ml.steady_state("calibration")
    assert out["residual_norm"] <= 1e-10
    # global control: everything books in the (0, 0) cell
    assert out["rates"]["q00"] == pytest.approx(0.2010640669, abs=1e-9)


def test_meanfield_estimates_named():
    out = ml.meanfield_estimates("calibration")
    assert set(out["estimates"]) == {"cr", "lr", "tsrn", "tsri1", "tsri2"}
    assert all(math.isfinite(v) for v in out["estimates"].values())


def test_simulate_is_seeded():
    a = ml.simulate("calibration", n_listings=500, seed=4)
    b = ml.simulate("calibration", n_listings=500, seed=4)
    c = ml.simulate("calibration", n_listings=500, seed=5)
    assert a == b
    assert a != c
    assert sum(a["counts"]) > 0


def test_estimator_formulas():
    q = [0.1, 0.2, 0.3, 0.4]
    assert ml.est_cr(q, 0.25) == pytest.approx(0.4 / 0.25 - 0.2 / 0.75)
    assert ml.est_lr(q, 0.5) == pytest.approx(0.2)
    assert ml.est_tsri(q, 0.5, 0.5, 1.0, 1.0) == pytest.approx(0.4 / 0.25 - 0.2 / 0.25)
    with pytest.raises(ml.MarketError):
        ml.est_cr(q, 1.0)
    with pytest.raises(ml.MarketError):
        ml.est_cr([0.1], 0.5)


def test_schedule_and_limits():
    a_c, a_l = ml.tsr_schedule(1.0)
    assert a_c == pytest.approx(1 - 0.5 * math.exp(-1))
    assert a_l == pytest.approx(0.5 + 0.5 * math.exp(-1))
    assert ml.beta_weight(1.0) == pytest.approx(math.exp(-1))
    demand = ml.homogeneous_limits(0.315, 0.3937, 1.0, 1.0, 1.0, 0.5, "demand")
    assert demand["gte"] == pytest.approx(0.3937 / 1.3937 - 0.315 / 1.315)
    supply = ml.homogeneous_limits(0.315, 0.3937, 1.0, 1.0, 0.5, 0.5, "supply")
    assert sum(supply["q"]) == pytest.approx(1.0)
    with pytest.raises(ml.MarketError):
        ml.homogeneous_limits(0.315, 0.3937, 1.0, 1.0, 0.5, 0.5, "sideways")


def test_two_listing_forms():
    f = ml.two_listing_forms(0.315, 0.3937, 1.0, 1.0, 1.0, 0.5)
    assert f["lr_estimate"] == f["gte"]
    assert 0.5 < f["eta"] < 1.0


def test_run_cli_round_trip():
    code, out, err = ml.run_cli(["steady", "--preset", "calibration"])
    assert code == 0, err
    assert json.loads(out)["gte"] == pytest.approx(0.031069, abs=1e-5)
    code, _, err = ml.run_cli(["steady", "--preset", "does-not-exist"])
    assert code == 2
    assert err.startswith("error:")


def test_bad_config_raises():
    with pytest.raises(ml.MarketError):
        ml.steady_state('{"schema_version": 1, "market": {"lambda": 0}}')
