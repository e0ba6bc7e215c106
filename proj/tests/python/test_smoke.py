import json
import math

import pytest

import fmpols


def test_presets_listed():
    names = fmpols.preset_names()
    assert names == ["exp1", "exp2", "exp3_H", "exp3_lambda", "expA1", "expA2", "expA3"]
    cfg = json.loads(fmpols.preset_json("exp2"))
    assert cfg["H"] == 8
    assert cfg["system"] == "symmetric_swap"


def test_unknown_preset_raises():
    with pytest.raises(fmpols.FmpolsError):
        fmpols.preset_json("nope")


def test_coefficients():
    assert fmpols.diff_coeffs(3) == [1, 0, -3, 0, 3, 0, -1]
    assert fmpols.lag_coeffs(2) == [1, 0, -1]
    c = fmpols.oracle_complex_coeffs(0.7, 1)
    assert c[1] == pytest.approx(-2 * math.cos(0.7))


def test_fm_pols_scalar_step():
    out = fmpols.fm_pols([[1.0]], [[2.0]], H=1, lam=1.0)
    # t = 1 has a zero feature, so the prediction is zero whatever the hint.
    assert out["predictions"] == [[0.0]]


def test_fm_pols_tracks_a_ramp():
    ys = [[float(t)] for t in range(1, 201)]
    def lag(k):
        return ys[k][0] if k >= 0 else 0.0

    # 2-step extrapolation is exact on a ramp from t = 3 on.
    hints = [[2.0 * lag(k - 1) - lag(k - 2)] for k in range(len(ys))]
    out = fmpols.fm_pols(ys, hints, H=2, lam=1.0)
    # ridge shrinkage leaves a small relative bias
    err = abs(out["predictions"][-1][0] - ys[-1][0]) / ys[-1][0]
    assert err < 1e-3


def test_design_gain_and_certify():
    g = fmpols.design_gain("double_integrator", 0.5)
    assert g["L"][0][0] == pytest.approx(1.0)
    assert g["L"][1][0] == pytest.approx(0.25)
    assert g["certified"]
    assert fmpols.certify_gain("double_integrator", g["L"], g["kappa"], 0.5)
    assert not fmpols.certify_gain("double_integrator", [[0.0], [0.0]], 100.0, 0.1)


def test_bounds():
    b = fmpols.BoundInputs()
    for k in ("norm_C", "kappa", "gamma", "C_w", "C_v", "C_y", "lam", "delta_max"):
        setattr(b, k, 1.0)
    assert fmpols.regret_bound(b) == pytest.approx(8 + math.log(9))
    t = fmpols.BoundInputs()
    t.C_v, t.C_w, t.n, t.kappa_A, t.norm_C = 0.1, 0.1, 2, 1.0, 1.0
    assert fmpols.residual_bound("two_lag", t) == pytest.approx(0.8)


def test_log_fit():
    s = [3 * math.log(t) + 1 for t in range(1, 101)]
    slope, intercept, r2 = fmpols.log_fit(s, 1)
    assert slope == pytest.approx(3)
    assert intercept == pytest.approx(1)
    assert r2 == pytest.approx(1)


def test_run_small_experiment(tmp_path):
    rec = fmpols.run("exp2", overrides=["T=200"])
    assert set(rec["variants"]) == {"kalman", "hinf", "lb", "lag2"}
    lag = rec["variants"]["lag2"]
    assert lag["t"][0] == 1 and lag["t"][-1] == 200
    assert "cum_regret" not in lag
    paths = fmpols.run_to_dir("exp2", str(tmp_path), overrides=["T=100"])
    assert any(p.endswith("summary.txt") for p in paths)
    a = (tmp_path / "exp2_lag2.csv").read_bytes()
    fmpols.run_to_dir("exp2", str(tmp_path), overrides=["T=100"])
    assert (tmp_path / "exp2_lag2.csv").read_bytes() == a


def test_simulate_is_deterministic():
    a = fmpols.simulate("exp1", seed=3, T=50)
    b = fmpols.simulate("exp1", seed=3, T=50)
    assert a == b and len(a) == 50
