import csv
import io
import json

import numpy as np
import pytest

from gampgap import harness
from gampgap.errors import DivergenceError
from gampgap.harness import (
    RAW_COLUMNS, SweepConfig, columns, fmt, pin_alpha_tilde, run_sweep, sweep_csv, to_csv,
)

from gampgap.penalties import Penalty
from gampgap.replica import rs_errors, rs_solve

from conftest import make_problem


def small(**kw):
    base = dict(M=60, N_grid=[30, 90], lambda2=1.0, n_seeds=4, base_seed=10)
    base.update(kw)
    return SweepConfig(**base)


def parse(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_empty_grid_is_header_only():
    text = sweep_csv(small(N_grid=[]))
    assert text == ",".join(columns()) + "\n"


def test_column_order():
    cols = columns()
    assert cols[:7] == ["seed_count", "M", "N", "alpha", "alpha_tilde", "lambda1", "lambda2"]
    assert cols[7:19] == ["err_train", "gdf", "sure", "fv", "waic", "cfv", "fchi", "delta_loocv_hat",
                          "delta_loocv_exact", "err_extra_empirical", "stability_margin", "radius_ok"]
    assert cols[-1] == "failures"
    assert columns(True)[-6:-1] == harness.REPLICA_COLUMNS


def test_rerun_is_bit_identical(monkeypatch):
    cfg = small()
    monkeypatch.setenv("GAMP_GAP_THREADS", "1")
    a = sweep_csv(cfg)
    monkeypatch.setenv("GAMP_GAP_THREADS", "4")
    cfg.threads = 4
    b = sweep_csv(cfg)
    assert a == b


def test_aggregates_match_raw_rows():
    raw = []
    rows = run_sweep(small(), raw)
    assert len(raw) == 8 and set(RAW_COLUMNS) <= set(raw[0])
    for agg in rows:
        per = [r for r in raw if r["N"] == agg["N"]]
        for c in ("gdf", "fv", "delta_loocv_exact", "err_extra_empirical"):
            v = np.array([r[c] for r in per])
            assert agg[c] == pytest.approx(v.mean(), rel=1e-12)
            assert agg[f"{c}_se"] == pytest.approx(v.std(ddof=1) / np.sqrt(v.size), rel=1e-12)
        assert agg["seed_count"] == 4 and agg["failures"] == ""


def test_ridge_sweep_values_are_sensible():
    rows = run_sweep(small(N_grid=[30]))
    r = rows[0]
    assert r["alpha"] == 2.0 and r["alpha_tilde"] == 2.0 and r["lambda1"] == 0.0
    assert r["delta_loocv_hat"] == pytest.approx(r["delta_loocv_exact"], rel=0.2)
    assert r["radius_ok"] == 1.0


def test_failures_are_recorded_not_raised(monkeypatch):
    real = harness.gamp_run

    def flaky(data, family, pen, opts=None, x0=None):
        if data.y[0] == flaky.bad_y0:
            raise DivergenceError("injected", iteration=1)
        return real(data, family, pen, opts, x0)

    from gampgap.datagen import gen_predictors, gen_truth_and_data
    F = gen_predictors("iid", 60, 30, 11)
    flaky.bad_y0 = gen_truth_and_data(F, "gaussian", 1.0, 1.0, 1.0, 11)[0].y[0]
    monkeypatch.setattr(harness, "gamp_run", flaky)
    rows = run_sweep(small(N_grid=[30]))
    assert rows[0]["seed_count"] == 3
    assert "seed 11: DivergenceError: injected" in rows[0]["failures"]


def test_alpha_tilde_sweep():
    cfg = small(N_grid=[120], alpha_tilde_grid=[2.0], lambda2=0.01, rho=0.3, solver="cd", route="hessian",
                n_seeds=2)
    raw = []
    rows = run_sweep(cfg, raw)
    for r in raw:
        assert r["error"] == ""
        assert abs(round(60 / r["alpha_tilde"]) - 30) <= 1
    assert rows[0]["lambda1"] > 0


def test_replica_columns_joined():
    rows = run_sweep(small(N_grid=[30], replica=True, n_seeds=2))
    expected = rs_errors(rs_solve("gaussian", Penalty(0.0, 1.0), 2.0))["gdf"]
    assert rows[0]["rs_gdf"] == pytest.approx(expected, rel=1e-12)
    assert np.isfinite(rows[0]["rs_at_lhs"])


def test_pin_examples():
    data, _ = make_problem(200, 300, 3, rho=0.3)
    pin = pin_alpha_tilde(data, "gaussian", 0.01, 2.0)
    assert pin.achieved and 99 <= pin.count <= 101
    # lambda1 = 0 target (alpha_tilde = M/N with N <= M) is dense
    data2, _ = make_problem(200, 100, 4)
    pin2 = pin_alpha_tilde(data2, "gaussian", 0.01, 2.0)
    assert pin2.achieved and pin2.count >= 99
    bad = pin_alpha_tilde(data, "gaussian", 0.01, 1000.0)
    assert not bad.achieved and bad.count == 0


def test_fmt_twelve_significant_digits():
    assert fmt(np.pi) == "3.14159265359"
    assert fmt(1 / 3 * 1e-20) == "3.33333333333e-21"
    assert fmt(np.nan) == "nan" and fmt(7) == "7" and fmt(True) == "1" and fmt("x") == "x"
    text = to_csv([{"a": 1.0, "b": "q"}], ["a", "b", "c"])
    assert text == "a,b,c\n1,q,nan\n"


def test_config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"M": 40, "N_grid": [20], "n_seeds": 2}))
    cfg = SweepConfig.from_file(path)
    assert cfg.M == 40 and cfg.points() == [(20, "lambda1", 0.0)]
    with pytest.raises(ValueError):
        SweepConfig.from_dict({"M": 40, "bogus": 1})
