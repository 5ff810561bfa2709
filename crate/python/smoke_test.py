"""Smoke test for the Python bindings.

Build and install first:

    pip install --no-build-isolation ./crates/python
    python3 -m pytest python/smoke_test.py
"""

import json
import math

import numpy as np
import pytest

import pycdf2pdf as c


def test_onoff_statistic_closed_form():
    assert c.onoff_lambda(0, 0, 1.0, 1.0) == pytest.approx(6.0, abs=1e-12)
    assert c.onoff_lambda(7, 3, 4.0, 3.0) == 0.0


def test_dataset_train_and_derivative():
    data = c.gen_ecdf_onoff(120, 30, seed=3)
    assert len(data) == 3600
    cols = data.columns()
    assert set(cols) == {"theta1", "theta2", "lambda", "target", "group_id"}
    assert 0.0 < min(cols["target"]) and max(cols["target"]) <= 1.0

    train, val, cal = data.split(seed=1)
    assert len(train) + len(val) + len(cal) == len(data)
    fit = c.train(train, val, layers=2, width=8, iterations=300, batch_size=256, learning_rate=3e-3, seed=2)
    assert fit.best_val_loss <= min(v for _, _, v in fit.curve)
    net = fit.network

    grid = np.linspace(0.5, 8.0, 31)
    pdf = np.array(net.pdf(10.0, 10.0, grid.tolist()))
    h = 1e-5
    hi = np.array(net.cdf(10.0, 10.0, (grid + h).tolist()))
    lo = np.array(net.cdf(10.0, 10.0, (grid - h).tolist()))
    np.testing.assert_allclose(pdf, (hi - lo) / (2 * h), rtol=1e-5, atol=1e-9)

    calib = c.conformal_calibrate(net, cal, 0.32)
    assert calib.q_hat > 0
    lo_b, hi_b = calib.band(0.5)
    assert hi_b - lo_b == pytest.approx(2 * calib.q_hat)
    assert calib.band(0.99, (0.0, 1.0))[1] <= 1.0
    assert 0.4 < calib.coverage(net, val) < 0.95


def test_model_text_round_trip(tmp_path):
    net = c.Network(layers=2, width=4, seed=5)
    path = tmp_path / "m.txt"
    net.save(str(path))
    back = c.Network.load(str(path))
    assert back == net
    assert c.Network.from_text(net.to_text()) == net
    assert net.num_params == back.num_params


def test_fluctuation_envelope():
    net = c.Network(layers=2, width=6, seed=1)
    grid = list(np.linspace(0.0, 10.0, 11))
    zero = c.weight_fluctuate(net, 0.0, 20, seed=4).envelope(5.0, 5.0, grid)
    assert zero["lo"] == zero["hi"]
    env = c.weight_fluctuate(net, 0.01, 50, seed=4).envelope(5.0, 5.0, grid, response="pdf")
    assert all(l <= m <= h for l, m, h in zip(env["lo"], env["mean"], env["hi"]))
    with pytest.raises(ValueError):
        c.weight_fluctuate(net, -1.0, 5, seed=0)


def test_sir_and_errors():
    means = c.sir_mean_infected(0.25, 6e-4, horizon_days=20)
    assert len(means) == 20 and all(math.isfinite(m) for m in means)
    stats = c.sir_statistics(0.25, 6e-4, 50, seed=1, horizon_days=20)
    assert min(stats) >= 0.0
    with pytest.raises(ValueError):
        c.Network(activation="gelu")


def test_command_runner(tmp_path):
    out = tmp_path / "run"
    overrides = ["data.points=40", "data.k=20", "train.iterations=200", "eval.truth_samples=200"]
    manifest = json.loads(c.run("gen", out=str(out), set=overrides))
    assert "data/dataset.csv" in [a["path"] for a in manifest["artifacts"]]
    c.run("train", out=str(out), set=overrides)
    with pytest.raises(ValueError):
        c.run("gen", out=str(out), set=overrides)
    with pytest.raises(FileNotFoundError):
        c.run("eval", out=str(tmp_path / "empty"))
