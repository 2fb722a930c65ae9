import math

import numpy as np
import pytest

import oracles
from swapclf import experiments as ex
from swapclf.errors import ConfigError, FitError
from swapclf.noise import bundled_device_path


def test_theta_grid():
    t = ex.SweepConfig().thetas()
    assert len(t) == 63 and t[0] == 0.0 and t[-1] == pytest.approx(6.2)


def test_config_validation():
    with pytest.raises(ConfigError):
        ex.SweepConfig(theta_step=0)
    with pytest.raises(ConfigError):
        ex.SweepConfig(backend="sampled", shots=0)
    with pytest.raises(ConfigError):
        ex.SweepConfig(backend="noisy")
    with pytest.raises(ConfigError):
        ex.SweepConfig(backend="noisy", device="x.json", copies=2)
    with pytest.raises(Exception):
        ex.SweepConfig(classifier="hadamard", copies=3)


def _grid(*thetas):
    return dict(theta_start=0.0, theta_end=max(thetas), theta_step=thetas[1] - thetas[0])


def test_exact_examples():
    cfg = ex.SweepConfig(theta_start=0.0, theta_end=3 * math.pi / 2, theta_step=math.pi / 2)
    r = ex.sweep(cfg)
    np.testing.assert_allclose(r.expectations, [0.0, 0.5, 0.0, -0.5], atol=1e-12)
    h = ex.sweep(ex.SweepConfig(classifier="hadamard"))
    np.testing.assert_allclose(h.expectations, 0.0, atol=1e-12)


def test_forking_sweep_equals_swaptest():
    kw = dict(theta_end=6.2, theta_step=0.4)
    a = ex.sweep(ex.SweepConfig(classifier="forking", **kw))
    b = ex.sweep(ex.SweepConfig(classifier="swaptest", **kw))
    np.testing.assert_allclose(a.expectations, b.expectations, atol=1e-10)


def test_sampled_half_pi():
    cfg = ex.SweepConfig(backend="sampled", theta_start=math.pi / 2, theta_end=math.pi / 2, seed=11)
    (row,) = ex.sweep(cfg).rows
    assert abs(row.expectation - 0.5) < 4 * math.sqrt((1 - 0.25) / 8192)
    assert row.expectation == (row.c00 - row.c01 - row.c10 + row.c11) / row.shots


def test_workers_preserve_order_and_seeds():
    kw = dict(backend="sampled", theta_end=2.0, seed=5)
    a = ex.sweep(ex.SweepConfig(**kw))
    b = ex.sweep(ex.SweepConfig(workers=2, **kw))
    assert a.rows == b.rows


def test_csv_and_json_round_trip(tmp_path):
    r = ex.sweep(ex.SweepConfig(backend="sampled", seed=3))
    text = ex.emit(r, "csv", tmp_path / "s.csv")
    lines = text.split("\n")
    assert lines[0] == "theta,expectation,c00,c01,c10,c11,shots"
    assert len(text.splitlines()) == 64 and "\r" not in text
    back = ex.parse(tmp_path / "s.csv")
    assert back.rows == r.rows
    for row in back.rows:
        assert abs(row.expectation - (row.c00 - row.c01 - row.c10 + row.c11) / row.shots) < 1e-12
    ex.emit(r, "json", tmp_path / "s.json")
    again = ex.parse(tmp_path / "s.json")
    assert again.rows == r.rows and again.metadata == r.metadata
    with pytest.raises(Exception):
        ex.emit(r, "csv", tmp_path / "missing" / "x.csv")


def test_fit_exact_data():
    f = ex.fit(ex.sweep(ex.SweepConfig()))
    assert f.a == pytest.approx(1.0, abs=1e-6)
    assert f.vartheta == pytest.approx(0.0, abs=1e-6)
    assert f.w2 == pytest.approx(0.5, abs=1e-6)
    assert f.residual_norm >= 0


def test_fit_recovers_generator():
    t = ex.SweepConfig().thetas()
    y = ex.fit_model(t, 0.65, 0.035, 0.47)
    f = ex.fit((t, y))
    assert (f.a, f.vartheta, f.w2) == pytest.approx((0.65, 0.035, 0.47), abs=1e-6)
    # negative-amplitude start normalizes to the same curve
    g = ex.fit((t, ex.fit_model(t, -0.65, 0.035 - math.pi, 0.53)))
    assert (g.a, g.vartheta, g.w2) == pytest.approx((0.65, 0.035, 0.47), abs=1e-6)


def test_fit_w2_input():
    r = ex.sweep(ex.SweepConfig(w2=0.3, theta_step=0.2))
    f = ex.fit(r)
    assert f.w2 == pytest.approx(0.3, abs=1e-6)


def test_fit_errors():
    with pytest.raises(FitError):
        ex.fit(([0, 1, 2], [0, 1, 0]))
    t = np.linspace(0, 6, 20)
    with pytest.raises(FitError) as e:
        ex.fit((t, ex.fit_model(t, 0.8, 0.1, 0.4) + 0.01 * np.cos(7 * t)), max_nfev=2)
    assert e.value.best is not None


def test_sharpening():
    t = ex.SweepConfig().thetas()
    curves = ex.sharpening_curves([1, 10, 100], t)
    np.testing.assert_allclose(curves[1], [oracles.toy_closed_form(x) for x in t], atol=1e-12)
    for n in (1, 10, 100):
        assert ex.sharpening_curves([n], [math.pi / 2])[n][0] == pytest.approx(0.5, abs=1e-12)
    widths = [ex.width_above(t, curves[n]) for n in (1, 10, 100)]
    assert widths[0] > widths[1] > widths[2]
    with pytest.raises(ConfigError):
        ex.sharpening_curves([0], t)


def test_noisy_single_point():
    cfg = ex.SweepConfig(backend="noisy", device=bundled_device_path(), theta_start=math.pi / 2,
                         theta_end=math.pi / 2, seed=1)
    (row,) = ex.sweep(cfg).rows
    assert 0.3 < row.expectation < 0.5
