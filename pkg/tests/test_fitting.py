import numpy as np
import pytest
from hypothesis import given, strategies as st

from oeem.errors import InsufficientData
from oeem.fitting import (
    LinePositionSeries, combine_inverse_variance, eval_hyperbola, fit_gyromagnetic, fit_hyperbola,
)

from .reference import GYRO_Y89

B = np.linspace(0.05, 0.3, 26)


def _series(b_par, b_perp, gyro=GYRO_Y89, b=B, rel_err=0.01, noise=None, label="s"):
    f = eval_hyperbola(b, b_par, b_perp, gyro)
    err = rel_err * f
    if noise is not None:
        f = f + noise.standard_normal(f.size) * err
    return LinePositionSeries(b, f, err, label)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 0.5), st.floats(1e5, 1e7))
def test_hyperbola_even_under_joint_reflection(b, b_par, b_perp, g):
    assert eval_hyperbola(b, b_par, b_perp, g) == pytest.approx(eval_hyperbola(-b, -b_par, b_perp, g))
    assert eval_hyperbola(b, b_par, -b_perp, -g) == eval_hyperbola(b, b_par, b_perp, g)


@pytest.mark.parametrize("b_par,b_perp", [(0.164, 0.049), (-0.005, 0.317), (0.128, 0.052),
                                          (0.041, 0.031), (-0.2, 0.01)])
def test_noise_free_recovery(b_par, b_perp):
    fit = fit_hyperbola(_series(b_par, b_perp))
    assert fit.b_par == pytest.approx(b_par, rel=1e-6)
    assert fit.b_perp == pytest.approx(b_perp, rel=1e-6)
    assert fit.gyro == pytest.approx(GYRO_Y89, rel=1e-6)
    assert fit.residual_rms < 1e-3


@given(st.floats(-0.3, 0.3), st.floats(0.005, 0.4))
def test_fold_invariance(b_par, b_perp):
    # +-B_perp describe the same data; the fit reports the non-negative root
    fit = fit_hyperbola(_series(b_par, b_perp))
    assert fit.b_perp >= 0
    assert fit.b_perp == pytest.approx(b_perp, rel=1e-5, abs=1e-7)


def test_fixed_gyro():
    s = _series(0.1, 0.05, gyro=GYRO_Y89)
    fit = fit_hyperbola(s, fix_gyro=GYRO_Y89)
    assert fit.gyro_fixed and fit.gyro == GYRO_Y89 and fit.gyro_err == 0.0
    assert fit.covariance.shape == (2, 2)
    assert fit.b_par == pytest.approx(0.1, rel=1e-8)


def test_too_few_points():
    s = _series(0.1, 0.05, b=B[:3])
    with pytest.raises(InsufficientData):
        fit_hyperbola(s)
    fit_hyperbola(s, fix_gyro=GYRO_Y89)


def test_noisy_uncertainties_are_calibrated():
    rng = np.random.default_rng(5)
    pulls = []
    for _ in range(200):
        fit = fit_hyperbola(_series(0.12, 0.06, noise=rng))
        pulls.append((fit.b_par - 0.12) / fit.b_par_err)
    pulls = np.array(pulls)
    assert abs(pulls.mean()) < 0.3
    assert 0.7 < pulls.std() < 1.3


def test_symmetric_data_flags_ambiguity():
    b = np.linspace(-0.2, 0.2, 21)
    f = eval_hyperbola(b, 0.03, 0.05, GYRO_Y89) + eval_hyperbola(b, -0.03, 0.05, GYRO_Y89)
    s = LinePositionSeries(b, f / 2, 100.0)
    fit = fit_hyperbola(s, b_par_hint=-1.0)
    assert fit.diagnostics["ambiguous_b_par"]
    assert fit.b_par <= 0
    fit_pos = fit_hyperbola(s, b_par_hint=1.0)
    assert fit_pos.b_par >= 0


def test_series_validation():
    with pytest.raises(ValueError):
        LinePositionSeries([0.1, 0.2], [1.0], 1.0)
    with pytest.raises(ValueError):
        LinePositionSeries([0.1], [1.0], 0.0)


def test_report_dict():
    d = fit_hyperbola(_series(0.1, 0.05)).to_dict()
    assert {"b_par_t", "b_par_err_t", "b_perp_t", "gyro_hz_per_t", "residual_rms_hz"} <= set(d)


def test_inverse_variance_oracle():
    v, e = combine_inverse_variance([1.0, 3.0], [1.0, 1.0])
    assert v == 2.0 and e == pytest.approx(1 / np.sqrt(2))
    v, e = combine_inverse_variance([1.0, 3.0], [1.0, 2.0])
    assert v == pytest.approx((1 + 3 / 4) / 1.25)
    assert combine_inverse_variance([5.0], [0.5]) == (5.0, 0.5)
    assert combine_inverse_variance([1.0, 2.0, 4.0], [0.0, 1.0, 0.0]) == (2.5, 0.0)


def test_gyromagnetic_sign_and_value():
    res = fit_gyromagnetic([_series(0.164, 0.049, label="Y4"), _series(0.128, 0.052, label="Y5")])
    assert res.gyro < 0
    assert abs(res.gyro) == pytest.approx(GYRO_Y89, rel=1e-6)
    assert len(res.to_dict()["series"]) == 2
    with pytest.raises(InsufficientData):
        fit_gyromagnetic([])
