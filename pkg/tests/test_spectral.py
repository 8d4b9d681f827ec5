import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from oeem.errors import FitFailure
from oeem.modulation import EchoTrace, ModulationParams, stretched_decay, synthesize_trace
from oeem.spectral import detrend, find_peaks, fit_decay, robust_sigma, spectrum

TAU = np.arange(4000) * 1e-6


def _trace(values, tau=TAU):
    return EchoTrace(tau, values)


@given(arrays(float, 64, elements=st.floats(-10, 10, allow_nan=False)), st.integers(1, 8))
def test_parseval(x, pad):
    spec = spectrum(_trace(x, np.arange(64) * 1e-3), pad_factor=pad)
    w = np.full(spec.magnitude.size, 2.0)
    w[0] = 1.0
    if spec.nfft % 2 == 0:
        w[-1] = 1.0
    assert np.sum(w * spec.magnitude**2) / spec.nfft == pytest.approx(np.sum(x**2), rel=1e-9, abs=1e-9)


def test_spectrum_axes():
    spec = spectrum(_trace(np.ones_like(TAU)), pad_factor=8)
    assert spec.nfft == 8 * TAU.size
    assert spec.native_resolution == pytest.approx(1 / (TAU.size * 1e-6))
    assert spec.df == pytest.approx(spec.native_resolution / 8)
    assert spectrum(_trace(np.ones_like(TAU)), pad_to=0.016).nfft == 16000
    with pytest.raises(ValueError):
        spectrum(_trace(np.ones_like(TAU)), pad_factor=0)


@pytest.mark.parametrize("f0", [12345.0, 50000.0, 101010.0])
def test_single_tone_position(f0):
    x = np.cos(2 * np.pi * f0 * TAU)
    for pad in (1, 8):
        spec = spectrum(_trace(x), pad)
        peaks = find_peaks(spec)
        assert len(peaks) == 1
        assert abs(peaks[0].frequency - f0) <= spec.native_resolution


@given(st.floats(5e3, 2e5), st.floats(0, 1))
def test_peak_position_pad_invariant(f0, phase):
    x = np.cos(2 * np.pi * f0 * TAU + phase)
    p1 = find_peaks(spectrum(_trace(x), 1))
    p8 = find_peaks(spectrum(_trace(x), 8))
    assert len(p1) == len(p8) == 1
    assert abs(p1[0].frequency - p8[0].frequency) <= 1 / (TAU.size * 1e-6)


def test_flat_and_empty_spectra_have_no_peaks():
    assert find_peaks(spectrum(_trace(np.zeros_like(TAU)))) == []
    white = np.random.default_rng(0).standard_normal(TAU.size)
    assert len(find_peaks(spectrum(_trace(white), 1), threshold_sigma=6)) <= 1


def test_detrend_recovers_decay():
    tau = np.arange(2000) * 1e-5
    y = stretched_decay(tau, 0.02, 1.7, 0.8)
    fit = fit_decay(_trace(y, tau))
    assert fit.t2 == pytest.approx(0.02, rel=1e-6)
    assert fit.gamma == pytest.approx(1.7, rel=1e-6)
    assert fit.amplitude == pytest.approx(0.8, rel=1e-6)
    r = detrend(_trace(y, tau))
    assert np.max(np.abs(r.values)) < 1e-8
    assert r.meta["detrend"]["t2_s"] == pytest.approx(0.02, rel=1e-6)


def test_detrend_keeps_modulation():
    p = ModulationParams([[1e5, 1.2e5, 0.5]], t2=2e-3)
    tr = synthesize_trace(p, TAU)
    peaks = find_peaks(spectrum(detrend(tr), 8))
    freqs = sorted(pk.frequency for pk in peaks)
    for f in (2e4, 1e5, 1.2e5, 2.2e5):
        assert min(abs(np.array(freqs) - f)) <= 250.0


def test_detrend_edge_cases():
    zero = detrend(_trace(np.zeros_like(TAU)))
    assert np.all(zero.values == 0)
    with pytest.raises(FitFailure):
        detrend(_trace(np.ones(5), np.arange(5.0)))
    bad = np.ones_like(TAU)
    bad[3] = np.nan
    with pytest.raises(FitFailure):
        detrend(_trace(bad))


def test_robust_sigma_gaussian():
    x = np.random.default_rng(1).standard_normal(200000)
    assert robust_sigma(x) == pytest.approx(1.0, rel=0.02)


def test_window_option():
    x = np.cos(2 * np.pi * 3e4 * TAU)
    peaks = find_peaks(spectrum(_trace(x), 4, window="hann"))
    assert len(peaks) == 1 and abs(peaks[0].frequency - 3e4) < 250
