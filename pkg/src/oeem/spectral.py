"""
Trace-to-spectrum chain: decay detrending, zero-padded DFT and peak picking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal

from .errors import FitFailure
from .modulation import EchoTrace, stretched_decay

DEFAULT_PAD_FACTOR = 8
DEFAULT_THRESHOLD_SIGMA = 5.0


@dataclass(frozen=True)
class DecayFit:
    amplitude: float
    t2: float
    gamma: float


@dataclass(frozen=True)
class Spectrum:
    """One-sided DFT magnitude.

    ``magnitude`` is the unnormalised |DFT| of the (padded) residual, so that
    Parseval reads ``sum(x**2) == sum(w * magnitude**2) / nfft`` with weight 2
    on every bin except DC and (for even ``nfft``) Nyquist.
    """

    freq: np.ndarray  # Hz
    magnitude: np.ndarray
    pad_factor: float
    native_resolution: float  # Hz, bin spacing of the unpadded trace
    nfft: int
    window: str | None = None

    @property
    def df(self) -> float:
        return float(self.freq[1] - self.freq[0])


@dataclass(frozen=True)
class Peak:
    frequency: float  # Hz
    magnitude: float
    width: float  # Hz, full width at half maximum


def fit_decay(trace: EchoTrace, max_gamma: float = 10.0) -> DecayFit:
    """Least-squares fit of A0 exp[-(2 tau/T2)^gamma] with gamma >= 1."""
    tau, y = trace.tau, trace.values
    if tau.size < 8:
        raise FitFailure("detrending needs at least 8 samples")
    if not np.all(np.isfinite(y)):
        raise FitFailure("trace contains non-finite values")
    a0 = float(np.mean(y[: max(2, tau.size // 50)]))
    if a0 == 0:
        a0 = float(np.max(np.abs(y))) or 1.0
    area = float(np.sum(y) * trace.dtau)
    t2_0 = 2.0 * area / a0 if area / a0 > 0 else tau[-1]
    t2_0 = float(np.clip(t2_0, 4 * trace.dtau, 100 * tau[-1]))
    scale = float(np.max(np.abs(y))) or 1.0

    def resid(x):
        return (stretched_decay(tau, x[1], x[2], x[0]) - y) / scale

    try:
        res = optimize.least_squares(
            resid,
            x0=[a0, t2_0, 1.0],
            bounds=([-np.inf, 1e-3 * trace.dtau, 1.0], [np.inf, np.inf, max_gamma]),
            x_scale=[abs(a0), t2_0, 1.0],
            xtol=1e-12,
            ftol=1e-12,
            gtol=1e-12,
            max_nfev=2000,
        )
    except ValueError as exc:
        raise FitFailure(f"decay fit failed: {exc}") from exc
    if not res.success or not np.all(np.isfinite(res.x)):
        raise FitFailure(f"decay fit did not converge: {res.message}")
    return DecayFit(float(res.x[0]), float(res.x[1]), float(res.x[2]))


def detrend(trace: EchoTrace) -> EchoTrace:
    """Subtract a fitted stretched-exponential decay from the trace.

    An all-zero trace is returned unchanged (zero residual) rather than
    raising, since there is nothing to fit.
    """
    if trace.tau.size < 8:
        raise FitFailure("detrending needs at least 8 samples")
    if np.all(trace.values == 0):
        fit = DecayFit(0.0, float("inf"), 1.0)
        resid = np.zeros_like(trace.values)
    else:
        fit = fit_decay(trace)
        resid = trace.values - stretched_decay(trace.tau, fit.t2, fit.gamma, fit.amplitude)
    meta = dict(trace.meta)
    meta["detrend"] = {"amplitude": fit.amplitude, "t2_s": fit.t2, "gamma": fit.gamma}
    return EchoTrace(trace.tau, resid, trace.mode, trace.noise_sigma, trace.rng_seed, meta)


def spectrum(trace: EchoTrace, pad_factor: int = DEFAULT_PAD_FACTOR, pad_to: float | None = None,
             window: str | None = None) -> Spectrum:
    """Magnitude of the one-sided DFT of the zero-padded trace.

    Padding is either ``pad_factor`` times the trace length or, if ``pad_to``
    is given, the total length in seconds. ``window`` names an optional
    scipy window (``"hann"``, ...) applied before padding.
    """
    n = trace.tau.size
    dt = trace.dtau
    if pad_to is not None:
        nfft = max(n, int(round(pad_to / dt)))
    else:
        if pad_factor < 1:
            raise ValueError("pad_factor must be >= 1")
        nfft = int(round(pad_factor * n))
    x = trace.values
    if window is not None:
        x = x * signal.get_window(window, n, fftbins=False)
    mag = np.abs(np.fft.rfft(x, n=nfft))
    freq = np.fft.rfftfreq(nfft, dt)
    return Spectrum(freq, mag, nfft / n, 1.0 / (n * dt), nfft, window)


def robust_sigma(x) -> float:
    """Gaussian-equivalent standard deviation from the median absolute deviation."""
    x = np.asarray(x, dtype=float)
    return float(1.4826 * np.median(np.abs(x - np.median(x))))


def _leakage(x, window):
    """Upper bound on the sidelobe level at ``x`` native bins from a unit line."""
    x = abs(x)
    if window is None:
        return 1.0 / (np.pi * x) if x >= 1 else np.inf
    if window == "hann":
        return 1.0 / (np.pi * x * (x * x - 1)) if x >= 2 else np.inf
    return 0.0


LEAKAGE_MARGIN = 1.5


def find_peaks(spec: Spectrum, threshold_sigma: float = DEFAULT_THRESHOLD_SIGMA,
               min_relative: float = 1e-3) -> list[Peak]:
    """Local maxima standing ``threshold_sigma`` robust sigmas above the baseline.

    A peak must exceed ``median + threshold_sigma * sigma`` (sigma from the
    median absolute deviation of the magnitude) and have at least
    ``threshold_sigma * sigma`` topographic prominence, which rejects the
    ripple that zero padding draws on smooth tails. ``min_relative`` floors
    both thresholds at a fraction of the largest magnitude so round-off
    wiggles of noise-free spectra are ignored. Maxima within one native bin
    of DC cannot be told apart from the baseline and are dropped. A maximum
    that lies below the sidelobe envelope of a stronger accepted peak (with
    a safety factor of 1.5; rectangular and Hann windows) is treated as
    leakage; the envelope sums over all stronger lines and their mirror
    images at negative frequency. Positions are refined with a three-point parabola.
    """
    m = spec.magnitude
    if m.size < 3 or not np.any(m > 0):
        return []
    sigma = robust_sigma(m)
    floor = min_relative * m.max()
    height = max(np.median(m) + threshold_sigma * sigma, floor)
    prominence = max(threshold_sigma * sigma, floor)
    idx, _ = signal.find_peaks(m, height=height, prominence=prominence)
    idx = idx[(spec.freq[idx] >= spec.native_resolution) & (idx < m.size - 1)]
    if idx.size == 0:
        return []
    widths = signal.peak_widths(m, idx, rel_height=0.5)[0] * spec.df
    peaks = []
    for i, w in zip(idx, widths):
        a, b, c = m[i - 1], m[i], m[i + 1]
        denom = a - 2 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
        peaks.append(Peak(
            frequency=float(spec.freq[i] + shift * spec.df),
            magnitude=float(b - 0.25 * (a - c) * shift),
            width=float(w),
        ))
    # leakage adds up over stronger lines and their negative-frequency images
    kept = []
    res = spec.native_resolution
    for p in sorted(peaks, key=lambda p: -p.magnitude):
        bound = sum(q.magnitude * (_leakage((p.frequency - q.frequency) / res, spec.window)
                                   + _leakage((p.frequency + q.frequency) / res, spec.window))
                    for q in kept)
        if p.magnitude > LEAKAGE_MARGIN * bound:
            kept.append(p)
    return sorted(kept, key=lambda p: p.frequency)
