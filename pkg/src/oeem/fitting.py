"""
Hyperbolic fits of superhyperfine line positions versus bias field.

A splitting that is produced by a fixed dipolar field (B_par, B_perp) on top
of a swept bias B follows

    delta(B) = |gyro| * sqrt(B_perp**2 + (B_par + B)**2)

with ``gyro`` the nuclear gyromagnetic ratio in Hz/T.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .crystal import DEFAULT_CONSTANTS
from .errors import FitFailure, InsufficientData

NOMINAL_GYRO = DEFAULT_CONSTANTS.nuclear_gyro  # Hz/T, used only for initial guesses


def eval_hyperbola(b, b_par, b_perp, gyro):
    """Splitting in Hz at signed bias ``b`` (T); ``gyro`` in Hz/T."""
    b = np.asarray(b, dtype=float)
    return abs(gyro) * np.hypot(b_perp, b_par + b)


@dataclass(frozen=True)
class LinePositionSeries:
    b: np.ndarray  # T
    freq: np.ndarray  # Hz
    freq_err: np.ndarray  # Hz
    label: str = ""

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float).ravel()
        freq = np.asarray(self.freq, dtype=float).ravel()
        err = np.broadcast_to(np.asarray(self.freq_err, dtype=float), freq.shape).copy()
        if not (b.shape == freq.shape):
            raise ValueError("b and freq must have equal length")
        if np.any(freq < 0) or np.any(err <= 0):
            raise ValueError("need freq >= 0 and freq_err > 0")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "freq", freq)
        object.__setattr__(self, "freq_err", err)

    def __len__(self):
        return self.b.size


@dataclass(frozen=True)
class HyperbolaFit:
    b_par: float  # T, signed
    b_perp: float  # T, >= 0
    gyro: float  # Hz/T (magnitude as fitted, or the fixed value)
    covariance: np.ndarray  # over (b_par, b_perp[, gyro])
    residual_rms: float  # Hz
    gyro_fixed: bool
    label: str = ""
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    @property
    def b_par_err(self) -> float:
        return float(self.errors[0])

    @property
    def b_perp_err(self) -> float:
        return float(self.errors[1])

    @property
    def gyro_err(self) -> float:
        return 0.0 if self.gyro_fixed else float(self.errors[2])

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "b_par_t": self.b_par,
            "b_par_err_t": self.b_par_err,
            "b_perp_t": self.b_perp,
            "b_perp_err_t": self.b_perp_err,
            "gyro_hz_per_t": self.gyro,
            "gyro_err_hz_per_t": self.gyro_err,
            "gyro_fixed": self.gyro_fixed,
            "residual_rms_hz": self.residual_rms,
            "covariance": self.covariance.tolist(),
            "diagnostics": self.diagnostics,
        }


def _initial_guess(b, f, w, fix_gyro):
    # f^2 is a quadratic in B: g^2 B^2 + 2 g^2 B_par B + g^2 (B_par^2 + B_perp^2)
    y = f**2
    ww = w**2
    if fix_gyro is None:
        A = np.stack([b**2, b, np.ones_like(b)], axis=1)
        coef, *_ = np.linalg.lstsq(A * ww[:, None], y * ww, rcond=None)
        a2, a1, a0 = coef
    else:
        a2 = fix_gyro**2
        A = np.stack([b, np.ones_like(b)], axis=1)
        coef, *_ = np.linalg.lstsq(A * ww[:, None], (y - a2 * b**2) * ww, rcond=None)
        a1, a0 = coef
    if a2 > 0:
        gyro = np.sqrt(a2)
        b_par = a1 / (2 * a2)
        perp2 = a0 / a2 - b_par**2
        b_perp = np.sqrt(perp2) if perp2 > 0 else 0.0
    else:
        # fall back to the vertex estimate
        k = int(np.argmin(f))
        gyro = abs(fix_gyro) if fix_gyro is not None else NOMINAL_GYRO
        b_par = -b[k]
        b_perp = f[k] / gyro
    if b_perp == 0.0:
        b_perp = 1e-3 * (np.ptp(b) or 1.0)
    return float(b_par), float(b_perp), float(gyro)


def fit_hyperbola(series: LinePositionSeries, fix_gyro: float | None = None,
                  absolute_sigma: bool = False, b_par_hint: float | None = None) -> HyperbolaFit:
    """Weighted least-squares hyperbola fit.

    Minimises sum(((delta(B_k) - f_k) / err_k)**2). With ``fix_gyro`` (Hz/T)
    only B_par and B_perp are free. The covariance is the inverse of the
    weighted normal matrix, scaled by the reduced chi-square unless
    ``absolute_sigma`` is set.
    """
    n_par = 2 if fix_gyro is not None else 3
    if len(series) < n_par + 1:
        raise InsufficientData(
            f"{series.label or 'series'}: {len(series)} points for a {n_par}-parameter fit"
        )
    b, f, err = series.b, series.freq, series.freq_err
    w = 1.0 / err
    p0 = list(_initial_guess(b, f, w / w.max(), fix_gyro))
    if fix_gyro is not None:
        p0 = p0[:2]
    bscale = max(np.max(np.abs(b)), abs(p0[0]), p0[1], 1e-6)

    def model(p):
        g = fix_gyro if fix_gyro is not None else p[2]
        return eval_hyperbola(b, p[0], p[1], g)

    def resid(p):
        return (model(p) - f) * w

    def jac(p):
        g = abs(fix_gyro) if fix_gyro is not None else abs(p[2])
        s = b + p[0]
        r = np.hypot(p[1], s)
        r = np.where(r == 0, 1e-300, r)
        cols = [g * s / r, g * p[1] / r]
        if fix_gyro is None:
            cols.append(np.sign(p[2]) * r)
        return np.stack(cols, axis=1) * w[:, None]

    xscale = [bscale, bscale] + ([abs(p0[2])] if fix_gyro is None else [])
    try:
        res = optimize.least_squares(resid, p0, jac=jac, method="lm", x_scale=xscale,
                                     xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=10000)
    except ValueError as exc:
        raise FitFailure(f"hyperbola fit failed: {exc}") from exc
    if res.status <= 0 or not np.all(np.isfinite(res.x)):
        raise FitFailure(f"hyperbola fit did not converge: {res.message}")

    p = res.x.copy()
    # sign of B_perp is unobservable: fold it
    p[1] = abs(p[1])
    if fix_gyro is None:
        p[2] = abs(p[2])
    J = jac(p)
    chi2 = float(np.sum(resid(p) ** 2))
    dof = len(series) - n_par
    try:
        cov = np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(J.T @ J)
    if not absolute_sigma:
        cov = cov * (chi2 / dof if dof > 0 else np.inf)

    diagnostics = {"chi2": chi2, "dof": dof, "nfev": int(res.nfev), "ambiguous_b_par": False}
    # B_par -> -B_par is an exact alternative only for data symmetric about B = 0
    alt = p.copy()
    alt[0] = -alt[0]
    chi2_alt = float(np.sum(resid(alt) ** 2))
    if p[0] != 0 and abs(chi2_alt - chi2) <= 1e-9 * max(chi2, 1e-300) + 1e-24:
        diagnostics["ambiguous_b_par"] = True
        diagnostics["minima"] = [float(p[0]), float(-p[0])]
        if b_par_hint is not None and np.sign(b_par_hint) != np.sign(p[0]):
            p = alt

    gyro = float(abs(fix_gyro)) if fix_gyro is not None else float(p[2])
    rms = float(np.sqrt(np.mean((model(p) - f) ** 2)))
    return HyperbolaFit(float(p[0]), float(p[1]), gyro, cov, rms, fix_gyro is not None,
                        series.label, diagnostics)


@dataclass(frozen=True)
class GyroResult:
    per_series: list  # of HyperbolaFit
    gyro: float  # Hz/T, signed (negative for 89Y)
    gyro_err: float  # Hz/T

    def to_dict(self) -> dict:
        return {
            "gyro_hz_per_t": self.gyro,
            "gyro_err_hz_per_t": self.gyro_err,
            "series": [
                {"label": f.label, "gyro_hz_per_t": -f.gyro, "gyro_err_hz_per_t": f.gyro_err}
                for f in self.per_series
            ],
        }


def combine_inverse_variance(values, errors):
    """Inverse-variance weighted mean and its standard error.

    Zero-error entries dominate: if any are present, their plain mean is
    returned with zero error.
    """
    values = np.asarray(values, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if values.size == 1:
        return float(values[0]), float(errors[0])
    exact = errors == 0
    if np.any(exact):
        return float(values[exact].mean()), 0.0
    w = 1.0 / errors**2
    return float(np.sum(w * values) / np.sum(w)), float(1.0 / np.sqrt(np.sum(w)))


def fit_gyromagnetic(series_set, absolute_sigma: bool = False) -> GyroResult:
    """Free-gyro hyperbola fits per series, combined by inverse variance.

    The splittings only fix |gyro|; the combined value is reported negative,
    the established sign for 89Y.
    """
    series_set = list(series_set)
    if not series_set:
        raise InsufficientData("no series supplied")
    fits = [fit_hyperbola(s, absolute_sigma=absolute_sigma) for s in series_set]
    mean, err = combine_inverse_variance([f.gyro for f in fits], [f.gyro_err for f in fits])
    return GyroResult(fits, -abs(mean), err)
