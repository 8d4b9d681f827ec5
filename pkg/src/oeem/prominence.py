"""
Spin prominence and its optimisation over the bias field.

The prominence of site i compares its branching contrast with the summed
contrast of every other site in the catalog at the same field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .crystal import DEFAULT_CONSTANTS, MagneticClass, default_site_catalog, site_positions
from .spinmodel import ZERO_FIELD_THRESHOLD, SpinBranch, coupling_grid


@dataclass(frozen=True)
class FieldSearchSpace:
    """Bias fields to search.

    ``axis=None`` searches every direction (a hemisphere suffices, since the
    contrast is even in the field); otherwise the field is restricted to
    ``+-axis``. Magnitudes are sampled logarithmically.
    """

    b_min: float = 1e-3
    b_max: float = 1.0
    axis: tuple | None = None
    angular_step_deg: float = 10.0
    n_magnitudes: int = 40
    refine: bool = True
    angle_tol_deg: float = 0.1
    field_tol: float = 1e-4  # T

    def __post_init__(self):
        if self.b_min < ZERO_FIELD_THRESHOLD * (1 - 1e-9):
            raise ValueError("b_min is below the zero-field validity threshold")
        if self.b_max < self.b_min:
            raise ValueError("b_max < b_min")
        if self.axis is not None:
            a = np.asarray(self.axis, dtype=float)
            object.__setattr__(self, "axis", tuple(a / np.linalg.norm(a)))

    def directions(self) -> np.ndarray:
        if self.axis is not None:
            a = np.asarray(self.axis)
            return np.array([a, -a])
        step = self.angular_step_deg
        thetas = np.arange(0.0, 90.0 + 1e-9, step)
        dirs = [_direction(0.0, 0.0)]
        for th in thetas[1:]:
            for ph in np.arange(0.0, 360.0 - 1e-9, step):
                dirs.append(_direction(th, ph))
        return np.array(dirs)

    def magnitudes(self) -> np.ndarray:
        if self.b_max == self.b_min:
            return np.array([self.b_min])
        return np.geomspace(self.b_min, self.b_max, self.n_magnitudes)

    def fields(self) -> np.ndarray:
        d = self.directions()
        m = self.magnitudes()
        return (d[:, None, :] * m[None, :, None]).reshape(-1, 3)


def _direction(theta_deg, phi_deg):
    th, ph = np.radians(theta_deg), np.radians(phi_deg)
    return np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])


def prominence_array(rho, index=None):
    """Prominence of every site (or of ``index``) from contrasts (..., N).

    Returns +inf where every other contrast is exactly zero and the site's
    own contrast is positive; a site with zero contrast has prominence 0.
    """
    rho = np.asarray(rho, dtype=float)
    others = rho.sum(axis=-1, keepdims=True) - rho
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.where(others > 0, rho / np.where(others > 0, others, 1.0),
                       np.where(rho > 0, np.inf, 0.0))
    return lam if index is None else lam[..., index]


def prominence(site_index: int, couplings) -> float:
    """Prominence of one site from a list of SpinCoupling (or bare contrasts)."""
    rho = np.array([getattr(c, "rho", c) for c in couplings], dtype=float)
    others = rho.sum() - rho[site_index]
    if rho[site_index] == 0:
        return 0.0
    if others == 0:
        return float("inf")
    return float(rho[site_index] / others)


@dataclass(frozen=True)
class ProminenceResult:
    site_label: str
    lam: float
    best_field: np.ndarray  # T
    rho_at_best: float
    all_rho: np.ndarray


class _Evaluator:
    def __init__(self, g_pair, sites, branch, magnetic_class, constants):
        self.g_pair = g_pair
        self.positions = site_positions(sites)
        self.branch = branch
        self.magnetic_class = magnetic_class
        self.constants = constants

    def rho(self, fields, chunk=20000):
        fields = np.atleast_2d(fields)
        out = []
        for k in range(0, fields.shape[0], chunk):
            g = coupling_grid(self.positions, self.g_pair, fields[k:k + chunk], self.branch,
                              self.magnetic_class, self.constants)
            out.append(g.rho)
        return np.concatenate(out, axis=0)


def maximize_prominence(site_index: int, space: FieldSearchSpace, g_pair, sites=None,
                        branch=SpinBranch.DOWN, magnetic_class=MagneticClass.I,
                        constants=DEFAULT_CONSTANTS, _grid_rho=None) -> ProminenceResult:
    """Grid search over ``space`` followed by Nelder-Mead refinement.

    The refinement starts from the three best grid points; the returned value
    is never below the grid maximum.
    """
    sites = default_site_catalog() if sites is None else list(sites)
    ev = _Evaluator(g_pair, sites, branch, magnetic_class, constants)
    fields = space.fields()
    rho = ev.rho(fields) if _grid_rho is None else _grid_rho
    lam = prominence_array(rho, site_index)
    order = np.argsort(-lam, kind="stable")
    best_field, best_lam = fields[order[0]], float(lam[order[0]])

    degenerate = space.b_min == space.b_max and space.axis is not None
    if space.refine and not degenerate and np.isfinite(best_lam):
        for k in order[:3]:
            f, val = _refine(ev, site_index, fields[k], space)
            if val > best_lam:
                best_field, best_lam = f, val

    all_rho = ev.rho(best_field)[0]
    return ProminenceResult(sites[site_index].label, best_lam, np.asarray(best_field),
                            float(all_rho[site_index]), all_rho)


def _refine(ev, site_index, start, space):
    bmag = float(np.linalg.norm(start))
    lo, hi = space.b_min, space.b_max

    if space.axis is not None:
        axis = np.sign(np.dot(start, space.axis)) * np.asarray(space.axis)

        def to_field(x):
            return axis * np.clip(x[0], lo, hi)

        x0 = np.array([bmag])
        simplex = np.array([[bmag], [bmag * 1.1 if bmag * 1.1 <= hi else bmag * 0.9]])
        xatol = space.field_tol
    else:
        u = start / bmag
        theta = np.degrees(np.arccos(np.clip(u[2], -1, 1)))
        phi = np.degrees(np.arctan2(u[1], u[0]))
        # work in (degrees, degrees, mT) so one absolute tolerance fits all
        scale = np.array([1.0, 1.0, 1e3])

        def to_field(x):
            return _direction(x[0], x[1]) * np.clip(x[2] / 1e3, lo, hi)

        x0 = np.array([theta, phi, bmag]) * scale
        step = space.angular_step_deg / 2
        simplex = np.array([x0, x0 + [step, 0, 0], x0 + [0, step, 0],
                            x0 + [0, 0, 0.2 * x0[2]]])
        xatol = min(space.angle_tol_deg, space.field_tol * 1e3)

    def objective(x):
        return -float(prominence_array(ev.rho(to_field(x)), site_index)[0])

    res = optimize.minimize(objective, x0, method="Nelder-Mead",
                            options={"initial_simplex": simplex, "xatol": xatol,
                                     "fatol": 1e-9, "maxiter": 4000})
    return to_field(res.x), -float(res.fun)


def prominence_table(space: FieldSearchSpace, g_pair, sites=None, branch=SpinBranch.DOWN,
                     magnetic_class=MagneticClass.I, constants=DEFAULT_CONSTANTS):
    """Maximum prominence for every site; the grid is evaluated once and shared."""
    sites = default_site_catalog() if sites is None else list(sites)
    ev = _Evaluator(g_pair, sites, branch, magnetic_class, constants)
    grid_rho = ev.rho(space.fields())
    return [
        maximize_prominence(i, space, g_pair, sites, branch, magnetic_class, constants,
                            _grid_rho=grid_rho)
        for i in range(len(sites))
    ]


def rho_scan(axis, magnitudes, g_pair, sites=None, branch=SpinBranch.DOWN,
             magnetic_class=MagneticClass.I, constants=DEFAULT_CONSTANTS):
    """Contrast of every site for signed fields ``magnitudes * axis``; shape (M, N)."""
    sites = default_site_catalog() if sites is None else list(sites)
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    fields = np.asarray(magnitudes, dtype=float)[:, None] * axis[None, :]
    return _Evaluator(g_pair, sites, branch, magnetic_class, constants).rho(fields)


def rho_max_scan(site_index: int, axis, g_pair, magnitude_range=(1e-3, 1.0), **kwargs) -> float:
    """Maximum contrast of one site over both signs of ``B * axis``."""
    return rho_max_with_field(site_index, axis, g_pair, magnitude_range, **kwargs)[0]


def rho_max_with_field(site_index: int, axis, g_pair, magnitude_range=(1e-3, 1.0), sites=None,
                       branch=SpinBranch.DOWN, magnetic_class=MagneticClass.I,
                       constants=DEFAULT_CONSTANTS, n: int = 2000):
    """Like :func:`rho_max_scan` but also returns the signed field (T) of the maximum.

    A logarithmic scan is refined by a bounded scalar search around the best
    sample.
    """
    sites = default_site_catalog() if sites is None else list(sites)
    lo, hi = magnitude_range
    mags = np.geomspace(lo, hi, n) if hi > lo else np.array([lo])
    signed = np.concatenate([-mags[::-1], mags])
    ev = _Evaluator(g_pair, [sites[site_index]], branch,
                    magnetic_class, constants)
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    rho = ev.rho(signed[:, None] * axis)[:, 0]
    k = int(np.argmax(rho))
    best, best_b = float(rho[k]), float(signed[k])
    if hi > lo:
        sign = np.sign(signed[k])
        j = int(np.searchsorted(mags, abs(signed[k])))
        a = np.log(mags[max(j - 1, 0)])
        b = np.log(mags[min(j + 1, n - 1)])
        res = optimize.minimize_scalar(
            lambda x: -float(ev.rho(sign * np.exp(x) * axis)[0, 0]),
            bounds=(a, b), method="bounded", options={"xatol": 1e-8})
        if -res.fun > best:
            best, best_b = float(-res.fun), float(sign * np.exp(res.x))
    return best, best_b
