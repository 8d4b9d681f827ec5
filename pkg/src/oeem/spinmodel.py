"""
First-principles superhyperfine quantities for Y spins around an Er dopant.

The Er ion is treated as an effective spin-1/2 with anisotropic g-tensors
in the optical ground and excited Kramers doublets. Its classical dipole
field is added to the bias field at each Y site; the resulting total
fields give the nuclear Zeeman splittings and the branching contrast.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .crystal import (
    DEFAULT_CONSTANTS,
    MagneticClass,
    PhysicalConstants,
    YttriumSite,
    class_transform,
    class_transform_tensor,
)
from .errors import ConfigError, ZeroDistance, ZeroField

ZERO_FIELD_THRESHOLD = 1e-3  # T

_PAULI = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex
)


class SpinBranch(enum.Enum):
    DOWN = "down"
    UP = "up"


@dataclass(frozen=True)
class GTensorPair:
    ground: np.ndarray
    excited: np.ndarray
    source: str = ""
    variants: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for name in ("ground", "excited"):
            t = np.array(getattr(self, name), dtype=float)
            if t.shape != (3, 3) or not np.all(np.isfinite(t)):
                raise ConfigError(f"g-tensor '{name}' must be a finite 3x3 matrix")
            if np.linalg.matrix_rank(t) < 3:
                raise ConfigError(f"g-tensor '{name}' is singular")
            t.setflags(write=False)
            object.__setattr__(self, name, t)

    def for_class(self, magnetic_class: MagneticClass) -> "GTensorPair":
        return GTensorPair(
            class_transform_tensor(self.ground, magnetic_class),
            class_transform_tensor(self.excited, magnetic_class),
            self.source,
        )

    def variant(self, name: str) -> "GTensorPair":
        """Return a named perturbed variant (e.g. for a satellite line)."""
        try:
            v = self.variants[name]
        except KeyError:
            raise ConfigError(f"unknown g-tensor variant {name!r}") from None
        return GTensorPair(v["ground"], v["excited"], v.get("source", self.source))

    @classmethod
    def from_dict(cls, d: dict) -> "GTensorPair":
        try:
            variants = {
                k: {"ground": np.asarray(v["ground"], float),
                    "excited": np.asarray(v["excited"], float),
                    "source": v.get("source", "")}
                for k, v in d.get("variants", {}).items()
            }
            return cls(d["ground"], d["excited"], d.get("source", ""), variants)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed g-tensor config: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "frame": "D1-D2-b",
            "ground": self.ground.tolist(),
            "excited": self.excited.tolist(),
            "variants": {
                k: {"ground": np.asarray(v["ground"]).tolist(),
                    "excited": np.asarray(v["excited"]).tolist(),
                    "source": v.get("source", "")}
                for k, v in self.variants.items()
            },
        }


def load_g_tensors(path=None) -> GTensorPair:
    """Load a g-tensor config (JSON). Without a path, the bundled site-1 values."""
    try:
        if path is None:
            text = resources.files("oeem.data").joinpath("g_tensors_site1.json").read_text()
        else:
            text = Path(path).read_text()
        return GTensorPair.from_dict(json.loads(text))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read g-tensor config {path}: {exc}") from exc


def _check_field(b_ext: np.ndarray, zero_field: float):
    norms = np.linalg.norm(b_ext, axis=-1)
    if np.any(norms < zero_field * (1 - 1e-9)):
        raise ZeroField(
            f"|B_ext| = {norms.min():.3e} T is below the {zero_field:.1e} T validity threshold"
        )


def spin_expectation(g, b_ext, branch=SpinBranch.DOWN, zero_field=ZERO_FIELD_THRESHOLD):
    """Er spin expectation value in one Zeeman eigenstate.

    Diagonalises H = mu_B B.g.S for every field in ``b_ext`` (shape (3,) or
    (M, 3)) and returns <S> with |<S>| = 1/2.
    """
    g = np.asarray(g, dtype=float)
    b_ext = np.asarray(b_ext, dtype=float)
    _check_field(b_ext, zero_field)
    v = b_ext @ g  # effective field g^T B, up to mu_B
    h = 0.5 * np.einsum("...k,kij->...ij", v, _PAULI)
    _, vecs = np.linalg.eigh(h)
    idx = 0 if SpinBranch(branch) is SpinBranch.DOWN else 1
    psi = vecs[..., :, idx]
    s = 0.5 * np.einsum("...i,kij,...j->...k", psi.conj(), _PAULI, psi)
    return s.real


def er_moment(g, b_ext, branch=SpinBranch.DOWN, constants=DEFAULT_CONSTANTS,
              zero_field=ZERO_FIELD_THRESHOLD):
    """Expectation value of the Er magnetic moment, -mu_B g <S> (J/T)."""
    g = np.asarray(g, dtype=float)
    s = spin_expectation(g, b_ext, branch, zero_field)
    return -constants.mu_b * s @ g.T


def dipolar_field(moment, r, constants=DEFAULT_CONSTANTS):
    """Point-dipole field of ``moment`` (J/T) at displacement ``r`` (m).

    Broadcasts over leading axes of both arguments.
    """
    moment = np.asarray(moment, dtype=float)
    r = np.asarray(r, dtype=float)
    rn = np.linalg.norm(r, axis=-1, keepdims=True)
    if np.any(rn == 0):
        raise ZeroDistance("dipolar field evaluated at zero distance")
    mr = np.sum(moment * r, axis=-1, keepdims=True)
    return -(constants.mu_0 / (4 * np.pi)) * (moment / rn**3 - 3 * mr * r / rn**5)


def branching_contrast(b_g, b_e):
    """rho = 1 - (cos of the angle between the two total fields)^2, in [0, 1]."""
    b_g = np.asarray(b_g, dtype=float)
    b_e = np.asarray(b_e, dtype=float)
    c = np.sum(b_g * b_e, axis=-1) / (
        np.linalg.norm(b_g, axis=-1) * np.linalg.norm(b_e, axis=-1)
    )
    return np.clip(1.0 - c**2, 0.0, 1.0)


def branching_fraction(rho):
    """Root p <= 1/2 of rho = 4 p (1 - p)."""
    rho = np.clip(np.asarray(rho, dtype=float), 0.0, 1.0)
    return 0.5 * (1.0 - np.sqrt(1.0 - rho))


@dataclass(frozen=True)
class SpinCoupling:
    site_label: str
    b_er_g: np.ndarray
    b_er_e: np.ndarray
    b_tot_g: np.ndarray
    b_tot_e: np.ndarray
    delta_g: float  # Hz
    delta_e: float  # Hz
    rho: float
    p: float
    a_g: float  # Hz
    a_e: float  # Hz


@dataclass(frozen=True)
class CouplingGrid:
    """Vectorised couplings: leading axis fields (M), second axis sites (N)."""

    b_ext: np.ndarray  # (M, 3)
    b_er_g: np.ndarray  # (M, N, 3)
    b_er_e: np.ndarray
    b_tot_g: np.ndarray
    b_tot_e: np.ndarray
    delta_g: np.ndarray  # (M, N)
    delta_e: np.ndarray
    rho: np.ndarray


def coupling_grid(positions, g_pair: GTensorPair, b_ext, branch=SpinBranch.DOWN,
                  magnetic_class=MagneticClass.I, constants=DEFAULT_CONSTANTS,
                  zero_field=ZERO_FIELD_THRESHOLD) -> CouplingGrid:
    """Couplings of every site in ``positions`` (N, 3; metres, class-I frame)
    for every bias field in ``b_ext`` (M, 3; tesla, lab frame)."""
    b_ext = np.atleast_2d(np.asarray(b_ext, dtype=float))
    positions = class_transform(np.atleast_2d(positions), magnetic_class)
    gp = g_pair.for_class(magnetic_class)
    mu_g = er_moment(gp.ground, b_ext, branch, constants, zero_field)
    mu_e = er_moment(gp.excited, b_ext, branch, constants, zero_field)
    b_er_g = dipolar_field(mu_g[:, None, :], positions[None, :, :], constants)
    b_er_e = dipolar_field(mu_e[:, None, :], positions[None, :, :], constants)
    b_tot_g = b_ext[:, None, :] + b_er_g
    b_tot_e = b_ext[:, None, :] + b_er_e
    gyro = constants.nuclear_gyro
    return CouplingGrid(
        b_ext=b_ext,
        b_er_g=b_er_g,
        b_er_e=b_er_e,
        b_tot_g=b_tot_g,
        b_tot_e=b_tot_e,
        delta_g=gyro * np.linalg.norm(b_tot_g, axis=-1),
        delta_e=gyro * np.linalg.norm(b_tot_e, axis=-1),
        rho=branching_contrast(b_tot_g, b_tot_e),
    )


def site_coupling(site: YttriumSite, g_pair: GTensorPair, b_ext, branch=SpinBranch.DOWN,
                  magnetic_class=MagneticClass.I, constants=DEFAULT_CONSTANTS,
                  zero_field=ZERO_FIELD_THRESHOLD) -> SpinCoupling:
    """Superhyperfine coupling of one Y site at one bias field.

    ``a_g``/``a_e`` are the splittings produced by the Er dipolar field alone,
    i.e. the zero-bias limit of the hyperbolic field dependence.
    """
    grid = coupling_grid(site.r, g_pair, b_ext, branch, magnetic_class, constants, zero_field)
    rho = float(grid.rho[0, 0])
    gyro = constants.nuclear_gyro
    b_er_g = grid.b_er_g[0, 0]
    b_er_e = grid.b_er_e[0, 0]
    return SpinCoupling(
        site_label=site.label,
        b_er_g=b_er_g,
        b_er_e=b_er_e,
        b_tot_g=grid.b_tot_g[0, 0],
        b_tot_e=grid.b_tot_e[0, 0],
        delta_g=float(grid.delta_g[0, 0]),
        delta_e=float(grid.delta_e[0, 0]),
        rho=rho,
        p=float(branching_fraction(rho)),
        a_g=float(gyro * np.linalg.norm(b_er_g)),
        a_e=float(gyro * np.linalg.norm(b_er_e)),
    )


def _split(vec, direction):
    par = float(np.dot(vec, direction))
    perp = float(np.linalg.norm(vec - par * direction))
    return par, perp


def field_components(coupling: SpinCoupling, direction):
    """Split the Er dipolar fields into components along ``direction``.

    Returns ``(B_par_g, B_perp_g, B_par_e, B_perp_e)`` in tesla. The parallel
    parts are signed with respect to ``direction``; perpendicular parts are
    magnitudes.
    """
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    return (*_split(coupling.b_er_g, d), *_split(coupling.b_er_e, d))


def predicted_hyperbola(site: YttriumSite, g_pair: GTensorPair, axis,
                        branch=SpinBranch.DOWN, magnetic_class=MagneticClass.I,
                        side: int = -1, constants=DEFAULT_CONSTANTS):
    """Hyperbola parameters for a sweep of the signed field ``B * axis``.

    In this model the Er dipolar field depends only on the bias direction, so
    on each side of zero the splittings follow
    ``gyro * sqrt(B_perp**2 + (B_par + B)**2)`` exactly. The Er field flips
    with the bias, so the parameters differ between the two sides; ``side``
    selects which (-1: negative fields, +1: positive fields).

    Returns ``(B_par_g, B_perp_g, B_par_e, B_perp_e)`` in tesla.
    """
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    c = site_coupling(site, g_pair, np.sign(side) * 0.1 * axis, branch, magnetic_class,
                      constants, zero_field=0.0)
    return field_components(c, axis)
