"""
Constants, the D1-D2-b crystal frame and the yttrium neighbour catalog.

All vectors are expressed in the (D1, D2, b) frame of Y2SiO5. Positions
are stored in metres internally; the catalog is written in angstrom
because that is how crystallographic tables are usually quoted.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants as _sc

ANGSTROM = 1e-10

D1 = np.array([1.0, 0.0, 0.0])
D2 = np.array([0.0, 1.0, 0.0])
B_AXIS = np.array([0.0, 0.0, 1.0])

# Free-ion 89Y gyromagnetic ratio (Hz/T) and the diamagnetic shielding
# factor that maps it onto the value measured in YCl3 solution.
FREE_ION_GYRO_Y89 = -2.0949e6
SHIELDING_FACTOR_Y89 = 1.0041


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants used by the spin model.

    ``g_y`` is configurable because the effective nuclear g-factor of
    89Y shifts slightly between chemical environments.
    """

    mu_n: float = _sc.physical_constants["nuclear magneton"][0]
    mu_b: float = _sc.physical_constants["Bohr magneton"][0]
    h: float = _sc.h
    mu_0: float = _sc.mu_0
    g_y: float = -0.2737

    def __post_init__(self):
        for name in ("mu_n", "mu_b", "h", "mu_0", "g_y"):
            value = getattr(self, name)
            if not np.isfinite(value) or value == 0:
                raise ValueError(f"{name} must be finite and nonzero, got {value}")

    @property
    def nuclear_gyro(self) -> float:
        """|g_Y| mu_N / h in Hz/T (always positive)."""
        return self.mu_n * abs(self.g_y) / self.h

    def with_g_y(self, g_y: float) -> "PhysicalConstants":
        return replace(self, g_y=g_y)


DEFAULT_CONSTANTS = PhysicalConstants()


def shielded_gyromagnetic(free_ion: float = FREE_ION_GYRO_Y89,
                          shielding: float = SHIELDING_FACTOR_Y89) -> float:
    """Gyromagnetic ratio after electronic shielding, ``free_ion / shielding``."""
    return free_ion / shielding


def apply_chemical_shift(reference: float, shift_ppm: float) -> float:
    """Shift a reference gyromagnetic ratio by ``shift_ppm`` parts per million."""
    return reference * (1.0 + 1e-6 * shift_ppm)


class MagneticClass(enum.Enum):
    I = "I"
    II = "II"


# C2 rotation about b: (D1, D2, b) -> (-D1, -D2, b)
C2_B = np.diag([-1.0, -1.0, 1.0])


def class_transform(v, class_id: MagneticClass = MagneticClass.I) -> np.ndarray:
    """Map a class-I vector (or stack of vectors) into the given magnetic class."""
    v = np.asarray(v, dtype=float)
    if MagneticClass(class_id) is MagneticClass.I:
        return v.copy()
    return v * np.array([-1.0, -1.0, 1.0])


def class_transform_tensor(t, class_id: MagneticClass = MagneticClass.I) -> np.ndarray:
    """Similarity transform R T R^T with R the C2(b) rotation for class II."""
    t = np.asarray(t, dtype=float)
    if MagneticClass(class_id) is MagneticClass.I:
        return t.copy()
    return C2_B @ t @ C2_B.T


@dataclass(frozen=True)
class YttriumSite:
    label: str
    position: tuple  # angstrom, (D1, D2, b), relative to the Er dopant
    distance: float  # angstrom

    def __post_init__(self):
        pos = tuple(float(x) for x in self.position)
        if len(pos) != 3:
            raise ValueError(f"{self.label}: position must have 3 components")
        object.__setattr__(self, "position", pos)
        norm = float(np.linalg.norm(pos))
        if abs(norm - self.distance) > 0.01:
            raise ValueError(
                f"{self.label}: distance {self.distance} A inconsistent with |position| = {norm:.3f} A"
            )

    @classmethod
    def from_position(cls, label: str, position) -> "YttriumSite":
        return cls(label, tuple(position), float(np.linalg.norm(position)))

    @property
    def r(self) -> np.ndarray:
        """Position in metres."""
        return np.asarray(self.position) * ANGSTROM


# label, D1, D2, b (angstrom), d (angstrom); Er site 1, class I
_TABLE = [
    ("Y1", -0.65, 3.23, -0.81, 3.40),
    ("Y2", -3.45, 0.29, 0.00, 3.46),
    ("Y3", -1.67, -1.87, 2.45, 3.51),
    ("Y4", 2.26, -2.25, -1.72, 3.62),
    ("Y5", -1.78, 2.16, 2.45, 3.72),
    ("Y6", -2.80, -2.95, -0.81, 4.15),
    ("Y7", 3.93, -0.38, 2.55, 4.70),
    ("Y8", -1.67, -1.87, -4.27, 4.95),
    ("Y9", -1.78, 2.16, -4.27, 5.10),
    ("Y10", 5.06, 0.70, -0.91, 5.19),
    ("Y11", -1.02, -5.10, 1.64, 5.46),
    ("Y12", 1.02, 5.10, 1.64, 5.46),
    ("Y13", 3.28, 2.86, -3.36, 5.50),
    ("Y14", 3.28, 2.86, 3.36, 5.50),
    ("Y15", 3.93, -0.38, -4.17, 5.74),
]


def default_site_catalog() -> list[YttriumSite]:
    """The fifteen nearest Y neighbours of Er in site 1 (class I), sorted by distance."""
    return [YttriumSite(label, (d1, d2, b), d) for label, d1, d2, b, d in _TABLE]


def site_positions(sites) -> np.ndarray:
    """Stack site positions into an (N, 3) array in metres."""
    return np.array([s.r for s in sites]).reshape(-1, 3)


def find_site(sites, label: str) -> int:
    for i, s in enumerate(sites):
        if s.label == label:
            return i
    raise KeyError(f"no site labelled {label!r}")
