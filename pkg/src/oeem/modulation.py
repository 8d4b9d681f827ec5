"""
Echo envelope modulation: closed-form envelope, synthetic traces and a
brute-force density-matrix oracle for a single nuclear spin.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .crystal import DEFAULT_CONSTANTS


class TraceMode(enum.Enum):
    AMPLITUDE = "amplitude"
    INTENSITY = "intensity"


def _as_spins(spins) -> np.ndarray:
    arr = np.asarray(spins, dtype=float)
    if arr.size == 0:
        return np.zeros((0, 3))
    arr = arr.reshape(-1, 3)
    if np.any(arr[:, :2] < 0) or np.any((arr[:, 2] < 0) | (arr[:, 2] > 1)):
        raise ValueError("spins need delta_g, delta_e >= 0 and 0 <= rho <= 1")
    return arr


@dataclass(frozen=True)
class ModulationParams:
    """Decay and per-spin (delta_g [Hz], delta_e [Hz], rho) triples."""

    spins: np.ndarray
    t2: float
    gamma: float = 1.0
    mode: TraceMode = TraceMode.AMPLITUDE

    def __post_init__(self):
        object.__setattr__(self, "spins", _as_spins(self.spins))
        object.__setattr__(self, "mode", TraceMode(self.mode))
        if not self.t2 > 0:
            raise ValueError("T2 must be positive")
        if not self.gamma >= 1:
            raise ValueError("gamma must be >= 1")


@dataclass(frozen=True)
class EchoTrace:
    tau: np.ndarray  # s
    values: np.ndarray
    mode: TraceMode = TraceMode.AMPLITUDE
    noise_sigma: float = 0.0
    rng_seed: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if tau.shape != values.shape or tau.ndim != 1:
            raise ValueError("tau and values must be 1-D arrays of equal length")
        if tau.size >= 2:
            steps = np.diff(tau)
            if np.any(steps <= 0):
                raise ValueError("tau grid must be strictly increasing")
            if np.ptp(steps) > 1e-9 * abs(steps.mean()) + 1e-15 * tau[-1]:
                raise ValueError("tau grid must be uniformly spaced")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mode", TraceMode(self.mode))

    @property
    def dtau(self) -> float:
        return float((self.tau[-1] - self.tau[0]) / (self.tau.size - 1))


def envelope(tau, spins):
    """Product over spins of 1 - rho/2 [1 - cos(2 pi dg tau)] [1 - cos(2 pi de tau)]."""
    tau = np.asarray(tau, dtype=float)
    spins = _as_spins(spins)
    theta = np.ones_like(tau)
    for dg, de, rho in spins:
        theta = theta * (
            1.0 - 0.5 * rho * (1.0 - np.cos(2 * np.pi * dg * tau))
            * (1.0 - np.cos(2 * np.pi * de * tau))
        )
    return theta


def stretched_decay(tau, t2, gamma=1.0, amplitude=1.0):
    """amplitude * exp[-(2 tau / T2)**gamma]."""
    return amplitude * np.exp(-((2.0 * np.asarray(tau, dtype=float) / t2) ** gamma))


def trace_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Independent, reproducible stream for trace ``index`` under ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def synthesize_trace(params: ModulationParams, tau, noise_sigma: float = 0.0,
                     rng_seed: int = 0, stream: int = 0, theta=None) -> EchoTrace:
    """Echo trace Theta(tau) * exp[-(2 tau/T2)^gamma], squared in intensity mode.

    ``theta`` may be supplied to bypass the closed-form envelope, e.g. with an
    ensemble average over magnetic classes.
    """
    tau = np.asarray(tau, dtype=float)
    if theta is None:
        theta = envelope(tau, params.spins)
    values = np.asarray(theta) * stretched_decay(tau, params.t2, params.gamma)
    if params.mode is TraceMode.INTENSITY:
        values = values**2
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    if noise_sigma > 0:
        values = values + noise_sigma * trace_rng(rng_seed, stream).standard_normal(tau.size)
    meta = {
        "t2_s": params.t2,
        "gamma": params.gamma,
        "mode": params.mode.value,
        "spins": params.spins.tolist(),
        "noise_sigma": noise_sigma,
        "seed": rng_seed,
        "stream": stream,
    }
    return EchoTrace(tau, values, params.mode, noise_sigma, rng_seed, meta)


_SIGMA = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)


def _nuclear_zeeman(b_tot, constants):
    # H / h in Hz for a spin-1/2 with I = sigma / 2
    coef = -constants.g_y * constants.mu_n / constants.h
    return coef * 0.5 * np.einsum("k,kij->ij", np.asarray(b_tot, dtype=float), _SIGMA)


def quantum_echo_oracle(b_tot_g, b_tot_e, tau, constants=DEFAULT_CONSTANTS):
    """Normalised two-pulse echo amplitude from explicit propagation.

    Simulates an ideal pi/2 - tau - pi - tau sequence on an optical two-level
    system tensored with one nuclear spin-1/2 whose Zeeman Hamiltonian depends
    on the optical state. The nuclear spin starts maximally mixed. The echo
    coherence is divided by that of an uncoupled emitter, so the result is 1
    whenever the two quantisation axes coincide.
    """
    tau = np.asarray(tau, dtype=float)
    eye2 = np.eye(2)
    proj_g = np.diag([1.0, 0.0])
    proj_e = np.diag([0.0, 1.0])
    h = np.kron(proj_g, _nuclear_zeeman(b_tot_g, constants)) + np.kron(
        proj_e, _nuclear_zeeman(b_tot_e, constants)
    )
    energies, vecs = np.linalg.eigh(h)

    def rx(theta):
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        return np.kron(np.array([[c, -1j * s], [-1j * s, c]]), eye2)

    p_half, p_pi = rx(np.pi / 2), rx(np.pi)
    rho0 = np.kron(proj_g, eye2 / 2)
    # coherence operator |g><e| (x) 1 picks out the optical off-diagonal block
    coh = np.kron(np.array([[0.0, 1.0], [0.0, 0.0]]), eye2)

    phases = np.exp(-2j * np.pi * np.outer(tau, energies))  # (T, 4)
    u = np.einsum("ij,tj,kj->tik", vecs, phases, vecs.conj())  # (T, 4, 4)
    ud = np.conj(np.swapaxes(u, 1, 2))
    rho1 = p_half @ rho0 @ p_half.conj().T
    rho2 = u @ rho1 @ ud
    rho3 = p_pi @ rho2 @ p_pi.conj().T
    rho4 = u @ rho3 @ ud
    signal = np.einsum("ij,tji->t", coh, rho4)

    # uncoupled reference: same pulses without nuclear evolution
    r = p_pi @ (p_half @ rho0 @ p_half.conj().T) @ p_pi.conj().T
    ref = np.trace(coh @ r)
    return (signal / ref).real


def oracle_deviation(n_trials: int = 100, tau=None, seed: int = 0, b_range=(1e-3, 0.5),
                     constants=DEFAULT_CONSTANTS) -> np.ndarray:
    """Max |oracle - closed form| for ``n_trials`` random ground/excited field pairs.

    Fields have isotropic random directions and log-uniform magnitudes in
    ``b_range`` (T); ``tau`` defaults to 601 points over 0-300 us.
    """
    from .spinmodel import branching_contrast

    tau = np.linspace(0.0, 300e-6, 601) if tau is None else np.asarray(tau, dtype=float)
    rng = trace_rng(seed, 0)
    gyro = constants.nuclear_gyro
    out = np.empty(n_trials)
    for k in range(n_trials):
        v = rng.standard_normal((2, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        mags = np.exp(rng.uniform(np.log(b_range[0]), np.log(b_range[1]), 2))
        bg, be = v[0] * mags[0], v[1] * mags[1]
        spin = [gyro * mags[0], gyro * mags[1], float(branching_contrast(bg, be))]
        out[k] = np.max(np.abs(quantum_echo_oracle(bg, be, tau, constants) - envelope(tau, [spin])))
    return out
