import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra.numpy import arrays

from oeem.modulation import (
    EchoTrace, ModulationParams, TraceMode, envelope, oracle_deviation, quantum_echo_oracle,
    stretched_decay, synthesize_trace, trace_rng,
)
from oeem.spinmodel import branching_contrast
from oeem.crystal import DEFAULT_CONSTANTS

spin = st.tuples(st.floats(0, 5e5), st.floats(0, 5e5), st.floats(0, 1))
field = arrays(float, 3, elements=st.floats(-0.5, 0.5, allow_nan=False))
TAU = np.linspace(0, 300e-6, 301)


@given(st.lists(spin, min_size=0, max_size=5))
def test_envelope_bounded(spins):
    theta = envelope(TAU, spins)
    assert np.all(theta <= 1 + 1e-12) and np.all(theta >= -1 - 1e-12)
    assert theta[0] == 1.0


@given(st.lists(spin, min_size=1, max_size=4), st.floats(1e-5, 1.0), st.floats(1, 3))
def test_amplitude_below_decay(spins, t2, gamma):
    tr = synthesize_trace(ModulationParams(spins, t2, gamma), TAU)
    assert np.all(np.abs(tr.values) <= stretched_decay(TAU, t2, gamma) + 1e-12)


@given(st.lists(spin, min_size=2, max_size=4))
def test_envelope_is_product_of_single_spins(spins):
    prod = np.prod([envelope(TAU, [s]) for s in spins], axis=0)
    assert np.allclose(envelope(TAU, spins), prod, atol=1e-12)


def test_envelope_closed_form_example():
    # one spin, rho = 1: 1 - (1 - cos a)(1 - cos b)/2
    t = np.array([0.0, 1.25e-6, 2.5e-6])
    theta = envelope(t, [[2e5, 1e5, 1.0]])
    a, b = 2 * np.pi * 2e5 * t, 2 * np.pi * 1e5 * t
    assert np.allclose(theta, 1 - 0.5 * (1 - np.cos(a)) * (1 - np.cos(b)))
    assert theta[2] == pytest.approx(0.0, abs=1e-12)  # a = pi, b = pi/2


def test_envelope_rejects_bad_spins():
    with pytest.raises(ValueError):
        envelope(TAU, [[1e5, 1e5, 1.5]])
    with pytest.raises(ValueError):
        envelope(TAU, [[-1.0, 1e5, 0.5]])


@given(field, field)
def test_oracle_matches_closed_form(bg, be):
    assume(np.linalg.norm(bg) > 1e-3 and np.linalg.norm(be) > 1e-3)
    gyro = DEFAULT_CONSTANTS.nuclear_gyro
    closed = envelope(TAU, [[gyro * np.linalg.norm(bg), gyro * np.linalg.norm(be),
                             float(branching_contrast(bg, be))]])
    assert np.max(np.abs(quantum_echo_oracle(bg, be, TAU) - closed)) <= 1e-9


def test_oracle_trivial_when_axes_coincide():
    out = quantum_echo_oracle([0, 0, 0.1], [0, 0, 0.3], TAU)
    assert np.allclose(out, 1.0, atol=1e-12)


def test_oracle_product_rule_for_two_spins():
    # independent baths: the two-spin envelope is the product of oracle outputs
    gyro = DEFAULT_CONSTANTS.nuclear_gyro
    pairs = [([0.1, 0, 0.05], [0, 0.08, 0.02]), ([0.02, 0.03, 0.2], [0.1, -0.05, 0.1])]
    prod = np.prod([quantum_echo_oracle(g, e, TAU) for g, e in pairs], axis=0)
    spins = [[gyro * np.linalg.norm(g), gyro * np.linalg.norm(e), branching_contrast(g, e)]
             for g, e in pairs]
    assert np.allclose(envelope(TAU, spins), prod, atol=1e-9)


def test_oracle_deviation_helper():
    dev = oracle_deviation(5, seed=3)
    assert dev.shape == (5,) and dev.max() <= 1e-9


def test_intensity_mode_squares():
    p = ModulationParams([[1e5, 2e5, 0.5]], 1e-3)
    a = synthesize_trace(p, TAU)
    i = synthesize_trace(ModulationParams(p.spins, 1e-3, mode="intensity"), TAU)
    assert np.allclose(i.values, a.values**2)
    assert i.mode is TraceMode.INTENSITY


def test_noise_is_seeded_per_stream():
    p = ModulationParams([[1e5, 2e5, 0.5]], 1e-3)
    a = synthesize_trace(p, TAU, 0.01, rng_seed=7, stream=2)
    b = synthesize_trace(p, TAU, 0.01, rng_seed=7, stream=2)
    c = synthesize_trace(p, TAU, 0.01, rng_seed=7, stream=3)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert a.meta["seed"] == 7 and a.meta["stream"] == 2
    assert np.array_equal(trace_rng(7, 2).standard_normal(3), trace_rng(7, 2).standard_normal(3))


def test_parameter_validation():
    with pytest.raises(ValueError):
        ModulationParams([], 0.0)
    with pytest.raises(ValueError):
        ModulationParams([], 1.0, gamma=0.5)
    with pytest.raises(ValueError):
        synthesize_trace(ModulationParams([], 1.0), TAU, noise_sigma=-1)


def test_trace_grid_validation():
    with pytest.raises(ValueError):
        EchoTrace([0.0, 1.0, 3.0], [1, 1, 1])
    with pytest.raises(ValueError):
        EchoTrace([0.0, 1.0], [1.0])
    assert EchoTrace(TAU, np.ones_like(TAU)).dtau == pytest.approx(1e-6)
