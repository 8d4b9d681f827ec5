"""Optical echo envelope modulation (OEEM) toolkit for Er:YSO.

Models the superhyperfine coupling of an Er3+ effective spin to its yttrium
neighbours, the resulting modulation of optical photon echoes, the spectral
analysis of measured or simulated traces, and the field-sweep fits used to
identify individual nuclei.
"""

from .crystal import (
    B_AXIS, D1, D2, DEFAULT_CONSTANTS, MagneticClass, PhysicalConstants, YttriumSite,
    apply_chemical_shift, default_site_catalog, shielded_gyromagnetic,
)
from .errors import (
    ConfigError, DataIOError, FitFailure, InsufficientData, OEEMError, ZeroDistance, ZeroField,
)
from .fitting import (
    HyperbolaFit, LinePositionSeries, eval_hyperbola, fit_gyromagnetic, fit_hyperbola,
)
from .modulation import (
    EchoTrace, ModulationParams, TraceMode, envelope, quantum_echo_oracle, synthesize_trace,
)
from .prominence import FieldSearchSpace, maximize_prominence, prominence, prominence_table, rho_max_scan
from .spectral import Peak, Spectrum, detrend, find_peaks, spectrum
from .spinmodel import (
    GTensorPair, SpinBranch, SpinCoupling, branching_contrast, branching_fraction, load_g_tensors,
    predicted_hyperbola, site_coupling,
)
from .sweep import LineMap, SweepSpec, predict_linemap, simulate_sweep

__version__ = "0.1.0"
