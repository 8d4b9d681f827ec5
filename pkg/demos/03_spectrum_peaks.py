"""
From trace to line positions
============================

Detrending removes the stretched-exponential decay; the zero-padded
Fourier transform then shows Delta_g, Delta_e and their sum and difference.
"""

import numpy as np

from oeem import (B_AXIS, ModulationParams, default_site_catalog, detrend, find_peaks,
                  load_g_tensors, site_coupling, spectrum, synthesize_trace)

g_pair = load_g_tensors()
c = site_coupling(default_site_catalog()[3], g_pair, 0.175 * B_AXIS)

tau = np.arange(0.0, 0.2, 2e-6)
trace = synthesize_trace(ModulationParams([[c.delta_g, c.delta_e, c.rho]], t2=0.05), tau)
spec = spectrum(detrend(trace), pad_factor=8)

expected = sorted([c.delta_g, c.delta_e, c.delta_g + c.delta_e, abs(c.delta_g - c.delta_e)])
print(f"native resolution {spec.native_resolution:.2f} Hz")
for peak, want in zip(find_peaks(spec), expected):
    print(f"peak {peak.frequency:12.2f} Hz   expected {want:12.2f} Hz")
