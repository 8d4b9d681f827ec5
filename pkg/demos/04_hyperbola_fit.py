"""
Locating a nucleus from a field sweep
=====================================

Each superhyperfine line traces a hyperbola in the bias field whose vertex
gives the Er-induced field at the nucleus. Fitting line positions recovers
that field and the nuclear gyromagnetic ratio.
"""

import numpy as np

from oeem import (B_AXIS, LinePositionSeries, default_site_catalog, eval_hyperbola,
                  fit_gyromagnetic, fit_hyperbola, load_g_tensors, predicted_hyperbola)

g_pair = load_g_tensors()
y4 = default_site_catalog()[3]
# ground-state parameters for a sweep on the positive side
b_par, b_perp = predicted_hyperbola(y4, g_pair, B_AXIS, side=+1)[:2]
print(f"predicted: B_par {b_par * 1e3:.2f} mT, B_perp {b_perp * 1e3:.2f} mT")

rng = np.random.default_rng(1)
b = np.linspace(0.0, 0.3, 31)
f = eval_hyperbola(b, b_par, b_perp, 2.0863e6)
err = 0.01 * f
series = LinePositionSeries(b, f + err * rng.standard_normal(b.size), err, "Y4")

fit = fit_hyperbola(series)
print(f"fit: B_par {fit.b_par * 1e3:.2f} +- {fit.b_par_err * 1e3:.2f} mT, "
      f"B_perp {fit.b_perp * 1e3:.2f} +- {fit.b_perp_err * 1e3:.2f} mT, "
      f"gyro {fit.gyro / 1e6:.4f} +- {fit.gyro_err / 1e6:.4f} MHz/T")

gyro = fit_gyromagnetic([series])
print(f"combined gyromagnetic ratio {gyro.gyro / 1e6:.4f} MHz/T")
