"""
Superhyperfine couplings of the nearest yttrium neighbours
==========================================================

A bias field along b polarises the Er3+ effective spin differently in the
optical ground and excited states. Each yttrium nucleus therefore sees two
different total fields, and the angle between them sets the branching
contrast rho that drives the echo modulation.
"""

import numpy as np

from oeem import B_AXIS, default_site_catalog, load_g_tensors, site_coupling

g_pair = load_g_tensors()
b_ext = 0.175 * B_AXIS  # T

print(f"{'site':>4} {'r (A)':>7} {'rho':>6} {'A_g (kHz)':>10} {'A_e (kHz)':>10}")
for site in default_site_catalog():
    c = site_coupling(site, g_pair, b_ext)
    print(f"{site.label:>4} {np.linalg.norm(site.position):7.3f} {c.rho:6.3f} "
          f"{c.a_g / 1e3:10.1f} {c.a_e / 1e3:10.1f}")
