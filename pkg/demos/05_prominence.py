"""
Which nucleus stands out?
=========================

The prominence of a site is its contrast divided by the summed contrast of
all other sites. Searching over field direction and magnitude shows how
many nuclei can be isolated.
"""

import numpy as np

from oeem import B_AXIS, FieldSearchSpace, load_g_tensors, prominence_table
from oeem.prominence import prominence_array, rho_scan

g_pair = load_g_tensors()
rho = rho_scan(B_AXIS, [0.175], g_pair)[0]
print(f"lambda(Y4) at 175 mT along b: {prominence_array(rho, 3):.2f}")

for r in prominence_table(FieldSearchSpace(), g_pair):
    b = r.best_field
    print(f"{r.site_label:>4} lambda_max {r.lam:7.2f} at |B| {np.linalg.norm(b) * 1e3:7.1f} mT")
