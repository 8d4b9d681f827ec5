"""
Magnetic-class doublets
=======================

Er3+ occupies two magnetically inequivalent classes related by the C2
rotation about b. With the field exactly along b their lines coincide; a
small tilt splits every line into a doublet.
"""

import numpy as np

from oeem import SweepSpec, load_g_tensors, predict_linemap

g_pair = load_g_tensors()
mags = np.linspace(0.02, 0.3, 57)
for tilt in (3.0, 1.0, 0.3, 0.0):
    lm = predict_linemap(SweepSpec(mags, tilt=(tilt, 0.0), sites=("Y4", "Y5")), g_pair)
    split = np.max(np.abs(lm.delta_g[0] - lm.delta_g[1]))
    print(f"tilt {tilt:3.1f} deg: largest class splitting of Delta_g {split / 1e3:8.3f} kHz")
