"""Published literature values used as test targets.

Neighbour table: label -> (rho at 175 mT along b, |A_g| kHz, |A_e| kHz,
maximum contrast over a b-axis field scan). Hyperbola predictions:
label -> (B_par_g, B_perp_g, B_par_e, B_perp_e) in mT.
"""

NEIGHBOURS = {
    "Y1": (0.00, 660, 530, 0.02),
    "Y2": (0.01, 430, 370, 0.04),
    "Y3": (0.01, 480, 440, 0.03),
    "Y4": (0.97, 360, 280, 1.00),
    "Y5": (0.07, 290, 240, 0.51),
    "Y6": (0.07, 200, 180, 0.20),
    "Y7": (0.00, 210, 200, 0.02),
    "Y8": (0.00, 140, 150, 0.08),
    "Y9": (0.00, 200, 190, 0.02),
    "Y10": (0.01, 110, 90, 0.06),
    "Y11": (0.00, 150, 120, 0.03),
    "Y12": (0.02, 110, 80, 0.38),
    "Y13": (0.00, 110, 100, 0.03),
    "Y14": (0.00, 90, 90, 0.10),
    "Y15": (0.00, 80, 70, 0.10),
}

POSITIONS = {
    "Y1": (3.40, -0.65, 3.23, -0.81),
    "Y4": (3.62, 2.26, -2.25, -1.72),
    "Y12": (5.46, 1.02, 5.10, 1.64),
    "Y15": (5.74, 3.93, -0.38, -4.17),
}

HYPERBOLA_PRED = {
    "Y1": (-5, 317, 35, 250),
    "Y4": (164, 49, 131, 23),
    "Y5": (128, 52, 83, 83),
    "Y12": (41, 31, 35, 17),
}

GYRO_Y89 = 2.0863e6  # Hz/T, shielded magnitude
FREE_ION = 2.0949e6
SHIELDING = 1.0041
