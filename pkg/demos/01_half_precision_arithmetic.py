"""How binary16 rounding shows up in the building blocks.

Run: python3 demos/01_half_precision_arithmetic.py
"""
import numpy as np

from zoomsk import PamSpec, Precision, ml_decode, pam_map, qop, quantize

# binary16 keeps 11 significant bits, so integers above 2048 start to collide
print("2049 ->", quantize(2049.0, Precision.HALF))
print("1 + 2**-11 ->", quantize(1 + 2.0 ** -11, "half"), "(tie, rounds to even)")
print("70000 ->", quantize(70000.0, "half"), "(past the largest finite value 65504)")

# one rounding per operation: adding a tiny increment to 1.0 is lost
print("1 + 2**-12 in half:", qop(1.0, 2.0 ** -12, "add", "half"))

# a 4096-point PAM grid is finer than binary16 near +-1/2: points merge
pts = pam_map(np.arange(4096), PamSpec(12), "half")
print("distinct 4096-PAM points after rounding to half:", len(np.unique(pts)))

# the decoder is exact in any case; it picks the nearest point, lower index on ties
print("ml_decode(0.40, M=16) =", ml_decode(0.40, PamSpec(4)))
