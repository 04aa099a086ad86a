"""Safe-set geometry of the power-flow constraint.

Samples the pose-loop safe set in the (position error, velocity error)
plane in its three flavors (true-acceleration exponent, the deployed
zero-acceleration approximation, and the rescaled version that fits back
inside the former), plus the wrench-loop set against soft and stiff
surfaces.  Outputs land in demos/output/safesets/.
"""

import os

import numpy as np

from powergate.cli import main
from powergate.safety import safeset_geometry

OUT = os.path.join(os.path.dirname(__file__), "output", "safesets")

geo = safeset_geometry(4.58, 5.0, 20.0, lambda_hat=-0.546)
print("pose safe-set geometry at the nominal operating point:")
print(f"  asymptote slopes: {geo.asymptote_slopes[0]:+.2f} and {geo.asymptote_slopes[1]:+.2f}")
print(f"  asymptote bisector slope: {geo.bisector_slope:+.3f}")
print(f"  c1 = {geo.c1:.3f} 1/s")
print(f"  scaling coefficient k_lambda' = {geo.k_lambda_prime:.3f}")
print()

code = main(["safeset", "--out", OUT])
assert code == 0
print(f"sampled boundaries written to {OUT}/boundaries.csv")
print(f"figure written to {OUT}/safesets.svg")
