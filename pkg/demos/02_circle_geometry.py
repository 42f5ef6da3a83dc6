"""Closed-form circle tensors and curvature recovery from small scales.

The arc-length measure on a circle has an exactly computable covariance
tensor under the truncation kernel: the eigenvector normal to the circle
carries lambda_n, the tangent carries lambda_t.  Sweeping the evaluation
point through the support band |r - R| <= sigma traces two eigenvalue
curves, and a quadrature version of the circle lands on them.  At small
scales the trace expands as 2 sigma/(3 pi) + kappa^2 sigma^3/(20 pi), which
is what curve_curvature inverts to estimate |kappa|.

Run:  python3 demos/02_circle_geometry.py
"""

import math
import os

import numpy as np

import covfields as cf

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

sigma = 0.1
circle = cf.quadrature_circle(1.0, 100_000)
kernel = cf.builtin_truncation()

radii = np.linspace(0.9, 1.1, 21)
rows = ["r,lambda_n_exact,lambda_t_exact,lambda_n_emp,lambda_t_emp"]
worst = 0.0
for r in radii:
    ln, lt = cf.circle_eigenvalues(1.0, r, sigma)
    t = cf.ctf_at(circle, kernel, [r, 0.0], sigma)
    rows.append(f"{r},{ln},{lt},{t.entries[0, 0]},{t.entries[1, 1]}")
    worst = max(worst, abs(t.entries[0, 0] - ln), abs(t.entries[1, 1] - lt))
csv_path = os.path.join(OUT, "circle_eigenvalues.csv")
with open(csv_path, "w") as fh:
    fh.write("\n".join(rows) + "\n")
print(f"eigenvalue curves for r in [0.9, 1.1] -> {csv_path}")
print(f"worst |empirical - closed form| over the sweep: {worst:.2e}")

print("\ncurvature recovery from the sigma-ladder {0.05, 0.04, 0.03}:")
for radius in (0.5, 1.0, 2.0):
    half = 1.3 * 2 * math.asin(0.05 / (2 * radius))
    arc = cf.quadrature_arc(radius, -half, half, 800_000)
    est = cf.curve_curvature(arc, [radius, 0.0], [0.05, 0.04, 0.03])
    print(f"  circle R={radius}: |kappa| = {est.kappa_abs:.4f}  (true {1 / radius})")

seg = cf.quadrature_segment([-0.5, 0.0], [0.5, 0.0], 1e-4)
est = cf.curve_curvature(seg, [0.0, 0.0], [0.05, 0.04, 0.03])
print(f"  straight segment: |kappa| = {est.kappa_abs:.4f}  (true 0)")
