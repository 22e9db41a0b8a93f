"""Realize a prescribed curvature tensor at the origin and watch the volume expansion converge.

Run: python demos/03_normal_coordinates.py
"""
import numpy as np

from flatlab.catalog import unit_box
from flatlab.curvature import curvature_bundle
from flatlab.fields import eval_metric_jet2
from flatlab.flatness import CurvaturePrescription, gray_volume_check, normal_metric_from_curvature

for n in (2, 3):
    p = CurvaturePrescription.random(seed=n, n=n, scale=0.1)
    spec = normal_metric_from_curvature(p, unit_box(n))
    got = curvature_bundle(eval_metric_jet2(spec, np.zeros(n))).Rlower
    print(f"n = {n}: max |R(0) - R0| = {np.max(np.abs(got - p.R0)):.1e}")
    prev = None
    for rho in (0.4, 0.2, 0.1, 0.05):
        err = gray_volume_check(spec, rho, p.ricci)
        ratio = "" if prev is None else f"   ratio {prev / err:5.1f}"
        print(f"    rho = {rho:5.3f}   volume-expansion error {err:.2e}{ratio}")
        prev = err

p = CurvaturePrescription.constant_curvature_2d(1.0)
for series in ("curvature", "displayed"):
    spec = normal_metric_from_curvature(p, unit_box(2), series)
    R = curvature_bundle(eval_metric_jet2(spec, np.zeros(2))).Rlower
    print(f"series={series!r:12s} R_1212 at origin = {R[0, 1, 0, 1]:+.3f} (prescribed +1)")
