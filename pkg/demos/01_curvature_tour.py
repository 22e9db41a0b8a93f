"""Curvature of a few closed-form metrics, computed from their analytic jets.

Run: python demos/01_curvature_tour.py
"""
import numpy as np

from flatlab.catalog import conformal_quadratic, conformal_trig_2d, unit_box
from flatlab.curvature import curvature_bundle, is_harmonic, ricci_harmonic, ricci_logdet, ricci_from_mixed, riemann_mixed, christoffel
from flatlab.fields import ChartBox, FieldSpec, eval_metric_jet2, random_spd_metric
from flatlab.flatness import classify_flatness, sample_points


def sphere(r):
    return FieldSpec("sphere", {"radius": r}, ChartBox((0.5, 0.0), (np.pi - 0.5, 6.0), (8, 8)))


print("Round 2-spheres: scalar curvature should be 2 / r^2")
for r in (0.5, 1.0, 2.0):
    b = curvature_bundle(eval_metric_jet2(sphere(r), np.array([1.0, 0.5])))
    print(f"  r = {r:3.1f}   scalar = {b.scalar:.12f}   2/r^2 = {2 / r**2:.12f}")

print("\nThree routes to Ricci on a 2D conformal chart (harmonic, so all three apply)")
spec = conformal_trig_2d(unit_box(2))
jet = eval_metric_jet2(spec, sample_points(spec.box, 5, 0))
a = ricci_from_mixed(riemann_mixed(christoffel(jet)))
print(f"  harmonic chart: {is_harmonic(jet)}")
print(f"  |contraction - log-det|   = {np.max(np.abs(a - ricci_logdet(jet))):.2e}")
print(f"  |contraction - harmonic|  = {np.max(np.abs(a - ricci_harmonic(jet))):.2e}")

print("\nWeyl tensor: zero in 3D, nonzero for a generic 4D metric, zero for a 4D conformal metric")
for label, spec in [
    ("random 3D", random_spd_metric(1, 2, unit_box(3))),
    ("random 4D", random_spd_metric(1, 2, unit_box(4))),
    ("conformal 4D", conformal_quadratic(unit_box(4), seed=3)),
]:
    w = curvature_bundle(eval_metric_jet2(spec, sample_points(spec.box, 4, 0))).weyl
    print(f"  {label:13s} max |C| = {np.max(np.abs(w)):.2e}")

print("\nFlatness classification")
for label, spec in [
    ("constant metric", FieldSpec("euclidean", {"c": [[2.0, 0.4], [0.4, 1.0]]}, ChartBox.cube(2))),
    ("unit sphere", sphere(1.0)),
]:
    rep = classify_flatness(spec, sample_points(spec.box, 16, 0))
    flags = {k: v for k, v in rep.to_dict().items() if k.endswith("_flat")}
    print(f"  {label:16s} {flags}")
