"""Soliton connections solving the Riccati systems, and the curvature they force to zero.

Run: python demos/02_riccati_solitons.py
"""
import numpy as np

from flatlab.catalog import custom_connection_3d, riccati_soliton, unit_box
from flatlab.fields import ChartBox, eval_connection_jet1
from flatlab.flatness import cone_condition, constant_connection_curvature, integrability_check, riccati_implies_flat, sample_points

square = ChartBox.cube(2, 0.0, 1.0, 8)
print("Soliton c^l_is f(x), f = -1/(x1 + x2 + 2), on [0, 1]^2")
for which, u in (("plus", [0.3, 0.7]), ("minus", [-0.5, -0.5])):
    spec = riccati_soliton(square, u)
    X = sample_points(square, 32, 0)
    chk = riccati_implies_flat(eval_connection_jet1(spec, X), which)
    print(
        f"  {which:5s} u = {u}: Riccati residual {chk.riccati_norm:.1e}, curvature {chk.curvature_norm:.1e}, "
        f"mixed-partial proxy {integrability_check(spec, which, X):.1e}"
    )

spec = custom_connection_3d(unit_box(3))
chk = riccati_implies_flat(eval_connection_jet1(spec, sample_points(spec.box, 8, 0)))
print(f"\nControl: a generic connection has Riccati residual {chk.riccati_norm:.2f} and curvature {chk.curvature_norm:.2f}")

print("\nConstant connections: C^s_jk C^l_is = 0 forces flatness, but flat constants need not satisfy it")
for label, entries in (("only C^1_22 = 1", [(0, 1, 1)]), ("only C^1_11 = 1", [(0, 0, 0)])):
    C = np.zeros((2, 2, 2))
    for idx in entries:
        C[idx] = 1.0
    print(f"  {label}: cone value {cone_condition(C):.1f}, max curvature {np.max(np.abs(constant_connection_curvature(C))):.1f}")
