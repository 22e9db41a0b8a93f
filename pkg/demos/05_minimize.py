"""Gradient descent on a flatness deviation over parameter families of metrics.

Run: python demos/05_minimize.py
"""
import numpy as np

from flatlab.catalog import unit_box
from flatlab.variational import FamilySpec, FunctionalId, GridQuadrature, minimize_deviation, second_difference

fam = FamilySpec("conformal_scale", unit_box(2, 24))
res = minimize_deviation(FunctionalId("RiemannNorm", "Metric"), fam, GridQuadrature(fam.box), [0.3])
print("Conformal family exp(2 theta |x|^2 / 2) delta, Riemann norm, start theta = 0.3")
for k, v in enumerate(res.trace):
    print(f"  iteration {k:2d}   functional {v:.3e}")
print(f"  theta* = {res.theta[0]:.2e}, converged {res.converged}")

fam = FamilySpec("polynomial", unit_box(3, 8), k=3, seed=1, scale=0.3)
quad = GridQuadrature(fam.box)
fid = FunctionalId("ConnNorm", "Metric")
res = minimize_deviation(fid, fam, quad, [0.05, -0.03, 0.02])
print(f"\nPolynomial family, connection norm: {res.iterations} iterations, final functional {res.trace[-1]:.1e}")
dirs = np.random.default_rng(0).normal(size=(20, 3))
h = [second_difference(fid, fam, np.zeros(3), d / np.linalg.norm(d), quad) for d in dirs]
print(f"Second differences at the flat member along 20 directions: min {min(h):.3e}, max {max(h):.3e}")
