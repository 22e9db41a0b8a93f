"""Euler-Lagrange residuals checked against numerical first variations.

For every functional the Gateaux derivative along five bumps is compared with
the integral of the residual against each bump.  The second table compares the
literal closed-form displays with the derived residuals; ``factor`` is the
least-squares c with displayed = c * derived and ``non-prop`` what is left over.
Takes about two minutes.

Run: python demos/04_variational_oracle.py
"""
import time

from flatlab.catalog import variation_fields
from flatlab.variational import EL_TABLE, GridQuadrature, compare_forms, el_oracle_match, random_bumps

t0 = time.perf_counter()
print(f"{'functional':34s} {'worst mismatch over 3 fields':>30s}")
for fid in EL_TABLE:
    worst = 0.0
    for spec in variation_fields(fid):
        quad = GridQuadrature(spec.box)
        worst = max(worst, el_oracle_match(fid, spec, random_bumps(quad, 5, 0, fid.is_connection), quad).worst)
    print(f"{str(fid):34s} {worst:30.1e}")

print(f"\n{'functional':34s} {'derived':>9s} {'displayed':>10s} {'factor':>8s} {'non-prop':>9s}")
for fid in EL_TABLE:
    spec = variation_fields(fid)[0]
    quad = GridQuadrature(spec.box)
    c = compare_forms(fid, spec, quad, random_bumps(quad, 5, 0, fid.is_connection), stride=3)
    print(f"{str(fid):34s} {c.derived_mismatch:9.1e} {c.displayed_mismatch:10.2f} {c.factor:8.3f} {c.non_proportional:9.2f}")
print(f"\n{time.perf_counter() - t0:.0f} s")
