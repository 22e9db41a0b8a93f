"""Named smooth test fields used by the demos, the CLI and the test suite."""
from __future__ import annotations

import numpy as np

from .fields import ChartBox, FieldSpec, random_spd_metric, soliton_coefficients


def unit_box(n: int, grid: int = 16) -> ChartBox:
    return ChartBox.cube(n, -0.5, 0.5, grid)


def conformal_exp(box: ChartBox, inner: dict) -> FieldSpec:
    """g = exp(2 u) delta for the scalar u described by ``inner``."""
    return FieldSpec("conformal", {"scalar": {"id": "exp", "scale": 2.0, "inner": inner}}, box)


def conformal_trig_2d(box: ChartBox, amp: float = 0.3, k=(1.0, 2.0), phase: float = 0.3) -> FieldSpec:
    """2D conformal metric exp(2 amp sin(k.x + phase)) delta; every 2D conformal chart is harmonic."""
    return conformal_exp(box, {"id": "trig", "c0": 0.0, "amp": amp, "k": list(k), "phase": phase})


def conformal_quadratic(box: ChartBox, seed: int = 0, scale: float = 0.3) -> FieldSpec:
    rng = np.random.default_rng(seed)
    n = box.n
    Q = rng.normal(size=(n, n)) * scale
    return conformal_exp(box, {"id": "quadratic", "a": (rng.normal(size=n) * scale).tolist(), "Q": (0.5 * (Q + Q.T)).tolist()})


def harmonic_diagonal_3d(box: ChartBox, profile: str) -> FieldSpec:
    """g = diag(e^f, e^-f, 1) with f = f(x3); the coordinates are harmonic."""
    return FieldSpec("custom", {"g": [[f"exp({profile})", 0, 0], [0, f"exp(-({profile}))", 0], [0, 0, 1]]}, box)


def custom_connection_3d(box: ChartBox, amp: float = 0.3, shift: float = 0.2) -> FieldSpec:
    """A smooth, non-flat, symmetric connection on a 3D chart."""
    gam = [[[None] * 3 for _ in range(3)] for _ in range(3)]
    for i in range(3):
        for j in range(3):
            for k in range(3):
                a, b = min(j, k), max(j, k)
                gam[i][j][k] = (
                    f"{amp}*sin(x{(i + a + b) % 3 + 1}+{shift * i})+{2 * amp / 3}*x{(i + a) % 3 + 1}*x{b % 3 + 1}"
                )
    return FieldSpec("custom_connection", {"Gamma": gam}, box)


def constant_connection(box: ChartBox, seed: int = 0, scale: float = 0.5) -> FieldSpec:
    """Constant symmetric coefficients; curved unless they satisfy the cone condition."""
    C = np.random.default_rng(seed).normal(size=(box.n,) * 3) * scale
    C = 0.5 * (C + np.swapaxes(C, 1, 2))
    return FieldSpec("tabulated_connection", {"C": C.tolist()}, box)


def variation_fields(fid, grid3: int = 12, grid2: int = 16) -> list[FieldSpec]:
    """Three smooth fields on which the Euler-Lagrange residual of ``fid`` is exercised.

    Harmonic-gauge ids get harmonic charts.  Metric ids use 3D fields because
    the total scalar curvature has identically vanishing variation in 2D.
    The total scalar curvature varied in Gamma is stationary at every
    Levi-Civita connection, so it gets a second non-metric connection instead.
    """
    b3 = unit_box(3, grid3)
    if fid.is_connection:
        third = custom_connection_3d(b3, amp=0.25, shift=0.7)
        if fid.density.value != "TotalScalar":
            third = random_spd_metric(4, 1, b3, 0.3)
        return [custom_connection_3d(b3), constant_connection(b3, seed=3), third]
    if fid.gauge.value == "harmonic":
        return [
            harmonic_diagonal_3d(b3, "0.5*sin(x3)"),
            harmonic_diagonal_3d(b3, "0.4*x3^2+0.3*x3"),
            conformal_trig_2d(unit_box(2, grid2)),
        ]
    return [random_spd_metric(4, 1, b3, 0.3), random_spd_metric(11, 2, b3, 0.3), conformal_quadratic(b3, seed=5)]



def riccati_soliton(box: ChartBox, u, shift: float = 2.0) -> FieldSpec:
    """Soliton connection -u^l f(x) for every (i, s), f = -1/(x^1 + ... + x^n + shift).

    Solves the plus Riccati system when sum(u) = 1 and the minus system when sum(u) = -1.
    """
    return FieldSpec("soliton_connection", {"c": soliton_coefficients(u).tolist(), "shift": float(shift)}, box)
