"""Discretized functionals and the independent first-variation oracle."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..curvature import christoffel, curvature_bundle
from ..fields import ConnectionJet1, FDConfig, FieldSpec, MetricJet2, eval_metric_jet2
from ..tensor_core import invert_spd
from .ids import FunctionalId, Variable
from .lagrangians import connection_density, invert_jet, metric_density, metric_state
from .quadrature import BumpPerturbation, GridQuadrature
from .residuals import connection_setting, el_residual

ABS_FLOOR = 1e-9


def density(fid: FunctionalId, jet: MetricJet2 | None = None, *, conn=None) -> np.ndarray:
    """Lagrangian L * sqrt(det g) at the given point data.

    Metric-variable ids take a metric jet.  Connection-variable ids take
    ``conn=(g, g_inv, sqrt_det, connection_jet)``; passing only a metric jet
    uses its Levi-Civita connection.
    """
    if fid.is_connection:
        if conn is None:
            g_inv = invert_spd(jet.g)
            conn = (jet.g, g_inv, np.sqrt(np.linalg.det(jet.g)), christoffel(jet, g_inv))
        g, K, s, cj = conn
        return connection_density(fid, g, K, cj) * s
    st = metric_state(jet)
    return metric_density(fid, st.K, st.G1, st.H) * st.s


def _perturbed_metric_jet(fid: FunctionalId, jet: MetricJet2, bump_jet, eps: float) -> MetricJet2:
    b, db, ddb = bump_jet
    if fid.variable is Variable.Metric:
        return MetricJet2(jet.x, jet.g + eps * b, jet.dg + eps * db, jet.ddg + eps * ddb)
    K, dK, ddK = invert_jet(jet.g, jet.dg, jet.ddg)
    g, dg, ddg = invert_jet(K + eps * b, dK + eps * db, ddK + eps * ddb)
    return MetricJet2(jet.x, g, dg, ddg)


def functional(
    fid: FunctionalId,
    spec: FieldSpec,
    quad: GridQuadrature,
    bump: BumpPerturbation | None = None,
    eps: float = 0.0,
) -> float:
    """Midpoint-rule integral of the Lagrangian, optionally at the perturbed field.

    The perturbation ``eps * bump`` is added to the declared variable: g, the
    inverse metric (then re-inverted) or the connection coefficients.
    """
    X = quad.points()
    if fid.is_connection:
        g, K, s, cj = connection_setting(spec, X, quad.fd)
        if bump is not None and eps != 0.0:
            b, db, _ = bump.jet(X)
            cj = ConnectionJet1(cj.x, cj.Gamma + eps * b, cj.dGamma + eps * db)
        return quad.integrate(density(fid, conn=(g, K, s, cj)))
    jet = eval_metric_jet2(spec, X, quad.fd)
    if bump is not None and eps != 0.0:
        jet = _perturbed_metric_jet(fid, jet, bump.jet(X), eps)
    return quad.integrate(density(fid, jet))


def gateaux_derivative(
    fid: FunctionalId, spec: FieldSpec, bump: BumpPerturbation, quad: GridQuadrature, eps: float = 1e-6
) -> float:
    """(I[v + eps b] - I[v - eps b]) / (2 eps) for the declared variable v."""
    return (functional(fid, spec, quad, bump, eps) - functional(fid, spec, quad, bump, -eps)) / (2 * eps)


def _support_mask(bumps, X) -> np.ndarray:
    inside = np.zeros(X.shape[0], dtype=bool)
    for bump in bumps:
        b = bump.jet(X)[0]
        inside |= np.any(b != 0, axis=tuple(range(1, b.ndim)))
    return inside


def _pair(E: np.ndarray, b: np.ndarray, quad: GridQuadrature) -> float:
    return quad.integrate(np.sum(E * b, axis=tuple(range(1, b.ndim))))


def residual_pairing(
    fid: FunctionalId, spec: FieldSpec, bump: BumpPerturbation, quad: GridQuadrature, form: str = "derived"
) -> float:
    """Integral of <el_residual, bump> dx over the quadrature grid."""
    X = quad.points()
    inside = _support_mask([bump], X)
    E = el_residual(fid, spec, X[inside], quad.fd, form=form)
    return _pair(E, bump.jet(X[inside])[0], quad)


def relative_mismatch(a: float, b: float, floor: float = ABS_FLOOR) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale < floor else abs(a - b) / scale


@dataclass
class OracleMatch:
    worst: float
    rows: list = field(default_factory=list)  # (gateaux, pairing, mismatch) per bump


def el_oracle_match(
    fid: FunctionalId,
    spec: FieldSpec,
    bumps,
    quad: GridQuadrature,
    eps: float = 1e-6,
    form: str = "derived",
) -> OracleMatch:
    """Worst relative mismatch between the Gateaux derivative and the residual pairing."""
    bumps = list(bumps)
    X = quad.points()
    inside = _support_mask(bumps, X)
    E = el_residual(fid, spec, X[inside], quad.fd, form=form) if inside.any() else None
    rows = []
    for bump in bumps:
        G = gateaux_derivative(fid, spec, bump, quad, eps)
        P = 0.0 if E is None else _pair(E, bump.jet(X[inside])[0], quad)
        rows.append((G, P, relative_mismatch(G, P)))
    return OracleMatch(max((r[2] for r in rows), default=0.0), rows)


def scalar_curvature_at(spec: FieldSpec, x, fd: FDConfig | None = None) -> np.ndarray:
    return curvature_bundle(eval_metric_jet2(spec, x, fd)).scalar


def random_bumps(quad: GridQuadrature, count: int, seed: int = 0, connection: bool = False):
    return [BumpPerturbation.random(seed + k, quad, connection) for k in range(count)]
