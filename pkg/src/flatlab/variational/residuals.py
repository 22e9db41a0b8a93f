"""Euler-Lagrange residuals of the flatness-deviation Lagrangians.

For a metric variable the residual is the Euler operator of L = F sqrt(det g),

    E^mn = dL/dg_mn - D_h dL/d(d_h g_mn) + D_a D_b dL/d(d_a d_b g_mn),

assembled from the algebraic partials in :mod:`.lagrangians`.  The total
derivatives D act on the bracketed fields and are taken by central differences
with step ``fd.h2``.  Varying the inverse metric instead gives
E_mn = -g_ma E^ab g_bn.  For a connection variable (metric fixed)

    E_u^vw = dL/dGamma^u_vw - D_t dL/d(d_t Gamma^u_vw).

The residual pairs with a perturbation b through the plain coordinate measure:
the first variation of the functional along b is the integral of <E, b> dx.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from ..curvature import HARMONIC_TOL, christoffel, harmonic_defect, riemann_mixed, ricci_from_mixed
from ..errors import GaugeViolation
from ..fields import ConnectionJet1, FDConfig, FieldSpec, eval_connection_jet1, eval_metric_jet2
from ..tensor_core import invert_spd
from .ids import Density, FunctionalId, Gauge, Variable
from .lagrangians import connection_partials, metric_partials, metric_state


def _sym(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def _fd(spec: FieldSpec, fd: FDConfig | None) -> FDConfig:
    return fd or FDConfig.default(spec.box)


def metric_brackets(fid: FunctionalId, jet):
    """(P0, P1, P2): dL/dg, dL/d(dg), dL/d(ddg) at the jet points.

    P1 is indexed ``[..., h, m, n]`` and P2 ``[..., a, b, m, n]`` with the
    derivative slots first.
    """
    st = metric_state(jet)
    p = metric_partials(fid, st.K, st.G1, st.H)
    s = st.s
    P0 = s[..., None, None] * (
        0.5 * p.F[..., None, None] * st.K - np.einsum("...ma,...ab,...bn->...mn", st.K, p.dK, st.K)
    )
    Y = p.dG1
    P1 = 0.5 * s[..., None, None, None] * (
        np.einsum("...mnh->...hmn", Y) + np.einsum("...mhn->...hmn", Y) - Y
    )
    P2 = s[..., None, None, None, None] * p.dH
    P2 = 0.5 * (P2 + np.swapaxes(P2, -4, -3))
    return P0, P1, P2


def _divergence(field_at: Callable, X: np.ndarray, h: float, n: int) -> np.ndarray:
    """sum_t D_t F^t with F^t = field_at(Y)[..., t, ...] by central differences."""
    out = 0.0
    for t in range(n):
        e = np.zeros(n)
        e[t] = h
        out = out + (field_at(X + e)[..., t, :, :] - field_at(X - e)[..., t, :, :]) / (2 * h)
    return out


def _double_divergence(field_at: Callable, X: np.ndarray, h: float, n: int) -> np.ndarray:
    """sum_ab D_a D_b F^ab for F symmetric in (a, b)."""
    out = 0.0
    f0 = field_at(X)
    for a in range(n):
        ea = np.zeros(n)
        ea[a] = h
        out = out + (field_at(X + ea)[..., a, a, :, :] - 2 * f0[..., a, a, :, :] + field_at(X - ea)[..., a, a, :, :]) / h**2
        for b in range(a + 1, n):
            eb = np.zeros(n)
            eb[b] = h
            mixed = (
                field_at(X + ea + eb)[..., a, b, :, :]
                - field_at(X + ea - eb)[..., a, b, :, :]
                - field_at(X - ea + eb)[..., a, b, :, :]
                + field_at(X - ea - eb)[..., a, b, :, :]
            ) / (4 * h**2)
            out = out + 2 * mixed
    return out


def _check_gauge(fid: FunctionalId, jet, tau_harm: float) -> None:
    if fid.gauge is Gauge.harmonic:
        defect = float(np.max(np.abs(harmonic_defect(jet)), initial=0.0))
        if defect > tau_harm:
            raise GaugeViolation(f"harmonic gauge defect {defect:.3e} exceeds {tau_harm:.1e}")


def metric_euler_lagrange(fid: FunctionalId, spec: FieldSpec, X, fd: FDConfig | None = None) -> np.ndarray:
    """Euler operator E^mn of F sqrt(det g) with respect to g_mn."""
    fd = _fd(spec, fd)
    X = np.asarray(X, dtype=float)
    n = spec.n
    cache: dict = {}

    def brackets(Y):
        key = Y.tobytes()
        if key not in cache:
            cache[key] = metric_brackets(fid, eval_metric_jet2(spec, Y, fd))
        return cache[key]

    P0 = brackets(X)[0]
    h = fd.h2
    E = P0 - _divergence(lambda Y: brackets(Y)[1], X, h, n)
    if fid.density is not Density.ConnNorm:
        E = E + _double_divergence(lambda Y: brackets(Y)[2], X, h, n)
    return _sym(E)


def _scalar_and_hessian(spec: FieldSpec, X, fd: FDConfig):
    """Scalar curvature, its covariant Hessian and everything needed around it."""
    n = spec.n
    h = fd.h2

    def R_at(Y):
        jet = eval_metric_jet2(spec, Y, fd)
        g_inv = invert_spd(jet.g)
        return np.einsum("...ik,...ik->...", g_inv, ricci_from_mixed(riemann_mixed(christoffel(jet, g_inv))))

    eye = np.eye(n) * h
    R0 = R_at(X)
    dR = np.stack([(R_at(X + eye[t]) - R_at(X - eye[t])) / (2 * h) for t in range(n)], axis=-1)
    ddR = np.empty(X.shape[:-1] + (n, n))
    for a in range(n):
        ddR[..., a, a] = (R_at(X + eye[a]) - 2 * R0 + R_at(X - eye[a])) / h**2
        for b in range(a + 1, n):
            ddR[..., a, b] = ddR[..., b, a] = (
                R_at(X + eye[a] + eye[b]) - R_at(X + eye[a] - eye[b]) - R_at(X - eye[a] + eye[b]) + R_at(X - eye[a] - eye[b])
            ) / (4 * h**2)
    jet = eval_metric_jet2(spec, X, fd)
    Gamma = christoffel(jet).Gamma
    hessR = ddR - np.einsum("...kmn,...k->...mn", Gamma, dR)
    return jet, R0, hessR


def inverse_metric_euler_lagrange(fid: FunctionalId, spec: FieldSpec, X, fd: FDConfig | None = None) -> np.ndarray:
    """Residual E_mn of F sqrt(det g) varied in g^mn (the metric re-inverted)."""
    fd = _fd(spec, fd)
    X = np.asarray(X, dtype=float)
    if fid.density in (Density.TotalScalar, Density.ScalarSquare):
        jet = eval_metric_jet2(spec, X, fd)
        g_inv = invert_spd(jet.g)
        s = np.sqrt(np.linalg.det(jet.g))[..., None, None]
        Ric = _sym(ricci_from_mixed(riemann_mixed(christoffel(jet, g_inv))))
        R = np.einsum("...ik,...ik->...", g_inv, Ric)[..., None, None]
        if fid.density is Density.TotalScalar:
            return s * (Ric - 0.5 * R * jet.g)
        # f(R) = R^2: f' R_mn - f g_mn / 2 + (g_mn box - nabla_m nabla_n) f'
        _, _, hessR = _scalar_and_hessian(spec, X, fd)
        boxR = np.einsum("...mn,...mn->...", g_inv, hessR)[..., None, None]
        return s * (2 * R * Ric - 0.5 * R**2 * jet.g + 2 * (jet.g * boxR - hessR))
    E = metric_euler_lagrange(fid, spec, X, fd)
    g = eval_metric_jet2(spec, X, fd).g
    return -np.einsum("...ma,...ab,...bn->...mn", g, E, g)


# --- connection variable ----------------------------------------------------------------


def connection_setting(spec: FieldSpec, X, fd: FDConfig | None = None):
    """(g, g_inv, sqrt det g, connection jet) for a connection-variable functional.

    A metric spec supplies its Levi-Civita connection and keeps the metric fixed;
    a connection spec is paired with the Euclidean metric of the chart.
    """
    X = np.asarray(X, dtype=float)
    if spec.is_metric:
        jet = eval_metric_jet2(spec, X, fd)
        g_inv = invert_spd(jet.g)
        return jet.g, g_inv, np.sqrt(np.linalg.det(jet.g)), christoffel(jet, g_inv)
    cj = eval_connection_jet1(spec, X, fd)
    n = spec.n
    eye = np.broadcast_to(np.eye(n), X.shape[:-1] + (n, n))
    return eye, eye, np.ones(X.shape[:-1]), cj


def connection_brackets(fid: FunctionalId, g, K, s, cj: ConnectionJet1):
    p = connection_partials(fid, g, K, cj)
    return s[..., None, None, None] * p.dGamma, s[..., None, None, None, None] * p.ddGamma


def connection_euler_lagrange(fid: FunctionalId, spec: FieldSpec, X, fd: FDConfig | None = None) -> np.ndarray:
    fd = _fd(spec, fd)
    X = np.asarray(X, dtype=float)
    n = spec.n

    def brackets(Y):
        return connection_brackets(fid, *connection_setting(spec, Y, fd))

    Q0, _ = brackets(X)
    E = Q0
    if fid.density is not Density.ConnNorm:
        h = fd.h2
        for t in range(n):
            e = np.zeros(n)
            e[t] = h
            E = E - (brackets(X + e)[1][..., t, :, :, :] - brackets(X - e)[1][..., t, :, :, :]) / (2 * h)
    return _sym(E)


# --- public entry point -------------------------------------------------------------------


def el_residual(
    fid: FunctionalId,
    spec: FieldSpec,
    x,
    fd: FDConfig | None = None,
    form: str = "derived",
    tau_harm: float = HARMONIC_TOL,
) -> np.ndarray:
    """Euler-Lagrange residual of ``fid`` at the point(s) x.

    ``form="derived"`` returns the full first variation assembled from the
    Lagrangian's partial derivatives (what the Gateaux oracle measures).
    ``form="displayed"`` evaluates the closed-form expression printed for
    each theorem, kept for comparison; see :mod:`.displayed`.
    Raises GaugeViolation for harmonic-gauge ids off-gauge.
    """
    fd = _fd(spec, fd)
    X = np.asarray(x, dtype=float)
    if fid.gauge is Gauge.harmonic:
        _check_gauge(fid, eval_metric_jet2(spec, X, fd), tau_harm)
    if form == "displayed":
        from .displayed import displayed_residual

        return displayed_residual(fid, spec, X, fd)
    if form != "derived":
        raise ValueError(f"form must be 'derived' or 'displayed', got {form!r}")
    if fid.variable is Variable.Gamma:
        return connection_euler_lagrange(fid, spec, X, fd)
    if fid.variable is Variable.Metric:
        return metric_euler_lagrange(fid, spec, X, fd)
    return inverse_metric_euler_lagrange(fid, spec, X, fd)


def einstein_constraint_residual(spec: FieldSpec, x, fd: FDConfig | None = None) -> np.ndarray:
    """R_ij - (R / n) g_ij, zero exactly on Einstein metrics."""
    jet = eval_metric_jet2(spec, np.asarray(x, dtype=float), fd)
    g_inv = invert_spd(jet.g)
    Ric = ricci_from_mixed(riemann_mixed(christoffel(jet, g_inv)))
    R = np.einsum("...ik,...ik->...", g_inv, Ric)
    return Ric - (R / spec.n)[..., None, None] * jet.g
