"""Flatness classification, Riccati connection systems, normal-coordinate series.

Index layouts follow :mod:`flatlab.tensor_core`; Riccati residuals are returned
with the derivative slot first, ``[..., p, l, i, s]``, like ``dGamma``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal, NamedTuple

import numpy as np

from .curvature import christoffel, riemann_mixed, ricci_from_mixed, scalar_curvature
from .errors import NotPositiveDefinite, OutOfDomain
from .fields import (
    ChartBox,
    ConnectionJet1,
    FieldSpec,
    build_connection,
    build_metric,
    eval_connection_jet1,
    eval_metric_jet2,
)
from .tensor_core import apply_P, invert_spd, leading_minors

ANALYTIC_TOL = 1e-8
FD_TOL = 1e-5

Which = Literal["plus", "minus"]


# --- classification --------------------------------------------------------------------


@dataclass
class FlatnessReport:
    connection_flat: bool
    curvature_flat: bool
    ricci_flat: bool
    scalar_flat: bool
    max_residuals: dict = field(default_factory=dict)
    points_checked: int = 0

    def to_dict(self) -> dict:
        return {
            "connection_flat": self.connection_flat,
            "curvature_flat": self.curvature_flat,
            "ricci_flat": self.ricci_flat,
            "scalar_flat": self.scalar_flat,
            "max_residuals": dict(self.max_residuals),
            "points_checked": self.points_checked,
        }


def _maxabs(a) -> float:
    return float(np.max(np.abs(a), initial=0.0))


def classify_flatness(spec: FieldSpec, sample, tol: float | None = None) -> FlatnessReport:
    """Max-abs residuals of Gamma, R^l_ijk, Ric and the scalar over the sample points.

    The flags are forced to be monotone: a curvature-flat field is reported
    Ricci-flat and scalar-flat even if contraction amplifies round-off past tol.
    Connection fields carry no metric, so their scalar residual is ``None`` and
    the scalar flag follows the Ricci flag.
    """
    X = np.asarray(sample, dtype=float).reshape(-1, spec.n)
    analytic = (build_metric(spec) if spec.is_metric else build_connection(spec)).analytic
    if tol is None:
        tol = ANALYTIC_TOL if analytic else FD_TOL
    if spec.is_metric:
        jet = eval_metric_jet2(spec, X)
        g_inv = invert_spd(jet.g)
        cj = christoffel(jet, g_inv)
    else:
        g_inv = None
        cj = eval_connection_jet1(spec, X)
    Rm = riemann_mixed(cj)
    Ric = ricci_from_mixed(Rm)
    res = {
        "connection": _maxabs(cj.Gamma),
        "curvature": _maxabs(Rm),
        "ricci": _maxabs(Ric),
        "scalar": _maxabs(scalar_curvature(g_inv, Ric)) if g_inv is not None else None,
    }
    curvature_flat = res["curvature"] < tol
    ricci_flat = curvature_flat or res["ricci"] < tol
    scalar_flat = ricci_flat or (res["scalar"] is not None and res["scalar"] < tol)
    return FlatnessReport(res["connection"] < tol, curvature_flat, ricci_flat, scalar_flat, res, len(X))


# --- Riccati systems -------------------------------------------------------------------


def riccati_residual_plus(cj: ConnectionJet1) -> np.ndarray:
    """d_p Gamma^l_is + Gamma^l_pn Gamma^n_is, stored ``[..., p, l, i, s]``."""
    return cj.dGamma + np.einsum("...lpn,...nis->...plis", cj.Gamma, cj.Gamma)


def riccati_residual_minus(cj: ConnectionJet1) -> np.ndarray:
    """d_p Gamma^l_is - Gamma^l_sn Gamma^n_ip, stored ``[..., p, l, i, s]``."""
    return cj.dGamma - np.einsum("...lsn,...nip->...plis", cj.Gamma, cj.Gamma)


def riccati_residual(cj: ConnectionJet1, which: Which = "plus") -> np.ndarray:
    if which == "plus":
        return riccati_residual_plus(cj)
    if which == "minus":
        return riccati_residual_minus(cj)
    raise ValueError(f"which must be 'plus' or 'minus', got {which!r}")


class RiccatiCheck(NamedTuple):
    riccati_norm: float
    curvature_norm: float


def riccati_implies_flat(cj: ConnectionJet1, which: Which = "plus") -> RiccatiCheck:
    """Max-abs of the chosen Riccati residual next to the max-abs curvature."""
    return RiccatiCheck(_maxabs(riccati_residual(cj, which)), _maxabs(riemann_mixed(cj)))


def riccati_perturbation_residual(gamma: ConnectionJet1, T: ConnectionJet1) -> np.ndarray:
    """d_p T^l_is + Gamma^l_pn T^n_is + T^l_pn Gamma^n_is + T^l_pn T^n_is.

    Zero exactly when Gamma + T solves the plus system, given that Gamma does.
    """
    G, Tt = gamma.Gamma, T.Gamma
    return (
        T.dGamma
        + np.einsum("...lpn,...nis->...plis", G, Tt)
        + np.einsum("...lpn,...nis->...plis", Tt, G)
        + np.einsum("...lpn,...nis->...plis", Tt, Tt)
    )


def flatness_condition_residuals(cj: ConnectionJet1) -> dict:
    """Pointwise residuals of the equivalent curvature-flatness conditions in a given chart.

    ``curvature`` is R^l_ijk; ``vanishing_jet`` is max(|dGamma|, |Gamma Gamma|), the
    strongest chart condition; ``riccati_plus``/``riccati_minus`` are the two
    Riccati systems.  Only the implications from the chart conditions down to
    vanishing curvature are testable on a fixed chart.
    """
    GG = np.einsum("...lpn,...nis->...plis", cj.Gamma, cj.Gamma)
    return {
        "curvature": _maxabs(riemann_mixed(cj)),
        "vanishing_jet": max(_maxabs(cj.dGamma), _maxabs(GG)),
        "riccati_plus": _maxabs(riccati_residual_plus(cj)),
        "riccati_minus": _maxabs(riccati_residual_minus(cj)),
    }


def _riccati_rhs(Gamma: np.ndarray, which: Which) -> np.ndarray:
    """d_p Gamma^l_is as prescribed by the chosen system, ``[..., p, l, i, s]``."""
    if which == "plus":
        return -np.einsum("...lpn,...nis->...plis", Gamma, Gamma)
    return np.einsum("...lsn,...nip->...plis", Gamma, Gamma)


def integrability_check(spec: FieldSpec, which: Which, sample, h: float | None = None) -> float:
    """Frobenius compatibility proxy for a Riccati system on a connection field.

    The system prescribes every first partial d_p Gamma = F_p(Gamma).  Differentiating
    F_p along q by a fourth-order central stencil gives the second partials the
    system implies; the returned value is max |d_q F_p - d_p F_q| over the sample.
    A field that solves the system has symmetric second partials, so this is
    small exactly when the system is compatible along the field.
    """
    cf = build_connection(spec)
    X = np.asarray(sample, dtype=float).reshape(-1, spec.n)
    if h is None:
        h = 1e-3 * float(np.min(spec.box.extent))
    if not spec.box.contains(X, 2 * h):
        raise OutOfDomain("integrability stencil leaves the chart box")

    def F(Y):
        return _riccati_rhs(cf.value(Y), which)

    n = spec.n
    dF = []
    for q in range(n):
        e = np.zeros(n)
        e[q] = h
        dF.append((-F(X + 2 * e) + 8 * F(X + e) - 8 * F(X - e) + F(X - 2 * e)) / (12 * h))
    dF = np.stack(dF, axis=1)  # [pt, q, p, l, i, s]
    return _maxabs(dF - np.swapaxes(dF, 1, 2))


def cone_condition(C) -> float:
    """max |C^s_jk C^l_is| over all free indices; zero on the cone of admissible constants."""
    C = np.asarray(C, dtype=float)
    return _maxabs(np.einsum("sjk,lis->ljki", C, C))


def constant_connection_curvature(C) -> np.ndarray:
    """R^l_ijk of a constant connection: the quadratic terms only."""
    C = np.asarray(C, dtype=float)
    n = C.shape[0]
    return riemann_mixed(ConnectionJet1(np.zeros(n), C, np.zeros((n,) * 4)))


# --- trace factorization ----------------------------------------------------------------


def omega(cj: ConnectionJet1, which: Which = "plus") -> np.ndarray:
    """The Riccati expressions, arranged ``[..., l, i, p, s]`` so P acts on (p, s)."""
    return np.einsum("...plis->...lips", riccati_residual(cj, which))


def riemann_from_omega(cj: ConnectionJet1, which: Which = "plus") -> np.ndarray:
    """R^l_ijk = (delta^p_j delta^s_k - delta^p_k delta^s_j) Omega = 2 P(Omega)."""
    return 2.0 * apply_P(omega(cj, which))


def ricci_trace_of_P(cj: ConnectionJet1, which: Which = "plus") -> np.ndarray:
    """Ricci as the trace over (l, p) of 2 P(Omega): R_ik = Tr(2 P Omega)^l_ilk."""
    return np.einsum("...lilk->...ik", riemann_from_omega(cj, which))


def ricci_direct_trace(cj: ConnectionJet1, which: Which = "plus") -> np.ndarray:
    """Ricci by the divergence-type trace operator applied straight to Omega.

    (delta^p_q delta^s_k - delta^p_k delta^s_q) Omega^q_{i p s}.
    """
    Om = omega(cj, which)
    return np.einsum("...qiqk->...ik", Om) - np.einsum("...qikq->...ik", Om)


# --- normal-coordinate series ------------------------------------------------------------


def project_curvature(X) -> np.ndarray:
    """Project an arbitrary 4-tensor onto the algebraic curvature tensors.

    Antisymmetrize both pairs, symmetrize under pair exchange, then remove the
    totally antisymmetric part so the first Bianchi identity holds.  Idempotent.
    """
    R = np.asarray(X, dtype=float)
    R = 0.5 * (R - np.swapaxes(R, -4, -3))
    R = 0.5 * (R - np.swapaxes(R, -2, -1))
    R = 0.5 * (R + np.einsum("...klij->...ijkl", R))
    cyclic = R + np.einsum("...iklj->...ijkl", R) + np.einsum("...iljk->...ijkl", R)
    return R - cyclic / 3.0


@dataclass(frozen=True)
class CurvaturePrescription:
    """An algebraic curvature tensor R0_ijkl to be realized at the origin."""

    n: int
    R0: np.ndarray = field(compare=False)

    def __post_init__(self):
        R0 = np.asarray(self.R0, dtype=float)
        if R0.shape != (self.n,) * 4:
            raise ValueError(f"R0 must have shape {(self.n,) * 4}")
        object.__setattr__(self, "R0", project_curvature(R0))

    @classmethod
    def random(cls, seed: int, n: int, scale: float = 0.1) -> CurvaturePrescription:
        R = project_curvature(np.random.default_rng(seed).normal(size=(n,) * 4))
        return cls(n, scale * R / np.max(np.abs(R)))

    @classmethod
    def constant_curvature_2d(cls, K: float) -> CurvaturePrescription:
        R = np.zeros((2,) * 4)
        R[0, 1, 0, 1] = R[1, 0, 1, 0] = K
        R[0, 1, 1, 0] = R[1, 0, 0, 1] = -K
        return cls(2, R)

    @property
    def ricci(self) -> np.ndarray:
        """Ric_ik = R_jijk at the origin, where g = delta."""
        return np.einsum("jijk->ik", self.R0)


def normal_series_coefficients(R0, series: str = "curvature") -> np.ndarray:
    """Second-derivative tensor Q_ikjl = d_i d_k g_jl(0) of the series metric.

    ``series="curvature"`` (default) uses -1/3 (R_ijkl + R_ilkj), which is the
    value whose curvature at the origin reproduces R0 under this package's sign
    conventions; the equivalent Taylor form is g_jl = delta_jl - 1/3 R_ijkl x^i x^k.
    ``series="displayed"`` uses g_jl = delta_jl + 1/3 (R_ijkl + R_ilkj) x^i x^k
    read literally as a Taylor term; its curvature at the origin is -2 R0.
    """
    R0 = np.asarray(R0, dtype=float)
    S = np.einsum("ijkl->ikjl", R0) + np.einsum("ilkj->ikjl", R0)
    if series == "curvature":
        return -S / 3.0
    if series == "displayed":
        return 2.0 * S / 3.0
    raise ValueError(f"unknown series {series!r}")


def normal_metric_from_curvature(p: CurvaturePrescription, box: ChartBox, series: str = "curvature") -> FieldSpec:
    """Quadratic metric with g(0) = delta, dg(0) = 0 and prescribed curvature at 0.

    The box must contain the origin.  Raises NotPositiveDefinite when the series
    metric loses positivity somewhere on the box grid or its corners.
    """
    n = p.n
    if box.n != n:
        raise ValueError("box dimension differs from the prescription")
    if not box.contains(np.zeros(n)):
        raise ValueError("normal-coordinate box must contain the origin")
    Q = normal_series_coefficients(p.R0, series)
    spec = FieldSpec("quadratic", {"g0": np.eye(n), "Q": Q}, box)
    mf = build_metric(spec)
    corners = np.array(np.meshgrid(*zip(box.lower, box.upper), indexing="ij")).reshape(n, -1).T
    pts = np.concatenate([box.grid_points().reshape(-1, n), corners])
    if not np.all(leading_minors(mf.value(pts)) > 0):
        raise NotPositiveDefinite("the series metric is not positive definite on the whole box")
    return spec


def _sample_ball(n: int, rho: float, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(count, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    axes = np.concatenate([np.eye(n), -np.eye(n)])
    radii = rho * rng.uniform(0.5, 1.0, size=(count, 1))
    return np.concatenate([rho * axes, radii * dirs])


def gray_volume_check(spec: FieldSpec, rho: float, ricci0=None, count: int = 64, seed: int = 0) -> float:
    """max over sampled ||x|| <= rho of |sqrt det g(x) - (1 - Ric_ij(0) x^i x^j / 6)|.

    ``ricci0`` defaults to the Ricci tensor of ``spec`` at the origin.  Sample
    points are the 2n axis points at radius rho plus seeded random points in the
    shell rho/2 <= ||x|| <= rho, so the maximum scales with the truncation order.
    """
    n = spec.n
    if ricci0 is None:
        jet = eval_metric_jet2(spec, np.zeros(n))
        ricci0 = ricci_from_mixed(riemann_mixed(christoffel(jet)))
    X = _sample_ball(n, rho, count, seed)
    g = eval_metric_jet2(spec, X).g
    approx = 1.0 - np.einsum("ij,pi,pj->p", ricci0, X, X) / 6.0
    return _maxabs(np.sqrt(np.linalg.det(g)) - approx)


def sample_points(box: ChartBox, count: int, seed: int = 0, shrink: float = 0.1) -> np.ndarray:
    """Seeded uniform points inside the box, kept a fraction ``shrink`` away from the faces."""
    lo, hi = np.asarray(box.lower), np.asarray(box.upper)
    pad = shrink * (hi - lo)
    return np.random.default_rng(seed).uniform(lo + pad, hi - pad, size=(count, box.n))


def monotone_chain_holds(reports: Iterable[FlatnessReport]) -> bool:
    return all((not r.curvature_flat or r.ricci_flat) and (not r.ricci_flat or r.scalar_flat) for r in reports)
