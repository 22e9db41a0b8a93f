"""Curvature operators on metric and connection jets.

Sign conventions (checked against the round sphere, R_{theta phi theta phi} = r^2 sin^2 theta):

* R^l_ijk = d_j Gamma^l_ik - d_k Gamma^l_ij + Gamma^l_js Gamma^s_ik - Gamma^l_ks Gamma^s_ij
* R_ijkl  = g_im R^m_jkl
* Ric_ik  = R^l_ilk, scalar = g^ik Ric_ik

All functions are batched over leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DimensionTooSmall, GaugeViolation
from .fields import ConnectionField, ConnectionJet1, FDConfig, MetricField, MetricJet2, fd_metric_jet
from .tensor_core import invert_spd

HARMONIC_TOL = 1e-8


def first_kind(dg: np.ndarray) -> np.ndarray:
    """Gamma_ljk = (d_k g_lj + d_j g_lk - d_l g_jk) / 2."""
    return 0.5 * (
        np.einsum("...klj->...ljk", dg) + np.einsum("...jlk->...ljk", dg) - dg
    )


def christoffel(jet: MetricJet2, g_inv: np.ndarray | None = None) -> ConnectionJet1:
    """Levi-Civita connection and its first partials.

    The partials use d(g^-1) = -g^-1 (dg) g^-1 together with the second
    derivatives of the metric, so no finite differencing is involved.
    """
    if g_inv is None:
        g_inv = invert_spd(jet.g)
    G1 = first_kind(jet.dg)
    Gamma = np.einsum("...il,...ljk->...ijk", g_inv, G1)
    ddg = jet.ddg
    dG1 = 0.5 * (
        np.einsum("...pklj->...pljk", ddg) + np.einsum("...pjlk->...pljk", ddg) - ddg
    )
    dGamma = -np.einsum("...ia,...pab,...bjk->...pijk", g_inv, jet.dg, Gamma) + np.einsum(
        "...il,...pljk->...pijk", g_inv, dG1
    )
    return ConnectionJet1(jet.x, Gamma, dGamma)


class LeviCivita(ConnectionField):
    """Connection field induced by a metric field."""

    def __init__(self, metric: MetricField, fd: FDConfig | None = None):
        self.metric, self.fd, self.n = metric, fd, metric.n
        self.analytic = metric.analytic

    def jet(self, X):
        if self.metric.analytic:
            mj = self.metric.jet(X)
        else:
            fd = self.fd or FDConfig(1e-5, 1e-3)
            mj = fd_metric_jet(self.metric, X, fd)
        return christoffel(mj)

    def value(self, X):
        return self.jet(X).Gamma


def riemann_mixed(cj: ConnectionJet1) -> np.ndarray:
    """R^l_ijk stored as ``[..., l, i, j, k]``."""
    G, dG = cj.Gamma, cj.dGamma
    return (
        np.einsum("...jlik->...lijk", dG)
        - np.einsum("...klij->...lijk", dG)
        + np.einsum("...ljs,...sik->...lijk", G, G)
        - np.einsum("...lks,...sij->...lijk", G, G)
    )


def riemann_lower(jet: MetricJet2, g_inv: np.ndarray | None = None) -> np.ndarray:
    """R_ijkl directly from second derivatives of the metric plus Christoffel products.

    R_ijkl = 1/2 (d_j d_k g_il + d_i d_l g_jk - d_j d_l g_ik - d_i d_k g_jl)
             + g_mn (Gamma^m_jk Gamma^n_il - Gamma^m_jl Gamma^n_ik)
    """
    if g_inv is None:
        g_inv = invert_spd(jet.g)
    ddg = jet.ddg
    second = 0.5 * (
        np.einsum("...jkil->...ijkl", ddg)
        + np.einsum("...iljk->...ijkl", ddg)
        - np.einsum("...jlik->...ijkl", ddg)
        - np.einsum("...ikjl->...ijkl", ddg)
    )
    G = np.einsum("...il,...ljk->...ijk", g_inv, first_kind(jet.dg))
    quad = np.einsum("...mn,...mjk,...nil->...ijkl", jet.g, G, G)
    return second + quad - np.swapaxes(quad, -1, -2)


def ricci_from_mixed(R: np.ndarray) -> np.ndarray:
    """Ric_ik = R^l_ilk (contraction of the first and third slots)."""
    return np.einsum("...lilk->...ik", R)


def _dlog_sqrt_det(jet: MetricJet2, g_inv: np.ndarray):
    """First and second partials of ln sqrt(det g)."""
    d1 = 0.5 * np.einsum("...ab,...iab->...i", g_inv, jet.dg)
    d2 = 0.5 * (
        np.einsum("...ab,...kiab->...ki", g_inv, jet.ddg)
        - np.einsum("...ac,...kcd,...db,...iab->...ki", g_inv, jet.dg, g_inv, jet.dg)
    )
    return d1, d2


def ricci_logdet(jet: MetricJet2) -> np.ndarray:
    """Ric_ik = d_l Gamma^l_ik - Gamma^m_il Gamma^l_km - nabla_k d_i ln sqrt(det g)."""
    g_inv = invert_spd(jet.g)
    cj = christoffel(jet, g_inv)
    G, dG = cj.Gamma, cj.dGamma
    d1, d2 = _dlog_sqrt_det(jet, g_inv)
    hess_logdet = d2 - np.einsum("...ski,...s->...ki", G, d1)
    return (
        np.einsum("...llik->...ik", dG)
        - np.einsum("...mil,...lkm->...ik", G, G)
        - np.swapaxes(hess_logdet, -1, -2)
    )


def harmonic_defect(jet: MetricJet2, g_inv: np.ndarray | None = None) -> np.ndarray:
    """g^ij Gamma^k_ij, shape ``(..., n)``; zero in harmonic coordinates."""
    if g_inv is None:
        g_inv = invert_spd(jet.g)
    G = np.einsum("...il,...ljk->...ijk", g_inv, first_kind(jet.dg))
    return np.einsum("...ij,...kij->...k", g_inv, G)


def is_harmonic(jet: MetricJet2, tau_harm: float = HARMONIC_TOL) -> bool:
    return bool(np.max(np.abs(harmonic_defect(jet)), initial=0.0) <= tau_harm)


def ricci_harmonic_formula(g: np.ndarray, g_inv: np.ndarray, G1: np.ndarray, ddg: np.ndarray) -> np.ndarray:
    """Ric_ij = g^kl (-1/2 d_k d_l g_ij + g_mn Gamma^m_ik Gamma^n_lj), no gauge check.

    ``G1`` is the Christoffel symbol of the first kind.  Written with
    g_mn Gamma^m Gamma^n = g^ab Gamma_a Gamma_b.
    """
    quad = np.einsum("...ab,...aik,...blj->...ijkl", g_inv, G1, G1)
    return np.einsum("...kl,...ijkl->...ij", g_inv, quad) - 0.5 * np.einsum("...kl,...klij->...ij", g_inv, ddg)


def ricci_harmonic(jet: MetricJet2, tau_harm: float = HARMONIC_TOL) -> np.ndarray:
    """Simplified Ricci tensor valid in harmonic charts; raises GaugeViolation off-gauge."""
    g_inv = invert_spd(jet.g)
    defect = np.max(np.abs(harmonic_defect(jet, g_inv)), initial=0.0)
    if defect > tau_harm:
        raise GaugeViolation(f"|g^ij Gamma^k_ij| = {defect:.3e} exceeds {tau_harm:.1e}")
    return ricci_harmonic_formula(jet.g, g_inv, first_kind(jet.dg), jet.ddg)


def scalar_curvature(g_inv: np.ndarray, Ric: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...ij->...", g_inv, Ric)


def weyl_from(g: np.ndarray, Rl: np.ndarray, Ric: np.ndarray, scalar: np.ndarray) -> np.ndarray:
    """C_iklm = R_iklm + (R_im g_kl - R_il g_km + R_kl g_im - R_km g_il)/(n-2)
    + R (g_il g_km - g_im g_kl) / ((n-1)(n-2))."""
    n = g.shape[-1]
    if n < 3:
        raise DimensionTooSmall("the Weyl tensor needs n >= 3")
    ric_block = (
        np.einsum("...im,...kl->...iklm", Ric, g)
        - np.einsum("...il,...km->...iklm", Ric, g)
        + np.einsum("...kl,...im->...iklm", Ric, g)
        - np.einsum("...km,...il->...iklm", Ric, g)
    )
    g_block = np.einsum("...il,...km->...iklm", g, g) - np.einsum("...im,...kl->...iklm", g, g)
    return Rl + ric_block / (n - 2) + (np.asarray(scalar)[..., None, None, None, None] / ((n - 1) * (n - 2))) * g_block


def weyl(jet: MetricJet2) -> np.ndarray:
    b = curvature_bundle(jet)
    if b.weyl is None:
        raise DimensionTooSmall("the Weyl tensor needs n >= 3")
    return b.weyl


def reconstruct_riemann_3d(g: np.ndarray, Ric: np.ndarray, R) -> np.ndarray:
    """R_ijkl rebuilt from Ricci in three dimensions."""
    if g.shape[-1] != 3:
        raise DimensionMismatch("the Ricci reconstruction holds only for n = 3")
    R = np.asarray(R)[..., None, None, None, None]
    gg = np.einsum("...ik,...jl->...ijkl", g, g) - np.einsum("...il,...jk->...ijkl", g, g)
    return (
        np.einsum("...ik,...jl->...ijkl", Ric, g)
        - np.einsum("...il,...jk->...ijkl", Ric, g)
        + np.einsum("...ik,...jl->...ijkl", g, Ric)
        - np.einsum("...il,...jk->...ijkl", g, Ric)
        - 0.5 * R * gg
    )


@dataclass
class CurvatureBundle:
    Rmixed: np.ndarray
    Rlower: np.ndarray
    Ric: np.ndarray
    scalar: np.ndarray
    weyl: np.ndarray | None


def curvature_bundle(jet: MetricJet2) -> CurvatureBundle:
    g_inv = invert_spd(jet.g)
    Rm = riemann_mixed(christoffel(jet, g_inv))
    Rl = np.einsum("...im,...mjkl->...ijkl", jet.g, Rm)
    Ric = ricci_from_mixed(Rm)
    scalar = scalar_curvature(g_inv, Ric)
    C = weyl_from(jet.g, Rl, Ric, scalar) if jet.g.shape[-1] >= 3 else None
    return CurvatureBundle(Rm, Rl, Ric, scalar, C)


# --- curvature derivatives and the differential identities -----------------------------


def _connection_of(field) -> ConnectionField:
    return LeviCivita(field) if isinstance(field, MetricField) else field


def riemann_derivative_fd(field, X: np.ndarray, h: float) -> np.ndarray:
    """d_m R^l_ijk by a fourth-order central stencil, stored ``[..., m, l, i, j, k]``."""
    conn = _connection_of(field)
    X = np.asarray(X, dtype=float)
    n = X.shape[-1]

    def R_at(Y):
        return riemann_mixed(conn.jet(Y))

    out = []
    for m in range(n):
        e = np.zeros(n)
        e[m] = h
        out.append((-R_at(X + 2 * e) + 8 * R_at(X + e) - 8 * R_at(X - e) + R_at(X - 2 * e)) / (12 * h))
    return np.stack(out, axis=X.ndim - 1)


def covariant_derivative_R(cj: ConnectionJet1, R: np.ndarray, dR: np.ndarray) -> np.ndarray:
    """nabla_m R^l_ijk stored ``[..., m, l, i, j, k]``."""
    G = cj.Gamma
    return (
        dR
        + np.einsum("...lms,...sijk->...mlijk", G, R)
        - np.einsum("...smi,...lsjk->...mlijk", G, R)
        - np.einsum("...smj,...lisk->...mlijk", G, R)
        - np.einsum("...smk,...lijs->...mlijk", G, R)
    )


def nabla_riemann(field, X: np.ndarray, h: float) -> np.ndarray:
    conn = _connection_of(field)
    cj = conn.jet(np.asarray(X, dtype=float))
    return covariant_derivative_R(cj, riemann_mixed(cj), riemann_derivative_fd(conn, X, h))


def bianchi2_residual(DR: np.ndarray) -> np.ndarray:
    """R^l_ijk,m + R^l_ikm,j + R^l_imj,k, indexed ``[..., l, i, j, k, m]``."""
    return (
        np.einsum("...mlijk->...lijkm", DR)
        + np.einsum("...jlikm->...lijkm", DR)
        + np.einsum("...klimj->...lijkm", DR)
    )


def veblen_residual(DR: np.ndarray) -> np.ndarray:
    """R^l_ijk,m + R^l_kim,j + R^l_mkj,i + R^l_jmi,k, indexed ``[..., l, i, j, k, m]``."""
    return (
        np.einsum("...mlijk->...lijkm", DR)
        + np.einsum("...jlkim->...lijkm", DR)
        + np.einsum("...ilmkj->...lijkm", DR)
        + np.einsum("...kljmi->...lijkm", DR)
    )


def bianchi1_residual(Rm: np.ndarray) -> np.ndarray:
    """R^l_ijk + R^l_jki + R^l_kij."""
    return Rm + np.einsum("...ljki->...lijk", Rm) + np.einsum("...lkij->...lijk", Rm)
