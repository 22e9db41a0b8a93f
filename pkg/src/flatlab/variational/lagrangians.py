"""Least-squares Lagrangian densities and their partial derivatives.

Metric-variable densities are written as scalar functions F(K, G1, H) of

* ``K[..., a, b]``        the inverse metric g^ab,
* ``G1[..., a, b, c]``    the Christoffel symbol of the first kind, linear in dg,
* ``H[..., a, b, r, s]``  the second partials d_a d_b g_rs,

so that every partial derivative is an algebraic contraction.  Connection-variable
densities are functions of (Gamma, dGamma) with the metric held fixed.  The
Lagrangian is always F * sqrt(det g).
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..curvature import first_kind, riemann_mixed
from ..fields import ConnectionJet1, MetricJet2
from ..tensor_core import invert_spd
from .ids import Density, FunctionalId, Gauge

_ES = dict(optimize=True)


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


# --- metric-variable densities ---------------------------------------------------------


class MetricState(NamedTuple):
    g: np.ndarray
    K: np.ndarray
    s: np.ndarray
    G1: np.ndarray
    H: np.ndarray


def metric_state(jet: MetricJet2) -> MetricState:
    K = invert_spd(jet.g)
    return MetricState(jet.g, K, np.sqrt(np.linalg.det(jet.g)), first_kind(jet.dg), jet.ddg)


def riemann_from_state(K, G1, H) -> np.ndarray:
    """R_ijkl from (K, G1, H); same expression as curvature.riemann_lower."""
    second = 0.5 * (
        np.einsum("...jkil->...ijkl", H)
        + np.einsum("...iljk->...ijkl", H)
        - np.einsum("...jlik->...ijkl", H)
        - np.einsum("...ikjl->...ijkl", H)
    )
    quad = np.einsum("...mn,...mjk,...nil->...ijkl", K, G1, G1, **_ES)
    return second + quad - np.swapaxes(quad, -1, -2)


def _riemann_pullback(W, K, G1):
    """Given W = dF/dR_ijkl, return the (dK, dG1, dH) contributions through R."""
    dH = 0.5 * (
        np.einsum("...ijkl->...jkil", W)
        + np.einsum("...ijkl->...iljk", W)
        - np.einsum("...ijkl->...jlik", W)
        - np.einsum("...ijkl->...ikjl", W)
    )
    dK = np.einsum("...ijkl,...mjk,...nil->...mn", W, G1, G1, **_ES) - np.einsum(
        "...ijkl,...mjl,...nik->...mn", W, G1, G1, **_ES
    )
    dG1 = (
        np.einsum("...mn,...nil,...ijkl->...mjk", K, G1, W, **_ES)
        + np.einsum("...mn,...mjk,...ijkl->...nil", K, G1, W, **_ES)
        - np.einsum("...mn,...nik,...ijkl->...mjl", K, G1, W, **_ES)
        - np.einsum("...mn,...mjl,...ijkl->...nik", K, G1, W, **_ES)
    )
    return dK, dG1, dH


def _raise_last(T, K, count: int) -> np.ndarray:
    """Raise the last ``count`` slots of a 4-slot tensor with K, keeping slot order."""
    for _ in range(count):
        T = np.moveaxis(T @ K[..., None, None, :, :], -1, -4)
    for _ in range(4 - count):
        T = np.moveaxis(T, -1, -4)
    return T


def harmonic_ricci_from_state(K, G1, H) -> np.ndarray:
    """Ric_ij = K^kl (-1/2 H_klij + K^ab G1_aik G1_blj)."""
    return -0.5 * np.einsum("...kl,...klij->...ij", K, H) + np.einsum(
        "...kl,...ab,...aik,...blj->...ij", K, K, G1, G1, **_ES
    )


class MetricPartials(NamedTuple):
    F: np.ndarray
    dK: np.ndarray   # dF/dK^ab
    dG1: np.ndarray  # dF/dG1_abc
    dH: np.ndarray   # dF/dH_abrs


def metric_density(fid: FunctionalId, K, G1, H) -> np.ndarray:
    """Bare density F (no volume factor)."""
    return metric_partials(fid, K, G1, H, grad=False).F


def metric_partials(fid: FunctionalId, K, G1, H, grad: bool = True) -> MetricPartials:
    d = fid.density
    zK = zG = zH = None
    if d is Density.ConnNorm:
        F = np.einsum("...ap,...jq,...kr,...ajk,...pqr->...", K, K, K, G1, G1, **_ES)
        if grad:
            zK = (
                np.einsum("...jq,...kr,...ajk,...bqr->...ab", K, K, G1, G1, **_ES)
                + np.einsum("...pq,...kr,...pak,...qbr->...ab", K, K, G1, G1, **_ES)
                + np.einsum("...pq,...jr,...pja,...qrb->...ab", K, K, G1, G1, **_ES)
            )
            zG = 2 * np.einsum("...ap,...bq,...cr,...pqr->...abc", K, K, K, G1, **_ES)
            zH = np.zeros_like(H)
        return MetricPartials(F, zK, zG, zH)

    if d is Density.RicciNorm:
        if fid.gauge is not Gauge.harmonic:
            raise ValueError("metric-variable Ricci norm is defined through the harmonic formula")
        Ric = harmonic_ricci_from_state(K, G1, H)
        F = np.einsum("...ik,...jl,...ij,...kl->...", K, K, Ric, Ric, **_ES)
        if grad:
            V = 2 * np.einsum("...ik,...jl,...kl->...ij", K, K, Ric, **_ES)
            zK = np.einsum("...jl,...mj,...nl->...mn", K, Ric, Ric, **_ES) + np.einsum(
                "...ik,...im,...kn->...mn", K, Ric, Ric, **_ES
            )
            zK = zK + np.einsum("...ij,...mnij->...mn", V, -0.5 * H)
            zK = zK + np.einsum("...ij,...ab,...aim,...bnj->...mn", V, K, G1, G1, **_ES)
            zK = zK + np.einsum("...ij,...kl,...mik,...nlj->...mn", V, K, G1, G1, **_ES)
            zG = np.einsum("...ij,...kl,...ab,...blj->...aik", V, K, K, G1, **_ES) + np.einsum(
                "...ij,...kl,...ab,...aik->...blj", V, K, K, G1, **_ES
            )
            zH = -0.5 * np.einsum("...ij,...kl->...klij", V, K)
        return MetricPartials(F, zK, zG, zH)

    R = riemann_from_state(K, G1, H)
    if d is Density.RiemannNorm:
        Rmix = _raise_last(R, K, 3)  # R_i^jkl
        Rup = _raise_last(R, K, 4)
        F = np.einsum("...ijkl,...ijkl->...", R, Rup)
        if not grad:
            return MetricPartials(F, None, None, None)
        W = 2 * Rup
        # the four slot derivatives of the K^4 contraction agree by the curvature symmetries
        explicit = 4 * np.einsum("...ajkl,...bjkl->...ab", R, Rmix)
    elif d in (Density.TotalScalar, Density.ScalarSquare):
        S = np.einsum("...ik,...lm,...milk->...", K, K, R, **_ES)
        if not grad:
            return MetricPartials(S if d is Density.TotalScalar else S**2, None, None, None)
        W = np.einsum("...ik,...lm->...milk", K, K)
        explicit = np.einsum("...lm,...malb->...ab", K, R) + np.einsum("...ik,...biak->...ab", K, R)
        if d is Density.TotalScalar:
            F = S
        else:
            F = S**2
            W = 2 * S[..., None, None, None, None] * W
            explicit = 2 * S[..., None, None] * explicit
    else:  # pragma: no cover - enum is closed
        raise ValueError(d)
    dK, dG1, dH = _riemann_pullback(W, K, G1)
    return MetricPartials(F, dK + explicit, dG1, dH)


# --- metric jets under perturbation ------------------------------------------------------


def invert_jet(A, dA, ddA):
    """Jet of A^-1 from the jet of A: d(A^-1) = -A^-1 dA A^-1, and its derivative."""
    B = invert_spd(A)
    dB = -np.einsum("...ij,...tjk,...kl->...til", B, dA, B, **_ES)
    ddB = -np.einsum("...ij,...abjk,...kl->...abil", B, ddA, B, **_ES)
    ddB = ddB + np.einsum("...ij,...ajk,...kl,...blm,...mn->...abin", B, dA, B, dA, B, **_ES)
    ddB = ddB + np.einsum("...ij,...bjk,...kl,...alm,...mn->...abin", B, dA, B, dA, B, **_ES)
    return B, dB, ddB


# --- connection-variable densities -----------------------------------------------------


class ConnectionPartials(NamedTuple):
    F: np.ndarray
    dGamma: np.ndarray   # dF/dGamma^u_vw, [..., u, v, w]
    ddGamma: np.ndarray  # dF/d(d_t Gamma^u_vw), [..., t, u, v, w]


def _curvature_pullback(W, Gamma):
    """Given W[l,i,j,k] = dF/dR^l_ijk, the (dGamma, d dGamma) contributions."""
    Q1 = np.einsum("...uvtw->...tuvw", W) - np.einsum("...uvwt->...tuvw", W)
    Q0 = (
        np.einsum("...uivk,...wik->...uvw", W, Gamma, **_ES)
        + np.einsum("...lvjw,...lju->...uvw", W, Gamma, **_ES)
        - np.einsum("...uijv,...wij->...uvw", W, Gamma, **_ES)
        - np.einsum("...lvwk,...lku->...uvw", W, Gamma, **_ES)
    )
    return Q0, Q1


def connection_partials(fid: FunctionalId, g, K, cj: ConnectionJet1, grad: bool = True) -> ConnectionPartials:
    d = fid.density
    G = cj.Gamma
    if d is Density.ConnNorm:
        low = np.einsum("...sp,...pqr->...sqr", g, G)
        F = np.einsum("...sqr,...mq,...nr,...smn->...", low, K, K, G, **_ES)
        if not grad:
            return ConnectionPartials(F, None, None)
        Q0 = 2 * np.einsum("...sqr,...mq,...nr->...smn", low, K, K, **_ES)
        return ConnectionPartials(F, Q0, np.zeros_like(cj.dGamma))
    Rm = riemann_mixed(cj)
    n = G.shape[-1]
    if d is Density.RiemannNorm:
        Rother = np.einsum("...ip,...jq,...kr,...ls,...pqrs->...ijkl", g, K, K, K, Rm, **_ES)
        F = np.einsum("...ijkl,...ijkl->...", Rother, Rm)
        W = 2 * Rother
    else:
        Ric = np.einsum("...lilk->...ik", Rm)
        if d is Density.RicciNorm:
            F = np.einsum("...ik,...jl,...ij,...kl->...", K, K, Ric, Ric, **_ES)
            V = 2 * np.einsum("...ak,...bl,...kl->...ab", K, K, Ric, **_ES)
        else:
            S = np.einsum("...ik,...ik->...", K, Ric)
            if d is Density.TotalScalar:
                F, V = S, K
            else:
                F, V = S**2, 2 * S[..., None, None] * K
        if not grad:
            return ConnectionPartials(F, None, None)
        W = np.einsum("...ik,lj->...lijk", V, np.eye(n))
    if not grad:
        return ConnectionPartials(F, None, None)
    Q0, Q1 = _curvature_pullback(W, G)
    return ConnectionPartials(F, Q0, Q1)


def connection_density(fid: FunctionalId, g, K, cj: ConnectionJet1) -> np.ndarray:
    return connection_partials(fid, g, K, cj, grad=False).F
