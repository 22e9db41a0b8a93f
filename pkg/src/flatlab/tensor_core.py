"""Dense tensors at a point: inversion, metric contractions, norms and index operators.

Every function accepts arbitrary leading batch axes; the tensor slots are the
trailing axes.  Index layouts are fixed across the package:

* ``g[..., i, j]``             metric g_ij (or inverse g^ij)
* ``Gamma[..., i, j, k]``      connection Gamma^i_jk, upper index first
* ``Rm[..., l, i, j, k]``      mixed curvature R^l_ijk
* ``Rl[..., i, j, k, l]``      lowered curvature R_ijkl = g_im R^m_jkl
"""
from __future__ import annotations

from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import NotPositiveDefinite, ShapeMismatch

SYM_RTOL = 1e-10


def _check_square(a: np.ndarray, rank: int, name: str) -> int:
    if a.ndim < rank:
        raise ShapeMismatch(f"{name} needs at least {rank} axes, got shape {a.shape}")
    n = a.shape[-1]
    if any(s != n for s in a.shape[a.ndim - rank:]):
        raise ShapeMismatch(f"{name} trailing axes must all equal n, got {a.shape}")
    return n


def _check_same_n(*arrays: np.ndarray) -> int:
    ns = {a.shape[-1] for a in arrays}
    if len(ns) != 1:
        raise ShapeMismatch(f"dimension mismatch between operands: {sorted(ns)}")
    return ns.pop()


def is_symmetric(g: np.ndarray, rtol: float = SYM_RTOL) -> bool:
    g = np.asarray(g, dtype=float)
    scale = np.max(np.abs(g)) if g.size else 0.0
    return bool(np.max(np.abs(g - np.swapaxes(g, -1, -2)), initial=0.0) <= rtol * max(scale, 1e-300))


def leading_minors(g: np.ndarray) -> np.ndarray:
    """Leading principal minors, shape ``(..., n)``."""
    g = np.asarray(g, dtype=float)
    n = g.shape[-1]
    return np.stack([np.linalg.det(g[..., :k, :k]) for k in range(1, n + 1)], axis=-1)


def is_positive_definite(g: np.ndarray) -> bool:
    """Sylvester's criterion: all leading principal minors strictly positive."""
    return bool(np.all(leading_minors(g) > 0.0))


def invert_spd(g: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive-definite matrix (batched).

    Raises NotPositiveDefinite if the matrix is not symmetric to tolerance or if
    any leading principal minor is not positive.
    """
    g = np.asarray(g, dtype=float)
    _check_square(g, 2, "g")
    if not is_symmetric(g):
        raise NotPositiveDefinite("matrix is not symmetric")
    if not is_positive_definite(g):
        raise NotPositiveDefinite("a leading principal minor is <= 0")
    inv = np.linalg.inv(g)
    return 0.5 * (inv + np.swapaxes(inv, -1, -2))


def sqrt_det(g: np.ndarray) -> np.ndarray:
    return np.sqrt(np.linalg.det(g))


def lower_first(g: np.ndarray, Rm: np.ndarray) -> np.ndarray:
    """R_ijkl = g_im R^m_jkl."""
    return np.einsum("...im,...mjkl->...ijkl", g, Rm)


def connection_norm_sq(g: np.ndarray, g_inv: np.ndarray, Gamma: np.ndarray) -> np.ndarray:
    """g_ip g^jq g^kr Gamma^i_jk Gamma^p_qr."""
    g, g_inv, Gamma = (np.asarray(a, dtype=float) for a in (g, g_inv, Gamma))
    _check_square(g, 2, "g")
    _check_square(g_inv, 2, "g_inv")
    _check_square(Gamma, 3, "Gamma")
    _check_same_n(g, g_inv, Gamma)
    return np.einsum("...ip,...jq,...kr,...ijk,...pqr->...", g, g_inv, g_inv, Gamma, Gamma)


def riemann_norm_sq_lower(g_inv: np.ndarray, R: np.ndarray) -> np.ndarray:
    """g^ip g^jq g^kr g^ls R_ijkl R_pqrs."""
    g_inv, R = np.asarray(g_inv, dtype=float), np.asarray(R, dtype=float)
    _check_square(g_inv, 2, "g_inv")
    _check_square(R, 4, "R")
    _check_same_n(g_inv, R)
    up = np.einsum("...ip,...jq,...kr,...ls,...pqrs->...ijkl", g_inv, g_inv, g_inv, g_inv, R)
    return np.einsum("...ijkl,...ijkl->...", up, R)


def riemann_norm_sq_mixed(g: np.ndarray, g_inv: np.ndarray, R: np.ndarray) -> np.ndarray:
    """g_ip g^jq g^kr g^ls R^i_jkl R^p_qrs."""
    g, g_inv, R = (np.asarray(a, dtype=float) for a in (g, g_inv, R))
    _check_square(g, 2, "g")
    _check_square(g_inv, 2, "g_inv")
    _check_square(R, 4, "R")
    _check_same_n(g, g_inv, R)
    other = np.einsum("...ip,...jq,...kr,...ls,...pqrs->...ijkl", g, g_inv, g_inv, g_inv, R)
    return np.einsum("...ijkl,...ijkl->...", other, R)


def ricci_norm_sq(g_inv: np.ndarray, Ric: np.ndarray) -> np.ndarray:
    """g^ik g^jl R_ij R_kl (no symmetry of Ric assumed)."""
    g_inv, Ric = np.asarray(g_inv, dtype=float), np.asarray(Ric, dtype=float)
    _check_square(g_inv, 2, "g_inv")
    _check_square(Ric, 2, "Ric")
    _check_same_n(g_inv, Ric)
    return np.einsum("...ik,...jl,...ij,...kl->...", g_inv, g_inv, Ric, Ric)


def apply_P(X: np.ndarray) -> np.ndarray:
    """Projection onto the antisymmetric part of the last two slots, (PX)^jk = (X^jk - X^kj)/2."""
    X = np.asarray(X, dtype=float)
    _check_square(X, 2, "X")
    return 0.5 * (X - np.swapaxes(X, -1, -2))


def apply_T4(X: np.ndarray) -> np.ndarray:
    """Double antisymmetrizer acting on the second derivatives in the lowered-curvature PDE.

    (TX)_ijkl = 1/2 (X_ijkl - X_jikl - X_ijlk + X_jilk).  With this normalization
    symmetric inputs in either pair go to 0 and doubly antisymmetric inputs are
    scaled by 2, so T o T = 2 T.
    """
    X = np.asarray(X, dtype=float)
    _check_square(X, 4, "X")
    Xji = np.swapaxes(X, -4, -3)
    return 0.5 * (X - Xji - np.swapaxes(X, -2, -1) + np.swapaxes(Xji, -2, -1))


class System(str, Enum):
    ConnFlat1 = "ConnFlat1"
    CurvFlatConn = "CurvFlatConn"
    CurvFlatMetric = "CurvFlatMetric"
    RicciFlatConn = "RicciFlatConn"
    RicciFlatMetric = "RicciFlatMetric"
    ScalarFlat = "ScalarFlat"
    ScalarFlatConn = "ScalarFlatConn"


class Census(NamedTuple):
    equations: int
    unknowns: int
    kind: str  # "over", "under" or "determined"


def _metric_unknowns(n: int) -> int:
    return n * (n + 1) // 2


def _connection_unknowns(n: int) -> int:
    return n * n * (n + 1) // 2


def system_census(system: System | str, n: int) -> Census:
    """Count distinct equations and unknowns of a flatness PDE system in dimension n."""
    system = System(system)
    if n < 1:
        raise ValueError("n must be >= 1")
    curvature_eqs = n * n * (n * n - 1) // 12
    eqs, unk = {
        System.ConnFlat1: (n * n * (n + 1) // 2, _metric_unknowns(n)),
        System.CurvFlatConn: (curvature_eqs, _connection_unknowns(n)),
        System.CurvFlatMetric: (curvature_eqs, _metric_unknowns(n)),
        System.RicciFlatConn: (_metric_unknowns(n), _connection_unknowns(n)),
        System.RicciFlatMetric: (_metric_unknowns(n), _metric_unknowns(n)),
        System.ScalarFlat: (1, _metric_unknowns(n)),
        System.ScalarFlatConn: (1, _connection_unknowns(n)),
    }[system]
    kind = "over" if eqs > unk else "under" if eqs < unk else "determined"
    return Census(eqs, unk, kind)
