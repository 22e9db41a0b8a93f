"""Closed-form Euler-Lagrange expressions transcribed term by term.

Each function evaluates one printed expression literally, including its
normalization, at a batch of points.  They are kept for comparison with the
residuals assembled from the Lagrangian partials (:mod:`.residuals`), which are
what the Gateaux oracle measures.  Conventions:

* ``delta^c_[k delta^d_l]`` is ``(delta^c_k delta^d_l - delta^c_l delta^d_k) / 2``;
* the Ricci operator ``P^{ps}_{qk}`` is ``delta^p_q delta^s_k - delta^p_k delta^s_q``,
  the normalization that reproduces Ric_ik = R^q_iqk;
* connection residuals are indexed ``[u, v, w]`` against a variation of Gamma^u_vw,
  metric residuals ``[m, n]``.

Total derivatives use central differences with step ``fd.h2`` as elsewhere.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..curvature import christoffel, first_kind, ricci_harmonic_formula, riemann_mixed
from ..errors import ConfigInvalid
from ..fields import FDConfig, FieldSpec, eval_metric_jet2
from ..tensor_core import invert_spd
from .ids import FunctionalId, Variable
from .lagrangians import riemann_from_state
from .residuals import _double_divergence, _divergence, _sym, connection_setting, el_residual

_ES = dict(optimize=True)


def _alt(n: int) -> np.ndarray:
    """A[c, d, k, l] = delta^c_[k delta^d_l] with the 1/2 normalization."""
    e = np.eye(n)
    return 0.5 * (np.einsum("ck,dl->cdkl", e, e) - np.einsum("cl,dk->cdkl", e, e))


def _ricci_operator(n: int) -> np.ndarray:
    """P[p, s, q, k] = delta^p_q delta^s_k - delta^p_k delta^s_q."""
    e = np.eye(n)
    return np.einsum("pq,sk->psqk", e, e) - np.einsum("pk,sq->psqk", e, e)


class _MetricGeometry(NamedTuple):
    g: np.ndarray
    K: np.ndarray
    s: np.ndarray
    G1: np.ndarray
    Gamma: np.ndarray
    ddg: np.ndarray
    Rl: np.ndarray  # R_ijkl


def _metric_geometry(spec: FieldSpec, X, fd: FDConfig) -> _MetricGeometry:
    jet = eval_metric_jet2(spec, X, fd)
    K = invert_spd(jet.g)
    G1 = first_kind(jet.dg)
    Gamma = christoffel(jet, K).Gamma
    Rl = riemann_from_state(K, G1, jet.ddg)
    return _MetricGeometry(jet.g, K, np.sqrt(np.linalg.det(jet.g)), G1, Gamma, jet.ddg, Rl)


# --- connection-variable displays -----------------------------------------------------------


def _conn_norm_gamma(spec, X, fd):
    g, K, s, cj = connection_setting(spec, X, fd)
    return 2 * s[..., None, None, None] * np.einsum("...sp,...mq,...nr,...pqr->...smn", g, K, K, cj.Gamma, **_ES)


def _riemann_norm_gamma(spec, X, fd):
    n = spec.n
    A = _alt(n)

    def parts(Y):
        g, K, s, cj = connection_setting(spec, Y, fd)
        Rm = riemann_mixed(cj)
        # S_i^{jkl} = g_ip g^jq g^kr g^ls R^p_qrs
        S = np.einsum("...ip,...jq,...kr,...ls,...pqrs->...ijkl", g, K, K, K, Rm, **_ES)
        return cj.Gamma, S, s

    G, S, s = parts(X)
    t1 = np.einsum("vbkl,...wbj,...ujkl->...uvw", A, G, S, **_ES)
    t1 = t1 + np.einsum("avkl,...iau,...iwkl->...uvw", A, G, S, **_ES)
    out = t1 * s[..., None, None, None]

    def bracket(Y):
        _, S, s = parts(Y)
        return np.einsum("tvkl,...uwkl->...tuvw", A, S) * s[..., None, None, None, None]

    return out - _connection_divergence(bracket, X, fd.h2, n)


def _ricci_norm_gamma(spec, X, fd):
    n = spec.n
    e = np.eye(n)

    def parts(Y):
        g, K, s, cj = connection_setting(spec, Y, fd)
        Ric = np.einsum("...lilk->...ik", riemann_mixed(cj))
        return cj.Gamma, np.einsum("...ik,...jl,...kl->...ij", K, K, Ric), K, s

    G, Rup, K, s = parts(X)
    trace = np.einsum("...ccu->...u", G)
    t = (
        np.einsum("vu,...wij,...ij->...uvw", e, G, Rup)
        - np.einsum("vj,...wiu,...ij->...uvw", e, G, Rup)
        + np.einsum("vi,wj,...u,...ij->...uvw", e, e, trace, Rup)
        - np.einsum("vi,...wju,...ij->...uvw", e, G, Rup)
    )
    out = t * s[..., None, None, None]

    A = _alt(n)

    def bracket(Y):
        _, Rup, _, s = parts(Y)
        # delta^t_[u delta^w_j] R^vj
        return np.einsum("tuwj,...vj->...tuvw", A, Rup) * s[..., None, None, None, None]

    return out - _connection_divergence(bracket, X, fd.h2, n)


def _total_scalar_gamma(spec, X, fd):
    n = spec.n
    e = np.eye(n)
    P = _ricci_operator(n)
    g, K, s, cj = connection_setting(spec, X, fd)
    G = cj.Gamma
    inner = np.einsum("ql,mp,...ik,...nis->...pskqlmn", e, e, K, G, **_ES) + np.einsum(
        "...mk,ns,...qpl->...pskqlmn", K, e, G, **_ES
    )
    alg = np.einsum("psqk,...pskqlmn->...lmn", P, inner, **_ES) * s[..., None, None, None]

    def weighted_inverse(Y):
        _, K, s, _ = connection_setting(spec, Y, fd)
        return K * s[..., None, None]

    h = fd.h2
    D = np.stack(
        [(weighted_inverse(X + h * e[p]) - weighted_inverse(X - h * e[p])) / (2 * h) for p in range(n)], axis=-3
    )  # D[..., p, m, k] = D_p(g^mk sqrt g)
    deriv = np.einsum("psqk,ql,ns,...pmk->...lmn", P, e, e, D, **_ES)
    return alg - deriv


def _connection_divergence(bracket, X, h, n):
    out = 0.0
    for t in range(n):
        e = np.zeros(n)
        e[t] = h
        out = out + (bracket(X + e)[..., t, :, :, :] - bracket(X - e)[..., t, :, :, :]) / (2 * h)
    return out


# --- metric-variable displays -------------------------------------------------------------


def _conn_norm_metric(spec, X, fd):
    n = spec.n
    e = np.eye(n)
    geo = _metric_geometry(spec, X, fd)
    g, K, s, G = geo.g, geo.K, geo.s, geo.Gamma
    L = np.einsum("...ip,...jq,...kr,...ijk,...pqr->...", g, K, K, G, G, **_ES)
    t1 = np.einsum("...jq,...kr,...mjk,...nqr->...mn", K, K, G, G, **_ES)
    t2 = np.einsum("...ip,...ijk,...pqr,...mj,...nq,...kr->...mn", g, G, G, K, K, K, **_ES) + np.einsum(
        "...ip,...ijk,...pqr,...jq,...mk,...nr->...mn", g, G, G, K, K, K, **_ES
    )
    alg = (t1 - t2 + 0.5 * L[..., None, None] * K) * s[..., None, None]

    def bracket(Y):
        geo = _metric_geometry(spec, Y, fd)
        K, G = geo.K, geo.Gamma
        delta = (
            np.einsum("mu,nj,lk->lmnujk", e, e, e)
            + np.einsum("mu,nk,lj->lmnujk", e, e, e)
            - np.einsum("lu,mj,nk->lmnujk", e, e, e)
        )
        return np.einsum("...jq,...kr,lmnujk,...uqr->...lmn", K, K, delta, G, **_ES) * geo.s[..., None, None, None]

    return _sym(alg - _divergence(bracket, X, fd.h2, n))


def _conn_norm_inverse(spec, X, fd):
    e = np.eye(spec.n)
    geo = _metric_geometry(spec, X, fd)
    g, K, G = geo.g, geo.K, geo.Gamma
    GG = np.einsum("...ijk,...pqr,...kr->...ijpq", G, G, K)  # g^kr Gamma^i_jk Gamma^p_qr
    out = (
        -2 * np.einsum("...mp,...ni,...jq,...ijpq->...mn", g, g, K, GG, **_ES)
        + np.einsum("...mi,...np,...jq,...ijpq->...mn", g, g, K, GG, **_ES)
        - 2 * np.einsum("...ip,jm,qn,...ijpq->...mn", g, e, e, GG, **_ES)
        + 0.5 * np.einsum("...ip,...jq,...ijpq->...", g, K, GG)[..., None, None] * g
    )
    return _sym(out)


def _riemann_norm_inverse(spec, X, fd):
    A = _alt(spec.n)
    geo = _metric_geometry(spec, X, fd)
    g, K, G, R = geo.g, geo.K, geo.Gamma, geo.Rl
    Rup = np.einsum("...ap,...bq,...kr,...ls,...pqrs->...abkl", K, K, K, K, R, **_ES)
    t1 = 2 * np.einsum("cdkl,...abkl,...nv,...wm,...vbc,...wad->...mn", A, Rup, g, g, G, G, **_ES)
    Rm3 = np.einsum("...jq,...kr,...ls,...pqrs->...pjkl", K, K, K, R, **_ES)  # R_p^{jkl}
    t2 = 2 * np.einsum("...mjkl,...njkl->...mn", R, Rm3)
    Rm3b = np.einsum("...ip,...kr,...ls,...pqrs->...iqkl", K, K, K, R, **_ES)  # R^i_q^{kl}
    t2 = t2 + 2 * np.einsum("...imkl,...inkl->...mn", R, Rm3b)
    norm = np.einsum("...ijkl,...ijkl->...", R, Rup)
    return _sym(t1 + t2 - 0.5 * norm[..., None, None] * g)


def _riemann_norm_metric(spec, X, fd):
    n = spec.n
    e = np.eye(n)
    A = _alt(n)
    geo = _metric_geometry(spec, X, fd)
    K, s, G, R = geo.K, geo.s, geo.Gamma, geo.Rl
    Rup = np.einsum("...ip,...jq,...kr,...ls,...pqrs->...ijkl", K, K, K, K, R, **_ES)
    t1 = -2 * (
        np.einsum("...njk,...mil,...ijkl->...mn", G, G, Rup, **_ES)
        + np.einsum("...njl,...mik,...ijkl->...mn", G, G, Rup, **_ES)
    )
    Rmup = np.einsum("...mi,...ijkl->...mjkl", K, R)  # R^m_jkl
    Rpq = np.einsum("...kr,...ls,...pqrs->...pqkl", K, K, R, **_ES)  # R_pq^{kl}
    t2 = -2 * np.einsum("...mjkl,...np,...jq,...pqkl->...mn", Rmup, K, K, Rpq, **_ES)
    t2 = t2 - 2 * np.einsum("...ip,...mj,...nq,...ijkl,...pqkl->...mn", K, K, K, R, Rpq, **_ES)
    t2 = t2 + 0.5 * np.einsum("...ijkl,...ijkl->...", R, Rup)[..., None, None] * K
    alg = (t1 + t2) * s[..., None, None]

    # delta-structure of the first-order bracket, indexed [a, b, c, d, h, m, n]
    def first_bracket(Y):
        geo = _metric_geometry(spec, Y, fd)
        Rup = np.einsum("...ip,...jq,...kr,...ls,...pqrs->...ijkl", geo.K, geo.K, geo.K, geo.K, geo.Rl, **_ES)
        Gm = geo.Gamma
        inner = (
            np.einsum("...mad,hc,nb->...abcdhmn", Gm, e, e)
            + np.einsum("...mad,hb,nc->...abcdhmn", Gm, e, e)
            - np.einsum("...had,mb,nc->...abcdhmn", Gm, e, e)
            + np.einsum("...mbc,ha,nd->...abcdhmn", Gm, e, e)
            + np.einsum("...mbc,hd,na->...abcdhmn", Gm, e, e)
            - np.einsum("...hbc,ma,nd->...abcdhmn", Gm, e, e)
        )
        val = np.einsum("cdkl,...abcdhmn,...abkl->...hmn", A, inner, Rup, **_ES)
        return val * geo.s[..., None, None, None]

    def second_bracket(Y):
        geo = _metric_geometry(spec, Y, fd)
        Rup = np.einsum("...ip,...jq,...kr,...ls,...pqrs->...ijkl", geo.K, geo.K, geo.K, geo.K, geo.Rl, **_ES)
        val = np.einsum("mhij,nakl,...ijkl->...hamn", A, A, Rup, **_ES)
        val = 0.5 * (val + np.swapaxes(val, -4, -3))
        return val * geo.s[..., None, None, None, None]

    out = alg - _divergence(first_bracket, X, fd.h2, n) + _double_divergence(second_bracket, X, fd.h2, n)
    return _sym(out)


def _harmonic_ricci(geo: _MetricGeometry) -> np.ndarray:
    return ricci_harmonic_formula(geo.g, geo.K, geo.G1, geo.ddg)


def _ricci_norm_inverse_harmonic(spec, X, fd):
    geo = _metric_geometry(spec, X, fd)
    g, K, G, H = geo.g, geo.K, geo.Gamma, geo.ddg
    Ric = _harmonic_ricci(geo)
    Rup = np.einsum("...ik,...jl,...kl->...ij", K, K, Ric)
    bracket = (
        -0.5 * np.einsum("...mnij->...ijmn", H)
        + np.einsum("...cd,...cim,...dnj->...ijmn", g, G, G, **_ES)
        + np.einsum("...ab,...md,...nc,...cia,...dbj->...ijmn", K, g, g, G, G, **_ES)
    )
    out = (
        2 * np.einsum("...ik,...im,...kn->...mn", K, Ric, Ric, **_ES)
        + 2 * np.einsum("...ij,...ijmn->...mn", Rup, bracket)
        - 0.5 * np.einsum("...ij,...ij->...", Rup, Ric)[..., None, None] * g
    )
    return _sym(out)


def _ricci_norm_metric_harmonic(spec, X, fd):
    n = spec.n
    e = np.eye(n)
    geo = _metric_geometry(spec, X, fd)
    g, K, s, G, H = geo.g, geo.K, geo.s, geo.Gamma, geo.ddg
    Ric = _harmonic_ricci(geo)
    Rup = np.einsum("...ik,...jl,...kl->...ij", K, K, Ric)
    t1 = -2 * np.einsum("...mi,...nk,...jl,...ij,...kl->...mn", K, K, K, Ric, Ric, **_ES)
    t1 = t1 + 0.5 * np.einsum("...ij,...ij->...", Rup, Ric)[..., None, None] * K
    inner = -np.einsum(
        "...mp,...nq,...klpq->...klmn",
        K,
        K,
        -0.5 * np.einsum("...pqkl->...klpq", H) + np.einsum("...rs,...rkp,...sql->...klpq", g, G, G, **_ES),
        **_ES,
    )
    inner = inner - np.einsum("...pq,...nkp,...mql->...klmn", K, G, G, **_ES)
    alg = (t1 + 2 * np.einsum("...kl,...klmn->...mn", Rup, inner)) * s[..., None, None]

    def first_bracket(Y):
        geo = _metric_geometry(spec, Y, fd)
        K, Gm = geo.K, geo.Gamma
        Ru = np.einsum("...ik,...jl,...kl->...ij", K, K, _harmonic_ricci(geo))
        d1 = (
            np.einsum("nd,ha,mi->dhmnai", e, e, e) + np.einsum("nd,hi,ma->dhmnai", e, e, e)
            - np.einsum("hd,mi,na->dhmnai", e, e, e)
        )
        d2 = (
            np.einsum("nd,hj,mb->dhmnbj", e, e, e) + np.einsum("nd,hb,mj->dhmnbj", e, e, e)
            - np.einsum("hd,mb,nj->dhmnbj", e, e, e)
        )
        val = np.einsum("...ab,...ij,dhmnai,...dbj->...hmn", K, Ru, d1, Gm, **_ES) + np.einsum(
            "...ab,...ij,dhmnbj,...dia->...hmn", K, Ru, d2, Gm, **_ES
        )
        return val * geo.s[..., None, None, None]

    def second_bracket(Y):
        geo = _metric_geometry(spec, Y, fd)
        Ru = np.einsum("...mk,...nl,...kl->...mn", geo.K, geo.K, _harmonic_ricci(geo))
        return np.einsum("...ht,...mn->...htmn", geo.K, Ru) * geo.s[..., None, None, None, None]

    out = alg - _divergence(first_bracket, X, fd.h2, n) + _double_divergence(second_bracket, X, fd.h2, n)
    return _sym(out)


def _total_scalar_inverse(spec, X, fd):
    geo = _metric_geometry(spec, X, fd)
    Ric = np.einsum("...ijkl,...ik->...jl", geo.Rl, geo.K)
    return _sym(Ric)


def _scalar_square_inverse(spec, X, fd):
    geo = _metric_geometry(spec, X, fd)
    Ric = _sym(np.einsum("...ijkl,...ik->...jl", geo.Rl, geo.K))
    R = np.einsum("...ij,...ij->...", geo.K, Ric)[..., None, None]
    return 2 * R * Ric - 0.5 * R**2 * geo.g


DISPLAYED = {
    FunctionalId("ConnNorm", "Gamma"): _conn_norm_gamma,
    FunctionalId("ConnNorm", "Metric"): _conn_norm_metric,
    FunctionalId("ConnNorm", "InverseMetric"): _conn_norm_inverse,
    FunctionalId("RiemannNorm", "Gamma"): _riemann_norm_gamma,
    FunctionalId("RiemannNorm", "InverseMetric"): _riemann_norm_inverse,
    FunctionalId("RiemannNorm", "Metric"): _riemann_norm_metric,
    FunctionalId("RicciNorm", "Gamma"): _ricci_norm_gamma,
    FunctionalId("RicciNorm", "InverseMetric", "harmonic"): _ricci_norm_inverse_harmonic,
    FunctionalId("RicciNorm", "Metric", "harmonic"): _ricci_norm_metric_harmonic,
    FunctionalId("TotalScalar", "Gamma"): _total_scalar_gamma,
    FunctionalId("TotalScalar", "InverseMetric"): _total_scalar_inverse,
    FunctionalId("ScalarSquare", "InverseMetric"): _scalar_square_inverse,
}


def displayed_residual(fid: FunctionalId, spec: FieldSpec, X, fd: FDConfig) -> np.ndarray:
    """The printed closed-form residual for ``fid`` at the points X."""
    try:
        fn = DISPLAYED[fid]
    except KeyError:
        raise ConfigInvalid(f"no closed-form display for {fid}") from None
    if fid.variable is not Variable.Gamma and not spec.is_metric:
        raise ConfigInvalid(f"{fid} needs a metric field")
    # a symmetric connection only sees the part symmetric in its lower slots
    return _sym(fn(spec, np.asarray(X, dtype=float), fd))


class FormComparison(NamedTuple):
    derived_mismatch: float
    displayed_mismatch: float
    factor: float          # least-squares c with displayed ~ c * derived
    non_proportional: float  # |displayed - c derived| / |displayed|


def compare_forms(fid: FunctionalId, spec: FieldSpec, quad, bumps, stride: int = 1) -> FormComparison:
    """Oracle mismatch of both residual forms plus the proportionality of the display.

    A display that is a constant multiple of the derived residual has the same
    solutions even when its oracle mismatch is large.
    """
    from .oracle import el_oracle_match

    X = quad.points()[::stride]
    a = el_residual(fid, spec, X, quad.fd)
    b = el_residual(fid, spec, X, quad.fd, form="displayed")
    aa = float(np.sum(a * a))
    c = float(np.sum(a * b)) / aa if aa > 0 else 0.0
    nb = float(np.sqrt(np.sum(b * b)))
    rest = float(np.sqrt(np.sum((b - c * a) ** 2))) / nb if nb > 0 else 0.0
    return FormComparison(
        el_oracle_match(fid, spec, bumps, quad).worst,
        el_oracle_match(fid, spec, bumps, quad, form="displayed").worst,
        c,
        rest,
    )
