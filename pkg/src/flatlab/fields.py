"""Metric and connection fields on a coordinate box, evaluated to jets.

A :class:`FieldSpec` is a declarative, serializable description.  ``build_metric``
and ``build_connection`` turn it into a field object whose ``jet(X)`` returns
values and derivatives for a batch of points ``X`` of shape ``(..., n)``.

Derivative slots always come first:

* ``MetricJet2.dg[..., t, r, s]        = d_t g_rs``
* ``MetricJet2.ddg[..., a, b, r, s]    = d_a d_b g_rs``
* ``ConnectionJet1.dGamma[..., p, l, i, s] = d_p Gamma^l_is``
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, NamedTuple

import numpy as np

from .errors import ConfigInvalid, NotPositiveDefinite, OutOfDomain
from .scalars import compile_expression, make_scalar
from .tensor_core import leading_minors

METRIC_KINDS = ("euclidean", "conformal", "sphere", "polynomial_spd", "soliton", "quadratic", "custom")
CONNECTION_KINDS = ("tabulated_connection", "soliton_connection", "custom_connection")
SPHERE_POLE_MARGIN = 0.2


class MetricJet2(NamedTuple):
    x: np.ndarray
    g: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray


class ConnectionJet1(NamedTuple):
    x: np.ndarray
    Gamma: np.ndarray
    dGamma: np.ndarray


@dataclass(frozen=True)
class ChartBox:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    grid: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        object.__setattr__(self, "grid", tuple(int(v) for v in self.grid))
        if not (len(self.lower) == len(self.upper) == len(self.grid)):
            raise ConfigInvalid("box.lower, box.upper and box.grid must have equal length")
        if not 1 <= len(self.lower) <= 6:
            raise ConfigInvalid("chart dimension must be between 1 and 6")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ConfigInvalid("box.lower must be < box.upper componentwise")
        if any(m < 2 for m in self.grid):
            raise ConfigInvalid("box.grid must be >= 2 per axis")

    @classmethod
    def cube(cls, n: int, lo: float = -0.5, hi: float = 0.5, grid: int = 16) -> ChartBox:
        return cls((lo,) * n, (hi,) * n, (grid,) * n)

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def extent(self) -> np.ndarray:
        return np.subtract(self.upper, self.lower)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * np.add(self.upper, self.lower)

    def contains(self, X: np.ndarray, shrink: float = 0.0) -> bool:
        X = np.asarray(X, dtype=float)
        lo = np.asarray(self.lower) + shrink
        hi = np.asarray(self.upper) - shrink
        return bool(np.all(X >= lo - 1e-12) and np.all(X <= hi + 1e-12))

    def grid_points(self) -> np.ndarray:
        """Grid nodes, shape ``(*grid, n)``."""
        axes = [np.linspace(lo, hi, m) for lo, hi, m in zip(self.lower, self.upper, self.grid)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def to_dict(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper), "grid": list(self.grid)}

    @classmethod
    def from_dict(cls, d: Mapping) -> ChartBox:
        try:
            return cls(tuple(d["lower"]), tuple(d["upper"]), tuple(d["grid"]))
        except KeyError as exc:
            raise ConfigInvalid(f"box is missing {exc.args[0]!r}") from None


@dataclass(frozen=True)
class FDConfig:
    h1: float
    h2: float

    @classmethod
    def default(cls, box: ChartBox) -> FDConfig:
        ext = float(np.min(box.extent))
        return cls(1e-5 * ext, 1e-3 * ext)

    def validate(self, box: ChartBox) -> None:
        ext = float(np.min(box.extent))
        if not (0 < self.h1 < ext / 4 and 0 < self.h2 < ext / 4):
            raise ConfigInvalid("finite-difference steps must lie in (0, min extent / 4)")


def _freeze(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, Mapping):
        return {k: _freeze(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_freeze(x) for x in v]
    return v


@dataclass(frozen=True)
class FieldSpec:
    """Immutable description of a metric or connection field on a chart box."""

    kind: str
    params: Mapping[str, Any] = field(default_factory=dict, hash=False)
    box: ChartBox = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in METRIC_KINDS + CONNECTION_KINDS:
            raise ConfigInvalid(f"unknown field kind {self.kind!r}")
        if self.box is None:
            raise ConfigInvalid("field spec needs a box")
        object.__setattr__(self, "params", _freeze(dict(self.params)))

    @property
    def n(self) -> int:
        return self.box.n

    @property
    def is_metric(self) -> bool:
        return self.kind in METRIC_KINDS

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": _freeze(self.params), "box": self.box.to_dict(), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: Mapping) -> FieldSpec:
        unknown = set(d) - {"kind", "params", "box", "seed"}
        if unknown:
            raise ConfigInvalid(f"unknown field keys: {sorted(unknown)}")
        if "kind" not in d or "box" not in d:
            raise ConfigInvalid("field needs 'kind' and 'box'")
        return cls(d["kind"], dict(d.get("params") or {}), ChartBox.from_dict(d["box"]), d.get("seed"))

    def with_params(self, **updates) -> FieldSpec:
        return FieldSpec(self.kind, {**self.params, **updates}, self.box, self.seed)


# --- metric field objects --------------------------------------------------------------


def _bshape(X: np.ndarray, *tail: int) -> tuple:
    return X.shape[:-1] + tail


class MetricField:
    """Base class: subclasses implement ``jet`` (analytic) or only ``value`` (FD)."""

    n: int
    analytic = True

    def value(self, X: np.ndarray) -> np.ndarray:
        return self.jet(X).g

    def jet(self, X: np.ndarray) -> MetricJet2:
        raise NotImplementedError


class ConstantMetric(MetricField):
    def __init__(self, c: np.ndarray):
        self.c = c
        self.n = c.shape[0]

    def jet(self, X):
        n = self.n
        g = np.broadcast_to(self.c, _bshape(X, n, n)).copy()
        return MetricJet2(X, g, np.zeros(_bshape(X, n, n, n)), np.zeros(_bshape(X, n, n, n, n)))


class ConformalMetric(MetricField):
    """g_ij = c_ij f(x)."""

    def __init__(self, c: np.ndarray, scalar):
        self.c, self.scalar, self.n = c, scalar, c.shape[0]

    def jet(self, X):
        f, df, ddf = self.scalar.eval(X)
        c = self.c
        return MetricJet2(
            X,
            f[..., None, None] * c,
            df[..., :, None, None] * c,
            ddf[..., :, :, None, None] * c,
        )


class SphereMetric(MetricField):
    """Round n-sphere of radius r in hyperspherical angles: g_kk = r^2 prod_{j<k} sin^2 x_j."""

    def __init__(self, radius: float, n: int):
        self.r, self.n = float(radius), n

    def jet(self, X):
        n = self.n
        s2, ds2, dds2 = np.sin(X) ** 2, np.sin(2 * X), 2 * np.cos(2 * X)
        diag = np.empty(_bshape(X, n))
        d_diag = np.zeros(_bshape(X, n, n))  # [t, k]
        dd_diag = np.zeros(_bshape(X, n, n, n))  # [a, b, k]
        def prod(k: int, replace: dict) -> np.ndarray:
            out = np.ones(X.shape[:-1])
            for j in range(k):
                out = out * replace.get(j, s2[..., j])
            return out

        for k in range(n):
            diag[..., k] = prod(k, {})
            for a in range(k):
                d_diag[..., a, k] = prod(k, {a: ds2[..., a]})
                for b in range(k):
                    if a == b:
                        dd_diag[..., a, a, k] = prod(k, {a: dds2[..., a]})
                    else:
                        dd_diag[..., a, b, k] = prod(k, {a: ds2[..., a], b: ds2[..., b]})
        r2 = self.r**2
        eye = np.eye(n)
        g = r2 * diag[..., :, None] * eye
        dg = r2 * d_diag[..., :, :, None] * eye
        ddg = r2 * dd_diag[..., :, :, :, None] * eye
        return MetricJet2(X, g, dg, ddg)


class TrigSPDMetric(MetricField):
    """g = A(x)^T A(x) + I/2 with trigonometric-polynomial entries of A."""

    def __init__(self, n: int, seed: int, degree: int, amplitude: float, n_terms: int = 3):
        rng = np.random.default_rng(seed)
        self.n = n
        self.base = np.eye(n) + amplitude * rng.uniform(-1, 1, (n, n))
        if degree > 0:
            self.freq = rng.integers(-degree, degree + 1, size=(n_terms, n)).astype(float)
            zero = ~self.freq.any(axis=1)
            self.freq[zero, rng.integers(0, n)] = 1.0
            self.coef = amplitude * rng.uniform(-1, 1, (n_terms, n, n)) / n_terms
            self.phase = rng.uniform(0, 2 * np.pi, (n_terms, n, n))
        else:
            self.freq = np.zeros((0, n))
            self.coef = np.zeros((0, n, n))
            self.phase = np.zeros((0, n, n))

    def _A(self, X):
        n = self.n
        arg = np.einsum("...i,ki->...k", X, self.freq)[..., :, None, None] + self.phase  # (..., K, n, n)
        c, s = np.cos(arg), np.sin(arg)
        A = self.base + np.einsum("kij,...kij->...ij", self.coef, c)
        dA = -np.einsum("kt,kij,...kij->...tij", self.freq, self.coef, s)
        ddA = -np.einsum("ka,kb,kij,...kij->...abij", self.freq, self.freq, self.coef, c)
        if not self.freq.size:
            A = np.broadcast_to(self.base, _bshape(X, n, n)).copy()
            dA = np.zeros(_bshape(X, n, n, n))
            ddA = np.zeros(_bshape(X, n, n, n, n))
        return A, dA, ddA

    def jet(self, X):
        A, dA, ddA = self._A(X)
        g = np.einsum("...ki,...kj->...ij", A, A) + 0.5 * np.eye(self.n)
        dg = np.einsum("...tki,...kj->...tij", dA, A)
        dg = dg + np.swapaxes(dg, -1, -2)
        ddg = np.einsum("...abki,...kj->...abij", ddA, A) + np.einsum("...aki,...bkj->...abij", dA, dA)
        ddg = ddg + np.swapaxes(ddg, -1, -2)
        ddg = 0.5 * (ddg + np.swapaxes(ddg, -3, -4))  # exact symmetry in the derivative slots
        return MetricJet2(X, g, dg, ddg)


class SolitonMetric(MetricField):
    """g_ij = c_ij + d_ij p(a.x) for a 1D profile p."""

    def __init__(self, c, d, a, profile):
        self.c, self.d, self.a, self.profile = c, d, a, profile
        self.n = c.shape[0]

    def jet(self, X):
        s = (X @ self.a)[..., None]
        p, dp, ddp = self.profile.eval(s)
        dp, ddp = dp[..., 0], ddp[..., 0, 0]
        a = self.a
        return MetricJet2(
            X,
            self.c + p[..., None, None] * self.d,
            (dp[..., None] * a)[..., :, None, None] * self.d,
            (ddp[..., None, None] * np.outer(a, a))[..., :, :, None, None] * self.d,
        )


class QuadraticMetric(MetricField):
    """g_rs = g0_rs + L_trs x^t + 1/2 Q_abrs x^a x^b (Q symmetric in ab and rs)."""

    def __init__(self, g0, L, Q):
        self.g0, self.L, self.n = g0, L, g0.shape[0]
        Q = 0.5 * (Q + np.swapaxes(Q, 0, 1))
        self.Q = 0.5 * (Q + np.swapaxes(Q, 2, 3))

    def jet(self, X):
        g = self.g0 + np.einsum("...t,trs->...rs", X, self.L) + 0.5 * np.einsum("...a,...b,abrs->...rs", X, X, self.Q)
        dg = self.L + np.einsum("tbrs,...b->...trs", self.Q, X)
        ddg = np.broadcast_to(self.Q, _bshape(X, *self.Q.shape)).copy()
        return MetricJet2(X, g, dg, ddg)


class CustomMetric(MetricField):
    analytic = False

    def __init__(self, exprs, n):
        self.n = n
        self.fns = [[compile_expression(str(exprs[i][j]), n) for j in range(n)] for i in range(n)]

    def value(self, X):
        n = self.n
        out = np.empty(_bshape(X, n, n))
        for i in range(n):
            for j in range(n):
                out[..., i, j] = self.fns[i][j](X)
        return 0.5 * (out + np.swapaxes(out, -1, -2))


# --- connection field objects ----------------------------------------------------------


class ConnectionField:
    n: int
    analytic = True

    def value(self, X):
        return self.jet(X).Gamma

    def jet(self, X) -> ConnectionJet1:
        raise NotImplementedError


class TabulatedConnection(ConnectionField):
    def __init__(self, C):
        self.C, self.n = C, C.shape[0]

    def jet(self, X):
        n = self.n
        return ConnectionJet1(X, np.broadcast_to(self.C, _bshape(X, n, n, n)).copy(), np.zeros(_bshape(X, n, n, n, n)))


class SolitonConnection(ConnectionField):
    """Gamma^i_jk = c^i_jk f(x) with f = -1 / (x^1 + ... + x^n + shift)."""

    def __init__(self, c, shift):
        self.c, self.shift, self.n = c, float(shift), c.shape[0]

    def jet(self, X):
        d = X.sum(axis=-1) + self.shift
        if np.any(np.abs(d) < 1e-12):
            raise OutOfDomain("soliton connection evaluated at its pole")
        f = -1.0 / d
        Gamma = f[..., None, None, None] * self.c
        dG = np.broadcast_to((f**2)[..., None, None, None] * self.c, _bshape(X, self.n, self.n, self.n))
        dGamma = np.broadcast_to(dG[..., None, :, :, :], _bshape(X, self.n, self.n, self.n, self.n)).copy()
        return ConnectionJet1(X, Gamma, dGamma)


class CustomConnection(ConnectionField):
    analytic = False

    def __init__(self, exprs, n):
        self.n = n
        self.fns = [[[compile_expression(str(exprs[i][j][k]), n) for k in range(n)] for j in range(n)] for i in range(n)]

    def value(self, X):
        n = self.n
        out = np.empty(_bshape(X, n, n, n))
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    out[..., i, j, k] = self.fns[i][j][k](X)
        return out


# --- builders --------------------------------------------------------------------------


def _square(v, n, name) -> np.ndarray:
    a = np.eye(n) if v is None else np.asarray(v, dtype=float)
    if a.shape != (n, n):
        raise ConfigInvalid(f"{name} must be {n}x{n}")
    return a


def build_metric(spec: FieldSpec) -> MetricField:
    n, p = spec.n, spec.params
    if spec.kind == "euclidean":
        return ConstantMetric(_square(p.get("c"), n, "c"))
    if spec.kind == "conformal":
        return ConformalMetric(_square(p.get("c"), n, "c"), make_scalar(p.get("scalar", {"id": "constant"}), n))
    if spec.kind == "sphere":
        _check_sphere_box(spec.box)
        return SphereMetric(float(p.get("radius", 1.0)), n)
    if spec.kind == "polynomial_spd":
        seed = 0 if spec.seed is None else int(spec.seed)
        degree = int(p.get("degree", 1))
        if not 0 <= degree <= 3:
            raise ConfigInvalid("polynomial_spd degree must be in 0..3")
        return TrigSPDMetric(n, seed, degree, float(p.get("amplitude", 0.3)))
    if spec.kind == "soliton":
        a = np.asarray(p.get("a", [1.0] * n), dtype=float)
        if a.shape != (n,):
            raise ConfigInvalid("soliton direction a must have length n")
        profile = make_scalar(p.get("profile", {"id": "trig"}), 1)
        return SolitonMetric(_square(p.get("c"), n, "c"), _square(p.get("d"), n, "d"), a, profile)
    if spec.kind == "quadratic":
        g0 = _square(p.get("g0"), n, "g0")
        L = np.zeros((n, n, n)) if p.get("L") is None else np.asarray(p["L"], dtype=float)
        Q = np.zeros((n,) * 4) if p.get("Q") is None else np.asarray(p["Q"], dtype=float)
        if L.shape != (n,) * 3 or Q.shape != (n,) * 4:
            raise ConfigInvalid("quadratic metric needs L of shape n^3 and Q of shape n^4")
        return QuadraticMetric(g0, L, Q)
    if spec.kind == "custom":
        exprs = p.get("g")
        if exprs is None or len(exprs) != n or any(len(row) != n for row in exprs):
            raise ConfigInvalid("custom metric needs an n x n list of expressions under 'g'")
        return CustomMetric(exprs, n)
    raise ConfigInvalid(f"{spec.kind!r} is not a metric kind")


def build_connection(spec: FieldSpec):
    n, p = spec.n, spec.params
    if spec.kind == "tabulated_connection":
        C = np.asarray(p.get("C", np.zeros((n,) * 3)), dtype=float)
        if C.shape != (n,) * 3:
            raise ConfigInvalid("C must have shape n^3")
        return TabulatedConnection(C)
    if spec.kind == "soliton_connection":
        c = np.asarray(p.get("c"), dtype=float)
        if c.shape != (n,) * 3:
            raise ConfigInvalid("c must have shape n^3")
        return SolitonConnection(c, p.get("shift", 1.0))
    if spec.kind == "custom_connection":
        exprs = p.get("Gamma")
        if exprs is None or np.shape(exprs) != (n,) * 3:
            raise ConfigInvalid("custom connection needs an n^3 nested list under 'Gamma'")
        return CustomConnection(exprs, n)
    if spec.is_metric:
        from .curvature import LeviCivita

        return LeviCivita(build_metric(spec))
    raise ConfigInvalid(f"{spec.kind!r} is not a connection kind")


def _check_sphere_box(box: ChartBox) -> None:
    lo, hi = SPHERE_POLE_MARGIN, math.pi - SPHERE_POLE_MARGIN
    for axis in range(box.n - 1):
        if box.lower[axis] < lo - 1e-12 or box.upper[axis] > hi + 1e-12:
            raise ConfigInvalid(f"sphere chart axis {axis} must stay inside [{lo}, pi - {lo}]")


# --- finite differences ----------------------------------------------------------------


def fd_first(value: Callable, X: np.ndarray, h: float) -> np.ndarray:
    """Central first differences; derivative slot inserted after the batch axes."""
    n = X.shape[-1]
    out = []
    for t in range(n):
        e = np.zeros(n)
        e[t] = h
        out.append((value(X + e) - value(X - e)) / (2 * h))
    return np.stack(out, axis=X.ndim - 1)


def fd_second(value: Callable, X: np.ndarray, h: float) -> np.ndarray:
    n = X.shape[-1]
    v0 = value(X)
    rows = []
    for a in range(n):
        ea = np.zeros(n)
        ea[a] = h
        row = []
        for b in range(n):
            if a == b:
                row.append((value(X + ea) - 2 * v0 + value(X - ea)) / h**2)
            else:
                eb = np.zeros(n)
                eb[b] = h
                row.append((value(X + ea + eb) - value(X + ea - eb) - value(X - ea + eb) + value(X - ea - eb)) / (4 * h**2))
        rows.append(np.stack(row, axis=X.ndim - 1))
    return np.stack(rows, axis=X.ndim - 1)


def fd_metric_jet(mf: MetricField, X: np.ndarray, fd: FDConfig) -> MetricJet2:
    g = mf.value(X)
    dg = fd_first(mf.value, X, fd.h1)
    ddg = fd_second(mf.value, X, fd.h2)
    ddg = 0.5 * (ddg + np.swapaxes(ddg, X.ndim - 1, X.ndim))
    return MetricJet2(X, g, dg, ddg)


def fd_connection_jet(cf: ConnectionField, X: np.ndarray, fd: FDConfig) -> ConnectionJet1:
    return ConnectionJet1(X, cf.value(X), fd_first(cf.value, X, fd.h1))


# --- public evaluation API -------------------------------------------------------------


def _as_points(x, n: int) -> np.ndarray:
    X = np.asarray(x, dtype=float)
    if X.shape[-1:] != (n,):
        raise OutOfDomain(f"point(s) must have trailing dimension {n}, got shape {X.shape}")
    return X


def _check_domain(spec: FieldSpec, X: np.ndarray, shrink: float) -> None:
    if not spec.box.contains(X, shrink):
        raise OutOfDomain("evaluation point outside the (shrunk) chart box")


def eval_metric_jet2(spec: FieldSpec, x, fd: FDConfig | None = None, method: str = "auto") -> MetricJet2:
    """Metric value with first and second partials at x (batched over leading axes).

    ``method`` is "analytic", "fd" or "auto" (analytic when the kind has closed-form
    partials).  Raises OutOfDomain or NotPositiveDefinite.
    """
    mf = build_metric(spec)
    X = _as_points(x, spec.n)
    use_fd = method == "fd" or (method == "auto" and not mf.analytic)
    if method == "analytic" and not mf.analytic:
        raise ConfigInvalid(f"{spec.kind!r} has no analytic partials")
    if use_fd:
        fd = fd or FDConfig.default(spec.box)
        fd.validate(spec.box)
        _check_domain(spec, X, 2 * max(fd.h1, fd.h2))
        jet = fd_metric_jet(mf, X, fd)
    else:
        _check_domain(spec, X, 0.0)
        jet = mf.jet(X)
    if not np.all(leading_minors(jet.g) > 0):
        raise NotPositiveDefinite(f"{spec.kind} metric is not positive definite at some point")
    return jet


def eval_connection_jet1(spec: FieldSpec, x, fd: FDConfig | None = None, method: str = "auto") -> ConnectionJet1:
    cf = build_connection(spec)
    X = _as_points(x, spec.n)
    use_fd = method == "fd" or (method == "auto" and not cf.analytic)
    if use_fd:
        fd = fd or FDConfig.default(spec.box)
        fd.validate(spec.box)
        _check_domain(spec, X, 2 * max(fd.h1, fd.h2))
        return fd_connection_jet(cf, X, fd)
    _check_domain(spec, X, 0.0)
    return cf.jet(X)


def random_spd_metric(seed: int, degree: int, box: ChartBox, amplitude: float = 0.3) -> FieldSpec:
    """Seeded metric g = A^T A + I/2 with trigonometric-polynomial entries of A."""
    if not 0 <= degree <= 3:
        raise ConfigInvalid("degree must be in 0..3")
    return FieldSpec("polynomial_spd", {"degree": int(degree), "amplitude": float(amplitude)}, box, int(seed))


def soliton_coefficients(u) -> np.ndarray:
    """c^l_is = -u^l for every (i, s); with sum(u) = 1 the field c f solves the plus-Riccati system."""
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    return -np.broadcast_to(u[:, None, None], (n, n, n)).copy()
