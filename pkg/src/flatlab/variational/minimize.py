"""Parameter families of metrics and gradient descent on a flatness deviation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from ..errors import ConfigInvalid, LineSearchFailed, NotPositiveDefinite
from ..fields import ChartBox, FieldSpec, eval_metric_jet2
from ..tensor_core import invert_spd
from .ids import FunctionalId
from .oracle import functional
from .quadrature import GridQuadrature

FAMILY_KINDS = ("conformal_scale", "polynomial")
MAX_HALVINGS = 40


def _half_square_norm(n: int) -> dict:
    return {"id": "quadratic", "c0": 0.0, "a": [0.0] * n, "Q": (0.5 * np.eye(n)).tolist()}


@dataclass(frozen=True)
class FamilySpec:
    """A k-parameter family theta -> metric field on ``box``.

    ``conformal_scale``: g = exp(2 theta.phi(x)) delta, one scalar potential
    phi_a per parameter (default phi = |x|^2 / 2).

    ``polynomial``: g = g0 + sum_a theta_a (L_a x + 1/2 Q_a x x), entrywise
    polynomial coefficients drawn from ``seed``.  ``theta = 0`` is the constant
    metric g0.

    ``bound`` is the search box |theta_a| <= bound; the family must be SPD on it.
    """

    kind: str
    box: ChartBox
    k: int = 1
    potentials: tuple = ()
    g0: Any = None
    seed: int = 0
    scale: float = 0.3
    bound: float = 1.0
    _directions: Any = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ConfigInvalid(f"family kind must be one of {FAMILY_KINDS}, got {self.kind!r}")
        if self.k < 1:
            raise ConfigInvalid("family needs at least one parameter")
        n = self.box.n
        if self.kind == "conformal_scale":
            pots = tuple(self.potentials) or (_half_square_norm(n),) * self.k
            if len(pots) != self.k:
                raise ConfigInvalid("conformal_scale family needs one potential per parameter")
            object.__setattr__(self, "potentials", pots)
        else:
            rng = np.random.default_rng(self.seed)
            L = rng.normal(size=(self.k, n, n, n)) * self.scale
            Q = rng.normal(size=(self.k, n, n, n, n)) * self.scale
            L = 0.5 * (L + np.swapaxes(L, -1, -2))
            Q = 0.5 * (Q + np.swapaxes(Q, 1, 2))
            Q = 0.5 * (Q + np.swapaxes(Q, -1, -2))
            object.__setattr__(self, "_directions", (L, Q))
            g0 = np.eye(n) if self.g0 is None else np.asarray(self.g0, dtype=float)
            if g0.shape != (n, n):
                raise ConfigInvalid("family g0 must be n x n")
            object.__setattr__(self, "g0", g0)

    def field(self, theta) -> FieldSpec:
        theta = np.asarray(theta, dtype=float).reshape(self.k)
        if self.kind == "conformal_scale":
            inner = {"id": "sum", "terms": list(self.potentials), "weights": theta.tolist()}
            return FieldSpec("conformal", {"scalar": {"id": "exp", "scale": 2.0, "inner": inner}}, self.box)
        L, Q = self._directions
        return FieldSpec(
            "quadratic",
            {"g0": self.g0.tolist(), "L": np.tensordot(theta, L, 1).tolist(), "Q": np.tensordot(theta, Q, 1).tolist()},
            self.box,
        )

    def in_bounds(self, theta) -> bool:
        return bool(np.all(np.abs(np.asarray(theta, dtype=float)) <= self.bound))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "box": self.box.to_dict(), "k": self.k, "bound": self.bound}
        if self.kind == "conformal_scale":
            d["potentials"] = [dict(p) for p in self.potentials]
        else:
            d.update(g0=np.asarray(self.g0).tolist(), seed=self.seed, scale=self.scale)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> FamilySpec:
        allowed = {"kind", "box", "k", "potentials", "g0", "seed", "scale", "bound"}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigInvalid(f"unknown family keys: {sorted(unknown)}")
        if "kind" not in d or "box" not in d:
            raise ConfigInvalid("family needs 'kind' and 'box'")
        return cls(
            d["kind"],
            ChartBox.from_dict(d["box"]),
            int(d.get("k", 1)),
            tuple(d.get("potentials") or ()),
            d.get("g0"),
            int(d.get("seed", 0)),
            float(d.get("scale", 0.3)),
            float(d.get("bound", 1.0)),
        )


@dataclass(frozen=True)
class MinimizeOptions:
    step0: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    max_iters: int = 200
    grad_tol: float = 1e-9
    fd_step: float = 1e-6

    def __post_init__(self):
        if not 0 < self.backtrack < 1:
            raise ConfigInvalid("backtrack ratio must lie in (0, 1)")
        if self.step0 <= 0 or self.fd_step <= 0 or self.max_iters < 0 or self.grad_tol < 0:
            raise ConfigInvalid("step0, fd_step must be positive; max_iters, grad_tol non-negative")


@dataclass
class MinimizeResult:
    theta: np.ndarray
    trace: list  # functional value before the first step and after each accepted step
    iterations: int
    converged: bool
    grad_norm: float

    def to_dict(self) -> dict:
        return {
            "theta": [float(t) for t in self.theta],
            "trace": [float(v) for v in self.trace],
            "iterations": self.iterations,
            "converged": self.converged,
            "grad_norm": float(self.grad_norm),
        }


def family_functional(fid: FunctionalId, family: FamilySpec, theta, quad: GridQuadrature) -> float:
    return functional(fid, family.field(theta), quad)


def parameter_gradient(fid: FunctionalId, family: FamilySpec, theta, quad: GridQuadrature, h: float = 1e-6):
    """Central-difference gradient of the functional in the family parameters."""
    theta = np.asarray(theta, dtype=float)
    grad = np.empty_like(theta)
    for a in range(theta.size):
        e = np.zeros_like(theta)
        e[a] = h
        grad[a] = (family_functional(fid, family, theta + e, quad) - family_functional(fid, family, theta - e, quad)) / (
            2 * h
        )
    return grad


def minimize_deviation(
    fid: FunctionalId,
    family: FamilySpec,
    quad: GridQuadrature,
    theta0,
    opt: MinimizeOptions | None = None,
) -> MinimizeResult:
    """Gradient descent with Armijo backtracking on theta -> I[family(theta)].

    Each iteration starts the line search at ``step0`` and multiplies the step by
    ``backtrack`` until the sufficient-decrease test passes; trial points that
    leave the search box or lose positive definiteness count as failures.
    Raises LineSearchFailed after 40 reductions.
    """
    opt = opt or MinimizeOptions()
    theta = np.asarray(theta0, dtype=float).reshape(family.k).copy()
    if not family.in_bounds(theta):
        raise ConfigInvalid("initial parameters lie outside the family search box")
    value = family_functional(fid, family, theta, quad)
    trace = [value]
    grad = parameter_gradient(fid, family, theta, quad, opt.fd_step)
    gnorm = float(np.linalg.norm(grad))
    it = 0
    while gnorm >= opt.grad_tol and it < opt.max_iters:
        step = opt.step0
        for _ in range(MAX_HALVINGS + 1):
            trial = theta - step * grad
            if family.in_bounds(trial):
                try:
                    tv = family_functional(fid, family, trial, quad)
                except NotPositiveDefinite:
                    tv = np.inf
                if tv <= value - opt.armijo * step * gnorm**2:
                    break
            step *= opt.backtrack
        else:
            raise LineSearchFailed(f"no sufficient decrease after {MAX_HALVINGS} step reductions at iteration {it}")
        theta, value = trial, tv
        trace.append(value)
        grad = parameter_gradient(fid, family, theta, quad, opt.fd_step)
        gnorm = float(np.linalg.norm(grad))
        it += 1
    return MinimizeResult(theta, trace, it, gnorm < opt.grad_tol, gnorm)


def second_difference(
    fid: FunctionalId, family: FamilySpec, theta, direction, quad: GridQuadrature, h: float = 1e-3
) -> float:
    """(I(theta + h d) - 2 I(theta) + I(theta - h d)) / h^2."""
    theta = np.asarray(theta, dtype=float)
    d = np.asarray(direction, dtype=float)
    f = lambda t: family_functional(fid, family, t, quad)  # noqa: E731
    return (f(theta + h * d) - 2 * f(theta) + f(theta - h * d)) / h**2


def conn_norm_inverse_density(K: np.ndarray, Gamma: np.ndarray) -> float:
    """g_ip g^jq g^kr Gamma^i_jk Gamma^p_qr sqrt(det g) as a function of g^-1 with Gamma held fixed."""
    g = invert_spd(K)
    return float(
        np.einsum("ip,jq,kr,ijk,pqr->", g, K, K, Gamma, Gamma) * np.sqrt(np.linalg.det(g))
    )


def formal_inverse_hessian_sample(K: np.ndarray, Gamma: np.ndarray, direction: np.ndarray, h: float = 1e-3) -> float:
    """Second difference of the connection-norm density in g^-1 along a symmetric direction, Gamma fixed."""
    B = 0.5 * (direction + direction.T)
    f = lambda M: conn_norm_inverse_density(M, Gamma)  # noqa: E731
    return (f(K + h * B) - 2 * f(K) + f(K - h * B)) / h**2


def normal_center_data(spec: FieldSpec, x) -> tuple[np.ndarray, np.ndarray]:
    """(g^-1, Gamma) of a metric field at one point."""
    from ..curvature import christoffel

    jet = eval_metric_jet2(spec, np.asarray(x, dtype=float)[None])
    K = invert_spd(jet.g)
    return K[0], christoffel(jet, K).Gamma[0]


__all__ = [
    "FAMILY_KINDS",
    "FamilySpec",
    "MinimizeOptions",
    "MinimizeResult",
    "conn_norm_inverse_density",
    "family_functional",
    "formal_inverse_hessian_sample",
    "minimize_deviation",
    "normal_center_data",
    "parameter_gradient",
    "second_difference",
]
