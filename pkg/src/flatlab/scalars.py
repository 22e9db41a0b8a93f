"""Catalog of closed-form scalar functions with analytic gradients and Hessians.

A scalar is described by a plain dict (so it serializes into configs), e.g.::

    {"id": "quadratic", "c0": 1.0, "Q": [[1, 0], [0, 0]]}          # 1 + x1^2
    {"id": "exp", "scale": 2.0, "inner": {"id": "affine", "a": [0.3, 0.1]}}

``make_scalar(desc, n)`` returns an object whose ``eval(X)`` gives value,
gradient ``(..., n)`` and Hessian ``(..., n, n)``.
"""
from __future__ import annotations

import ast
import operator
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import ConfigInvalid


def _vec(v, n: int, name: str) -> np.ndarray:
    out = np.zeros(n) if v is None else np.asarray(v, dtype=float).reshape(-1)
    if out.shape != (n,):
        raise ConfigInvalid(f"{name} must have length {n}")
    return out


def _mat(m, n: int, name: str) -> np.ndarray:
    out = np.zeros((n, n)) if m is None else np.asarray(m, dtype=float)
    if out.shape != (n, n):
        raise ConfigInvalid(f"{name} must be {n}x{n}")
    return out


class Scalar:
    n: int

    def eval(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        raise NotImplementedError


@dataclass
class Quadratic(Scalar):
    """c0 + a.x + x^T Q x (constant and affine are special cases)."""

    n: int
    c0: float
    a: np.ndarray
    Q: np.ndarray

    def eval(self, X):
        Qs = 0.5 * (self.Q + self.Q.T)
        val = self.c0 + X @ self.a + np.einsum("...i,ij,...j->...", X, Qs, X)
        grad = self.a + 2.0 * X @ Qs
        hess = np.broadcast_to(2.0 * Qs, X.shape[:-1] + (self.n, self.n))
        return val, grad, hess


@dataclass
class Exp(Scalar):
    """amp * exp(scale * inner)."""

    n: int
    inner: Scalar
    scale: float = 2.0
    amp: float = 1.0

    def eval(self, X):
        u, du, ddu = self.inner.eval(X)
        e = self.amp * np.exp(self.scale * u)
        grad = (self.scale * e)[..., None] * du
        hess = (self.scale * e)[..., None, None] * (
            ddu + self.scale * du[..., :, None] * du[..., None, :]
        )
        return e, grad, hess


@dataclass
class Trig(Scalar):
    """c0 + amp * sin(k.x + phase)."""

    n: int
    c0: float
    amp: float
    k: np.ndarray
    phase: float

    def eval(self, X):
        arg = X @ self.k + self.phase
        s, c = np.sin(arg), np.cos(arg)
        val = self.c0 + self.amp * s
        grad = (self.amp * c)[..., None] * self.k
        hess = -(self.amp * s)[..., None, None] * np.outer(self.k, self.k)
        return val, grad, hess


@dataclass
class ReciprocalAffine(Scalar):
    """1 / (a.x + c)."""

    n: int
    a: np.ndarray
    c: float

    def eval(self, X):
        d = X @ self.a + self.c
        if np.any(np.abs(d) < 1e-12):
            raise ZeroDivisionError("reciprocal-affine profile hits its pole")
        val = 1.0 / d
        grad = -(val**2)[..., None] * self.a
        hess = (2.0 * val**3)[..., None, None] * np.outer(self.a, self.a)
        return val, grad, hess


@dataclass
class Sum(Scalar):
    n: int
    terms: list
    weights: np.ndarray

    def eval(self, X):
        val = np.zeros(X.shape[:-1])
        grad = np.zeros(X.shape)
        hess = np.zeros(X.shape + (self.n,))
        for w, t in zip(self.weights, self.terms):
            v, g, h = t.eval(X)
            val = val + w * v
            grad = grad + w * g
            hess = hess + w * h
        return val, grad, hess


def make_scalar(desc: Mapping, n: int) -> Scalar:
    kind = desc.get("id")
    if kind == "constant":
        return Quadratic(n, float(desc.get("c0", 1.0)), np.zeros(n), np.zeros((n, n)))
    if kind == "affine":
        return Quadratic(n, float(desc.get("c0", 0.0)), _vec(desc.get("a"), n, "a"), np.zeros((n, n)))
    if kind == "quadratic":
        return Quadratic(n, float(desc.get("c0", 0.0)), _vec(desc.get("a"), n, "a"), _mat(desc.get("Q"), n, "Q"))
    if kind == "exp":
        inner = desc.get("inner")
        if inner is None:
            raise ConfigInvalid("exp scalar needs an 'inner' scalar")
        return Exp(n, make_scalar(inner, n), float(desc.get("scale", 2.0)), float(desc.get("amp", 1.0)))
    if kind == "trig":
        return Trig(n, float(desc.get("c0", 1.0)), float(desc.get("amp", 0.1)),
                    _vec(desc.get("k"), n, "k"), float(desc.get("phase", 0.0)))
    if kind == "reciprocal_affine":
        return ReciprocalAffine(n, _vec(desc.get("a"), n, "a"), float(desc.get("c", 1.0)))
    if kind == "sum":
        terms = [make_scalar(t, n) for t in desc.get("terms", [])]
        weights = np.asarray(desc.get("weights", [1.0] * len(terms)), dtype=float)
        if len(weights) != len(terms):
            raise ConfigInvalid("sum scalar: weights and terms differ in length")
        return Sum(n, terms, weights)
    raise ConfigInvalid(f"unknown scalar id {kind!r}")


# --- minimal arithmetic expressions for Custom fields --------------------------------

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "log": np.log, "sqrt": np.sqrt}


def compile_expression(text: str, n: int) -> Callable[[np.ndarray], np.ndarray]:
    """Compile ``text`` (grammar: + - * / ^, x1..xn, numbers) to a vectorized callable.

    A few elementary functions (sin, cos, exp, log, sqrt) are accepted as well.
    """
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ConfigInvalid(f"cannot parse expression {text!r}: {exc.msg}") from None

    def build(node):
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            v = float(node.value)
            return lambda X: np.full(X.shape[:-1], v)
        if isinstance(node, ast.Name):
            name = node.id
            if name.startswith("x") and name[1:].isdigit() and 1 <= int(name[1:]) <= n:
                idx = int(name[1:]) - 1
                return lambda X: X[..., idx]
            raise ConfigInvalid(f"unknown variable {name!r} in expression {text!r}")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op, lhs, rhs = _BINOPS[type(node.op)], build(node.left), build(node.right)
            return lambda X: op(lhs(X), rhs(X))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            arg = build(node.operand)
            sign = -1.0 if isinstance(node.op, ast.USub) else 1.0
            return lambda X: sign * arg(X)
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            fn, arg = _FUNCS[node.func.id], build(node.args[0])
            return lambda X: fn(arg(X))
        raise ConfigInvalid(f"unsupported syntax in expression {text!r}")

    return build(tree)
