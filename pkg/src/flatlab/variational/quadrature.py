"""Midpoint quadrature on the chart grid and compactly supported bump perturbations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigInvalid
from ..fields import ChartBox, FDConfig


@dataclass(frozen=True)
class GridQuadrature:
    """Midpoint rule on the cell centres of ``box``, dropping ``margin`` cells per face.

    ``box.grid`` counts cells per axis.  The margin keeps finite-difference
    stencils reaching ``2 * h2`` from a cell centre inside the box; centres
    already sit half a cell in from each face.
    """

    box: ChartBox
    margin: int | None = None
    fd: FDConfig | None = None

    def __post_init__(self):
        fd = self.fd or FDConfig.default(self.box)
        object.__setattr__(self, "fd", fd)
        need = self.required_margin(self.box, fd)
        margin = need if self.margin is None else int(self.margin)
        if margin < need:
            raise ConfigInvalid(f"quadrature margin {margin} is below the stencil requirement {need}")
        if any(2 * margin >= m for m in self.box.grid):
            raise ConfigInvalid("quadrature margin leaves no interior cells")
        object.__setattr__(self, "margin", margin)

    @staticmethod
    def required_margin(box: ChartBox, fd: FDConfig) -> int:
        cell = float(np.min(box.extent / np.asarray(box.grid)))
        return max(0, math.ceil(2 * fd.h2 / cell - 0.5 - 1e-12))

    @property
    def cell(self) -> np.ndarray:
        return self.box.extent / np.asarray(self.box.grid)

    @property
    def weight(self) -> float:
        return float(np.prod(self.cell))

    def points(self) -> np.ndarray:
        """Active cell centres, shape ``(N, n)`` in C order."""
        axes = [
            lo + (np.arange(self.margin, m - self.margin) + 0.5) * c
            for lo, m, c in zip(self.box.lower, self.box.grid, self.cell)
        ]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.box.n)

    def active_box(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.asarray(self.box.lower) + self.margin * self.cell
        hi = np.asarray(self.box.upper) - self.margin * self.cell
        return lo, hi

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values) * self.weight)


# --- bump window ------------------------------------------------------------------------


def _smoothstep(v):
    """Quintic smoothstep S(v) = 6v^5 - 15v^4 + 10v^3 with its first two derivatives."""
    s = v**3 * (10 - 15 * v + 6 * v**2)
    ds = 30 * v**2 * (1 - v) ** 2
    dds = 60 * v * (1 - v) * (1 - 2 * v)
    return s, ds, dds


def _smoothstep_window(u):
    """phi(u) = S(1 - u^2) on |u| < 1, zero outside; C^2 across |u| = 1."""
    inside = np.abs(u) < 1
    v = np.where(inside, 1 - u**2, 0.0)
    s, ds, dds = _smoothstep(v)
    phi = np.where(inside, s, 0.0)
    dphi = np.where(inside, -2 * u * ds, 0.0)
    ddphi = np.where(inside, 4 * u**2 * dds - 2 * ds, 0.0)
    return phi, dphi, ddphi


POLY_WINDOW_POWER = 16


def _polynomial_window(u, p: int = POLY_WINDOW_POWER):
    """phi(u) = (1 - u^2)^p on |u| < 1, zero outside; C^(p-1) across |u| = 1."""
    inside = np.abs(u) < 1
    v = np.where(inside, 1 - u**2, 0.0)
    phi = v**p
    dphi = -2 * p * u * v ** (p - 1)
    ddphi = 4 * p * (p - 1) * u**2 * v ** (p - 2) - 2 * p * v ** (p - 1)
    return phi, np.where(inside, dphi, 0.0), np.where(inside, ddphi, 0.0)


WINDOWS = {"smoothstep": _smoothstep_window, "polynomial": _polynomial_window}


@dataclass(frozen=True)
class BumpPerturbation:
    """Perturbation b(x) = w(x) * (A + B_t (x^t - c^t) / r^t) supported in a sub-box.

    ``A`` has the shape of the varied field: ``(n, n)`` symmetric for metric
    variables, ``(n, n, n)`` symmetric in the last two slots for connections.
    ``B`` carries one extra leading axis of length n.  The window w is a product
    of one-dimensional profiles: ``"smoothstep"`` is S(1 - u^2) with the quintic
    smoothstep S (C^2), ``"polynomial"`` is (1 - u^2)^16 (C^15).  Either way b and
    its first two partials vanish on and outside the support boundary.  The
    smoother window is the default because the midpoint rule sums total
    derivatives of b to zero only as fast as b is smooth, and second-order
    Lagrangians put up to four derivatives on it.
    """

    lower: np.ndarray = field(compare=False)
    upper: np.ndarray = field(compare=False)
    A: np.ndarray = field(compare=False)
    B: np.ndarray = field(compare=False)
    window: str = "polynomial"

    def __post_init__(self):
        if self.window not in WINDOWS:
            raise ConfigInvalid(f"unknown bump window {self.window!r}")
        for name in ("lower", "upper", "A", "B"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if np.any(self.lower >= self.upper):
            raise ConfigInvalid("bump support must have lower < upper")
        n = self.lower.shape[0]
        if self.B.shape != (n,) + self.A.shape:
            raise ConfigInvalid("bump B must have shape (n,) + A.shape")

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def radius(self) -> np.ndarray:
        return 0.5 * (self.upper - self.lower)

    @classmethod
    def random(
        cls, seed: int, quad: GridQuadrature, connection: bool = False, shrink: float = 0.0, window: str = "polynomial"
    ) -> BumpPerturbation:
        """Seeded bump whose support is the active quadrature box shrunk by ``shrink`` per side."""
        rng = np.random.default_rng(seed)
        lo, hi = quad.active_box()
        pad = shrink * (hi - lo)
        n = quad.box.n
        shape = (n, n, n) if connection else (n, n)

        def sym(a):
            return 0.5 * (a + np.swapaxes(a, -1, -2))

        A = sym(rng.normal(size=shape))
        B = sym(rng.normal(size=(n,) + shape)) * 0.5
        return cls(lo + pad, hi - pad, A, B, window)

    def jet(self, X: np.ndarray):
        """Value, first and second partials; derivative slots follow the batch axes."""
        X = np.asarray(X, dtype=float)
        n = self.n
        u = (X - self.center) / self.radius
        phi, dphi, ddphi = WINDOWS[self.window](u)
        dphi = dphi / self.radius
        ddphi = ddphi / self.radius**2
        w = np.prod(phi, axis=-1)
        dw = np.empty(X.shape)
        ddw = np.empty(X.shape + (n,))
        for a in range(n):
            others = np.prod(np.delete(phi, a, axis=-1), axis=-1)
            dw[..., a] = dphi[..., a] * others
            for b in range(n):
                if a == b:
                    ddw[..., a, a] = ddphi[..., a] * others
                elif b > a:
                    rest = np.prod(np.delete(phi, [a, b], axis=-1), axis=-1)
                    ddw[..., a, b] = ddw[..., b, a] = dphi[..., a] * dphi[..., b] * rest
        k = self.A.ndim
        dc = self.B / self.radius.reshape((n,) + (1,) * k)  # d_a coef
        coef = self.A + np.tensordot(u, self.B, axes=([-1], [0]))
        pad = (1,) * k
        w_ = w.reshape(w.shape + pad)
        dw_ = dw.reshape(dw.shape + pad)
        ddw_ = ddw.reshape(ddw.shape + pad)
        val = w_ * coef
        # d_a b = d_a w coef + w d_a coef
        d1 = dw_ * np.expand_dims(coef, -k - 1) + np.expand_dims(w_, -k - 1) * dc
        # d_a d_b b = d_a d_b w coef + d_a w d_b coef + d_b w d_a coef
        d2 = (
            ddw_ * np.expand_dims(coef, (-k - 2, -k - 1))
            + np.expand_dims(dw_, -k - 1) * dc[None]
            + np.expand_dims(dw_, -k - 2) * dc[:, None]
        )
        return val, d1, d2
