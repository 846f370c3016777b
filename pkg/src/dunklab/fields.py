"""Scalar fields: evaluator plus optional analytic derivatives.

Evaluators are vectorized over the leading axis: shape (m, dim) -> (m,).
``ScalarField.__call__`` also accepts a single point of shape (dim,).
A small zoo of test fields used across experiments lives here, along with
a grid-sampled interpolating field for expensive operator outputs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .measure import Box

_uid_counter = itertools.count(1)


def _fd_step(points: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(points, axis=-1)
    return np.maximum(1e-6, 1e-8 * norms)


@dataclass
class ScalarField:
    """A real-valued field on R^dim.

    Parameters
    ----------
    evaluator : vectorized callable, (m, dim) -> (m,)
    dim : ambient dimension
    gradient : optional vectorized callable, (m, dim) -> (m, dim)
    hessian : optional vectorized callable, (m, dim) -> (m, dim, dim)
    support : optional bounding box outside which the field is negligible
    name : label for caches and reports
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    dim: int
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    hessian: Callable[[np.ndarray], np.ndarray] | None = None
    support: Box | None = None
    name: str = "field"
    uid: int = dc_field(default_factory=lambda: next(_uid_counter))

    def __call__(self, points: np.ndarray):
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        out = np.asarray(self.evaluator(pts), dtype=float)
        return float(out[0]) if single else out

    def grad(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.gradient is not None:
            return np.asarray(self.gradient(pts), dtype=float)
        h = _fd_step(pts)
        out = np.empty_like(pts)
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = 1.0
            out[:, j] = (self(pts + h[:, None] * e)
                         - self(pts - h[:, None] * e)) / (2 * h)
        return out

    def hess(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.hessian is not None:
            return np.asarray(self.hessian(pts), dtype=float)
        # second differences of the gradient; step balances truncation
        # against the noise floor of the inner evaluation
        norms = np.linalg.norm(pts, axis=-1)
        h = np.maximum(1e-5, 1e-7 * norms)
        out = np.empty((pts.shape[0], self.dim, self.dim))
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = 1.0
            gp = self.grad(pts + h[:, None] * e)
            gm = self.grad(pts - h[:, None] * e)
            out[:, :, j] = (gp - gm) / (2 * h[:, None])
        return 0.5 * (out + np.swapaxes(out, 1, 2))

    # ----- derived fields -----

    def scaled(self, c: float) -> "ScalarField":
        grad = (lambda p, g=self.gradient: c * np.asarray(g(p))) \
            if self.gradient else None
        return ScalarField(lambda p: c * self.evaluator(p), self.dim,
                           gradient=grad, support=self.support,
                           name=f"{c}*{self.name}")

    def plus_const(self, c: float) -> "ScalarField":
        return ScalarField(lambda p: self.evaluator(p) + c, self.dim,
                           gradient=self.gradient, support=None,
                           name=f"{self.name}+{c}")

    def times(self, other: "ScalarField") -> "ScalarField":
        support = self.support if other.support is None else other.support
        return ScalarField(lambda p: np.asarray(self.evaluator(p))
                           * np.asarray(other.evaluator(p)),
                           self.dim, support=support,
                           name=f"{self.name}*{other.name}")

    def plus(self, other: "ScalarField") -> "ScalarField":
        support = None
        if self.support is not None and other.support is not None:
            support = Box(
                tuple(min(a, b) for a, b in zip(self.support.lo,
                                                other.support.lo)),
                tuple(max(a, b) for a, b in zip(self.support.hi,
                                                other.support.hi)))
        return ScalarField(lambda p: np.asarray(self.evaluator(p))
                           + np.asarray(other.evaluator(p)),
                           self.dim, support=support,
                           name=f"{self.name}+{other.name}")

    def abs_power(self, s: float) -> "ScalarField":
        return ScalarField(lambda p: np.abs(self.evaluator(p)) ** s,
                           self.dim, support=self.support,
                           name=f"|{self.name}|^{s}")

    def dilated(self, t: float) -> "ScalarField":
        """x -> f(t x)."""
        support = None
        if self.support is not None:
            support = Box(tuple(v / t for v in self.support.lo),
                          tuple(v / t for v in self.support.hi))
        return ScalarField(lambda p: self.evaluator(t * np.asarray(p)),
                           self.dim, support=support,
                           name=f"{self.name}(t={t})")


def constant(dim: int, value: float) -> ScalarField:
    return ScalarField(lambda p: np.full(p.shape[0], float(value)), dim,
                       gradient=lambda p: np.zeros_like(p),
                       hessian=lambda p: np.zeros((p.shape[0], dim, dim)),
                       name=f"const({value})")


def coordinate(dim: int, j: int) -> ScalarField:
    def grad(p):
        g = np.zeros_like(p)
        g[:, j] = 1.0
        return g
    return ScalarField(lambda p: p[:, j].copy(), dim, gradient=grad,
                       hessian=lambda p: np.zeros((p.shape[0], dim, dim)),
                       name=f"x_{j}")


def gaussian_bump(dim: int, center, width: float, amplitude: float = 1.0
                  ) -> ScalarField:
    c = np.asarray(center, dtype=float)
    w2 = float(width) ** 2

    def ev(p):
        d = p - c
        return amplitude * np.exp(-np.einsum("ij,ij->i", d, d) / (2 * w2))

    def gr(p):
        d = p - c
        return ev(p)[:, None] * (-d / w2)

    def he(p):
        d = p - c
        v = ev(p)
        eye = np.eye(dim)
        return v[:, None, None] * (np.einsum("ia,ib->iab", d, d) / w2 ** 2
                                   - eye[None, :, :] / w2)

    half = 9.0 * float(width)
    support = Box(tuple(c - half), tuple(c + half))
    return ScalarField(ev, dim, gradient=gr, hessian=he, support=support,
                       name=f"bump@{tuple(np.round(c, 3))}w{width}")


def bump_sum(dim: int, rng: np.random.Generator, n: int, box_half: float,
             width_range: tuple[float, float] = (0.3, 0.9)) -> ScalarField:
    """Deterministic (given rng) sum of n Gaussian bumps inside a box."""
    centers = rng.uniform(-box_half * 0.6, box_half * 0.6, size=(n, dim))
    widths = rng.uniform(*width_range, size=n)
    amps = rng.uniform(0.5, 2.0, size=n) * rng.choice([-1.0, 1.0], size=n)
    parts = [gaussian_bump(dim, centers[i], widths[i], amps[i])
             for i in range(n)]

    def ev(p):
        return np.sum([f.evaluator(p) for f in parts], axis=0)

    def gr(p):
        return np.sum([f.gradient(p) for f in parts], axis=0)

    half = box_half
    support = Box((-half,) * dim, (half,) * dim)
    return ScalarField(ev, dim, gradient=gr, support=support,
                       name=f"bumps(n={n})")


def log_norm(dim: int) -> ScalarField:
    """log |x|; the canonical unbounded symbol with bounded oscillation."""
    def ev(p):
        r = np.linalg.norm(p, axis=-1)
        return np.log(np.maximum(r, 1e-300))
    def gr(p):
        r2 = np.einsum("ij,ij->i", p, p)
        return p / np.maximum(r2, 1e-300)[:, None]
    return ScalarField(ev, dim, gradient=gr, name="log|x|")


def sign_coordinate(dim: int, j: int = 0) -> ScalarField:
    return ScalarField(lambda p: np.sign(p[:, j]), dim, name=f"sign(x_{j})")


def smooth_compact_bump(dim: int, radius: float = 2.0,
                        center=None) -> ScalarField:
    """C^1 compactly supported Lipschitz bump: (1 - (|x-c|/R)^2)^2 inside."""
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    R = float(radius)

    def ev(p):
        d = p - c
        u = 1.0 - np.einsum("ij,ij->i", d, d) / R ** 2
        return np.where(u > 0, u * u, 0.0)

    def gr(p):
        d = p - c
        u = 1.0 - np.einsum("ij,ij->i", d, d) / R ** 2
        coef = np.where(u > 0, -4.0 * u / R ** 2, 0.0)
        return coef[:, None] * d

    support = Box(tuple(c - R), tuple(c + R))
    return ScalarField(ev, dim, gradient=gr, support=support,
                       name=f"compact-bump R={R}")


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def mollified_ball_indicator(dim: int, center, radius: float, eps: float
                             ) -> ScalarField:
    """1 inside the ball, 0 outside, smoothed over a shell of width eps."""
    c = np.asarray(center, dtype=float)

    def ev(p):
        r = np.linalg.norm(p - c, axis=-1)
        return _smoothstep((radius - r) / eps + 0.5)

    support = Box(tuple(c - (radius + eps)), tuple(c + (radius + eps)))
    return ScalarField(ev, dim, support=support,
                       name=f"ind-ball r={radius}")


def level_cut(symbol: ScalarField, threshold: float, sense: str,
              eps: float) -> ScalarField:
    """Mollified indicator of {symbol < threshold} or {symbol > threshold}."""
    if sense not in ("below", "above"):
        raise ValueError(f"sense must be 'below' or 'above', got {sense!r}")
    sgn = 1.0 if sense == "below" else -1.0

    def ev(p):
        return _smoothstep(sgn * (threshold - symbol.evaluator(p)) / eps + 0.5)

    return ScalarField(ev, symbol.dim,
                       name=f"cut({symbol.name}{'<' if sgn > 0 else '>'}{threshold:.3g})")


def gridded(source: Callable[[np.ndarray], np.ndarray], dim: int, box: Box,
            n: int = 96, name: str = "gridded") -> ScalarField:
    """Sample ``source`` on a regular grid over ``box`` and interpolate.

    Used to make expensive operator outputs cheap to re-evaluate in
    maximal-function and norm sweeps.  Cubic interpolation inside the box,
    zero outside.
    """
    axes = [np.linspace(box.lo[i], box.hi[i], n) for i in range(dim)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    vals = np.asarray(source(pts), dtype=float).reshape([n] * dim)
    interp = RegularGridInterpolator(axes, vals, method="cubic",
                                     bounds_error=False, fill_value=0.0)

    def ev(p):
        return interp(p)

    return ScalarField(ev, dim, support=box, name=name)
