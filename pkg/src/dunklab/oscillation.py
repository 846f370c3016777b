"""Maximal functions, medians, oscillations, and BMO/VMO-type norms.

All means are taken against the reflection-invariant weighted measure.
Suprema over balls are approximated by finite dyadic families: radii on a
binary scale, centers on a lattice of spacing r/2 clipped to a domain box.
Reported norms are therefore lower approximations; reports carry the
family descriptor so runs are comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Literal

import numpy as np
from scipy.optimize import brentq

from .errors import BetaOutOfRange, EmptyFamily
from .fields import ScalarField, _smoothstep
from .measure import BallSpec, Box, DunklMeasure, Region
from .quadrature import merge_intervals

Variant = Literal["dunkl", "central", "dunkl-metric"]

DEGENERATE_BALL = 1e-14
MEDIAN_ITERS = 60


@dataclass(frozen=True)
class BallFamily:
    """Finite family of balls standing in for a supremum domain."""

    balls: tuple[BallSpec, ...]
    constraint: str = "all"
    descriptor: str = ""

    def __post_init__(self):
        if not self.balls:
            raise EmptyFamily("ball family is empty")

    def containing(self, x: np.ndarray) -> "BallFamily":
        x = np.asarray(x, dtype=float)
        kept = tuple(b for b in self.balls
                     if np.linalg.norm(x - np.asarray(b.center)) < b.radius)
        if not kept:
            raise EmptyFamily(
                f"no family ball contains the point {x.tolist()}")
        return BallFamily(kept, self.constraint,
                          self.descriptor + "|containing")

    @staticmethod
    def dyadic(dim: int, k_min: int = -4, k_max: int = 4,
               box_half: float = 8.0, constraint: str = "all",
               max_centers_per_radius: int = 120,
               orbit: bool = False) -> "BallFamily":
        """Radii 2^k, centers on a lattice of spacing r/2 inside the box.

        ``constraint``: "all" keeps every lattice ball, "contains-origin"
        keeps balls with 0 strictly inside.  When a radius produces more
        lattice centers than the cap, centers are thinned by a fixed
        stride (deterministic).
        """
        balls: list[BallSpec] = []
        for k in range(k_min, k_max + 1):
            r = 2.0 ** k
            if constraint == "contains-origin":
                half = min(box_half, 0.999 * r)
            else:
                half = box_half
            step = r / 2.0
            n = int(math.floor(half / step))
            axis = np.arange(-n, n + 1) * step
            grids = np.meshgrid(*([axis] * dim), indexing="ij")
            centers = np.stack([g.ravel() for g in grids], axis=-1)
            if constraint == "contains-origin":
                keep = np.linalg.norm(centers, axis=1) < r
                centers = centers[keep]
            if centers.shape[0] > max_centers_per_radius:
                stride = int(math.ceil(centers.shape[0]
                                       / max_centers_per_radius))
                centers = centers[::stride]
            for c in centers:
                balls.append(BallSpec(center=tuple(float(v) for v in c),
                                      radius=r, orbit=orbit))
        desc = (f"dyadic[k={k_min}..{k_max},box={box_half},"
                f"constraint={constraint},cap={max_centers_per_radius}"
                f"{',orbit' if orbit else ''}]")
        return BallFamily(tuple(balls), constraint, desc)


@dataclass
class OscillationStats:
    """Per-ball oscillation data plus the family aggregate."""

    means: list[float] = dc_field(default_factory=list)
    deviations: list[float] = dc_field(default_factory=list)
    p_deviations: list[float] = dc_field(default_factory=list)
    sup_deviation: float = 0.0
    sup_p_deviation: float = 0.0
    skipped: int = 0


def _ball_region(ball: BallSpec) -> Region:
    return ball


def ball_mean(measure: DunklMeasure, f: ScalarField, ball: BallSpec,
              rel_tol: float = 1e-7) -> tuple[float, float]:
    """(mean of f over the ball, ball measure)."""
    vol = measure.ball_volume(np.asarray(ball.center), ball.radius,
                              orbit=ball.orbit)
    total = measure.integrate(lambda p: f(p), _ball_region(ball),
                              rel_tol=rel_tol)
    return total / vol, vol


def _is_exactly_constant(f: ScalarField, nodes: np.ndarray) -> bool:
    vals = f(nodes)
    return float(np.max(vals)) == float(np.min(vals))


def _deviation_integral(measure: DunklMeasure, b: ScalarField,
                        ball: BallSpec, mean: float, p: float,
                        rel_tol: float) -> float:
    """Integral of |b - mean|^p over the ball region.

    |b - mean| is kinked where b crosses the mean; in one dimension the
    crossings become panel marks, restoring spectral accuracy.  In higher
    dimensions the kink is a curve, so the tolerance is capped at 1e-5.
    """
    if len(ball.center) == 1:
        total = 0.0
        for lo, hi in _intervals_1d(ball):
            marks = tuple(_crossings_1d(b, lo, hi, mean))
            total += measure.integrate(
                lambda q: np.abs(np.asarray(b(q)) - mean) ** p,
                Box((lo,), (hi,)), rel_tol=rel_tol,
                extra_marks=(marks,), cache=False)
        return total
    return measure.integrate(lambda q: np.abs(b(q) - mean) ** p,
                             _ball_region(ball),
                             rel_tol=max(rel_tol, 1e-5))


def oscillation(measure: DunklMeasure, b: ScalarField, ball: BallSpec,
                p: float = 1.0, rel_tol: float = 1e-7) -> float:
    """p-mean oscillation (1/w(B) int |b - b_B|^p dw)^(1/p).

    Exactly 0.0 for a field that is constant on the probe scheme.
    """
    region = _ball_region(ball)
    probe = measure.scheme(region, level=1)
    if _is_exactly_constant(b, probe.nodes):
        return 0.0
    mean, vol = ball_mean(measure, b, ball, rel_tol=rel_tol)
    dev = _deviation_integral(measure, b, ball, mean, p, rel_tol)
    return (dev / vol) ** (1.0 / p)


def hl_maximal(measure: DunklMeasure, f: ScalarField, x: np.ndarray,
               family: BallFamily, rel_tol: float = 1e-6) -> float:
    """Hardy-Littlewood maximal function over the family balls at x."""
    return fractional_maximal(measure, 0.0, f, x, family, rel_tol=rel_tol)


def fractional_maximal(measure: DunklMeasure, beta: float, f: ScalarField,
                       x: np.ndarray, family: BallFamily,
                       rel_tol: float = 1e-6) -> float:
    """sup over balls containing x of w(B)^(beta/N - 1) int_B |f| dw."""
    hdim = float(measure.setting.constants.homogeneous_dim)
    if not (0.0 <= beta < hdim):
        raise BetaOutOfRange(
            f"fractional order must lie in [0, {hdim}), got {beta}")
    sub = family.containing(np.asarray(x, dtype=float))
    best = 0.0
    for ball in sub.balls:
        vol = measure.ball_volume(np.asarray(ball.center), ball.radius,
                                  orbit=ball.orbit)
        if vol < DEGENERATE_BALL:
            continue
        total = measure.integrate(lambda p: np.abs(f(p)),
                                  _ball_region(ball), rel_tol=rel_tol)
        best = max(best, total / vol ** (1.0 - beta / hdim))
    return best


def sharp_maximal(measure: DunklMeasure, f: ScalarField, x: np.ndarray,
                  family: BallFamily, rel_tol: float = 1e-6) -> float:
    """sup over balls containing x of the mean deviation from the mean."""
    sub = family.containing(np.asarray(x, dtype=float))
    best = 0.0
    for ball in sub.balls:
        best = max(best, oscillation(measure, f, ball, rel_tol=rel_tol))
    return best


def bmo_norm(measure: DunklMeasure, b: ScalarField, variant: Variant,
             family: BallFamily, p: float = 1.0,
             rel_tol: float = 1e-7) -> float:
    """Finite-family BMO-type norm.

    variant "dunkl": plain mean oscillation over Euclidean balls.
    variant "central": same, family must carry origin-containing balls.
    variant "dunkl-metric": oscillation over orbits of balls, with means
    against the measure of the orbit set.
    """
    stats = family_stats(measure, b, variant, family, p=p, rel_tol=rel_tol)
    return stats.sup_p_deviation if p != 1.0 else stats.sup_deviation


def family_stats(measure: DunklMeasure, b: ScalarField, variant: Variant,
                 family: BallFamily, p: float = 1.0,
                 rel_tol: float = 1e-7) -> OscillationStats:
    if variant not in ("dunkl", "central", "dunkl-metric"):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "central" and family.constraint != "contains-origin":
        raise ValueError("central variant needs an origin-ball family")
    out = OscillationStats()
    orbit = variant == "dunkl-metric"
    for ball in family.balls:
        spec = BallSpec(ball.center, ball.radius, orbit=orbit)
        vol = measure.ball_volume(np.asarray(spec.center), spec.radius,
                                  orbit=orbit)
        if vol < DEGENERATE_BALL:
            out.skipped += 1
            continue
        region = _ball_region(spec)
        probe = measure.scheme(region, level=1)
        if _is_exactly_constant(b, probe.nodes):
            out.means.append(float(b(np.asarray(spec.center))))
            out.deviations.append(0.0)
            out.p_deviations.append(0.0)
            continue
        mean = measure.integrate(lambda q: b(q), region,
                                 rel_tol=rel_tol) / vol
        dev = _deviation_integral(measure, b, spec, mean, 1.0,
                                  rel_tol) / vol
        if p != 1.0:
            pdev = (_deviation_integral(measure, b, spec, mean, p,
                                        rel_tol) / vol) ** (1.0 / p)
        else:
            pdev = dev
        out.means.append(mean)
        out.deviations.append(dev)
        out.p_deviations.append(pdev)
    if out.deviations:
        out.sup_deviation = max(out.deviations)
        out.sup_p_deviation = max(out.p_deviations)
    return out


@dataclass
class PmeanReport:
    p: float
    sup_p: float
    sup_1: float
    ratio: float
    n_balls: int


def bmo_pmean_equivalence(measure: DunklMeasure, b: ScalarField, p: float,
                          family: BallFamily, variant: Variant = "dunkl-metric",
                          rel_tol: float = 1e-7) -> PmeanReport:
    """Ratio of the p-mean oscillation sup to the 1-mean sup.

    Power-mean monotonicity forces ratio >= 1; equivalence holds when it
    is also bounded.  Both sups 0 (constant b) reports ratio 1.
    """
    if p < 1.0:
        raise ValueError(f"exponent must be >= 1, got {p}")
    stats = family_stats(measure, b, variant, family, p=p, rel_tol=rel_tol)
    if stats.sup_deviation == 0.0 and stats.sup_p_deviation == 0.0:
        ratio = 1.0
    else:
        ratio = stats.sup_p_deviation / stats.sup_deviation
    return PmeanReport(p=p, sup_p=stats.sup_p_deviation,
                       sup_1=stats.sup_deviation, ratio=ratio,
                       n_balls=len(stats.deviations))


def _intervals_1d(ball: BallSpec) -> list[tuple[float, float]]:
    c, r = ball.center[0], ball.radius
    pieces = [(c - r, c + r)]
    if ball.orbit:
        pieces.append((-c - r, -c + r))
    return merge_intervals(pieces)


def _crossings_1d(b: ScalarField, lo: float, hi: float, m: float,
                  n_samples: int = 4096) -> list[float]:
    """Sign-change roots of b - m on [lo, hi] from a dense scan."""
    xs = np.linspace(lo, hi, n_samples)
    vals = np.asarray(b(xs[:, None]), dtype=float) - m
    sgn = np.sign(vals)
    roots: list[float] = []

    def g(t: float) -> float:
        return float(b(np.array([[t]]))) - m

    for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]:
        roots.append(float(brentq(g, xs[i], xs[i + 1],
                                  xtol=1e-15, rtol=8.9e-16)))
    roots.extend(float(x) for x in xs[sgn == 0.0])
    return sorted(roots)


def _superlevel_exact_1d(measure: DunklMeasure, b: ScalarField,
                         ball: BallSpec, m: float) -> float:
    """w({b > m} within the 1D region), closed-form per crossing piece."""
    total = 0.0
    for lo, hi in _intervals_1d(ball):
        cuts = [lo] + _crossings_1d(b, lo, hi, m) + [hi]
        keep = []
        for a, c in zip(cuts[:-1], cuts[1:]):
            if c > a and float(b(np.array([[0.5 * (a + c)]]))) > m:
                keep.append((a, c))
        if keep:
            total += measure._interval_union_measure_exact(keep)
    return total


def median(measure: DunklMeasure, b: ScalarField, ball: BallSpec,
           level: int = 3, iters: int = MEDIAN_ITERS) -> float:
    """A median of b over the ball under the weighted measure.

    Returns the infimum of values m with w({b > m}) <= w(B)/2, located by
    bisection; ties resolve downward.  In one dimension the level-set
    measure is evaluated in closed form after locating the crossings, so
    the result carries only root-finding error.  In higher dimensions the
    bisection runs on a frozen quadrature scheme and the half-measure
    inequalities are exact on that scheme (quantized to its nodes).
    """
    region = _ball_region(ball)
    if len(ball.center) == 1:
        lo_v, hi_v = np.inf, -np.inf
        for lo, hi in _intervals_1d(ball):
            vals = np.asarray(b(np.linspace(lo, hi, 2048)[:, None]))
            lo_v = min(lo_v, float(np.min(vals)))
            hi_v = max(hi_v, float(np.max(vals)))
        if lo_v == hi_v:
            return lo_v
        half = 0.5 * measure.ball_volume(np.asarray(ball.center),
                                         ball.radius, orbit=ball.orbit)
        for _ in range(iters):
            mid = 0.5 * (lo_v + hi_v)
            if _superlevel_exact_1d(measure, b, ball, mid) <= half:
                hi_v = mid
            else:
                lo_v = mid
        return hi_v
    scheme = measure.scheme(region, level=level)
    vals = np.asarray(b(scheme.nodes), dtype=float)
    w = scheme.weights
    lo_v = float(np.min(vals))
    hi_v = float(np.max(vals))
    if lo_v == hi_v:
        return lo_v
    half = 0.5 * float(np.sum(w))
    for _ in range(iters):
        mid = 0.5 * (lo_v + hi_v)
        if float(np.sum(w[vals > mid])) <= half:
            hi_v = mid
        else:
            lo_v = mid
    return hi_v


def superlevel_measure(measure: DunklMeasure, b: ScalarField, ball: BallSpec,
                       m: float, sense: str = "above", eps: float | None = None,
                       level: int = 3) -> float:
    """Quadrature measure of {b > m} (or {b < m}) within the ball.

    The indicator is smoothed over a value-band eps; in one dimension
    the crossings of b - m are located first and handed to the graded
    quadrature as panel marks, which makes the smoothed step piecewise
    polynomial and lets the rule integrate it exactly.  Higher dimensions
    fall back to a smoothed sum on the frozen scheme.
    """
    if sense not in ("above", "below"):
        raise ValueError(f"sense must be 'above' or 'below', got {sense!r}")
    sgn = 1.0 if sense == "above" else -1.0
    if len(ball.center) == 1:
        total = 0.0
        for lo, hi in _intervals_1d(ball):
            roots = _crossings_1d(b, lo, hi, m)
            if eps is None:
                vals = np.asarray(b(np.linspace(lo, hi, 512)[:, None]))
                band = max(1e-9 * float(np.max(vals) - np.min(vals)), 1e-300)
            else:
                band = eps
            marks = []
            for r0 in roots:
                marks.extend((r0 - band, r0, r0 + band))
            marks = [v for v in marks if lo < v < hi]
            total += measure.integrate(
                lambda q: _smoothstep(sgn * (np.asarray(b(q)) - m) / band
                                      + 0.5),
                Box((lo,), (hi,)), rel_tol=1e-9,
                extra_marks=(tuple(marks),), cache=False)
        return total
    scheme = measure.scheme(_ball_region(ball), level=level)
    vals = np.asarray(b(scheme.nodes), dtype=float)
    if eps is None:
        eps = max(1e-9 * float(np.max(vals) - np.min(vals)), 1e-300)
    t = sgn * (vals - m) / eps + 0.5
    return float(np.sum(scheme.weights * _smoothstep(t)))


@dataclass
class CurvePoint:
    parameter: float
    sup_oscillation: float
    n_balls: int


def vmo_diagnostics(measure: DunklMeasure, b: ScalarField,
                    variant: Variant = "dunkl",
                    small_radii: Iterable[float] = (0.5, 0.25, 0.125, 0.0625),
                    large_radii: Iterable[float] = (4.0, 8.0, 16.0, 32.0),
                    far_distances: Iterable[float] = (4.0, 8.0, 16.0, 32.0),
                    centers_per_radius: int = 12,
                    anchor_center: tuple[float, ...] | None = None,
                    rel_tol: float = 1e-6) -> dict[str, list[CurvePoint]]:
    """Three oscillation-decay sweeps: small radii, large radii, far balls.

    Emits monotone-binned curves of the per-bin oscillation sup; trends —
    never limits — are what the report claims.  The far-ball sweep uses
    unit radius and centers at the given distances along coordinate rays.
    """
    dim = measure.setting.dim
    orbit = variant == "dunkl-metric"
    anchor = np.zeros(dim) if anchor_center is None \
        else np.asarray(anchor_center, dtype=float)

    def sweep_radius(radii) -> list[CurvePoint]:
        pts = []
        for r in radii:
            sup, count = 0.0, 0
            offsets = np.linspace(-1.5 * r, 1.5 * r, centers_per_radius)
            for off in offsets:
                center = anchor.copy()
                center[0] += off
                if variant == "central" and np.linalg.norm(center) >= r:
                    continue
                ball = BallSpec(tuple(center), r, orbit=orbit)
                sup = max(sup, oscillation(measure, b, ball,
                                           rel_tol=rel_tol))
                count += 1
            pts.append(CurvePoint(float(r), sup, count))
        return pts

    def sweep_far(distances) -> list[CurvePoint]:
        pts = []
        for dist in distances:
            sup, count = 0.0, 0
            for axis in range(dim):
                for sign in (1.0, -1.0):
                    center = np.zeros(dim)
                    center[axis] = sign * dist
                    ball = BallSpec(tuple(center), 1.0, orbit=orbit)
                    sup = max(sup, oscillation(measure, b, ball,
                                               rel_tol=rel_tol))
                    count += 1
            pts.append(CurvePoint(float(dist), sup, count))
        return pts

    return {"small-r": sweep_radius(small_radii),
            "large-r": sweep_radius(large_radii),
            "far-ball": sweep_far(far_distances)}
