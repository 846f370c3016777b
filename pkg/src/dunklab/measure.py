"""The reflection-invariant weighted measure and its quadrature.

Integration against ``h(x) dx`` where ``h`` is the singular product weight
of a root system.  Schemes are assembled from graded Gauss-Legendre panels
whose subdivision is aligned with the weight's zero hyperplanes, so the
algebraic kinks of ``h`` never sit inside a panel.  Balls use polar panels
around the center; orbit balls (unions of a ball's group images) use slice
decompositions whose per-slice geometry (interval unions) is exact for
arbitrary overlap patterns.

Supported regions: boxes and (orbit) balls in dimension 1 and 2 for any
root system, and in dimension 3 for coordinate sign groups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NoConvergence, UnsupportedGroup
from .geometry import Setting
from .quadrature import (graded_panels, line_rule, merge_intervals,
                         panel_nodes)

#: Relative tolerance for measure quantities (volumes, normalizations).
MEASURE_REL_TOL = 1e-7

#: Looser tolerance for quantities feeding bound checks downstream.
BOUND_REL_TOL = 1e-5


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by corner tuples."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if len(self.lo) != len(self.hi):
            raise ValueError("box corners must have equal length")
        if any(h < l for l, h in zip(self.lo, self.hi)):
            raise ValueError("box upper corner must dominate lower corner")

    @property
    def dim(self) -> int:
        return len(self.lo)


@dataclass(frozen=True)
class BallSpec:
    """A Euclidean ball, or the union of its group images when orbit=True."""

    center: tuple[float, ...]
    radius: float
    orbit: bool = False

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0.0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return len(self.center)


Region = Box | BallSpec


@dataclass(frozen=True)
class QuadratureScheme:
    """Nodes and weights for integration against the weighted measure.

    ``weights`` already include the weight ``h``, so ``weights @ f(nodes)``
    approximates the integral of ``f h dx`` over the region.
    """

    nodes: np.ndarray
    weights: np.ndarray
    region: Region
    level: int

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(self.weights @ np.asarray(f(self.nodes), dtype=float))


def _region_key(region: Region) -> tuple:
    if isinstance(region, Box):
        return ("box", tuple(np.round(region.lo, 12)), tuple(np.round(region.hi, 12)))
    return ("ball", tuple(np.round(region.center, 12)),
            round(region.radius, 12), region.orbit)


@dataclass(frozen=True)
class _Level:
    n_line: int
    depth_line: int
    n_theta: int
    n_rad: int
    depth_rad: int

    @classmethod
    def of(cls, level: int) -> "_Level":
        level = max(0, level)
        return cls(n_line=10 + 6 * level,
                   depth_line=min(12 + 4 * level, 26),
                   n_theta=8 + 5 * level,
                   n_rad=8 + 4 * level,
                   depth_rad=min(10 + 4 * level, 26))


def _lines_2d(setting: Setting) -> list[tuple[np.ndarray, float]]:
    """Distinct weight zero-lines in the plane as (alpha, summed exponent)."""
    lines: list[tuple[np.ndarray, float]] = []
    for alpha, k in zip(setting.root_system.roots, setting.root_system.kappa):
        if k == 0.0:
            continue
        for vec, _ in lines:
            if np.allclose(alpha, vec) or np.allclose(alpha, -vec):
                break
        else:
            lines.append((alpha.copy(), 0.0))
    out = []
    for vec, _ in lines:
        expo = sum(float(k) for a, k in
                   zip(setting.root_system.roots, setting.root_system.kappa)
                   if np.allclose(a, vec) or np.allclose(a, -vec))
        out.append((vec, expo))
    return out


class DunklMeasure:
    """Quadrature-backed access to the weighted measure of a setting."""

    def __init__(self, setting: Setting, rel_tol: float = MEASURE_REL_TOL):
        self.setting = setting
        self.rel_tol = rel_tol
        self._scheme_cache: dict[tuple, QuadratureScheme] = {}
        self._axis_ks = setting.axis_multiplicities()
        self._c_kappa: float | None = None

    # ----- exact helpers for coordinate sign groups -----

    def _axis_antideriv(self, axis: int, s: np.ndarray) -> np.ndarray:
        k = float(self._axis_ks[axis])
        return 2.0 ** k * np.sign(s) * np.abs(s) ** (2 * k + 1) / (2 * k + 1)

    def box_measure_exact(self, box: Box) -> float:
        """Closed-form box measure, available for coordinate sign groups."""
        if self._axis_ks is None:
            raise UnsupportedGroup("closed-form box measure needs a sign group")
        val = 1.0
        for i in range(box.dim):
            val *= float(self._axis_antideriv(i, np.array(box.hi[i]))
                         - self._axis_antideriv(i, np.array(box.lo[i])))
        return val

    def _interval_union_measure_exact(self, intervals) -> float:
        total = 0.0
        for lo, hi in intervals:
            total += float(self._axis_antideriv(0, np.array(hi))
                           - self._axis_antideriv(0, np.array(lo)))
        return total

    # ----- scheme construction -----

    def scheme(self, region: Region, level: int = 1,
               extra_marks: tuple[tuple[float, ...], ...] | None = None,
               cache: bool = True) -> QuadratureScheme:
        mk = None
        if extra_marks is not None:
            mk = tuple(tuple(round(float(v), 12) for v in axis_marks)
                       for axis_marks in extra_marks)
        key = (_region_key(region), level, mk)
        cached = self._scheme_cache.get(key)
        if cached is not None:
            return cached
        if region.dim != self.setting.dim:
            raise ValueError(f"region dimension {region.dim} does not match "
                             f"setting dimension {self.setting.dim}")
        par = _Level.of(level)
        if isinstance(region, Box):
            nodes, wgeom = self._build_box(region, par, extra_marks)
        elif not region.orbit:
            nodes, wgeom = self._build_ball(np.array(region.center),
                                            region.radius, par)
        else:
            nodes, wgeom = self._build_orbit_ball(np.array(region.center),
                                                  region.radius, par)
        weights = wgeom * self.setting.weight(nodes)
        scheme = QuadratureScheme(nodes=nodes, weights=weights,
                                  region=region, level=level)
        if cache:
            self._scheme_cache[key] = scheme
        return scheme

    def _build_box(self, box: Box, par: _Level,
                   extra: tuple[tuple[float, ...], ...] | None = None
                   ) -> tuple[np.ndarray, np.ndarray]:
        dim = box.dim
        ex = [list(e) for e in extra] if extra is not None else [[]] * dim
        if dim == 1:
            marks = [0.0] if self.setting.root_system.roots.shape[0] else []
            x, w = line_rule(box.lo[0], box.hi[0], marks + ex[0],
                             n=par.n_line, depth=par.depth_line)
            return x[:, None], w
        if dim == 2:
            return self._build_box_2d(box, par, ex)
        if dim == 3 and self._axis_ks is not None:
            rules = [line_rule(box.lo[i], box.hi[i],
                               ([0.0] if self._axis_ks[i] != 0 else [])
                               + ex[i],
                               n=par.n_line, depth=par.depth_line)
                     for i in range(3)]
            grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
            nodes = np.stack([g.ravel() for g in grids], axis=-1)
            w = (rules[0][1][:, None, None] * rules[1][1][None, :, None]
                 * rules[2][1][None, None, :]).ravel()
            return nodes, w
        raise UnsupportedGroup(
            f"box quadrature unsupported for dim={dim} with this group")

    def _build_box_2d(self, box: Box, par: _Level,
                      ex: list[list[float]] | None = None
                      ) -> tuple[np.ndarray, np.ndarray]:
        lines = _lines_2d(self.setting)
        lo1, lo2 = box.lo
        hi1, hi2 = box.hi
        outer_marks: list[float] = list(ex[0]) if ex else []
        extra_inner: list[float] = list(ex[1]) if ex else []
        for vec, _ in lines:
            if abs(vec[1]) < 1e-14:
                outer_marks.append(0.0)
            else:
                # x1 positions where the line's zero enters/exits the x2-range
                if abs(vec[0]) > 1e-14:
                    outer_marks.extend([-vec[1] * lo2 / vec[0],
                                        -vec[1] * hi2 / vec[0]])
                else:
                    pass  # horizontal line x2 = 0 crosses every slice
        x1, w1 = line_rule(lo1, hi1, outer_marks, n=par.n_line,
                           depth=par.depth_line)
        pts, wts = [], []
        for a, wa in zip(x1, w1):
            inner_marks = [-vec[0] * a / vec[1] for vec, _ in lines
                           if abs(vec[1]) > 1e-14]
            x2, w2 = line_rule(lo2, hi2, inner_marks + extra_inner,
                               n=par.n_line, depth=par.depth_line)
            pts.append(np.stack([np.full_like(x2, a), x2], axis=-1))
            wts.append(wa * w2)
        return np.concatenate(pts), np.concatenate(wts)

    def _build_ball(self, center: np.ndarray, radius: float, par: _Level
                    ) -> tuple[np.ndarray, np.ndarray]:
        dim = center.size
        if dim == 1:
            marks = [0.0] if self.setting.root_system.roots.shape[0] else []
            x, w = line_rule(center[0] - radius, center[0] + radius, marks,
                             n=par.n_line, depth=par.depth_line)
            return x[:, None], w
        if dim == 2:
            lines = _lines_2d(self.setting)
            pts, w = _polar_disc(lines, center, radius, par)
            return pts, w
        if dim == 3 and self._axis_ks is not None:
            return self._build_ball_3d(center, radius, par)
        raise UnsupportedGroup(
            f"ball quadrature unsupported for dim={dim} with this group")

    def _build_ball_3d(self, center: np.ndarray, radius: float, par: _Level
                       ) -> tuple[np.ndarray, np.ndarray]:
        lines = []
        for axis in (1, 2):
            if self._axis_ks[axis] != 0:
                vec = np.zeros(2)
                vec[axis - 1] = np.sqrt(2.0)
                lines.append((vec, 2 * float(self._axis_ks[axis])))
        marks = [center[0] - radius, center[0] + radius]
        if self._axis_ks[0] != 0:
            marks.append(0.0)
        x1, w1 = line_rule(center[0] - radius, center[0] + radius, marks,
                           n=par.n_line, depth=par.depth_line)
        pts, wts = [], []
        for a, wa in zip(x1, w1):
            chord = radius * radius - (a - center[0]) ** 2
            if chord <= 0:
                continue
            sub, wsub = _polar_disc(lines, center[1:], math.sqrt(chord), par)
            full = np.concatenate(
                [np.full((sub.shape[0], 1), a), sub], axis=1)
            pts.append(full)
            wts.append(wa * wsub)
        return np.concatenate(pts), np.concatenate(wts)

    def _build_orbit_ball(self, center: np.ndarray, radius: float, par: _Level
                          ) -> tuple[np.ndarray, np.ndarray]:
        centers = self.setting.orbit_of(center)
        if centers.shape[0] == 1:
            return self._build_ball(centers[0], radius, par)
        dim = center.size
        if dim == 1:
            intervals = merge_intervals(
                [(c[0] - radius, c[0] + radius) for c in centers])
            marks = [0.0] if self.setting.root_system.roots.shape[0] else []
            xs, ws = [], []
            for lo, hi in intervals:
                x, w = line_rule(lo, hi, marks, n=par.n_line,
                                 depth=par.depth_line)
                xs.append(x)
                ws.append(w)
            return np.concatenate(xs)[:, None], np.concatenate(ws)
        if dim == 2:
            lines = _lines_2d(self.setting)
            discs = [(c, radius) for c in centers]
            return _slice_union(lines, discs, par)
        if dim == 3 and self._axis_ks is not None:
            return self._build_orbit_ball_3d(centers, radius, par)
        raise UnsupportedGroup(
            f"orbit-ball quadrature unsupported for dim={dim} with this group")

    def _build_orbit_ball_3d(self, centers: np.ndarray, radius: float,
                             par: _Level) -> tuple[np.ndarray, np.ndarray]:
        lines = []
        for axis in (1, 2):
            if self._axis_ks[axis] != 0:
                vec = np.zeros(2)
                vec[axis - 1] = np.sqrt(2.0)
                lines.append((vec, 2 * float(self._axis_ks[axis])))
        intervals = merge_intervals(
            [(c[0] - radius, c[0] + radius) for c in centers])
        marks = [0.0]
        for c in centers:
            marks.extend([c[0] - radius, c[0] + radius])
        pts, wts = [], []
        for lo, hi in intervals:
            x1, w1 = line_rule(lo, hi, marks, n=par.n_line,
                               depth=par.depth_line)
            for a, wa in zip(x1, w1):
                discs = []
                for c in centers:
                    chord = radius * radius - (a - c[0]) ** 2
                    if chord > 0:
                        discs.append((c[1:], math.sqrt(chord)))
                if not discs:
                    continue
                sub, wsub = _slice_union(lines, discs, par)
                full = np.concatenate(
                    [np.full((sub.shape[0], 1), a), sub], axis=1)
                pts.append(full)
                wts.append(wa * wsub)
        return np.concatenate(pts), np.concatenate(wts)

    # ----- integration -----

    def integrate(self, f: Callable[[np.ndarray], np.ndarray], region: Region,
                  rel_tol: float | None = None, start_level: int = 1,
                  max_level: int = 5,
                  extra_marks: tuple[tuple[float, ...], ...] | None = None,
                  cache: bool = True) -> float:
        """Integrate ``f`` against the weighted measure over ``region``.

        Escalates scheme resolution until two successive levels agree.
        Raises NoConvergence when the level budget is exhausted.
        ``extra_marks`` (per-dimension positions, boxes only) direct panel
        grading toward integrand features the region itself cannot see,
        such as a sharply peaked factor.
        """
        rel_tol = self.rel_tol if rel_tol is None else rel_tol
        prev = None
        prev_l1 = 0.0
        val = math.nan
        for level in range(start_level, max_level + 1):
            scheme = self.scheme(region, level, extra_marks=extra_marks,
                                 cache=cache)
            vals = np.asarray(f(scheme.nodes), dtype=float)
            val = float(scheme.weights @ vals)
            l1 = float(scheme.weights @ np.abs(vals))
            if prev is not None:
                floor = 1e-13 * max(l1, prev_l1, 1e-300)
                if abs(val - prev) <= rel_tol * max(abs(val), floor) + floor:
                    return val
            prev, prev_l1 = val, l1
        raise NoConvergence(
            f"integral over {region} did not stabilize to rel_tol={rel_tol}",
            last_estimate=val, last_delta=abs(val - prev))

    def ball_volume(self, center, radius: float, orbit: bool = False,
                    rel_tol: float | None = None) -> float:
        """Measure of a ball, or of the union of its group images."""
        center = np.atleast_1d(np.asarray(center, dtype=float))
        ball = BallSpec(center=tuple(center), radius=float(radius), orbit=orbit)
        if self.setting.dim == 1 and self._axis_ks is not None:
            if not orbit:
                return float(
                    self._axis_antideriv(0, np.array(center[0] + radius))
                    - self._axis_antideriv(0, np.array(center[0] - radius)))
            pts = self.setting.orbit_of(center)
            intervals = merge_intervals(
                [(p[0] - radius, p[0] + radius) for p in pts])
            return self._interval_union_measure_exact(intervals)
        ones = lambda pts: np.ones(pts.shape[0])
        return self.integrate(ones, ball, rel_tol=rel_tol)

    def box_measure(self, box: Box, rel_tol: float | None = None) -> float:
        if self._axis_ks is not None:
            return self.box_measure_exact(box)
        ones = lambda pts: np.ones(pts.shape[0])
        return self.integrate(ones, box, rel_tol=rel_tol)

    # ----- derived measure diagnostics -----

    def surrogate_volume(self, center, radius: float) -> float:
        """Polynomial stand-in for the ball volume:

        r^N * prod over roots of (|<alpha, x>| + r)^multiplicity.
        Comparable to the true volume up to group-dependent constants and
        exactly homogeneous under joint dilation of (x, r).
        """
        center = np.atleast_1d(np.asarray(center, dtype=float))
        rs = self.setting.root_system
        val = float(radius) ** rs.dim
        if rs.roots.shape[0]:
            dots = np.abs(rs.roots @ center)
            for d, k in zip(dots, rs.kappa):
                if k != 0.0:
                    val *= (d + radius) ** k
        return val

    def growth_check(self, center, r_small: float, r_large: float,
                     slack: float = 4.0) -> "GrowthReport":
        """Compare a volume ratio against its dimension-window bracket.

        For r_small <= r_large the ratio vol(B(x, r_small))/vol(B(x, r_large))
        must sit between (r_small/r_large)^hom_dim and (r_small/r_large)^dim
        up to the constant ``slack``.
        """
        if not 0 < r_small <= r_large:
            raise ValueError("need 0 < r_small <= r_large")
        v1 = self.ball_volume(center, r_small)
        v2 = self.ball_volume(center, r_large)
        ratio = v1 / v2
        t = r_small / r_large
        lower = t ** self.setting.constants.homogeneous_dim
        upper = t ** self.setting.dim
        ok = (ratio >= lower / slack) and (ratio <= upper * slack)
        return GrowthReport(ratio=ratio, lower=lower, upper=upper,
                            slack=slack, ok=ok)

    def gaussian_normalization(self) -> float:
        """Integral of exp(-|x|^2 / 2) against the weighted measure.

        Quadrature on a truncated domain; the truncation radius is chosen
        so the analytically bounded tail is below 1e-10 of the value.
        Cached after the first call.
        """
        if self._c_kappa is not None:
            return self._c_kappa
        if self._axis_ks is not None:
            val = 1.0
            for k in (float(v) for v in self._axis_ks):
                T = max(13.0, 2.5 * math.sqrt(2 * k + 1))
                x, w = line_rule(0.0, T, [0.0] if k else [], n=40, depth=24)
                integrand = 2.0 * 2.0 ** k * x ** (2 * k) * np.exp(-x * x / 2)
                val *= float(w @ integrand)
            self._c_kappa = val
            return val
        if self.setting.dim == 2:
            gamma = self.setting.constants.gamma
            T = max(13.0, 2.5 * math.sqrt(gamma + 2))
            r, wr = line_rule(0.0, T, [0.0], n=40, depth=24)
            radial = float(wr @ (r ** (1 + gamma) * np.exp(-r * r / 2)))
            lines = _lines_2d(self.setting)
            ang_marks: list[float] = []
            for vec, _ in lines:
                phi = math.atan2(vec[1], vec[0])
                for t in (phi + math.pi / 2, phi - math.pi / 2):
                    ang_marks.append(t % (2 * math.pi))
            th, wth = line_rule(0.0, 2 * math.pi, ang_marks, n=30, depth=20)
            dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
            angular = float(wth @ self.setting.weight(dirs))
            self._c_kappa = radial * angular
            return self._c_kappa
        raise UnsupportedGroup("gaussian normalization unsupported "
                               f"for dim={self.setting.dim} with this group")


@dataclass(frozen=True)
class GrowthReport:
    ratio: float
    lower: float
    upper: float
    slack: float
    ok: bool


# ----- planar panel builders -----


def _polar_disc(lines: Sequence[tuple[np.ndarray, float]], center: np.ndarray,
                radius: float, par: _Level) -> tuple[np.ndarray, np.ndarray]:
    """Polar scheme for a disc; geometric weights only (no h factor).

    ``lines`` are (alpha, exponent) pairs describing weight zero-lines
    through the ambient origin; they only steer panel placement here.
    """
    theta_marks: list[float] = []
    for vec, _ in lines:
        phi = math.atan2(vec[1], vec[0])
        co = float(vec @ center)
        c0 = co / (math.sqrt(2.0) * radius)
        if abs(c0) <= 1.0:
            delta = math.acos(max(-1.0, min(1.0, -c0)))
            for t in (phi + delta, phi - delta):
                theta_marks.append(t % (2 * math.pi))
        for t in (phi + math.pi / 2, phi - math.pi / 2):
            theta_marks.append(t % (2 * math.pi))
    base = [2 * math.pi * i / 8 for i in range(9)]
    cuts = sorted(set(np.round(base + theta_marks, 12).tolist()))
    cuts = [c for c in cuts if 0.0 <= c <= 2 * math.pi]
    if cuts[0] > 0.0:
        cuts.insert(0, 0.0)
    if cuts[-1] < 2 * math.pi:
        cuts.append(2 * math.pi)
    pts_list, w_list = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo < 1e-12:
            continue
        th, wth = panel_nodes([(lo, hi)], par.n_theta)
        for t, wt in zip(th, wth):
            e = np.array([math.cos(t), math.sin(t)])
            rad_marks = []
            for vec, _ in lines:
                co = float(vec @ center)
                den = float(vec @ e)
                if abs(co) < 1e-13 * max(1.0, radius):
                    rad_marks.append(0.0)
                elif abs(den) > 1e-13:
                    rho_star = -co / den
                    if 0.0 < rho_star < radius:
                        rad_marks.append(rho_star)
            rho, wr = line_rule(0.0, radius, rad_marks, n=par.n_rad,
                                depth=par.depth_rad)
            pts_list.append(center + rho[:, None] * e)
            w_list.append(wt * wr * rho)
    return np.concatenate(pts_list), np.concatenate(w_list)


def _circle_intersections(p: np.ndarray, rp: float, q: np.ndarray, rq: float
                          ) -> list[np.ndarray]:
    d = float(np.linalg.norm(q - p))
    if d < 1e-14 or d > rp + rq or d < abs(rp - rq):
        return []
    a = (d * d + rp * rp - rq * rq) / (2 * d)
    h2 = rp * rp - a * a
    if h2 < 0:
        return []
    h = math.sqrt(max(h2, 0.0))
    u = (q - p) / d
    perp = np.array([-u[1], u[0]])
    base = p + a * u
    return [base + h * perp, base - h * perp]


def _slice_union(lines: Sequence[tuple[np.ndarray, float]],
                 discs: Sequence[tuple[np.ndarray, float]], par: _Level
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Scheme for a union of discs via vertical slices; geometric weights.

    Per-slice geometry (a union of intervals) is computed exactly, so
    arbitrary overlap patterns are handled without inclusion-exclusion.
    """
    outer_intervals = merge_intervals(
        [(c[0] - r, c[0] + r) for c, r in discs])
    outer_marks: list[float] = []
    for c, r in discs:
        outer_marks.extend([c[0] - r, c[0] + r])
    for i in range(len(discs)):
        for j in range(i + 1, len(discs)):
            for pt in _circle_intersections(discs[i][0], discs[i][1],
                                            discs[j][0], discs[j][1]):
                outer_marks.append(float(pt[0]))
    for vec, _ in lines:
        if abs(vec[1]) < 1e-14:
            outer_marks.append(0.0)
        else:
            dirv = np.array([-vec[1], vec[0]]) / math.sqrt(2.0)
            for c, r in discs:
                dist = abs(float(vec @ c)) / math.sqrt(2.0)
                if dist < r:
                    tau = math.sqrt(r * r - dist * dist)
                    proj = c - (float(vec @ c) / 2.0) * vec
                    outer_marks.extend([float((proj + tau * dirv)[0]),
                                        float((proj - tau * dirv)[0])])
                elif abs(dist - r) < 1e-13:
                    proj = c - (float(vec @ c) / 2.0) * vec
                    outer_marks.append(float(proj[0]))
    pts_list, w_list = [], []
    for lo, hi in outer_intervals:
        x1, w1 = line_rule(lo, hi, outer_marks, n=par.n_line,
                           depth=par.depth_line)
        for a, wa in zip(x1, w1):
            segs = []
            for c, r in discs:
                chord = r * r - (a - c[0]) ** 2
                if chord > 0:
                    ch = math.sqrt(chord)
                    segs.append((c[1] - ch, c[1] + ch))
            merged = merge_intervals(segs)
            if not merged:
                continue
            inner_marks = [-vec[0] * a / vec[1] for vec, _ in lines
                           if abs(vec[1]) > 1e-14]
            for slo, shi in merged:
                x2, w2 = line_rule(slo, shi, inner_marks, n=par.n_rad,
                                   depth=par.depth_rad)
                pts_list.append(np.stack([np.full_like(x2, a), x2], axis=-1))
                w_list.append(wa * w2)
    return np.concatenate(pts_list), np.concatenate(w_list)
