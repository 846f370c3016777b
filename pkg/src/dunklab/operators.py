"""Dunkl operators, the joint-eigenfunction kernel, and heat kernels.

The difference-differential operator attached to a reflection group acts as

    T_xi f(x) = d_xi f(x) + sum_alpha (kappa(alpha)/2) <alpha, xi>
                * (f(x) - f(sigma_alpha x)) / <alpha, x>

with roots normalized to |alpha|^2 = 2 and the sum over the full root
system.  Squares sum to a Laplacian whose heat kernel is computed here by
two independent routes for cross-validation: a radial one-dimensional
integral representation (per coordinate axis) and a spectral Hankel-type
integral.  Both specialize to the classical Gauss-Weierstrass kernel when
every multiplicity vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, jv, roots_genlaguerre, roots_jacobi

from .errors import (RouteDisagreement, SeriesDivergenceGuard,
                     UnsupportedGroup)
from .fields import ScalarField
from .geometry import Setting
from .measure import Box, DunklMeasure

SINGULAR_SWITCH = 1e-6
SERIES_GUARD = 50.0
SERIES_TOL = 1e-14
SERIES_MAX_TERMS = 200
ROUTE_TOL = 1e-5
LAMBDA_SPLIT = 50.0


# ---------------------------------------------------------------------------
# difference-differential operators
# ---------------------------------------------------------------------------

def dunkl_derivative(setting: Setting, xi, f: ScalarField,
                     points: np.ndarray) -> np.ndarray:
    """Apply T_xi to f at a batch of points.

    ``xi`` is either a coordinate index or a direction vector.  Within
    ``SINGULAR_SWITCH`` of a reflection hyperplane the difference quotient
    is replaced by its limit <alpha, grad f>.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dim = setting.root_system.dim
    if isinstance(xi, (int, np.integer)):
        direction = np.zeros(dim)
        direction[int(xi)] = 1.0
    else:
        direction = np.asarray(xi, dtype=float)

    grad = f.grad(pts)
    out = grad @ direction
    fx = f(pts)
    for alpha, kap in zip(setting.root_system.roots,
                          setting.root_system.multiplicities):
        kv = float(kap)
        if kv == 0.0:
            continue
        s = pts @ alpha
        sigma_pts = pts - np.outer(s, alpha)
        quotient = np.empty(pts.shape[0])
        near = np.abs(s) < SINGULAR_SWITCH
        far = ~near
        if np.any(far):
            quotient[far] = (fx[far] - f(sigma_pts[far])) / s[far]
        if np.any(near):
            quotient[near] = grad[near] @ alpha
        out = out + 0.5 * kv * (alpha @ direction) * quotient
    return out


def dunkl_derivative_field(setting: Setting, xi, f: ScalarField
                           ) -> ScalarField:
    def ev(p):
        return dunkl_derivative(setting, xi, f, p)
    return ScalarField(ev, setting.root_system.dim, support=None,
                       name=f"T[{xi}]{f.name}")


def dunkl_laplacian(setting: Setting, f: ScalarField,
                    points: np.ndarray) -> np.ndarray:
    """Apply the Dunkl Laplacian sum_j T_j^2 to f at a batch of points.

    Uses the closed form: Euclidean Laplacian plus, for each root,
    kappa(alpha) * (2 <alpha, grad f> / <alpha, x>
                    - 2 (f(x) - f(sigma x)) / <alpha, x>^2).
    Near a hyperplane both singular terms are replaced by the joint limit
    <alpha, H alpha> (second derivative along alpha), which is what the
    difference expression converges to for smooth f.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    hess = f.hess(pts)
    out = np.einsum("ijj->i", hess)
    grad = f.grad(pts)
    fx = f(pts)
    for alpha, kap in zip(setting.root_system.roots,
                          setting.root_system.multiplicities):
        kv = float(kap)
        if kv == 0.0:
            continue
        s = pts @ alpha
        sigma_pts = pts - np.outer(s, alpha)
        term = np.empty(pts.shape[0])
        near = np.abs(s) < SINGULAR_SWITCH
        far = ~near
        if np.any(far):
            da = grad[far] @ alpha
            term[far] = da / s[far] - (fx[far] - f(sigma_pts[far])) / s[far] ** 2
        if np.any(near):
            term[near] = 0.5 * np.einsum("ij,j->i", hess[near] @ alpha, alpha)
        out = out + kv * term
    return out


# ---------------------------------------------------------------------------
# one-dimensional kernel series
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _series_coeffs(k: float, n_max: int = SERIES_MAX_TERMS) -> np.ndarray:
    b = np.empty(n_max + 1)
    b[0] = 1.0
    for n in range(1, n_max + 1):
        b[n] = b[n - 1] / (n + 2.0 * k if n % 2 == 1 else n)
    return b


def kernel_1d(k: float, z: np.ndarray) -> np.ndarray:
    """Rank-one joint eigenfunction evaluated at z = x*y.

    Power series sum b_n z^n with b_0 = 1, b_n = b_{n-1}/(n + 2k) for odd n
    and b_n = b_{n-1}/n for even n.  Positive for real arguments.
    """
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) > SERIES_GUARD):
        raise SeriesDivergenceGuard(
            f"kernel argument {np.max(np.abs(z)):.3g} exceeds guard "
            f"{SERIES_GUARD}; rescale before evaluating")
    b = _series_coeffs(float(k))
    total = np.ones_like(z)
    power = np.ones_like(z)
    floor = np.maximum(np.abs(total), 1.0)
    quiet = 0
    for n in range(1, SERIES_MAX_TERMS + 1):
        power = power * z
        term = b[n] * power
        total = total + term
        floor = np.maximum(floor, np.abs(total))
        if np.max(np.abs(term) / floor) < SERIES_TOL:
            quiet += 1
            # consecutive quiet terms: alternating series in z < 0 can
            # have a single accidentally small term
            if quiet >= 2:
                return total
        else:
            quiet = 0
    raise SeriesDivergenceGuard(
        f"series did not settle in {SERIES_MAX_TERMS} terms")


def dunkl_kernel(setting: Setting, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Joint eigenfunction E_kappa(x, y), for coordinate sign groups.

    Factorizes over axes; each factor is the rank-one series.  Raises
    UnsupportedGroup when the weight does not split over coordinates.
    """
    ks = setting.axis_multiplicities()
    if ks is None:
        raise UnsupportedGroup(
            f"kernel evaluation needs a coordinate sign group, got "
            f"{setting.root_system.label}")
    X = np.atleast_2d(np.asarray(x, dtype=float))
    Y = np.atleast_2d(np.asarray(y, dtype=float))
    out = np.ones(np.broadcast(X[:, 0], Y[:, 0]).shape)
    for j, kj in enumerate(ks):
        out = out * kernel_1d(float(kj), X[:, j] * Y[:, j])
    return out


def kernel_phase_parts(k: float, a: np.ndarray,
                       series_cut: float = 12.0) -> tuple[np.ndarray, np.ndarray]:
    """Real and imaginary parts of the rank-one eigenfunction at i*a.

    A(a) = sum b_{2n} (-1)^n a^{2n} (even), B(a) = odd part.  For large
    |a| the series loses accuracy, so Bessel forms take over:
    A = Gamma(k+1/2) (2/a)^{k-1/2} J_{k-1/2}(a), B likewise with J_{k+1/2}.
    """
    a = np.asarray(a, dtype=float)
    A = np.empty_like(a)
    B = np.empty_like(a)
    if k == 0.0:
        return np.cos(a), np.sin(a)
    small = np.abs(a) <= series_cut
    if np.any(small):
        asm = a[small]
        b = _series_coeffs(float(k))
        even = np.ones_like(asm)  # (-1)^n a^(2n)
        tot_e = b[0] * even
        tot_o = b[1] * even * asm
        z2 = -asm * asm
        for n in range(1, SERIES_MAX_TERMS // 2):
            even = even * z2
            te = b[2 * n] * even
            to = b[2 * n + 1] * even * asm
            tot_e = tot_e + te
            tot_o = tot_o + to
            if max(float(np.max(np.abs(te))),
                   float(np.max(np.abs(to)))) < SERIES_TOL:
                break
        A[small] = tot_e
        B[small] = tot_o
    big = ~small
    if np.any(big):
        ab = np.abs(a[big])
        sg = np.sign(a[big])
        lg = math.lgamma(k + 0.5)
        pref = np.exp(lg + (k - 0.5) * (math.log(2.0) - np.log(ab)))
        A[big] = pref * jv(k - 0.5, ab)
        B[big] = sg * pref * jv(k + 0.5, ab)
    return A, B


# ---------------------------------------------------------------------------
# one-dimensional intertwining measures
# ---------------------------------------------------------------------------

@dataclass
class RoslerMeasure1D:
    """The compactly supported probability measure representing E(x, y).

    For k > 0 and anchor x != 0 it has density proportional to
    (1 + t)(1 - t^2)^(k-1) in t = eta/x on [-1, 1]; the normalizer is
    Gamma(k + 1/2) / (sqrt(pi) Gamma(k)).  For k = 0 or x = 0 it
    degenerates to a unit atom at x.
    """

    anchor: float
    k: float

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"multiplicity must be >= 0, got {self.k}")
        self.is_atom = (self.k == 0.0) or (self.anchor == 0.0)
        if not self.is_atom:
            self._cj = math.exp(math.lgamma(self.k + 0.5)
                                - 0.5 * math.log(math.pi)
                                - math.lgamma(self.k))

    def density(self, eta: np.ndarray) -> np.ndarray:
        """Density with respect to Lebesgue measure on [-|x|, |x|]."""
        if self.is_atom:
            raise ValueError("atomic measure has no density")
        eta = np.asarray(eta, dtype=float)
        t = eta / self.anchor
        inside = np.abs(t) < 1.0
        vals = np.zeros_like(t)
        ts = np.clip(t, -1.0, 1.0)
        with np.errstate(divide="ignore"):
            body = self._cj * (1.0 + ts) * (1.0 - ts * ts) ** (self.k - 1.0)
        vals[inside] = body[inside] / abs(self.anchor)
        return vals

    def nodes_weights(self, n: int = 48) -> tuple[np.ndarray, np.ndarray]:
        """Gauss rule (eta_j, w_j) with sum w_j = 1, exact on high-degree
        polynomials in eta."""
        if self.is_atom:
            return np.array([self.anchor]), np.array([1.0])
        t, w = roots_jacobi(n, self.k - 1.0, self.k)
        return self.anchor * t, self._cj * w

    def moment(self, m: int, n: int = 64) -> float:
        eta, w = self.nodes_weights(n)
        return float(np.sum(w * eta ** m))

    def exp_moment(self, y: float, n: int = 64) -> float:
        """integral of e^(eta * y); equals the rank-one eigenfunction."""
        eta, w = self.nodes_weights(n)
        return float(np.sum(w * np.exp(eta * y)))

    def validate_moments(self, orders: int = 12, tol: float = 1e-10) -> float:
        """Check moments against m! b_m x^m; returns worst relative error."""
        b = _series_coeffs(self.k)
        worst = 0.0
        for m in range(orders + 1):
            target = math.factorial(m) * b[m] * self.anchor ** m
            got = self.moment(m)
            scale = max(abs(target), abs(self.anchor) ** m, 1e-300)
            worst = max(worst, abs(got - target) / scale)
        if worst > tol:
            raise RouteDisagreement(
                f"moment identity fails: worst relative error {worst:.3e} "
                f"(anchor={self.anchor}, k={self.k})")
        return worst


def rosler_from_moments(anchor: float, k: float, n_nodes: int = 40
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Moment-matched fallback rule on fixed Chebyshev nodes.

    Solves for weights reproducing m! b_m x^m up to order n_nodes - 1 by
    least squares on a Chebyshev-Vandermonde system.  Slower and less
    stable than the Jacobi rule; kept as an independent cross-check.
    """
    if anchor == 0.0 or k == 0.0:
        return np.array([anchor]), np.array([1.0])
    t = np.cos(np.pi * (2 * np.arange(n_nodes) + 1) / (2 * n_nodes))
    b = _series_coeffs(k)
    orders = np.arange(n_nodes)
    # scale by |x|^m to keep the system well conditioned
    vand = t[None, :] ** orders[:, None]
    rhs = np.array([math.factorial(m) * b[m] for m in orders])
    weights, *_ = np.linalg.lstsq(vand, rhs, rcond=None)
    return anchor * t, weights


# ---------------------------------------------------------------------------
# heat kernels
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _jacobi_rule(k: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    u, w = roots_jacobi(n, k - 1.0, k)
    return u, w


@lru_cache(maxsize=32)
def _laguerre_rule(alpha: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    v, w = roots_genlaguerre(n, alpha)
    return v, w


class HeatKernel1D:
    """Rank-one heat kernel h_t(x, y) for multiplicity k >= 0.

    Primary route ("radial"): the representation
        h = c^{-1} (2t)^{-N/2} * cJ *
            int_{-1}^{1} exp(-(x^2 + y^2 - 2xyu)/(4t)) (1-u)^{k-1} (1+u)^k du
    with N = 1 + 2k, c = 2^{2k + 1/2} Gamma(k + 1/2), evaluated by a
    Gauss-Jacobi rule, switching to a boundary-layer Gauss-Laguerre rule
    when lambda = |xy| / (2t) exceeds LAMBDA_SPLIT (the integrand then
    concentrates near u = sign(xy)).

    Secondary route ("spectral"): 2 c^{-1} int_0^inf e^{-t xi^2}
    [A(x xi) A(y xi) + B(x xi) B(y xi)] 2^k xi^{2k} d xi with A, B the
    even/odd phase parts.  Slower; used for cross-validation.
    """

    def __init__(self, k: float, n_jacobi: int = 64, n_laguerre: int = 48):
        if k < 0:
            raise ValueError(f"multiplicity must be >= 0, got {k}")
        self.k = float(k)
        self.homog_dim = 1.0 + 2.0 * self.k
        self.log_c = (2 * self.k + 0.5) * math.log(2.0) \
            + math.lgamma(self.k + 0.5)
        self.n_jacobi = n_jacobi
        self.n_laguerre = n_laguerre
        if self.k > 0:
            self._cj = math.exp(math.lgamma(self.k + 0.5)
                                - 0.5 * math.log(math.pi)
                                - math.lgamma(self.k))

    def value(self, t, x, y, route: str = "radial") -> np.ndarray:
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(t <= 0):
            raise ValueError("time must be positive")
        t, x, y = np.broadcast_arrays(t, x, y)
        shape = t.shape
        t, x, y = t.ravel(), x.ravel(), y.ravel()
        if route == "radial":
            fn = self._radial
        elif route == "spectral":
            fn = self._spectral
        else:
            raise ValueError(f"unknown route {route!r}")
        # bound the (n_points, n_quad_nodes) intermediate
        chunk = 1 << 18
        if t.size <= chunk:
            out = fn(t, x, y)
        else:
            out = np.empty_like(t)
            for i in range(0, t.size, chunk):
                s = slice(i, i + chunk)
                out[s] = fn(t[s], x[s], y[s])
        return out.reshape(shape)

    # -- radial route --

    def _radial(self, t, x, y):
        if self.k == 0.0:
            return np.exp(-(x - y) ** 2 / (4 * t)) / np.sqrt(4 * math.pi * t)
        pref = np.exp(-self.log_c - 0.5 * self.homog_dim * np.log(2 * t))
        lam = x * y / (2 * t)
        out = np.empty_like(t)
        mid = np.abs(lam) <= LAMBDA_SPLIT
        if np.any(mid):
            u, w = _jacobi_rule(self.k, self.n_jacobi)
            expo = -(x[mid, None] ** 2 + y[mid, None] ** 2
                     - 2 * x[mid, None] * y[mid, None] * u[None, :]) \
                / (4 * t[mid, None])
            out[mid] = self._cj * np.einsum("ij,j->i", np.exp(expo), w)
        hi = lam > LAMBDA_SPLIT
        if np.any(hi):
            out[hi] = self._boundary_layer(t[hi], x[hi], y[hi], lam[hi],
                                           positive=True)
        lo = lam < -LAMBDA_SPLIT
        if np.any(lo):
            out[lo] = self._boundary_layer(t[lo], x[lo], y[lo], -lam[lo],
                                           positive=False)
        return pref * out

    def _boundary_layer(self, t, x, y, lam, positive: bool):
        # substitute u = +-1 -+ v/lam; the Jacobi weight factor at the far
        # endpoint becomes a slowly varying polynomial factor
        if positive:
            v, gw = _laguerre_rule(self.k - 1.0, self.n_laguerre)
            poly_exp = self.k
            gauss = np.exp(-(x - y) ** 2 / (4 * t))
            power = -self.k
        else:
            v, gw = _laguerre_rule(self.k, self.n_laguerre)
            poly_exp = self.k - 1.0
            gauss = np.exp(-(x + y) ** 2 / (4 * t))
            power = -(self.k + 1.0)
        ratio = v[None, :] / lam[:, None]
        # nodes past the far endpoint carry weight below e^(-1.9 lam);
        # clip before the fractional power to avoid inf * 0
        ok = ratio < 1.9
        body = np.where(ok, (2.0 - np.minimum(ratio, 1.9)) ** poly_exp, 0.0)
        s = np.einsum("ij,j->i", body, gw)
        return self._cj * gauss * lam ** power * s

    # -- spectral route --

    def _spectral(self, t, x, y):
        out = np.empty_like(t)
        for i in range(t.size):
            out[i] = self._spectral_one(t[i], x[i], y[i])
        return out

    def _spectral_one(self, t: float, x: float, y: float) -> float:
        xi_max = math.sqrt((45.0 + 14.0 * self.k) / t)
        freq = max(abs(x), abs(y), 1e-9)
        n_panels = int(math.ceil(xi_max * freq / 2.0)) + 8
        cuts = np.linspace(0.0, xi_max, n_panels + 1)
        # |xi|^(2k) has unbounded derivatives at 0; grade the first cell
        geo = cuts[1] * 0.5 ** np.arange(16, -1, -1)
        edges = np.concatenate(([0.0], geo, cuts[2:]))
        gl_x, gl_w = np.polynomial.legendre.leggauss(20)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            xi = mid + half * gl_x
            Ax, Bx = kernel_phase_parts(self.k, x * xi)
            Ay, By = kernel_phase_parts(self.k, y * xi)
            dens = np.exp(-t * xi * xi) * (2.0 ** self.k) * xi ** (2 * self.k)
            total += half * np.sum(gl_w * dens * (Ax * Ay + Bx * By))
        # transform + inversion each carry one factor of 1/c
        return 2.0 * math.exp(-2.0 * self.log_c) * total


class HeatKernelEvaluator:
    """Heat kernel for a full setting.

    Coordinate sign groups factor into rank-one kernels per axis.  A
    trivial weight (all multiplicities zero) falls back to the classical
    Gauss-Weierstrass kernel in any geometry.  Other groups are not
    supported.
    """

    def __init__(self, setting: Setting, n_jacobi: int = 64,
                 n_laguerre: int = 48):
        self.setting = setting
        self.dim = setting.root_system.dim
        ks = setting.axis_multiplicities()
        self._classical = float(setting.constants.gamma) == 0.0
        if ks is not None:
            self._axes = [HeatKernel1D(float(k), n_jacobi, n_laguerre)
                          for k in ks]
        elif self._classical:
            self._axes = None
        else:
            raise UnsupportedGroup(
                f"heat kernel implemented for coordinate sign groups and "
                f"trivial weights, got {setting.root_system.label}")

    def value(self, t, X, Y, route: str = "radial") -> np.ndarray:
        Xa = np.atleast_2d(np.asarray(X, dtype=float))
        Ya = np.atleast_2d(np.asarray(Y, dtype=float))
        if self._axes is None:
            d2 = np.sum((Xa - Ya) ** 2, axis=-1)
            n = self.dim
            return np.exp(-d2 / (4 * np.asarray(t, dtype=float))) \
                / (4 * math.pi * np.asarray(t, dtype=float)) ** (n / 2)
        out = np.ones(np.broadcast(Xa[..., 0], Ya[..., 0]).shape)
        for j, hk in enumerate(self._axes):
            out = out * hk.value(t, Xa[..., j], Ya[..., j], route=route)
        return out

    def validate(self, t_values, points: np.ndarray, tol: float = ROUTE_TOL
                 ) -> float:
        """Compare routes pairwise on a sample cloud; worst relative error.

        Raises RouteDisagreement beyond ``tol``.  Relative error is taken
        against the larger of the two values and a kernel-scale floor to
        keep far-apart pairs (both values essentially zero) from dividing
        noise by noise.
        """
        if self._axes is None:
            return 0.0
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        m = pts.shape[0]
        if m < 2:
            raise ValueError("need at least two points")
        origin = np.zeros((1, self.dim))
        worst = 0.0
        for t in np.atleast_1d(np.asarray(t_values, dtype=float)):
            X, Y = pts[: m // 2], pts[m // 2: 2 * (m // 2)]
            a = self.value(t, X, Y, route="radial")
            b = self.value(t, X, Y, route="spectral")
            # pairs far in the tail carry values many orders below the
            # on-diagonal scale; compare those against the scale instead
            peak = self.value(t, origin, origin)[0]
            err = np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)),
                                             1e-6 * peak)
            worst = max(worst, float(np.max(err)))
        if worst > tol:
            raise RouteDisagreement(
                f"heat kernel routes disagree: worst relative error "
                f"{worst:.3e} > {tol:.1e}")
        return worst

    def apply(self, t: float, f: ScalarField, points: np.ndarray,
              measure: DunklMeasure, rel_tol: float = 1e-6) -> np.ndarray:
        """Semigroup action: integrate h_t(x, .) f against the weight.

        The kernel concentrates near the orbit of x, so the integral is
        taken over one well-scaled box per orbit point (merged when they
        overlap) intersected with the support of f.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty(pts.shape[0])
        reach = 13.0 * math.sqrt(t)
        for i, x in enumerate(pts):
            orbit = self.setting.orbit_of(x)
            boxes = _merged_reach_boxes(orbit, reach)

            def g(p, x=x):
                return self.value(t, x[None, :], p) * f(p)

            total = 0.0
            for lo, hi in boxes:
                if f.support is not None:
                    lo = np.maximum(lo, np.asarray(f.support.lo))
                    hi = np.minimum(hi, np.asarray(f.support.hi))
                if np.any(lo >= hi):
                    continue
                total += measure.integrate(g, Box(tuple(lo), tuple(hi)),
                                           rel_tol=rel_tol, cache=False)
            out[i] = total
        return out


# ---------------------------------------------------------------------------
# envelope diagnostics
# ---------------------------------------------------------------------------

def _merged_reach_boxes(orbit: np.ndarray, reach: float
                        ) -> list[tuple[np.ndarray, np.ndarray]]:
    """Boxes orbit_point +- reach, with overlapping boxes merged to hulls."""
    items = [(p - reach, p + reach) for p in orbit]
    changed = True
    while changed:
        changed = False
        merged: list[tuple[np.ndarray, np.ndarray]] = []
        for lo, hi in items:
            for j, (lo2, hi2) in enumerate(merged):
                if np.all(lo <= hi2) and np.all(lo2 <= hi):
                    merged[j] = (np.minimum(lo, lo2), np.maximum(hi, hi2))
                    changed = True
                    break
            else:
                merged.append((lo, hi))
        items = merged
    return items


@dataclass
class EnvelopeReport:
    kind: str
    constant: float
    spread: float
    rate: float
    n_samples: int
    ok: bool

    def row(self) -> dict:
        return {"kind": self.kind, "constant": self.constant,
                "spread": self.spread, "rate": self.rate,
                "n_samples": self.n_samples, "ok": self.ok}


def _heat_sample_cloud(setting: Setting, rng: np.random.Generator,
                       n_pairs: int, box_half: float,
                       t_values: np.ndarray) -> list[tuple[float, np.ndarray, np.ndarray]]:
    dim = setting.root_system.dim
    rows = []
    for t in t_values:
        X = rng.uniform(-box_half, box_half, size=(n_pairs, dim))
        Y = rng.uniform(-box_half, box_half, size=(n_pairs, dim))
        rows.append((float(t), X, Y))
    return rows


def _ball_volume_cached(measure: DunklMeasure, cache: dict,
                        center: np.ndarray, radius: float) -> float:
    key = (tuple(np.round(center, 6)), round(radius, 6))
    if key not in cache:
        cache[key] = measure.ball_volume(center, radius)
    return cache[key]


def gaussian_bounds_check(setting: Setting, measure: DunklMeasure,
                          heat: HeatKernelEvaluator,
                          rng: np.random.Generator,
                          n_pairs: int = 24,
                          t_values=(0.05, 0.25, 1.0, 4.0),
                          box_half: float = 2.5) -> tuple[EnvelopeReport, EnvelopeReport]:
    """Fit two-sided Gaussian envelopes on a random cloud.

    Upper: h_t(x,y) <= C (1 + u)^{-2} V^{-1} exp(-c d(x,y)^2 / t) where
    u = |x - y| / sqrt(t), d is the orbit distance, and V is the larger of
    the two ball volumes at radius sqrt(t).  The decay rate c is chosen
    from a grid in (0, 1/4) to minimize the spread of the observed ratios.

    Lower: h_t(x,y) >= c' V^{-1} exp(-C' |x - y|^2 / t) with the smaller
    ball volume and the Euclidean distance; rate grid in [1/4, 2].
    """
    rows = _heat_sample_cloud(setting, rng, n_pairs,
                              box_half, np.asarray(t_values))
    vol_cache: dict = {}
    hs, us, d2s, e2s, ts, vmaxs, vmins = [], [], [], [], [], [], []
    for t, X, Y in rows:
        h = heat.value(t, X, Y)
        rt = math.sqrt(t)
        for i in range(X.shape[0]):
            vx = _ball_volume_cached(measure, vol_cache, X[i], rt)
            vy = _ball_volume_cached(measure, vol_cache, Y[i], rt)
            hs.append(h[i])
            e2 = float(np.sum((X[i] - Y[i]) ** 2))
            d = setting.distance(X[i], Y[i])
            us.append(math.sqrt(e2) / rt)
            d2s.append(d * d)
            e2s.append(e2)
            ts.append(t)
            vmaxs.append(max(vx, vy))
            vmins.append(min(vx, vy))
    hs = np.asarray(hs)
    us = np.asarray(us)
    d2s = np.asarray(d2s)
    e2s = np.asarray(e2s)
    ts = np.asarray(ts)
    vmaxs = np.asarray(vmaxs)
    vmins = np.asarray(vmins)

    def spread_at(ratios):
        ratios = ratios[ratios > 0]
        return float(np.max(ratios) / np.min(ratios))

    # upper envelope
    best = None
    for c in np.linspace(0.02, 0.24, 12):
        envelope = (1 + us) ** (-2.0) / vmaxs * np.exp(-c * d2s / ts)
        ratios = hs / envelope
        cand = (spread_at(ratios), c, float(np.max(ratios)))
        if best is None or cand[0] < best[0]:
            best = cand
    upper = EnvelopeReport("upper", constant=best[2], spread=best[0],
                           rate=best[1], n_samples=hs.size,
                           ok=math.isfinite(best[2]))

    # the inf ratio is nondecreasing in the rate; report the knee: the
    # smallest rate already achieving most of the saturated constant
    rates = np.linspace(0.25, 2.0, 15)
    infs = []
    for c in rates:
        envelope = np.exp(-c * e2s / ts) / vmins
        infs.append(float(np.min(hs / envelope)))
    saturated = infs[-1]
    idx = next(i for i, v in enumerate(infs) if v >= 0.9 * saturated)
    lower = EnvelopeReport("lower", constant=infs[idx],
                           spread=saturated / max(infs[0], 1e-300),
                           rate=float(rates[idx]), n_samples=hs.size,
                           ok=infs[idx] > 0.0)
    return upper, lower


def holder_check(setting: Setting, measure: DunklMeasure,
                 heat: HeatKernelEvaluator, rng: np.random.Generator,
                 n_pairs: int = 24, t_values=(0.05, 0.25, 1.0),
                 box_half: float = 2.0,
                 theta: float = 0.5) -> EnvelopeReport:
    """Lipschitz-in-y envelope for perturbations |y - y'| = theta sqrt(t):

    |h_t(x,y) - h_t(x,y')| <= C (|y-y'|/sqrt(t)) (1+u)^{-2} V^{-1}
                               exp(-c d(x,y)^2 / t).
    Reports the best-fit constant over a rate grid.
    """
    if not (0 < theta < 1):
        raise ValueError("theta must lie in (0, 1)")
    dim = setting.root_system.dim
    vol_cache: dict = {}
    num, us, d2s, ts, vs = [], [], [], [], []
    for t in t_values:
        rt = math.sqrt(t)
        X = rng.uniform(-box_half, box_half, size=(n_pairs, dim))
        Y = rng.uniform(-box_half, box_half, size=(n_pairs, dim))
        direction = rng.normal(size=(n_pairs, dim))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        Y2 = Y + theta * rt * direction
        h1 = heat.value(t, X, Y)
        h2 = heat.value(t, X, Y2)
        for i in range(n_pairs):
            vx = _ball_volume_cached(measure, vol_cache, X[i], rt)
            vy = _ball_volume_cached(measure, vol_cache, Y[i], rt)
            e = float(np.linalg.norm(X[i] - Y[i]))
            d = setting.distance(X[i], Y[i])
            num.append(abs(h1[i] - h2[i]) / theta)
            us.append(e / rt)
            d2s.append(d * d)
            ts.append(t)
            vs.append(max(vx, vy))
    num = np.asarray(num)
    us = np.asarray(us)
    d2s = np.asarray(d2s)
    ts = np.asarray(ts)
    vs = np.asarray(vs)
    best = None
    for c in np.linspace(0.02, 0.24, 12):
        envelope = (1 + us) ** (-2.0) / vs * np.exp(-c * d2s / ts)
        ratios = num / envelope
        top = float(np.max(ratios))
        pos = ratios[ratios > 1e-290]
        spread = float(np.max(pos) / np.min(pos)) if pos.size else math.inf
        cand = (spread, c, top)
        if best is None or cand[0] < best[0]:
            best = cand
    return EnvelopeReport("holder", constant=best[2], spread=best[0],
                          rate=best[1], n_samples=num.size,
                          ok=math.isfinite(best[2]))
