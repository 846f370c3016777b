"""Reflection-group geometry.

Root systems with nonnegative multiplicities, the finite group generated
by the root reflections, orbits, the orbit (pseudo-)distance, the singular
product weight, and the derived homogeneity constants.

Conventions
-----------
Roots are stored normalized to squared length 2, so the reflection in the
hyperplane of ``alpha`` is ``x - <alpha, x> alpha``.  Both ``alpha`` and
``-alpha`` are kept in the root list and both contribute a weight factor,
so the total weight exponent is ``gamma = sum of all multiplicities``.
All element and orbit enumerations are deterministic (lexicographic on
rounded coordinates) so downstream runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import ClosureOverflow

#: Coordinates closer than this are merged when deduplicating orbit points
#: and group elements.
DEDUP_TOL = 1e-9

#: Hard cap on group closure size; exceeding it raises ClosureOverflow.
GROUP_CAP = 10_000

_ROOT_NORM_TOL = 1e-12


def _round_key(a: np.ndarray) -> bytes:
    # +0.0 normalizes -0.0 so the two hash identically
    return (np.round(a, 9) + 0.0).tobytes()


@dataclass(frozen=True)
class RootSystemData:
    """A finite root system with a multiplicity for every root.

    Parameters
    ----------
    dim : ambient dimension N
    roots : array of shape (n_roots, dim), each of squared length 2,
        closed under negation
    multiplicities : tuple of Fractions, one per root, all >= 0
    label : short human-readable tag used in reports
    """

    dim: int
    roots: np.ndarray
    multiplicities: tuple[Fraction, ...]
    label: str = "custom"

    def __post_init__(self):
        roots = np.atleast_2d(np.asarray(self.roots, dtype=float))
        if roots.size == 0:
            roots = roots.reshape(0, self.dim)
        object.__setattr__(self, "roots", roots)
        if roots.shape[1] != self.dim:
            raise ValueError(f"roots have dimension {roots.shape[1]}, expected {self.dim}")
        if len(self.multiplicities) != roots.shape[0]:
            raise ValueError("one multiplicity per root is required")
        mults = tuple(Fraction(m) for m in self.multiplicities)
        object.__setattr__(self, "multiplicities", mults)
        if any(m < 0 for m in mults):
            raise ValueError("multiplicities must be nonnegative")
        norms = np.einsum("ij,ij->i", roots, roots)
        if roots.shape[0] and np.max(np.abs(norms - 2.0)) > _ROOT_NORM_TOL:
            raise ValueError("every root must be normalized to <alpha, alpha> = 2")
        # closure under negation, with matching multiplicities
        keys = {_round_key(r): m for r, m in zip(roots, mults)}
        for r, m in zip(roots, mults):
            m_neg = keys.get(_round_key(-r))
            if m_neg is None or m_neg != m:
                raise ValueError("root list must be closed under negation "
                                 "with equal multiplicities")

    @property
    def kappa(self) -> np.ndarray:
        """Multiplicities as a float vector aligned with ``roots``."""
        return np.array([float(m) for m in self.multiplicities])

    @property
    def gamma_exact(self) -> Fraction:
        return sum(self.multiplicities, Fraction(0))

    @property
    def homogeneous_dim_exact(self) -> Fraction:
        """N + sum of multiplicities, the scaling exponent of the measure."""
        return Fraction(self.dim) + self.gamma_exact

    @property
    def gamma(self) -> float:
        return float(self.gamma_exact)

    @property
    def homogeneous_dim(self) -> float:
        return float(self.homogeneous_dim_exact)


def reflection_matrix(alpha: np.ndarray) -> np.ndarray:
    """Matrix of the reflection in the hyperplane orthogonal to ``alpha``.

    ``alpha`` must have squared length 2, so the matrix is I - alpha alpha^T.
    """
    alpha = np.asarray(alpha, dtype=float)
    return np.eye(alpha.size) - np.outer(alpha, alpha)


def reflect(alpha: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Reflect ``points`` (shape (..., dim)) in the hyperplane of ``alpha``."""
    alpha = np.asarray(alpha, dtype=float)
    points = np.asarray(points, dtype=float)
    return points - np.tensordot(points, alpha, axes=(-1, 0))[..., None] * alpha


@dataclass(frozen=True)
class GroupTable:
    """The closure of the root reflections, as dense orthogonal matrices.

    ``elements`` has shape (order, dim, dim) and is sorted lexicographically
    on rounded entries; the identity is always present.
    """

    elements: np.ndarray

    @property
    def order(self) -> int:
        return self.elements.shape[0]

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def apply_all(self, points: np.ndarray) -> np.ndarray:
        """All group images of ``points``: shape (order, ..., dim)."""
        points = np.asarray(points, dtype=float)
        return np.einsum("gij,...j->g...i", self.elements, points)


def build_group(root_system: RootSystemData, cap: int = GROUP_CAP) -> GroupTable:
    """Close the set of root reflections under composition.

    Raises
    ------
    ClosureOverflow
        if more than ``cap`` distinct elements are generated.
    """
    dim = root_system.dim
    gens: dict[bytes, np.ndarray] = {}
    for alpha in root_system.roots:
        m = reflection_matrix(alpha)
        gens[_round_key(m)] = m
    identity = np.eye(dim)
    seen: dict[bytes, np.ndarray] = {_round_key(identity): identity}
    frontier = [identity]
    while frontier:
        new_frontier = []
        for g in frontier:
            for h in gens.values():
                prod = h @ g
                key = _round_key(prod)
                if key not in seen:
                    if len(seen) >= cap:
                        raise ClosureOverflow(
                            f"group closure exceeded cap of {cap} elements")
                    seen[key] = prod
                    new_frontier.append(prod)
        frontier = new_frontier
    ordered = sorted(seen.values(), key=lambda m: tuple(np.round(m, 9).ravel()))
    return GroupTable(elements=np.array(ordered))


def validate_invariance(root_system: RootSystemData, group: GroupTable,
                        tol: float = DEDUP_TOL) -> None:
    """Check that the group permutes the roots and preserves multiplicities."""
    mult_by_key = {_round_key(r): m
                   for r, m in zip(root_system.roots, root_system.multiplicities)}
    for g in group.elements:
        for r, m in zip(root_system.roots, root_system.multiplicities):
            image = g @ r
            m_img = mult_by_key.get(_round_key(image))
            if m_img is None:
                raise ValueError("root system is not invariant under its own group")
            if m_img != m:
                raise ValueError("multiplicity function is not group-invariant")


def orbit(group: GroupTable, x: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    """Distinct group images of ``x``, lexicographically sorted.

    Points closer than ``tol`` in every coordinate are merged; the orbit
    size always divides the group order.
    """
    images = group.apply_all(np.asarray(x, dtype=float))
    reps: dict[bytes, np.ndarray] = {}
    for p in images:
        reps.setdefault(_round_key(p), p)
    ordered = sorted(reps.values(), key=lambda p: tuple(np.round(p, 9)))
    return np.array(ordered)


def orbit_distance(group: GroupTable, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """min over the group of ||x - g y||, vectorized over a batch of y.

    Accepts ``y`` of shape (dim,) or (..., dim) and returns a scalar or an
    array of shape (...).  This is a pseudo-distance: it vanishes on orbits
    and never exceeds the Euclidean distance.
    """
    x = np.asarray(x, dtype=float)
    images = group.apply_all(np.asarray(y, dtype=float))  # (g, ..., dim)
    diffs = images - x
    dists = np.sqrt(np.einsum("g...i,g...i->g...", diffs, diffs))
    return dists.min(axis=0)


def weight(root_system: RootSystemData, points: np.ndarray) -> np.ndarray:
    """Product weight: prod over roots of |<alpha, x>|^multiplicity.

    Roots with multiplicity 0 contribute a factor of exactly 1, including
    on their hyperplane.  Shape (..., dim) -> (...).
    """
    points = np.asarray(points, dtype=float)
    if root_system.roots.shape[0] == 0:
        return np.ones(points.shape[:-1])
    dots = np.abs(points @ root_system.roots.T)  # (..., n_roots)
    kappa = root_system.kappa
    out = np.ones(points.shape[:-1])
    for i, k in enumerate(kappa):
        if k == 0.0:
            continue
        out = out * dots[..., i] ** k
    return out


@dataclass(frozen=True)
class DerivedConstants:
    """Homogeneity data shared by the measure and the kernels."""

    gamma_exact: Fraction
    homogeneous_dim_exact: Fraction
    group_order: int

    @property
    def gamma(self) -> float:
        return float(self.gamma_exact)

    @property
    def homogeneous_dim(self) -> float:
        return float(self.homogeneous_dim_exact)


@dataclass(frozen=True)
class Setting:
    """A root system together with its group and derived constants."""

    root_system: RootSystemData
    group: GroupTable
    constants: DerivedConstants

    @classmethod
    def build(cls, root_system: RootSystemData, cap: int = GROUP_CAP) -> "Setting":
        group = build_group(root_system, cap=cap)
        validate_invariance(root_system, group)
        constants = DerivedConstants(
            gamma_exact=root_system.gamma_exact,
            homogeneous_dim_exact=root_system.homogeneous_dim_exact,
            group_order=group.order,
        )
        return cls(root_system=root_system, group=group, constants=constants)

    @property
    def dim(self) -> int:
        return self.root_system.dim

    def weight(self, points: np.ndarray) -> np.ndarray:
        return weight(self.root_system, points)

    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return orbit_distance(self.group, x, y)

    def orbit_of(self, x: np.ndarray) -> np.ndarray:
        return orbit(self.group, x)

    def axis_multiplicities(self) -> list[Fraction] | None:
        """Per-axis multiplicities if every root is +-sqrt(2) e_i, else None.

        Axes without a root get multiplicity 0.  A root system with this
        structure factors coordinate-wise, which the kernel evaluators
        exploit.
        """
        ks = [Fraction(0)] * self.dim
        for r, m in zip(self.root_system.roots, self.root_system.multiplicities):
            nz = np.nonzero(np.abs(r) > 1e-12)[0]
            if len(nz) != 1:
                return None
            axis = int(nz[0])
            if abs(abs(r[axis]) - np.sqrt(2.0)) > 1e-12:
                return None
            if r[axis] > 0:
                ks[axis] = m
        return ks


def euclidean(dim: int) -> Setting:
    """Trivial setting: no roots, trivial group, classical Lebesgue weight."""
    rs = RootSystemData(dim=dim, roots=np.zeros((0, dim)),
                        multiplicities=(), label=f"euclidean-{dim}d")
    return Setting.build(rs)


def rank_one(k) -> Setting:
    """Sign group on the line with multiplicity ``k`` on both roots."""
    k = Fraction(k)
    rs = RootSystemData(dim=1,
                        roots=np.array([[np.sqrt(2.0)], [-np.sqrt(2.0)]]),
                        multiplicities=(k, k),
                        label=f"rank-one k={k}")
    return Setting.build(rs)


def sign_product(ks: Sequence) -> Setting:
    """Coordinate sign group on R^d with per-axis multiplicities ``ks``."""
    ks = [Fraction(k) for k in ks]
    dim = len(ks)
    roots, mults = [], []
    for i, k in enumerate(ks):
        e = np.zeros(dim)
        e[i] = np.sqrt(2.0)
        roots.extend([e, -e])
        mults.extend([k, k])
    rs = RootSystemData(dim=dim, roots=np.array(roots),
                        multiplicities=tuple(mults),
                        label="sign-product k=(" + ",".join(str(k) for k in ks) + ")")
    return Setting.build(rs)


def dihedral(m: int, k, k_alt=None) -> Setting:
    """Dihedral group of order 2m in the plane.

    The m reflection lines sit at angles pi*l/m.  For even m the two root
    classes may carry different multiplicities ``k`` (even l) and ``k_alt``
    (odd l); for odd m all roots are conjugate and ``k_alt`` must be None
    or equal to ``k``.
    """
    if m < 2:
        raise ValueError("dihedral order parameter m must be >= 2")
    k = Fraction(k)
    k_alt = k if k_alt is None else Fraction(k_alt)
    if m % 2 == 1 and k_alt != k:
        raise ValueError(f"dihedral m={m} has a single conjugacy class; "
                         "multiplicities must agree")
    roots, mults = [], []
    for l in range(m):
        theta = np.pi * l / m
        alpha = np.sqrt(2.0) * np.array([-np.sin(theta), np.cos(theta)])
        mult = k if l % 2 == 0 else k_alt
        roots.extend([alpha, -alpha])
        mults.extend([mult, mult])
    rs = RootSystemData(dim=2, roots=np.array(roots), multiplicities=tuple(mults),
                        label=f"dihedral m={m} k=({k},{k_alt})")
    return Setting.build(rs)
