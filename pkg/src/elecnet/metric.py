"""Finite rooted metric measure spaces.

Covering numbers (exact and greedy), the entropy tail sum, Hausdorff and
Prohorov distances computed exactly, and two-sided bounds on the pointed
Gromov-Hausdorff-Prohorov distance.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from . import _kernels
from .errors import AlphaOutOfRange, EmptySet, TooLarge, TooLargeForExact, UnknownRoot
from .network import ElectricalNetwork
from .resistance import resistance_matrix

#: closed balls absorb distances within this relative slack of the radius
BALL_RTOL = 1e-12
EXACT_COVER_LIMIT = 64
EXHAUSTIVE_PROHOROV_LIMIT = 20
FLOW_PROHOROV_LIMIT = 2000
GHP_ENUMERATION_LIMIT = 50_000


@dataclass(frozen=True)
class FiniteMetricMeasureSpace:
    """Points with a metric matrix ``d``, a root and nonnegative point masses."""

    points: tuple
    d: np.ndarray
    root: object
    mass: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        n = len(self.points)
        d = np.array(self.d, dtype=float)
        m = np.array(self.mass, dtype=float).reshape(-1)
        if d.shape != (n, n) or m.shape != (n,):
            raise ValueError("metric and mass shapes do not match the point list")
        if self.root not in self.points:
            raise UnknownRoot(f"root {self.root!r} is not a point")
        tol = 1e-9 * max(1.0, float(np.max(np.abs(d), initial=0.0)))
        if np.any(np.abs(np.diag(d)) > 0) or np.max(np.abs(d - d.T), initial=0.0) > tol or np.any(d < 0):
            raise ValueError("d must be symmetric, nonnegative, with zero diagonal")
        if n >= 3:
            for y in range(n):
                if np.max(d - d[:, y][:, None] - d[y, :][None, :]) > tol:
                    raise ValueError("d violates the triangle inequality")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ValueError("masses must be finite and nonnegative")
        d = 0.5 * (d + d.T)
        d.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "mass", m)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def root_index(self) -> int:
        return self.points.index(self.root)

    def index(self, x) -> int:
        return self.points.index(x)

    @property
    def diameter(self) -> float:
        return float(self.d.max(initial=0.0))

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    def eccentricity(self, x=None) -> float:
        x = self.root if x is None else x
        return float(self.d[self.index(x)].max())

    def scaled(self, scale: float) -> "FiniteMetricMeasureSpace":
        """Same space with the metric divided by ``scale``."""
        if scale <= 0:
            raise ValueError("scale must be positive")
        return FiniteMetricMeasureSpace(self.points, self.d / scale, self.root, self.mass)

    def to_dict(self) -> dict:
        return {"points": list(self.points), "d": self.d.tolist(), "root": self.root, "mass": self.mass.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "FiniteMetricMeasureSpace":
        return cls(data["points"], data["d"], data["root"], data["mass"])


def space_from_network(net: ElectricalNetwork) -> FiniteMetricMeasureSpace:
    """Resistance metric with the vertex measure ``c(x)``, rooted at the network root."""
    return FiniteMetricMeasureSpace(net.vertices, resistance_matrix(net).R, net.root, net.measure)


def restrict(space: FiniteMetricMeasureSpace, r: float) -> FiniteMetricMeasureSpace:
    """Points at distance strictly less than r from the root, with their masses."""
    if r <= 0:
        raise ValueError("radius must be positive")
    keep = np.flatnonzero(space.d[space.root_index] < r)
    return FiniteMetricMeasureSpace(
        [space.points[i] for i in keep], space.d[np.ix_(keep, keep)], space.root, space.mass[keep]
    )


# -- covering numbers -----------------------------------------------------------


@dataclass(frozen=True)
class CoveringReport:
    epsilon: float
    count: int
    centers: tuple
    mode: str


def _ball_matrix(d: np.ndarray, eps: float) -> np.ndarray:
    return d <= eps * (1.0 + BALL_RTOL)


def _greedy_cover(balls: np.ndarray) -> list[int]:
    n = len(balls)
    uncovered = np.ones(n, dtype=bool)
    chosen = []
    while uncovered.any():
        gain = (balls & uncovered).sum(axis=1)
        c = int(np.argmax(gain))
        chosen.append(c)
        uncovered &= ~balls[c]
    return chosen


def _masks(balls: np.ndarray) -> list[int]:
    weights = [1 << j for j in range(balls.shape[1])]
    return [sum(w for w, b in zip(weights, row) if b) for row in balls]


def covering_number(space: FiniteMetricMeasureSpace, eps: float, mode: str = "exact") -> CoveringReport:
    """Smallest number of closed eps-balls covering the space.

    ``mode`` is ``exact`` (branch and bound, at most 64 points), ``greedy``
    (an upper bound) or ``auto`` (exact when possible).
    """
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    if mode not in ("exact", "greedy", "auto"):
        raise ValueError(f"unknown mode {mode!r}")
    n = len(space)
    if mode == "auto":
        mode = "exact" if n <= EXACT_COVER_LIMIT else "greedy"
    if mode == "exact" and n > EXACT_COVER_LIMIT:
        raise TooLargeForExact(f"exact covering supports at most {EXACT_COVER_LIMIT} points, got {n}")
    balls = _ball_matrix(space.d, eps)
    greedy = _greedy_cover(balls)
    if mode == "greedy" or len(greedy) <= 1:
        chosen = sorted(greedy)
    else:
        sel0 = sum(1 << c for c in greedy)
        _, sel = _kernels.set_cover_exact(_masks(balls), sel0)
        chosen = [c for c in range(n) if (sel >> c) & 1]
    return CoveringReport(float(eps), len(chosen), tuple(space.points[c] for c in chosen), mode)


def entropy_tail(space: FiniteMetricMeasureSpace, alpha: float, m: int = 0, scale: float = 1.0,
                 mode: str = "auto") -> float:
    """``sum_{k >= m} N(2^{-k})^2 exp(-2^{alpha k})`` for the metric divided by ``scale``.

    Once ``N`` equals the number of points the remaining terms are summed
    directly until the geometric bound on what is left drops below 1e-18.
    """
    if not 0 < alpha < 0.5:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1/2), got {alpha}")
    if m < 0:
        raise ValueError("m must be nonnegative")
    sp = space.scaled(scale) if scale != 1.0 else space
    n = len(sp)
    d_pos = sp.d[sp.d > 0]
    d_min = float(d_pos.min()) if d_pos.size else math.inf
    diam = sp.diameter
    terms = []
    k = m
    while True:
        eps = 2.0**-k
        if eps >= diam:
            N = 1
        elif eps * (1.0 + BALL_RTOL) < d_min:
            N = n
        else:
            N = covering_number(sp, eps, mode).count
        term = N * N * math.exp(-(2.0 ** (alpha * k)))
        terms.append(term)
        if N == n:
            # successive ratios are at most q for all later k
            q = math.exp(-(2.0 ** (alpha * (k + 1))) * (2.0**alpha - 1.0))
            if term * q / (1.0 - q) < 1e-18:
                break
        k += 1
    return math.fsum(terms)


# -- Hausdorff distance ---------------------------------------------------------


def hausdorff_distance(space: FiniteMetricMeasureSpace, A, B) -> float:
    """Hausdorff distance between point sets; ``inf`` if exactly one is empty."""
    ia = [space.index(a) for a in A]
    ib = [space.index(b) for b in B]
    if not ia and not ib:
        return 0.0
    if not ia or not ib:
        return math.inf
    D = space.d[np.ix_(ia, ib)]
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


# -- Prohorov distance ----------------------------------------------------------


def _subset_sums(w: np.ndarray) -> np.ndarray:
    s = np.zeros(1 << len(w))
    for k, wk in enumerate(w):
        h = 1 << k
        s[h : 2 * h] = s[:h] + wk
    return s


class _ExhaustiveExcess:
    """``max_A mu(A) - nu(A^eps)`` in both directions by enumerating subsets."""

    def __init__(self, D, mu, nu):
        self.D = D
        self.mu_s = _subset_sums(mu)
        self.nu_s = _subset_sums(nu)
        self.n = len(mu)

    def __call__(self, eps: float) -> float:
        n = self.n
        near = self.D <= eps
        nb = np.zeros(1 << n, dtype=np.int64)
        for k in range(n):
            h = 1 << k
            row = int(sum(1 << j for j in np.flatnonzero(near[k])))
            nb[h : 2 * h] = nb[:h] | row
        return float(max(np.max(self.mu_s - self.nu_s[nb]), np.max(self.nu_s - self.mu_s[nb])))


class _FlowExcess:
    """Same quantity through max-flow: ``max_A mu(A) - nu(N(A)) = mu(V) - maxflow``."""

    def __init__(self, D, mu, nu):
        self.D, self.mu, self.nu = D, mu, nu

    @staticmethod
    def _one_way(near, a, b) -> float:
        g = nx.DiGraph()
        n = len(a)
        for i in range(n):
            if a[i] > 0:
                g.add_edge("s", ("l", i), capacity=float(a[i]))
            if b[i] > 0:
                g.add_edge(("r", i), "t", capacity=float(b[i]))
        for i, j in zip(*np.nonzero(near)):
            if a[i] > 0 and b[j] > 0:
                g.add_edge(("l", int(i)), ("r", int(j)))
        if "s" not in g or "t" not in g:
            return float(a.sum())
        flow = nx.maximum_flow_value(g, "s", "t")
        return max(0.0, float(a.sum()) - flow)

    def __call__(self, eps: float) -> float:
        near = self.D <= eps
        return max(self._one_way(near, self.mu, self.nu), self._one_way(near, self.nu, self.mu))


def prohorov_distance(D, mu, nu, method: str = "auto") -> float:
    """Prohorov distance between two measures on a finite metric space ``D``.

    With closed neighbourhoods, ``g(eps) = max_A (mu(A) - nu(A^eps))`` (and
    the symmetric term) is piecewise constant and right-continuous with jumps
    only at pairwise distances.  Writing ``d_0 = 0 < d_1 < ...`` for the
    distinct distances and ``G_i = g(d_i)``, the distance is
    ``min_i max(d_i, G_i)``; since d increases and G decreases, bisection
    over i finds it with O(log n) evaluations of g.

    ``method`` picks how g is evaluated: ``exhaustive`` (subset enumeration,
    at most 20 points), ``flow`` (bipartite max-flow) or ``auto``.
    """
    D = np.asarray(D.d if isinstance(D, FiniteMetricMeasureSpace) else D, dtype=float)
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    n = len(mu)
    if D.shape != (n, n) or nu.shape != (n,):
        raise ValueError("shapes of metric and measures disagree")
    if np.any(mu < 0) or np.any(nu < 0):
        raise ValueError("masses must be nonnegative")
    if method == "auto":
        method = "exhaustive" if n <= EXHAUSTIVE_PROHOROV_LIMIT else "flow"
    if method == "exhaustive":
        if n > EXHAUSTIVE_PROHOROV_LIMIT:
            raise TooLarge(f"exhaustive Prohorov supports at most {EXHAUSTIVE_PROHOROV_LIMIT} points")
        g = _ExhaustiveExcess(D, mu, nu)
    elif method == "flow":
        if n > FLOW_PROHOROV_LIMIT:
            raise TooLarge(f"Prohorov distance supports at most {FLOW_PROHOROV_LIMIT} points, got {n}")
        g = _FlowExcess(D, mu, nu)
    else:
        raise ValueError(f"unknown method {method!r}")
    levels = np.unique(np.concatenate([[0.0], D.ravel()]))
    cache: dict[int, float] = {}

    def G(i):
        if i not in cache:
            cache[i] = g(float(levels[i]))
        return cache[i]

    lo, hi = 0, len(levels)  # first i with levels[i] >= G(i)
    while lo < hi:
        mid = (lo + hi) // 2
        if levels[mid] >= G(mid):
            hi = mid
        else:
            lo = mid + 1
    cands = []
    if lo < len(levels):
        cands.append(float(levels[lo]))
    if lo > 0:
        cands.append(G(lo - 1))
    return min(cands)


# -- Gromov-Hausdorff-Prohorov bounds -------------------------------------------


@dataclass(frozen=True)
class GhpBounds:
    lower: float
    upper: float
    correspondence: tuple
    exhaustive: bool

    def __iter__(self):
        return iter((self.lower, self.upper))


def ghp_lower_bound(X: FiniteMetricMeasureSpace, Y: FiniteMetricMeasureSpace) -> float:
    """Largest of half the diameter gap, the total-mass gap and half the root-eccentricity gap."""
    return max(
        abs(X.diameter - Y.diameter) / 2.0,
        abs(X.total_mass - Y.total_mass),
        abs(X.eccentricity() - Y.eccentricity()) / 2.0,
    )


def _distortion(dX, dY, px, py) -> float:
    return float(np.max(np.abs(dX[np.ix_(px, px)] - dY[np.ix_(py, py)])))


def _pairs(f, g):
    px = list(range(len(f))) + list(g)
    py = list(f) + list(range(len(g)))
    return np.array(px), np.array(py)


def _glued_bound(X, Y, px, py, dis: float) -> float:
    """Root, Hausdorff and Prohorov terms for the correspondence gluing.

    Cross distances are ``min over related (x', y') of d_X(x, x') + dis/2 +
    d_Y(y', y)``.  Root and Hausdorff terms equal ``dis/2`` because the root
    pair and every point appear in the correspondence.
    """
    n1, n2 = len(X), len(Y)
    cross = (X.d[:, px][:, :, None] + Y.d[py, :][None, :, :]).min(axis=1) + dis / 2.0
    D = np.zeros((n1 + n2, n1 + n2))
    D[:n1, :n1] = X.d
    D[n1:, n1:] = Y.d
    D[:n1, n1:] = cross
    D[n1:, :n1] = cross.T
    mu = np.concatenate([X.mass, np.zeros(n2)])
    nu = np.concatenate([np.zeros(n1), Y.mass])
    return max(dis / 2.0, prohorov_distance(D, mu, nu))


def _local_search(X, Y, f, g, r1, r2, max_rounds: int = 50):
    """Single-reassignment hill climbing on the distortion."""
    n1, n2 = len(X), len(Y)
    f, g = list(f), list(g)
    best = _distortion(X.d, Y.d, *_pairs(f, g))
    for _ in range(max_rounds):
        improved = False
        for x in range(n1):
            if x == r1:
                continue
            for y in range(n2):
                if y == f[x]:
                    continue
                old, f[x] = f[x], y
                val = _distortion(X.d, Y.d, *_pairs(f, g))
                if val < best - 1e-15:
                    best, improved = val, True
                else:
                    f[x] = old
        for y in range(n2):
            if y == r2:
                continue
            for x in range(n1):
                if x == g[y]:
                    continue
                old, g[y] = g[y], x
                val = _distortion(X.d, Y.d, *_pairs(f, g))
                if val < best - 1e-15:
                    best, improved = val, True
                else:
                    g[y] = old
        if not improved:
            break
    return f, g, best


def ghp_distance_bounds(X: FiniteMetricMeasureSpace, Y: FiniteMetricMeasureSpace,
                        enumeration_limit: int = GHP_ENUMERATION_LIMIT) -> GhpBounds:
    """Lower and upper bounds on the pointed GHP distance between finite spaces.

    The upper bound minimises over correspondences ``graph(f) ∪ graph(g)^T``
    with ``f(root_X) = root_Y`` and ``g(root_Y) = root_X``, each glued into a
    metric on the disjoint union.  All such correspondences are tried when
    there are at most ``enumeration_limit`` of them (in order of increasing
    distortion, stopping once half the distortion exceeds the incumbent);
    otherwise local search from a few starting maps is used.
    """
    n1, n2 = len(X), len(Y)
    r1, r2 = X.root_index, Y.root_index
    lower = ghp_lower_bound(X, Y)
    count = n2 ** (n1 - 1) * n1 ** (n2 - 1)
    best, best_corr = math.inf, ()
    if count <= enumeration_limit:
        others1 = [x for x in range(n1) if x != r1]
        others2 = [y for y in range(n2) if y != r2]
        scored = []
        for fv in itertools.product(range(n2), repeat=n1 - 1):
            f = [0] * n1
            f[r1] = r2
            for x, y in zip(others1, fv):
                f[x] = y
            for gv in itertools.product(range(n1), repeat=n2 - 1):
                g = [0] * n2
                g[r2] = r1
                for y, x in zip(others2, gv):
                    g[y] = x
                px, py = _pairs(f, g)
                scored.append((_distortion(X.d, Y.d, px, py), f.copy(), g))
        scored.sort(key=lambda s: s[0])
        for dis, f, g in scored:
            if dis / 2.0 >= best:
                break
            px, py = _pairs(f, g)
            val = _glued_bound(X, Y, px, py, dis)
            if val < best:
                best, best_corr = val, tuple(zip(px.tolist(), py.tolist()))
        exhaustive = True
    else:
        starts = []
        ecc1, ecc2 = X.d[r1], Y.d[r2]
        f0 = [int(np.argmin(np.abs(ecc2 - ecc1[x]))) for x in range(n1)]
        g0 = [int(np.argmin(np.abs(ecc1 - ecc2[y]))) for y in range(n2)]
        f0[r1], g0[r2] = r2, r1
        starts.append((f0, g0))
        if n1 == n2:
            # index identity, with the roots swapped into place
            perm = list(range(n1))
            perm[r1], perm[r2] = perm[r2], perm[r1]
            f1 = [perm[x] for x in range(n1)]
            g1 = [0] * n2
            for x, y in enumerate(f1):
                g1[y] = x
            starts.append((f1, g1))
        for f, g in starts:
            for ff, gg in ((f, g), _local_search(X, Y, f, g, r1, r2)[:2]):
                px, py = _pairs(ff, gg)
                val = _glued_bound(X, Y, px, py, _distortion(X.d, Y.d, px, py))
                if val < best:
                    best, best_corr = val, tuple(zip(px.tolist(), py.tolist()))
        exhaustive = False
    corr = tuple(sorted({(X.points[a], Y.points[b]) for a, b in best_corr}, key=repr))
    return GhpBounds(lower, max(best, lower), corr, exhaustive)
