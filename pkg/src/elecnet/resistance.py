"""Effective resistance, resistance between sets, fusing, and the inverse map
from resistance matrices back to conductances."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve

from .errors import DomainMismatch, FullSet, NetworkError, NotResistanceMetric, RootOutsideB, UnknownRoot
from .network import ElectricalNetwork

#: identifier given to the vertex that replaces a fused complement
FUSED_VERTEX = "★"

#: recovered conductances in [-NEG_TOL, 0) are roundoff; below that the
#: input is not a resistance metric
NEG_TOL = 1e-9


@dataclass(frozen=True)
class ResistanceMatrix:
    """All-pairs effective resistances over an ordered point list."""

    points: tuple
    R: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        R = np.asarray(self.R, dtype=float)
        if R.shape != (len(self.points),) * 2:
            raise ValueError(f"matrix shape {R.shape} does not match {len(self.points)} points")
        object.__setattr__(self, "R", R)

    def __getitem__(self, pair):
        x, y = pair
        return float(self.R[self.points.index(x), self.points.index(y)])

    def restrict(self, subset) -> "ResistanceMatrix":
        idx = [self.points.index(p) for p in subset]
        return ResistanceMatrix(tuple(self.points[i] for i in idx), self.R[np.ix_(idx, idx)])

    def triangle_violation(self) -> float:
        """Largest ``R(x,z) - R(x,y) - R(y,z)`` over all triples (<= 0 for a metric)."""
        R = self.R
        if len(R) < 3:
            return 0.0
        # max over y of R[x,z] - R[x,y] - R[y,z]
        worst = -np.inf
        for y in range(len(R)):
            worst = max(worst, float(np.max(R - R[:, y][:, None] - R[y, :][None, :])))
        return worst


def _grounded(net: ElectricalNetwork, ground: int | None = None):
    """Cholesky factor of the Laplacian with row/column ``ground`` removed."""
    g = net.root_index if ground is None else ground
    key = ("grounded", g)
    if key not in net._cache:
        L = net.laplacian()
        keep = np.delete(np.arange(len(net)), g)
        net._cache[key] = (keep, cho_factor(L[np.ix_(keep, keep)]))
    return net._cache[key]


def _potentials(net: ElectricalNetwork, rhs: np.ndarray) -> np.ndarray:
    """Solve ``L v = rhs`` (rhs columns sum to zero) with v(root) = 0."""
    keep, fac = _grounded(net)
    rhs = np.asarray(rhs, dtype=float)
    v = np.zeros(rhs.shape)
    v[keep] = cho_solve(fac, rhs[keep])
    return v


def effective_resistance(net: ElectricalNetwork, x, y) -> float:
    """R(x, y): potential difference for a unit current from x to y."""
    i, j = net.index(x), net.index(y)
    if i == j:
        return 0.0
    rhs = np.zeros(len(net))
    rhs[i], rhs[j] = 1.0, -1.0
    v = _potentials(net, rhs)
    return float(v[i] - v[j])


def resistance_matrix(net: ElectricalNetwork) -> ResistanceMatrix:
    """All-pairs effective resistances from one grounded factorisation."""
    n = len(net)
    if n == 1:
        return ResistanceMatrix(net.vertices, np.zeros((1, 1)))
    keep, fac = _grounded(net)
    G = np.zeros((n, n))
    G[np.ix_(keep, keep)] = cho_solve(fac, np.eye(n - 1))
    d = np.diag(G)
    R = d[:, None] + d[None, :] - 2.0 * G
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 0.0)
    np.maximum(R, 0.0, out=R)
    return ResistanceMatrix(net.vertices, R)


def _dirichlet_solve(net: ElectricalNetwork, fixed: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Harmonic function off ``fixed`` with prescribed ``values`` on it."""
    n = len(net)
    f = np.zeros(n)
    f[fixed] = values
    free = np.setdiff1d(np.arange(n), fixed)
    if len(free):
        L = net.laplacian()
        f[free] = solve(L[np.ix_(free, free)], -L[np.ix_(free, fixed)] @ values, assume_a="pos")
    return f


def resistance_between_sets(net: ElectricalNetwork, A, B) -> float:
    """``(inf{E(f,f) : f = 1 on A, f = 0 on B})^{-1}``; zero if A and B meet."""
    ia, ib = net.indices(A), net.indices(B)
    if np.intersect1d(ia, ib).size:
        return 0.0
    fixed = np.concatenate([ia, ib])
    f = _dirichlet_solve(net, fixed, np.concatenate([np.ones(len(ia)), np.zeros(len(ib))]))
    L = net.laplacian()
    energy = float(f @ L @ f)
    return 1.0 / energy


def conductances_from_resistance(R, root=None, *, tol: float = NEG_TOL) -> ElectricalNetwork:
    """Recover the network whose effective resistance is ``R``.

    Centres ``R`` with ``J = I - 11^T/n``, forms ``K = -J R J / 2`` (the
    pseudo-inverse of the Laplacian) and pseudo-inverts it.  Off-diagonal
    Laplacian entries above ``tol`` mean ``R`` is not a resistance metric.
    """
    if not isinstance(R, ResistanceMatrix):
        points, mat = R
        R = ResistanceMatrix(points, mat)
    M = R.R
    n = len(R.points)
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-9 or np.any(np.abs(np.diag(M)) > 1e-12):
        raise NotResistanceMetric("matrix is not symmetric with zero diagonal")
    root = R.points[0] if root is None else root
    if root not in R.points:
        raise UnknownRoot(f"root {root!r} is not a point")
    if n == 1:
        return ElectricalNetwork.from_matrix(R.points, np.zeros((1, 1)), root)
    J = np.eye(n) - 1.0 / n
    K = -0.5 * J @ M @ J
    L = np.linalg.pinv(K, hermitian=True)
    L = 0.5 * (L + L.T)
    off = ~np.eye(n, dtype=bool)
    worst = float(np.max(L[off]))
    if worst > tol:
        i, j = np.argwhere(np.where(off, L, -np.inf) == worst)[0]
        raise NotResistanceMetric(
            f"recovered conductance {-worst!r} between {R.points[i]!r} and {R.points[j]!r} is negative"
        )
    C = np.where(off, -L, 0.0)
    # clamp roundoff: tiny negatives and entries indistinguishable from zero
    scale = float(np.max(C))
    C[C < 1e-12 * scale] = 0.0
    try:
        return ElectricalNetwork.from_matrix(R.points, C, root)
    except NetworkError as exc:
        raise NotResistanceMetric(f"recovered conductances do not form a network: {exc}") from None


def fuse_complement(net: ElectricalNetwork, B, star=FUSED_VERTEX) -> ElectricalNetwork:
    """Identify ``V \\ B`` to a single vertex ``star``.

    Conductances inside B are kept; ``c(x, star) = sum_{y not in B} c(x, y)``.
    """
    ib = net.indices(B)
    n = len(net)
    if len(ib) == n:
        raise FullSet("B is the whole vertex set; nothing to fuse")
    if net.root_index not in ib:
        raise RootOutsideB(f"root {net.root!r} must lie in B")
    if star in net.vertices:
        raise NetworkError(f"fused vertex name {star!r} collides with an existing vertex")
    out = np.setdiff1d(np.arange(n), ib)
    m = len(ib)
    C = np.zeros((m + 1, m + 1))
    C[:m, :m] = net.conductance[np.ix_(ib, ib)]
    to_star = net.conductance[np.ix_(ib, out)].sum(axis=1)
    C[:m, m] = to_star
    C[m, :m] = to_star
    vertices = [net.vertices[i] for i in ib] + [star]
    coords = None
    if net.coords is not None:
        coords = {v: net.coords[v] for v in vertices[:m] if v in net.coords}
    return ElectricalNetwork.from_matrix(vertices, C, net.root, coords)


@dataclass(frozen=True)
class FusedErrorRow:
    x: object
    y: object
    R: float
    R_fused: float
    bound: float
    R_to_complement: float

    @property
    def error(self) -> float:
        return abs(self.R - self.R_fused)

    def ok(self, tol: float = 1e-10) -> bool:
        return self.R_fused <= self.R + tol and self.error <= self.bound + tol


def fused_metric_error_report(net: ElectricalNetwork, B, pairs) -> list[FusedErrorRow]:
    """Compare R with the fused metric R^(B) on pairs inside B.

    The bound is ``2 R(x, B^c)^{-1/2} R(x, y)^{3/2}``.
    """
    fused = fuse_complement(net, B)
    B = [net.vertices[i] for i in net.indices(B)]
    Bset = set(B)
    comp = [v for v in net.vertices if v not in Bset]
    RB = resistance_matrix(fused)
    R_full = resistance_matrix(net)
    rows = []
    for x, y in pairs:
        if x not in Bset or y not in Bset:
            raise DomainMismatch(f"pair ({x!r}, {y!r}) is not inside B")
        r = R_full[x, y]
        rc = resistance_between_sets(net, [x], comp)
        rows.append(FusedErrorRow(x, y, r, RB[x, y], 2.0 * rc**-0.5 * r**1.5, rc))
    return rows
