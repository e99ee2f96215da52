"""Traces of networks onto vertex subsets.

Two independent routes compute the trace conductances:

* ``schur``   -- Schur complement of the Laplacian onto B;
* ``hitting`` -- ``c~(x, y) = c(x) P_x(Y(T_B^+) = y)`` with the return
  distribution assembled from harmonic extensions of the indicators ``1_{y}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve

from .errors import EmptySet, RootOutsideB
from .network import ElectricalNetwork, transition_matrix
from .resistance import resistance_matrix

METHODS = ("schur", "hitting")

# reduced conductances below this fraction of the largest one are roundoff
_ZERO_REL = 1e-13


@dataclass(frozen=True)
class TraceResult:
    """Trace of a network onto B.

    ``defect[i]`` is ``c(x) - c~(x)`` for the i-th vertex of ``reduced``.
    ``crossing`` is the unscaled conductance leaving B.  The hitting route
    also keeps ``return_probability[i, j] = P_x(Y(T_B^+) = y)``.
    """

    reduced: ElectricalNetwork
    defect: np.ndarray
    crossing: float
    method: str
    return_probability: np.ndarray | None = field(default=None, repr=False)

    @property
    def subset(self) -> tuple:
        return self.reduced.vertices


def _split(net: ElectricalNetwork, B):
    ib = net.indices(B)
    ic = np.setdiff1d(np.arange(len(net)), ib)
    return ib, ic


def harmonic_extension(net: ElectricalNetwork, B, phi) -> np.ndarray:
    """Extend ``phi`` (values on B, in the order given) harmonically to all vertices.

    ``phi`` may be a mapping vertex -> value or a sequence aligned with ``B``.
    """
    B = list(B)
    if not B:
        raise EmptySet("boundary set is empty")
    if isinstance(phi, dict):
        values = np.array([phi[b] for b in B], dtype=float)
    else:
        values = np.asarray(phi, dtype=float)
        if values.shape != (len(B),):
            raise ValueError(f"phi has shape {values.shape}, expected ({len(B)},)")
    idx = np.array([net.index(b) for b in B])
    h = np.zeros(len(net))
    h[idx] = values
    ic = np.setdiff1d(np.arange(len(net)), idx)
    if len(ic):
        L = net.laplacian()
        h[ic] = solve(L[np.ix_(ic, ic)], -L[np.ix_(ic, idx)] @ values, assume_a="pos")
    return h


def _schur(net: ElectricalNetwork, ib, ic) -> np.ndarray:
    L = net.laplacian()
    S = L[np.ix_(ib, ib)]
    if len(ic):
        S = S - L[np.ix_(ib, ic)] @ solve(L[np.ix_(ic, ic)], L[np.ix_(ic, ib)], assume_a="pos")
    return 0.5 * (S + S.T)


def hitting_return_probabilities(net: ElectricalNetwork, B) -> np.ndarray:
    """``H[i, j] = P_x(Y(T_B^+) = y)`` for x = B[i], y = B[j] (sorted index order).

    For each y, the harmonic extension h_y of ``1_{y}`` gives
    ``P_z(Y(T_B) = y)``; one step of the chain then gives the return law.
    """
    ib, ic = _split(net, B)
    P = transition_matrix(net)
    if len(ib) == 1 and len(net) == 1:
        return np.ones((1, 1))
    H_ext = np.zeros((len(net), len(ib)))
    H_ext[ib, np.arange(len(ib))] = 1.0
    if len(ic):
        L = net.laplacian()
        # all indicator boundary data at once: columns are h_y restricted to C
        H_ext[ic] = solve(L[np.ix_(ic, ic)], -L[np.ix_(ic, ib)], assume_a="pos")
    return P[ib] @ H_ext


def trace_network(net: ElectricalNetwork, B, method: str = "schur") -> TraceResult:
    """Trace of ``net`` onto ``B`` (the root must lie in B)."""
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    ib, ic = _split(net, B)
    if net.root_index not in ib:
        raise RootOutsideB(f"root {net.root!r} is not in B")
    c = net.measure
    ret = None
    if method == "schur":
        S = _schur(net, ib, ic)
        C = -S
        np.fill_diagonal(C, 0.0)
    else:
        ret = hitting_return_probabilities(net, B)
        C = c[ib][:, None] * ret
        C = 0.5 * (C + C.T)
        np.fill_diagonal(C, 0.0)
    scale = float(np.max(np.abs(C), initial=0.0))
    C[np.abs(C) <= _ZERO_REL * scale] = 0.0
    C = np.maximum(C, 0.0)
    vertices = [net.vertices[i] for i in ib]
    coords = None
    if net.coords is not None:
        coords = {v: net.coords[v] for v in vertices if v in net.coords}
    reduced = ElectricalNetwork.from_matrix(vertices, C, net.root, coords)
    if method == "schur":
        defect = c[ib] - reduced.measure
    else:
        defect = c[ib] * np.diag(ret)
    crossing = float(net.conductance[np.ix_(ib, ic)].sum()) if len(ic) else 0.0
    return TraceResult(reduced, defect, crossing, method, ret)


def crossing_conductance(net: ElectricalNetwork, A, scale: float = 1.0) -> float:
    """``scale^{-1} * sum_{x in A, y not in A} c(x, y)``."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    ia = net.indices(A, allow_empty=True)
    ic = np.setdiff1d(np.arange(len(net)), ia)
    if len(ia) == 0 or len(ic) == 0:
        return 0.0
    return float(net.conductance[np.ix_(ia, ic)].sum()) / scale


def resistance_ball(net: ElectricalNetwork, r: float, center=None, tie_tol: float = 1e-12) -> list:
    """Open ball ``{x : R(center, x) < r}``; values within ``tie_tol`` of r are excluded."""
    if r <= 0:
        raise ValueError("radius must be positive")
    center = net.root if center is None else center
    R = resistance_matrix(net).R[net.index(center)]
    return [v for v, d in zip(net.vertices, R) if d < r - tie_tol]


def ball_trace(net: ElectricalNetwork, r: float, method: str = "schur") -> TraceResult:
    """Trace onto the open resistance ball of radius r about the root."""
    ball = resistance_ball(net, r)
    if not ball:  # pragma: no cover - the root is always inside
        raise EmptySet("resistance ball is empty")
    return trace_network(net, ball, method)
