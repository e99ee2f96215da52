"""Finite electrical networks: validation, energy form, Laplacian, walk kernel.

Vertices are indexed in declaration order; every matrix and vector in the
package uses that order.  A network is immutable once built.
"""
from __future__ import annotations

import json
from collections.abc import Hashable, Iterable, Mapping, Sequence
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    Disconnected,
    DomainMismatch,
    DuplicateEdge,
    EmptySet,
    IoError,
    NetworkError,
    NonPositiveConductance,
    SelfLoop,
    UnknownRoot,
    UnknownVertex,
)

#: conductances at or below this are rejected as non-positive
MIN_CONDUCTANCE = 1e-300
#: absolute tolerance for symmetry checks on conductance matrices
VALIDATION_TOL = 1e-12


class ElectricalNetwork:
    """Connected weighted graph with symmetric positive conductances and a root.

    Parameters are normally supplied through :func:`build_network` or
    :meth:`from_matrix`; the constructor trusts its inputs.

    Attributes
    ----------
    vertices : tuple
        Vertex identifiers in index order.
    conductance : (n, n) ndarray
        Symmetric, zero-diagonal, read-only conductance matrix.
    root : hashable
        Distinguished vertex.
    coords : dict or None
        Optional planar coordinates, vertex -> (x, y).
    """

    __slots__ = ("vertices", "conductance", "root", "coords", "_index", "_cache")

    def __init__(self, vertices, conductance, root, coords=None):
        self.vertices = tuple(vertices)
        c = np.array(conductance, dtype=float)
        c.setflags(write=False)
        self.conductance = c
        self.root = root
        self.coords = None if coords is None else dict(coords)
        self._index = {v: i for i, v in enumerate(self.vertices)}
        self._cache = {}

    # -- construction -----------------------------------------------------

    @classmethod
    def from_matrix(cls, vertices, conductance, root, coords=None) -> "ElectricalNetwork":
        """Validate a dense conductance matrix and wrap it."""
        vertices = tuple(vertices)
        c = np.asarray(conductance, dtype=float)
        n = len(vertices)
        if c.shape != (n, n):
            raise NetworkError(f"conductance matrix has shape {c.shape}, expected {(n, n)}")
        if len(set(vertices)) != n:
            raise NetworkError("duplicate vertex identifiers")
        if np.any(np.diag(c) != 0):
            i = int(np.flatnonzero(np.diag(c))[0])
            raise SelfLoop(f"self-loop at vertex {vertices[i]!r}")
        if not np.all(np.isfinite(c)):
            raise NonPositiveConductance("conductance matrix has non-finite entries")
        if np.max(np.abs(c - c.T), initial=0.0) > VALIDATION_TOL:
            raise NetworkError("conductance matrix is not symmetric")
        c = 0.5 * (c + c.T)
        bad = np.argwhere(c < 0)
        if len(bad):
            i, j = bad[0]
            raise NonPositiveConductance(
                f"negative conductance {c[i, j]!r} on edge ({vertices[i]!r}, {vertices[j]!r})"
            )
        net = cls(vertices, c, root, coords)
        net._validate()
        return net

    def _validate(self):
        if self.root not in self._index:
            raise UnknownRoot(f"root {self.root!r} is not a vertex")
        n = len(self.vertices)
        if n > 1:
            ncomp, labels = connected_components(csr_matrix(self.conductance > 0), directed=False)
            if ncomp > 1:
                other = self.vertices[int(np.flatnonzero(labels != labels[0])[0])]
                raise Disconnected(
                    f"network has {ncomp} components; {self.vertices[0]!r} and {other!r} "
                    "are not connected"
                )

    # -- basic accessors --------------------------------------------------

    def __len__(self):
        return len(self.vertices)

    def __repr__(self):
        return f"ElectricalNetwork(n={len(self)}, edges={self.n_edges}, root={self.root!r})"

    def __eq__(self, other):
        if not isinstance(other, ElectricalNetwork):
            return NotImplemented
        return (
            self.vertices == other.vertices
            and self.root == other.root
            and np.array_equal(self.conductance, other.conductance)
        )

    __hash__ = None

    def index(self, v: Hashable) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise UnknownVertex(f"unknown vertex {v!r}") from None

    def indices(self, vs: Iterable[Hashable], *, allow_empty=False) -> np.ndarray:
        """Sorted unique indices of a vertex collection."""
        idx = sorted({self.index(v) for v in vs})
        if not idx and not allow_empty:
            raise EmptySet("vertex set is empty")
        return np.array(idx, dtype=np.intp)

    @property
    def root_index(self) -> int:
        return self._index[self.root]

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.conductance)))

    def edges(self):
        """List of ``(u, v, conductance)`` with ``index(u) < index(v)``."""
        iu, ju = np.nonzero(np.triu(self.conductance))
        return [(self.vertices[i], self.vertices[j], float(self.conductance[i, j])) for i, j in zip(iu, ju)]

    @property
    def measure(self) -> np.ndarray:
        """Associated vertex measure, c(x) = sum_y c(x, y)."""
        if "measure" not in self._cache:
            m = self.conductance.sum(axis=1)
            m.setflags(write=False)
            self._cache["measure"] = m
        return self._cache["measure"]

    def laplacian(self) -> np.ndarray:
        """Dense combinatorial Laplacian ``diag(c) - C`` (a fresh copy)."""
        return np.diag(self.measure) - self.conductance

    def as_vector(self, f) -> np.ndarray:
        """Coerce a vertex function (mapping or sequence) to an index-ordered vector."""
        n = len(self)
        if isinstance(f, Mapping):
            if set(f) != set(self.vertices):
                missing = set(self.vertices) - set(f)
                extra = set(f) - set(self.vertices)
                raise DomainMismatch(f"function domain mismatch: missing={missing}, extra={extra}")
            return np.array([f[v] for v in self.vertices], dtype=float)
        arr = np.asarray(f, dtype=float)
        if arr.shape != (n,):
            raise DomainMismatch(f"function has shape {arr.shape}, expected ({n},)")
        return arr

    def with_root(self, root) -> "ElectricalNetwork":
        net = ElectricalNetwork(self.vertices, self.conductance, root, self.coords)
        net._validate()
        return net


def build_network(vertices: Sequence[Hashable], edges: Iterable, root: Hashable, coords=None) -> ElectricalNetwork:
    """Build and validate a network from a vertex list and ``(u, v, c)`` edges.

    Repeated edges are accepted only when they carry the same conductance.

    Raises
    ------
    UnknownVertex, SelfLoop, NonPositiveConductance, DuplicateEdge,
    UnknownRoot, Disconnected
    """
    vertices = tuple(vertices)
    if len(set(vertices)) != len(vertices):
        raise NetworkError("duplicate vertex identifiers")
    if not vertices:
        raise EmptySet("network has no vertices")
    index = {v: i for i, v in enumerate(vertices)}
    n = len(vertices)
    c = np.zeros((n, n))
    for edge in edges:
        try:
            u, v, w = edge
        except (TypeError, ValueError):
            raise NetworkError(f"malformed edge {edge!r}; expected [u, v, conductance]") from None
        for end in (u, v):
            if end not in index:
                raise UnknownVertex(f"edge ({u!r}, {v!r}) references unknown vertex {end!r}")
        if u == v:
            raise SelfLoop(f"self-loop ({u!r}, {v!r})")
        w = float(w)
        if not np.isfinite(w) or w <= MIN_CONDUCTANCE:
            raise NonPositiveConductance(f"edge ({u!r}, {v!r}) has conductance {w!r}")
        i, j = index[u], index[v]
        if c[i, j] != 0 and c[i, j] != w:
            raise DuplicateEdge(f"edge ({u!r}, {v!r}) given twice with weights {c[i, j]!r} and {w!r}")
        c[i, j] = c[j, i] = w
    if root not in index:
        raise UnknownRoot(f"root {root!r} is not a vertex")
    if coords is not None:
        coords = {v: tuple(float(t) for t in coords[v]) for v in coords}
        unknown = set(coords) - set(vertices)
        if unknown:
            raise UnknownVertex(f"coordinates given for unknown vertices {sorted(map(str, unknown))}")
    net = ElectricalNetwork(vertices, c, root, coords)
    net._validate()
    return net


def associated_measure(net: ElectricalNetwork) -> np.ndarray:
    """Vertex masses c(x), ordered like ``net.vertices``."""
    return net.measure.copy()


def dirichlet_energy(net: ElectricalNetwork, f, g=None) -> float:
    """Energy form ``1/2 sum_{x,y} c(x,y) (f(x)-f(y)) (g(x)-g(y))``.

    ``g`` defaults to ``f``.
    """
    fv = net.as_vector(f)
    gv = fv if g is None else net.as_vector(g)
    iu, ju = np.nonzero(np.triu(net.conductance))
    w = net.conductance[iu, ju]
    return float(np.sum(w * (fv[iu] - fv[ju]) * (gv[iu] - gv[ju])))


def transition_matrix(net: ElectricalNetwork) -> np.ndarray:
    """Row-stochastic matrix P(x, y) = c(x, y) / c(x).

    A single-vertex network has the 1x1 identity as its (trivial) kernel.
    """
    if len(net) == 1:
        return np.ones((1, 1))
    return net.conductance / net.measure[:, None]


# -- JSON network files --------------------------------------------------------


def network_to_dict(net: ElectricalNetwork) -> dict:
    out = {
        "vertices": list(net.vertices),
        "root": net.root,
        "edges": [[u, v, w] for u, v, w in net.edges()],
    }
    if net.coords is not None:
        out["coords"] = {str(v): list(net.coords[v]) for v in net.vertices if v in net.coords}
    return out


def network_from_dict(data: Mapping) -> ElectricalNetwork:
    """Inverse of :func:`network_to_dict`; extra keys (e.g. ``metadata``) are ignored."""
    try:
        vertices = list(data["vertices"])
        edges = data["edges"]
        root = data["root"]
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"network data missing field {exc}") from None
    coords = None
    if data.get("coords") is not None:
        # JSON object keys are strings while vertex ids may be ints
        by_str = {str(v): v for v in vertices}
        coords = {}
        for key, xy in data["coords"].items():
            if key not in by_str:
                raise UnknownVertex(f"coordinates given for unknown vertex {key!r}")
            coords[by_str[key]] = xy
    return build_network(vertices, edges, root, coords)


def load_network(path) -> ElectricalNetwork:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoError(f"cannot read network file {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IoError(f"{path}: invalid JSON ({exc})") from None
    return network_from_dict(data)


def save_network(net: ElectricalNetwork, path, metadata=None) -> None:
    data = network_to_dict(net)
    if metadata is not None:
        data = {"metadata": metadata, **data}
    Path(path).write_text(json.dumps(data, indent=1) + "\n")
