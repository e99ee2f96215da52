"""Sierpinski gasket approximation networks.

Points are kept in exact lattice coordinates: ``(i, j)`` at level n stands for
``2^{-n} (i e1 + j e2)`` with ``e1 = (1, 0)`` and ``e2 = (1/2, sqrt(3)/2)``.
The window ``K^(N) = 2^N K^(0)`` is the closed triangle ``i, j >= 0,
i + j <= 2^{n+N}``, and inside it the level-n vertices are the corners of the
upward unit cells ``(a, b)`` with ``a & b == 0`` of a gasket of side
``2^{n+N}``.

Vertex identifiers are the lattice coordinates written as reduced dyadic
fractions, e.g. ``"1/2,0"``, so a vertex keeps its name across levels.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .network import ElectricalNetwork, build_network
from .resistance import ResistanceMatrix, fuse_complement, resistance_matrix
from .trace import crossing_conductance, trace_network

ROOT = "0,0"
_SQRT3_2 = 3**0.5 / 2


@dataclass(frozen=True)
class GasketSpec:
    """Parameters of a gasket build.

    ``a_n`` multiplies every raw edge conductance (default ``(5/3)^n``);
    ``b_n`` is the measure normalisation (default ``3^n``).  Random mode draws
    raw conductances uniformly from ``[lo, hi]``.
    """

    n: int
    N: int = 0
    mode: str = "deterministic"
    lo: float = 1.0
    hi: float = 1.0
    seed: int = 0
    a_n: float | None = field(default=None)
    b_n: float | None = field(default=None)

    def __post_init__(self):
        if self.n < 0 or self.N < 0:
            raise ValueError("n and N must be nonnegative")
        if self.mode not in ("deterministic", "random"):
            raise ValueError(f"mode must be deterministic or random, got {self.mode!r}")
        if not 0 < self.lo <= self.hi:
            raise ValueError("need 0 < lo <= hi")
        if self.a_n is None:
            object.__setattr__(self, "a_n", (5.0 / 3.0) ** self.n)
        if self.b_n is None:
            object.__setattr__(self, "b_n", 3.0**self.n)

    def at_level(self, n: int) -> "GasketSpec":
        """Same window and mode at another level, with default scalings."""
        return GasketSpec(n, self.N, self.mode, self.lo, self.hi, self.seed)


def _frac(p: int, n: int) -> str:
    f = Fraction(p, 2**n)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def vertex_id(i: int, j: int, n: int) -> str:
    """Identifier of lattice point ``(i, j)`` at level n."""
    return f"{_frac(i, n)},{_frac(j, n)}"


def parse_vertex(v: str) -> tuple[Fraction, Fraction]:
    """Lattice coordinates (in units of 1) of a vertex identifier."""
    a, b = v.split(",")
    return Fraction(a), Fraction(b)


def lattice_at(v: str, n: int) -> tuple[int, int]:
    """Integer lattice coordinates of ``v`` at level n."""
    a, b = parse_vertex(v)
    i, j = a * 2**n, b * 2**n
    if i.denominator != 1 or j.denominator != 1:
        raise ValueError(f"{v!r} is not a level-{n} point")
    return int(i), int(j)


def cartesian(i, j, n: int) -> tuple[float, float]:
    s = 2.0**-n
    return (float(i) + 0.5 * float(j)) * s, float(j) * _SQRT3_2 * s


def upward_cells(L: int) -> list[tuple[int, int]]:
    """Lower-left corners ``(a, b)`` of the upward unit cells of the side-``2^L`` gasket."""
    side = 1 << L
    return [(a, b) for a in range(side) for b in range(side - a) if a & b == 0]


def gasket_points(L: int) -> list[tuple[int, int]]:
    """Corners of the upward unit cells of the gasket of side ``2^L``, sorted."""
    pts = set()
    for a, b in upward_cells(L):
        pts.update(((a, b), (a + 1, b), (a, b + 1)))
    return sorted(pts)


def gasket_edges(points, L: int) -> list[tuple[int, int]]:
    """Sides of the upward unit cells as sorted index pairs.

    Joining every pair at unit lattice distance would also add chords
    across the corners of the holes (from side 4 on), which are not edges
    of the gasket graph.
    """
    index = {p: k for k, p in enumerate(points)}
    edges = []
    for a, b in upward_cells(L):
        p, q, r = index[(a, b)], index[(a + 1, b)], index[(a, b + 1)]
        edges.extend(((min(p, q), max(p, q)), (min(p, r), max(p, r)), (min(q, r), max(q, r))))
    return sorted(edges)


def in_window(i: int, j: int, n: int, N: int) -> bool:
    """Closed membership of level-n lattice point ``(i, j)`` in ``K^(N)``."""
    return i >= 0 and j >= 0 and i + j <= 1 << (n + N)


def build_gasket(spec: GasketSpec) -> ElectricalNetwork:
    """Level-n gasket network inside the window ``K^(N)``, rooted at the origin.

    Every edge gets conductance ``a_n * raw`` where ``raw`` is 1
    (deterministic) or an independent ``U(lo, hi)`` draw taken in edge order
    from ``numpy.random.default_rng(seed)``.
    """
    pts = gasket_points(spec.n + spec.N)
    edges = gasket_edges(pts, spec.n + spec.N)
    if spec.mode == "random":
        raw = np.random.default_rng(spec.seed).uniform(spec.lo, spec.hi, size=len(edges))
    else:
        raw = np.ones(len(edges))
    names = [vertex_id(i, j, spec.n) for i, j in pts]
    coords = {v: cartesian(i, j, spec.n) for v, (i, j) in zip(names, pts)}
    triples = [(names[a], names[b], spec.a_n * w) for (a, b), w in zip(edges, raw)]
    return build_network(names, triples, ROOT, coords)


def level_vertices(spec: GasketSpec, m: int, window: int | None = None) -> list[str]:
    """Names of ``V_m ∩ K^(window)`` (``window`` defaults to the build window)."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    window = spec.N if window is None else window
    return [vertex_id(i, j, m) for i, j in gasket_points(m + window)]


def project_gm(spec: GasketSpec, x: str, m: int, window: int | None = None) -> str:
    """Map a level-n vertex to a corner of its level-m cell.

    The corner is the nearest one (ties toward the smallest Cartesian
    coordinates) among those on the same side of ``K^(window)`` as ``x``.
    """
    if m > spec.n:
        raise ValueError("need m <= n")
    window = spec.N if window is None else window
    i, j = lattice_at(x, spec.n)
    s = 1 << (spec.n - m)
    a, b = i // s, j // s
    fi, fj = i - a * s, j - b * s
    if fi + fj > s:  # only possible outside the gasket
        raise ValueError(f"{x!r} is not a gasket vertex")
    corners = [(a, b), (a + 1, b), (a, b + 1)]
    inside = in_window(i, j, spec.n, window)
    same = [c for c in corners if in_window(c[0], c[1], m, window) == inside] or corners

    def key(c):
        di, dj = c[0] * s - i, c[1] * s - j
        dist2 = di * di + di * dj + dj * dj
        return dist2, 2 * c[0] + c[1], c[1]

    ci, cj = min(same, key=key)
    return vertex_id(ci, cj, m)


def trace_to_level(net: ElectricalNetwork, spec: GasketSpec, m: int):
    """Trace of a level-n build onto ``V_m`` (same window)."""
    return trace_network(net, level_vertices(spec, m)).reduced


def fused_level_resistance(spec: GasketSpec, m: int, N: int, net: ElectricalNetwork | None = None,
                           star: str = "★") -> ResistanceMatrix:
    """Resistances on ``V_m^(N) ∪ {star}``: trace onto ``V_m``, then fuse ``V_m \\ K^(N)``.

    When ``K^(N)`` covers the whole build window nothing is fused and the
    plain traced resistance matrix is returned.
    """
    if m > spec.n:
        raise ValueError("need m <= n")
    net = build_gasket(spec) if net is None else net
    traced = trace_to_level(net, spec, m)
    if N >= spec.N:
        return resistance_matrix(traced)
    inner = level_vertices(spec, m, N)
    return resistance_matrix(fuse_complement(traced, inner, star))


def corner_resistance(net: ElectricalNetwork, spec: GasketSpec) -> float:
    """Resistance between the origin and the corner ``2^N e1`` of the build window."""
    from .resistance import effective_resistance

    return effective_resistance(net, ROOT, vertex_id(1 << spec.N, 0, 0))


def crossing_edges(net: ElectricalNetwork, spec: GasketSpec, window: int) -> list[tuple[str, str]]:
    """Edges with exactly one end in ``K^(window)``."""
    inside = {v for v in net.vertices if in_window(*lattice_at(v, spec.n), spec.n, window)}
    return [(u, v) for u, v, _ in net.edges() if (u in inside) != (v in inside)]


def window_crossing_conductance(net: ElectricalNetwork, spec: GasketSpec, window: int) -> float:
    """Conductance leaving ``K^(window)`` divided by ``a_n``."""
    inside = [v for v in net.vertices if in_window(*lattice_at(v, spec.n), spec.n, window)]
    return crossing_conductance(net, inside, spec.a_n)


def scaled_measure(net: ElectricalNetwork, spec: GasketSpec) -> np.ndarray:
    """Vertex measure divided by ``b_n``."""
    return net.measure / spec.b_n


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    deviation: float  # mean over seeds of the sup deviation
    spread: float  # std over seeds (0 for deterministic builds)
    per_seed: tuple
    dispersion: float  # sup over pairs of the std of R(x, y) across seeds


def convergence_report(n_list, m: int, N0: int, spec: GasketSpec, seeds=None) -> list[ConvergenceRow]:
    """``sup_{x,y in V_m^(N0)} |R_n(x, y) - R_ref(x, y)|`` for each n.

    ``R_n`` is the resistance of the level-n build (conductances already
    scaled by ``a_n``) and ``R_ref`` that of the deterministic level-m build
    in the same window.  Random mode repeats the build for each seed.
    """
    if N0 > spec.N:
        raise ValueError("N0 must not exceed the build window")
    pts = level_vertices(spec, m, N0)
    ref = resistance_matrix(build_gasket(GasketSpec(m, spec.N))).restrict(pts).R
    if spec.mode == "deterministic":
        seeds = [spec.seed]
    else:
        seeds = list(range(spec.seed, spec.seed + 20)) if seeds is None else list(seeds)
    rows = []
    for n in n_list:
        if n < m:
            raise ValueError("every n must be >= m")
        devs, mats = [], []
        for s in seeds:
            sp = GasketSpec(n, spec.N, spec.mode, spec.lo, spec.hi, s)
            Rn = resistance_matrix(build_gasket(sp)).restrict(pts).R
            mats.append(Rn)
            devs.append(float(np.max(np.abs(Rn - ref))))
        disp = float(np.max(np.std(np.array(mats), axis=0))) if len(mats) > 1 else 0.0
        rows.append(ConvergenceRow(n, float(np.mean(devs)), float(np.std(devs)), tuple(devs), disp))
    return rows
