"""Random walks on networks: simulation, local times, traces of paths, and
Monte Carlo diagnostics.

Randomness comes from the counter-based stream in :mod:`elecnet.rng`; sample
``i`` of a run with seed ``s`` is a pure function of ``(s, i)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from . import _kernels
from .errors import DeltaTooLarge, GridOutOfRange, StartOutsideB
from .network import ElectricalNetwork, transition_matrix
from .resistance import resistance_between_sets, resistance_matrix
from .rng import sample_keys
from .trace import resistance_ball, trace_network

KINDS = ("discrete", "csrw")


def walk_tables(net: ElectricalNetwork) -> _kernels.WalkTables:
    if "walk_tables" not in net._cache:
        net._cache["walk_tables"] = _kernels.WalkTables(transition_matrix(net))
    return net._cache["walk_tables"]


@dataclass(frozen=True)
class WalkPath:
    """A realised trajectory on ``[0, horizon]``.

    ``states[k]`` (a vertex index) occupies ``[times[k], times[k+1])``, the
    last state up to ``horizon``.  For the discrete chain ``times[k] == k``.
    """

    kind: str
    states: np.ndarray
    times: np.ndarray
    horizon: float
    seed: int
    sample: int = 0
    start: object = None

    def vertices(self, net: ElectricalNetwork) -> list:
        return [net.vertices[i] for i in self.states]

    def segments(self, t: float) -> np.ndarray:
        """Length of ``[times[k], times[k+1]) ∩ [0, t]`` for every k."""
        ends = np.append(self.times[1:], self.horizon)
        return np.clip(np.minimum(ends, t) - self.times, 0.0, None)


def simulate(net: ElectricalNetwork, start=None, kind: str = "discrete", *, steps: int | None = None,
             horizon: float | None = None, seed: int = 0, sample: int = 0) -> WalkPath:
    """Simulate the discrete-time chain or the constant-speed random walk.

    Give either ``steps`` (number of jumps) or ``horizon`` (time span).
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if (steps is None) == (horizon is None):
        raise ValueError("give exactly one of steps or horizon")
    start = net.root if start is None else start
    x0 = net.index(start)
    tables = walk_tables(net)
    keys = sample_keys(seed, [sample])
    starts = np.array([x0])
    if kind == "discrete":
        if horizon is not None:
            if horizon <= 0:
                raise ValueError("horizon must be positive")
            steps = int(math.floor(horizon))
        else:
            if steps <= 0:
                raise ValueError("steps must be positive")
            horizon = float(steps)
        states, _ = _kernels.walk_batch(tables, starts, keys, steps, csrw=False)
        states = states[0]
        return WalkPath(kind, states, np.arange(len(states), dtype=float), float(horizon), seed, sample, start)
    if steps is not None:
        if steps <= 0:
            raise ValueError("steps must be positive")
        states, times = _kernels.walk_batch(tables, starts, keys, steps, csrw=True)
        return WalkPath(kind, states[0], times[0], float(times[0, -1]), seed, sample, start)
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    # the stream is prefix-consistent, so growing the step budget only appends
    n = max(16, int(2 * horizon) + 8)
    while True:
        states, times = _kernels.walk_batch(tables, starts, keys, n, csrw=True)
        if times[0, -1] > horizon:
            break
        n *= 2
    keep = int(np.searchsorted(times[0], horizon, side="right"))
    return WalkPath(kind, states[0, :keep], times[0, :keep], float(horizon), seed, sample, start)


def simulate_many(net: ElectricalNetwork, n_samples: int, steps: int, *, start=None, seed: int = 0,
                  csrw: bool = False, chunk: int | None = None, first_sample: int = 0):
    """Batch of paths with per-sample streams; results do not depend on ``chunk``.

    Returns ``(states, times)`` as in :func:`elecnet._kernels.walk_batch`.
    """
    start = net.root if start is None else start
    tables = walk_tables(net)
    x0 = net.index(start)
    chunk = n_samples if chunk is None else max(1, int(chunk))
    parts_s, parts_t = [], []
    for a in range(0, n_samples, chunk):
        idx = np.arange(first_sample + a, first_sample + min(a + chunk, n_samples))
        s, t = _kernels.walk_batch(tables, np.full(len(idx), x0), sample_keys(seed, idx), steps, csrw)
        parts_s.append(s)
        parts_t.append(t)
    states = np.concatenate(parts_s) if parts_s else np.empty((0, steps + 1), dtype=np.int64)
    times = np.concatenate(parts_t) if csrw and parts_t else None
    return states, times


# -- local times ---------------------------------------------------------------


def occupation_times(path: WalkPath, n_vertices: int, t: float) -> np.ndarray:
    """Time spent at each vertex during ``[0, t]``, each entry a correctly rounded sum."""
    if t < 0 or t > path.horizon + 1e-12:
        raise GridOutOfRange(f"time {t} outside [0, {path.horizon}]")
    seg = path.segments(t)
    order = np.argsort(path.states, kind="stable")
    counts = np.bincount(path.states, minlength=n_vertices)
    bounds = np.concatenate([[0], np.cumsum(counts)])
    seg_sorted = seg[order]
    return np.array([math.fsum(seg_sorted[bounds[x]:bounds[x + 1]]) for x in range(n_vertices)])


@dataclass(frozen=True)
class LocalTimeField:
    """``values[i, j]`` is the local time at vertex ``vertices[i]`` and time ``grid[j]``."""

    vertices: tuple
    grid: np.ndarray
    values: np.ndarray

    def at(self, x, t_index: int) -> float:
        return float(self.values[self.vertices.index(x), t_index])


def local_time(path: WalkPath, net: ElectricalNetwork, grid) -> LocalTimeField:
    """``l(x, t) = c(x)^{-1} * (time spent at x up to t)`` on a time grid."""
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if np.any(grid < 0) or np.any(grid > path.horizon + 1e-12):
        raise GridOutOfRange(f"grid must lie in [0, {path.horizon}]")
    c = net.measure
    vals = np.empty((len(net), len(grid)))
    for j, t in enumerate(grid):
        vals[:, j] = occupation_times(path, len(net), float(t)) / c
    return LocalTimeField(net.vertices, grid, vals)


def occupation_residual(path: WalkPath, net: ElectricalNetwork, f, t: float) -> float:
    """``|int_0^t f(Y_s) ds - sum_y f(y) l(y, t) mu({y})|``.

    Both sides are evaluated in exact rational arithmetic on the stored
    float data: the left side segment by segment, the right side from the
    per-vertex occupation tallies, with ``l(y, t) mu({y})`` taken as the
    tally itself rather than the rounded quotient times ``c(y)``.
    """
    fv = net.as_vector(f)
    seg = path.segments(t)
    fq = [Fraction(float(v)) for v in fv]
    lhs = sum((fq[x] * Fraction(float(s)) for x, s in zip(path.states.tolist(), seg)), Fraction(0))
    tally = [Fraction(0)] * len(net)
    for x, s in zip(path.states.tolist(), seg):
        tally[x] += Fraction(float(s))
    rhs = sum((fq[y] * tally[y] for y in range(len(net))), Fraction(0))
    return float(abs(lhs - rhs))


# -- trace of a path -----------------------------------------------------------


def trace_path(path: WalkPath, net: ElectricalNetwork, B) -> WalkPath:
    """Observe a discrete path only when it reaches a B-vertex other than its current one.

    The resulting path has one entry per trace move; if no further move
    happens the trace stays frozen at its last vertex.
    """
    if path.kind != "discrete":
        raise ValueError("trace_path is defined for discrete-time paths")
    ib = net.indices(B)
    in_b = np.zeros(len(net), dtype=bool)
    in_b[ib] = True
    if not in_b[path.states[0]]:
        raise StartOutsideB(f"path starts at {net.vertices[path.states[0]]!r}, outside B")
    out = [int(path.states[0])]
    for y in path.states[1:]:
        if in_b[y] and y != out[-1]:
            out.append(int(y))
    states = np.array(out, dtype=np.int64)
    return WalkPath("discrete", states, np.arange(len(states), dtype=float), float(len(states) - 1),
                    path.seed, path.sample, path.start)


@dataclass(frozen=True)
class CouplingReport:
    """Chi-square comparison of ``tr_B Y(k)`` against the trace chain's k-step law."""

    subset: tuple
    steps: int
    n_samples: int
    observed: np.ndarray
    expected: np.ndarray
    chi2: float
    dof: int
    p_value: float


def verify_trace_coupling(net: ElectricalNetwork, B, steps: int = 1, n_samples: int = 100_000,
                          seed: int = 0, start=None) -> CouplingReport:
    """Sample ``tr_B Y(steps)`` from the root and test it against ``P~^steps``."""
    start = net.root if start is None else start
    tr = trace_network(net, B)
    red = tr.reduced
    ib = net.indices(B)
    pos = {int(i): k for k, i in enumerate(ib)}
    s0 = net.index(start)
    if s0 not in pos:
        raise StartOutsideB(f"start {start!r} is not in B")
    exact = np.linalg.matrix_power(transition_matrix(red), steps)[pos[s0]]
    if len(ib) == 1:
        observed = np.array([n_samples])
    else:
        in_b = np.zeros(len(net), dtype=bool)
        in_b[ib] = True
        keys = sample_keys(seed, np.arange(n_samples))
        out, _ = _kernels.trace_batch(walk_tables(net), in_b, np.full(n_samples, s0), keys, steps)
        final = out[:, steps]
        observed = np.array([np.count_nonzero(final == i) for i in ib])
    expected = exact * n_samples
    live = expected > 0
    if np.any(observed[~live] > 0):
        chi2, p = math.inf, 0.0
    elif live.sum() <= 1:
        chi2, p = 0.0, 1.0
    else:
        res = stats.chisquare(observed[live], expected[live] * observed[live].sum() / expected[live].sum())
        chi2, p = float(res.statistic), float(res.pvalue)
    return CouplingReport(red.vertices, steps, n_samples, observed, expected, chi2, int(live.sum()) - 1, p)


# -- exit-time estimate --------------------------------------------------------


def exit_time_bound(R_out: float, delta: float, lam: float, t: float, mu_inner: float) -> float:
    """``1/lam + 4 delta / R_out + 4 t lam / (mu_inner (R_out - delta))``."""
    if not 0 < delta < R_out:
        raise DeltaTooLarge(f"need 0 < delta < R(root, B^c) = {R_out}, got {delta}")
    return 1.0 / lam + 4.0 * delta / R_out + 4.0 * t * lam / (mu_inner * (R_out - delta))


@dataclass(frozen=True)
class ExitTimeReport:
    radius: float
    delta: float
    lam: float
    t: float
    R_out: float
    mu_inner: float
    estimate: float
    stderr: float
    bound: float
    n_samples: int

    @property
    def ok(self) -> bool:
        return self.estimate <= self.bound + 3.0 * self.stderr


def exit_time_report(net: ElectricalNetwork, r: float, delta: float, lam: float, t: float,
                     n_samples: int = 10_000, seed: int = 0, *, _states=None) -> ExitTimeReport:
    """Monte Carlo ``P_root(T_{B(root, r)^c} <= t)`` for the discrete chain, with its bound."""
    if lam <= 0 or t < 0:
        raise ValueError("need lam > 0 and t >= 0")
    ball = resistance_ball(net, r)
    ib = net.indices(ball)
    outside = np.ones(len(net), dtype=bool)
    outside[ib] = False
    comp = [v for v, o in zip(net.vertices, outside) if o]
    R_out = resistance_between_sets(net, [net.root], comp) if comp else math.inf
    mu_inner = float(net.measure[net.indices(resistance_ball(net, delta))].sum())
    bound = exit_time_bound(R_out, delta, lam, t, mu_inner)
    n_steps = int(math.floor(t))
    if not comp or n_steps == 0:
        p = 0.0
    else:
        states = _states if _states is not None else simulate_many(net, n_samples, n_steps, seed=seed)[0]
        hit = outside[states[:, : n_steps + 1]].any(axis=1)
        p = float(hit.mean())
    se = math.sqrt(p * (1 - p) / n_samples)
    return ExitTimeReport(r, delta, lam, t, R_out, mu_inner, p, se, bound, n_samples)


# -- local-time modulus diagnostics ---------------------------------------------


@dataclass(frozen=True)
class ModulusEntry:
    form: str  # "pair": threshold lam*sqrt(R/r); "level": threshold lam*2^{-(1/2-alpha)N}
    level: int
    lam: float
    frequency: float


@dataclass(frozen=True)
class DiagnosticsReport:
    r_diam: float
    m_total: float
    T: float
    alpha: float
    horizon: float
    n_samples: int
    entries: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)
    entropy_sums: dict = field(default_factory=dict)

    def slope(self, form: str = "pair", level: int = 0) -> float:
        return self.slopes[(form, level)]


def _fit_log_slope(lams, freqs) -> float:
    lams = np.asarray(lams)
    freqs = np.asarray(freqs)
    live = freqs > 0
    if live.sum() < 2 or np.ptp(lams[live]) == 0:
        return math.nan
    return float(np.polyfit(lams[live], np.log(freqs[live]), 1)[0])


def local_time_modulus_report(net: ElectricalNetwork, T: float = 1.0, alpha: float = 0.25,
                              n_samples: int = 10_000, seed: int = 0, *, n_lambdas: int = 20,
                              max_level: int | None = None) -> DiagnosticsReport:
    """Exceedance frequencies of local-time oscillations up to time ``T m(G) r(G)``.

    For each dyadic level N (pairs with ``R(x,y)/r(G) < 2^{1-N}``) two
    statistics are recorded per path:

    * ``pair``  -- ``max r^{-1}|l(x,t)-l(y,t)| / sqrt(R(x,y)/r)``;
    * ``level`` -- ``max r^{-1}|l(x,t)-l(y,t)| / 2^{-(1/2-alpha)N}``.

    Frequencies of ``statistic >= lam`` are tabulated on a grid from 0 to the
    largest observed value and a line is fitted to ``log frequency`` vs
    ``lam``.  Only the sign of the slope is meaningful: the constants in the
    tail bounds are unknown.
    """
    from .metric import FiniteMetricMeasureSpace, entropy_tail

    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    Rm = resistance_matrix(net).R
    r = float(Rm.max())
    m = float(net.measure.sum())
    horizon = T * m * r
    n = len(net)
    pi, pj = np.triu_indices(n, 1)
    if len(pi) == 0:
        return DiagnosticsReport(r, m, T, alpha, horizon, n_samples)
    states, _ = simulate_many(net, n_samples, int(math.floor(horizon)), seed=seed)
    osc = _kernels.pair_oscillation_max(states, horizon, 1.0 / net.measure, pi, pj) / r
    rel = Rm[pi, pj] / r
    if max_level is None:
        max_level = max(0, int(math.floor(1 - math.log2(rel.min()))))
    space = FiniteMetricMeasureSpace(net.vertices, Rm / r, net.root, net.measure)
    entries, slopes, esums = [], {}, {}
    for N in range(max_level + 1):
        mask = rel < 2.0 ** (1 - N)
        if not mask.any():
            break
        stat_pair = (osc[:, mask] / np.sqrt(rel[mask])).max(axis=1)
        stat_level = osc[:, mask].max(axis=1) / 2.0 ** (-(0.5 - alpha) * N)
        for form, st in (("pair", stat_pair), ("level", stat_level)):
            lams = np.linspace(0.0, float(st.max()), n_lambdas)
            freqs = [float(np.mean(st >= lam)) for lam in lams]
            entries.extend(ModulusEntry(form, N, float(lam), fr) for lam, fr in zip(lams, freqs))
            slopes[(form, N)] = _fit_log_slope(lams, freqs)
        esums[N] = entropy_tail(space, alpha, N)
    return DiagnosticsReport(r, m, T, alpha, horizon, n_samples, entries, slopes, esums)
