"""Hot loops, each in a numba form and a numpy form.

The public wrappers at the bottom dispatch on :func:`elecnet._accel.backend`.
Both forms consume the counter-based stream of :mod:`elecnet.rng` in the same
order and return identical integer outputs; float outputs (CSRW holding times)
may differ in the last ulp because ``log`` comes from different libms.
"""
from __future__ import annotations

import numpy as np

from ._accel import backend, njit
from .rng import uniform_nb, uniforms_np


class WalkTables:
    """Sampling tables for the walk kernel of one network.

    ``cum`` holds, row by row in CSR layout, the cumulative transition
    probabilities over neighbours in index order; the last entry of each row
    is exactly 1.0.  The padded copies feed the vectorised numpy kernels.
    """

    def __init__(self, P: np.ndarray):
        n = P.shape[0]
        indptr = np.zeros(n + 1, dtype=np.int64)
        nbrs, cum = [], []
        for x in range(n):
            js = np.flatnonzero(P[x])
            if len(js) == 0:  # single-vertex network: stay put
                js = np.array([x])
                cs = np.array([1.0])
            else:
                cs = np.cumsum(P[x, js])
                cs[-1] = 1.0
            nbrs.append(js)
            cum.append(cs)
            indptr[x + 1] = indptr[x] + len(js)
        self.n = n
        self.indptr = indptr
        self.nbrs = np.concatenate(nbrs).astype(np.int64)
        self.cum = np.concatenate(cum).astype(np.float64)
        width = int(np.max(np.diff(indptr)))
        self.nbr_pad = np.zeros((n, width), dtype=np.int64)
        self.cum_pad = np.ones((n, width), dtype=np.float64)
        for x in range(n):
            a, b = indptr[x], indptr[x + 1]
            self.nbr_pad[x, : b - a] = self.nbrs[a:b]
            self.nbr_pad[x, b - a :] = self.nbrs[b - 1]
            self.cum_pad[x, : b - a] = self.cum[a:b]


# -- walk stepping -------------------------------------------------------------


@njit
def _walk_nb(indptr, nbrs, cum, starts, keys, n_steps, csrw, states, times):
    for s in range(starts.shape[0]):
        x = starts[s]
        key = keys[s]
        states[s, 0] = x
        t = 0.0
        if csrw:
            times[s, 0] = 0.0
        for k in range(n_steps):
            u = uniform_nb(key, 2 * k)
            j = indptr[x]
            end = indptr[x + 1] - 1
            while j < end and u > cum[j]:
                j += 1
            x = nbrs[j]
            states[s, k + 1] = x
            if csrw:
                t += -np.log(uniform_nb(key, 2 * k + 1))
                times[s, k + 1] = t


def _walk_np(tables, starts, keys, n_steps, csrw, states, times):
    x = starts.copy()
    states[:, 0] = x
    t = np.zeros(len(starts))
    if csrw:
        times[:, 0] = 0.0
    for k in range(n_steps):
        u = uniforms_np(keys, 2 * k)
        j = (tables.cum_pad[x] >= u[:, None]).argmax(axis=1)
        x = tables.nbr_pad[x, j]
        states[:, k + 1] = x
        if csrw:
            t = t + -np.log(uniforms_np(keys, 2 * k + 1))
            times[:, k + 1] = t


def walk_batch(tables: WalkTables, starts, keys, n_steps: int, csrw: bool = False):
    """Simulate one path per key.

    Returns ``(states, times)`` with shape ``(S, n_steps + 1)``; ``times`` is
    ``None`` for the discrete chain.  ``times[:, k]`` is the k-th jump time
    (the time state ``k`` is entered), so ``times[:, 0] == 0``.
    """
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    S = len(starts)
    states = np.empty((S, n_steps + 1), dtype=np.int64)
    times = np.empty((S, n_steps + 1) if csrw else (0, 0), dtype=np.float64)
    if backend() == "numba":
        _walk_nb(tables.indptr, tables.nbrs, tables.cum, starts, keys, n_steps, csrw, states, times)
    else:
        _walk_np(tables, starts, keys, n_steps, csrw, states, times)
    return states, (times if csrw else None)


# -- trace of the chain onto a subset ------------------------------------------


@njit
def _trace_nb(indptr, nbrs, cum, in_b, starts, keys, k_trace, max_steps, out, used):
    for s in range(starts.shape[0]):
        x = starts[s]
        key = keys[s]
        cur_b = x
        out[s, 0] = x
        count = 0
        step = 0
        while count < k_trace and step < max_steps:
            u = uniform_nb(key, 2 * step)
            j = indptr[x]
            end = indptr[x + 1] - 1
            while j < end and u > cum[j]:
                j += 1
            x = nbrs[j]
            step += 1
            if in_b[x] and x != cur_b:
                count += 1
                out[s, count] = x
                cur_b = x
        used[s] = step


def _trace_np(tables, in_b, starts, keys, k_trace, max_steps, out, used):
    S = len(starts)
    x = starts.copy()
    cur_b = starts.copy()
    out[:, 0] = starts
    count = np.zeros(S, dtype=np.int64)
    active = np.arange(S)
    step = 0
    while len(active) and step < max_steps:
        u = uniforms_np(keys[active], 2 * step)
        xa = x[active]
        j = (tables.cum_pad[xa] >= u[:, None]).argmax(axis=1)
        xa = tables.nbr_pad[xa, j]
        x[active] = xa
        step += 1
        hit = in_b[xa] & (xa != cur_b[active])
        if hit.any():
            idx = active[hit]
            count[idx] += 1
            out[idx, count[idx]] = xa[hit]
            cur_b[idx] = xa[hit]
        done = count[active] >= k_trace
        if done.any():
            used[active[done]] = step
            active = active[~done]
    used[active] = step


def trace_batch(tables: WalkTables, in_b, starts, keys, k_trace: int, max_steps: int = 10**8):
    """Run the chain until its trace on ``in_b`` has made ``k_trace`` moves.

    Returns ``(trace_states, steps_used)``; rows that hit ``max_steps`` keep
    the unfilled tail at -1.
    """
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    in_b = np.ascontiguousarray(in_b, dtype=np.bool_)
    S = len(starts)
    out = np.full((S, k_trace + 1), -1, dtype=np.int64)
    used = np.zeros(S, dtype=np.int64)
    if backend() == "numba":
        _trace_nb(tables.indptr, tables.nbrs, tables.cum, in_b, starts, keys, k_trace, max_steps, out, used)
    else:
        _trace_np(tables, in_b, starts, keys, k_trace, max_steps, out, used)
    return out, used


# -- local-time oscillation over vertex pairs ----------------------------------


@njit
def _pair_osc_nb(states, horizon, inv_c, pi, pj, out):
    n = inv_c.shape[0]
    whole = int(np.floor(horizon))
    frac = horizon - whole
    P = pi.shape[0]
    occ = np.zeros(n)
    for s in range(states.shape[0]):
        occ[:] = 0.0
        for p in range(P):
            out[s, p] = 0.0
        for k in range(whole + 1):
            if k == whole:
                if frac == 0.0:
                    break
                occ[states[s, k]] += frac
            else:
                occ[states[s, k]] += 1.0
            for p in range(P):
                d = abs(occ[pi[p]] * inv_c[pi[p]] - occ[pj[p]] * inv_c[pj[p]])
                if d > out[s, p]:
                    out[s, p] = d


def _pair_osc_np(states, horizon, inv_c, pi, pj, out):
    S = states.shape[0]
    n = inv_c.shape[0]
    whole = int(np.floor(horizon))
    frac = horizon - whole
    occ = np.zeros((S, n))
    rows = np.arange(S)
    out[:] = 0.0
    for k in range(whole + 1):
        if k == whole:
            if frac == 0.0:
                break
            occ[rows, states[:, k]] += frac
        else:
            occ[rows, states[:, k]] += 1.0
        ell = occ * inv_c
        np.maximum(out, np.abs(ell[:, pi] - ell[:, pj]), out=out)


def pair_oscillation_max(states, horizon: float, inv_c, pi, pj):
    """Per path and vertex pair, ``sup_{t <= horizon} |l(x,t) - l(y,t)|``.

    ``states`` are discrete-chain paths with at least ``floor(horizon) + 1``
    columns.  The local times are piecewise linear in t, so the supremum is
    taken over the integer break points and ``horizon`` itself.
    """
    states = np.ascontiguousarray(states, dtype=np.int64)
    inv_c = np.ascontiguousarray(inv_c, dtype=np.float64)
    pi = np.ascontiguousarray(pi, dtype=np.int64)
    pj = np.ascontiguousarray(pj, dtype=np.int64)
    out = np.zeros((states.shape[0], len(pi)))
    if backend() == "numba":
        _pair_osc_nb(states, float(horizon), inv_c, pi, pj, out)
    else:
        _pair_osc_np(states, float(horizon), inv_c, pi, pj, out)
    return out


# -- exact set cover by branch and bound ---------------------------------------


@njit
def _popcount(x):
    c = 0
    while x:
        x &= x - np.uint64(1)
        c += 1
    return c


@njit
def _set_cover_nb(balls, contains, full, best, best_sel):
    n = balls.shape[0]
    cov = np.zeros(n + 1, dtype=np.uint64)
    sel = np.zeros(n + 1, dtype=np.uint64)
    cand = np.zeros(n + 1, dtype=np.uint64)
    one = np.uint64(1)
    # pick uncovered element with the fewest covering balls
    e_best = -1
    k_best = 1 << 30
    for e in range(n):
        k = _popcount(contains[e])
        if k < k_best:
            k_best = k
            e_best = e
    cand[0] = contains[e_best]
    d = 0
    while d >= 0:
        if cand[d] == 0:
            d -= 1
            continue
        low = cand[d] & (~cand[d] + one)
        cand[d] ^= low
        c = 0
        while (low >> np.uint64(c)) != one:
            c += 1
        newcov = cov[d] | balls[c]
        newsel = sel[d] | low
        if newcov == full:
            if d + 1 < best:
                best = d + 1
                best_sel = newsel
            continue
        unc = full & ~newcov
        n_unc = _popcount(unc)
        biggest = 0
        for b in range(n):
            k = _popcount(balls[b] & unc)
            if k > biggest:
                biggest = k
        if d + 1 + (n_unc + biggest - 1) // biggest >= best:
            continue
        e_best = -1
        k_best = 1 << 30
        for e in range(n):
            if (unc >> np.uint64(e)) & one:
                k = _popcount(contains[e])
                if k < k_best:
                    k_best = k
                    e_best = e
        d += 1
        cov[d] = newcov
        sel[d] = newsel
        cand[d] = contains[e_best]
    return best, best_sel


def _set_cover_py(balls, contains, full, best, best_sel):
    n = len(balls)
    order = sorted(range(n), key=lambda e: bin(contains[e]).count("1"))

    def first_uncovered(cov):
        for e in order:
            if not (cov >> e) & 1:
                return e
        return -1

    state = {"best": best, "sel": best_sel}

    def branch(cov, sel, depth):
        if cov == full:
            if depth < state["best"]:
                state["best"], state["sel"] = depth, sel
            return
        unc = full & ~cov
        n_unc = bin(unc).count("1")
        biggest = max(bin(b & unc).count("1") for b in balls)
        if depth + -(-n_unc // biggest) >= state["best"]:
            return
        e = first_uncovered(cov)
        cand = contains[e]
        while cand:
            low = cand & -cand
            cand ^= low
            c = low.bit_length() - 1
            branch(cov | balls[c], sel | low, depth + 1)

    branch(0, 0, 0)
    return state["best"], state["sel"]


def set_cover_exact(ball_masks, greedy_sel: int):
    """Minimum number of balls covering all points.

    ``ball_masks[c]`` is the bitmask of points in the ball around ``c``
    (at most 64 points).  ``greedy_sel`` is a feasible cover used as the
    initial incumbent.  Returns ``(count, selection_mask)``.
    """
    n = len(ball_masks)
    full = (1 << n) - 1
    contains = [0] * n
    for c, m in enumerate(ball_masks):
        for e in range(n):
            if (m >> e) & 1:
                contains[e] |= 1 << c
    best = bin(greedy_sel).count("1")
    if full == 0:
        return 0, 0
    if backend() == "numba":
        b, sel = _set_cover_nb(
            np.array(ball_masks, dtype=np.uint64),
            np.array(contains, dtype=np.uint64),
            np.uint64(full),
            best,
            np.uint64(greedy_sel),
        )
        return int(b), int(sel)
    return _set_cover_py(list(ball_masks), contains, full, best, greedy_sel)
