import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elecnet import _kernels
from elecnet._accel import ENV_FLAG, HAVE_NUMBA, backend, set_backend, use_backend
from elecnet.rng import sample_keys, uniform, uniform_nb, uniforms_np
from elecnet.walk import walk_tables

from conftest import random_network

MASK = 2**64 - 1


def splitmix(x):
    z = (x + 0x9E3779B97F4A7C15) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def uniform_oracle(seed, sample, counter):
    key = splitmix(splitmix(seed) ^ sample)
    return ((splitmix(key ^ counter) >> 11) + 1) * 2.0**-53


@pytest.mark.parametrize("seed,sample,counter", [(0, 0, 0), (1, 2, 3), (12345, 999, 2**20), (2**63, 7, 1)])
def test_rng_matches_reference(seed, sample, counter):
    u = uniform(seed, sample, counter)
    assert u == uniform_oracle(seed, sample, counter)
    assert 0 < u <= 1
    key = sample_keys(seed, [sample])[0]
    assert uniform_nb(key, counter) == u
    assert uniforms_np([key], counter)[0] == u


def test_uniforms_look_uniform():
    u = uniforms_np(sample_keys(3, np.arange(200_000)), 5)
    assert abs(u.mean() - 0.5) < 3 * (1 / np.sqrt(12 * 200_000))
    hist, _ = np.histogram(u, bins=10, range=(0, 1))
    assert hist.min() > 19_000


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
@settings(max_examples=15, deadline=None)
@given(st.integers(2, 15), st.integers(0, 2**31), st.booleans())
def test_walk_kernels_agree(n, seed, csrw):
    net = random_network(np.random.default_rng(seed), n)
    tables = walk_tables(net)
    keys = sample_keys(seed, np.arange(64))
    starts = np.random.default_rng(seed).integers(0, n, 64)
    with use_backend("numba"):
        s1, t1 = _kernels.walk_batch(tables, starts, keys, 40, csrw)
    with use_backend("numpy"):
        s2, t2 = _kernels.walk_batch(tables, starts, keys, 40, csrw)
    assert np.array_equal(s1, s2)
    if csrw:
        assert np.allclose(t1, t2, rtol=1e-14, atol=0)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_trace_and_oscillation_kernels_agree():
    rng = np.random.default_rng(1)
    net = random_network(rng, 12)
    tables = walk_tables(net)
    in_b = np.zeros(12, dtype=bool)
    in_b[[0, 3, 7, 9]] = True
    keys = sample_keys(2, np.arange(500))
    starts = np.zeros(500, dtype=np.int64)
    res = {}
    for b in ("numba", "numpy"):
        with use_backend(b):
            out, used = _kernels.trace_batch(tables, in_b, starts, keys, 5)
            states, _ = _kernels.walk_batch(tables, starts, keys, 60)
            pi, pj = np.triu_indices(12, 1)
            osc = _kernels.pair_oscillation_max(states, 57.5, 1 / net.measure, pi, pj)
            res[b] = (out, used, osc)
    assert np.array_equal(res["numba"][0], res["numpy"][0])
    assert np.array_equal(res["numba"][1], res["numpy"][1])
    assert np.allclose(res["numba"][2], res["numpy"][2], rtol=1e-13, atol=1e-13)


def test_oscillation_matches_direct_local_times():
    from elecnet.walk import local_time, simulate

    net = random_network(np.random.default_rng(4), 6)
    p = simulate(net, 0, "discrete", steps=30, seed=2)
    pi, pj = np.triu_indices(6, 1)
    osc = _kernels.pair_oscillation_max(p.states[None], 23.25, 1 / net.measure, pi, pj)[0]
    grid = np.concatenate([np.arange(24.0), [23.25]])
    lt = local_time(p, net, grid).values
    ref = np.abs(lt[pi] - lt[pj]).max(axis=1)
    assert np.allclose(osc, ref, atol=1e-12)


@pytest.mark.parametrize("name", ["numba", "numpy"] if HAVE_NUMBA else ["numpy"])
def test_set_cover_backends(name):
    from itertools import combinations

    rng = np.random.default_rng(9)
    for _ in range(30):
        n = int(rng.integers(1, 11))
        pts = rng.random((n, 2))
        D = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
        balls = D <= 0.35
        masks = [int(sum(1 << j for j in np.flatnonzero(row))) for row in balls]
        with use_backend(name):
            count, sel = _kernels.set_cover_exact(masks, (1 << n) - 1)
        cover = 0
        for c in range(n):
            if (sel >> c) & 1:
                cover |= masks[c]
        assert cover == (1 << n) - 1 and bin(sel).count("1") == count
        best = next(k for k in range(1, n + 1) for combo in combinations(range(n), k)
                    if np.all(balls[list(combo)].any(axis=0)))
        assert count == best


def test_env_flag_selects_numpy():
    code = "from elecnet._accel import backend; print(backend())"
    env = {**os.environ, ENV_FLAG: "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_use_backend_restores():
    before = backend()
    with use_backend("numpy"):
        assert backend() == "numpy"
    assert backend() == before
    with pytest.raises(ValueError):
        set_backend("fortran")
