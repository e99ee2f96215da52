import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elecnet import resistance_matrix
from elecnet import DeltaTooLarge, GridOutOfRange, StartOutsideB, build_network, trace_network, transition_matrix
from elecnet.walk import (exit_time_bound, exit_time_report, local_time, local_time_modulus_report,
                          occupation_residual, occupation_times, simulate, simulate_many, trace_path,
                          verify_trace_coupling, WalkPath)

from conftest import random_network


def test_two_vertex_alternation(two, each_backend):
    p = simulate(two, "a", "discrete", steps=4, seed=9)
    assert p.vertices(two) == ["a", "b", "a", "b", "a"]


def test_one_step_frequencies_binomial(path3, each_backend):
    n = 100_000
    states, _ = simulate_many(path3, n, 1, start="b", seed=11)
    k = np.count_nonzero(states[:, 1] == 0)
    sigma = math.sqrt(n * 0.25)
    assert abs(k - n / 2) <= 3 * sigma


def test_csrw_holding_mean(triangle, each_backend):
    n = 100_000
    _, times = simulate_many(triangle, n, 1, seed=5, csrw=True)
    first = times[:, 1]
    assert abs(first.mean() - 1.0) <= 3 / math.sqrt(n)
    assert np.all(first > 0)


def test_paths_follow_edges_and_reproduce(each_backend):
    net = random_network(np.random.default_rng(2), 9)
    for kind in ("discrete", "csrw"):
        p = simulate(net, 0, kind, horizon=40.0, seed=4, sample=3)
        q = simulate(net, 0, kind, horizon=40.0, seed=4, sample=3)
        assert np.array_equal(p.states, q.states) and np.array_equal(p.times, q.times)
        assert np.all(net.conductance[p.states[:-1], p.states[1:]] > 0)
        assert np.all(np.diff(p.times) > 0)
        assert p.times[0] == 0 and p.times[-1] <= 40.0
    other = simulate(net, 0, "discrete", steps=40, seed=5)
    assert not np.array_equal(other.states, simulate(net, 0, "discrete", steps=40, seed=4).states)


def test_chunking_does_not_change_samples(each_backend):
    net = random_network(np.random.default_rng(8), 12)
    a, _ = simulate_many(net, 1000, 30, seed=3)
    b, _ = simulate_many(net, 1000, 30, seed=3, chunk=97)
    c, _ = simulate_many(net, 400, 30, seed=3, first_sample=600)
    assert np.array_equal(a, b)
    assert np.array_equal(a[600:], c)
    single = simulate(net, 0, "discrete", steps=30, seed=3, sample=17)
    assert np.array_equal(single.states, a[17])


def test_simulate_argument_errors(two):
    with pytest.raises(ValueError):
        simulate(two, "a", "discrete")
    with pytest.raises(ValueError):
        simulate(two, "a", "levy", steps=2)
    with pytest.raises(ValueError):
        simulate(two, "a", "discrete", horizon=0.0)


def test_local_time_examples(two, each_backend):
    p = simulate(two, "a", "discrete", steps=4, seed=0)
    lt = local_time(p, two, [0, 2, 4])
    assert lt.at("a", 1) == 1.0
    assert np.all(lt.values[:, 0] == 0)
    assert (lt.values * two.measure[:, None]).sum(axis=0).tolist() == [0.0, 2.0, 4.0]
    with pytest.raises(GridOutOfRange):
        local_time(p, two, [5.0])
    with pytest.raises(GridOutOfRange):
        local_time(p, two, [-1.0])


def test_unvisited_vertex_has_zero_local_time():
    net = build_network("abcd", [("a", "b", 1), ("b", "c", 1), ("c", "d", 1)], "a")
    p = WalkPath("discrete", np.array([0, 1, 0, 1]), np.arange(4.0), 3.0, 0)
    lt = local_time(p, net, [0, 1.5, 3])
    assert np.all(lt.values[3] == 0) and np.all(lt.values[2] == 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**31), st.sampled_from(["discrete", "csrw"]),
       st.floats(0.0, 1.0))
def test_occupation_identity_and_monotonicity(n, seed, kind, frac):
    rng = np.random.default_rng(seed)
    net = random_network(rng, n)
    p = simulate(net, 0, kind, horizon=30.0, seed=seed % 1000)
    t = frac * 30.0
    f = rng.normal(size=n) * 10
    assert occupation_residual(p, net, f, t) < 1e-12
    assert occupation_residual(p, net, np.ones(n), t) == pytest.approx(0, abs=1e-12)
    x = int(rng.integers(n))
    ind = np.zeros(n)
    ind[x] = 1
    assert occupation_residual(p, net, ind, t) < 1e-12
    lt = local_time(p, net, np.linspace(0, 30, 7))
    assert np.all(np.diff(lt.values, axis=1) >= 0)
    assert math.fsum(occupation_times(p, n, t)) == pytest.approx(t, abs=1e-12)


def test_occupation_random_ten_vertex():
    rng = np.random.default_rng(37)
    net = random_network(rng, 10)
    p = simulate(net, 0, "discrete", horizon=40.0, seed=1)
    assert occupation_residual(p, net, rng.normal(size=10), 37.5) < 1e-12


def _path(net, names):
    idx = np.array([net.index(v) for v in names])
    return WalkPath("discrete", idx, np.arange(len(idx), dtype=float), float(len(idx) - 1), 0)


def test_trace_path_examples():
    net = build_network("abc", [("a", "b", 1), ("b", "c", 1), ("a", "c", 1)], "a")
    p = _path(net, "aca")
    assert trace_path(p, net, "ac").vertices(net) == ["a", "c", "a"]
    p = _path(net, "ababc")
    assert trace_path(p, net, "ac").vertices(net) == ["a", "c"]
    assert trace_path(p, net, "a").vertices(net) == ["a"]
    with pytest.raises(StartOutsideB):
        trace_path(p, net, "bc")
    csrw = simulate(net, "a", "csrw", steps=3, seed=0)
    with pytest.raises(ValueError):
        trace_path(csrw, net, "ab")


def test_trace_path_agrees_with_batch_kernel(each_backend):
    from elecnet import _kernels
    from elecnet.rng import sample_keys
    from elecnet.walk import walk_tables

    net = random_network(np.random.default_rng(21), 10)
    B = [0, 3, 5, 8]
    in_b = np.zeros(10, dtype=bool)
    in_b[B] = True
    out, used = _kernels.trace_batch(walk_tables(net), in_b, np.zeros(50, dtype=np.int64), sample_keys(6, range(50)), 4)
    for s in range(50):
        p = simulate(net, 0, "discrete", steps=int(used[s]), seed=6, sample=s)
        tr = trace_path(p, net, B)
        assert np.array_equal(tr.states, out[s])


def test_coupling_examples(path3, triangle, each_backend):
    rep = verify_trace_coupling(path3, ["a", "c"], 1, 100_000, seed=1)
    assert rep.observed.tolist() == [0, 100_000]
    assert rep.p_value == 1.0
    rep = verify_trace_coupling(triangle, ["a", "b"], 1, 100_000, seed=2)
    # the trace chain on two vertices must alternate
    assert rep.observed.tolist() == [0, 100_000]
    # two steps from a in the trace onto {a, b, c} of a 4-cycle
    net = build_network("abcd", [("a", "b", 1), ("b", "c", 2), ("c", "d", 1), ("d", "a", 3)], "a")
    red = trace_network(net, "abc").reduced
    p_ab = transition_matrix(red)[0, 1]
    rep = verify_trace_coupling(net, "abc", 1, 100_000, seed=3)
    k = rep.observed[1]
    assert abs(k - 100_000 * p_ab) <= 3 * math.sqrt(100_000 * p_ab * (1 - p_ab))
    assert rep.p_value > 0.001


def test_coupling_full_set_matches_direct_chain(each_backend):
    net = random_network(np.random.default_rng(4), 8)
    rep = verify_trace_coupling(net, net.vertices, 1, 20_000, seed=8)
    states, _ = simulate_many(net, 20_000, 1, seed=8)
    direct = np.bincount(states[:, 1], minlength=8)
    assert np.array_equal(rep.observed, direct)
    assert rep.p_value > 0.001


def test_coupling_multi_step():
    net = random_network(np.random.default_rng(12), 9)
    rep = verify_trace_coupling(net, [0, 2, 4, 6], 3, 50_000, seed=1)
    assert rep.p_value > 0.001
    assert rep.expected.sum() == pytest.approx(50_000)


def test_exit_bound_formula():
    R = 2.0
    assert exit_time_bound(R, R / 8, 10.0, 0.0, 1.0) == pytest.approx(0.6)
    with pytest.raises(DeltaTooLarge):
        exit_time_bound(R, R, 1.0, 1.0, 1.0)
    with pytest.raises(DeltaTooLarge):
        exit_time_bound(R, 0.0, 1.0, 1.0, 1.0)


def test_exit_report_zero_time_and_bound(each_backend):
    net = random_network(np.random.default_rng(20), 20)
    rep = exit_time_report(net, 1.0, 0.1, 4.0, 0.0, 1000, seed=0)
    assert rep.estimate == 0.0
    Rm = resistance_matrix(net).R[0]
    r = float(np.median(Rm[Rm > 0]))
    for lam in (1.5, 4.0):
        for frac in (0.2, 0.6):
            rep0 = exit_time_report(net, r, 0.01, lam, 3.0, 2000, seed=1)
            rep = exit_time_report(net, r, frac * rep0.R_out, lam, 3.0, 2000, seed=1)
            assert rep.ok
    with pytest.raises(DeltaTooLarge):
        exit_time_report(net, r, 10 * rep.R_out, 2.0, 1.0, 100)


def test_modulus_report_shape(triangle, each_backend):
    rep = local_time_modulus_report(triangle, 1.0, 0.25, 10_000, seed=3)
    assert rep.r_diam == pytest.approx(2 / 3)
    assert rep.m_total == pytest.approx(6)
    assert rep.slope("pair", 0) < 0
    for form in ("pair", "level"):
        e = [x for x in rep.entries if x.form == form and x.level == 0]
        assert e[0].lam == 0 and e[0].frequency == 1.0
        freqs = [x.frequency for x in e]
        assert all(a >= b for a, b in zip(freqs, freqs[1:]))
    with pytest.raises(ValueError):
        local_time_modulus_report(triangle, 1.0, 0.6, 10)
