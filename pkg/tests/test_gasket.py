import math
from fractions import Fraction

import numpy as np
import pytest

from elecnet import resistance_matrix
from elecnet.gasket import (ROOT, GasketSpec, build_gasket, cartesian, convergence_report, corner_resistance,
                            crossing_edges, fused_level_resistance, in_window, lattice_at, level_vertices,
                            project_gm, scaled_measure, trace_to_level, vertex_id, window_crossing_conductance)

from oracles import kron_reduction, resistance_pinv


def test_level_zero_and_one():
    net = build_gasket(GasketSpec(0))
    assert len(net) == 3 and net.n_edges == 3
    assert all(w == 1 for _, _, w in net.edges())
    assert net.root == ROOT == "0,0"
    net = build_gasket(GasketSpec(1))
    assert len(net) == 6 and net.n_edges == 9
    assert all(w == pytest.approx(5 / 3) for _, _, w in net.edges())
    assert set(net.vertices) == {"0,0", "1/2,0", "1,0", "0,1/2", "1/2,1/2", "0,1"}


@pytest.mark.parametrize("n,N", [(n, N) for n in range(5) for N in range(3) if n + N <= 5])
def test_counts_and_unit_edges(n, N):
    net = build_gasket(GasketSpec(n, N))
    L = n + N
    assert len(net) == (3 ** (L + 1) + 3) // 2
    assert net.n_edges == 3 ** (L + 1)
    for u, v, _ in net.edges():
        (x1, y1), (x2, y2) = net.coords[u], net.coords[v]
        assert math.hypot(x1 - x2, y1 - y2) == pytest.approx(2.0**-n)


def test_identifiers_are_exact_and_level_independent():
    assert vertex_id(2, 0, 2) == "1/2,0"
    assert vertex_id(4, 4, 2) == "1,1"
    assert lattice_at("3/4,1/4", 2) == (3, 1)
    with pytest.raises(ValueError):
        lattice_at("1/8,0", 2)
    assert set(build_gasket(GasketSpec(1)).vertices) <= set(build_gasket(GasketSpec(3)).vertices)
    x, y = cartesian(1, 1, 0)
    assert (x, y) == pytest.approx((1.5, math.sqrt(3) / 2))


def test_random_mode():
    det = build_gasket(GasketSpec(2))
    deg = build_gasket(GasketSpec(2, mode="random", lo=1.0, hi=1.0, seed=3))
    assert det == deg
    sp = GasketSpec(3, 1, "random", 0.5, 1.5, seed=7)
    net = build_gasket(sp)
    w = np.array([c for _, _, c in net.edges()])
    assert np.all(w >= 0.5 * sp.a_n) and np.all(w <= 1.5 * sp.a_n)
    assert build_gasket(sp) == net
    assert build_gasket(GasketSpec(3, 1, "random", 0.5, 1.5, seed=8)) != net
    with pytest.raises(ValueError):
        GasketSpec(1, mode="random", lo=2, hi=1)
    with pytest.raises(ValueError):
        GasketSpec(-1)


@pytest.mark.parametrize("n", range(5))
def test_corner_resistance_two_thirds(n):
    sp = GasketSpec(n)
    net = build_gasket(sp)
    assert corner_resistance(net, sp) == pytest.approx(2 / 3, abs=1e-9)
    Rp = resistance_pinv(net.conductance)
    i, j = net.index("0,0"), net.index("1,0")
    assert Rp[i, j] == pytest.approx(2 / 3, abs=1e-9)


@pytest.mark.parametrize("m,n,N", [(0, 1, 0), (0, 3, 0), (1, 3, 1), (2, 4, 0), (1, 2, 2)])
def test_compatibility(m, n, N):
    traced = trace_to_level(build_gasket(GasketSpec(n, N)), GasketSpec(n, N), m)
    ref = build_gasket(GasketSpec(m, N))
    assert traced.vertices == ref.vertices
    assert np.allclose(traced.conductance, ref.conductance, atol=1e-9)


def test_projection_examples():
    sp = GasketSpec(3, 2)
    net = build_gasket(sp)
    for m in range(4):
        Vm = set(level_vertices(sp, m))
        for x in net.vertices:
            g = project_gm(sp, x, m)
            assert g in Vm
            if x in Vm:
                assert g == x
            (x1, y1), (x2, y2) = net.coords[x], net.coords[g]
            assert math.hypot(x1 - x2, y1 - y2) <= 2.0**-m + 1e-12


@pytest.mark.parametrize("n", range(5))
def test_projection_preserves_window(n):
    sp = GasketSpec(n, 2)
    net = build_gasket(sp)
    for W in (0, 1):
        for m in range(n + 1):
            for x in net.vertices:
                g = project_gm(sp, x, m, window=W)
                inside_x = in_window(*lattice_at(x, n), n, W)
                inside_g = in_window(*lattice_at(g, m), m, W)
                assert inside_x == inside_g


def test_projection_tie_break():
    sp = GasketSpec(1)
    # the midpoint of the bottom side is equidistant from (0,0) and (1,0)
    assert project_gm(sp, "1/2,0", 0) == "0,0"
    # equidistant from lattice (1,0) and (0,1); the latter has the smaller Cartesian x
    assert project_gm(sp, "1/2,1/2", 0) == "0,1"
    with pytest.raises(ValueError):
        project_gm(sp, "0,0", 2)


def test_fused_level_resistance_examples():
    sp = GasketSpec(2, 0)
    plain = fused_level_resistance(sp, 2, 0)
    assert np.allclose(plain.R, resistance_matrix(build_gasket(sp)).R)
    # independent route: explicit Kron reduction, manual fusing, pseudo-inverse
    sp = GasketSpec(2, 1)
    net = build_gasket(sp)
    got = fused_level_resistance(sp, 1, 0)
    Vm = level_vertices(sp, 1)
    keep = [net.index(v) for v in Vm]
    C = kron_reduction(net.conductance, keep)
    inner = set(level_vertices(sp, 1, 0))
    ins = [k for k, v in enumerate(Vm) if v in inner]
    out = [k for k, v in enumerate(Vm) if v not in inner]
    F = np.zeros((len(ins) + 1, len(ins) + 1))
    F[:-1, :-1] = C[np.ix_(ins, ins)]
    F[:-1, -1] = F[-1, :-1] = C[np.ix_(ins, out)].sum(axis=1)
    assert np.allclose(got.R, resistance_pinv(F), atol=1e-9)
    assert got.points[-1] == "★"


def test_fused_resistance_independent_of_n():
    base = None
    for n in range(1, 5):
        R = fused_level_resistance(GasketSpec(n, 1), 1, 0).R
        if base is None:
            base = R
        assert np.allclose(R, base, atol=1e-9)


def test_crossing_edges_at_junction():
    for n in range(4):
        sp = GasketSpec(n, 2)
        net = build_gasket(sp)
        for W in (0, 1):
            edges = crossing_edges(net, sp, W)
            assert len(edges) == 4
            ends = {u if in_window(*lattice_at(u, n), n, W) else v for u, v in edges}
            assert ends == {vertex_id(1 << (n + W), 0, n), vertex_id(0, 1 << (n + W), n)}
            assert window_crossing_conductance(net, sp, W) == pytest.approx(4.0)


def test_scaled_measure():
    sp = GasketSpec(2)
    mu = scaled_measure(build_gasket(sp), sp)
    assert mu.sum() == pytest.approx(2 * 27 * (5 / 3) ** 2 / 9)


def test_convergence_deterministic():
    rows = convergence_report([1, 2, 3, 4], 1, 0, GasketSpec(0, 1))
    assert all(r.deviation < 1e-9 for r in rows)
    with pytest.raises(ValueError):
        convergence_report([0], 1, 0, GasketSpec(0))


def test_convergence_random_trend():
    rows = convergence_report([2, 5], 1, 0, GasketSpec(0, 0, "random", 0.5, 1.5, seed=0))
    assert len(rows[0].per_seed) == 20
    assert rows[1].deviation < rows[0].deviation
    assert rows[1].dispersion < rows[0].dispersion
