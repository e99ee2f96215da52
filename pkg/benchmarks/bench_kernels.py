"""Time the hot kernels under the numba and pure-numpy backends.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--samples 10000]

Each kernel is run once per backend as a warm-up (this also triggers JIT
compilation), then timed ``--repeat`` times; the best time is reported.
Outputs of the two backends are compared (exactly for integer results,
to 1e-12 relative for times and local times).
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

sys.path.insert(0, __file__.rsplit("/", 2)[0] + "/tests")  # reuse the test network generator

from conftest import random_network  # noqa: E402

from elecnet._accel import HAVE_NUMBA, use_backend  # noqa: E402
from elecnet import _kernels  # noqa: E402
from elecnet.network import transition_matrix  # noqa: E402
from elecnet.rng import sample_keys  # noqa: E402


def _cases(samples: int):
    rng = np.random.default_rng(0)
    net = random_network(rng, 40, p=0.1)
    tables = _kernels.WalkTables(transition_matrix(net))
    keys = sample_keys(1, np.arange(samples))
    starts = np.zeros(samples, dtype=np.int64)
    in_b = np.zeros(len(net), dtype=bool)
    in_b[:8] = True
    states, _ = _kernels.walk_batch(tables, starts, keys, 200)
    pi, pj = np.triu_indices(len(net), 1)
    inv_c = 1.0 / net.measure
    pts = rng.random((40, 2))
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    masks = [int(sum(1 << e for e in np.flatnonzero(row <= 0.3))) for row in d]
    full = (1 << 40) - 1
    return {
        "walk_batch (discrete, 200 steps)": lambda: _kernels.walk_batch(tables, starts, keys, 200)[0],
        "walk_batch (csrw, 200 steps)": lambda: _kernels.walk_batch(tables, starts, keys, 200, csrw=True)[1],
        "trace_batch (5 trace moves)": lambda: _kernels.trace_batch(tables, in_b, starts, keys, 5)[0],
        "pair_oscillation_max (780 pairs)": lambda: _kernels.pair_oscillation_max(states[:2000], 200.0, inv_c, pi, pj),
        "set_cover_exact (40 points)": lambda: _kernels.set_cover_exact(masks, full)[0],
    }


def _best(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--samples", type=int, default=10_000)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not importable; only the numpy backend can run", file=sys.stderr)
        return 1
    cases = _cases(args.samples)
    print(f"{'kernel':<36} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8}  agree")
    for name, fn in cases.items():
        with use_backend("numba"):
            a = fn()
            t_nb = _best(fn, args.repeat)
        with use_backend("numpy"):
            b = fn()
            t_np = _best(fn, args.repeat)
        a, b = np.asarray(a), np.asarray(b)
        # float outputs differ by libm rounding only
        agree = np.allclose(a, b, rtol=1e-12, atol=0) if a.dtype.kind == "f" else np.array_equal(a, b)
        print(f"{name:<36} {t_nb:>10.4f} {t_np:>10.4f} {t_np / t_nb:>7.1f}x  {agree}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
