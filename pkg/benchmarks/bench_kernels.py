"""Benchmark the compiled segment kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]

The workload mirrors what GAT message passing does per batch: segment_sum
and segment_max over the edges of fully connected sentence graphs. Both
backends are imported directly so the comparison runs in one process,
regardless of which backend the package itself selected.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from graphfuse.graph import build_fully_connected
from graphfuse.kernels import _segment_np

try:
    from graphfuse.kernels import _segment_c
except ImportError:
    _segment_c = None


def edge_workload(batch_lengths, width, seed=0):
    edges = build_fully_connected(batch_lengths)
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((edges.edge_count, width))
    return values, edges.targets, edges.node_count


def bench(fn, values, segments, n_segments, repeats):
    fn(values, segments, n_segments)  # warm up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(values, segments, n_segments)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    scenarios = [
        ("batch of 16 short sentences (n=12), width 32",
         [12] * 16, 32),
        ("batch of 16 long sentences (n=36), width 32",
         [36] * 16, 32),
        ("batch of 16 long sentences (n=36), width 256",
         [36] * 16, 256),
    ]

    print(f"{'scenario':52s} {'op':11s} {'numpy':>10s} {'compiled':>10s} "
          f"{'speedup':>8s}")
    for desc, lengths, width in scenarios:
        values, segments, n_segments = edge_workload(lengths, width)
        for op in ("segment_sum", "segment_max"):
            np_fn = getattr(_segment_np, op)
            t_np = bench(np_fn, values, segments, n_segments, args.repeats)
            if _segment_c is not None:
                c_fn = getattr(_segment_c, op)
                t_c = bench(c_fn, values, segments, n_segments, args.repeats)
                out_np = np_fn(values, segments, n_segments)
                out_c = c_fn(values, segments, n_segments)
                tag = "" if np.array_equal(out_np, out_c) else "  MISMATCH"
                print(f"{desc:52s} {op:11s} {t_np*1e3:9.3f}ms "
                      f"{t_c*1e3:9.3f}ms {t_np/t_c:7.2f}x{tag}")
            else:
                print(f"{desc:52s} {op:11s} {t_np*1e3:9.3f}ms "
                      f"{'n/a':>10s} {'':>8s}")
    if _segment_c is None:
        print("\ncompiled backend not available; showing numpy only")


if __name__ == "__main__":
    main()
