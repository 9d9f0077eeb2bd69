#!/usr/bin/env python3
"""Compare the numpy and numba kernel backends on the hot counting paths.

Generates a call log from the built-in profile, then times the three kernel
families that dominate runtime (evidence-mask counting, per-credential
counts, pairwise correlation counts) plus two end-to-end operations built on
them. The numba backend pays a one-off JIT compile on first use (cached on
disk afterwards); compile time is reported separately from steady-state.

Usage:
    python benchmarks/bench_kernels.py [--n 200000] [--repeats 5]
"""

from __future__ import annotations

import argparse
import time
from itertools import combinations

import numpy as np

from ivrauth import kernels
from ivrauth.estimator import correlation_matrix, credential_stats
from ivrauth.sequencer import compile_policy
from ivrauth.synthgen import default_spec, generate


def _timeit(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _workload(d):
    rng = np.random.default_rng(0)
    k = len(d.schema)
    evidence_sets = []
    for _ in range(20):
        m = int(rng.integers(1, 4))
        idx = rng.choice(k, size=m, replace=False).astype(np.int64)
        want = rng.random(m) < 0.5
        evidence_sets.append((idx, want))

    def masks():
        for idx, want in evidence_sets:
            mask = kernels.match_mask(d.codes, idx, want)
            kernels.count_mask(mask, d.fraud)

    def per_credential():
        kernels.per_credential_counts(d.codes, d.fraud)

    def correlations():
        for i, j in combinations(range(k), 2):
            kernels.corr_counts(d.codes, i, j, True)

    def stats_op():
        credential_stats(d)
        correlation_matrix(d)

    def compile_op():
        compile_policy(d)

    return {
        "evidence masks (20 lists)": masks,
        "per-credential counts": per_credential,
        "pairwise corr counts (45)": correlations,
        "stats + correlation": stats_op,
        "policy compile": compile_op,
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    print(f"dataset: built-in profile, n={args.n}")
    d = generate(default_spec().with_n_total(args.n).with_seed(12345))
    workload = _workload(d)

    if not kernels.numba_available():
        print("numba not installed; only the numpy backend is available")
        kernels.set_backend("numpy")
        for name, fn in workload.items():
            print(f"{name:30s}  numpy {_timeit(fn, args.repeats)*1e3:9.2f} ms")
        return

    t0 = time.perf_counter()
    kernels.set_backend("numba")
    for fn in workload.values():
        fn()  # first call triggers (or loads cached) JIT compilation
    warmup = time.perf_counter() - t0
    print(f"numba warm-up (compile or cache load): {warmup:.2f} s\n")

    results = {}
    for backend in ("numpy", "numba"):
        kernels.set_backend(backend)
        results[backend] = {name: _timeit(fn, args.repeats) for name, fn in workload.items()}
    kernels.set_backend("numpy")

    header = f"{'operation':30s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for name in workload:
        a = results["numpy"][name]
        b = results["numba"][name]
        print(f"{name:30s} {a*1e3:9.2f}ms {b*1e3:9.2f}ms {a/b:7.2f}x")


if __name__ == "__main__":
    main()
