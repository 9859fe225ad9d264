#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback paths.

Workloads mimic real scoring traffic: answer-length token sequences (tens to
a few hundred tokens) hit by LCS and clipped n-gram counting once per
(candidate, reference) pair. Run with the JIT on (default) to see both
paths; metric-level timings additionally run in subprocesses so the
MUQEVAL_DISABLE_JIT import-time flag takes effect.

Usage: python benchmarks/bench_kernels.py [--pairs 2000] [--length 120]
"""

import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from muqeval import _kernels  # noqa: E402


def make_pairs(n_pairs: int, length: int, vocab: int, seed: int = 7):
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n_pairs):
        a = rng.integers(0, vocab, size=length).astype(np.int64)
        b = rng.integers(0, vocab, size=length).astype(np.int64)
        pairs.append((a, b))
    return pairs


def time_fn(fn, pairs, repeats: int = 3) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for a, b in pairs:
            fn(a, b)
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernels(n_pairs: int, length: int) -> None:
    pairs = make_pairs(n_pairs, length, vocab=max(length // 2, 8))
    key_pairs = [
        (_kernels.ngram_keys(a, 2), _kernels.ngram_keys(b, 2)) for a, b in pairs
    ]

    rows = []
    if _kernels.JIT_ENABLED:
        _kernels._lcs_length_jit(*pairs[0])  # trigger compilation outside timing
        _kernels._clipped_matches_jit(*key_pairs[0])
        rows.append(("lcs_length", "numba", time_fn(_kernels._lcs_length_jit, pairs)))
        rows.append(("clipped_matches", "numba", time_fn(_kernels._clipped_matches_jit, key_pairs)))
    rows.append(("lcs_length", "numpy", time_fn(_kernels._lcs_length_np, pairs)))
    rows.append(("clipped_matches", "numpy", time_fn(_kernels._clipped_matches_np, key_pairs)))

    print(f"\nkernel timings ({n_pairs} pairs, length {length}):")
    print(f"{'kernel':<18} {'path':<7} {'total s':>9} {'us/pair':>9}")
    for kernel, path, seconds in rows:
        print(f"{kernel:<18} {path:<7} {seconds:>9.4f} {seconds / n_pairs * 1e6:>9.1f}")
    for kernel in ("lcs_length", "clipped_matches"):
        times = {path: seconds for k, path, seconds in rows if k == kernel}
        if "numba" in times:
            print(f"{kernel}: numba is {times['numpy'] / times['numba']:.1f}x faster than numpy")


METRIC_SNIPPET = """
import random, time
from muqeval.ngram_metrics import TokenSequence, bleu_n, rouge_l
rng = random.Random(7)
alphabet = ["w%d" % i for i in range(60)]
pairs = [
    (
        TokenSequence(tuple(rng.choice(alphabet) for _ in range({length}))),
        TokenSequence(tuple(rng.choice(alphabet) for _ in range({length}))),
    )
    for _ in range({pairs})
]
bleu_n(*pairs[0], 4); rouge_l(*pairs[0])  # warm up / compile
start = time.perf_counter()
for c, r in pairs:
    bleu_n(c, r, 4)
    rouge_l(c, r)
print(time.perf_counter() - start)
"""


def bench_metrics(n_pairs: int, length: int) -> None:
    print(f"\nmetric-level timings (bleu_n + rouge_l, {n_pairs} pairs, length {length}):")
    for label, disable in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, MUQEVAL_DISABLE_JIT=disable)
        snippet = METRIC_SNIPPET.format(pairs=n_pairs, length=length)
        out = subprocess.run(
            [sys.executable, "-c", snippet], env=env, capture_output=True, text=True, check=True
        )
        seconds = float(out.stdout.strip().splitlines()[-1])
        print(f"  {label:<7} {seconds:.4f} s  ({seconds / n_pairs * 1e6:.1f} us/pair)")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=2000)
    parser.add_argument("--length", type=int, default=120)
    args = parser.parse_args()
    print(f"JIT enabled in this process: {_kernels.JIT_ENABLED}")
    bench_kernels(args.pairs, args.length)
    bench_metrics(args.pairs, args.length)


if __name__ == "__main__":
    main()
