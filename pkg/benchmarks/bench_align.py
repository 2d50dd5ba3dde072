"""Compare the compiled alignment kernel against the pure-Python one.

Generates seeded synthetic sentence pairs at a few length buckets, runs
both kernels on identical inputs, and prints per-pair timings plus the
speedup. Also cross-checks that the two backends return identical op
sequences, since the whole point of the fallback is that results never
depend on which one is active.

Run from the repository root after an editable install:

    python3 benchmarks/bench_align.py
    python3 benchmarks/bench_align.py --pairs 200 --lengths 10,40,160
"""

from __future__ import annotations

import argparse
import random
import time

from gecombine import _align_py

try:
    from gecombine import _align_fast
except ImportError:
    _align_fast = None

VOCAB = 500


def make_pair(rng: random.Random, length: int) -> tuple[list[int], list[int]]:
    """One source/hypothesis pair of interned token ids.

    The hypothesis is the source with roughly 15% of positions edited:
    a third each substituted, deleted, and followed by an insertion.
    That keeps the diagonal band of the DP table realistically narrow
    without making the pair trivial.
    """
    source = [rng.randrange(VOCAB) for _ in range(length)]
    hypothesis: list[int] = []
    for token in source:
        roll = rng.random()
        if roll < 0.05:
            hypothesis.append(rng.randrange(VOCAB))
        elif roll < 0.10:
            pass
        elif roll < 0.15:
            hypothesis.append(token)
            hypothesis.append(rng.randrange(VOCAB))
        else:
            hypothesis.append(token)
    if not hypothesis:
        hypothesis.append(rng.randrange(VOCAB))
    return source, hypothesis


def time_kernel(kernel, pairs, repeats: int) -> float:
    """Best-of-N wall time for one pass over all pairs, in seconds."""
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for source, hypothesis in pairs:
            kernel.align_ops(source, hypothesis)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pairs", type=int, default=100, help="pairs per length bucket")
    parser.add_argument("--repeats", type=int, default=5, help="timed passes, best one kept")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--lengths",
        default="10,25,50,100,200",
        help="comma-separated source lengths in tokens",
    )
    args = parser.parse_args()

    lengths = [int(part) for part in args.lengths.split(",")]
    rng = random.Random(args.seed)

    if _align_fast is None:
        print("compiled kernel not built; timing the pure backend only")
    header = f"{'length':>8} {'pure us/pair':>14} {'compiled us/pair':>18} {'speedup':>9}"
    print(header)
    print("-" * len(header))

    for length in lengths:
        pairs = [make_pair(rng, length) for _ in range(args.pairs)]

        if _align_fast is not None:
            for source, hypothesis in pairs:
                got = _align_fast.align_ops(source, hypothesis)
                want = _align_py.align_ops(source, hypothesis)
                if got != want:
                    print(f"backend mismatch at length {length}: {got!r} != {want!r}")
                    return 1

        pure = time_kernel(_align_py, pairs, args.repeats)
        pure_us = pure / len(pairs) * 1e6
        if _align_fast is None:
            print(f"{length:>8} {pure_us:>14.1f} {'-':>18} {'-':>9}")
            continue
        fast = time_kernel(_align_fast, pairs, args.repeats)
        fast_us = fast / len(pairs) * 1e6
        print(f"{length:>8} {pure_us:>14.1f} {fast_us:>18.1f} {pure / fast:>8.1f}x")

    return 0


if __name__ == "__main__":
    raise SystemExit(main())
