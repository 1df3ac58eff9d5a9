"""Benchmark the compiled peeling kernel against the pure Python fallback.

Usage:
    python benchmarks/bench_peeling.py [--sizes 1000,4000,16000] [--trials 20]
                                       [--erasure-prob 0.40] [--rows 4] [--seed 0]

Builds a (3, 6)-regular code per block length, draws random erasure patterns,
and times full decodes through each available backend on identical inputs.
"""

import argparse
import time

import numpy as np

from codedgrad import ErasurePattern, peel_decode, sample_ldpc
from codedgrad.peeling import available_backends


def time_backend(code, patterns, payloads, backend):
    best = float("inf")
    for _ in range(3):
        start = time.perf_counter()
        steps = 0
        for pattern, payload in zip(patterns, payloads):
            result = peel_decode(code, pattern, payload, backend=backend)
            steps += result.peel_steps
        best = min(best, time.perf_counter() - start)
    return best, steps


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="1000,4000,16000")
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--erasure-prob", type=float, default=0.40)
    parser.add_argument("--rows", type=int, default=4)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    header = f"{'N':>7} {'erasures':>9}" + "".join(f" {b + ' (s)':>12}" for b in backends)
    if len(backends) == 2:
        header += f" {'speedup':>9}"
    print(header)

    rng = np.random.default_rng(args.seed)
    for size in (int(s) for s in args.sizes.split(",")):
        code = sample_ldpc(size, size // 2, 3, 6, seed=args.seed)
        patterns, payloads, n_erased = [], [], 0
        for _ in range(args.trials):
            message = rng.standard_normal((args.rows, code.K))
            codeword = message @ code.code.generator
            erased = rng.random(size) < args.erasure_prob
            n_erased += int(erased.sum())
            received = np.nonzero(~erased)[0] + 1
            patterns.append(ErasurePattern(received.tolist()))
            payloads.append(codeword[:, ~erased])
        timings = []
        for backend in backends:
            elapsed, _ = time_backend(code, patterns, payloads, backend)
            timings.append(elapsed)
        line = f"{size:>7} {n_erased // args.trials:>9}" + "".join(
            f" {t:>12.4f}" for t in timings
        )
        if len(timings) == 2:
            line += f" {timings[1] / timings[0]:>8.1f}x"
        print(line)


if __name__ == "__main__":
    main()
