#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy/Python fallback.

Covers the three hot paths: the recursive low-pass filter (serial, the
main win for the extension), the peak scan, and a full-batch training
epoch where the backend supplies the activation/loss passes and numpy
BLAS does the matmuls in both cases.

Usage: python benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import time

import numpy as np

from adlsense import ann, backend


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_lowpass(repeats):
    x = np.random.default_rng(1).normal(size=500)
    return {
        "case": "lowpass (500 samples x 1000 calls)",
        "run": lambda: [backend.lowpass(x, 0.1) for _ in range(1000)],
        "repeats": repeats,
    }


def bench_peaks(repeats):
    x = np.random.default_rng(2).normal(size=500)
    return {
        "case": "peak scan (500 samples x 1000 calls)",
        "run": lambda: [backend.peak_indices(x) for _ in range(1000)],
        "repeats": repeats,
    }


def bench_train(repeats):
    rng = np.random.default_rng(3)
    x = rng.uniform(0.0, 1.0, size=(4200, 55))
    y = rng.integers(0, 3, size=4200)
    data = list(zip(x, y))
    topology = ann.MODEL_KINDS["DNN"].topology_for(55, 3)
    config = ann.TrainConfig(max_iterations=25, learning_rate=0.1, l2_lambda=1e-4,
                             target_error=0.0, seed=3)

    def run():
        net = ann.init_network(topology, seed=3, kind="DNN")
        ann.train(net, data, config)

    return {"case": "train DNN (4200x55, 25 full-batch iterations)", "run": run,
            "repeats": repeats}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if "compiled" not in backend.available():
        print("compiled extension not built; run `pip install -e .` first")
        return

    benches = [bench_lowpass(args.repeats), bench_peaks(args.repeats), bench_train(args.repeats)]
    print(f"{'case':<48}{'python':>10}{'compiled':>10}{'speedup':>9}")
    for bench in benches:
        results = {}
        for name in ("python", "compiled"):
            backend.use(name)
            results[name] = timeit(bench["run"], bench["repeats"])
        speedup = results["python"] / results["compiled"]
        print(
            f"{bench['case']:<48}{results['python'] * 1000:>8.1f}ms"
            f"{results['compiled'] * 1000:>8.1f}ms{speedup:>8.1f}x"
        )
    backend.use("compiled")


if __name__ == "__main__":
    main()
