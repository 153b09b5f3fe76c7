"""Time the compiled and pure-Python kernels on the same synthetic stream.

    python3 benchmarks/bench_kernels.py [--samples N] [--repeat R]
"""
import argparse
import timeit

import numpy as np

from gazetrace import kernels


def make_stream(n, seed=0):
    rng = np.random.default_rng(seed)
    ts = np.cumsum(rng.integers(10, 30, n)).astype(np.float64)
    # short dwell periods broken by jumps
    jumps = rng.random(n) < 0.05
    steps = np.where(jumps[:, None], rng.normal(0, 200, (n, 2)), rng.normal(0, 1.5, (n, 2)))
    xy = np.cumsum(steps, axis=0) % [1920, 1080]
    return xy[:, 0].copy(), xy[:, 1].copy(), ts


def bench(backend, xs, ys, ts, repeat):
    vel = kernels.velocities(xs, ys, ts, backend=backend)
    out = {}
    out["velocities"] = min(timeit.repeat(lambda: kernels.velocities(xs, ys, ts, backend=backend),
                                          number=1, repeat=repeat))
    out["ivt_labels"] = min(timeit.repeat(lambda: kernels.ivt_labels(vel, 721.0, backend=backend),
                                          number=1, repeat=repeat))
    out["cluster_starts"] = min(timeit.repeat(
        lambda: kernels.cluster_starts(xs, ys, vel, 300.0, 50.0, backend=backend), number=1, repeat=repeat))
    return out, vel


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    xs, ys, ts = make_stream(args.samples)

    results, outputs = {}, {}
    for b in kernels.BACKENDS:
        results[b], vel = bench(b, xs, ys, ts, args.repeat)
        outputs[b] = (vel, kernels.ivt_labels(vel, 721.0, backend=b),
                      kernels.cluster_starts(xs, ys, vel, 300.0, 50.0, backend=b))

    ref = outputs[kernels.BACKENDS[-1]]
    for b, out in outputs.items():
        same = all(np.array_equal(a, r) for a, r in zip(out, ref))
        print(f"{b}: outputs {'identical' if same else 'DIFFER'}")

    print(f"{args.samples} samples, best of {args.repeat}")
    print(f"{'kernel':<16}" + "".join(f"{b:>12}" for b in results) + ("     speedup" if len(results) > 1 else ""))
    for k in ("velocities", "ivt_labels", "cluster_starts"):
        row = f"{k:<16}" + "".join(f"{results[b][k] * 1e3:>10.2f}ms" for b in results)
        if "compiled" in results and "python" in results:
            row += f"{results['python'][k] / results['compiled'][k]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
