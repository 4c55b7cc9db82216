"""Time the conv1d gather/scatter kernels under each available backend.

    python3 benchmarks/bench_kernels.py [--repeat N]

Reports per-call times for im2col / col2im on the desk-scale layer shapes and
for one conv1d forward + backward through the autodiff tape.
"""
import argparse
import timeit

import numpy as np

from radioshift.adcore import Tensor, backward, kernels, ops

# (batch, channels, length, kernel, stride, pad): desk stem and stage inputs
SHAPES = [
    (32, 2, 1024, 7, 2, 3),
    (32, 16, 512, 7, 2, 3),
    (32, 32, 256, 7, 2, 3),
    (32, 64, 128, 7, 2, 3),
    (32, 128, 64, 7, 2, 3),
]


def bench(fn, repeat):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def run(repeat=5):
    rng = np.random.default_rng(0)
    backends = kernels.available_backends()
    rows = []
    for b, c, length, k, s, p in SHAPES:
        x = rng.standard_normal((b, c, length)).astype(np.float32)
        w = (rng.standard_normal((2 * c, c, k)) * 0.1).astype(np.float32)
        lo = kernels.out_length(length, k, s, p)
        cols = rng.standard_normal((b, c * k, lo)).astype(np.float32)
        row = {"shape": f"B{b} C{c} L{length} k{k} s{s}"}
        for name, impl in backends.items():
            row[f"{name}_im2col"] = bench(lambda: impl.im2col1d(x, k, s, p), repeat)
            row[f"{name}_col2im"] = bench(lambda: impl.col2im1d(cols, length, k, s, p), repeat)
            saved = kernels._impl
            kernels._impl = impl
            try:
                def step():
                    xt, wt = Tensor(x, requires_grad=True), Tensor(w, requires_grad=True)
                    backward(ops.conv1d(xt, wt, None, s, p).sum())
                row[f"{name}_conv_fb"] = bench(step, repeat)
            finally:
                kernels._impl = saved
        rows.append(row)
    return list(backends), rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    names, rows = run(args.repeat)
    print(f"backends: {', '.join(names)} (default: {kernels.BACKEND})")
    for op in ("im2col", "col2im", "conv_fb"):
        print(f"\n{op} (ms, best of {args.repeat})")
        print(f"{'shape':<26}" + "".join(f"{n:>10}" for n in names)
              + ("   speedup" if len(names) > 1 else ""))
        for r in rows:
            t = [1e3 * r[f"{n}_{op}"] for n in names]
            line = f"{r['shape']:<26}" + "".join(f"{v:>10.3f}" for v in t)
            if len(names) > 1:
                line += f"{t[0] / t[1]:>9.2f}x"
            print(line)


if __name__ == "__main__":
    main()
