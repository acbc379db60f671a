"""Benchmark the compiled backward gate kernel against the NumPy one.

Reports per-kernel timings and the end-to-end effect on an unrolled
encoder forward+backward pass (matmuls included) at training-typical
shapes.  Run from the repo root:

    python benchmarks/bench_kernels.py [--batch 256] [--steps 25] ...
"""

import argparse
import time

import numpy as np

import hamlearn.nn.kernels as kernels
from hamlearn.nn import _gates_py
from hamlearn.nn.lstm import LstmCellParams, lstm_backward, lstm_forward

try:
    from hamlearn.nn import _gates_cy
except ImportError:
    _gates_cy = None


def time_call(fn, *args, repeats):
    fn(*args)  # warm-up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def bench_pointwise(batch, hidden, repeats):
    rng = np.random.default_rng(0)
    z = rng.normal(0.0, 2.0, (batch, 4 * hidden))
    c_prev = rng.normal(0.0, 1.0, (batch, hidden))
    gates, c, tc, f = _gates_py.pointwise_forward(z, c_prev)
    d_f = rng.normal(0.0, 1.0, (batch, hidden))
    d_c = rng.normal(0.0, 1.0, (batch, hidden))

    t_fwd = time_call(_gates_py.pointwise_forward, z, c_prev,
                      repeats=repeats)
    print(f"forward   numpy   {t_fwd * 1e6:9.1f} us  (always selected)")
    t_py = time_call(_gates_py.pointwise_backward, gates, c_prev, tc, d_f,
                     d_c, repeats=repeats)
    print(f"backward  numpy   {t_py * 1e6:9.1f} us")
    if _gates_cy is None:
        print("backward  cython  (extension not built)")
        return
    t_cy = time_call(_gates_cy.pointwise_backward, gates, c_prev, tc, d_f,
                     d_c, repeats=repeats)
    ref = _gates_py.pointwise_backward(gates, c_prev, tc, d_f, d_c)
    got = _gates_cy.pointwise_backward(gates, c_prev, tc, d_f, d_c)
    drift = max(float(np.max(np.abs(a - b))) for a, b in zip(ref, got))
    print(f"backward  cython  {t_cy * 1e6:9.1f} us   "
          f"({t_py / t_cy:.1f}x, max drift {drift:.2e})")


def bench_sequence(batch, steps, hidden, input_dim, repeats):
    rng = np.random.default_rng(0)
    p = LstmCellParams(
        w=rng.normal(0.0, 0.1, (4 * hidden, hidden + input_dim)),
        b=np.zeros(4 * hidden))
    inputs = rng.normal(0.0, 0.5, (batch, steps, input_dim))
    d_last = rng.normal(0.0, 1.0, (batch, hidden))

    def run():
        _, cache = lstm_forward(p, inputs)
        lstm_backward(p, cache, d_f_last=d_last)

    backends = {"numpy": _gates_py.pointwise_backward}
    if _gates_cy is not None:
        backends["cython"] = _gates_cy.pointwise_backward
    times = {}
    original = kernels.pointwise_backward
    try:
        for name, impl in backends.items():
            kernels.pointwise_backward = impl
            times[name] = time_call(lambda: run(), repeats=repeats)
            print(f"sequence  {name:7s} {times[name] * 1e3:8.2f} ms/iter")
    finally:
        kernels.pointwise_backward = original
    if len(times) == 2:
        print(f"sequence speedup  {times['numpy'] / times['cython']:.2f}x "
              "(matmuls included)")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--batch", type=int, default=256)
    ap.add_argument("--steps", type=int, default=25)
    ap.add_argument("--hidden", type=int, default=64)
    ap.add_argument("--input-dim", type=int, default=6)
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()
    print(f"selected backward backend: {kernels.BACKEND}")
    bench_pointwise(args.batch, args.hidden, args.repeats * 10)
    bench_sequence(args.batch, args.steps, args.hidden, args.input_dim,
                   args.repeats)


if __name__ == "__main__":
    main()
