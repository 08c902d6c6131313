"""Benchmark the compiled elementwise kernels against the numpy fallback.

Times the fused bias+activation pass and the normalize+radial pass on a few
matrix sizes, plus an end-to-end enhancement-layer build. Run:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from broadlearn.kernels import ACT_CODES, RBF_CODES, _fallback

try:
    from broadlearn.kernels import _core
except ImportError:
    _core = None


def best_of(fn, reps=7):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_bias_act(impl, p, bias, act):
    buf = np.empty_like(p)

    def run():
        np.copyto(buf, p)
        impl.bias_act(buf, bias, 0.8, ACT_CODES[act])

    return best_of(run)


def bench_bn_rbf(impl, p, bias, mean, var):
    buf = np.empty_like(p)

    def run():
        np.copyto(buf, p)
        impl.bn_rbf(buf, bias, mean, var, 1e-5, RBF_CODES["gaussian"])

    return best_of(run)


def main():
    if _core is None:
        print("compiled extension not built; showing fallback only")
    g = np.random.default_rng(0)
    rows = [("op", "size", "numpy ms", "compiled ms", "speedup")]
    for shape in ((2000, 500), (5000, 1000), (500, 5000)):
        p = g.uniform(-3, 3, shape)
        bias = g.uniform(-1, 1, shape[1])
        mean = g.uniform(-1, 1, shape[1])
        var = g.uniform(0.5, 2.0, shape[1])
        for act in ("tanh", "swish"):
            t_py = bench_bias_act(_fallback, p, bias, act)
            t_c = bench_bias_act(_core, p, bias, act) if _core else float("nan")
            rows.append(
                (f"bias+{act}", f"{shape[0]}x{shape[1]}",
                 f"{t_py * 1e3:.2f}", f"{t_c * 1e3:.2f}", f"{t_py / t_c:.2f}x" if _core else "-")
            )
        t_py = bench_bn_rbf(_fallback, p, bias, mean, var)
        t_c = bench_bn_rbf(_core, p, bias, mean, var) if _core else float("nan")
        rows.append(
            ("normalize+rbf", f"{shape[0]}x{shape[1]}",
             f"{t_py * 1e3:.2f}", f"{t_c * 1e3:.2f}", f"{t_py / t_c:.2f}x" if _core else "-")
        )

    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    for r in rows:
        print("  ".join(v.ljust(w) for v, w in zip(r, widths)))


if __name__ == "__main__":
    main()
