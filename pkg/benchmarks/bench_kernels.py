"""Time the block Lindblad kernels: compiled extension against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--sizes 6 8 10] [--repeat 20]

Reports the mean time per right-hand-side evaluation and per <J+J->
evaluation for each backend, the speedup, and the largest difference
between the two backends' outputs.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from fluxsr.dynamics.blocks import BlockLayout, ae_generator
from fluxsr.dynamics.models import SpinModel, ghz, mhz
from fluxsr.kernels import get_backend


def random_state(layout: BlockLayout, rng) -> np.ndarray:
    """Random positive block state with unit trace."""
    y = np.zeros(layout.size, complex)
    for n in range(layout.nmax + 1):
        d = int(layout.dims[n])
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        y[layout.offsets[n]: layout.offsets[n] + d * d] = (a @ a.conj().T).ravel()
    return y / layout.trace(y).real


def timeit(fn, repeat: int) -> float:
    fn()
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def bench(n: int, repeat: int, rng) -> dict:
    model = SpinModel.sample(n, float(ghz(6)), float(mhz(25)), float(ghz(6)), float(mhz(50)),
                             float(mhz(400)), rng)
    layout = BlockLayout(n)
    y = random_state(layout, rng)
    row = {"n": n, "size": layout.size}
    outs = {}
    for name in ("python", "cython"):
        try:
            get_backend(name)
        except ImportError:
            continue
        gen = ae_generator(model, layout, backend=name)
        out = np.empty_like(y)
        row[f"{name}_rhs_ms"] = 1e3 * timeit(lambda: gen.rhs(0.0, y, out), repeat)
        row[f"{name}_jpjm_ms"] = 1e3 * timeit(lambda: gen.jpjm(y), repeat)
        outs[name] = out.copy()
    if len(outs) == 2:
        row["max_abs_diff"] = float(np.max(np.abs(outs["python"] - outs["cython"])))
        row["speedup"] = row["python_rhs_ms"] / row["cython_rhs_ms"]
    return row


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[6, 8, 10])
    p.add_argument("--repeat", type=int, default=20)
    p.add_argument("--seed", type=int, default=1)
    args = p.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    cols = ("n", "size", "python_rhs_ms", "cython_rhs_ms", "speedup", "python_jpjm_ms",
            "cython_jpjm_ms", "max_abs_diff")
    print(" ".join(f"{c:>15}" for c in cols))
    for n in args.sizes:
        row = bench(n, args.repeat, rng)
        print(" ".join(f"{row.get(c, float('nan')):>15.4g}" for c in cols))


if __name__ == "__main__":
    main()
