"""Timing comparison of the compiled and pure-Python kernel backends.

Run with ``python3 benchmarks/bench_kernels.py``.  Each kernel is called on
identical inputs through both backends; the script prints the best-of-N
wall time, the speedup and the largest absolute difference in the outputs.
"""

import argparse
import timeit

import numpy as np

from weyl_lab import _pykernels
from weyl_lab.hermite import basis_enumerate

try:
    from weyl_lab import _core
except ImportError:  # extension not built
    _core = None


def cases(scale):
    rng = np.random.default_rng(0)
    s = rng.normal(size=4000 * scale)
    basis = basis_enumerate(2, 10)
    D = 11
    N = 256 * scale
    factors = rng.normal(size=(N, 2, D, D)) + 1j * rng.normal(size=(N, 2, D, D))
    coeffs = rng.normal(size=N) + 1j * rng.normal(size=N)
    index = basis.indices
    wide = basis_enumerate(4, 7)
    Dw = 8
    Fw = rng.normal(size=(64 * scale, 4, Dw, Dw)) + 1j * rng.normal(size=(64 * scale, 4, Dw, Dw))
    cw = rng.normal(size=64 * scale) + 0j
    return {
        "hermite_table(m<=64)": lambda mod: mod.hermite_table(64, s),
        "laguerre_table(k<=1e5)": lambda mod: mod.laguerre_table(100_000 * scale, 1.0, np.pi, -np.pi / 2),
        "assemble_graded(n=2,K=10)": lambda mod: mod.assemble_graded(factors, coeffs, index),
        "assemble_graded(n=4,K=7)": lambda mod: mod.assemble_graded(Fw, cw, wide.indices),
    }


def _as_array(out):
    if isinstance(out, tuple):
        return np.concatenate([np.ravel(np.asarray(o, dtype=np.complex128)) for o in out])
    return np.ravel(np.asarray(out, dtype=np.complex128))


def run(repeat=5, scale=1):
    rows = []
    for name, call in cases(scale).items():
        t_py = min(timeit.repeat(lambda: call(_pykernels), number=1, repeat=repeat))
        if _core is None:
            rows.append((name, t_py, float("nan"), float("nan"), float("nan")))
            continue
        t_cy = min(timeit.repeat(lambda: call(_core), number=1, repeat=repeat))
        a, b = _as_array(call(_pykernels)), _as_array(call(_core))
        finite = np.isfinite(a) & np.isfinite(b)
        scale_ref = max(1.0, float(np.abs(a[finite]).max())) if finite.any() else 1.0
        diff = float(np.abs(a[finite] - b[finite]).max()) / scale_ref if finite.any() else 0.0
        rows.append((name, t_py, t_cy, t_py / t_cy, diff))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=int, default=1)
    args = ap.parse_args(argv)
    print(f"{'kernel':<28}{'python [s]':>12}{'cython [s]':>12}{'speedup':>9}{'rel diff':>11}")
    for name, tp, tc, sp, d in run(args.repeat, args.scale):
        print(f"{name:<28}{tp:>12.4g}{tc:>12.4g}{sp:>9.1f}{d:>11.2e}")
    if _core is None:
        print("compiled extension not built; only the Python backend was timed")


if __name__ == "__main__":
    main()
