"""Compare the compiled kernels with the numpy fallback.

Run ``python3 benchmarks/bench_kernels.py``.  Times batched basis
evaluation, element matrix formation and a full disk assembly with each
backend and checks that both give the same numbers.
"""
from __future__ import annotations

import argparse
import importlib
import time

import numpy as np

from fsdtiga import _pykernels
from fsdtiga.splines import KnotVector


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def _assembly(backend_module, nel):
    import fsdtiga.assembly as asm
    import fsdtiga.splines as spl
    from fsdtiga.geometry import make_disk

    model = make_disk(10.0, 3, elements=nel)

    def go():
        saved = asm.kernels, spl.kernels
        asm.kernels = spl.kernels = backend_module
        try:
            return asm.assemble(model).K
        finally:
            asm.kernels, spl.kernels = saved

    return go


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--cells", type=int, default=4_000)
    ap.add_argument("--disk-elements", type=int, default=24)
    args = ap.parse_args(argv)

    try:
        ck = importlib.import_module("fsdtiga._ckernels")
    except ImportError:
        print("compiled kernels not built; only the numpy fallback is available")
        return 1
    backends = {"cython": ck, "python": _pykernels}
    rng = np.random.default_rng(0)

    kv = KnotVector.uniform(3, 64)
    xs = rng.random(args.points)
    p, n, Q = 3, 16, 16
    C = args.cells
    R = rng.random((C, Q, n))
    Rx, Ry = rng.standard_normal((2, C, Q, n))
    wq = rng.random((C, Q))
    fq = np.ones((C, Q))

    cases = {
        "basis_ders_batch": lambda m: lambda: m.basis_ders_batch(kv.knots, p, xs, 2),
        "fsdt_element_matrices": lambda m: lambda: m.fsdt_element_matrices(R, Rx, Ry, wq, fq, 3.0 / 7.0),
        "mass_matrices": lambda m: lambda: m.mass_matrices(R, wq),
        "assemble (disk)": lambda m: _assembly(m, args.disk_elements),
    }
    print(f"{'kernel':<24}{'cython [s]':>12}{'python [s]':>12}{'speedup':>10}{'max diff':>12}")
    for name, make in cases.items():
        res = {b: _best(make(m), args.repeat) for b, m in backends.items()}
        a, b = res["cython"][1], res["python"][1]
        if isinstance(a, tuple):
            diff = max(float(np.abs(np.asarray(x, float) - np.asarray(y, float)).max()) for x, y in zip(a, b))
        elif hasattr(a, "toarray"):
            diff = float(abs(a - b).max())
        else:
            diff = float(np.abs(a - b).max())
        tc, tp = res["cython"][0], res["python"][0]
        print(f"{name:<24}{tc:12.4f}{tp:12.4f}{tp / tc:10.1f}{diff:12.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
