import importlib
import os
import subprocess
import sys

import numpy as np
import pytest

from fsdtiga import _pykernels, kernels
from fsdtiga.splines import KnotVector

ck = pytest.importorskip("fsdtiga._ckernels")


def test_compiled_backend_selected_by_default():
    if os.environ.get("FSDTIGA_PURE_PYTHON", "") not in ("", "0"):
        pytest.skip("pure Python backend forced")
    assert kernels.BACKEND == "cython"


def test_environment_forces_fallback():
    code = "import fsdtiga.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, FSDTIGA_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("p,nspans", [(1, 3), (2, 5), (3, 7), (5, 4)])
def test_basis_backends_agree(p, nspans, rng):
    kv = KnotVector.uniform(p, nspans)
    xs = np.concatenate([rng.random(500), kv.breaks])
    s1, d1 = ck.basis_ders_batch(kv.knots, p, xs, p)
    s2, d2 = _pykernels.basis_ders_batch(kv.knots, p, xs, p)
    assert np.array_equal(s1, s2)
    assert np.allclose(d1, d2, rtol=0, atol=1e-12 * nspans**p)
    assert np.array_equal(ck.find_spans(kv.knots, p, xs), _pykernels.find_spans(kv.knots, p, xs))


def test_element_kernels_agree(rng):
    C, Q, n = 7, 9, 9
    R = rng.random((C, Q, n))
    Rx, Ry = rng.standard_normal((2, C, Q, n))
    wq, fq = rng.random((2, C, Q))
    for cb, cs in ((1.0, 1.0), (1.0, 0.0), (0.0, 1.0)):
        K1, F1 = ck.fsdt_element_matrices(R, Rx, Ry, wq, fq, 0.4, cb, cs)
        K2, F2 = _pykernels.fsdt_element_matrices(R, Rx, Ry, wq, fq, 0.4, cb, cs)
        assert np.allclose(K1, K2, rtol=1e-13, atol=1e-13)
        assert np.allclose(F1, F2, rtol=1e-13, atol=1e-14)
    assert np.allclose(ck.mass_matrices(R, wq), _pykernels.mass_matrices(R, wq), rtol=1e-13)


def test_element_kernel_blocks_against_dense_formula(rng):
    # one quadrature point, explicit outer products
    n = 4
    N, Nx, Ny = rng.standard_normal((3, n))
    s = 0.25
    K, F = _pykernels.fsdt_element_matrices(N[None, None], Nx[None, None], Ny[None, None], np.ones((1, 1)), np.full((1, 1), 2.0), s)
    K = K[0]
    o = np.outer
    ref = np.block(
        [
            [5 / 6 * (o(Nx, Nx) + o(Ny, Ny)), 5 / 6 * o(Nx, N), 5 / 6 * o(Ny, N)],
            [5 / 6 * o(N, Nx), 5 / 6 * o(N, N) + (s + 1) / 6 * o(Nx, Nx) + o(Ny, Ny) / 12, s / 6 * o(Nx, Ny) + o(Ny, Nx) / 12],
            [5 / 6 * o(N, Ny), s / 6 * o(Ny, Nx) + o(Nx, Ny) / 12, 5 / 6 * o(N, N) + (s + 1) / 6 * o(Ny, Ny) + o(Nx, Nx) / 12],
        ]
    )
    assert np.allclose(K, ref, atol=1e-14)
    assert np.allclose(F[0], np.concatenate([2 * N, -s / 10 * 2 * Nx, -s / 10 * 2 * Ny]), atol=1e-14)


def test_full_solve_identical_with_either_backend(tmp_path):
    code = (
        "import numpy as np; from fsdtiga import make_disk, solve_model;"
        "s,_ = solve_model(make_disk(10.0, 3, elements=2));"
        "np.save(r'%s', s.vector)"
    )
    for flag in ("0", "1"):
        env = dict(os.environ, FSDTIGA_PURE_PYTHON=flag)
        subprocess.run([sys.executable, "-c", code % (tmp_path / f"x{flag}.npy")], env=env, check=True)
    a, b = np.load(tmp_path / "x0.npy"), np.load(tmp_path / "x1.npy")
    assert np.allclose(a, b, rtol=1e-11, atol=1e-11 * np.abs(a).max())
