"""Pure numpy implementations of the hot kernels.

Used when the compiled extension is unavailable; also the reference the
compiled kernels are tested against.  Signatures mirror ``_ckernels.pyx``.
"""
from __future__ import annotations

import numpy as np


def find_spans(knots: np.ndarray, p: int, xs: np.ndarray) -> np.ndarray:
    n = knots.shape[0] - p - 1
    spans = np.searchsorted(knots, xs, side="right") - 1
    return np.clip(spans, p, n - 1).astype(np.int64)


def basis_ders_batch(knots, p, xs, nders):
    """Nonzero B-spline values and derivatives at many points.

    Returns ``spans`` of shape ``(m,)`` and ``ders`` of shape
    ``(m, nders + 1, p + 1)``.  Vectorized over points; the recursion
    itself follows the triangular scheme of Piegl & Tiller (A2.3).
    """
    knots = np.asarray(knots, dtype=float)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    m = xs.shape[0]
    spans = find_spans(knots, p, xs)

    ndu = np.empty((p + 1, p + 1, m))
    left = np.empty((p + 1, m))
    right = np.empty((p + 1, m))
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = xs - knots[spans + 1 - j]
        right[j] = knots[spans + j] - xs
        saved = np.zeros(m)
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((nders + 1, p + 1, m))
    ders[0] = ndu[:, p]
    a = np.zeros((2, p + 1, m))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, nders + 1):
            d = np.zeros(m)
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d += a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    fac = float(p)
    for k in range(1, nders + 1):
        ders[k] *= fac
        fac *= p - k
    return spans, np.ascontiguousarray(ders.transpose(2, 0, 1))


def fsdt_element_matrices(R, Rx, Ry, wq, fq, sigma, c_bend=1.0, c_shear=1.0):
    """Element stiffness and load for the rescaled plate functional.

    ``R, Rx, Ry`` have shape ``(C, Q, n)`` (values and physical gradients of
    the cell shape functions at the quadrature points), ``wq`` and ``fq``
    shape ``(C, Q)`` (weight times Jacobian, load).  Local ordering of the
    result is ``[u | psi1 | psi2]``, each block of size ``n``.
    """
    C, Q, n = R.shape
    W = wq[:, :, None]
    RW, RxW, RyW = R * W, Rx * W, Ry * W
    tr = lambda A: A.transpose(0, 2, 1)  # noqa: E731
    M = tr(RW) @ R
    Mxx = tr(RxW) @ Rx
    Myy = tr(RyW) @ Ry
    Mxy = tr(RxW) @ Ry
    Mxr = tr(RxW) @ R
    Myr = tr(RyW) @ R

    s = 5.0 / 6.0 * c_shear
    b1 = (sigma + 1.0) / 6.0 * c_bend
    b2 = 1.0 / 12.0 * c_bend
    b3 = sigma / 6.0 * c_bend

    K = np.empty((C, 3 * n, 3 * n))
    u, p1, p2 = slice(0, n), slice(n, 2 * n), slice(2 * n, 3 * n)
    K[:, u, u] = s * (Mxx + Myy)
    K[:, u, p1] = s * Mxr
    K[:, u, p2] = s * Myr
    K[:, p1, u] = tr(K[:, u, p1])
    K[:, p2, u] = tr(K[:, u, p2])
    K[:, p1, p1] = s * M + b1 * Mxx + b2 * Myy
    K[:, p2, p2] = s * M + b1 * Myy + b2 * Mxx
    K[:, p1, p2] = b3 * Mxy + b2 * tr(Mxy)
    K[:, p2, p1] = tr(K[:, p1, p2])

    fw = (wq * fq)[:, :, None]
    F = np.empty((C, 3 * n))
    F[:, u] = np.sum(R * fw, axis=1)
    F[:, p1] = -sigma / 10.0 * np.sum(Rx * fw, axis=1)
    F[:, p2] = -sigma / 10.0 * np.sum(Ry * fw, axis=1)
    return K, F


def mass_matrices(R, wq):
    """Batched ``sum_q w R R^T`` for shape ``(C, Q, n)`` inputs."""
    return (R * wq[:, :, None]).transpose(0, 2, 1) @ R
