# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels in ``_pykernels``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline Py_ssize_t _span(const double[::1] U, int p, Py_ssize_t n, double x) noexcept nogil:
    cdef Py_ssize_t lo, hi, mid
    if x >= U[n]:
        return n - 1
    if x <= U[p]:
        return p
    lo = p
    hi = n
    mid = (lo + hi) // 2
    while x < U[mid] or x >= U[mid + 1]:
        if x < U[mid]:
            hi = mid
        else:
            lo = mid
        mid = (lo + hi) // 2
    return mid


def find_spans(knots, int p, xs):
    cdef const double[::1] U = np.ascontiguousarray(knots, dtype=np.float64)
    cdef const double[::1] X = np.ascontiguousarray(np.atleast_1d(xs), dtype=np.float64)
    cdef Py_ssize_t n = U.shape[0] - p - 1
    cdef Py_ssize_t i, m = X.shape[0]
    out = np.empty(m, dtype=np.int64)
    cdef long long[::1] S = out
    with nogil:
        for i in range(m):
            S[i] = _span(U, p, n, X[i])
    return out


def basis_ders_batch(knots, int p, xs, int nders):
    cdef const double[::1] U = np.ascontiguousarray(knots, dtype=np.float64)
    cdef const double[::1] X = np.ascontiguousarray(np.atleast_1d(xs), dtype=np.float64)
    cdef Py_ssize_t n = U.shape[0] - p - 1
    cdef Py_ssize_t m = X.shape[0]
    spans = np.empty(m, dtype=np.int64)
    ders_arr = np.zeros((m, nders + 1, p + 1), dtype=np.float64)
    cdef long long[::1] S = spans
    cdef double[:, :, ::1] D = ders_arr
    cdef double[:, ::1] ndu = np.empty((p + 1, p + 1))
    cdef double[:, ::1] a = np.empty((2, p + 1))
    cdef double[::1] left = np.empty(p + 1)
    cdef double[::1] right = np.empty(p + 1)
    cdef Py_ssize_t i, j, r, k, s1, s2, rk, pk, j1, j2, span
    cdef double x, saved, temp, d, fac
    with nogil:
        for i in range(m):
            x = X[i]
            span = _span(U, p, n, x)
            S[i] = span
            ndu[0, 0] = 1.0
            for j in range(1, p + 1):
                left[j] = x - U[span + 1 - j]
                right[j] = U[span + j] - x
                saved = 0.0
                for r in range(j):
                    ndu[j, r] = right[r + 1] + left[j - r]
                    temp = ndu[r, j - 1] / ndu[j, r]
                    ndu[r, j] = saved + right[r + 1] * temp
                    saved = left[j - r] * temp
                ndu[j, j] = saved
            for j in range(p + 1):
                D[i, 0, j] = ndu[j, p]
            for r in range(p + 1):
                s1 = 0
                s2 = 1
                a[0, 0] = 1.0
                for k in range(1, nders + 1):
                    d = 0.0
                    rk = r - k
                    pk = p - k
                    if r >= k:
                        a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                        d = a[s2, 0] * ndu[rk, pk]
                    j1 = 1 if rk >= -1 else -rk
                    j2 = k - 1 if r - 1 <= pk else p - r
                    for j in range(j1, j2 + 1):
                        a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                        d += a[s2, j] * ndu[rk + j, pk]
                    if r <= pk:
                        a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                        d += a[s2, k] * ndu[r, pk]
                    D[i, k, r] = d
                    s1, s2 = s2, s1
            fac = p
            for k in range(1, nders + 1):
                for j in range(p + 1):
                    D[i, k, j] *= fac
                fac *= p - k
    return spans, ders_arr


def fsdt_element_matrices(R, Rx, Ry, wq, fq, double sigma, double c_bend=1.0, double c_shear=1.0):
    # point index last so the quadrature sums run over contiguous memory
    cdef const double[:, :, ::1] N = np.ascontiguousarray(np.swapaxes(R, 1, 2), dtype=np.float64)
    cdef const double[:, :, ::1] Nx = np.ascontiguousarray(np.swapaxes(Rx, 1, 2), dtype=np.float64)
    cdef const double[:, :, ::1] Ny = np.ascontiguousarray(np.swapaxes(Ry, 1, 2), dtype=np.float64)
    cdef const double[:, ::1] W = np.ascontiguousarray(wq, dtype=np.float64)
    cdef const double[:, ::1] Fq = np.ascontiguousarray(fq, dtype=np.float64)
    cdef Py_ssize_t C = N.shape[0], n = N.shape[1], Q = N.shape[2]
    K_arr = np.empty((C, 3 * n, 3 * n), dtype=np.float64)
    F_arr = np.empty((C, 3 * n), dtype=np.float64)
    wn_arr = np.empty((3, n, Q), dtype=np.float64)
    cdef double[:, :, ::1] K = K_arr
    cdef double[:, ::1] F = F_arr
    cdef double[:, :, ::1] wn = wn_arr
    cdef double s = 5.0 / 6.0 * c_shear
    cdef double b1 = (sigma + 1.0) / 6.0 * c_bend
    cdef double b2 = c_bend / 12.0
    cdef double b3 = sigma / 6.0 * c_bend
    cdef double ls = sigma / 10.0
    cdef Py_ssize_t c, g, i, j
    cdef double w, mm, xx, yy, xn, yn, nx, ny, xy, yx, f0, f1, f2
    with nogil:
        for c in range(C):
            for i in range(n):
                f0 = 0.0
                f1 = 0.0
                f2 = 0.0
                for g in range(Q):
                    w = W[c, g]
                    wn[0, i, g] = w * N[c, i, g]
                    wn[1, i, g] = w * Nx[c, i, g]
                    wn[2, i, g] = w * Ny[c, i, g]
                    f0 = f0 + wn[0, i, g] * Fq[c, g]
                    f1 = f1 + wn[1, i, g] * Fq[c, g]
                    f2 = f2 + wn[2, i, g] * Fq[c, g]
                F[c, i] = f0
                F[c, n + i] = -ls * f1
                F[c, 2 * n + i] = -ls * f2
            for i in range(n):
                for j in range(n):
                    mm = 0.0
                    xx = 0.0
                    yy = 0.0
                    xn = 0.0
                    yn = 0.0
                    xy = 0.0
                    yx = 0.0
                    for g in range(Q):
                        mm = mm + wn[0, i, g] * N[c, j, g]
                        xx = xx + wn[1, i, g] * Nx[c, j, g]
                        yy = yy + wn[2, i, g] * Ny[c, j, g]
                        xn = xn + wn[1, i, g] * N[c, j, g]
                        yn = yn + wn[2, i, g] * N[c, j, g]
                        xy = xy + wn[1, i, g] * Ny[c, j, g]
                        yx = yx + wn[2, i, g] * Nx[c, j, g]
                    K[c, i, j] = s * (xx + yy)
                    K[c, i, n + j] = s * xn
                    K[c, i, 2 * n + j] = s * yn
                    K[c, n + j, i] = s * xn
                    K[c, 2 * n + j, i] = s * yn
                    K[c, n + i, n + j] = s * mm + b1 * xx + b2 * yy
                    K[c, 2 * n + i, 2 * n + j] = s * mm + b1 * yy + b2 * xx
                    K[c, n + i, 2 * n + j] = b3 * xy + b2 * yx
                    K[c, 2 * n + j, n + i] = b3 * xy + b2 * yx
    return K_arr, F_arr


def mass_matrices(R, wq):
    cdef const double[:, :, ::1] N = np.ascontiguousarray(R, dtype=np.float64)
    cdef const double[:, ::1] W = np.ascontiguousarray(wq, dtype=np.float64)
    cdef Py_ssize_t C = N.shape[0], Q = N.shape[1], n = N.shape[2]
    M_arr = np.zeros((C, n, n), dtype=np.float64)
    cdef double[:, :, ::1] M = M_arr
    cdef Py_ssize_t c, g, i, j
    cdef double wi
    with nogil:
        for c in range(C):
            for g in range(Q):
                for i in range(n):
                    wi = N[c, g, i] * W[c, g]
                    for j in range(n):
                        M[c, i, j] += wi * N[c, g, j]
    return M_arr
