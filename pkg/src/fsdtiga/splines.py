"""B-spline and NURBS bases, refinement, and element-local evaluation.

Conventions
-----------
Control nets are indexed ``[i, j]`` with ``i`` running along the first
parametric direction and ``j`` along the second.  Flattened control point
indices are ``i * n2 + j``.  Local shape functions of a cell are ordered the
same way: ``i_local * (q + 1) + j_local``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, GeometryError

__all__ = [
    "KnotVector",
    "ControlNet",
    "PatchSurface",
    "Cell",
    "SurfacePoint",
    "find_span",
    "basis_funs",
    "basis_ders",
    "insert_knots",
    "elevate_degree",
    "subdivide",
    "element_cells",
    "surface_eval",
    "point_basis",
]


@dataclass(frozen=True, eq=False)
class KnotVector:
    """Open (clamped) knot vector of degree ``degree``."""

    degree: int
    knots: np.ndarray

    def __post_init__(self):
        U = np.array(self.knots, dtype=float)
        U.flags.writeable = False
        object.__setattr__(self, "knots", U)
        p = self.degree
        if p < 0:
            raise ValueError("degree must be non-negative")
        if U.ndim != 1 or U.size < 2 * (p + 1):
            raise ValueError(f"knot vector too short for degree {p}")
        if np.any(np.diff(U) < 0):
            raise ValueError("knots must be nondecreasing")
        if not (np.all(U[: p + 1] == U[0]) and np.all(U[-p - 1 :] == U[-1])):
            raise ValueError("knot vector must be open: end knots repeated p+1 times")
        if U[p + 1] == U[0] or U[-p - 2] == U[-1]:
            raise ValueError("end knot multiplicity exceeds p+1")
        if U[-1] <= U[0]:
            raise ValueError("knot range is empty")
        _, counts = np.unique(U[p + 1 : -p - 1], return_counts=True)
        if counts.size and counts.max() > p:
            raise ValueError("interior knot multiplicity exceeds degree")

    @classmethod
    def uniform(cls, degree: int, nspans: int = 1, a: float = 0.0, b: float = 1.0) -> "KnotVector":
        inner = np.linspace(a, b, nspans + 1)[1:-1]
        return cls(degree, np.concatenate([[a] * (degree + 1), inner, [b] * (degree + 1)]))

    @property
    def is_open(self) -> bool:
        return True

    @property
    def n(self) -> int:
        """Number of basis functions."""
        return self.knots.size - self.degree - 1

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    @cached_property
    def breaks(self) -> np.ndarray:
        return np.unique(self.knots)

    @cached_property
    def spans(self) -> np.ndarray:
        """Indices ``k`` of the nonempty spans ``[U_k, U_{k+1})``."""
        U = self.knots
        k = np.arange(self.degree, self.n)
        return k[U[k + 1] > U[k]]

    @property
    def nspans(self) -> int:
        return self.spans.size

    def multiplicity(self, x: float) -> int:
        return int(np.count_nonzero(self.knots == x))

    def greville(self) -> np.ndarray:
        p = self.degree
        if p == 0:
            return 0.5 * (self.knots[:-1] + self.knots[1:])
        U = self.knots
        return np.array([U[i + 1 : i + p + 1].mean() for i in range(self.n)])

    def __repr__(self) -> str:
        return f"KnotVector(degree={self.degree}, knots={self.knots.tolist()})"


def _check_range(kv: KnotVector, xi) -> np.ndarray:
    x = np.asarray(xi, dtype=float)
    a, b = kv.domain
    if np.any(x < a) or np.any(x > b) or np.any(np.isnan(x)):
        raise DomainError(f"parameter {xi!r} outside knot range [{a}, {b}]")
    return x


def find_span(kv: KnotVector, xi: float) -> int:
    """Span index ``i`` with ``U_i <= xi < U_{i+1}``; the last span is closed."""
    x = _check_range(kv, xi)
    return int(kernels.find_spans(kv.knots, kv.degree, np.atleast_1d(x))[0])


def basis_funs(kv: KnotVector, xi: float) -> np.ndarray:
    """The ``p+1`` nonzero basis values at ``xi``."""
    return basis_ders(kv, xi, 0)[0]


def basis_ders(kv: KnotVector, xi: float, k: int) -> np.ndarray:
    """Nonzero basis functions and their derivatives up to order ``k``.

    Returns an array of shape ``(k + 1, p + 1)``; row ``j`` holds the
    ``j``-th derivatives of the functions ``N_{span-p}, ..., N_{span}``.
    """
    if not 0 <= k <= kv.degree:
        raise ValueError(f"derivative order {k} must lie in [0, {kv.degree}]")
    x = _check_range(kv, xi)
    _, ders = kernels.basis_ders_batch(kv.knots, kv.degree, np.atleast_1d(x), k)
    return ders[0]


def _ders_clipped(kv: KnotVector, xs: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    kk = min(k, kv.degree)
    spans, d = kernels.basis_ders_batch(kv.knots, kv.degree, xs, kk)
    if kk < k:
        d = np.concatenate([d, np.zeros((d.shape[0], k - kk, d.shape[2]))], axis=1)
    return spans, d


@dataclass(frozen=True, eq=False)
class ControlNet:
    """Planar control points ``(n1, n2, 2)`` with positive weights ``(n1, n2)``."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        P = np.array(self.points, dtype=float)
        w = np.array(self.weights, dtype=float)
        if P.ndim != 3 or P.shape[2] != 2:
            raise ValueError("control points must have shape (n1, n2, 2)")
        if w.shape != P.shape[:2]:
            raise ValueError("weights must have shape (n1, n2)")
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        P.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "weights", w)

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    def homogeneous(self) -> np.ndarray:
        w = self.weights[..., None]
        return np.concatenate([self.points * w, w], axis=-1)

    @classmethod
    def from_homogeneous(cls, Pw: np.ndarray) -> "ControlNet":
        w = Pw[..., 2]
        return cls(Pw[..., :2] / w[..., None], w)


@dataclass(frozen=True, eq=False)
class PatchSurface:
    """Tensor-product NURBS surface patch."""

    kv1: KnotVector
    kv2: KnotVector
    net: ControlNet

    def __post_init__(self):
        if self.net.shape != (self.kv1.n, self.kv2.n):
            raise ValueError(
                f"control net {self.net.shape} does not match knot vectors ({self.kv1.n}, {self.kv2.n})"
            )

    @property
    def degrees(self) -> tuple[int, int]:
        return self.kv1.degree, self.kv2.degree

    @property
    def shape(self) -> tuple[int, int]:
        return self.net.shape

    @property
    def points(self) -> np.ndarray:
        return self.net.points

    @property
    def weights(self) -> np.ndarray:
        return self.net.weights

    @property
    def ncp(self) -> int:
        return self.kv1.n * self.kv2.n

    @property
    def nloc(self) -> int:
        p, q = self.degrees
        return (p + 1) * (q + 1)

    def kv(self, direction: int) -> KnotVector:
        if direction not in (0, 1):
            raise ValueError(f"direction must be 0 or 1, got {direction}")
        return self.kv1 if direction == 0 else self.kv2

    def with_net(self, kv1: KnotVector, kv2: KnotVector, Pw: np.ndarray) -> "PatchSurface":
        return PatchSurface(kv1, kv2, ControlNet.from_homogeneous(Pw))

    def transformed(self, A: np.ndarray, b: Sequence[float] = (0.0, 0.0)) -> "PatchSurface":
        """Affine image ``A x + b`` of the patch (weights unchanged)."""
        P = self.points @ np.asarray(A, dtype=float).T + np.asarray(b, dtype=float)
        return PatchSurface(self.kv1, self.kv2, ControlNet(P, self.weights))


# ---------------------------------------------------------------------------
# Refinement


def _insert_one(U: np.ndarray, p: int, Pw: np.ndarray, u: float) -> tuple[np.ndarray, np.ndarray]:
    """Boehm insertion of a single knot along axis 0 of ``Pw``."""
    n = U.size - p - 1
    k = int(np.clip(np.searchsorted(U, u, side="right") - 1, p, n - 1))
    Q = np.empty((Pw.shape[0] + 1,) + Pw.shape[1:])
    Q[: k - p + 1] = Pw[: k - p + 1]
    Q[k + 1 :] = Pw[k:]
    for i in range(k - p + 1, k + 1):
        alpha = (u - U[i]) / (U[i + p] - U[i])
        Q[i] = alpha * Pw[i] + (1.0 - alpha) * Pw[i - 1]
    return np.insert(U, k + 1, u), Q


def insert_knots(patch: PatchSurface, direction: int, new_knots: Sequence[float]) -> PatchSurface:
    """Insert knots along one parametric direction without changing the surface."""
    kv = patch.kv(direction)
    new = np.sort(np.asarray(list(new_knots), dtype=float))
    if new.size == 0:
        return patch
    a, b = kv.domain
    if np.any(new <= a) or np.any(new >= b):
        raise ValueError("inserted knots must lie strictly inside the knot range")
    vals, counts = np.unique(np.concatenate([kv.knots[kv.degree + 1 : -kv.degree - 1], new]), return_counts=True)
    if counts.size and counts.max() > kv.degree:
        bad = vals[np.argmax(counts)]
        raise ValueError(f"knot {bad} would exceed multiplicity {kv.degree}")
    Pw = patch.net.homogeneous()
    if direction == 1:
        Pw = Pw.transpose(1, 0, 2)
    U = kv.knots.copy()
    for u in new:
        U, Pw = _insert_one(U, kv.degree, Pw, u)
    if direction == 1:
        Pw = Pw.transpose(1, 0, 2)
    kv_new = KnotVector(kv.degree, U)
    kv1, kv2 = (kv_new, patch.kv2) if direction == 0 else (patch.kv1, kv_new)
    return patch.with_net(kv1, kv2, Pw)


def _collocation(kv: KnotVector, x: np.ndarray) -> np.ndarray:
    spans, d = kernels.basis_ders_batch(kv.knots, kv.degree, x, 0)
    A = np.zeros((x.size, kv.n))
    for r in range(kv.degree + 1):
        A[np.arange(x.size), spans - kv.degree + r] = d[:, 0, r]
    return A


def elevate_degree(patch: PatchSurface, direction: int, times: int = 1) -> PatchSurface:
    """Raise the degree along one direction by ``times``, preserving the surface.

    Every distinct knot gains ``times`` in multiplicity so that continuity is
    unchanged; the new homogeneous control points are obtained by collocation
    at the Greville abscissae of the elevated space, which reproduces the
    (piecewise polynomial) homogeneous surface exactly.
    """
    if times < 1:
        raise ValueError("times must be >= 1")
    kv = patch.kv(direction)
    vals, counts = np.unique(kv.knots, return_counts=True)
    U = np.repeat(vals, counts + times)
    kv_new = KnotVector(kv.degree + times, U)
    g = kv_new.greville()
    A_new = _collocation(kv_new, g)
    A_old = _collocation(kv, g)
    Pw = patch.net.homogeneous()
    if direction == 1:
        Pw = Pw.transpose(1, 0, 2)
    shp = Pw.shape
    rhs = A_old @ Pw.reshape(shp[0], -1)
    Q = np.linalg.solve(A_new, rhs).reshape((kv_new.n,) + shp[1:])
    if direction == 1:
        Q = Q.transpose(1, 0, 2)
    kv1, kv2 = (kv_new, patch.kv2) if direction == 0 else (patch.kv1, kv_new)
    return patch.with_net(kv1, kv2, Q)


def subdivide(patch: PatchSurface, n1: int, n2: int) -> PatchSurface:
    """Split every nonempty span into ``n1`` (resp. ``n2``) equal parts."""
    for direction, nsub in ((0, n1), (1, n2)):
        if nsub < 1:
            raise ValueError("subdivision count must be >= 1")
        if nsub == 1:
            continue
        br = patch.kv(direction).breaks
        t = np.arange(1, nsub) / nsub
        new = (br[:-1, None] + np.diff(br)[:, None] * t[None, :]).ravel()
        patch = insert_knots(patch, direction, new)
    return patch


# ---------------------------------------------------------------------------
# Evaluation


def point_basis(patch: PatchSurface, xi1, xi2, nders: int = 1):
    """Rational basis functions at paired parameter points.

    Returns ``(support, R, dR, d2R)`` with shapes ``(m, nloc)``,
    ``(m, nloc)``, ``(m, nloc, 2)`` and ``(m, nloc, 3)``.  ``d2R`` holds the
    second derivatives ``(11, 12, 22)`` and is ``None`` unless ``nders >= 2``;
    ``dR`` is ``None`` when ``nders == 0``.  Derivatives are parametric.
    """
    x1 = _check_range(patch.kv1, np.atleast_1d(xi1))
    x2 = _check_range(patch.kv2, np.atleast_1d(xi2))
    x1, x2 = np.broadcast_arrays(x1, x2)
    x1, x2 = x1.ravel(), x2.ravel()
    p, q = patch.degrees
    s1, D1 = _ders_clipped(patch.kv1, x1, nders)
    s2, D2 = _ders_clipped(patch.kv2, x2, nders)
    m = x1.size
    n2 = patch.kv2.n
    support = ((s1 - p)[:, None, None] + np.arange(p + 1)[None, :, None]) * n2 + (
        (s2 - q)[:, None, None] + np.arange(q + 1)[None, None, :]
    )
    support = support.reshape(m, -1)
    w = patch.weights.ravel()[support]

    def tp(a, b):
        return (D1[:, a, :, None] * D2[:, b, None, :]).reshape(m, -1)

    N = tp(0, 0)
    Wsum = np.einsum("mk,mk->m", N, w)
    if np.any(Wsum <= 0):
        raise GeometryError("non-positive weight function")
    A = N * w
    R = A / Wsum[:, None]
    if nders == 0:
        return support, R, None, None
    A1, A2 = tp(1, 0) * w, tp(0, 1) * w
    W1, W2 = A1.sum(1), A2.sum(1)
    R1 = (A1 - W1[:, None] * R) / Wsum[:, None]
    R2 = (A2 - W2[:, None] * R) / Wsum[:, None]
    dR = np.stack([R1, R2], axis=-1)
    if nders == 1:
        return support, R, dR, None
    A11, A12, A22 = tp(2, 0) * w, tp(1, 1) * w, tp(0, 2) * w
    W11, W12, W22 = A11.sum(1), A12.sum(1), A22.sum(1)
    Wc = Wsum[:, None]
    R11 = (A11 - 2 * W1[:, None] * R1 - W11[:, None] * R) / Wc
    R22 = (A22 - 2 * W2[:, None] * R2 - W22[:, None] * R) / Wc
    R12 = (A12 - W1[:, None] * R2 - W2[:, None] * R1 - W12[:, None] * R) / Wc
    return support, R, dR, np.stack([R11, R12, R22], axis=-1)


class SurfacePoint(NamedTuple):
    point: np.ndarray
    first: np.ndarray | None  # (2, 2): column a is dS/dxi_a
    second: np.ndarray | None  # (2, 2, 2): [:, a, b] is d2S/dxi_a dxi_b


def surface_eval(patch: PatchSurface, xi1: float, xi2: float, k: int = 1) -> SurfacePoint:
    """Surface point and parametric derivatives up to order ``k`` (0, 1 or 2)."""
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    sup, R, dR, d2R = point_basis(patch, xi1, xi2, k)
    P = patch.points.reshape(-1, 2)[sup[0]]
    pt = R[0] @ P
    if k == 0:
        return SurfacePoint(pt, None, None)
    first = P.T @ dR[0]
    if k == 1:
        return SurfacePoint(pt, first, None)
    H = P.T @ d2R[0]
    second = np.empty((2, 2, 2))
    second[:, 0, 0] = H[:, 0]
    second[:, 0, 1] = second[:, 1, 0] = H[:, 1]
    second[:, 1, 1] = H[:, 2]
    return SurfacePoint(pt, first, second)


def surface_points(patch: PatchSurface, xi1, xi2) -> np.ndarray:
    """Vectorized surface evaluation; returns ``(m, 2)``."""
    sup, R, _, _ = point_basis(patch, xi1, xi2, 0)
    P = patch.points.reshape(-1, 2)
    return np.einsum("mk,mkd->md", R, P[sup])


# ---------------------------------------------------------------------------
# Element-local (Bezier) evaluation


def _bernstein(p: int, t: np.ndarray, nders: int) -> np.ndarray:
    """Bernstein polynomials on [0, 1] and derivatives: shape ``(nders+1, p+1, m)``."""
    t = np.atleast_1d(t)
    out = np.zeros((nders + 1, p + 1, t.size))
    for k in range(min(nders, p) + 1):
        deg = p - k
        B = np.array([comb(deg, i) * t**i * (1 - t) ** (deg - i) for i in range(deg + 1)])
        # k-th derivative of degree-p Bernstein: p!/(p-k)! * sum_j (-1)^(k-j) C(k,j) B^{p-k}_{i-j}
        fac = float(np.prod(np.arange(p - k + 1, p + 1)))
        for i in range(p + 1):
            acc = np.zeros(t.size)
            for j in range(k + 1):
                if 0 <= i - j <= deg:
                    acc += (-1) ** (k - j) * comb(k, j) * B[i - j]
            out[k, i] = fac * acc
    return out


def extraction_operators(kv: KnotVector) -> np.ndarray:
    """Bezier extraction operators, shape ``(nspans, p+1, p+1)``.

    ``N_local(xi) = C[e] @ B(t)`` on span ``e``, with ``B`` the Bernstein
    polynomials in the span-local coordinate ``t`` in [0, 1].  Computed by
    exact collocation of the span restrictions at ``p+1`` interior points.
    """
    p = kv.degree
    t = (np.arange(p + 1) + 0.5) / (p + 1)
    Bt = _bernstein(p, t, 0)[0]  # (p+1 functions, p+1 points)
    out = np.empty((kv.nspans, p + 1, p + 1))
    for e, k in enumerate(kv.spans):
        a, b = kv.knots[k], kv.knots[k + 1]
        _, d = kernels.basis_ders_batch(kv.knots, p, a + (b - a) * t, 0)
        out[e] = np.linalg.solve(Bt.T, d[:, 0, :]).T
    return out


@dataclass(frozen=True, eq=False)
class Cell:
    """One nonempty knot cell of a patch with its Bezier extraction data."""

    patch: PatchSurface
    index: tuple[int, int]
    spans: tuple[int, int]
    bounds: tuple[tuple[float, float], tuple[float, float]]
    support: np.ndarray
    extraction: tuple[np.ndarray, np.ndarray] = field(repr=False)

    @property
    def nloc(self) -> int:
        return self.support.size

    def to_parameter(self, t1, t2) -> tuple[np.ndarray, np.ndarray]:
        (a1, b1), (a2, b2) = self.bounds
        return a1 + (b1 - a1) * np.asarray(t1), a2 + (b2 - a2) * np.asarray(t2)

    def shape_functions(self, t1, t2, nders: int = 1):
        """Rational shape functions at cell-local coordinates ``t`` in [0, 1]^2.

        Returns ``(R, dR)`` of shapes ``(m, nloc)`` and ``(m, nloc, 2)``
        (derivatives with respect to the patch parameters), evaluated
        without any access to the global knot vectors.
        """
        t1 = np.atleast_1d(np.asarray(t1, dtype=float))
        t2 = np.atleast_1d(np.asarray(t2, dtype=float))
        t1, t2 = np.broadcast_arrays(t1, t2)
        p, q = self.patch.degrees
        C1, C2 = self.extraction
        (a1, b1), (a2, b2) = self.bounds
        B1 = np.einsum("ij,kjm->kim", C1, _bernstein(p, t1, nders))
        B2 = np.einsum("ij,kjm->kim", C2, _bernstein(q, t2, nders))
        B1[1:] /= b1 - a1
        B2[1:] /= b2 - a2
        m = t1.size
        w = self.patch.weights.ravel()[self.support]

        def tp(a, b):
            return (B1[a].T[:, :, None] * B2[b].T[:, None, :]).reshape(m, -1)

        A = tp(0, 0) * w
        W = A.sum(1, keepdims=True)
        R = A / W
        if nders == 0:
            return R, None
        A1, A2 = tp(1, 0) * w, tp(0, 1) * w
        R1 = (A1 - A1.sum(1, keepdims=True) * R) / W
        R2 = (A2 - A2.sum(1, keepdims=True) * R) / W
        return R, np.stack([R1, R2], axis=-1)


def element_cells(patch: PatchSurface) -> list[Cell]:
    """All nonempty knot cells of ``patch``, first direction slowest."""
    p, q = patch.degrees
    n2 = patch.kv2.n
    ops1 = extraction_operators(patch.kv1)
    ops2 = extraction_operators(patch.kv2)
    U1, U2 = patch.kv1.knots, patch.kv2.knots
    cells = []
    for e1, k1 in enumerate(patch.kv1.spans):
        for e2, k2 in enumerate(patch.kv2.spans):
            sup = ((k1 - p + np.arange(p + 1))[:, None] * n2 + (k2 - q + np.arange(q + 1))[None, :]).ravel()
            cells.append(
                Cell(
                    patch=patch,
                    index=(e1, e2),
                    spans=(int(k1), int(k2)),
                    bounds=((float(U1[k1]), float(U1[k1 + 1])), (float(U2[k2]), float(U2[k2 + 1]))),
                    support=sup,
                    extraction=(ops1[e1], ops2[e2]),
                )
            )
    return cells
