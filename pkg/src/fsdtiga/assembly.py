"""Global system of the discretized rescaled plate problem.

The unknowns are ordered in three blocks ``[u | psi1 | psi2]``; within each
block dofs follow the merged control point numbering of :class:`DofMap`.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterator

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import ConfigurationError, GeometryError, ModelError
from .geometry import MultipatchModel, edge_indices
from .quadrature import QuadratureRule, rule_for
from .splines import Cell, PatchSurface, point_basis

__all__ = [
    "FIELDS",
    "DofMap",
    "ElementMatrices",
    "AssembledSystem",
    "CellBatch",
    "build_dofmap",
    "cell_batches",
    "element_stiffness",
    "element_load",
    "assemble",
    "assemble_mass",
    "integrate",
    "write_coo",
]

FIELDS = ("u", "psi1", "psi2")

# number of cells evaluated per vectorized batch
_CHUNK = 2048


# ---------------------------------------------------------------------------
# Dof numbering


@dataclass(frozen=True, eq=False)
class DofMap:
    """Merged control point numbering and constrained dofs.

    ``patch_nodes[k]`` maps the flat control point index of patch ``k`` to a
    global node; the dof of field ``f`` at node ``a`` is ``f * nnodes + a``.
    """

    patch_nodes: tuple[np.ndarray, ...]
    nnodes: int
    constrained: np.ndarray

    @property
    def ndofs(self) -> int:
        return 3 * self.nnodes

    @property
    def nnodes_premerge(self) -> int:
        return sum(a.size for a in self.patch_nodes)

    def dof(self, field: str | int, node) -> np.ndarray:
        f = FIELDS.index(field) if isinstance(field, str) else field
        return f * self.nnodes + np.asarray(node)

    @cached_property
    def free(self) -> np.ndarray:
        mask = np.ones(self.ndofs, dtype=bool)
        mask[self.constrained] = False
        return np.flatnonzero(mask)

    def node_coordinates(self, model: MultipatchModel) -> np.ndarray:
        X = np.empty((self.nnodes, 2))
        for patch, nodes in zip(model.patches, self.patch_nodes):
            X[nodes] = patch.points.reshape(-1, 2)
        return X


def _find(parent: np.ndarray, i: int) -> int:
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        parent[i], i = root, parent[i]
    return root


def build_dofmap(model: MultipatchModel, tol: float = 1e-12) -> DofMap:
    """Merge coincident interface control points and collect constrained dofs."""
    offsets = np.cumsum([0] + [p.ncp for p in model.patches])
    parent = np.arange(offsets[-1])
    pts = np.concatenate([p.points.reshape(-1, 2) for p in model.patches])
    wts = np.concatenate([p.weights.ravel() for p in model.patches])
    scale = max(1.0, float(np.ptp(pts, axis=0).max()))
    for itf in model.interfaces:
        ia, ib = itf.pairs(model.patches)
        if ia.size != ib.size:
            raise ModelError(f"interface {itf} has {ia.size} vs {ib.size} control points")
        ga, gb = ia + offsets[itf.patch_a], ib + offsets[itf.patch_b]
        gap = np.abs(pts[ga] - pts[gb]).max()
        if gap > tol * scale or np.abs(wts[ga] - wts[gb]).max() > tol * wts[ga].max():
            raise ModelError(f"interface {itf} is not matched (max control point gap {gap:.3e})")
        for a, b in zip(ga, gb):
            ra, rb = _find(parent, a), _find(parent, b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([_find(parent, i) for i in range(parent.size)])
    _, node = np.unique(roots, return_inverse=True)
    nnodes = int(node.max()) + 1
    patch_nodes = tuple(node[offsets[k] : offsets[k + 1]] for k in range(len(model.patches)))

    constrained = []
    for tag in model.tags:
        nodes = patch_nodes[tag.patch][edge_indices(model.patches[tag.patch].shape, tag.edge)]
        for f in tag.constrained_fields:
            constrained.append(FIELDS.index(f) * nnodes + nodes)
    cons = np.unique(np.concatenate(constrained)) if constrained else np.empty(0, dtype=np.int64)
    return DofMap(patch_nodes, nnodes, cons.astype(np.int64))


# ---------------------------------------------------------------------------
# Geometry mapping on batches of cells


@dataclass(frozen=True, eq=False)
class CellBatch:
    """Shape functions of a group of cells at their quadrature points.

    ``R``, ``Rx``, ``Ry``: ``(C, Q, n)``; ``x``: ``(C, Q, 2)``; ``wq``:
    ``(C, Q)`` quadrature weight times Jacobian determinant; ``support``:
    ``(C, n)`` flat patch control point indices.
    """

    patch_id: int
    cells: np.ndarray
    support: np.ndarray
    R: np.ndarray
    Rx: np.ndarray
    Ry: np.ndarray
    x: np.ndarray
    wq: np.ndarray


def physical_gradients(P, R, dR):
    """Map parametric derivatives to physical ones.

    ``P`` holds the supporting control points ``(..., n, 2)``, ``R`` and
    ``dR`` the rational basis ``(..., n)`` and ``(..., n, 2)``.  Returns
    ``x, Rx, Ry, det`` where ``det`` is the Jacobian determinant.
    """
    x = np.einsum("...k,...kd->...d", R, P)
    J = np.einsum("...ka,...kd->...da", dR, P)  # J[d, a] = dx_d / dxi_a
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    inv = 1.0 / det
    R1, R2 = dR[..., 0], dR[..., 1]
    Rx = (R1 * J[..., 1, 1, None] - R2 * J[..., 1, 0, None]) * inv[..., None]
    Ry = (-R1 * J[..., 0, 1, None] + R2 * J[..., 0, 0, None]) * inv[..., None]
    return x, Rx, Ry, det


def _cell_grid(patch: PatchSurface):
    k1, k2 = patch.kv1.spans, patch.kv2.spans
    e1, e2 = np.meshgrid(np.arange(k1.size), np.arange(k2.size), indexing="ij")
    return e1.ravel(), e2.ravel()


def cell_batches(
    model: MultipatchModel,
    rule: QuadratureRule | None = None,
    chunk: int = _CHUNK,
    patches: list[int] | None = None,
) -> Iterator[CellBatch]:
    """Yield :class:`CellBatch` objects covering every cell of the model."""
    rule = rule_for(*model.degrees) if rule is None else rule
    g1, w1 = rule.points1, rule.weights1
    g2, w2 = rule.points2, rule.weights2
    Q = g1.size * g2.size
    for pid in range(len(model.patches)) if patches is None else patches:
        patch = model.patches[pid]
        U1, U2 = patch.kv1.knots, patch.kv2.knots
        s1, s2 = patch.kv1.spans, patch.kv2.spans
        E1, E2 = _cell_grid(patch)
        P = patch.points.reshape(-1, 2)
        for start in range(0, E1.size, chunk):
            e1, e2 = E1[start : start + chunk], E2[start : start + chunk]
            a1, b1 = U1[s1[e1]], U1[s1[e1] + 1]
            a2, b2 = U2[s2[e2]], U2[s2[e2] + 1]
            x1 = a1[:, None] + 0.5 * (b1 - a1)[:, None] * (g1[None, :] + 1.0)  # (C, n1)
            x2 = a2[:, None] + 0.5 * (b2 - a2)[:, None] * (g2[None, :] + 1.0)
            X1 = np.repeat(x1, g2.size, axis=1).ravel()
            X2 = np.tile(x2, (1, g1.size)).ravel()
            sup, R, dR, _ = point_basis(patch, X1, X2, 1)
            C = e1.size
            n = sup.shape[1]
            sup = sup.reshape(C, Q, n)
            R = R.reshape(C, Q, n)
            dR = dR.reshape(C, Q, n, 2)
            x, Rx, Ry, det = physical_gradients(P[sup], R, dR)
            if np.any(det <= 0):
                bad = int(np.argmax(np.any(det <= 0, axis=1)))
                raise GeometryError(
                    f"non-positive Jacobian in patch {pid}, cell {(int(e1[bad]), int(e2[bad]))}"
                )
            wref = np.outer(w1, w2).ravel()
            area = 0.25 * (b1 - a1) * (b2 - a2)
            wq = wref[None, :] * area[:, None] * det
            yield CellBatch(pid, np.column_stack([e1, e2]), sup[:, 0, :], R, Rx, Ry, x, wq)


def _load_values(load, x: np.ndarray) -> np.ndarray:
    if callable(load):
        return np.broadcast_to(np.asarray(load(x[..., 0], x[..., 1]), dtype=float), x.shape[:-1])
    return np.full(x.shape[:-1], float(load))


def integrate(model: MultipatchModel, func: Callable, rule: QuadratureRule | None = None) -> float:
    """Integral over the model domain of ``func(x1, x2)``."""
    total = 0.0
    for b in cell_batches(model, rule):
        total += float(np.sum(b.wq * func(b.x[..., 0], b.x[..., 1])))
    return total


# ---------------------------------------------------------------------------
# Element level


@dataclass(frozen=True, eq=False)
class ElementMatrices:
    """Element blocks in local ``[u | psi1 | psi2]`` ordering."""

    n: int
    stiffness: np.ndarray | None = None
    load: np.ndarray | None = None

    def block(self, row: str, col: str) -> np.ndarray:
        i, j = FIELDS.index(row), FIELDS.index(col)
        n = self.n
        return self.stiffness[i * n : (i + 1) * n, j * n : (j + 1) * n]

    def load_block(self, row: str) -> np.ndarray:
        i = FIELDS.index(row)
        return self.load[i * self.n : (i + 1) * self.n]


def _cell_quadrature(cell: Cell, rule: QuadratureRule):
    t1 = 0.5 * (rule.points1 + 1.0)
    t2 = 0.5 * (rule.points2 + 1.0)
    T1, T2 = np.meshgrid(t1, t2, indexing="ij")
    R, dR = cell.shape_functions(T1.ravel(), T2.ravel(), 1)
    P = cell.patch.points.reshape(-1, 2)[cell.support]
    x, Rx, Ry, det = physical_gradients(P[None], R, dR)
    if np.any(det <= 0):
        raise GeometryError(f"non-positive Jacobian in cell {cell.index}")
    (a1, b1), (a2, b2) = cell.bounds
    wq = np.outer(rule.weights1, rule.weights2).ravel() * 0.25 * (b1 - a1) * (b2 - a2) * det
    return R, Rx, Ry, x, wq


def element_stiffness(
    cell: Cell, model: MultipatchModel, terms: str = "all", rule: QuadratureRule | None = None
) -> ElementMatrices:
    """Stiffness blocks of one cell by full Gauss quadrature.

    ``terms`` selects ``"all"``, ``"bending"`` or ``"shear"`` contributions.
    """
    c_bend, c_shear = {"all": (1.0, 1.0), "bending": (1.0, 0.0), "shear": (0.0, 1.0)}[terms]
    rule = rule_for(*cell.patch.degrees) if rule is None else rule
    R, Rx, Ry, x, wq = _cell_quadrature(cell, rule)
    K, _ = kernels.fsdt_element_matrices(
        R[None], Rx[None], Ry[None], wq[None], np.zeros((1, wq.size)), model.sigma, c_bend, c_shear
    )
    return ElementMatrices(cell.nloc, stiffness=K[0])


def element_load(cell: Cell, model: MultipatchModel, load=None, rule: QuadratureRule | None = None) -> ElementMatrices:
    """Load vectors ``F^u = int N f``, ``F^psi_a = -(sigma/10) int N_,a f`` of one cell."""
    rule = rule_for(*cell.patch.degrees) if rule is None else rule
    R, Rx, Ry, x, wq = _cell_quadrature(cell, rule)
    f = _load_values(model.load if load is None else load, x)
    _, F = kernels.fsdt_element_matrices(R[None], Rx[None], Ry[None], wq[None], f[None], model.sigma, 0.0, 0.0)
    return ElementMatrices(cell.nloc, load=F[0])


# ---------------------------------------------------------------------------
# Global assembly


class _Pattern:
    """CSR sparsity of the nodal graph and its 3x3 field expansion."""

    def __init__(self, model: MultipatchModel, dofmap: DofMap):
        nn = dofmap.nnodes
        rows, cols = [], []
        for pid, patch in enumerate(model.patches):
            p, q = patch.degrees
            n2 = patch.kv2.n
            E1, E2 = _cell_grid(patch)
            k1 = patch.kv1.spans[E1] - p
            k2 = patch.kv2.spans[E2] - q
            sup = ((k1[:, None, None] + np.arange(p + 1)[None, :, None]) * n2 + (k2[:, None, None] + np.arange(q + 1)[None, None, :])).reshape(E1.size, -1)
            g = dofmap.patch_nodes[pid][sup]
            n = g.shape[1]
            rows.append(np.repeat(g, n, axis=1).ravel())
            cols.append(np.tile(g, (1, n)).ravel())
        r = np.concatenate(rows).astype(np.int64)
        c = np.concatenate(cols).astype(np.int64)
        keys = np.unique(r * nn + c)
        self.nn = nn
        self.keys = keys
        row_of = keys // nn
        self.indices = keys % nn
        self.indptr = np.searchsorted(row_of, np.arange(nn + 1))
        self.lens = np.diff(self.indptr)
        self.nnz = keys.size

    def nodal_positions(self, g: np.ndarray) -> np.ndarray:
        """Positions in the nodal CSR of all pairs of the cell supports ``g`` (C, n)."""
        key = g[:, :, None] * self.nn + g[:, None, :]
        return np.searchsorted(self.keys, key)

    def full_structure(self) -> tuple[np.ndarray, np.ndarray]:
        nn, nnz = self.nn, self.nnz
        row_of = np.repeat(np.arange(nn), self.lens)
        k = np.arange(nnz) - self.indptr[row_of]
        block = np.empty(3 * nnz, dtype=np.int64)
        for fj in range(3):
            block[3 * self.indptr[row_of] + fj * self.lens[row_of] + k] = fj * nn + self.indices
        indices = np.tile(block, 3)
        starts = np.concatenate([fi * 3 * nnz + 3 * self.indptr[:-1] for fi in range(3)])
        indptr = np.concatenate([starts, [9 * nnz]])
        return indptr, indices

    def full_positions(self, g: np.ndarray, pos: np.ndarray) -> np.ndarray:
        """Data positions ``(C, 3, n, 3, n)`` in the field-expanded CSR."""
        C, n = g.shape
        k = pos - self.indptr[g][:, :, None]
        base = 3 * self.indptr[g][:, :, None] + k  # (C, n, n)
        lens = self.lens[g][:, :, None]
        fi = np.arange(3)[None, :, None, None, None]
        fj = np.arange(3)[None, None, None, :, None]
        return fi * 3 * self.nnz + base[:, None, :, None, :] + fj * lens[:, None, :, None, :]


@dataclass(eq=False)
class AssembledSystem:
    """Full stiffness matrix and load vector plus the free-dof restriction."""

    K: sp.csr_matrix
    F: np.ndarray
    dofmap: DofMap

    @property
    def ndofs(self) -> int:
        return self.dofmap.ndofs

    @property
    def free(self) -> np.ndarray:
        return self.dofmap.free

    @cached_property
    def K_free(self) -> sp.csr_matrix:
        free = self.free
        if free.size == self.ndofs:
            return self.K
        return self.K[free][:, free].tocsr()

    @property
    def F_free(self) -> np.ndarray:
        return self.F[self.free]

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        """Scatter a free-dof vector to the full numbering (constrained dofs = 0)."""
        x = np.zeros(self.ndofs)
        x[self.free] = x_free
        return x


def assemble(model: MultipatchModel, dofmap: DofMap | None = None, load=None) -> AssembledSystem:
    """Assemble the global stiffness matrix and load vector.

    Element contributions are accumulated in a fixed cell order, so the
    result is reproducible bit for bit.
    """
    dofmap = build_dofmap(model) if dofmap is None else dofmap
    if dofmap.free.size == 0:
        raise ConfigurationError("every dof is constrained; nothing to solve")
    load = model.load if load is None else load
    pattern = _Pattern(model, dofmap)
    indptr, indices = pattern.full_structure()
    data = np.zeros(indices.size)
    F = np.zeros(dofmap.ndofs)
    nn = dofmap.nnodes
    for b in cell_batches(model):
        f = _load_values(load, b.x)
        Ke, Fe = kernels.fsdt_element_matrices(b.R, b.Rx, b.Ry, b.wq, f, model.sigma)
        g = dofmap.patch_nodes[b.patch_id][b.support]
        pos = pattern.full_positions(g, pattern.nodal_positions(g))
        data += np.bincount(pos.ravel(), weights=Ke.ravel(), minlength=data.size)
        dofs = (np.arange(3)[None, :, None] * nn + g[:, None, :]).ravel()
        F += np.bincount(dofs, weights=Fe.ravel(), minlength=F.size)
    K = sp.csr_matrix((data, indices, indptr), shape=(dofmap.ndofs, dofmap.ndofs))
    K.has_sorted_indices = True
    return AssembledSystem(K, F, dofmap)


def assemble_mass(model: MultipatchModel, dofmap: DofMap | None = None, rule: QuadratureRule | None = None) -> sp.csr_matrix:
    """Scalar mass matrix ``int N N^T`` over merged nodes."""
    dofmap = build_dofmap(model) if dofmap is None else dofmap
    pattern = _Pattern(model, dofmap)
    data = np.zeros(pattern.nnz)
    for b in cell_batches(model, rule):
        Me = kernels.mass_matrices(b.R, b.wq)
        g = dofmap.patch_nodes[b.patch_id][b.support]
        data += np.bincount(pattern.nodal_positions(g).ravel(), weights=Me.ravel(), minlength=data.size)
    return sp.csr_matrix((data, pattern.indices, pattern.indptr), shape=(dofmap.nnodes, dofmap.nnodes))


def write_coo(K: sp.spmatrix, path) -> None:
    """Dump a sparse matrix as ``row col value`` lines."""
    C = sp.coo_matrix(K)
    with open(path, "w") as fh:
        fh.write(f"# {C.shape[0]} {C.shape[1]} {C.nnz}\n")
        for r, c, v in zip(C.row, C.col, C.data):
            fh.write(f"{r} {c} {v:.17g}\n")
