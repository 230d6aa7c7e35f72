"""Derived fields, error norms, line sampling and convergence bookkeeping."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import DofMap, assemble_mass, build_dofmap, cell_batches, physical_gradients
from .errors import DomainError, NumericalError
from .geometry import MultipatchModel
from .quadrature import QuadratureRule
from .splines import point_basis, surface_points

__all__ = [
    "SolutionField",
    "PointLocation",
    "locate_points",
    "project",
    "interpolate",
    "l2_error",
    "sample_line",
    "ConvergenceRow",
    "ConvergenceStudy",
    "fit_slope",
    "convergence_row",
    "error_rule",
    "convergence_study",
    "strong_residual",
]

QUANTITIES = ("u", "u_true", "psi1", "psi2", "phi1", "phi2")


# ---------------------------------------------------------------------------
# Point location


@dataclass(frozen=True)
class PointLocation:
    """Patch and parametric coordinates of physical points."""

    patch: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray


def _invert_patch(patch, X, g1, g2, tol, maxiter=50):
    """Newton inversion of the patch map for points ``X`` from guesses ``g``."""
    (a1, b1), (a2, b2) = patch.kv1.domain, patch.kv2.domain
    P = patch.points.reshape(-1, 2)
    for _ in range(maxiter):
        sup, R, dR, _ = point_basis(patch, g1, g2, 1)
        x, _, _, _ = physical_gradients(P[sup], R, dR)
        J = np.einsum("mka,mkd->mda", dR, P[sup])
        r = X - x
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        d1 = (J[:, 1, 1] * r[:, 0] - J[:, 0, 1] * r[:, 1]) / det
        d2 = (-J[:, 1, 0] * r[:, 0] + J[:, 0, 0] * r[:, 1]) / det
        g1 = np.clip(g1 + d1, a1, b1)
        g2 = np.clip(g2 + d2, a2, b2)
        if np.all(np.abs(d1) + np.abs(d2) < 1e-15):
            break
    x = surface_points(patch, g1, g2)
    ok = np.hypot(*(x - X).T) <= tol
    return g1, g2, ok


def locate_points(model: MultipatchModel, x, y, tol: float | None = None) -> PointLocation:
    """Find the patch and parametric preimage of physical points.

    Raises
    ------
    DomainError
        If a point lies outside the model domain.
    """
    X = np.column_stack([np.ravel(x), np.ravel(y)]).astype(float)
    m = X.shape[0]
    scale = max(1.0, float(np.abs(np.concatenate([p.points.reshape(-1, 2) for p in model.patches])).max()))
    tol = 1e-10 * scale if tol is None else tol
    # coarse samples of every patch give the starting guesses
    t = np.linspace(0.0, 1.0, 21)
    guesses, dist = [], []
    for patch in model.patches:
        (a1, b1), (a2, b2) = patch.kv1.domain, patch.kv2.domain
        T1, T2 = np.meshgrid(a1 + (b1 - a1) * t, a2 + (b2 - a2) * t, indexing="ij")
        S = surface_points(patch, T1.ravel(), T2.ravel())
        d2 = ((X[:, None, :] - S[None, :, :]) ** 2).sum(-1)
        k = np.argmin(d2, axis=1)
        guesses.append((T1.ravel()[k], T2.ravel()[k]))
        dist.append(d2[np.arange(m), k])
    order = np.argsort(np.array(dist), axis=0)  # (npatch, m)
    pid = np.full(m, -1)
    xi1 = np.zeros(m)
    xi2 = np.zeros(m)
    for rank in range(len(model.patches)):
        todo = np.flatnonzero(pid < 0)
        if todo.size == 0:
            break
        cand = order[rank, todo]
        for k in np.unique(cand):
            idx = todo[cand == k]
            g1, g2, ok = _invert_patch(model.patches[k], X[idx], guesses[k][0][idx], guesses[k][1][idx], tol)
            hit = idx[ok]
            pid[hit], xi1[hit], xi2[hit] = k, g1[ok], g2[ok]
    if np.any(pid < 0):
        bad = X[np.flatnonzero(pid < 0)[0]]
        raise DomainError(f"point ({bad[0]:.6g}, {bad[1]:.6g}) is outside the model domain")
    return PointLocation(pid, xi1, xi2)


# ---------------------------------------------------------------------------
# Discrete fields


@dataclass(eq=False)
class SolutionField:
    """Control point coefficients of ``u``, ``psi1``, ``psi2`` on merged nodes.

    ``recovered`` optionally holds projected coefficients of the shear angles
    ``phi1``, ``phi2`` (see :meth:`with_recovered_shear`).
    """

    model: MultipatchModel
    dofmap: DofMap
    coeffs: np.ndarray
    recovered: np.ndarray | None = None

    @classmethod
    def from_vector(cls, model: MultipatchModel, dofmap: DofMap, x: np.ndarray) -> "SolutionField":
        return cls(model, dofmap, np.asarray(x, dtype=float).reshape(3, dofmap.nnodes))

    @property
    def vector(self) -> np.ndarray:
        return self.coeffs.ravel()

    @property
    def sigma(self) -> float:
        return self.model.sigma

    # evaluation ------------------------------------------------------------
    def _basis(self, pid, xi1, xi2, nders):
        patch = self.model.patches[pid]
        xi1 = np.atleast_1d(np.asarray(xi1, dtype=float))
        xi2 = np.atleast_1d(np.asarray(xi2, dtype=float))
        sup, R, dR, d2R = point_basis(patch, xi1, xi2, nders)
        P = patch.points.reshape(-1, 2)[sup]
        x, Rx, Ry, det = physical_gradients(P, R, dR)
        if np.any(det <= 0):
            raise NumericalError(f"degenerate geometry map in patch {pid}")
        out = {"x": x, "R": R, "Rx": Rx, "Ry": Ry, "nodes": self.dofmap.patch_nodes[pid][sup]}
        if nders >= 2:
            # H_xi = J^T H_x J + sum_d R_,d X''_d
            J = np.einsum("mka,mkd->mda", dR, P)
            Xpp = np.einsum("mkc,mkd->mdc", d2R, P)  # (m, d, [11, 12, 22])
            G = np.stack([Rx, Ry], axis=-1)  # (m, n, d)
            Hxi = d2R - np.einsum("mnd,mdc->mnc", G, Xpp)
            Jinv = np.linalg.inv(J)  # Jinv[a, d] = dxi_a / dx_d
            H = np.empty(Hxi.shape[:2] + (2, 2))
            H[..., 0, 0], H[..., 0, 1], H[..., 1, 1] = Hxi[..., 0], Hxi[..., 1], Hxi[..., 2]
            H[..., 1, 0] = H[..., 0, 1]
            Hx = np.einsum("mad,mnab,mbe->mnde", Jinv, H, Jinv)
            out["Rxx"], out["Rxy"], out["Ryy"] = Hx[..., 0, 0], Hx[..., 0, 1], Hx[..., 1, 1]
        return out

    def eval_coeffs(self, c: np.ndarray, pid: int, xi1, xi2, nders: int = 1) -> dict:
        """Evaluate coefficient rows ``c`` (k, nnodes) at parametric points of one patch.

        Returns a dict with ``x`` (m, 2), ``val``, ``dx``, ``dy`` (k, m) and,
        for ``nders=2``, ``dxx``, ``dxy``, ``dyy``.
        """
        b = self._basis(pid, xi1, xi2, nders)
        cl = c[:, b["nodes"]]  # (k, m, n)
        res = {"x": b["x"]}
        for key, name in (("R", "val"), ("Rx", "dx"), ("Ry", "dy"), ("Rxx", "dxx"), ("Rxy", "dxy"), ("Ryy", "dyy")):
            if key in b:
                res[name] = np.einsum("kmn,mn->km", cl, b[key])
        return res

    def eval_field(self, pid: int, xi1, xi2) -> dict:
        """Values and physical first derivatives of ``u``, ``psi1``, ``psi2``."""
        e = self.eval_coeffs(self.coeffs, pid, xi1, xi2, 1)
        out = {"x": e["x"]}
        for k, name in enumerate(("u", "psi1", "psi2")):
            out[name] = e["val"][k]
            out[name + "_x"] = e["dx"][k]
            out[name + "_y"] = e["dy"][k]
        return out

    def quantities_from(self, e: dict) -> dict:
        """Derived quantities from an :meth:`eval_field` result."""
        out = {n: e[n] for n in ("u", "psi1", "psi2")}
        out["u_true"] = e["u"] - self.sigma / 60.0 * (e["psi1_x"] + e["psi2_y"])
        out["phi1"] = e["u_x"] + e["psi1"]
        out["phi2"] = e["u_y"] + e["psi2"]
        return out

    def evaluate(self, pid: int, xi1, xi2) -> dict:
        """All of ``u``, ``u_true``, ``psi1``, ``psi2``, ``phi1``, ``phi2`` at parametric points."""
        e = self.eval_field(pid, xi1, xi2)
        q = self.quantities_from(e)
        q["x"] = e["x"]
        if self.recovered is not None:
            r = self.eval_coeffs(self.recovered, pid, xi1, xi2, 1)["val"]
            q["phi1_recovered"], q["phi2_recovered"] = r[0], r[1]
        return q

    def at_points(self, x, y) -> dict:
        """Evaluate all quantities at physical points."""
        loc = locate_points(self.model, x, y)
        m = loc.patch.size
        out: dict[str, np.ndarray] = {}
        for pid in np.unique(loc.patch):
            idx = np.flatnonzero(loc.patch == pid)
            q = self.evaluate(int(pid), loc.xi1[idx], loc.xi2[idx])
            for k, v in q.items():
                if k not in out:
                    out[k] = np.zeros((m, 2)) if k == "x" else np.zeros(m)
                out[k][idx] = v
        return out

    def true_deflection(self, x, y) -> np.ndarray:
        """Corrected deflection ``u - sigma/60 div psi`` at physical points."""
        return self.at_points(x, y)["u_true"]

    def shear_angles(self, x, y, recovered: bool = False) -> np.ndarray:
        """Shear angles ``(phi1, phi2)`` at physical points, shape (2, m)."""
        q = (self.with_recovered_shear() if recovered and self.recovered is None else self).at_points(x, y)
        if recovered:
            return np.stack([q["phi1_recovered"], q["phi2_recovered"]])
        return np.stack([q["phi1"], q["phi2"]])

    def with_recovered_shear(self) -> "SolutionField":
        """Attach shear angles smoothed by global L2 projection."""
        def phi(b, c):
            u, p1, p2 = c
            return np.stack([np.einsum("cqn,cn->cq", b.Rx, u) + np.einsum("cqn,cn->cq", b.R, p1),
                             np.einsum("cqn,cn->cq", b.Ry, u) + np.einsum("cqn,cn->cq", b.R, p2)])

        rec = project(self.model, self.dofmap, phi, self.coeffs)
        return SolutionField(self.model, self.dofmap, self.coeffs, rec)

    def values_on_batch(self, b) -> dict:
        """Quantities at the quadrature points of a :class:`CellBatch`."""
        g = self.dofmap.patch_nodes[b.patch_id][b.support]
        c = self.coeffs[:, g]  # (3, C, n)
        val = np.einsum("cqn,kcn->kcq", b.R, c)
        dx = np.einsum("cqn,kcn->kcq", b.Rx, c)
        dy = np.einsum("cqn,kcn->kcq", b.Ry, c)
        return {
            "u": val[0],
            "psi1": val[1],
            "psi2": val[2],
            "u_true": val[0] - self.sigma / 60.0 * (dx[1] + dy[2]),
            "phi1": dx[0] + val[1],
            "phi2": dy[0] + val[2],
        }


def project(model: MultipatchModel, dofmap: DofMap, func: Callable, *args, rule: QuadratureRule | None = None) -> np.ndarray:
    """Global L2 projection onto the scalar spline space.

    ``func(batch, *local)`` returns values ``(k, C, Q)`` at the quadrature
    points of a batch; ``args`` are nodal coefficient arrays whose local
    restrictions are passed as ``local`` (``(k, C, n)`` each).  A plain
    callable of ``(x, y)`` returning ``(k, ...)`` values is also accepted
    when no ``args`` are given.
    """
    M = assemble_mass(model, dofmap, rule)
    rhs = None
    for b in cell_batches(model, rule):
        g = dofmap.patch_nodes[b.patch_id][b.support]
        if args:
            vals = func(b, *[a[:, g] for a in args])
        else:
            vals = np.asarray(func(b.x[..., 0], b.x[..., 1]), dtype=float)
        if vals.ndim == 2:
            vals = vals[None]
        contrib = np.einsum("cqn,kcq,cq->kcn", b.R, vals, b.wq)
        if rhs is None:
            rhs = np.zeros((vals.shape[0], dofmap.nnodes))
        for k in range(vals.shape[0]):
            rhs[k] += np.bincount(g.ravel(), weights=contrib[k].ravel(), minlength=dofmap.nnodes)
    try:
        lu = spla.splu(M.tocsc())
    except RuntimeError as exc:
        raise NumericalError(f"singular projection mass matrix: {exc}") from exc
    return np.stack([lu.solve(r) for r in rhs])


def interpolate(model: MultipatchModel, funcs: Sequence[Callable], dofmap: DofMap | None = None) -> SolutionField:
    """Field whose ``u``, ``psi1``, ``psi2`` are L2 projections of ``funcs``.

    Each callable maps ``(x, y)`` arrays to values.  Constrained dofs are
    left as projected (not zeroed).
    """
    dofmap = build_dofmap(model) if dofmap is None else dofmap
    coeffs = project(model, dofmap, lambda x, y: np.stack([np.broadcast_to(f(x, y), x.shape) for f in funcs]))
    return SolutionField(model, dofmap, coeffs)


# ---------------------------------------------------------------------------
# Error norms


def _oracle_values(oracle, name: str, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if hasattr(oracle, "field"):
        return np.asarray(oracle.field(name, x, y), dtype=float)
    return np.asarray(oracle(x, y), dtype=float)


def error_rule(model: MultipatchModel, extra: int = 3) -> QuadratureRule:
    """Quadrature with ``extra`` points beyond the assembly rule, avoiding Gauss point superconvergence."""
    p, q = model.degrees
    return QuadratureRule(p + 1 + extra, q + 1 + extra)


def l2_error(
    field: SolutionField,
    oracle,
    quantity: str = "u",
    rooted: bool = False,
    rule: QuadratureRule | None = None,
) -> float:
    """Normalized L2 error ``int (q_h - q)^2 / int q^2``.

    Parameters
    ----------
    oracle
        Object with ``field(name, x, y)`` (see :mod:`fsdtiga.analytic`) or a
        callable ``(x, y) -> values`` of ``quantity``.
    quantity
        One of ``u``, ``u_true``, ``psi1``, ``psi2``, ``phi1``, ``phi2``.
    rooted
        Return the square root of the ratio.
    """
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}")
    rule = error_rule(field.model) if rule is None else rule
    num = den = 0.0
    for b in cell_batches(field.model, rule):
        qh = field.values_on_batch(b)[quantity]
        qa = _oracle_values(oracle, quantity, b.x[..., 0], b.x[..., 1])
        num += float(np.sum(b.wq * (qh - qa) ** 2))
        den += float(np.sum(b.wq * qa**2))
    if den == 0.0:
        raise ValueError("oracle vanishes identically; normalized error undefined")
    ratio = num / den
    return float(np.sqrt(ratio)) if rooted else ratio


# ---------------------------------------------------------------------------
# Line sampling


def sample_line(field: SolutionField, start, end, n: int = 101) -> dict:
    """Sample all quantities at ``n`` equally spaced points of a segment.

    The result also holds ``s`` (arc coordinate from ``start``), ``x``,
    ``y`` and the tangential and normal components ``psi_t``, ``phi_t``,
    ``psi_n``, ``phi_n`` of the vector quantities.
    """
    if n < 2:
        raise ValueError("need at least two samples")
    a, b = np.asarray(start, dtype=float), np.asarray(end, dtype=float)
    L = float(np.hypot(*(b - a)))
    if L == 0:
        raise ValueError("degenerate line")
    s = np.linspace(0.0, L, n)
    t = (b - a) / L
    P = a[None, :] + s[:, None] * t[None, :]
    q = field.at_points(P[:, 0], P[:, 1])
    q.pop("x")
    out = {"s": s, "x": P[:, 0], "y": P[:, 1], **q}
    for name in ("psi", "phi"):
        out[name + "_t"] = q[name + "1"] * t[0] + q[name + "2"] * t[1]
        out[name + "_n"] = -q[name + "1"] * t[1] + q[name + "2"] * t[0]
    return out


# ---------------------------------------------------------------------------
# Convergence studies


@dataclass(frozen=True)
class ConvergenceRow:
    """One refinement level: dofs, probe deflection and its errors."""

    ndofs: int
    deflection: float
    deflection_error: float
    l2_error: float
    l2_error_rooted: float = float("nan")
    l2_error_true: float = float("nan")
    element_size: float = float("nan")
    level: int = 0


def fit_slope(h: Sequence[float], err: Sequence[float], last: int = 3, floor: float = 1e-9) -> float:
    """Least-squares slope of ``log err`` against ``log h``.

    Points with ``err < floor`` are dropped before the last ``last`` are
    taken.

    Raises
    ------
    ValueError
        If fewer than ``last`` points remain.
    """
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    keep = err >= floor
    h, err = h[keep], err[keep]
    if h.size < last or last < 2:
        raise ValueError(f"need at least {max(last, 2)} refinements above {floor:g} to fit a slope, got {h.size}")
    return float(np.polyfit(np.log(h[-last:]), np.log(err[-last:]), 1)[0])


@dataclass
class ConvergenceStudy:
    rows: list[ConvergenceRow] = field(default_factory=list)

    @property
    def slope(self) -> float:
        """Rate of the rooted L2 error against element size (last three levels)."""
        return fit_slope([r.element_size for r in self.rows], [r.l2_error_rooted for r in self.rows])


def convergence_row(field: SolutionField, oracle, probe=(0.0, 0.0), level: int = 0) -> ConvergenceRow:
    """Tabulate one solved level against an analytic oracle."""
    model = field.model
    u = float(field.at_points([probe[0]], [probe[1]])["u"][0])
    ua = float(_oracle_values(oracle, "u", np.array([probe[0]]), np.array([probe[1]]))[0])
    e2 = l2_error(field, oracle, "u")
    return ConvergenceRow(
        ndofs=field.dofmap.ndofs,
        deflection=u,
        deflection_error=abs(u - ua) / abs(ua),
        l2_error=e2,
        l2_error_rooted=float(np.sqrt(e2)),
        l2_error_true=l2_error(field, oracle, "u_true", rooted=True),
        element_size=float(np.sqrt(model.area() / model.ncells())),
        level=level,
    )


def convergence_study(
    build: Callable[[int], MultipatchModel],
    levels: Sequence[int],
    oracle,
    probe=(0.0, 0.0),
    method: str = "direct",
) -> ConvergenceStudy:
    """Solve ``build(level)`` for each level and tabulate errors."""
    from .solver import solve_model

    study = ConvergenceStudy()
    for level in levels:
        sol, _ = solve_model(build(level), method)
        study.rows.append(convergence_row(sol, oracle, probe, level))
    return study


# ---------------------------------------------------------------------------
# Strong form diagnostic


def strong_residual(field: SolutionField, load=None, n: int = 6) -> dict:
    """Pointwise residual of the equilibrium equations at interior samples.

    ``r_u = -5/6 (lap u + div psi) - f`` and
    ``r_a = -(2 sigma + 1)/12 (div psi)_,a - 1/12 lap psi_a + 5/6 (u_,a + psi_a)``
    evaluated on an ``n x n`` grid strictly inside every patch.  The rotation
    equations assume a uniform load.  Returns the max and mean absolute
    values of each component.
    """
    model = field.model
    if min(model.degrees) < 2:
        raise ValueError("strong residual needs degree >= 2")
    load = model.load if load is None else load
    c = (2.0 * field.sigma + 1.0) / 12.0
    t = (np.arange(n) + 0.5) / n
    res = {"u": [], "psi1": [], "psi2": []}
    for pid, patch in enumerate(model.patches):
        (a1, b1), (a2, b2) = patch.kv1.domain, patch.kv2.domain
        T1, T2 = np.meshgrid(a1 + (b1 - a1) * t, a2 + (b2 - a2) * t, indexing="ij")
        e = field.eval_coeffs(field.coeffs, pid, T1.ravel(), T2.ravel(), 2)
        (u, p1, p2), (ux, p1x, p2x), (uy, p1y, p2y) = e["val"], e["dx"], e["dy"]
        (uxx, p1xx, p2xx), (uxy, p1xy, p2xy), (uyy, p1yy, p2yy) = e["dxx"], e["dxy"], e["dyy"]
        x = e["x"]
        f = np.broadcast_to(load(x[:, 0], x[:, 1]) if callable(load) else float(load), u.shape)
        res["u"].append(-5.0 / 6.0 * (uxx + uyy + p1x + p2y) - f)
        res["psi1"].append(-c * (p1xx + p2xy) - (p1xx + p1yy) / 12.0 + 5.0 / 6.0 * (ux + p1))
        res["psi2"].append(-c * (p1xy + p2yy) - (p2xx + p2yy) / 12.0 + 5.0 / 6.0 * (uy + p2))
    out = {}
    for k, v in res.items():
        a = np.abs(np.concatenate(v))
        out[k + "_max"] = float(a.max())
        out[k + "_mean"] = float(a.mean())
    return out
