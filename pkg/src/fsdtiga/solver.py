"""Linear solvers for the assembled plate system."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import AssembledSystem, assemble, build_dofmap
from .errors import ConfigurationError, NumericalError
from .geometry import MultipatchModel

__all__ = ["SolveInfo", "solve_system", "solve_linear", "solve_model", "check_spd"]

log = logging.getLogger(__name__)

SOLVERS = ("direct", "cg")


@dataclass
class SolveInfo:
    """Diagnostics of a linear solve."""

    method: str
    ndofs: int
    residual: float
    iterations: int = 0
    refinements: int = 0
    notes: list[str] = field(default_factory=list)


def _relative_residual(K, x, F) -> float:
    nf = np.linalg.norm(F)
    return float(np.linalg.norm(K @ x - F) / nf) if nf > 0 else float(np.linalg.norm(K @ x))


def _direct(K: sp.csr_matrix, F: np.ndarray, tol: float, max_refine: int):
    try:
        lu = spla.splu(
            K.tocsc(),
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
    except RuntimeError as exc:
        raise NumericalError(f"sparse factorization failed: {exc}") from exc
    diag = lu.U.diagonal()
    if np.any(diag <= 0):
        k = int(np.argmin(diag))
        raise NumericalError(
            f"non-positive pivot {diag[k]:.3e} at step {k}; the stiffness matrix is not "
            "positive definite (check boundary conditions)"
        )
    x = lu.solve(F)
    res = _relative_residual(K, x, F)
    if res <= tol:
        return x, res, 0
    # Thin plates carry large cancellation between u,a and psi_a, so the
    # double precision residual has a floor far above ``tol``.  Refine with
    # residual and iterate kept in extended precision.
    Kx = K.astype(np.longdouble)
    Fx = F.astype(np.longdouble)
    xx = x.astype(np.longdouble)
    nf = np.sqrt(np.sum(Fx * Fx))
    steps = 0
    while True:
        r = Fx - Kx @ xx
        prev, res = res, float(np.sqrt(np.sum(r * r)) / nf)
        if res <= tol or steps >= max_refine or (steps > 0 and res > 0.5 * prev):
            break
        xx += lu.solve(np.asarray(r, dtype=float))
        steps += 1
    return np.asarray(xx, dtype=float), res, steps


def backward_error(K: sp.spmatrix, x: np.ndarray, F: np.ndarray, residual: float) -> float:
    """Normwise backward error ``|r| / (|K|_F |x| + |F|)`` from a relative residual."""
    nf = np.linalg.norm(F)
    nk = spla.norm(K, "fro")
    return float(residual * nf / (nk * np.linalg.norm(x) + nf))


def _cg(K: sp.csr_matrix, F: np.ndarray, tol: float, maxiter: int | None):
    d = K.diagonal()
    if np.any(d <= 0):
        raise NumericalError("non-positive diagonal entry in stiffness matrix")
    M = sp.diags(1.0 / d)
    count = [0]

    def tick(_):
        count[0] += 1

    x, status = spla.cg(K, F, rtol=tol, atol=0.0, M=M, maxiter=maxiter, callback=tick)
    if status != 0:
        raise NumericalError(f"conjugate gradients did not converge in {count[0]} iterations")
    return x, _relative_residual(K, x, F), count[0]


def solve_linear(
    K: sp.spmatrix,
    F: np.ndarray,
    method: str = "direct",
    tol: float = 1e-10,
    max_refine: int = 8,
    maxiter: int | None = None,
    backward_tol: float = 1e-14,
    floor_cap: float = 1e-6,
) -> tuple[np.ndarray, SolveInfo]:
    """Solve the symmetric positive definite system ``K x = F``.

    Parameters
    ----------
    K, F
        Reduced (free dof) system.
    method
        ``"direct"`` (sparse LU with a symmetric ordering and iterative
        refinement) or ``"cg"`` (Jacobi preconditioned conjugate gradients).
    tol
        Target relative residual ``|K x - F| / |F|``.
    backward_tol
        A solve that misses ``tol`` is still accepted when the normwise
        backward error is below this bound and the relative residual below
        ``floor_cap``; the residual is then limited by floating point
        cancellation, not by the solver.  Singular systems produce huge
        solutions with tiny backward error, hence the cap.

    Raises
    ------
    NumericalError
        If factorization fails, the matrix is found indefinite or the
        residual target is missed.
    """
    if method not in SOLVERS:
        raise ConfigurationError(f"unknown solver {method!r}; choose from {SOLVERS}")
    K = sp.csr_matrix(K)
    F = np.asarray(F, dtype=float)
    n = F.size
    if not np.all(np.isfinite(F)) or not np.all(np.isfinite(K.data)):
        raise NumericalError("non-finite entries in linear system")
    if not np.any(F):
        return np.zeros(n), SolveInfo(method, n, 0.0)
    info = SolveInfo(method, n, np.inf)
    if method == "direct":
        x, info.residual, info.refinements = _direct(K, F, tol, max_refine)
    else:
        x, info.residual, info.iterations = _cg(K, F, min(tol, 1e-12), maxiter)
    if not np.all(np.isfinite(x)):
        raise NumericalError("solution contains non-finite values")
    if info.residual > tol:
        # Thin plates: the attainable residual is bounded by rounding in
        # K x, whose entries are orders of magnitude larger than F.
        eta = backward_error(K, x, F, info.residual)
        if eta > backward_tol or info.residual > floor_cap:
            raise NumericalError(
                f"relative residual {info.residual:.3e} exceeds {tol:.1e} "
                f"(backward error {eta:.1e})"
            )
        info.notes.append(
            f"relative residual {info.residual:.2e} is at the rounding floor (backward error {eta:.1e})"
        )
    log.debug("solved %d dofs (%s), residual %.2e", n, method, info.residual)
    return x, info


def solve_system(system: AssembledSystem, method: str = "direct", **kw) -> tuple[np.ndarray, SolveInfo]:
    """Solve an assembled system; returns the full coefficient vector."""
    x, info = solve_linear(system.K_free, system.F_free, method, **kw)
    return system.expand(x), info


def solve_model(model: MultipatchModel, method: str = "direct", **kw):
    """Assemble and solve; returns ``(SolutionField, SolveInfo)``."""
    from .postprocess import SolutionField

    dofmap = build_dofmap(model)
    system = assemble(model, dofmap)
    x, info = solve_system(system, method, **kw)
    return SolutionField.from_vector(model, dofmap, x), info


def check_spd(K: sp.spmatrix) -> float:
    """Smallest eigenvalue of a (small) dense symmetric matrix."""
    A = K.toarray() if sp.issparse(K) else np.asarray(K)
    return float(np.linalg.eigvalsh(0.5 * (A + A.T))[0])
