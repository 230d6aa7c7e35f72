"""Tensor-product Gauss-Legendre rules on parametric cells."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = ["QuadratureRule", "gauss_legendre", "rule_for"]


@lru_cache(maxsize=None)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Return ``n`` Gauss points and weights on ``[a, b]``."""
    if n < 1:
        raise ValueError("need at least one quadrature point")
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor Gauss rule with ``n1 x n2`` points on the reference square [-1, 1]^2."""

    n1: int
    n2: int

    @property
    def points1(self) -> np.ndarray:
        return _leggauss(self.n1)[0]

    @property
    def weights1(self) -> np.ndarray:
        return _leggauss(self.n1)[1]

    @property
    def points2(self) -> np.ndarray:
        return _leggauss(self.n2)[0]

    @property
    def weights2(self) -> np.ndarray:
        return _leggauss(self.n2)[1]

    @property
    def size(self) -> int:
        return self.n1 * self.n2

    def tensor(self) -> tuple[np.ndarray, np.ndarray]:
        """Points ``(n1*n2, 2)`` and weights ``(n1*n2,)``; first direction slowest."""
        g1, g2 = np.meshgrid(self.points1, self.points2, indexing="ij")
        w = np.outer(self.weights1, self.weights2)
        return np.column_stack([g1.ravel(), g2.ravel()]), w.ravel()

    def on_interval(self, direction: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        n = self.n1 if direction == 0 else self.n2
        return gauss_legendre(n, a, b)


def rule_for(p: int, q: int) -> QuadratureRule:
    """Full ``(p+1) x (q+1)`` Gauss integration for a degree ``(p, q)`` space.

    There is deliberately no reduced or selective variant.
    """
    if p < 1 or q < 1:
        raise ValueError(f"degrees must be >= 1, got ({p}, {q})")
    return QuadratureRule(p + 1, q + 1)
