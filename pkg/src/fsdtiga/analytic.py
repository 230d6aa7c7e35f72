"""Closed-form solutions of the rescaled plate problem.

All quantities are rescaled: lengths in units of the thickness, rotations
multiplied by the thickness, load ``f`` divided by the shear modulus.  Every
solution exposes ``u`` (deflection of the midplane unknown), ``u_true`` (the
corrected deflection ``u - sigma/60 div psi``), ``psi``, ``phi`` (shear
angles ``grad u + psi``) and the thin-plate counterpart ``u_kirchhoff`` /
``psi_kirchhoff``.  Plate solutions are radial; beam solutions depend on
``x`` only.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import poisson_sigma

__all__ = [
    "ClampedDisk",
    "SimplySupportedDisk",
    "CantileverBeam",
    "SimplySupportedBeam",
    "kirchhoff_gap",
]


def _check_nu(nu: float) -> None:
    if not 0.0 <= nu < 0.5:
        raise DomainError(f"Poisson ratio {nu} outside [0, 0.5)")


@dataclass(frozen=True)
class _Disk:
    radius: float
    nu: float = 0.3
    load: float = 1.0

    def __post_init__(self):
        _check_nu(self.nu)
        if self.radius <= 0:
            raise DomainError("radius must be positive")

    @property
    def sigma(self) -> float:
        return poisson_sigma(self.nu)

    def _r(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > self.radius * (1 + 1e-12)):
            raise DomainError(f"radius outside [0, {self.radius}]")
        return r

    # radial profiles -------------------------------------------------------
    def u(self, r):
        raise NotImplementedError

    def psi_r(self, r):
        raise NotImplementedError

    def div_psi(self, r):
        raise NotImplementedError

    def u_true(self, r):
        return self.u(r) - self.sigma / 60.0 * self.div_psi(r)

    def phi_r(self, r):
        """Radial shear angle, ``-0.6 f r`` for any axisymmetric disk."""
        return -0.6 * self.load * self._r(r)

    # Cartesian views ------------------------------------------------------
    def field(self, name: str, x, y):
        """Evaluate ``u``, ``u_true``, ``psi1``, ``psi2``, ``phi1``, ``phi2`` (or Kirchhoff variants) at ``(x, y)``."""
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        r = np.minimum(np.hypot(x, y), self.radius)
        if name in ("u", "u_true", "u_kirchhoff"):
            return getattr(self, name)(r)
        radial = {"psi": self.psi_r, "phi": self.phi_r, "psi_kirchhoff": self.psi_kirchhoff}
        base, comp = name[:-1], name[-1:]
        if base not in radial or comp not in ("1", "2"):
            raise KeyError(name)
        safe = np.where(r > 0, r, 1.0)
        c = np.where(r > 0, (x if comp == "1" else y) / safe, 0.0)
        return radial[base](r) * c


@dataclass(frozen=True)
class ClampedDisk(_Disk):
    """Clamped circular plate under uniform load.

    ``u = 0.3 f (R^2 - r^2) + 3 (1 - nu) f (R^2 - r^2)^2 / 32``
    """

    @property
    def _k(self) -> float:
        return 3.0 * (1.0 - self.nu) * self.load / 8.0

    def u(self, r):
        r = self._r(r)
        s = self.radius**2 - r**2
        return 0.3 * self.load * s + 3.0 * (1.0 - self.nu) / 32.0 * self.load * s**2

    def psi_r(self, r):
        r = self._r(r)
        return self._k * (self.radius**2 * r - r**3)

    def div_psi(self, r):
        r = self._r(r)
        return self._k * (2.0 * self.radius**2 - 4.0 * r**2)

    def u_kirchhoff(self, r):
        r = self._r(r)
        return 3.0 * (1.0 - self.nu) / 32.0 * self.load * (self.radius**2 - r**2) ** 2

    def psi_kirchhoff(self, r):
        return self.psi_r(r)

    @property
    def center_deflection(self) -> float:
        return float(self.u(0.0))


@dataclass(frozen=True)
class SimplySupportedDisk(_Disk):
    """Circular plate with ``u = 0`` on the rim and free rotations.

    ``u = 0.3 f (R^2 - r^2) / (1 + nu) + c (R^2 - r^2)(beta R^2 - r^2)``
    with ``c = 3 (1 - nu) f / 32`` and ``beta = (5 + nu) / (1 + nu)``.
    The rotation ``psi_r = C r - K r^3`` follows from the vanishing radial
    moment on the rim.
    """

    @property
    def _c(self) -> float:
        return 3.0 * (1.0 - self.nu) * self.load / 32.0

    @property
    def _beta(self) -> float:
        return (5.0 + self.nu) / (1.0 + self.nu)

    @property
    def _K(self) -> float:
        return 3.0 * (1.0 - self.nu) * self.load / 8.0

    @property
    def _C(self) -> float:
        nu, f, R = self.nu, self.load, self.radius
        return (3.0 * (3.0 + nu) * (1.0 - nu) * f * R**2 / 8.0 - 0.6 * nu * f) / (1.0 + nu)

    def u(self, r):
        r = self._r(r)
        R2 = self.radius**2
        return 0.3 * self.load / (1.0 + self.nu) * (R2 - r**2) + self._c * (R2 - r**2) * (self._beta * R2 - r**2)

    def psi_r(self, r):
        r = self._r(r)
        return self._C * r - self._K * r**3

    def div_psi(self, r):
        r = self._r(r)
        return 2.0 * self._C - 4.0 * self._K * r**2

    def u_kirchhoff(self, r):
        r = self._r(r)
        R2 = self.radius**2
        return self._c * (R2 - r**2) * (self._beta * R2 - r**2)

    def psi_kirchhoff(self, r):
        r = self._r(r)
        return 2.0 * self._c * r * ((self._beta + 1.0) * self.radius**2 - 2.0 * r**2)

    @property
    def center_deflection(self) -> float:
        return float(self.u(0.0))


@dataclass(frozen=True)
class _Beam:
    length: float
    nu: float = 0.3
    load: float = 1.0

    def __post_init__(self):
        _check_nu(self.nu)
        if self.length <= 0:
            raise DomainError("length must be positive")

    @property
    def sigma(self) -> float:
        return poisson_sigma(self.nu)

    @property
    def bending_stiffness(self) -> float:
        """``(sigma + 1) / 6`` per unit width."""
        return (self.sigma + 1.0) / 6.0

    shear_stiffness = 5.0 / 6.0

    def _x(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < -1e-12 * self.length) or np.any(x > self.length * (1 + 1e-12)):
            raise DomainError(f"coordinate outside [0, {self.length}]")
        return x

    def field(self, name: str, x, y=None):
        x = np.asarray(x, dtype=float)
        if name in ("psi1", "phi1", "psi_kirchhoff1"):
            name = name[:-1]
        if name in ("psi2", "phi2", "psi_kirchhoff2"):
            return np.zeros_like(x)
        return getattr(self, name)(x)


@dataclass(frozen=True)
class CantileverBeam(_Beam):
    """Strip clamped at ``x = 0`` and free at ``x = L``."""

    def psi(self, x):
        x = self._x(x)
        f, L, s, Eb = self.load, self.length, self.sigma, self.bending_stiffness
        return f / Eb * (-(x**3) / 6.0 + L * x**2 / 2.0 - (L**2 / 2.0 + s / 10.0) * x)

    def u(self, x):
        x = self._x(x)
        f, L, s, Eb, Es = self.load, self.length, self.sigma, self.bending_stiffness, self.shear_stiffness
        return f / Eb * (x**4 / 24.0 - L * x**3 / 6.0 + (L**2 / 4.0 + s / 20.0) * x**2) + f / Es * (
            -(x**2) / 2.0 + L * x
        )

    def dpsi(self, x):
        x = self._x(x)
        f, L, s, Eb = self.load, self.length, self.sigma, self.bending_stiffness
        return f / Eb * (-(x**2) / 2.0 + L * x - L**2 / 2.0 - s / 10.0)

    def u_true(self, x):
        return self.u(x) - self.sigma / 60.0 * self.dpsi(x)

    def phi(self, x):
        x = self._x(x)
        return self.load / self.shear_stiffness * (self.length - x)

    def u_kirchhoff(self, x):
        x = self._x(x)
        L = self.length
        return self.load / self.bending_stiffness * (x**4 / 24.0 - L * x**3 / 6.0 + L**2 * x**2 / 4.0)

    def psi_kirchhoff(self, x):
        x = self._x(x)
        L = self.length
        return -self.load / self.bending_stiffness * (x**3 / 6.0 - L * x**2 / 2.0 + L**2 * x / 2.0)


@dataclass(frozen=True)
class SimplySupportedBeam(_Beam):
    """Strip with ``u = 0`` at both ends and free rotations."""

    def psi(self, x):
        x = self._x(x)
        f, L, s, Eb = self.load, self.length, self.sigma, self.bending_stiffness
        return f / Eb * (-(x**3) / 6.0 + L * x**2 / 4.0 - s * x / 10.0 - L**3 / 24.0 + s * L / 20.0)

    def dpsi(self, x):
        x = self._x(x)
        f, L, s, Eb = self.load, self.length, self.sigma, self.bending_stiffness
        return f / Eb * (-(x**2) / 2.0 + L * x / 2.0 - s / 10.0)

    def u_true(self, x):
        x = self._x(x)
        f, L, s, Eb, Es = self.load, self.length, self.sigma, self.bending_stiffness, self.shear_stiffness
        bend = x**4 / 24.0 - L * x**3 / 12.0 + s * x**2 / 20.0 + (L**3 / 24.0 - s * L / 20.0) * x
        return f / Eb * bend + f / Es * (-(x**2) / 2.0 + L * x / 2.0) - s / 60.0 * self.dpsi(x)

    def u(self, x):
        return self.u_true(x) + self.sigma / 60.0 * self.dpsi(x)

    def phi(self, x):
        x = self._x(x)
        return self.load / self.shear_stiffness * (self.length / 2.0 - x)

    def u_kirchhoff(self, x):
        x = self._x(x)
        L = self.length
        return self.load / (24.0 * self.bending_stiffness) * (x**4 - 2.0 * L * x**3 + L**3 * x)

    def psi_kirchhoff(self, x):
        x = self._x(x)
        L = self.length
        return -self.load / (24.0 * self.bending_stiffness) * (4.0 * x**3 - 6.0 * L * x**2 + L**3)


def kirchhoff_gap(radius: float, load: float = 1.0) -> float:
    """Center deflection difference between the shear-deformable and the thin clamped disk."""
    return 0.3 * load * radius**2
