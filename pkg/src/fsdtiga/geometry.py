"""Rescaled multipatch plate models, boundary tags and unit conversion.

All lengths in a :class:`MultipatchModel` are measured in units of the plate
thickness (rescaled coordinates), so the thickness itself never appears.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Union

import numpy as np

from .errors import ConfigurationError, ModelError
from .splines import ControlNet, KnotVector, PatchSurface, elevate_degree, subdivide

__all__ = [
    "EDGES",
    "CLAMPED",
    "SIMPLY_SUPPORTED",
    "FREE",
    "BoundaryTag",
    "Interface",
    "MultipatchModel",
    "PhysicalCase",
    "Rescaled",
    "edge_indices",
    "detect_interfaces",
    "make_rectangle",
    "make_disk",
    "tag_edge",
    "to_rescaled",
    "poisson_sigma",
]

# left/right: xi1 = min/max; bottom/top: xi2 = min/max
EDGES = ("left", "right", "bottom", "top")

CLAMPED = "clamped"
SIMPLY_SUPPORTED = "simply_supported_soft"
FREE = "free"
_CONSTRAINED_FIELDS = {CLAMPED: ("u", "psi1", "psi2"), SIMPLY_SUPPORTED: ("u",), FREE: ()}

Load = Union[float, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def poisson_sigma(nu: float) -> float:
    """``nu / (1 - nu)``, correctly rounded from the decimal value of ``nu``."""
    fr = Fraction(repr(float(nu)))
    return float(fr / (1 - fr))


def edge_indices(shape: tuple[int, int], edge: str) -> np.ndarray:
    """Flat control point indices along ``edge``, ordered by increasing parameter."""
    n1, n2 = shape
    if edge == "left":
        return np.arange(n2)
    if edge == "right":
        return (n1 - 1) * n2 + np.arange(n2)
    if edge == "bottom":
        return np.arange(n1) * n2
    if edge == "top":
        return np.arange(n1) * n2 + n2 - 1
    raise ConfigurationError(f"unknown edge {edge!r}; expected one of {EDGES}")


@dataclass(frozen=True)
class BoundaryTag:
    patch: int
    edge: str
    kind: str

    def __post_init__(self):
        if self.edge not in EDGES:
            raise ConfigurationError(f"unknown edge {self.edge!r}")
        if self.kind not in _CONSTRAINED_FIELDS:
            raise ConfigurationError(f"unknown boundary condition {self.kind!r}")

    @property
    def constrained_fields(self) -> tuple[str, ...]:
        return _CONSTRAINED_FIELDS[self.kind]


@dataclass(frozen=True)
class Interface:
    """Two matched patch edges; ``reversed`` flips the point order of the second."""

    patch_a: int
    edge_a: str
    patch_b: int
    edge_b: str
    reversed: bool

    def pairs(self, patches: tuple[PatchSurface, ...]) -> tuple[np.ndarray, np.ndarray]:
        ia = edge_indices(patches[self.patch_a].shape, self.edge_a)
        ib = edge_indices(patches[self.patch_b].shape, self.edge_b)
        return ia, (ib[::-1] if self.reversed else ib)


def _scale(patches: Iterable[PatchSurface]) -> float:
    pts = np.concatenate([p.points.reshape(-1, 2) for p in patches])
    return max(1.0, float(np.ptp(pts, axis=0).max()))


def detect_interfaces(patches: tuple[PatchSurface, ...], tol: float = 1e-12) -> tuple[Interface, ...]:
    """Find patch edges whose control points and weights coincide."""
    tol = tol * _scale(patches)
    found = []
    for a in range(len(patches)):
        for b in range(a + 1, len(patches)):
            for ea in EDGES:
                ia = edge_indices(patches[a].shape, ea)
                Pa = patches[a].points.reshape(-1, 2)[ia]
                wa = patches[a].weights.ravel()[ia]
                for eb in EDGES:
                    ib = edge_indices(patches[b].shape, eb)
                    if ib.size != ia.size:
                        continue
                    Pb = patches[b].points.reshape(-1, 2)[ib]
                    wb = patches[b].weights.ravel()[ib]
                    for rev in (False, True):
                        Q, w = (Pb[::-1], wb[::-1]) if rev else (Pb, wb)
                        if np.abs(Pa - Q).max() <= tol and np.abs(wa - w).max() <= 1e-12 * wa.max():
                            found.append(Interface(a, ea, b, eb, rev))
    return tuple(found)


@dataclass(frozen=True, eq=False)
class MultipatchModel:
    """Matched NURBS patches with boundary tags, Poisson ratio and rescaled load."""

    patches: tuple[PatchSurface, ...]
    nu: float
    load: Load = 1.0
    interfaces: tuple[Interface, ...] = ()
    tags: tuple[BoundaryTag, ...] = ()
    name: str = "model"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.nu < 0.5:
            raise ConfigurationError(f"Poisson ratio must satisfy 0 <= nu < 0.5, got {self.nu}")
        object.__setattr__(self, "patches", tuple(self.patches))
        interior = {(i.patch_a, i.edge_a) for i in self.interfaces} | {(i.patch_b, i.edge_b) for i in self.interfaces}
        given = {(t.patch, t.edge): t for t in self.tags}
        for key in given:
            if key in interior:
                raise ConfigurationError(f"edge {key} is a patch interface and cannot carry a boundary tag")
            if not 0 <= key[0] < len(self.patches):
                raise ConfigurationError(f"unknown patch {key[0]}")
        tags = []
        for pid in range(len(self.patches)):
            for e in EDGES:
                if (pid, e) in interior:
                    continue
                tags.append(given.get((pid, e), BoundaryTag(pid, e, FREE)))
        object.__setattr__(self, "tags", tuple(tags))

    @property
    def sigma(self) -> float:
        return poisson_sigma(self.nu)

    @property
    def degrees(self) -> tuple[int, int]:
        return self.patches[0].degrees

    def exterior_edges(self) -> list[tuple[int, str]]:
        return [(t.patch, t.edge) for t in self.tags]

    def tag(self, patch: int, edge: str) -> BoundaryTag:
        for t in self.tags:
            if t.patch == patch and t.edge == edge:
                return t
        raise ConfigurationError(f"edge ({patch}, {edge!r}) is not an exterior edge")

    def with_load(self, load: Load) -> "MultipatchModel":
        return replace(self, load=load)

    def ncells(self) -> int:
        return sum(p.kv1.nspans * p.kv2.nspans for p in self.patches)

    def area(self) -> float:
        from .assembly import integrate

        return integrate(self, lambda x1, x2: np.ones_like(x1))

    def summary(self) -> str:
        """Human-readable text dump for debugging."""
        from .assembly import build_dofmap

        dm = build_dofmap(self)
        lines = [
            f"model: {self.name}",
            f"patches: {len(self.patches)}",
            f"nu: {self.nu!r}  sigma: {self.sigma!r}",
            f"load: {self.load if not callable(self.load) else 'callable'}",
            f"cells: {self.ncells()}",
            f"control points: {dm.nnodes} (pre-merge {dm.nnodes_premerge})",
            f"dofs: {dm.ndofs}  constrained: {dm.constrained.size}",
        ]
        for k, p in enumerate(self.patches):
            lines.append(
                f"  patch {k}: degrees {p.degrees}, net {p.shape}, cells {p.kv1.nspans}x{p.kv2.nspans}"
            )
        for i in self.interfaces:
            lines.append(f"  interface: {i.patch_a}.{i.edge_a} <-> {i.patch_b}.{i.edge_b}{' (reversed)' if i.reversed else ''}")
        for t in self.tags:
            lines.append(f"  boundary: {t.patch}.{t.edge} = {t.kind}")
        return "\n".join(lines)


def tag_edge(model: MultipatchModel, patch: int, edge: str, kind: str) -> MultipatchModel:
    """Return a copy of ``model`` with the exterior edge ``(patch, edge)`` tagged."""
    if edge not in EDGES:
        raise ConfigurationError(f"unknown edge {edge!r}; expected one of {EDGES}")
    model.tag(patch, edge)  # raises for interfaces / unknown patches
    tags = [t for t in model.tags if (t.patch, t.edge) != (patch, edge)]
    tags.append(BoundaryTag(patch, edge, kind))
    return replace(model, tags=tuple(tags))


def _check_degree(p: int, q: int) -> None:
    if p < 2 or q < 2:
        raise ConfigurationError(
            f"degrees ({p}, {q}) too low: p, q >= 2 are required for C1 fields inside each patch"
        )


def make_rectangle(
    length: float,
    width: float,
    p: int = 3,
    q: int | None = None,
    nel1: int = 1,
    nel2: int = 1,
    nu: float = 0.3,
    load: Load = 1.0,
) -> MultipatchModel:
    """Single patch covering ``(0, length) x (-width/2, width/2)``; all edges free."""
    q = p if q is None else q
    _check_degree(p, q)
    if length <= 0 or width <= 0:
        raise ConfigurationError("rectangle dimensions must be positive")
    if nel1 < 1 or nel2 < 1:
        raise ConfigurationError("element counts must be >= 1")
    P = np.array(
        [[[0.0, -width / 2], [0.0, width / 2]], [[length, -width / 2], [length, width / 2]]]
    )
    patch = PatchSurface(KnotVector.uniform(1), KnotVector.uniform(1), ControlNet(P, np.ones((2, 2))))
    patch = elevate_degree(patch, 0, p - 1)
    patch = elevate_degree(patch, 1, q - 1)
    patch = subdivide(patch, nel1, nel2)
    return MultipatchModel(
        (patch,), nu=nu, load=load, name="rectangle", meta={"length": length, "width": width}
    )


def _rotation(k: int) -> np.ndarray:
    c, s = np.cos(k * np.pi / 2), np.sin(k * np.pi / 2)
    return np.array([[round(c), -round(s)], [round(s), round(c)]], dtype=float)


def disk_patches(radius: float, core: float = 0.4) -> tuple[PatchSurface, ...]:
    """Coarse quadratic 5-patch disk: a central square and four ring patches.

    The square has half-side ``core * radius``.  Ring patches run radially
    in the first parameter (inner edge on the square at ``xi1 = 0``, outer
    circular arc at ``xi1 = 1``) and counter-clockwise in the second.
    """
    a = core * radius
    if not 0 < core < 1 / np.sqrt(2):
        raise ConfigurationError("core fraction must lie in (0, 1/sqrt(2))")
    g = np.array([-a, 0.0, a])
    P = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1)
    center = PatchSurface(KnotVector.uniform(2), KnotVector.uniform(2), ControlNet(P, np.ones((3, 3))))

    s = np.sqrt(0.5)
    inner = np.array([[a, -a], [a, 0.0], [a, a]])
    outer = radius * np.array([[s, -s], [np.sqrt(2.0), 0.0], [s, s]])
    w_outer = np.array([1.0, s, 1.0])
    Pr = np.stack([inner, outer])  # (2 radial, 3 angular, 2)
    wr = np.stack([np.ones(3), w_outer])
    ring = PatchSurface(KnotVector.uniform(1), KnotVector.uniform(2), ControlNet(Pr, wr))
    ring = elevate_degree(ring, 0, 1)
    return (center,) + tuple(ring.transformed(_rotation(k)) for k in range(4))


def make_disk(
    radius: float,
    p: int = 3,
    level: int = 0,
    elements: int | None = None,
    nu: float = 0.3,
    load: Load = 1.0,
    boundary: str = CLAMPED,
    core: float = 0.4,
) -> MultipatchModel:
    """Five-patch disk of rescaled radius ``radius`` with exact circular boundary.

    Each patch is refined to ``elements`` (default ``2**level``) cells per
    direction after elevating the coarse quadratic geometry to degree ``p``.
    The outer arcs are tagged ``boundary``.
    """
    _check_degree(p, p)
    if radius <= 0:
        raise ConfigurationError("radius must be positive")
    nel = 2**level if elements is None else elements
    if nel < 1:
        raise ConfigurationError("element count must be >= 1")
    patches = []
    for patch in disk_patches(radius, core):
        if p > 2:
            patch = elevate_degree(elevate_degree(patch, 0, p - 2), 1, p - 2)
        patches.append(subdivide(patch, nel, nel))
    patches = tuple(patches)
    interfaces = detect_interfaces(patches)
    if len(interfaces) != 8:
        raise ModelError(f"disk construction produced {len(interfaces)} interfaces, expected 8")
    tags = tuple(BoundaryTag(k, "right", boundary) for k in range(1, 5))
    return MultipatchModel(
        patches, nu=nu, load=load, interfaces=interfaces, tags=tags, name="disk",
        meta={"radius": radius, "elements": nel},
    )


# ---------------------------------------------------------------------------
# Physical <-> rescaled units


@dataclass(frozen=True)
class PhysicalCase:
    """Plate data in physical units (SI recommended).

    ``length`` is the radius of a disk or the span of a rectangle; ``width``
    the rectangle depth (``None`` for disks).  ``load`` is the transverse
    load per unit area.
    """

    thickness: float
    length: float
    shear_modulus: float
    nu: float
    load: float
    width: float | None = None

    @classmethod
    def from_young(cls, E: float, nu: float, **kw) -> "PhysicalCase":
        return cls(shear_modulus=E / (2.0 * (1.0 + nu)), nu=nu, **kw)

    @staticmethod
    def self_weight(density: float, thickness: float, gravity: float = 9.81) -> float:
        return density * gravity * thickness


@dataclass(frozen=True)
class Rescaled:
    """Normalized inputs plus back-conversion to physical units."""

    length: float
    width: float | None
    nu: float
    load: float  # h f / mu, a length
    thickness: float
    strain: float  # f / mu

    @property
    def deflection_factor(self) -> float:
        """Physical deflection per unit of deflection computed with unit load."""
        return self.thickness * self.strain

    @property
    def rotation_factor(self) -> float:
        """Physical rotation angle per unit of rescaled angle computed with unit load."""
        return self.strain

    def deflection_from_unit_load(self, u):
        return np.asarray(u) * self.deflection_factor

    def rotation_from_unit_load(self, psi):
        return np.asarray(psi) * self.rotation_factor

    def deflection_to_unit_load(self, u_phys):
        return np.asarray(u_phys) / self.deflection_factor

    def rotation_from_rescaled(self, psi_bar):
        """Physical angle from a rescaled angle computed with the actual load."""
        return np.asarray(psi_bar) / self.thickness

    def coordinate_to_physical(self, x_bar):
        return np.asarray(x_bar) * self.thickness


def to_rescaled(case: PhysicalCase) -> Rescaled:
    if case.thickness <= 0:
        raise ConfigurationError("thickness must be positive")
    if case.shear_modulus <= 0:
        raise ConfigurationError("shear modulus must be positive")
    if case.length <= 0 or (case.width is not None and case.width <= 0):
        raise ConfigurationError("plate dimensions must be positive")
    h = case.thickness
    strain = case.load / case.shear_modulus
    return Rescaled(
        length=case.length / h,
        width=None if case.width is None else case.width / h,
        nu=case.nu,
        load=h * strain,
        thickness=h,
        strain=strain,
    )
