"""Case configurations and drivers behind the command line interface."""
from __future__ import annotations

import configparser
import dataclasses
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analytic import CantileverBeam, ClampedDisk, SimplySupportedBeam, SimplySupportedDisk
from .assembly import assemble, build_dofmap
from .errors import ConfigurationError
from .geometry import (
    CLAMPED,
    SIMPLY_SUPPORTED,
    MultipatchModel,
    PhysicalCase,
    Rescaled,
    make_disk,
    make_rectangle,
    tag_edge,
    to_rescaled,
)
from .io import CONVERGENCE_COLUMNS, Column, FieldSnapshot, write_csv, write_vtk
from .postprocess import (
    ConvergenceStudy,
    SolutionField,
    convergence_row,
    fit_slope,
    sample_line,
)
from .solver import SolveInfo, solve_system

__all__ = [
    "CASES",
    "CaseConfig",
    "load_config",
    "build_model",
    "oracle_for",
    "solve_case",
    "snapshot",
    "run",
    "convergence",
    "compare",
]

log = logging.getLogger(__name__)

CASES = ("disk_clamped", "disk_ss", "rect_cantilever", "rect_ss", "rect_clamped_all", "custom")
_DISKS = ("disk_clamped", "disk_ss")
_PHYSICAL_KEYS = ("E", "mu", "thickness", "density", "pressure")
_EDGE_ALIASES = {"simply_supported": SIMPLY_SUPPORTED, "ss": SIMPLY_SUPPORTED}


@dataclass
class CaseConfig:
    """Flat, typed case description.

    Geometry is rescaled (lengths in units of the thickness) unless a
    physical block is given: ``thickness`` with ``E`` or ``mu`` and either
    ``pressure`` or ``density``, plus dimensions in physical units.
    """

    case: str
    radius: float = 10.0
    length: float = 10.0
    width: float = 10.0
    nu: float = 0.3
    load: float | None = None
    E: float | None = None
    mu: float | None = None
    thickness: float | None = None
    density: float | None = None
    gravity: float = 9.81
    pressure: float | None = None
    degree: tuple[int, int] = (3, 3)
    refine: int = 3
    elements: tuple[int, int] | None = None
    core_fraction: float = 0.4
    out: str = "out"
    probe: tuple[float, float] | None = None
    solver: str = "direct"
    name: str | None = None
    line_points: int = 101
    vis_subdiv: int = 4
    boundary: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigurationError(f"unknown case {self.case!r}; choose from {', '.join(CASES)}")
        p, q = self.degree
        if p < 2 or q < 2:
            raise ConfigurationError(f"degrees must be >= 2, got {self.degree}")
        if not 0.0 <= self.nu < 0.5:
            raise ConfigurationError(f"Poisson ratio {self.nu} outside [0, 0.5)")
        physical = [k for k in _PHYSICAL_KEYS if getattr(self, k) is not None]
        if self.load is not None and physical:
            raise ConfigurationError(f"give either 'load' or a physical block, not both (found {physical})")
        if physical:
            if self.thickness is None or (self.E is None) == (self.mu is None):
                raise ConfigurationError("physical block needs 'thickness' and exactly one of 'E', 'mu'")
            if (self.pressure is None) == (self.density is None):
                raise ConfigurationError("physical block needs exactly one of 'pressure', 'density'")
        if self.refine < 0:
            raise ConfigurationError("refine must be >= 0")
        if self.line_points < 2 or self.vis_subdiv < 1:
            raise ConfigurationError("line_points must be >= 2 and vis_subdiv >= 1")
        if self.solver not in ("direct", "cg"):
            raise ConfigurationError(f"unknown solver {self.solver!r}")
        if self.case == "custom" and not self.boundary:
            raise ConfigurationError("custom case needs boundary entries (e.g. 'left = clamped')")

    @property
    def label(self) -> str:
        return self.name or self.case

    @property
    def is_physical(self) -> bool:
        return self.thickness is not None

    def rescaled(self) -> Rescaled | None:
        """Rescaled data of a physical block, ``None`` for rescaled input."""
        if not self.is_physical:
            return None
        nu = self.nu
        load = self.pressure if self.pressure is not None else PhysicalCase.self_weight(
            self.density, self.thickness, self.gravity
        )
        mu = self.mu if self.mu is not None else self.E / (2.0 * (1.0 + nu))
        disk = self.case in _DISKS
        case = PhysicalCase(
            thickness=self.thickness,
            length=self.radius if disk else self.length,
            shear_modulus=mu,
            nu=nu,
            load=load,
            width=None if disk else self.width,
        )
        return to_rescaled(case)

    @property
    def dims(self) -> tuple[float, float]:
        """Rescaled (radius, radius) for disks or (length, width) for rectangles."""
        r = self.rescaled()
        if self.case in _DISKS:
            R = r.length if r else self.radius
            return R, R
        return (r.length, r.width) if r else (self.length, self.width)

    @property
    def rescaled_load(self) -> float:
        r = self.rescaled()
        if r is not None:
            return r.load
        return 1.0 if self.load is None else self.load

    def replace(self, **kw) -> "CaseConfig":
        return dataclasses.replace(self, **kw)


def _floats(text: str, n: int | None = None) -> tuple[float, ...]:
    vals = tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    if n is not None and len(vals) != n:
        raise ConfigurationError(f"expected {n} comma separated numbers, got {text!r}")
    return vals


def parse_degree(text: str) -> tuple[int, int]:
    vals = [int(v) for v in str(text).split(",") if v.strip()]
    if len(vals) == 1:
        vals *= 2
    if len(vals) != 2:
        raise ConfigurationError(f"degree must be 'p' or 'p,q', got {text!r}")
    return vals[0], vals[1]


def load_config(path) -> CaseConfig:
    """Read a flat ``key = value`` file (``#`` comments) into a :class:`CaseConfig`.

    Keys ``left``, ``right``, ``bottom``, ``top`` set edge conditions of the
    ``custom`` rectangle.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file {path} not found")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[case]\n" + path.read_text())
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    return config_from_mapping(dict(parser["case"]))


def config_from_mapping(raw: dict[str, str]) -> CaseConfig:
    raw = {k.strip(): v.strip() for k, v in raw.items()}
    if "case" not in raw:
        raise ConfigurationError("config needs a 'case' entry")
    kw: dict = {"case": raw.pop("case")}
    boundary = {e: _EDGE_ALIASES.get(raw[e], raw.pop(e)) for e in ("left", "right", "bottom", "top") if e in raw}
    if boundary:
        kw["boundary"] = boundary
    known = {f.name: f for f in dataclasses.fields(CaseConfig)}
    for key, text in raw.items():
        if key not in known:
            raise ConfigurationError(f"unknown config key {key!r}")
        try:
            if key == "degree":
                kw[key] = parse_degree(text)
            elif key == "elements":
                v = [int(a) for a in text.split(",")]
                kw[key] = (v[0], v[-1])
            elif key == "probe":
                kw[key] = _floats(text, 2)
            elif key in ("refine", "line_points", "vis_subdiv"):
                kw[key] = int(text)
            elif key in ("case", "out", "solver", "name"):
                kw[key] = text
            else:
                kw[key] = float(text)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key!r}: {text!r}") from exc
    return CaseConfig(**kw)


# ---------------------------------------------------------------------------
# Models and oracles


def _rect_elements(cfg: CaseConfig) -> tuple[int, int]:
    if cfg.elements is not None:
        return cfg.elements
    L, D = cfg.dims
    n1 = 2**cfg.refine
    n2 = max(1, int(round(n1 * D / L))) if D < L else max(n1, min(4 * n1, int(round(n1 * D / L))))
    return n1, n2


def build_model(cfg: CaseConfig) -> MultipatchModel:
    """Rescaled multipatch model of a configured case."""
    p, q = cfg.degree
    load = cfg.rescaled_load
    if cfg.case in _DISKS:
        if p != q:
            raise ConfigurationError("disk cases use equal degrees in both directions")
        bc = CLAMPED if cfg.case == "disk_clamped" else SIMPLY_SUPPORTED
        nel = cfg.elements[0] if cfg.elements else None
        return make_disk(
            cfg.dims[0], p, level=cfg.refine, elements=nel, nu=cfg.nu, load=load,
            boundary=bc, core=cfg.core_fraction,
        )
    L, D = cfg.dims
    n1, n2 = _rect_elements(cfg)
    m = make_rectangle(L, D, p, q, n1, n2, nu=cfg.nu, load=load)
    edges = {
        "rect_cantilever": {"left": CLAMPED},
        "rect_ss": {"left": SIMPLY_SUPPORTED, "right": SIMPLY_SUPPORTED},
        "rect_clamped_all": dict.fromkeys(("left", "right", "bottom", "top"), CLAMPED),
        "custom": cfg.boundary,
    }[cfg.case]
    for edge, kind in edges.items():
        m = tag_edge(m, 0, edge, kind)
    return dataclasses.replace(m, name=cfg.case)


def oracle_for(cfg: CaseConfig):
    """Analytic solution for the case, or ``None``."""
    load = cfg.rescaled_load
    if cfg.case == "disk_clamped":
        return ClampedDisk(cfg.dims[0], cfg.nu, load)
    if cfg.case == "disk_ss":
        return SimplySupportedDisk(cfg.dims[0], cfg.nu, load)
    if cfg.case == "rect_cantilever":
        return CantileverBeam(cfg.dims[0], cfg.nu, load)
    if cfg.case == "rect_ss":
        return SimplySupportedBeam(cfg.dims[0], cfg.nu, load)
    return None


def default_probe(cfg: CaseConfig) -> tuple[float, float]:
    if cfg.probe is not None:
        return cfg.probe
    if cfg.case in _DISKS:
        return (0.0, 0.0)
    L, _ = cfg.dims
    return (L, 0.0) if cfg.case == "rect_cantilever" else (L / 2.0, 0.0)


def default_line(cfg: CaseConfig) -> tuple[tuple[float, float], tuple[float, float]]:
    L, _ = cfg.dims
    return (0.0, 0.0), (L, 0.0)


def solve_case(cfg: CaseConfig) -> tuple[SolutionField, SolveInfo]:
    model = build_model(cfg)
    dofmap = build_dofmap(model)
    system = assemble(model, dofmap)
    x, info = solve_system(system, cfg.solver)
    return SolutionField.from_vector(model, dofmap, x), info


# ---------------------------------------------------------------------------
# Output


def snapshot(sol: SolutionField, subdiv: int = 4) -> FieldSnapshot:
    """Sample every cell on a ``(subdiv + 1)^2`` grid of visualization points."""
    pts, cells, data = [], [], {k: [] for k in ("u", "psi1", "psi2", "phi1", "phi2", "u_true")}
    offset = 0
    t = np.linspace(0.0, 1.0, subdiv + 1)
    for pid, patch in enumerate(sol.model.patches):
        b1, b2 = patch.kv1.breaks, patch.kv2.breaks
        g1 = np.unique(np.concatenate([a + (b - a) * t for a, b in zip(b1[:-1], b1[1:])]))
        g2 = np.unique(np.concatenate([a + (b - a) * t for a, b in zip(b2[:-1], b2[1:])]))
        T1, T2 = np.meshgrid(g1, g2, indexing="ij")
        q = sol.evaluate(pid, T1.ravel(), T2.ravel())
        pts.append(q["x"])
        for k in data:
            data[k].append(q[k])
        n1, n2 = g1.size, g2.size
        i, j = np.meshgrid(np.arange(n1 - 1), np.arange(n2 - 1), indexing="ij")
        a = (i * n2 + j).ravel()
        cells.append(offset + np.column_stack([a, a + n2, a + n2 + 1, a + 1]))
        offset += n1 * n2
    return FieldSnapshot(
        np.concatenate(pts), np.concatenate(cells), {k: np.concatenate(v) for k, v in data.items()}
    )


_LINE_COLUMNS = (
    Column("s", unit="rescaled arc length from line start"),
    Column("x", unit="rescaled"),
    Column("y", unit="rescaled"),
    Column("u", unit="rescaled deflection"),
    Column("u_true", unit="corrected deflection"),
    Column("psi_t", unit="rescaled rotation along line"),
    Column("phi_t", unit="shear angle along line"),
    Column("psi1", unit="rescaled"),
    Column("psi2", unit="rescaled"),
    Column("phi1", unit="-"),
    Column("phi2", unit="-"),
)


def _write_summary(path: Path, lines: list[str]) -> None:
    path.write_text("\n".join(lines) + "\n")


def run(cfg: CaseConfig) -> dict:
    """Solve one case and write ``<name>.vtk``, ``<name>_line.csv``, ``<name>_summary.txt``."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    sol, info = solve_case(cfg)
    elapsed = time.perf_counter() - t0
    probe = default_probe(cfg)
    q = sol.at_points([probe[0]], [probe[1]])
    u, ut = float(q["u"][0]), float(q["u_true"][0])
    start, end = default_line(cfg)
    line = sample_line(sol, start, end, cfg.line_points)
    write_csv(
        [dict(zip(line, vals)) for vals in zip(*line.values())],
        _LINE_COLUMNS,
        out / f"{cfg.label}_line.csv",
        comment=f"{cfg.label}: samples from {start} to {end}",
    )
    write_vtk(snapshot(sol, cfg.vis_subdiv), out / f"{cfg.label}.vtk", title=f"{cfg.label} rescaled solution")
    result = {
        "case": cfg.case,
        "ndofs": sol.dofmap.ndofs,
        "free_dofs": int(sol.dofmap.free.size),
        "probe": probe,
        "u": u,
        "u_true": ut,
        "residual": info.residual,
        "seconds": elapsed,
    }
    lines = [
        f"case: {cfg.label} ({cfg.case})",
        f"degrees: {sol.model.degrees}  cells: {sol.model.ncells()}  dofs: {sol.dofmap.ndofs}",
        f"solver: {info.method}  relative residual: {info.residual:.3e}  time: {elapsed:.2f} s",
        *[f"note: {n}" for n in info.notes],
        f"probe ({probe[0]:.6g}, {probe[1]:.6g}): u = {u:.12g}  u_true = {ut:.12g}",
    ]
    oracle = oracle_for(cfg)
    if oracle is not None:
        ua = float(oracle.field("u", np.array([probe[0]]), np.array([probe[1]]))[0])
        result["u_exact"] = ua
        lines.append(f"oracle u = {ua:.12g}  relative error = {abs(u - ua) / abs(ua) if ua else abs(u):.3e}")
    r = cfg.rescaled()
    if r is not None:
        # deflection is not rescaled: with the actual load it carries the
        # length unit of the input (metres give millimetres below)
        up, utp = u * 1e3, ut * 1e3
        result["u_mm"] = up
        result["u_true_mm"] = utp
        ref = kirchhoff_square_clamped(cfg) if cfg.case == "rect_clamped_all" else None
        lines.append(f"physical deflection at probe: u = {up:.6g} mm  u_true = {utp:.6g} mm")
        if ref is not None:
            result["kirchhoff_mm"] = ref * 1e3
            lines.append(f"thin plate estimate (0.00126 q L^4 / D): {ref * 1e3:.6g} mm")
    _write_summary(out / f"{cfg.label}_summary.txt", lines)
    result["summary"] = lines
    return result


def kirchhoff_square_clamped(cfg: CaseConfig) -> float:
    """Center deflection of a clamped square thin plate, ``0.00126 q L^4 / D`` (physical units)."""
    E = cfg.E if cfg.E is not None else 2.0 * cfg.mu * (1.0 + cfg.nu)
    D = E * cfg.thickness**3 / (12.0 * (1.0 - cfg.nu**2))
    q = cfg.pressure if cfg.pressure is not None else cfg.density * cfg.gravity * cfg.thickness
    return 0.00126 * q * cfg.length**4 / D


def convergence(cfg: CaseConfig, levels: int) -> tuple[ConvergenceStudy, float]:
    """Solve ``levels`` successive uniform refinements starting at ``cfg.refine``.

    Writes ``<name>_convergence.csv`` and returns the study and the fitted
    slope of the rooted L2 error against element size.
    """
    if levels < 3:
        raise ConfigurationError("a convergence study needs at least 3 levels")
    oracle = oracle_for(cfg)
    if oracle is None:
        raise ConfigurationError(f"case {cfg.case!r} has no analytic solution")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    study = ConvergenceStudy()
    base = cfg.elements
    for k in range(levels):
        if base is not None:
            c = cfg.replace(elements=(base[0] * 2**k, base[1] * 2**k))
        else:
            c = cfg.replace(refine=cfg.refine + k)
        sol, _ = solve_case(c)
        study.rows.append(convergence_row(sol, oracle, default_probe(c), level=_level(c, sol)))
        log.info("level %d: %d dofs", k, sol.dofmap.ndofs)
    try:
        slope = fit_slope([r.element_size for r in study.rows], [r.l2_error_rooted for r in study.rows])
    except ValueError:
        slope = float("nan")
    write_csv(
        study.rows,
        CONVERGENCE_COLUMNS,
        out / f"{cfg.label}_convergence.csv",
        comment=f"{cfg.label}: degree {cfg.degree}; slope of rooted L2 error vs element size (last 3) = {slope:.4f}",
    )
    return study, slope


def _level(cfg: CaseConfig, sol: SolutionField) -> int:
    patch = sol.model.patches[0]
    return int(patch.kv1.nspans)


_COMPARE_COLUMNS = (
    Column("s", unit="rescaled arc length"),
    Column("x", unit="rescaled"),
    Column("y", unit="rescaled"),
    Column("u", unit="numeric"),
    Column("u_true", unit="numeric corrected"),
    Column("psi", unit="numeric, along line"),
    Column("phi", unit="numeric, along line"),
    Column("u_exact", unit="closed form"),
    Column("u_true_exact", unit="closed form"),
    Column("psi_exact", unit="closed form"),
    Column("phi_exact", unit="closed form"),
    Column("u_kirchhoff", unit="thin plate"),
    Column("psi_kirchhoff", unit="thin plate"),
    Column("u_normalized", unit="u / R^4 (disks) or u / L^4"),
    Column("psi_normalized", unit="psi / R^3 or psi / L^3"),
    Column("phi_normalized", unit="phi / R or phi / L"),
)


def compare(cfg: CaseConfig) -> dict:
    """Numeric and closed-form profiles along the case line; writes ``<name>_compare.csv``."""
    oracle = oracle_for(cfg)
    if oracle is None:
        raise ConfigurationError(f"case {cfg.case!r} has no analytic solution to compare with")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    sol, _ = solve_case(cfg)
    start, end = default_line(cfg)
    line = sample_line(sol, start, end, cfg.line_points)
    s = line["s"]
    L = cfg.dims[0]
    scale = cfg.rescaled_load
    if cfg.case in _DISKS:
        ex = {
            "u_exact": oracle.u(s),
            "u_true_exact": oracle.u_true(s),
            "psi_exact": oracle.psi_r(s),
            "phi_exact": oracle.phi_r(s),
            "u_kirchhoff": oracle.u_kirchhoff(s),
            "psi_kirchhoff": oracle.psi_kirchhoff(s),
        }
    else:
        ex = {
            "u_exact": oracle.u(s),
            "u_true_exact": oracle.u_true(s),
            "psi_exact": oracle.psi(s),
            "phi_exact": oracle.phi(s),
            "u_kirchhoff": oracle.u_kirchhoff(s),
            "psi_kirchhoff": oracle.psi_kirchhoff(s),
        }
    table = {
        "s": s, "x": line["x"], "y": line["y"], "u": line["u"], "u_true": line["u_true"],
        "psi": line["psi_t"], "phi": line["phi_t"], **ex,
        "u_normalized": line["u"] / (scale * L**4),
        "psi_normalized": line["psi_t"] / (scale * L**3),
        "phi_normalized": line["phi_t"] / (scale * L),
    }
    rows = [dict(zip(table, vals)) for vals in zip(*table.values())]
    write_csv(rows, _COMPARE_COLUMNS, out / f"{cfg.label}_compare.csv",
              comment=f"{cfg.label}: numeric vs closed form along {start} -> {end}")
    return table
