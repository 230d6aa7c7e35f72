"""CSV and legacy VTK emitters, and minimal readers for round trips."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Column",
    "FieldSnapshot",
    "TABLE_COLUMNS",
    "CONVERGENCE_COLUMNS",
    "write_csv",
    "read_csv",
    "write_vtk",
    "read_vtk",
    "format_float",
]


def format_float(v: float) -> str:
    return f"{float(v):.17g}"


@dataclass(frozen=True)
class Column:
    """CSV column: key into the row, header name and a unit/description."""

    key: str
    name: str | None = None
    unit: str = "-"

    @property
    def header(self) -> str:
        return self.name or self.key


TABLE_COLUMNS = (
    Column("ndofs", unit="count"),
    Column("deflection", unit="rescaled u at probe"),
    Column("deflection_error", unit="relative"),
    Column("l2_error", unit="int (u_h - u)^2 / int u^2"),
)

CONVERGENCE_COLUMNS = TABLE_COLUMNS + (
    Column("l2_error_rooted", unit="sqrt of l2_error"),
    Column("l2_error_true", unit="rooted, corrected deflection"),
    Column("element_size", unit="sqrt(area / cells)"),
    Column("level", unit="elements per patch side"),
)


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def _as_mapping(row) -> Mapping:
    if dataclasses.is_dataclass(row):
        return dataclasses.asdict(row)
    return row


def write_csv(rows: Iterable, schema: Sequence[Column], path, comment: str | None = None) -> None:
    """Write rows (mappings or dataclasses) as CSV.

    The first line is a ``#`` comment listing every column with its unit,
    preceded by ``comment`` if given; the second line holds the column
    names.  Floats carry 17 significant digits.
    """
    lines = []
    doc = "; ".join(f"{c.header} [{c.unit}]" for c in schema)
    lines.append("# " + (comment + " | " if comment else "") + "columns: " + doc)
    lines.append(",".join(c.header for c in schema))
    for row in rows:
        m = _as_mapping(row)
        lines.append(",".join(_cell(m[c.key]) for c in schema))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a file written by :func:`write_csv`; returns names and a float array."""
    text = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    names = text[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in text[1:]]).reshape(-1, len(names))
    return names, data


@dataclass
class FieldSnapshot:
    """Visualization points, quadrilateral cells and named point data."""

    points: np.ndarray
    cells: np.ndarray
    point_data: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.cells = np.asarray(self.cells, dtype=np.int64).reshape(-1, 4)
        n = self.points.shape[0]
        if self.cells.size and (self.cells.min() < 0 or self.cells.max() >= n):
            raise ValueError("cell connectivity index out of range")
        for k, v in self.point_data.items():
            v = np.asarray(v, dtype=float)
            if v.shape != (n,):
                raise ValueError(f"point data {k!r} has shape {v.shape}, expected ({n},)")
            self.point_data[k] = v

    @property
    def npoints(self) -> int:
        return self.points.shape[0]

    @classmethod
    def empty(cls) -> "FieldSnapshot":
        return cls(np.zeros((0, 2)), np.zeros((0, 4), dtype=np.int64))


def write_vtk(snap: FieldSnapshot, path, title: str = "plate solution") -> None:
    """Write a legacy ASCII VTK unstructured grid of quads (cell type 9)."""
    n, m = snap.npoints, snap.cells.shape[0]
    out = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII", "DATASET UNSTRUCTURED_GRID"]
    out.append(f"POINTS {n} double")
    out.extend(f"{format_float(x)} {format_float(y)} 0" for x, y in snap.points)
    out.append(f"CELLS {m} {5 * m}")
    out.extend("4 " + " ".join(str(int(i)) for i in c) for c in snap.cells)
    out.append(f"CELL_TYPES {m}")
    out.extend("9" for _ in range(m))
    out.append(f"POINT_DATA {n}")
    for name, v in snap.point_data.items():
        out.append(f"SCALARS {name} double 1")
        out.append("LOOKUP_TABLE default")
        out.extend(format_float(x) for x in v)
    Path(path).write_text("\n".join(out) + "\n")


def read_vtk(path) -> FieldSnapshot:
    """Parse files produced by :func:`write_vtk` (not a general VTK reader)."""
    tok = Path(path).read_text().split("\n")
    i = 4
    n = int(tok[i].split()[1])
    pts = np.array([[float(a) for a in tok[i + 1 + k].split()[:2]] for k in range(n)]).reshape(-1, 2)
    i += 1 + n
    m = int(tok[i].split()[1])
    cells = np.array([[int(a) for a in tok[i + 1 + k].split()[1:]] for k in range(m)], dtype=np.int64).reshape(-1, 4)
    i += 1 + m
    i += 1 + int(tok[i].split()[1])  # CELL_TYPES
    data = {}
    i += 1  # POINT_DATA
    while i < len(tok) and tok[i].startswith("SCALARS"):
        name = tok[i].split()[1]
        data[name] = np.array([float(a) for a in tok[i + 2 : i + 2 + n]])
        i += 2 + n
    return FieldSnapshot(pts, cells, data)
