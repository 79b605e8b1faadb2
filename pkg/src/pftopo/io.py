"""History CSV, legacy VTK and PGM writers."""
from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np


@dataclass
class HistoryRecord:
    iter: int
    J: float
    J_compliance: float
    J_regularization: float
    volume: float
    phi_min: float
    phi_max: float
    # volume multiplier
    lam: float = 0.0
    eta_max: float = 0.0
    sigma: float = 0.0
    secant_iters: int = 0
    cg_iters: int = 0
    wall_ms: float = 0.0


HISTORY_COLUMNS = ("iter", "J", "J_compliance", "J_regularization", "volume", "phi_min",
                   "phi_max", "lambda", "eta_max", "sigma", "secant_iters", "cg_iters", "wall_ms")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_history(path, records):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTORY_COLUMNS)
        for r in records:
            w.writerow([_fmt(v) for v in astuple(r)])


def read_history(path):
    """Rows as ``HistoryRecord`` objects."""
    kinds = [f.type for f in fields(HistoryRecord)]
    out = []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != HISTORY_COLUMNS:
            raise ValueError(f"{path}: unexpected history header {header}")
        for row in reader:
            out.append(HistoryRecord(*[int(v) if k == "int" else float(v)
                                       for v, k in zip(row, kinds)]))
    return out


def write_vtk(path, grid, point_data, title="pftopo"):
    """Legacy ASCII STRUCTURED_POINTS file with one scalar array per entry."""
    dims = list(grid.node_shape) + [1] * (3 - grid.dim)
    spacing = list(grid.spacing) + [1.0] * (3 - grid.dim)
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET STRUCTURED_POINTS",
             "DIMENSIONS " + " ".join(str(d) for d in dims),
             "ORIGIN 0 0 0",
             "SPACING " + " ".join(repr(float(s)) for s in spacing),
             f"POINT_DATA {grid.node_count}"]
    for name, values in point_data.items():
        values = np.asarray(values, float).ravel()
        if values.size != grid.node_count:
            raise ValueError(f"field {name!r} has {values.size} values, expected {grid.node_count}")
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [repr(float(v)) for v in values]
    Path(path).write_text("\n".join(lines) + "\n")


def pgm_levels(phi):
    return np.clip(np.floor(np.asarray(phi, float) * 255.0), 0, 255).astype(np.uint8)


def write_pgm(path, grid, phi):
    """8-bit binary PGM of a 2D nodal field; 0 is void, 255 solid, top row is y max."""
    if grid.dim != 2:
        raise ValueError("PGM output is only defined for 2D grids")
    nx, ny = grid.node_shape
    img = pgm_levels(phi).reshape(ny, nx)[::-1]
    with Path(path).open("wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path):
    """Pixels of a binary PGM written by :func:`write_pgm`, shape ``(rows, cols)``."""
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos].decode("ascii"))
    if tokens[0] != "P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h = int(tokens[1]), int(tokens[2])
    return np.frombuffer(data[pos + 1:pos + 1 + w * h], dtype=np.uint8).reshape(h, w)
