"""Legacy VTK (ASCII, v3.0) and CSV export of sampled two-subdomain fields."""

from __future__ import annotations

import os

import numpy as np

from .pipeline import sample_field, sample_points

PARTS = {
    "real": np.real,
    "imag": np.imag,
    "abs": np.abs,
}


def _fmt(v) -> str:
    return f"{v:.10e}"


def vtk_structured_points(values: np.ndarray, grid: int, title: str) -> str:
    """One STRUCTURED_POINTS dataset on the unit square with scalars Ex, Ey
    and a vector field (Ex, Ey, 0). ``values`` is real, shape (grid*grid, 2)
    ordered x-fastest."""
    sp = 1.0 / (grid - 1)
    out = [
        "# vtk DataFile Version 3.0",
        title[:255],
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {grid} {grid} 1",
        "ORIGIN 0 0 0",
        f"SPACING {_fmt(sp)} {_fmt(sp)} 1",
        f"POINT_DATA {grid * grid}",
    ]
    for k, name in enumerate(("Ex", "Ey")):
        out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        out += [_fmt(v) for v in values[:, k]]
    out.append("VECTORS E double")
    out += [f"{_fmt(a)} {_fmt(b)} {_fmt(0.0)}" for a, b in values]
    return "\n".join(out) + "\n"


def export_field(E0, E1, grid: int, directory, stem: str = "field") -> list[str]:
    """Write ``<stem>_{real,imag,abs}.vtk`` and ``<stem>.csv``; return paths."""
    os.makedirs(directory, exist_ok=True)
    vals = sample_field((E0, E1), grid)
    paths = []
    for part, fn in PARTS.items():
        p = os.path.join(directory, f"{stem}_{part}.vtk")
        with open(p, "w", newline="\n") as fh:
            fh.write(vtk_structured_points(fn(vals), grid, f"{stem} {part} part"))
        paths.append(p)
    pts = sample_points(grid)
    p = os.path.join(directory, f"{stem}.csv")
    with open(p, "w", newline="\n") as fh:
        fh.write("x,y,ex_re,ex_im,ey_re,ey_im\n")
        for (x, y), (ex, ey) in zip(pts, vals):
            fh.write(",".join(_fmt(v) for v in (x, y, ex.real, ex.imag, ey.real, ey.imag)) + "\n")
    paths.append(p)
    return paths
