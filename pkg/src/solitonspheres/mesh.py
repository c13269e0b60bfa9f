"""Wavefront OBJ export of cylinder-grid surfaces."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import StructuralError


def _diameter(ring: np.ndarray) -> float:
    d = ring[:, None, :] - ring[None, :, :]
    return float(np.sqrt(np.max(np.sum(d * d, axis=-1))))


def obj_text(points: np.ndarray, weld_tol: float | None = None, fmt: str = "%.10g") -> str:
    """OBJ text for a (nx, ny, 3) grid periodic in the second index.

    Vertices are written row-major (vertex ``i*ny + j + 1`` is node (i, j)),
    faces are quads over the grid cells with the y-seam closed.  With
    ``weld_tol`` each end circle whose diameter is below it is capped by a fan
    of triangles around an extra vertex at the circle's centroid.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 3 or P.shape[2] != 3 or P.shape[0] < 2 or P.shape[1] < 3:
        raise StructuralError("points must have shape (nx >= 2, ny >= 3, 3)")
    nx, ny, _ = P.shape
    out = [f"# {nx} x {ny} cylinder grid"]
    out.extend("v " + " ".join(fmt % c for c in p) for p in P.reshape(-1, 3))
    idx = np.arange(nx * ny).reshape(nx, ny) + 1
    for i in range(nx - 1):
        for j in range(ny):
            jn = (j + 1) % ny
            out.append(f"f {idx[i, j]} {idx[i + 1, j]} {idx[i + 1, jn]} {idx[i, jn]}")
    if weld_tol is not None:
        nv = nx * ny
        for row, flip in ((0, False), (nx - 1, True)):
            ring = P[row]
            if _diameter(ring) >= weld_tol:
                continue
            c = ring.mean(axis=0)
            out.append("v " + " ".join(fmt % v for v in c))
            nv += 1
            for j in range(ny):
                a, b = idx[row, j], idx[row, (j + 1) % ny]
                out.append(f"f {nv} {b} {a}" if flip else f"f {nv} {a} {b}")
    return "\n".join(out) + "\n"


def write_obj(points: np.ndarray, path, weld_tol: float | None = None) -> None:
    Path(path).write_text(obj_text(points, weld_tol))


def read_obj_vertices(path) -> np.ndarray:
    """Vertex coordinates of an OBJ file, in file order."""
    rows = [line.split()[1:4] for line in Path(path).read_text().splitlines() if line.startswith("v ")]
    return np.array(rows, dtype=float)
