"""Legacy ASCII VTK output of point displacements on the simplicial mesh."""

from __future__ import annotations

import numpy as np

_CELL_TYPE = {2: 5, 3: 10}   # VTK_TRIANGLE, VTK_TETRA


def _fmt(x):
    return "%.17g" % x


def vtk_text(nodes, elements, u, title="tlfpm displacement"):
    nodes = np.asarray(nodes, float)
    elements = np.asarray(elements, np.int64)
    u = np.asarray(u, float)
    n, dim = nodes.shape
    if u.shape != (n, dim):
        raise ValueError(f"displacement shape {u.shape} does not match {n} points in {dim}D")
    pad = np.zeros((n, 3))
    pad[:, :dim] = nodes
    upad = np.zeros((n, 3))
    upad[:, :dim] = u
    nv = elements.shape[1]
    out = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
           f"POINTS {n} double"]
    out += [" ".join(map(_fmt, p)) for p in pad]
    out.append(f"CELLS {len(elements)} {len(elements) * (nv + 1)}")
    out += [f"{nv} " + " ".join(map(str, e)) for e in elements]
    out.append(f"CELL_TYPES {len(elements)}")
    out += [str(_CELL_TYPE[dim])] * len(elements)
    out += [f"POINT_DATA {n}", "VECTORS displacement double"]
    out += [" ".join(map(_fmt, v)) for v in upad]
    return "\n".join(out) + "\n"


def write_vtk(complex_, u, path):
    """Write points, simplicial cells and the ``displacement`` vectors of a dual complex."""
    mesh = complex_.mesh
    text = vtk_text(complex_.points, mesh.elements, u)
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write VTK file {path}: {exc.strerror}") from exc
    return path


def read_vtk_points(path):
    """(points, displacement) arrays of a file written by :func:`write_vtk`."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    i = next(k for k, l in enumerate(lines) if l.startswith("POINTS"))
    n = int(lines[i].split()[1])
    pts = np.array([[float(t) for t in l.split()] for l in lines[i + 1:i + 1 + n]])
    j = next(k for k, l in enumerate(lines) if l.startswith("VECTORS"))
    disp = np.array([[float(t) for t in l.split()] for l in lines[j + 1:j + 1 + n]])
    return pts, disp
