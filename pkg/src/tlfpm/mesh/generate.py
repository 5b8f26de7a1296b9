"""Structured simplicial grids for the benchmark geometries."""

from __future__ import annotations

import itertools

import numpy as np

from .simplicial import SimplicialMesh, boundary_facets, simplex_measures


def _orient(nodes, elements):
    meas = simplex_measures(nodes, elements)
    flip = meas < 0
    elements[flip, 0], elements[flip, 1] = elements[flip, 1].copy(), elements[flip, 0].copy()
    return elements


def _tag_faces(nodes, elements, lo, hi, names):
    """Group boundary facets by the bounding-box face they lie on."""
    facets = np.array(sorted(boundary_facets(elements)), dtype=np.int64)
    sets = {}
    span = hi - lo
    for axis, (nmin, nmax) in enumerate(names):
        for name, val in ((nmin, lo[axis]), (nmax, hi[axis])):
            on = np.all(np.abs(nodes[facets][..., axis] - val) <= 1e-9 * span[axis], axis=1)
            sets[name] = facets[on]
    return sets


def _jitter(nodes, lo, hi, spacing, amount, seed):
    if amount <= 0:
        return nodes
    rng = np.random.default_rng(seed)
    tol = 1e-9 * (hi - lo)
    interior = np.all((nodes > lo + tol) & (nodes < hi - tol), axis=1)
    nodes = nodes.copy()
    nodes[interior] += amount * spacing * rng.uniform(-1, 1, size=(interior.sum(), nodes.shape[1]))
    return nodes


def rectangle(lx, ly, nx, ny, origin=(0.0, 0.0), jitter=0.0, seed=0) -> SimplicialMesh:
    """Triangulated ``lx`` x ``ly`` rectangle with ``nx`` x ``ny`` nodes.

    Squares are split along alternating diagonals. Boundary sets are named
    ``xmin``, ``xmax``, ``ymin``, ``ymax``. ``jitter`` moves interior nodes by
    up to that fraction of the local spacing.
    """
    xs = origin[0] + np.linspace(0.0, lx, nx)
    ys = origin[1] + np.linspace(0.0, ly, ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange(nx * ny).reshape(nx, ny)
    tris = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            a, b, c, d = idx[i, j], idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1]
            if (i + j) % 2 == 0:
                tris += [(a, b, c), (a, c, d)]
            else:
                tris += [(a, b, d), (b, c, d)]
    elements = _orient(nodes, np.array(tris, dtype=np.int64))
    lo, hi = np.array([xs[0], ys[0]]), np.array([xs[-1], ys[-1]])
    nodes = _jitter(nodes, lo, hi, np.array([lx / (nx - 1), ly / (ny - 1)]), jitter, seed)
    sets = _tag_faces(nodes, elements, lo, hi, [("xmin", "xmax"), ("ymin", "ymax")])
    return SimplicialMesh(nodes, elements, sets).validate()


def box(lx, ly, lz, nx, ny, nz, origin=(0.0, 0.0, 0.0), jitter=0.0, seed=0) -> SimplicialMesh:
    """Tetrahedralised box, six Kuhn tetrahedra per hexahedral cell.

    Boundary sets: ``xmin``, ``xmax``, ``ymin``, ``ymax``, ``zmin``, ``zmax``.
    """
    xs = origin[0] + np.linspace(0.0, lx, nx)
    ys = origin[1] + np.linspace(0.0, ly, ny)
    zs = origin[2] + np.linspace(0.0, lz, nz)
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    idx = np.arange(nx * ny * nz).reshape(nx, ny, nz)

    # Kuhn paths from corner 000 to 111, one per axis permutation
    paths = []
    for perm in itertools.permutations(range(3)):
        corner = np.zeros(3, dtype=int)
        path = [corner.copy()]
        for ax in perm:
            corner[ax] = 1
            path.append(corner.copy())
        paths.append(np.array(path))
    paths = np.array(paths)  # (6, 4, 3)

    I, J, K = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), np.arange(nz - 1), indexing="ij")
    base = np.column_stack([I.ravel(), J.ravel(), K.ravel()])  # (ncubes, 3)
    ijk = base[:, None, None, :] + paths[None]  # (ncubes, 6, 4, 3)
    elements = idx[ijk[..., 0], ijk[..., 1], ijk[..., 2]].reshape(-1, 4)
    elements = _orient(nodes, elements)
    lo = np.array([xs[0], ys[0], zs[0]])
    hi = np.array([xs[-1], ys[-1], zs[-1]])
    spacing = np.array([lx / (nx - 1), ly / (ny - 1), lz / (nz - 1)])
    nodes = _jitter(nodes, lo, hi, spacing, jitter, seed)
    sets = _tag_faces(nodes, elements, lo, hi, [("xmin", "xmax"), ("ymin", "ymax"), ("zmin", "zmax")])
    return SimplicialMesh(nodes, elements, sets).validate()


def unit_cube_five_tets() -> SimplicialMesh:
    """The classic five-tetrahedron split of the unit cube (no boundary sets)."""
    nodes = np.array(list(itertools.product([0.0, 1.0], repeat=3)))
    # corners indexed by bits (x, y, z) -> 4x + 2y + z
    tets = np.array([
        [0, 4, 2, 1],
        [6, 2, 4, 7],
        [5, 4, 1, 7],
        [3, 1, 2, 7],
        [4, 2, 1, 7],
    ])
    return SimplicialMesh(nodes, _orient(nodes, tets)).validate()
