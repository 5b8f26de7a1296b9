"""Simplicial input meshes and their ASCII file format.

File layout (0-based indices, ``#`` starts a comment line)::

    dim nnodes nelems nbsets
    x y [z]                       # nnodes lines
    i j k [l]                     # nelems lines
    set <name> <nfacets>          # nbsets blocks
    i j [k]                       # nfacets lines per block
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np


class MeshError(ValueError):
    """Invalid mesh file or mesh topology."""


class MeshParseError(MeshError):
    def __init__(self, path, lineno, msg):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {msg}")


def simplex_measures(nodes, elements):
    """Signed area (2D) or volume (3D) of every simplex."""
    x = nodes[elements]
    edges = x[:, 1:, :] - x[:, :1, :]
    return np.linalg.det(edges) / (2.0 if nodes.shape[1] == 2 else 6.0)


def _facet_key(facet):
    return tuple(sorted(int(i) for i in facet))


def boundary_facets(elements):
    """Facets (sorted node tuples) that belong to exactly one element.

    Returns a dict ``facet_key -> (element id, local vertex opposite the facet)``.
    """
    nv = elements.shape[1]
    count = {}
    owner = {}
    for eid, el in enumerate(elements):
        for opp in range(nv):
            key = _facet_key(np.delete(el, opp))
            count[key] = count.get(key, 0) + 1
            owner[key] = (eid, opp)
    return {k: owner[k] for k, c in count.items() if c == 1}


@dataclass
class SimplicialMesh:
    """Nodes and triangles (2D) or tetrahedra (3D) defining the reference domain."""

    nodes: np.ndarray
    elements: np.ndarray
    boundary_sets: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(self.nodes, dtype=float)
        self.elements = np.ascontiguousarray(self.elements, dtype=np.int64)
        self.boundary_sets = {
            name: np.asarray(f, dtype=np.int64).reshape(-1, self.dim)
            for name, f in self.boundary_sets.items()
        }

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    def element_measures(self):
        return simplex_measures(self.nodes, self.elements)

    @property
    def volume(self) -> float:
        return float(self.element_measures().sum())

    @property
    def bounding_diagonal(self) -> float:
        return float(np.linalg.norm(self.nodes.max(axis=0) - self.nodes.min(axis=0)))

    def mean_spacing(self) -> float:
        """Average edge length, used as the nodal spacing h in reports."""
        nv = self.elements.shape[1]
        pairs = np.array([(i, j) for i in range(nv) for j in range(i + 1, nv)])
        e = np.sort(self.elements[:, pairs].reshape(-1, 2), axis=1)
        e = np.unique(e, axis=0)
        return float(np.linalg.norm(self.nodes[e[:, 0]] - self.nodes[e[:, 1]], axis=1).mean())

    def boundary_nodes(self, name):
        if name not in self.boundary_sets:
            raise KeyError(f"unknown boundary set {name!r}; known: {sorted(self.boundary_sets)}")
        return np.unique(self.boundary_sets[name])

    def validate(self):
        """Raise MeshError on dangling indices, inverted/degenerate elements or bad facets."""
        dim = self.dim
        if dim not in (2, 3):
            raise MeshError(f"dim must be 2 or 3, got {dim}")
        if self.elements.shape[1] != dim + 1:
            raise MeshError(f"{dim}D elements need {dim + 1} nodes, got {self.elements.shape[1]}")
        n = self.n_nodes
        bad = np.argwhere((self.elements < 0) | (self.elements >= n))
        if bad.size:
            eid = int(bad[0, 0])
            raise MeshError(
                f"element {eid} references node {int(self.elements[tuple(bad[0])])} "
                f"but the mesh has {n} nodes"
            )
        meas = self.element_measures()
        scale = max(self.bounding_diagonal, 1e-300) ** dim
        inverted = np.flatnonzero(meas <= 1e-14 * scale)
        if inverted.size:
            eid = int(inverted[0])
            kind = "degenerate" if abs(meas[eid]) <= 1e-14 * scale else "inverted"
            raise MeshError(f"element {eid} is {kind} (signed measure {meas[eid]:.3e})")
        bfacets = None
        for name, facets in self.boundary_sets.items():
            if facets.size and ((facets < 0) | (facets >= n)).any():
                raise MeshError(f"boundary set {name!r} references a node outside 0..{n - 1}")
            if bfacets is None:
                bfacets = boundary_facets(self.elements)
            for f in facets:
                if _facet_key(f) not in bfacets:
                    raise MeshError(
                        f"boundary set {name!r}: facet {tuple(int(i) for i in f)} "
                        "is not a boundary facet of exactly one element"
                    )
        return self


def read_mesh(path) -> SimplicialMesh:
    """Read and validate a mesh in the ASCII format described in the module docstring."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"mesh file not found: {path}")
    with open(path) as fh:
        lines = [
            (i + 1, ln.split("#", 1)[0].split())
            for i, ln in enumerate(fh)
        ]
    lines = [(no, tok) for no, tok in lines if tok]
    it = iter(lines)

    def take(kind):
        try:
            return next(it)
        except StopIteration:
            last = lines[-1][0] if lines else 0
            raise MeshParseError(path, last, f"unexpected end of file while reading {kind}") from None

    def ints(no, tok, count, kind):
        if len(tok) != count:
            raise MeshParseError(path, no, f"{kind}: expected {count} integers, got {len(tok)}")
        try:
            return [int(t) for t in tok]
        except ValueError:
            raise MeshParseError(path, no, f"{kind}: non-integer entry in {tok}") from None

    no, tok = take("header")
    dim, nn, ne, nb = ints(no, tok, 4, "header")
    if dim not in (2, 3):
        raise MeshParseError(path, no, f"dim must be 2 or 3, got {dim}")
    nodes = np.empty((nn, dim))
    for i in range(nn):
        no, tok = take("nodes")
        if len(tok) != dim:
            raise MeshParseError(path, no, f"node {i}: expected {dim} coordinates, got {len(tok)}")
        try:
            nodes[i] = [float(t) for t in tok]
        except ValueError:
            raise MeshParseError(path, no, f"node {i}: bad coordinate in {tok}") from None
    elements = np.empty((ne, dim + 1), dtype=np.int64)
    for e in range(ne):
        no, tok = take("elements")
        idx = ints(no, tok, dim + 1, f"element {e}")
        bad = [j for j in idx if not 0 <= j < nn]
        if bad:
            raise MeshParseError(path, no, f"element {e}: dangling node index {bad[0]} (mesh has {nn} nodes)")
        elements[e] = idx
    sets = {}
    for _ in range(nb):
        no, tok = take("boundary set header")
        if len(tok) != 3 or tok[0] != "set":
            raise MeshParseError(path, no, "expected 'set <name> <nfacets>'")
        name = tok[1]
        try:
            nf = int(tok[2])
        except ValueError:
            raise MeshParseError(path, no, f"bad facet count {tok[2]!r}") from None
        facets = np.empty((nf, dim), dtype=np.int64)
        for k in range(nf):
            fno, ftok = take(f"set {name}")
            idx = ints(fno, ftok, dim, f"set {name} facet {k}")
            bad = [j for j in idx if not 0 <= j < nn]
            if bad:
                raise MeshParseError(path, fno, f"set {name}: dangling node index {bad[0]} (mesh has {nn} nodes)")
            facets[k] = idx
        sets[name] = facets
    extra = next(it, None)
    if extra is not None:
        raise MeshParseError(path, extra[0], "trailing content after last boundary set")
    mesh = SimplicialMesh(nodes, elements, sets)
    try:
        mesh.validate()
    except MeshError as exc:
        raise MeshError(f"{path}: {exc}") from None
    return mesh


def write_mesh(mesh: SimplicialMesh, path):
    with open(path, "w") as fh:
        fh.write(f"{mesh.dim} {mesh.n_nodes} {mesh.n_elements} {len(mesh.boundary_sets)}\n")
        for x in mesh.nodes:
            fh.write(" ".join(repr(float(v)) for v in x) + "\n")
        for el in mesh.elements:
            fh.write(" ".join(str(int(i)) for i in el) + "\n")
        for name, facets in mesh.boundary_sets.items():
            fh.write(f"set {name} {len(facets)}\n")
            for f in facets:
                fh.write(" ".join(str(int(i)) for i in f) + "\n")
