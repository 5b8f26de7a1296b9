"""Median-dual partition of a simplicial mesh into node-centred subdomains.

Every node owns one cell assembled from the fragments of its incident
elements, cut by edge midpoints, face centroids (3D) and element barycentres.
The interface between the cells of nodes ``a < b`` is the union of the
median pieces attached to edge ``ab``; in 3D each piece is a planar triangle
``(m_ab, f, g)`` so every interface is a triangle fan around the edge
midpoint. In 2D the pieces are straight segments ``(m_ab, g)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .simplicial import MeshError, SimplicialMesh, boundary_facets


class RankDeficientSupport(MeshError):
    """A point's support cannot determine a full gradient, even after repair."""


@dataclass(frozen=True)
class FacetPieces:
    """Flat facet pieces (segments in 2D, triangles in 3D) with owner data.

    ``normal`` is unit length. For interior interfaces it points from the
    lower-index cell (``+``) into the higher-index cell (``-``); for boundary
    pieces it is the outward normal of the domain.
    """

    owner: np.ndarray      # interface index, or cell index for boundary pieces
    vertices: np.ndarray   # (n, dim, dim): dim vertices of each piece
    area: np.ndarray
    normal: np.ndarray

    @property
    def centroid(self):
        return self.vertices.mean(axis=1)

    def __len__(self):
        return len(self.area)


@dataclass(frozen=True)
class DualComplex:
    mesh: SimplicialMesh
    points: np.ndarray          # (N, dim) point P_j of every cell (= mesh nodes)
    volumes: np.ndarray         # (N,)
    centroids: np.ndarray       # (N, dim)
    pairs: np.ndarray           # (n_if, 2) cell+ < cell-
    iface_area: np.ndarray      # (n_if,)
    iface_normal: np.ndarray    # (n_if, dim) unit, area-averaged, + -> -
    pieces: FacetPieces         # interior pieces, owner = interface index
    boundary: dict[str, FacetPieces]   # per named set, owner = cell index
    boundary_all: FacetPieces          # every boundary piece, owner = cell index
    supports: tuple                    # per point, ascending neighbour indices
    repaired: frozenset = field(default_factory=frozenset)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def n_interfaces(self) -> int:
        return self.pairs.shape[0]

    @property
    def char_length(self):
        """Per-cell characteristic length h_s = vol ** (1/dim)."""
        return self.volumes ** (1.0 / self.dim)

    @property
    def total_volume(self) -> float:
        return float(self.volumes.sum())


def support_of(complex_: DualComplex, point_index) -> np.ndarray:
    """Neighbours P_1..P_m of ``point_index`` in ascending order."""
    return complex_.supports[point_index]


def _seg_normal(p, q):
    t = q - p
    n = np.column_stack([t[:, 1], -t[:, 0]])
    length = np.linalg.norm(n, axis=1)
    return n / length[:, None], length


def _tri_normal(p, q, r):
    cr = np.cross(q - p, r - p)
    a2 = np.linalg.norm(cr, axis=1)
    return cr / a2[:, None], 0.5 * a2


def _orient_towards(normal, direction):
    s = np.sign(np.einsum("ij,ij->i", normal, direction))
    s[s == 0] = 1.0
    return normal * s[:, None]


def _interior_pieces(mesh):
    """All median pieces keyed by (lo, hi) node pair, vectorised over elements."""
    x = mesh.nodes[mesh.elements]
    g = x.mean(axis=1)
    el = mesh.elements
    lo_l, hi_l, verts = [], [], []
    if mesh.dim == 2:
        for i, j in ((0, 1), (1, 2), (2, 0)):
            m = 0.5 * (x[:, i] + x[:, j])
            lo_l.append(el[:, i]); hi_l.append(el[:, j])
            verts.append(np.stack([m, g], axis=1))
    else:
        for i, j in ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)):
            k, l = [t for t in range(4) if t not in (i, j)]
            m = 0.5 * (x[:, i] + x[:, j])
            for o in (k, l):
                f = (x[:, i] + x[:, j] + x[:, o]) / 3.0
                lo_l.append(el[:, i]); hi_l.append(el[:, j])
                verts.append(np.stack([m, f, g], axis=1))
    a = np.concatenate(lo_l)
    b = np.concatenate(hi_l)
    v = np.concatenate(verts)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    if mesh.dim == 2:
        n, area = _seg_normal(v[:, 0], v[:, 1])
    else:
        n, area = _tri_normal(v[:, 0], v[:, 1], v[:, 2])
    n = _orient_towards(n, mesh.nodes[hi] - mesh.nodes[lo])
    return lo, hi, v, area, n


def _cell_geometry(mesh):
    """Cell volumes and centroids from the star of each node in every element."""
    N, dim = mesh.n_nodes, mesh.dim
    x = mesh.nodes[mesh.elements]
    g = x.mean(axis=1)
    el = mesh.elements
    vol = np.zeros(N)
    mom = np.zeros((N, dim))
    if dim == 2:
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            mij = 0.5 * (x[:, i] + x[:, j])
            mik = 0.5 * (x[:, i] + x[:, k])
            for p, q in ((mij, g), (g, mik)):
                d1, d2 = p - x[:, i], q - x[:, i]
                a = 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
                c = (x[:, i] + p + q) / 3.0
                np.add.at(vol, el[:, i], a)
                np.add.at(mom, el[:, i], a[:, None] * c)
    else:
        for i in range(4):
            others = [t for t in range(4) if t != i]
            for j in others:
                mij = 0.5 * (x[:, i] + x[:, j])
                for k in others:
                    if k == j:
                        continue
                    f = (x[:, i] + x[:, j] + x[:, k]) / 3.0
                    d1, d2, d3 = mij - x[:, i], f - x[:, i], g - x[:, i]
                    v = np.abs(np.einsum("ij,ij->i", np.cross(d1, d2), d3)) / 6.0
                    c = (x[:, i] + mij + f + g) / 4.0
                    np.add.at(vol, el[:, i], v)
                    np.add.at(mom, el[:, i], v[:, None] * c)
    return vol, mom / vol[:, None]


def _boundary_pieces(mesh, facets):
    """Per-node pieces of the given boundary facets with outward normals."""
    if len(facets) == 0:
        dim = mesh.dim
        return FacetPieces(np.zeros(0, np.int64), np.zeros((0, dim, dim)), np.zeros(0), np.zeros((0, dim)))
    facets = np.asarray(facets, dtype=np.int64)
    xf = mesh.nodes[facets]
    bmap = boundary_facets(mesh.elements)
    opp_node = np.array([
        mesh.elements[bmap[tuple(sorted(int(i) for i in f))][0],
                      bmap[tuple(sorted(int(i) for i in f))][1]]
        for f in facets
    ])
    inward = mesh.nodes[opp_node] - xf.mean(axis=1)
    owners, verts = [], []
    if mesh.dim == 2:
        m = 0.5 * (xf[:, 0] + xf[:, 1])
        owners += [facets[:, 0], facets[:, 1]]
        verts += [np.stack([xf[:, 0], m], axis=1), np.stack([m, xf[:, 1]], axis=1)]
        n, area = _seg_normal(np.concatenate([v[:, 0] for v in verts]), np.concatenate([v[:, 1] for v in verts]))
        inward = np.concatenate([inward, inward])
    else:
        fc = xf.mean(axis=1)
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            mij = 0.5 * (xf[:, i] + xf[:, j])
            mik = 0.5 * (xf[:, i] + xf[:, k])
            owners += [facets[:, i], facets[:, i]]
            verts += [np.stack([xf[:, i], mij, fc], axis=1), np.stack([xf[:, i], fc, mik], axis=1)]
        v = np.concatenate(verts)
        n, area = _tri_normal(v[:, 0], v[:, 1], v[:, 2])
        inward = np.tile(inward, (6, 1))
    v = np.concatenate(verts)
    n = _orient_towards(n, -inward)
    return FacetPieces(np.concatenate(owners), v, area, n)


def gradient_rank_ok(points, center, neighbours, rtol=1e-10):
    """True when the neighbour offsets span the space (full-rank GFDM matrix)."""
    d = points[neighbours] - points[center]
    if len(neighbours) < points.shape[1]:
        return False
    s = np.linalg.svd(d, compute_uv=False)
    return s[-1] >= rtol * s[0]


def repair_supports(points, supports, rtol=1e-10):
    """Extend rank-deficient supports once with their second ring.

    Returns ``(supports, repaired_indices)``. Raises RankDeficientSupport if a
    support is still deficient after extension.
    """
    supports = [np.asarray(s, dtype=np.int64) for s in supports]
    first = list(supports)
    repaired = []
    for i, s in enumerate(first):
        if gradient_rank_ok(points, i, s, rtol):
            continue
        ring2 = set(s.tolist())
        for j in s:
            ring2.update(first[j].tolist())
        ring2.discard(i)
        ext = np.array(sorted(ring2), dtype=np.int64)
        if not gradient_rank_ok(points, i, ext, rtol):
            raise RankDeficientSupport(
                f"point {i} at {points[i].tolist()}: support {ext.tolist()} is rank deficient "
                f"even with second-ring neighbours; offsets {(points[ext] - points[i]).tolist()}"
            )
        supports[i] = ext
        repaired.append(i)
    return tuple(supports), frozenset(repaired)


def build_dual_complex(mesh: SimplicialMesh) -> DualComplex:
    """Median-dual cells, interfaces and first-ring supports of ``mesh``."""
    meas = mesh.element_measures()
    scale = mesh.bounding_diagonal ** mesh.dim
    bad = np.flatnonzero(meas <= 1e-14 * scale)
    if bad.size:
        raise MeshError(f"element {int(bad[0])} has non-positive measure {meas[bad[0]]:.3e}")

    lo, hi, verts, area, normal = _interior_pieces(mesh)
    keys, inv = np.unique(np.column_stack([lo, hi]), axis=0, return_inverse=True)
    inv = inv.ravel()

    n_if = keys.shape[0]
    iface_area = np.bincount(inv, weights=area, minlength=n_if)
    an = np.zeros((n_if, mesh.dim))
    np.add.at(an, inv, area[:, None] * normal)
    iface_normal = an / np.linalg.norm(an, axis=1)[:, None]
    pieces = FacetPieces(inv.astype(np.int64), verts, area, normal)

    vol, cent = _cell_geometry(mesh)

    nbrs = [[] for _ in range(mesh.n_nodes)]
    for a, b in keys:
        nbrs[a].append(b)
        nbrs[b].append(a)
    supports = [np.array(sorted(s), dtype=np.int64) for s in nbrs]
    empty = [i for i, s in enumerate(supports) if len(s) == 0]
    if empty:
        raise MeshError(f"node {empty[0]} is not attached to any element")
    supports, repaired = repair_supports(mesh.nodes, supports)

    all_facets = np.array(sorted(boundary_facets(mesh.elements)), dtype=np.int64)
    boundary = {name: _boundary_pieces(mesh, f) for name, f in mesh.boundary_sets.items()}
    return DualComplex(
        mesh=mesh,
        points=mesh.nodes.copy(),
        volumes=vol,
        centroids=cent,
        pairs=keys.astype(np.int64),
        iface_area=iface_area,
        iface_normal=iface_normal,
        pieces=pieces,
        boundary=boundary,
        boundary_all=_boundary_pieces(mesh, all_facets),
        supports=supports,
        repaired=repaired,
    )
