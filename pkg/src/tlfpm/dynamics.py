"""Force assembly for the explicit total-Lagrangian FPM.

Internal force per displacement component::

    f_int = sum_E  vol(E) B^T S          (one-point, exact: grad u is constant in E)
          - sum_e  int_e [[N]]^T t* dA    (interior penalty flux, IIPG)
          - sum_f  int_f  N^T (P n)  dA   (consistency flux on essential boundary facets)

with ``t* = {P} n0 - beta [[u]]``, ``P = F S`` and ``n0`` the normal of the
interface piece pointing from the ``+`` (lower index) cell to the ``-`` cell.
``vol(E) B^T S`` is evaluated as ``vol(E) P : d(grad u)/d u_E``.

A zero penalty coefficient switches the interior flux correction off
altogether (plain broken Galerkin form); the consistency term alone is not
stable without a penalty. The essential-boundary consistency flux is optional
(``boundary_flux``): without it affine fields are not reproduced next to
essential boundaries, with it the patch test holds exactly.

Because the trial functions are affine per cell and the stress is constant per
cell, the consistency terms reduce to per-interface moments of the normal,
and the penalty term is a constant sparse matrix assembled once with a
degree-2 rule on every facet piece.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .approx import ShapeFunctionSet
from .material import MaterialParams, first_pk_stress, kinematics
from .mesh.dual import DualComplex, FacetPieces


def jump(w_plus, w_minus):
    return np.asarray(w_plus) - np.asarray(w_minus)


def avg(w_plus, w_minus):
    return 0.5 * (np.asarray(w_plus) + np.asarray(w_minus))


@dataclass(frozen=True)
class PenaltyConfig:
    p: float = 20.0

    def __post_init__(self):
        if not self.p >= 0:
            raise ValueError(f"penalty coefficient must be >= 0, got {self.p}")

    def beta(self, complex_: DualComplex, mat: MaterialParams):
        """Interface stiffness p E / h_s with h_s the harmonic mean of both cells."""
        h = complex_.char_length
        a, b = complex_.pairs.T
        hs = 2.0 * h[a] * h[b] / (h[a] + h[b])
        return self.p * mat.young / hs


def facet_quadrature(pieces: FacetPieces):
    """Degree-2 points and weights on every piece: (piece index, x, w)."""
    v = pieces.vertices
    n, dim = len(pieces), v.shape[2] if len(pieces) else 0
    if len(pieces) == 0:
        return np.zeros(0, np.int64), np.zeros((0, v.shape[-1])), np.zeros(0)
    if v.shape[1] == 2:   # segment: 2-point Gauss
        g = 0.5 / np.sqrt(3.0)
        bary = np.array([[0.5 + g, 0.5 - g], [0.5 - g, 0.5 + g]])
        wts = np.array([0.5, 0.5])
    else:                 # triangle: 3-point interior rule
        bary = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])
        wts = np.full(3, 1 / 3)
    x = np.einsum("qk,nkd->nqd", bary, v).reshape(-1, dim)
    w = (pieces.area[:, None] * wts[None, :]).ravel()
    idx = np.repeat(np.arange(n), len(wts))
    return idx, x, w


def _normal_moments(area, normal, centroid, origin):
    """(sum a n, sum a n (x) (c - x_origin)) for pieces grouped by the caller."""
    an = area[:, None] * normal
    return an, np.einsum("pi,pj->pij", an, centroid - origin)


def _incidence(rows, n_rows, n_cols):
    return sp.csr_matrix((np.ones(len(rows)), (rows, np.arange(len(rows)))), shape=(n_rows, n_cols))


def lumped_mass(complex_: DualComplex, mat: MaterialParams):
    """m_j = rho0 vol(E_j), one entry per point (shared by all components)."""
    return mat.rho0 * complex_.volumes


def _thread_count():
    try:
        return max(0, int(os.environ.get("FPM_THREADS", "0")))
    except ValueError:
        return 0


class ForceAssembler:
    """Precomputed operators for repeated internal/external force evaluation.

    ``essential`` maps boundary-set names to boolean component masks; the
    consistency flux is applied on those facets for the masked components
    when ``boundary_flux`` is true.
    """

    def __init__(self, shapes: ShapeFunctionSet, mat: MaterialParams, penalty: PenaltyConfig,
                 essential=None, boundary_flux=False):
        cx = shapes.complex
        self.shapes = shapes
        self.complex = cx
        self.mat = mat
        self.penalty = penalty
        N, dim = cx.n_points, cx.dim
        self.dim = dim
        self.mass = lumped_mass(cx, mat)
        a, b = cx.pairs.T
        self._a, self._b = a, b
        n_if = cx.n_interfaces
        self.S_plus = _incidence(a, N, n_if)
        self.S_minus = _incidence(b, N, n_if)

        pc = cx.pieces
        cent = pc.centroid
        an_p, Mp = _normal_moments(pc.area, pc.normal, cent, cx.points[a[pc.owner]])
        _, Mm = _normal_moments(pc.area, pc.normal, cent, cx.points[b[pc.owner]])
        agg = _incidence(pc.owner, n_if, len(pc))
        self.A_e = agg @ an_p
        self.M_plus = (agg @ Mp.reshape(len(pc), -1)).reshape(n_if, dim, dim)
        self.M_minus = (agg @ Mm.reshape(len(pc), -1)).reshape(n_if, dim, dim)

        self.interior_flux = penalty.p > 0
        self.beta = penalty.beta(cx, mat)
        qp, xq, wq = facet_quadrature(pc)
        iface = pc.owner[qp]
        self.jump_op = (shapes.evaluation_operator(a[iface], xq)
                        - shapes.evaluation_operator(b[iface], xq)).tocsr()
        self.jump_iface = iface
        self.jump_weights = wq
        self.K_pen = (self.jump_op.T @ sp.diags(wq * self.beta[iface]) @ self.jump_op).tocsr()

        self.essential = dict(essential or {})
        self.boundary_flux = boundary_flux
        self._bnd = None
        if boundary_flux and self.essential:
            cells, masks, an_l, M_l = [], [], [], []
            for name, mask in self.essential.items():
                mask = np.asarray(mask, bool)
                if not mask.any():
                    continue
                bp = cx.boundary[name]
                an, M = _normal_moments(bp.area, bp.normal, bp.centroid, cx.points[bp.owner])
                cells.append(bp.owner)
                masks.append(np.broadcast_to(mask, (len(bp), dim)))
                an_l.append(an)
                M_l.append(M)
            if cells:
                cells = np.concatenate(cells)
                self._bnd = (
                    cells,
                    np.concatenate(masks).astype(float),
                    np.concatenate(an_l),
                    np.concatenate(M_l),
                    _incidence(cells, N, len(cells)),
                )

    # -- per-cell kinematics ------------------------------------------------
    def stresses(self, U):
        """(grad u, P, det F) for every cell; P = F S."""
        grads = self.shapes.gradients(U)
        nthreads = _thread_count()
        if nthreads > 1 and len(grads) > 4 * nthreads:
            chunks = np.array_split(np.arange(len(grads)), nthreads)
            with ThreadPoolExecutor(nthreads) as ex:
                parts = list(ex.map(lambda c: self._stress_chunk(grads[c]), chunks))
            P = np.concatenate([p for p, _ in parts])
            J = np.concatenate([j for _, j in parts])
        else:
            P, J = self._stress_chunk(grads)
        return grads, P, J

    def _stress_chunk(self, grads):
        st = kinematics(grads, check=False)
        return first_pk_stress(st, self.mat), st.J3

    def _scatter_tensor(self, T):
        """sum_j G_j^T T[:, :, j] -> nodal forces."""
        return sum(Gj.T @ T[:, :, j] for j, Gj in enumerate(self.shapes.G))

    # -- force pieces -------------------------------------------------------
    def bulk_force(self, U, P=None):
        if P is None:
            _, P, _ = self.stresses(U)
        return self._scatter_tensor(self.complex.volumes[:, None, None] * P)

    def flux_force(self, U, P=None):
        """-sum_e int [[N]]^T t* (plus the essential-boundary consistency flux)."""
        if P is None:
            _, P, _ = self.stresses(U)
        U = np.asarray(U, float).reshape(-1, self.dim)
        N, dim = U.shape
        f = np.zeros((N, dim))
        T = np.zeros((N, dim, dim))
        if self.interior_flux:
            Pbar = avg(P[self._a], P[self._b])
            t = np.einsum("eij,ej->ei", Pbar, self.A_e)
            f += self.S_minus @ t - self.S_plus @ t
            T += (self.S_minus @ (Pbar @ self.M_minus).reshape(-1, dim * dim)
                  - self.S_plus @ (Pbar @ self.M_plus).reshape(-1, dim * dim)).reshape(N, dim, dim)
        if self._bnd is not None:
            cells, mask, an, M, inc = self._bnd
            Pc = P[cells]
            f -= inc @ (mask * np.einsum("pij,pj->pi", Pc, an))
            T -= (inc @ (mask[:, :, None] * (Pc @ M)).reshape(-1, dim * dim)).reshape(N, dim, dim)
        f += self._scatter_tensor(T)
        if self.interior_flux:
            f += self.K_pen @ U
        return f

    def internal_force(self, U):
        """Total internal force and per-cell det F."""
        _, P, J = self.stresses(U)
        return self.bulk_force(U, P) + self.flux_force(U, P), J

    def interface_jumps(self, U):
        """|[[u]]| at every penalty quadrature point, and the interface it lies on."""
        U = np.asarray(U, float).reshape(-1, self.dim)
        return np.linalg.norm(self.jump_op @ U, axis=1), self.jump_iface

    def external_force(self, tractions=None, body=None):
        return external_force(self.complex, self.shapes, self.mat, tractions, body)


def external_force(complex_: DualComplex, shapes: ShapeFunctionSet, mat: MaterialParams,
                   tractions=None, body=None):
    """Consistent nodal loads for dead tractions (Pa, per boundary set) and body force (N/m^3).

    ``tractions`` maps set name -> nominal traction vector; ``body`` is the
    body force per reference volume rho0*b.
    """
    N, dim = complex_.n_points, complex_.dim
    f = np.zeros((N, dim))
    T = np.zeros((N, dim, dim))
    for name, tbar in (tractions or {}).items():
        if name not in complex_.boundary:
            raise KeyError(f"unknown boundary set {name!r}; known: {sorted(complex_.boundary)}")
        bp = complex_.boundary[name]
        tbar = np.broadcast_to(np.asarray(tbar, float), (dim,))
        np.add.at(f, bp.owner, bp.area[:, None] * tbar)
        mom = bp.area[:, None] * (bp.centroid - complex_.points[bp.owner])
        np.add.at(T, bp.owner, np.einsum("i,pj->pij", tbar, mom))
    if body is not None:
        rb = np.broadcast_to(np.asarray(body, float), (dim,))
        vol = complex_.volumes
        f += vol[:, None] * rb
        T += np.einsum("i,pj->pij", rb, vol[:, None] * (complex_.centroids - complex_.points))
    return f + sum(Gj.T @ T[:, :, j] for j, Gj in enumerate(shapes.G))


def critical_time_step(shapes: ShapeFunctionSet, mat: MaterialParams, penalty: PenaltyConfig):
    """min_j 2 / sqrt(m_j c^2 ||C_j C_j^T||_2), divided by sqrt(p) for p > 0."""
    c2 = mat.wave_speed ** 2
    lam = np.array([
        len(s.neighbour_indices) * c2 * np.linalg.norm(s.gamma, 2) ** 2 for s in shapes.stencils
    ])
    dt = float(np.min(2.0 / np.sqrt(lam)))
    return dt / np.sqrt(penalty.p) if penalty.p > 0 else dt
