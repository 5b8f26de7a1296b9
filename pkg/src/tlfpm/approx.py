"""Point-based discontinuous trial/test functions from generalized finite differences.

Inside the cell E0 of point P0 the displacement is the affine field

    u_h(x) = u0 + grad(u)|P0 (x - x0)

with the gradient taken as the weighted least-squares fit to the values at the
support points P1..Pm. The fit is linear in the stacked displacements
``u_E = [u0, u1, ..., um]`` (component-interleaved), ``a = C u_E`` with

    C = (A^T W A)^-1 A^T W [I1 I2]

and ``a`` ordered ``[dux/dx, dux/dy, duy/dx, duy/dy]`` (row-major gradient).
Since W is the same for every component, C factors into a scalar stencil
``gamma`` (dim x (m+1)) and only that is stored; C is rebuilt on demand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh.dual import DualComplex, RankDeficientSupport

WEIGHT_SCHEMES = ("uniform", "inverse_distance")


def stencil_weights(offsets, scheme="uniform"):
    if scheme == "uniform":
        return np.ones(len(offsets))
    if scheme == "inverse_distance":
        return 1.0 / np.einsum("ij,ij->i", offsets, offsets)
    raise ValueError(f"unknown weight scheme {scheme!r}; use one of {WEIGHT_SCHEMES}")


def scalar_gradient_stencil(origin, neighbour_coords, weights, point_index=None, rtol=1e-10):
    """Weights ``gamma`` (dim x (m+1)) with grad f(P0) = gamma @ [f0, f1, ..., fm]."""
    d = np.asarray(neighbour_coords, float) - np.asarray(origin, float)
    dim = d.shape[1]
    sw = np.sqrt(weights)
    s = np.linalg.svd(d * sw[:, None], compute_uv=False) if len(d) else np.zeros(1)
    if len(d) < dim or s[-1] < rtol * s[0]:
        raise RankDeficientSupport(
            f"point {point_index}: GFDM matrix is rank deficient "
            f"(singular values {s.tolist()}); neighbour offsets {d.tolist()}"
        )
    # orthogonal solve of min || W^1/2 (D g - df) ||
    g_nb = np.linalg.pinv(d * sw[:, None]) * sw[None, :]   # (dim, m)
    return np.column_stack([-g_nb.sum(axis=1), g_nb])


def expand_to_vector(gamma):
    """Component-interleaved C (dim^2 x dim(m+1)) from a scalar stencil."""
    dim, mp1 = gamma.shape
    C = np.zeros((dim * dim, dim * mp1))
    for c in range(dim):
        C[c * dim:(c + 1) * dim, c::dim] = gamma
    return C


@dataclass(frozen=True)
class GfdmStencil:
    point_index: int
    neighbour_indices: np.ndarray
    origin: np.ndarray
    gamma: np.ndarray

    @property
    def dim(self) -> int:
        return self.origin.shape[0]

    @property
    def indices(self):
        """Stencil point order [P0, P1, ..., Pm]."""
        return np.concatenate([[self.point_index], self.neighbour_indices])

    @property
    def C(self):
        return expand_to_vector(self.gamma)

    def gather(self, u):
        """Stacked u_E from a global (N, dim) displacement array."""
        return np.asarray(u)[self.indices].ravel()


def build_stencil(complex_: DualComplex, point_index, weight_scheme="uniform") -> GfdmStencil:
    nb = np.asarray(complex_.supports[point_index], dtype=np.int64)
    x0 = complex_.points[point_index]
    w = stencil_weights(complex_.points[nb] - x0, weight_scheme)
    gamma = scalar_gradient_stencil(x0, complex_.points[nb], w, point_index)
    return GfdmStencil(int(point_index), nb, x0.copy(), gamma)


def displacement_gradient(stencil: GfdmStencil, u_E):
    """Constant gradient of u_h in E0 (rows: components, cols: directions)."""
    dim = stencil.dim
    return (stencil.C @ np.asarray(u_E, float)).reshape(dim, dim)


def evaluate_shape(stencil: GfdmStencil, x):
    """Shape matrix N(x) (dim x dim(m+1)) so that u_h(x) = N(x) @ u_E."""
    dim = stencil.dim
    dx = np.asarray(x, float) - stencil.origin
    X = np.kron(np.eye(dim), dx[None, :])     # (dim, dim*dim)
    I3 = np.zeros((dim, dim * (len(stencil.neighbour_indices) + 1)))
    I3[:, :dim] = np.eye(dim)
    return X @ stencil.C + I3


class ShapeFunctionSet:
    """Stencils of every point plus global sparse gradient operators.

    ``G[j]`` is an (N, N) matrix such that ``(G[j] @ U)[i, c]`` is
    d u_c / d x_j on cell i for a global displacement array ``U`` (N, dim).
    Built once in the reference configuration and reused at every step.
    """

    def __init__(self, complex_: DualComplex, weight_scheme="uniform"):
        self.complex = complex_
        self.weight_scheme = weight_scheme
        self.stencils = [build_stencil(complex_, i, weight_scheme) for i in range(complex_.n_points)]
        N, dim = complex_.n_points, complex_.dim
        rows = np.concatenate([np.full(len(s.indices), s.point_index) for s in self.stencils])
        cols = np.concatenate([s.indices for s in self.stencils])
        self.G = [
            sp.csr_matrix(
                (np.concatenate([s.gamma[j] for s in self.stencils]), (rows, cols)), shape=(N, N)
            )
            for j in range(dim)
        ]

    @property
    def dim(self) -> int:
        return self.complex.dim

    def __len__(self):
        return len(self.stencils)

    def __getitem__(self, i) -> GfdmStencil:
        return self.stencils[i]

    def gradients(self, U):
        """Per-cell displacement gradients, shape (N, dim, dim)."""
        U = np.asarray(U, float).reshape(-1, self.dim)
        return np.stack([Gj @ U for Gj in self.G], axis=2)

    def values_at(self, cells, x, U, grads=None):
        """u_h evaluated in ``cells`` at coordinates ``x`` (one row per query)."""
        if grads is None:
            grads = self.gradients(U)
        U = np.asarray(U, float).reshape(-1, self.dim)
        dx = x - self.complex.points[cells]
        return U[cells] + np.einsum("qcj,qj->qc", grads[cells], dx)

    def evaluation_operator(self, cells, x):
        """Sparse (Q, N) scalar operator: row q evaluates u_h of cell ``cells[q]`` at ``x[q]``."""
        N = self.complex.n_points
        Q = len(cells)
        dx = x - self.complex.points[cells]
        op = sp.csr_matrix((np.ones(Q), (np.arange(Q), cells)), shape=(Q, N))
        for j, Gj in enumerate(self.G):
            op = op + sp.diags(dx[:, j]) @ Gj[cells]
        return op.tocsr()
