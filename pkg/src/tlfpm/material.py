"""Near-incompressible neo-Hookean solid in reduced invariants.

    W(J1, J3) = mu/2 (J1 - 3) + K/2 (J3 - 1)^2
    J1 = I1 I3^(-1/3),  J2 = I2 I3^(-2/3),  J3 = det F

All functions accept a single tensor (dim, dim) or a batch (n, dim, dim).
Two-dimensional input is treated as plane strain (F33 = 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ElementInversion(ArithmeticError):
    """det F <= 0 in one or more cells."""

    def __init__(self, cells, detF):
        self.cells = np.atleast_1d(cells)
        self.detF = np.atleast_1d(detF)
        head = ", ".join(f"{int(c)} (det F = {d:.3e})" for c, d in zip(self.cells[:5], self.detF[:5]))
        more = "" if len(self.cells) <= 5 else f" and {len(self.cells) - 5} more"
        super().__init__(f"element inversion in cell {head}{more}")


@dataclass(frozen=True)
class MaterialParams:
    rho0: float
    young: float
    nu: float

    def __post_init__(self):
        if not self.rho0 > 0:
            raise ValueError(f"rho0 must be positive, got {self.rho0}")
        if not self.young > 0:
            raise ValueError(f"young must be positive, got {self.young}")
        if not 0.0 <= self.nu < 0.5:
            raise ValueError(f"nu must lie in [0, 0.5), got {self.nu}")

    @classmethod
    def from_moduli(cls, mu, bulk, rho0=1.0):
        """Parameters with the given shear and bulk moduli."""
        young = 9.0 * bulk * mu / (3.0 * bulk + mu)
        nu = (3.0 * bulk - 2.0 * mu) / (2.0 * (3.0 * bulk + mu))
        return cls(rho0, young, nu)

    @property
    def mu(self):
        return self.young / (2.0 * (1.0 + self.nu))

    @property
    def bulk(self):
        return self.young / (3.0 * (1.0 - 2.0 * self.nu))

    @property
    def lame(self):
        return 3.0 * self.bulk * self.nu / (1.0 + self.nu)

    @property
    def wave_speed(self):
        """Dilatational wave speed sqrt((lambda + 2 mu) / rho0)."""
        return np.sqrt((self.lame + 2.0 * self.mu) / self.rho0)


@dataclass(frozen=True)
class KinematicState:
    F: np.ndarray    # (..., 3, 3), plane-strain embedded for 2D input
    C: np.ndarray
    E: np.ndarray
    I1: np.ndarray
    I2: np.ndarray
    I3: np.ndarray
    J1: np.ndarray
    J2: np.ndarray
    J3: np.ndarray
    dim: int

    @property
    def detF(self):
        return self.J3


def _embed(grad_u):
    g = np.asarray(grad_u, float)
    dim = g.shape[-1]
    if dim == 3:
        return g, 3
    if dim != 2:
        raise ValueError(f"gradient must be 2x2 or 3x3, got {g.shape}")
    g3 = np.zeros(g.shape[:-2] + (3, 3))
    g3[..., :2, :2] = g
    return g3, 2


def kinematics(grad_u, check=True, cell_ids=None) -> KinematicState:
    """Deformation measures of F = I + grad u.

    With ``check`` an ElementInversion carrying the offending cell ids is
    raised when det F <= 0 (ids default to batch positions).
    """
    g3, dim = _embed(grad_u)
    F = np.eye(3) + g3
    J = np.linalg.det(F)
    if check and np.any(J <= 0):
        bad = np.flatnonzero(np.atleast_1d(J) <= 0)
        ids = bad if cell_ids is None else np.asarray(cell_ids)[bad]
        raise ElementInversion(ids, np.atleast_1d(J)[bad])
    Ft = np.swapaxes(F, -1, -2)
    C = Ft @ F
    E = 0.5 * (C - np.eye(3))
    I1 = np.trace(C, axis1=-2, axis2=-1)
    I2 = 0.5 * (I1**2 - np.einsum("...ij,...ji->...", C, C))
    I3 = J**2
    return KinematicState(
        F=F, C=C, E=E, I1=I1, I2=I2, I3=I3,
        J1=I1 * I3 ** (-1.0 / 3.0),
        J2=I2 * I3 ** (-2.0 / 3.0),
        J3=J,
        dim=dim,
    )


def strain_energy(state: KinematicState, mat: MaterialParams):
    return 0.5 * mat.mu * (state.J1 - 3.0) + 0.5 * mat.bulk * (state.J3 - 1.0) ** 2


def second_pk_stress(state: KinematicState, mat: MaterialParams):
    """S = mu I3^(-1/3) (I - I1/3 C^-1) + K (J3 - 1) J3 C^-1, cut back to the input dim."""
    Cinv = np.linalg.inv(state.C)
    I = np.eye(3)
    a = (mat.mu * state.I3 ** (-1.0 / 3.0))[..., None, None]
    b = (state.I1 / 3.0)[..., None, None]
    vol = (mat.bulk * (state.J3 - 1.0) * state.J3)[..., None, None]
    S = a * (I - b * Cinv) + vol * Cinv
    d = state.dim
    return S[..., :d, :d]


def first_pk_stress(state: KinematicState, mat: MaterialParams):
    """P = F S, rows indexed by the current-configuration component."""
    d = state.dim
    return state.F[..., :d, :d] @ second_pk_stress(state, mat)
