"""Explicit central-difference integration and dynamic relaxation to quasi-static states."""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass, field

import numpy as np

from .approx import ShapeFunctionSet
from .dynamics import ForceAssembler, PenaltyConfig, critical_time_step
from .material import ElementInversion, MaterialParams
from .mesh import DualComplex, SimplicialMesh, build_dual_complex

log = logging.getLogger(__name__)


class DivergenceError(FloatingPointError):
    def __init__(self, step, point, value):
        self.step, self.point = step, point
        super().__init__(f"solution diverged at step {step}: point {point} has displacement {value}")


@dataclass(frozen=True)
class BoundaryCondition:
    """Essential displacement or dead traction on a named boundary set.

    ``value`` is the final (load factor 1) displacement in m or traction in
    Pa per component; ``components`` masks the components it acts on.
    """

    kind: str
    boundary_set: str
    value: tuple
    components: tuple = None

    def __post_init__(self):
        if self.kind not in ("essential", "traction"):
            raise ValueError(f"boundary condition kind must be 'essential' or 'traction', got {self.kind!r}")
        value = tuple(float(v) for v in self.value)
        object.__setattr__(self, "value", value)
        comps = self.components if self.components is not None else (True,) * len(value)
        object.__setattr__(self, "components", tuple(bool(c) for c in comps))
        if len(self.components) != len(value):
            raise ValueError("components mask and value must have the same length")

    @classmethod
    def fix(cls, boundary_set, dim, **comps):
        """Essential BC from keyword components, e.g. ``fix('top', 3, z=-0.04)``."""
        names = "xyz"[:dim]
        unknown = set(comps) - set(names)
        if unknown:
            raise ValueError(f"unknown components {sorted(unknown)} for dim {dim}")
        return cls("essential", boundary_set,
                   tuple(comps.get(n, 0.0) for n in names),
                   tuple(n in comps for n in names))

    def at(self, load_factor):
        return load_factor * np.asarray(self.value)


@dataclass
class Problem:
    mesh: SimplicialMesh
    material: MaterialParams
    bcs: list = field(default_factory=list)
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    body: tuple = None
    weight_scheme: str = "uniform"
    boundary_flux: bool = False

    def validate(self):
        """List every problem with the definition (empty when valid)."""
        errors = []
        dim = self.mesh.dim
        seen = {}
        for i, bc in enumerate(self.bcs):
            if bc.boundary_set not in self.mesh.boundary_sets:
                errors.append(f"bc {i}: unknown boundary set {bc.boundary_set!r}")
            if len(bc.value) != dim:
                errors.append(f"bc {i}: expected {dim} components, got {len(bc.value)}")
                continue
            for c in np.flatnonzero(bc.components):
                prev = seen.setdefault((bc.boundary_set, int(c)), bc.kind)
                if prev != bc.kind:
                    errors.append(
                        f"bc {i}: component {'xyz'[c]} of set {bc.boundary_set!r} is both essential and traction"
                    )
        if self.penalty.p < 0:
            errors.append("penalty must be >= 0")
        return errors


@dataclass
class Controls:
    dt_safety: float = 0.8
    ramp_steps: int = 2000
    damping: object = "auto"     # float (1/s) or "auto"
    damping_floor: float = 10.0  # "auto" never drops below damping_floor / T_ramp
    max_steps: int = 200_000
    window: int = 200
    tol: float = 1e-6
    log_every: int = 0
    log_stream: object = None
    on_inversion: str = "flag"   # "flag" or "raise"

    def __post_init__(self):
        if not 0 < self.dt_safety <= 1:
            raise ValueError(f"dt_safety must lie in (0, 1], got {self.dt_safety}")
        if self.on_inversion not in ("flag", "raise"):
            raise ValueError("on_inversion must be 'flag' or 'raise'")


@dataclass
class SolverState:
    u_prev: np.ndarray
    u_curr: np.ndarray
    dt: float
    t: float = 0.0
    k: int = 0
    load_factor: float = 0.0
    damping: float = 0.0

    @property
    def velocity(self):
        return (self.u_curr - self.u_prev) / self.dt


@dataclass
class SolveResult:
    u: np.ndarray
    steps: int
    converged: bool
    time: float
    dt: float
    inverted: bool
    inversion_step: int
    inversion_cells: np.ndarray
    max_jump: float
    mean_jump: float
    kinetic_energy: np.ndarray
    complex: DualComplex = None


def central_difference(u_prev, u_curr, accel, dt, damping=0.0):
    """u_{k+1} = u_k + a (u_k - u_{k-1}) + b dt^2 M^-1 r with mass-proportional damping.

    With zero damping this is u_{k+1} = 2 u_k - u_{k-1} + dt^2 M^-1 r.
    """
    cdt = 0.5 * damping * dt
    return u_curr + (1.0 - cdt) / (1.0 + cdt) * (u_curr - u_prev) + dt * dt / (1.0 + cdt) * accel


def step(state: SolverState, f_ext, f_int, mass, fixed=None, fixed_values=None, load_factor=None):
    """Advance one step. ``fixed`` is a boolean (N, dim) mask of essential DOFs."""
    accel = (f_ext - f_int) / mass[:, None]
    u_next = central_difference(state.u_prev, state.u_curr, accel, state.dt, state.damping)
    if fixed is not None:
        u_next[fixed] = fixed_values[fixed]
    if not np.all(np.isfinite(u_next)):
        bad = np.argwhere(~np.isfinite(u_next))[0, 0]
        raise DivergenceError(state.k + 1, int(bad), u_next[bad])
    return SolverState(
        u_prev=state.u_curr, u_curr=u_next, dt=state.dt, t=state.t + state.dt, k=state.k + 1,
        load_factor=state.load_factor if load_factor is None else load_factor,
        damping=state.damping,
    )


class QuasiStaticSolver:
    """Ramp the loads, then relax the damped explicit dynamics to equilibrium.

    With ``damping="auto"`` the mass-proportional coefficient follows 2 omega,
    omega estimated every step from the Rayleigh quotient of the last
    increment, bounded below by ``damping_floor / T_ramp`` (which keeps the
    post-ramp kinetic energy from oscillating) and above by 2/dt.
    """

    def __init__(self, problem: Problem, controls: Controls = None, complex_=None, shapes=None):
        errors = problem.validate()
        if errors:
            raise ValueError("invalid problem:\n  " + "\n  ".join(errors))
        self.problem = problem
        self.controls = controls or Controls()
        mesh = problem.mesh
        self.complex = complex_ or build_dual_complex(mesh)
        self.shapes = shapes or ShapeFunctionSet(self.complex, problem.weight_scheme)
        dim = mesh.dim
        N = mesh.n_nodes
        self.fixed = np.zeros((N, dim), bool)
        self.target = np.zeros((N, dim))
        essential_masks = {}
        tractions = {}
        for bc in problem.bcs:
            mask = np.asarray(bc.components, bool)
            if bc.kind == "essential":
                nodes = mesh.boundary_nodes(bc.boundary_set)
                for c in np.flatnonzero(mask):
                    self.fixed[nodes, c] = True
                    self.target[nodes, c] = bc.value[c]
                prev = essential_masks.get(bc.boundary_set, np.zeros(dim, bool))
                essential_masks[bc.boundary_set] = prev | mask
            else:
                tractions[bc.boundary_set] = tractions.get(bc.boundary_set, 0.0) + np.where(mask, bc.value, 0.0)
        self.assembler = ForceAssembler(self.shapes, problem.material, problem.penalty,
                                        essential=essential_masks, boundary_flux=problem.boundary_flux)
        self.f_ext_full = self.assembler.external_force(tractions, problem.body)
        self.dt_crit = critical_time_step(self.shapes, problem.material, problem.penalty)
        self.dt = self.controls.dt_safety * self.dt_crit
        self.diag = mesh.bounding_diagonal

    def _log(self, state, max_speed, ke):
        c = self.controls
        line = f"{state.k},{state.t:.6e},{state.load_factor:.6f},{max_speed:.6e},{ke:.6e}"
        if c.log_stream is not None:
            print(line, file=c.log_stream)
        log.debug(line)

    def solve(self) -> SolveResult:
        c = self.controls
        a = self.assembler
        mass = a.mass
        N, dim = self.fixed.shape
        free = ~self.fixed
        u0 = np.zeros((N, dim))
        auto = isinstance(c.damping, str)
        if auto and c.damping != "auto":
            raise ValueError(f"damping must be a number or 'auto', got {c.damping!r}")
        # nothing to ramp or relax: check convergence every step
        loaded = bool(self.f_ext_full.any() or self.target[self.fixed].any())
        window = c.window if loaded else 1
        ramp_steps = c.ramp_steps if loaded else 0
        ramp_time = max(c.ramp_steps, 1) * self.dt
        damping0 = 2.0 / ramp_time if auto else float(c.damping)
        c_floor = min(c.damping_floor / ramp_time, 2.0 / self.dt)
        state = SolverState(u0, u0.copy(), self.dt, damping=damping0)
        tol_u = c.tol * self.diag
        inverted, inv_step, inv_cells = False, -1, np.zeros(0, np.int64)
        ke_hist = []
        snapshot, converged = None, False
        r_prev = None
        if c.log_stream is not None:
            print("step,time,load_factor,max_speed,ke", file=c.log_stream)
        while state.k < c.max_steps:
            f_int, J = a.internal_force(state.u_curr)
            if np.any(J <= 0):
                if c.on_inversion == "raise":
                    bad = np.flatnonzero(J <= 0)
                    raise ElementInversion(bad, J[bad])
                if not inverted:
                    inverted, inv_step, inv_cells = True, state.k, np.flatnonzero(J <= 0)
            lf = min(1.0, (state.k + 1) / ramp_steps) if ramp_steps > 0 else 1.0
            r = state.load_factor * self.f_ext_full - f_int
            if auto and state.k > 0:
                du = (state.u_curr - state.u_prev)[free]
                if r_prev is not None:
                    num = -np.dot(du, (r - r_prev)[free])
                    den = np.dot(du * du, np.broadcast_to(mass[:, None], (N, dim))[free])
                    if den > 0 and num > 0:
                        est = min(2.0 * np.sqrt(num / den), 2.0 / self.dt)
                        state.damping = max(est, c_floor)
            r_prev = r
            state = step(state, state.load_factor * self.f_ext_full, f_int, mass,
                         self.fixed, lf * self.target, load_factor=lf)
            if np.abs(state.u_curr).max() > 1e3 * self.diag:
                worst = int(np.argmax(np.abs(state.u_curr).max(axis=1)))
                raise DivergenceError(state.k, worst, state.u_curr[worst])
            v = state.velocity
            speed = np.sqrt((v * v).sum(axis=1))
            ke = 0.5 * float(np.dot(mass, (v * v).sum(axis=1)))
            ke_hist.append(ke)
            if c.log_every and state.k % c.log_every == 0:
                self._log(state, speed.max(), ke)
            if lf >= 1.0 and state.k % window == 0:
                if snapshot is not None:
                    du = np.abs(state.u_curr - snapshot).max()
                    if du < tol_u and speed.max() < tol_u:
                        converged = True
                        break
                snapshot = state.u_curr.copy()
        if c.log_every:
            v = state.velocity
            self._log(state, np.sqrt((v * v).sum(axis=1)).max(), ke_hist[-1] if ke_hist else 0.0)
        jumps, _ = a.interface_jumps(state.u_curr)
        _, _, J = a.stresses(state.u_curr)
        if np.any(J <= 0) and not inverted:
            inverted, inv_step, inv_cells = True, state.k, np.flatnonzero(J <= 0)
        return SolveResult(
            u=state.u_curr, steps=state.k, converged=converged, time=state.t, dt=self.dt,
            inverted=inverted, inversion_step=inv_step, inversion_cells=inv_cells,
            max_jump=float(jumps.max()) if len(jumps) else 0.0,
            mean_jump=float(jumps.mean()) if len(jumps) else 0.0,
            kinetic_energy=np.array(ke_hist), complex=self.complex,
        )


def solve_quasistatic(problem: Problem, controls: Controls = None, **kw) -> SolveResult:
    return QuasiStaticSolver(problem, controls, **kw).solve()
