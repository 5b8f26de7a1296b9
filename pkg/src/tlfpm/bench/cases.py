"""Validation case studies: penalty sweep, unconstrained and constrained block loading."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from ..dynamics import PenaltyConfig
from ..material import MaterialParams
from ..mesh import SimplicialMesh, generate
from ..solver import BoundaryCondition, Controls, Problem, QuasiStaticSolver
from .metrics import mls_map, nrmse, nrmse_vector

SOFT_TISSUE = MaterialParams(rho0=1000.0, young=3000.0, nu=0.45)


@dataclass(frozen=True)
class CaseStudy:
    """Geometry, loading schedule and sweep parameters of one validation study.

    ``loading`` selects the boundary conditions:

    - ``bar``: 2D bar clamped at ``xmin``, ``u_x`` prescribed at ``xmax``;
    - ``rollers``: rollers on ``xmin``/``ymin``/``zmin``, ``u_z`` prescribed on ``zmax``;
    - ``clamped``: ``zmin`` fixed, ``zmax`` fixed in x and y with ``u_z`` prescribed.

    ``resolutions`` are node counts per axis from coarse to fine;
    ``reference`` is ``"analytical"``, ``"penalty"`` (highest p in the sweep)
    or a node-count tuple for a finer FPM reference mesh.
    """

    id: str
    lengths: tuple
    resolutions: tuple
    levels: tuple
    level_labels: tuple
    loading: str
    penalties: tuple = (20.0,)
    reference: object = "analytical"
    material: MaterialParams = SOFT_TISSUE
    jitter: float = 0.0
    seed: int = 0
    ramp_steps: int = 2000

    @property
    def dim(self):
        return len(self.lengths)

    def mesh(self, resolution) -> SimplicialMesh:
        if self.dim == 2:
            return generate.rectangle(*self.lengths, *resolution, jitter=self.jitter, seed=self.seed)
        return generate.box(*self.lengths, *resolution, jitter=self.jitter, seed=self.seed)

    def bcs(self, level):
        if self.loading == "bar":
            return [BoundaryCondition.fix("xmin", 2, x=0.0, y=0.0),
                    BoundaryCondition.fix("xmax", 2, x=level)]
        if self.loading == "rollers":
            return [BoundaryCondition.fix("xmin", 3, x=0.0),
                    BoundaryCondition.fix("ymin", 3, y=0.0),
                    BoundaryCondition.fix("zmin", 3, z=0.0),
                    BoundaryCondition.fix("zmax", 3, z=level)]
        if self.loading == "clamped":
            return [BoundaryCondition.fix("zmin", 3, x=0.0, y=0.0, z=0.0),
                    BoundaryCondition.fix("zmax", 3, x=0.0, y=0.0, z=level)]
        raise ValueError(f"unknown loading {self.loading!r}")

    def problem(self, mesh, level, p, boundary_flux=False):
        return Problem(mesh, self.material, self.bcs(level), PenaltyConfig(p), boundary_flux=boundary_flux)


_CUBE = (0.1, 0.1, 0.1)

CASES = {
    c.id: c
    for c in (
        CaseStudy("penalty2d_ext", (10.0, 4.0), ((25, 5),), (2.0,), ("20%",), "bar",
                  penalties=(0.0, 10.0, 20.0, 50.0, 100.0), reference="penalty", jitter=0.1, seed=1),
        CaseStudy("penalty2d_comp", (10.0, 4.0), ((25, 5),), (-2.0,), ("20%",), "bar",
                  penalties=(0.0, 10.0, 20.0, 50.0, 100.0), reference="penalty", jitter=0.1, seed=1),
        CaseStudy("uncon_comp3d", _CUBE, ((8, 8, 8), (10, 10, 10), (12, 12, 12)), (-0.04,), ("40%",),
                  "rollers"),
        CaseStudy("con_ext3d", _CUBE, ((8, 8, 8),), (0.06, 0.1, 0.2), ("60%", "100%", "200%"),
                  "clamped", reference=(14, 14, 14)),
        CaseStudy("con_comp3d", _CUBE, ((8, 8, 8),), (-0.02, -0.04, -0.06), ("20%", "40%", "60%"),
                  "clamped", reference=(14, 14, 14)),
    )
}


def get_case(case_id, **overrides) -> CaseStudy:
    """Registered case by id (a CaseStudy instance is passed through)."""
    if isinstance(case_id, CaseStudy):
        return replace(case_id, **overrides) if overrides else case_id
    if case_id not in CASES:
        raise KeyError(f"unknown case {case_id!r}; known: {sorted(CASES)}")
    return replace(CASES[case_id], **overrides) if overrides else CASES[case_id]


@dataclass
class NrmseRow:
    case: str
    h: float
    level: str
    p: float
    nrmse: float
    steps: int
    inverted: bool
    components: tuple = ()
    n_nodes: int = 0
    converged: bool = True
    max_jump: float = 0.0
    max_displacement: float = 0.0


@dataclass
class NrmseReport:
    reference: str
    rows: list = field(default_factory=list)

    CSV_COLUMNS = ("case", "h", "level", "p", "nrmse", "steps", "inverted")

    def select(self, case=None, level=None, p=None):
        return [r for r in self.rows
                if (case is None or r.case == case)
                and (level is None or r.level == level)
                and (p is None or r.p == p)]

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.case, f"{r.h:.6e}", r.level, f"{r.p:g}", f"{r.nrmse:.6e}", r.steps, int(r.inverted)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def summary(self):
        head = f"{'case':<16}{'nodes':>7}{'h (m)':>11}{'level':>7}{'p':>6}{'NRMSE':>12}{'steps':>8}  flags"
        lines = [f"reference: {self.reference}", head, "-" * len(head)]
        for r in self.rows:
            flags = []
            if r.inverted:
                flags.append("inverted")
            if not r.converged:
                flags.append("not converged")
            nr = "-" if np.isnan(r.nrmse) else f"{r.nrmse:.4e}"
            lines.append(f"{r.case:<16}{r.n_nodes:>7}{r.h:>11.3e}{r.level:>7}{r.p:>6g}{nr:>12}{r.steps:>8}  "
                         + ",".join(flags))
        return "\n".join(lines)


def _solve(case, mesh, level, p, controls, on_solution, tag):
    controls = controls or Controls(ramp_steps=case.ramp_steps)
    solver = QuasiStaticSolver(case.problem(mesh, level, p), controls)
    result = solver.solve()
    if on_solution is not None:
        on_solution(tag, solver.complex, result)
    return result


def _row(case, mesh, label, p, value, comps, res):
    return NrmseRow(case.id, mesh.mean_spacing(), label, p, value, res.steps, res.inverted,
                    tuple(float(c) for c in comps), mesh.n_nodes, res.converged, res.max_jump,
                    float(np.abs(res.u).max()))


def run_penalty_sweep(cases=("penalty2d_ext", "penalty2d_comp"), controls=None, on_solution=None) -> NrmseReport:
    """NRMSE of every penalty in the sweep against the highest-penalty solution."""
    report = NrmseReport("solution with the highest penalty coefficient on the same mesh")
    for cid in cases:
        case = get_case(cid)
        mesh = case.mesh(case.resolutions[0])
        level, label = case.levels[0], case.level_labels[0]
        sols = {p: _solve(case, mesh, level, p, controls, on_solution, f"{case.id}_p{p:g}")
                for p in case.penalties}
        p_ref = max(case.penalties)
        u_ref = sols[p_ref].u
        for p in sorted(case.penalties, reverse=True):
            value, comps = nrmse_vector(sols[p].u, u_ref)
            report.rows.append(_row(case, mesh, label, p, value, comps, sols[p]))
    return report


def run_unconstrained_compression(resolutions=None, controls=None, on_solution=None,
                                  case_id="uncon_comp3d", penalty=None) -> NrmseReport:
    """NRMSE of u_z against the homogeneous solution u_z = (level / height) z."""
    case = get_case(case_id)
    report = NrmseReport("analytical u_z = (top displacement / height) z")
    level, label = case.levels[0], case.level_labels[0]
    p = case.penalties[0] if penalty is None else penalty
    for res in resolutions or case.resolutions:
        mesh = case.mesh(res)
        sol = _solve(case, mesh, level, p, controls, on_solution, f"{case.id}_{'x'.join(map(str, res))}")
        z = mesh.nodes[:, 2] - mesh.nodes[:, 2].min()
        exact = level / case.lengths[2] * z
        value = nrmse(sol.u[:, 2], exact)
        report.rows.append(_row(case, mesh, label, p, value, (value,), sol))
    return report


def run_constrained(case_id, levels=None, resolutions=None, reference=None, controls=None,
                    on_solution=None, radius_factor=2.5, penalty=None) -> NrmseReport:
    """NRMSE of the displacement against a finer FPM reference after MLS transfer.

    The coarse solution is mapped onto the reference nodes with a support
    radius of ``radius_factor`` coarse spacings.
    """
    case = get_case(case_id)
    ref_res = tuple(reference or case.reference)
    ref_mesh = case.mesh(ref_res)
    report = NrmseReport(f"FPM solution on a {'x'.join(map(str, ref_res))} node grid "
                         f"(h = {ref_mesh.mean_spacing():.3e} m, {ref_mesh.n_nodes} nodes)")
    labels = dict(zip(case.levels, case.level_labels))
    chosen = case.levels if levels is None else [_level_value(case, lv) for lv in levels]
    p = case.penalties[0] if penalty is None else penalty
    for level in chosen:
        label = labels[level]
        ref = _solve(case, ref_mesh, level, p, controls, on_solution, f"{case.id}_{label}_reference")
        for res in resolutions or case.resolutions:
            mesh = case.mesh(res)
            sol = _solve(case, mesh, level, p, controls, on_solution, f"{case.id}_{label}_{'x'.join(map(str, res))}")
            spacing = max(L / (n - 1) for L, n in zip(case.lengths, res))
            mapped = mls_map(mesh.nodes, sol.u, ref_mesh.nodes, radius_factor * spacing)
            value, comps = nrmse_vector(mapped, ref.u)
            report.rows.append(_row(case, mesh, label, p, value, comps, sol))
    return report


def _level_value(case, level):
    if isinstance(level, str):
        if level not in case.level_labels:
            raise KeyError(f"case {case.id} has levels {case.level_labels}, not {level!r}")
        return case.levels[case.level_labels.index(level)]
    return float(level)


def run_constrained_extension(levels=None, **kw) -> NrmseReport:
    return run_constrained("con_ext3d", levels, **kw)


def run_constrained_compression(levels=None, **kw) -> NrmseReport:
    return run_constrained("con_comp3d", levels, **kw)


def run_case(case_id, penalty=None, **kw) -> NrmseReport:
    """Dispatch a case id to its study; ``penalty`` is ignored by the penalty sweeps."""
    case = get_case(case_id)
    if case.reference == "penalty":
        return run_penalty_sweep((case,), **kw)
    kw["penalty"] = penalty
    if case.reference == "analytical":
        return run_unconstrained_compression(case_id=case, **kw)
    return run_constrained(case, **kw)
