"""Command-line driver: ``solve``, ``bench`` and ``mesh-info``.

Exit codes: 0 success, 2 missing input file, 3 invalid configuration,
flags or mesh, 4 solver failure (divergence, inversion, no convergence).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from ..bench import CASES, get_case, run_case
from ..material import ElementInversion
from ..mesh import MeshError, build_dual_complex, read_mesh
from ..solver import Controls, DivergenceError, QuasiStaticSolver
from .config import ConfigError, RunConfig, dump_config, load_config
from .vtk import write_vtk

EXIT_OK, EXIT_MISSING, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3, 4


class _Missing(Exception):
    pass


def _parser():
    ap = argparse.ArgumentParser(prog="tlfpm", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output directory (created if absent)")
        p.add_argument("--penalty", type=float, help="interior penalty coefficient p >= 0")
        p.add_argument("--dt-safety", type=float, help="fraction of the critical time step")
        p.add_argument("--max-steps", type=int, help="step budget per solve")
        p.add_argument("--log", help="step log CSV, relative to --out")

    s = sub.add_parser("solve", help="solve the problem described by a JSON config")
    s.add_argument("--config", required=True)
    common(s)
    b = sub.add_parser("bench", help="run a validation case study")
    g = b.add_mutually_exclusive_group(required=True)
    g.add_argument("--case", choices=sorted(CASES))
    g.add_argument("--all", action="store_true")
    common(b)
    m = sub.add_parser("mesh-info", help="summarise a mesh file and its dual cells")
    m.add_argument("--mesh", required=True)
    return ap


def _out_dir(path):
    out = os.path.abspath(path or "out")
    os.makedirs(out, exist_ok=True)
    return out


def _log_path(out, log):
    if log is None:
        return None
    path = os.path.abspath(os.path.join(out, log))
    if os.path.commonpath([out, path]) != out:
        raise ConfigError([f"--log {log!r} resolves outside the output directory {out}"])
    os.makedirs(os.path.dirname(path), exist_ok=True)
    return path


def _read_mesh(path):
    if not os.path.exists(path):
        raise _Missing(f"mesh file not found: {path}")
    return read_mesh(path)


def cmd_solve(args):
    if not os.path.exists(args.config):
        raise _Missing(f"config file not found: {args.config}")
    cfg = load_config(args.config)
    if args.penalty is not None:
        cfg.penalty = args.penalty
        errs = cfg.check()
        if errs:
            raise ConfigError(errs)
    out = _out_dir(args.out or os.path.join(os.path.dirname(os.path.abspath(args.config)), cfg.output))
    mesh = _read_mesh(cfg.mesh)
    problem = cfg.problem(mesh)
    log_path = _log_path(out, args.log)
    controls = cfg.solver_controls(dt_safety=args.dt_safety, max_steps=args.max_steps)
    with _maybe_open(log_path) as log_fh:
        if log_fh is not None:
            controls.log_stream, controls.log_every = log_fh, controls.log_every or 100
        result = QuasiStaticSolver(problem, controls).solve()
    dump_config(cfg, os.path.join(out, "config.json"))
    write_vtk(result.complex, result.u, os.path.join(out, "displacement.vtk"))
    summary = {
        "steps": result.steps, "converged": result.converged, "time": result.time, "dt": result.dt,
        "inverted": result.inverted, "max_jump": result.max_jump, "mean_jump": result.mean_jump,
        "max_displacement": np.abs(result.u).max(axis=0).tolist(),
    }
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    print(f"{'converged' if result.converged else 'NOT converged'} after {result.steps} steps; "
          f"output in {out}")
    return EXIT_OK if result.converged else EXIT_SOLVER


class _maybe_open:
    def __init__(self, path):
        self.path, self.fh = path, None

    def __enter__(self):
        if self.path:
            self.fh = open(self.path, "w")
        return self.fh

    def __exit__(self, *exc):
        if self.fh:
            self.fh.close()


def cmd_bench(args):
    out = _out_dir(args.out)
    ids = sorted(CASES) if args.all else [args.case]
    if args.penalty is not None and args.penalty < 0:
        raise ConfigError([f"--penalty must be >= 0, got {args.penalty}"])
    log_path = _log_path(out, args.log)
    status = EXIT_OK
    with _maybe_open(log_path) as log_fh:
        for cid in ids:
            case_dir = os.path.join(out, cid)
            os.makedirs(case_dir, exist_ok=True)
            series = []

            def save(tag, complex_, result, case_dir=case_dir, series=series):
                name = f"{tag}.vtk"
                write_vtk(complex_, result.u, os.path.join(case_dir, name))
                series.append({"name": name, "time": len(series)})

            controls = _bench_controls(get_case(cid), args, log_fh)
            report = run_case(cid, penalty=args.penalty, controls=controls, on_solution=save)
            report.to_csv(os.path.join(case_dir, "report.csv"))
            with open(os.path.join(case_dir, "summary.txt"), "w") as fh:
                fh.write(report.summary() + "\n")
            with open(os.path.join(case_dir, "solutions.vtk.series"), "w") as fh:
                json.dump({"file-series-version": "1.0", "files": series}, fh, indent=1)
            print(report.summary())
            if not all(r.converged for r in report.rows):
                status = EXIT_SOLVER
    return status


def _bench_controls(case, args, log_fh):
    kw = {"ramp_steps": case.ramp_steps}
    if args.dt_safety is not None:
        kw["dt_safety"] = args.dt_safety
    if args.max_steps is not None:
        kw["max_steps"] = args.max_steps
    if log_fh is not None:
        kw.update(log_stream=log_fh, log_every=100)
    return Controls(**kw)


def cmd_mesh_info(args):
    mesh = _read_mesh(args.mesh)
    cx = build_dual_complex(mesh)
    print(f"mesh            {args.mesh}")
    print(f"dimension       {mesh.dim}")
    print(f"nodes           {mesh.n_nodes}")
    print(f"elements        {mesh.n_elements}")
    print(f"volume          {mesh.volume:.6e}")
    print(f"mean spacing h  {mesh.mean_spacing():.6e}")
    print(f"interfaces      {cx.n_interfaces}")
    print(f"support size    {min(map(len, cx.supports))}..{max(map(len, cx.supports))}")
    print(f"repaired        {len(cx.repaired)}")
    for name in sorted(mesh.boundary_sets):
        print(f"set {name:<11} {len(mesh.boundary_sets[name])} facets, "
              f"{len(mesh.boundary_nodes(name))} nodes")
    return EXIT_OK


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    handler = {"solve": cmd_solve, "bench": cmd_bench, "mesh-info": cmd_mesh_info}[args.command]
    try:
        return handler(args)
    except _Missing as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_MISSING
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MeshError as exc:
        print(f"error: invalid mesh: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, ElementInversion) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


__all__ = ["main", "write_vtk", "RunConfig", "load_config", "ConfigError"]
