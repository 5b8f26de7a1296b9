"""JSON run configuration for the command-line driver."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

from ..dynamics import PenaltyConfig
from ..material import MaterialParams
from ..solver import BoundaryCondition, Controls, Problem

_CONTROL_KEYS = ("dt_safety", "ramp_steps", "damping", "max_steps", "window", "tol")


class ConfigError(ValueError):
    """Every violation found in a configuration, one per line."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass
class RunConfig:
    mesh: str
    material: dict = field(default_factory=lambda: {"rho0": 1000.0, "young": 3000.0, "nu": 0.45})
    bcs: list = field(default_factory=list)
    penalty: float = 20.0
    boundary_flux: bool = False
    body: list = None
    weight_scheme: str = "uniform"
    controls: dict = field(default_factory=dict)
    output: str = "out"
    case: str = None

    @classmethod
    def from_dict(cls, data, base_dir="."):
        """Parse and check a config mapping; mesh paths are relative to ``base_dir``."""
        errors = []
        if not isinstance(data, dict):
            raise ConfigError(["top level must be an object"])
        known = set(cls.__dataclass_fields__)
        for key in sorted(set(data) - known):
            errors.append(f"unknown key {key!r}")
        if "mesh" not in data:
            errors.append("missing required key 'mesh'")
        mesh = data.get("mesh", "")
        if mesh and not os.path.isabs(mesh):
            mesh = os.path.normpath(os.path.join(base_dir, mesh))
        cfg = cls(mesh=mesh, **{k: v for k, v in data.items() if k in known and k != "mesh"})
        errors += cfg.check()
        if errors:
            raise ConfigError(errors)
        return cfg

    def to_dict(self):
        return asdict(self)

    def check(self):
        errors = []
        try:
            MaterialParams(**self.material)
        except (TypeError, ValueError) as exc:
            errors.append(f"material: {exc}")
        if not isinstance(self.penalty, (int, float)) or self.penalty < 0:
            errors.append(f"penalty must be a number >= 0, got {self.penalty!r}")
        for i, bc in enumerate(self.bcs):
            try:
                _bc(bc)
            except (KeyError, TypeError, ValueError) as exc:
                errors.append(f"bcs[{i}]: {exc}")
        for key in sorted(set(self.controls) - set(_CONTROL_KEYS)):
            errors.append(f"controls: unknown key {key!r}")
        try:
            Controls(**{k: v for k, v in self.controls.items() if k in _CONTROL_KEYS})
        except (TypeError, ValueError) as exc:
            errors.append(f"controls: {exc}")
        return errors

    def problem(self, mesh):
        """Problem for ``mesh``; raises ConfigError listing BCs that do not fit it."""
        prob = Problem(mesh, MaterialParams(**self.material), [_bc(b) for b in self.bcs],
                       PenaltyConfig(float(self.penalty)),
                       tuple(self.body) if self.body is not None else None,
                       self.weight_scheme, bool(self.boundary_flux))
        errors = prob.validate()
        if errors:
            raise ConfigError(errors)
        return prob

    def solver_controls(self, **overrides):
        kw = {k: v for k, v in self.controls.items() if k in _CONTROL_KEYS}
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return Controls(**kw)


def _bc(d):
    if not isinstance(d, dict):
        raise TypeError("boundary condition must be an object")
    extra = set(d) - {"kind", "set", "value", "components"}
    if extra:
        raise ValueError(f"unknown keys {sorted(extra)}")
    missing = [k for k in ("set", "value") if k not in d]
    if missing:
        raise ValueError(f"missing keys {missing}")
    return BoundaryCondition(d.get("kind", "essential"), d["set"], tuple(d["value"]),
                             tuple(d["components"]) if d.get("components") is not None else None)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"{path}: line {exc.lineno}: {exc.msg}"]) from exc
    return RunConfig.from_dict(data, os.path.dirname(os.path.abspath(path)))


def dump_config(cfg: RunConfig, path=None):
    text = json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
