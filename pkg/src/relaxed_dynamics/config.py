"""Experiment configuration files.

Configs are TOML with flat sections; matrices are row-major nested arrays::

    seed = 0

    [problem]
    kind = "quadratic"            # quadratic | lasso | box_qp | nonexpansive_demo | averaged_demo
    Q = [[2.0, 0.5], [0.5, 1.0]]
    c = [1.0, -1.0]

    [system]
    kind = "gradient"             # gradient | cocoercive | nonexpansive | averaged
                                  # | forward_backward | prox_gradient
    eta_over_beta = 1.0           # or an absolute `eta`

    [schedule]
    family = "constant"           # constant | exponential
    lam = 1.0
    gam = 2.0

    [initial]
    u0 = [1.0, 0.0]
    v0 = [0.0, 0.0]

    [integrator]
    method = "rk4_fixed"
    step = 1e-3
    horizon = 50.0
    record_every = 0.01

    [discrete]
    lam = 1.0
    gam = 2.0
    max_iter = 5000
    stop_residual = 1e-8

    [diagnostics]
    residual_tol = 1e-5
    lyapunov_tol = 1e-6

    [output]
    dir = "runs/quadratic"
"""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "apply_override",
    "DEFAULT_DIAGNOSTICS",
]

PROBLEM_KINDS = ("quadratic", "lasso", "box_qp", "nonexpansive_demo", "averaged_demo")
SYSTEM_KINDS = ("gradient", "cocoercive", "nonexpansive", "averaged",
                "forward_backward", "prox_gradient")

DEFAULT_DIAGNOSTICS = {
    "residual_tol": 1e-5,
    "lyapunov_tol": 1e-6,
    "distance_tol": None,
    "compare_tol": 1e-4,
    "T_min": 1.0,
    "T_points": 50,
    "tail_fraction": 0.5,
    "slope_max": -0.9,
    "zeta": None,
    "fejer_window": 5.0,
}


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    problem: dict
    system: dict
    schedule: dict
    integrator: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    discrete: Optional[dict] = None
    diagnostics: dict = field(default_factory=dict)
    output_dir: str = "runs/experiment"
    seed: int = 0
    source: Optional[str] = None

    def diag(self, key):
        return self.diagnostics.get(key, DEFAULT_DIAGNOSTICS[key])

    def to_dict(self) -> dict:
        d = {
            "seed": self.seed,
            "problem": self.problem,
            "system": self.system,
            "schedule": self.schedule,
            "integrator": self.integrator,
            "initial": self.initial,
            "diagnostics": self.diagnostics,
            "output": {"dir": self.output_dir},
        }
        if self.discrete is not None:
            d["discrete"] = self.discrete
        return copy.deepcopy(d)


def parse_config(data: dict, source: Optional[str] = None) -> ExperimentConfig:
    """Validate a parsed TOML mapping and build an :class:`ExperimentConfig`."""
    for key in ("problem", "system", "schedule"):
        if key not in data:
            raise ConfigError(f"missing [{key}] section")
    problem = dict(data["problem"])
    if problem.get("kind") not in PROBLEM_KINDS:
        raise ConfigError(f"problem.kind must be one of {PROBLEM_KINDS}, got {problem.get('kind')!r}")
    system = dict(data["system"])
    if system.get("kind") not in SYSTEM_KINDS:
        raise ConfigError(f"system.kind must be one of {SYSTEM_KINDS}, got {system.get('kind')!r}")
    schedule = dict(data["schedule"])
    if schedule.get("family") not in ("constant", "exponential"):
        raise ConfigError(f"schedule.family must be constant or exponential, got {schedule.get('family')!r}")
    unknown = set(data) - {"seed", "problem", "system", "schedule", "integrator",
                           "initial", "discrete", "diagnostics", "output"}
    if unknown:
        raise ConfigError(f"unknown sections/keys: {sorted(unknown)}")
    diagnostics = dict(data.get("diagnostics", {}))
    bad = set(diagnostics) - set(DEFAULT_DIAGNOSTICS)
    if bad:
        raise ConfigError(f"unknown diagnostics keys: {sorted(bad)}")
    return ExperimentConfig(
        problem=problem,
        system=system,
        schedule=schedule,
        integrator=dict(data.get("integrator", {})),
        initial=dict(data.get("initial", {})),
        discrete=dict(data["discrete"]) if "discrete" in data else None,
        diagnostics=diagnostics,
        output_dir=str(data.get("output", {}).get("dir", "runs/experiment")),
        seed=int(data.get("seed", 0)),
        source=source,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data, str(path))


def apply_override(cfg: ExperimentConfig, dotted: str, value) -> ExperimentConfig:
    """Return a copy of ``cfg`` with ``section.key`` set to ``value``."""
    data = cfg.to_dict()
    section, _, key = dotted.partition(".")
    if not key:
        if section != "seed":
            raise ConfigError(f"override needs section.key, got {dotted!r}")
        data["seed"] = int(value)
    else:
        data.setdefault(section, {})[key] = value
    return parse_config(data, cfg.source)
