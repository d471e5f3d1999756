"""Config-driven experiments: build the problem, validate, simulate, diagnose.

:func:`run_experiment` is the single entry point used by the command line.
It writes CSV artifacts plus ``validation.txt`` and ``summary.txt`` into the
output directory and returns a summary dict whose ``exit_code`` is 0 exactly
when every contracted diagnostic passed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import csvio
from .config import ConfigError, ExperimentConfig
from .diagnostics import (
    ergodic_averages,
    energy_a5,
    fejer_limit_check,
    fb_residual_norm,
    l2_integrals,
    lyapunov_a1,
    rate_bound,
    rate_report,
)
from .discrete import (
    InertialFBConfig,
    compare_discrete_continuous,
    run_inertial_fb,
    write_history_csv,
)
from .dynamics import (
    IntegratorConfig,
    SystemSpec,
    averaged_system,
    cocoercive_system,
    forward_backward_system,
    gradient_system,
    integrate,
    nonexpansive_system,
    prox_gradient_system,
    terminal_residuals,
)
from .exceptions import AssumptionViolation
from .operators import subdifferential, gradient_field
from .problems import (
    Problem,
    box_qp_problem,
    lasso_desk_instance,
    lasso_problem,
    quadratic_problem,
    rotation,
)
from .schedules import (
    Schedule,
    ValidationReport,
    constant_schedule,
    default_grid,
    exponential_schedule,
    validate,
    validate_a6,
)

__all__ = ["Experiment", "build_experiment", "run_experiment", "EXIT_OK",
           "EXIT_DIAGNOSTICS", "EXIT_ASSUMPTION"]

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_ASSUMPTION = 2


@dataclass
class Experiment:
    cfg: ExperimentConfig
    problem: Optional[Problem]
    spec: SystemSpec
    schedule: Schedule
    assumption: str
    assumption_args: dict
    x_star: np.ndarray
    u0: np.ndarray
    v0: np.ndarray
    eta: Optional[float]
    integrator: IntegratorConfig

    def validate(self) -> ValidationReport:
        grid = default_grid(self.integrator.horizon)
        return validate(self.assumption, self.schedule, grid, **self.assumption_args)


def _vec(x):
    return np.asarray(x, dtype=float)


def _build_schedule(d: dict) -> Schedule:
    if d["family"] == "constant":
        return constant_schedule(d["lam"], d["gam"])
    keys = ("a", "rho", "b", "a2", "rho2", "b2")
    missing = [k for k in keys if k not in d]
    if missing:
        raise ConfigError(f"exponential schedule missing {missing}")
    return exponential_schedule(*(d[k] for k in keys))


def _build_problem(cfg: ExperimentConfig) -> Optional[Problem]:
    p = cfg.problem
    kind = p["kind"]
    if kind == "quadratic":
        return quadratic_problem(_vec(p["Q"]), _vec(p.get("c", np.zeros(len(p["Q"])))))
    if kind == "box_qp":
        return box_qp_problem(_vec(p["Q"]), _vec(p["c"]), _vec(p["lo"]), _vec(p["hi"]))
    if kind == "lasso":
        if "M" in p:
            return lasso_problem(_vec(p["M"]), _vec(p["y"]), float(p.get("w", 0.1)))
        return lasso_desk_instance(
            seed=cfg.seed, rows=int(p.get("rows", 20)), cols=int(p.get("cols", 10)),
            sparsity=int(p.get("sparsity", 3)), w=float(p.get("w", 0.1)),
            noise=float(p.get("noise", 0.01)),
        )
    return None


def _eta(system: dict, beta: float) -> float:
    if "eta" in system:
        return float(system["eta"])
    if "eta_over_beta" in system:
        return float(system["eta_over_beta"]) * beta
    raise ConfigError("forward-backward systems need system.eta or system.eta_over_beta")


def build_experiment(cfg: ExperimentConfig) -> Experiment:
    """Assemble problem, system, schedule and the assumption that licenses the run."""
    problem = _build_problem(cfg)
    kind = cfg.system["kind"]
    schedule = _build_schedule(cfg.schedule)
    eta = None
    pk = cfg.problem["kind"]

    if pk in ("nonexpansive_demo", "averaged_demo"):
        angle = float(cfg.problem.get("angle", math.pi / 3))
        T = rotation(angle)
        dim = 2
        x_star = np.zeros(2)
        if kind == "nonexpansive":
            spec = nonexpansive_system(T, dim)
            assumption, args = "a2", {}
        elif kind == "averaged":
            alpha = float(cfg.problem.get("alpha", cfg.system.get("alpha", 0.5)))
            spec = averaged_system(T, alpha, dim)
            assumption, args = "a3", {"alpha": alpha}
        else:
            raise ConfigError(f"{pk} needs system.kind nonexpansive or averaged")
    elif kind in ("gradient", "cocoercive"):
        if problem is None or problem.f is not None:
            raise ConfigError(f"system.kind={kind} needs a smooth problem (quadratic)")
        spec = gradient_system(problem.g) if kind == "gradient" else cocoercive_system(gradient_field(problem.g))
        x_star = problem.x_star
        assumption, args = "a1", {"beta": spec.field.beta}
    elif kind in ("forward_backward", "prox_gradient"):
        if problem is None or problem.f is None:
            raise ConfigError(f"system.kind={kind} needs a composite problem (lasso, box_qp)")
        beta = problem.beta
        eta = _eta(cfg.system, beta)
        if kind == "forward_backward":
            spec = forward_backward_system(subdifferential(problem.f), gradient_field(problem.g), eta)
        else:
            spec = prox_gradient_system(problem.f, problem.g, eta)
        x_star = problem.x_star
        if eta <= 2.0 * beta:
            assumption, args = "a4", {"beta": beta, "eta": eta}
        else:
            assumption, args = "a5", {"beta": beta, "eta": eta}
    else:
        raise ConfigError(f"system.kind={kind} does not fit problem.kind={pk}")

    dim = spec.dim
    u0 = _vec(cfg.initial.get("u0", np.zeros(dim)))
    v0 = _vec(cfg.initial.get("v0", np.zeros(dim)))
    if u0.shape != (dim,) or v0.shape != (dim,):
        raise ConfigError(f"initial u0/v0 must have dimension {dim}")
    integ = IntegratorConfig(**cfg.integrator)
    return Experiment(cfg, problem, spec, schedule, assumption, args, x_star,
                      u0, v0, eta, integ)


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def _write_lines(path: Path, items):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for key, value in items:
            fh.write(f"{key} = {_fmt(value)}\n")


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return '"' + str(value).replace('"', "'") + '"'


def _validation_items(rep: ValidationReport):
    name = "zeta_star" if rep.assumption == "A6" else "theta_star"
    items = [("assumption", rep.assumption), ("feasible", rep.feasible),
             (name, rep.margin), ("witness_t", rep.witness_t),
             ("lam_min", rep.bounds[0]), ("lam_max", rep.bounds[1]),
             ("gam_min", rep.bounds[2]), ("gam_max", rep.bounds[3])]
    for k, v in rep.params.items():
        items.append((k, v))
    if rep.violated:
        items.append(("violated", rep.violated))
    return items


def _continuous_diagnostics(exp: Experiment, traj, out: Path, summary: dict, checks: dict):
    res = terminal_residuals(traj)
    summary.update(norm_v=res.norm_v, norm_a=res.norm_a, norm_field=res.norm_field)
    tol = exp.cfg.diag("residual_tol")
    checks["residuals"] = max(res) <= tol

    x_star = exp.x_star
    dist = float(np.linalg.norm(traj.x[-1] - x_star))
    summary["distance_to_x_star"] = dist
    dtol = exp.cfg.diag("distance_tol")
    if dtol is not None:
        checks["distance"] = dist <= dtol

    if exp.assumption == "a5":
        trace = energy_a5(traj, exp.schedule, exp.eta, exp.problem.g, x_star, exp.problem.f)
        summary["lyapunov_kind"] = "energy_a5"
        summary["q_min"] = float(np.min(trace.aux["q"]))
    else:
        trace = lyapunov_a1(traj, exp.schedule, exp.spec.field.beta, x_star)
        summary["lyapunov_kind"] = "lyapunov_a1"
    summary["lyapunov_max_uptick"] = trace.max_uptick
    checks["lyapunov"] = trace.max_uptick <= exp.cfg.diag("lyapunov_tol")

    window = float(exp.cfg.diag("fejer_window"))
    if traj.final_time >= 2 * window:
        fj = fejer_limit_check(traj, x_star, window)
        summary["fejer_limit_estimate"] = fj.limit_estimate
        summary["fejer_tail_oscillation"] = fj.tail_oscillation
    for k, v in l2_integrals(traj).items():
        summary[f"l2_integral_{k}"] = v
    if exp.problem is not None and exp.problem.f is not None:
        summary["fb_residual_final"] = fb_residual_norm(
            exp.problem.f, exp.problem.g, exp.eta if exp.eta else exp.problem.beta, traj.x[-1])

    # diagnostics CSV on the recorded grid (T > 0)
    T = traj.times[1:]
    gap = np.full(T.shape, np.nan)
    bound = np.full(T.shape, np.nan)
    if exp.spec.kind in ("gradient", "cocoercive") and exp.schedule.ddgam is not None:
        rep6 = validate_a6(exp.schedule, default_grid(exp.integrator.horizon))
        if rep6.feasible:
            g = exp.problem.g
            zeta = exp.cfg.diag("zeta") or rep6.zeta_star
            avgs = ergodic_averages(traj, T)
            gap = np.array([g.value(a) for a in avgs]) - g.value(x_star)
            bound = rate_bound(exp.schedule, g.beta, zeta, exp.u0, exp.v0, x_star, T,
                               rep6.zeta_star)
    rows = np.column_stack([T, gap, bound, trace.values[1:],
                            np.linalg.norm(traj.field_values[1:], axis=1)])
    csvio.write_csv(out / "diagnostics.csv", csvio.DIAGNOSTICS_HEADER, rows)


def _run_rate(exp: Experiment, traj, out: Path, summary: dict, checks: dict):
    if exp.spec.kind not in ("gradient", "cocoercive"):
        raise ConfigError("rate needs system.kind gradient (or cocoercive) on a quadratic problem")
    rep6 = validate_a6(exp.schedule, default_grid(exp.integrator.horizon))
    summary["zeta_star"] = rep6.zeta_star
    summary["a6_feasible"] = rep6.feasible
    if not rep6.feasible:
        raise AssumptionViolation(rep6)
    zeta = exp.cfg.diag("zeta") or rep6.zeta_star
    g = exp.problem.g
    T_grid = np.linspace(float(exp.cfg.diag("T_min")), traj.final_time,
                         int(exp.cfg.diag("T_points")))
    report = rate_report(traj, g, exp.schedule, g.beta, zeta, exp.x_star, T_grid,
                         float(exp.cfg.diag("tail_fraction")), rep6.zeta_star)
    lyap = lyapunov_a1(traj, exp.schedule, exp.spec.field.beta, exp.x_star)
    lyap_T = np.interp(T_grid, traj.times, lyap.values)
    fnorm = np.interp(T_grid, traj.times, np.linalg.norm(traj.field_values, axis=1))
    rows = np.column_stack([T_grid, report.ergodic_gap, report.bound, lyap_T, fnorm])
    csvio.write_csv(out / "rate.csv", csvio.DIAGNOSTICS_HEADER, rows)
    summary["zeta"] = zeta
    summary["slope"] = report.slope
    summary["max_gap_minus_bound"] = float(np.max(report.ergodic_gap - report.bound))
    summary["min_gap"] = float(np.min(report.ergodic_gap))
    checks["bound_domination"] = bool(np.all(report.dominated))
    checks["gap_nonnegative"] = bool(np.all(report.ergodic_gap >= -1e-10))
    checks["slope"] = bool(report.slope <= float(exp.cfg.diag("slope_max")))


def _discrete_config(exp: Experiment) -> InertialFBConfig:
    d = dict(exp.cfg.discrete or {})
    beta = exp.problem.beta
    if "eta" in d:
        eta = float(d["eta"])
    elif "eta_over_beta" in d:
        eta = float(d["eta_over_beta"]) * beta
    else:
        eta = exp.eta if exp.eta is not None else beta
    return InertialFBConfig(eta, float(d.get("lam", 1.0)), float(d.get("gam", 2.0)),
                            int(d.get("max_iter", 5000)), float(d.get("stop_residual", 1e-8)))


def _run_discrete(exp: Experiment, out: Path, summary: dict, checks: dict):
    if exp.problem is None:
        raise ConfigError("discrete runs need an optimization problem")
    dcfg = _discrete_config(exp)
    hist = run_inertial_fb(exp.problem.f, exp.problem.g, dcfg, exp.u0, exp.v0)
    write_history_csv(hist, out / "history.csv")
    summary["discrete_status"] = hist.status
    summary["discrete_iterations"] = len(hist) - 1
    summary["discrete_final_residual"] = float(hist.residuals[-1])
    summary["discrete_distance_to_x_star"] = float(np.linalg.norm(hist.final - exp.x_star))
    summary["discrete_coefficient_violations"] = len(hist.violations)
    checks["discrete_converged"] = hist.converged
    return hist


def run_experiment(cfg: ExperimentConfig, command: str = "simulate", force: bool = False,
                   out_dir=None) -> dict:
    """Run one experiment; see the module docstring for the artifacts written."""
    exp = build_experiment(cfg)
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"command": command, "problem": cfg.problem["kind"],
               "system": exp.spec.kind, "schedule": exp.schedule.family,
               "seed": cfg.seed}
    if exp.eta is not None:
        summary["eta"] = exp.eta
    if exp.problem is not None:
        summary["beta"] = exp.problem.beta
    checks: dict = {}

    rep = exp.validate()
    _write_lines(out / "validation.txt", _validation_items(rep))
    summary["assumption"] = rep.assumption
    summary["assumption_feasible"] = rep.feasible
    summary["assumption_margin"] = rep.margin
    summary["witness_t"] = rep.witness_t
    contractual = rep.feasible
    if not rep.feasible and not force:
        summary["violated"] = rep.violated
        summary["exit_code"] = EXIT_ASSUMPTION
        _write_lines(out / "summary.txt", summary.items())
        return summary

    try:
        if command == "discrete":
            _run_discrete(exp, out, summary, checks)
        else:
            traj = integrate(exp.spec, exp.schedule, exp.u0, exp.v0, exp.integrator)
            csvio.write_trajectory_csv(traj, out / "trajectory.csv")
            if command == "rate":
                _run_rate(exp, traj, out, summary, checks)
            else:
                _continuous_diagnostics(exp, traj, out, summary, checks)
            if command == "compare":
                hist = _run_discrete(exp, out, summary, checks)
                cmp = compare_discrete_continuous(hist, traj, exp.cfg.diag("compare_tol"))
                summary["final_gap"] = cmp.final_gap
                summary["same_limit"] = cmp.same_limit
                checks["same_limit"] = cmp.same_limit
                csvio.write_csv(
                    out / "compare.csv",
                    ["final_gap", "same_limit", "discrete_distance", "continuous_distance"],
                    [[cmp.final_gap, float(cmp.same_limit),
                      np.linalg.norm(hist.final - exp.x_star),
                      np.linalg.norm(traj.x[-1] - exp.x_star)]],
                )
    except AssumptionViolation as exc:
        summary["violated"] = exc.report.violated
        summary["exit_code"] = EXIT_ASSUMPTION
        _write_lines(out / "summary.txt", summary.items())
        return summary

    for name, ok in checks.items():
        summary[f"check_{name}"] = bool(ok)
    summary["contractual"] = contractual
    passed = all(checks.values())
    summary["exit_code"] = EXIT_OK if passed else EXIT_DIAGNOSTICS
    _write_lines(out / "summary.txt", summary.items())
    return summary
