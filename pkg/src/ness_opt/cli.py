"""Command-line runner: ``ness-opt steady|grad|optimize|sensitivity``.

Exit codes: 0 success, 2 invalid configuration, 3 steady state not reached
(or every optimization restart failed), 4 finite-difference check failed.
Data files are deterministic for a given config and seed; wall-clock
timestamps go to ``run_meta.json`` only.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from . import schemas
from .implicit import BACKENDS, SteadyStateError, observable_gradient, steady_state
from .linalg import DensityState, NonUniqueSteadyStateError
from .models.redfield import HEAT_PARAMS, HeatModel, HeatModelParams
from .models.vsystem import V_PARAMS, VModelParams, VSystemModel, pump_sensitivity
from .ode import IntegrationError
from .optimize import make_objective, optimize_restarts
from .oracle import affine_steady, fd_gradient, nullspace_steady, relative_error

__all__ = ["main", "build_parser", "load_config", "EXIT_OK", "EXIT_CONFIG", "EXIT_NONCONVERGED", "EXIT_FD"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_FD = 4

FD_TOLERANCE = 1e-4
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
# log-uniform band of optimized recombination rates
GAMMA_BAND = (-8.73, -7.30)

log = logging.getLogger("ness_opt")


# -- configuration ------------------------------------------------------------


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError as exc:
        raise schemas.ConfigError("/", f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise schemas.ConfigError("/", f"invalid JSON: {exc}") from exc
    schemas.validate_config(cfg)
    return cfg


def _heat_params(raw: dict) -> HeatModelParams:
    raw = dict(raw)
    if "theta" in raw:
        for key in ("theta1", "theta2"):
            if key in raw:
                raise schemas.ConfigError(f"/params/{key}", "give either theta or theta1/theta2")
        raw["theta1"] = raw["theta2"] = raw.pop("theta")
    return HeatModelParams(**raw)


def _v_params(raw: dict) -> VModelParams:
    raw = dict(raw)
    for name in ("gamma_d", "Gamma"):
        ln = f"ln_{name}"
        if ln in raw:
            if name in raw:
                raise schemas.ConfigError(f"/params/{ln}", f"give either {name} or {ln}")
            raw[name] = float(np.exp(raw.pop(ln)))
    return VModelParams(**raw)


def build_model(cfg: dict):
    """Model with the configured parameters and active set."""
    raw = cfg.get("params", {})
    try:
        if cfg["model"] == "heat":
            model = HeatModel(_heat_params(raw), tuple(cfg.get("active", HEAT_PARAMS)))
        else:
            model = VSystemModel(_v_params(raw), tuple(cfg.get("active", V_PARAMS)))
    except schemas.ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        key = "/active" if "unknown" in str(exc) else "/params"
        raise schemas.ConfigError(key, str(exc)) from exc
    return model


def _default_observable(model) -> str:
    return "J_H" if model.name == "heat" else "eta_loc"


def _params_record(model) -> dict:
    p = model.params
    out = {f.name: float(getattr(p, f.name)) for f in fields(p)}
    if model.name == "vsystem":
        for name in ("gamma_d", "Gamma"):
            if out[name] > 0:
                out[f"ln_{name}"] = float(np.log(out[name]))
    return out


# -- output -------------------------------------------------------------------


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return "" if x is None else x


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])


# -- commands -----------------------------------------------------------------


def cmd_steady(cfg: dict, args) -> int:
    model = build_model(cfg)
    theta = model.theta0()
    try:
        ss = steady_state(model, theta, args.backend)
    except (IntegrationError, NonUniqueSteadyStateError) as exc:
        log.error("steady state failed: %s", exc)
        return EXIT_NONCONVERGED
    obs_names = ("J_H", "J_C", "J_D") if model.name == "heat" else ("eta_loc", "rho_2", "p_plus", "p_minus")
    observables = {n: float(model.observable(n)(ss.state, theta)) for n in obs_names}
    diag = {
        "elapsed_time": float(ss.elapsed_time),
        "blocks_used": int(ss.blocks_used),
        "n_steps": int(ss.n_steps),
        "n_rejected": int(ss.n_rejected),
    }
    if model.name == "heat":
        rho = DensityState(ss.state)
        diag["trace"] = rho.trace
        diag["min_eigenvalue"] = float(rho.eigenvalues().min())
        diag["current_sum"] = float(sum(observables.values()))
    else:
        diag["rho_gg"] = float(1.0 - ss.state[0] - ss.state[1])
    report = {
        "schema_version": schemas.SCHEMA_VERSION,
        "command": "steady",
        "model": model.name,
        "backend": args.backend,
        "params": _params_record(model),
        "state": [float(x) for x in ss.state],
        "residual": float(ss.residual),
        "converged": bool(ss.converged),
        "observables": observables,
        "diagnostics": diag,
    }
    schemas.validate_report(report, schemas.STEADY_REPORT_SCHEMA)
    _write_json(args.out / "steady_report.json", report)
    return EXIT_OK if ss.converged else EXIT_NONCONVERGED


def _oracle_value(model, name: str):
    """Observable evaluated on the independent algebraic steady state."""
    g = model.observable(name)

    def value(theta):
        if model.has_gauge:
            rho = nullspace_steady(model.superop(theta))
        else:
            rho = affine_steady(*model.matrices(theta))
        return float(g(rho, theta))

    return value


def cmd_grad(cfg: dict, args) -> int:
    model = build_model(cfg)
    name = cfg.get("observable", _default_observable(model))
    if name not in model.observables():
        raise schemas.ConfigError("/observable", f"unknown observable {name!r}; choose from {sorted(model.observables())}")
    theta = model.theta0()
    try:
        rep = observable_gradient(model, theta, name, args.backend)
    except (SteadyStateError, IntegrationError, NonUniqueSteadyStateError) as exc:
        log.error("gradient failed: %s", exc)
        return EXIT_NONCONVERGED
    names = model.param_names
    report = {
        "schema_version": schemas.SCHEMA_VERSION,
        "command": "grad",
        "model": model.name,
        "backend": args.backend,
        "params": _params_record(model),
        "observable": name,
        "value": float(rep.value),
        "gradient": {n: float(g) for n, g in zip(names, rep.gradient)},
        "adjoint_residual": float(rep.adjoint_residual),
        "steady_solves": int(rep.steady_solves),
    }
    code = EXIT_OK
    if args.check_fd:
        fd = fd_gradient(_oracle_value(model, name), theta, names=names)
        err = relative_error(rep.gradient, fd)
        max_err = float(np.max(err)) if err.size else 0.0
        passed = bool(max_err <= FD_TOLERANCE)
        report["fd_check"] = {
            "fd_gradient": {n: float(v) for n, v in zip(names, fd)},
            "relative_error": {n: float(v) for n, v in zip(names, err)},
            "max_relative_error": max_err,
            "passed": passed,
        }
        _write_csv(
            args.out / "fd_check.csv",
            ("parameter", "implicit", "finite_difference", "relative_error"),
            zip(names, rep.gradient, fd, err),
        )
        if not passed:
            log.error("finite-difference check failed: max relative error %.3e", max_err)
            code = EXIT_FD
    schemas.validate_report(report, schemas.GRAD_REPORT_SCHEMA)
    _write_json(args.out / "grad_report.json", report)
    return code


def _seeds(opt: dict) -> list[int]:
    seeds = opt.get("seeds", 20)
    return list(range(seeds)) if isinstance(seeds, int) else [int(s) for s in seeds]


def _scatter_axes(objective: str) -> tuple[str, str]:
    return ("J", "eps_gap") if objective == "eta_loc" else ("theta", "J")


def cmd_optimize(cfg: dict, args) -> int:
    opt = cfg.get("optimize")
    if opt is None:
        raise schemas.ConfigError("/optimize", "optimize section is required")
    objective = opt["objective"]
    expected = "vsystem" if objective == "eta_loc" else "heat"
    if cfg["model"] != expected:
        raise schemas.ConfigError("/optimize/objective", f"objective {objective} needs model {expected!r}")
    model = build_model(cfg)
    seeds = _seeds(opt)
    master_seed = args.seed if args.seed is not None else int(opt.get("master_seed", 0))
    kw = {"max_iters": int(opt.get("max_iters", 200)), "master_seed": master_seed}
    if "target" in opt:
        kw["target"] = float(opt["target"])
    if "lr" in opt:
        kw["lr"] = float(opt["lr"])
    runs = optimize_restarts(
        objective, seeds, parallel=args.parallel, backend=args.backend, objective_kwargs={"base": model.params}, **kw
    )
    obj = make_objective(objective, args.backend, base=model.params)
    names = list(obj.spec.names)
    xa, ya = _scatter_axes(objective)

    summary, scatter_rows, conv_rows = [], [], []
    extra_cols: list[str] = []
    for run in runs:
        traj = [[i, *phys, val, gn] for i, (phys, val, gn) in enumerate(zip(run.physical, run.values, run.grad_norms))]
        _write_csv(
            args.out / "trajectories" / f"seed_{run.seed:04d}.csv",
            ["iteration", *names, objective, "grad_norm"],
            traj,
        )
        conv_rows += [[run.seed, i, v] for i, v in enumerate(run.values)]
        extra: dict = {}
        if run.iterations:
            final = list(run.final_physical)
            extra = obj.summary_fields(run.final_physical)
            if objective == "eta_loc":
                extra["gamma_in_band"] = str(bool(GAMMA_BAND[0] <= extra["ln_Gamma"] <= GAMMA_BAND[1]))
            extra_cols = extra_cols or list(extra)
            fin = dict(zip(names, final))
            scatter_rows.append([run.seed, fin[xa], fin[ya], run.final_value, run.stop_reason])
            head = [run.seed, *final, run.final_value, run.best_value, run.iterations, run.stop_reason]
        else:
            head = [run.seed, *([None] * len(names)), None, None, 0, run.stop_reason]
        summary.append((head, extra, run.error))

    _write_csv(
        args.out / "summary.csv",
        ["seed", *names, objective, f"best_{objective}", "iterations", "stop_reason", *extra_cols, "error"],
        [head + [extra.get(c) for c in extra_cols] + [err] for head, extra, err in summary],
    )
    _write_csv(args.out / "plot_scatter.csv", ["seed", xa, ya, objective, "stop_reason"], scatter_rows)
    _write_csv(args.out / "plot_convergence.csv", ["seed", "iteration", objective], conv_rows)

    n_ok = sum(r.succeeded for r in runs)
    report = {
        "schema_version": schemas.SCHEMA_VERSION,
        "command": "optimize",
        "model": model.name,
        "backend": args.backend,
        "params": _params_record(model),
        "objective": objective,
        "seeds": seeds,
        "master_seed": master_seed,
        "max_iters": kw["max_iters"],
        "n_succeeded": int(n_ok),
        "n_target_reached": int(sum(r.stop_reason == "target_reached" for r in runs)),
        "final_values": {str(r.seed): (r.final_value if r.iterations else None) for r in runs},
    }
    schemas.validate_report(report, schemas.OPTIMIZE_REPORT_SCHEMA)
    _write_json(args.out / "optimize_report.json", report)
    return EXIT_OK if n_ok >= 1 else EXIT_NONCONVERGED


def _r_grid(sens: dict) -> np.ndarray:
    if "r_grid" in sens:
        return np.asarray(sens["r_grid"], dtype=float)
    lo, hi = sens.get("r_min", 1e-10), sens.get("r_max", 2e-9)
    if hi < lo:
        raise schemas.ConfigError("/sensitivity/r_max", "r_max must not be below r_min")
    return np.linspace(lo, hi, int(sens.get("n_points", 20)))


def cmd_sensitivity(cfg: dict, args) -> int:
    if cfg["model"] != "vsystem":
        raise schemas.ConfigError("/model", "sensitivity runs need the vsystem model")
    model = build_model(cfg)
    rows = pump_sensitivity(model.params, _r_grid(cfg.get("sensitivity", {})))
    _write_csv(args.out / "sensitivity.csv", schemas.SENSITIVITY_COLUMNS, rows.tolist())
    return EXIT_OK


COMMANDS = {"steady": cmd_steady, "grad": cmd_grad, "optimize": cmd_optimize, "sensitivity": cmd_sensitivity}


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ness-opt", description="Steady-state gradients and inverse design.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="master seed for restarts")
        p.add_argument("--parallel", type=int, default=1, help="concurrent restarts")
        p.add_argument("--backend", choices=BACKENDS, default=None, help="steady-state/adjoint solver")
        p.add_argument("--check-fd", action="store_true", help="compare against central differences")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    return parser


def _setup_logging() -> None:
    level = os.environ.get("NESS_OPT_LOG", "error").lower()
    if level not in LOG_LEVELS:
        print(f"NESS_OPT_LOG={level!r} not in {sorted(LOG_LEVELS)}; using 'error'", file=sys.stderr)
        level = "error"
    logging.basicConfig(level=LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger("ness_opt").setLevel(LOG_LEVELS[level])


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    started = time.time()
    try:
        cfg = load_config(args.config)
        args.backend = args.backend or cfg.get("backend", "direct")
        if args.parallel < 1:
            raise schemas.ConfigError("/", "--parallel must be at least 1")
        args.out.mkdir(parents=True, exist_ok=True)
        code = COMMANDS[args.command](cfg, args)
    except schemas.ConfigError as exc:
        print(f"config error at {exc.pointer}: {exc.message}", file=sys.stderr)
        return EXIT_CONFIG
    _write_json(
        args.out / "run_meta.json",
        {
            "command": args.command,
            "config": str(args.config),
            "exit_code": code,
            "started": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(started)),
            "wall_seconds": time.time() - started,
            "version": __version__,
        },
    )
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
