"""Command line front end.

Runs one of the named benchmark problems with the damped Newton driver and
writes three artifacts into the output directory:

- ``iterates.csv``: one row per outer iteration,
- ``curve.csv``: the final nodal data,
- ``meta.txt``: every resolved parameter plus ``result_*`` summary keys; the
  file doubles as a ``--config`` input that reproduces the run.

Exit codes: 0 converged, 2 damping failed, 3 iteration limit, 4 bad
configuration, 1 unexpected runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .fem1d import Grid
from .newton import NewtonConfig, Termination, damped_newton
from .problems import (
    GeodesicForceProblem,
    ObstacleProblem,
    RodProblem,
    obstacle_path_follow,
)
from .problems import geodesic as _geodesic_defaults
from .problems import obstacle as _obstacle_defaults
from .problems import rod as _rod_defaults

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_DAMPING_FAILED = 2
EXIT_MAX_ITERATIONS = 3
EXIT_CONFIG = 4

_EXIT_BY_TERMINATION = {
    Termination.CONVERGED: EXIT_OK,
    Termination.DAMPING_FAILED: EXIT_DAMPING_FAILED,
    Termination.MAX_ITERATIONS: EXIT_MAX_ITERATIONS,
}

PROBLEMS = ("geodesic-force", "obstacle", "rod")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    problem: str = ""
    n: int = 100
    t_end: float = 1.0
    tol: float = 1e-10
    theta_des: float = 0.5
    theta_acc: float = 0.9
    alpha0: float = 1.0
    alpha_fail: float = 1e-8
    max_outer: int = 50
    max_inner: int = 20
    force_scale: float = 3.0
    h_ref: float = 0.1
    p0: float = 1.0
    p_growth: float = 1.2
    violation_tol: float = 1e-3
    sigma: float = 1.0
    gamma0: tuple | None = None
    gammaT: tuple | None = None
    y0: tuple | None = None
    y1: tuple | None = None
    v0: tuple | None = None
    v1: tuple | None = None
    out_dir: str = "out"
    seed: int = 0

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; expected one of {PROBLEMS}")
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if self.t_end <= 0:
            raise ConfigError("t_end must be positive")
        try:
            self.newton_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.problem == "obstacle" and not 0.0 < self.h_ref < 1.0:
            raise ConfigError("h_ref must lie in (0, 1)")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")

    def newton_config(self) -> NewtonConfig:
        return NewtonConfig(
            tol=self.tol,
            theta_des=self.theta_des,
            theta_acc=self.theta_acc,
            alpha0=self.alpha0,
            alpha_fail=self.alpha_fail,
            max_outer=self.max_outer,
            max_inner=self.max_inner,
        )


_TRIPLE_KEYS = {"gamma0", "gammaT", "y0", "y1", "v0", "v1"}
_INT_KEYS = {"n", "max_outer", "max_inner", "seed"}


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _parse_triple(text: str) -> tuple:
    parts = [p for p in text.replace("(", "").replace(")", "").split(",") if p.strip()]
    if len(parts) != 3:
        raise ConfigError(f"expected three comma separated numbers, got {text!r}")
    return tuple(float(p) for p in parts)


def parse_config_file(path) -> dict:
    """Parse a flat ``key = value`` file; ``result_*`` keys are ignored."""
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.startswith("result_"):
            continue
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown configuration key {key!r}")
        if key == "problem" or key == "out_dir":
            out[key] = value
        elif key in _TRIPLE_KEYS:
            out[key] = _parse_triple(value)
        elif key in _INT_KEYS:
            out[key] = int(value)
        else:
            out[key] = float(value)
    return out


def _resolved_entries(cfg: RunConfig) -> list:
    """All parameters as (key, value-string) pairs, defaults resolved."""
    entries = [("problem", cfg.problem)]
    for name in ("n", "max_outer", "max_inner", "seed"):
        entries.append((name, str(getattr(cfg, name))))
    for name in (
        "t_end", "tol", "theta_des", "theta_acc", "alpha0", "alpha_fail",
        "force_scale", "h_ref", "p0", "p_growth", "violation_tol", "sigma",
    ):
        entries.append((name, _fmt(getattr(cfg, name))))
    defaults = {
        "gamma0": _geodesic_defaults.DEFAULT_GAMMA0
        if cfg.problem == "geodesic-force"
        else _obstacle_defaults.DEFAULT_GAMMA0,
        "gammaT": _geodesic_defaults.DEFAULT_GAMMAT
        if cfg.problem == "geodesic-force"
        else _obstacle_defaults.DEFAULT_GAMMAT,
        "y0": _rod_defaults.DEFAULT_Y0,
        "y1": _rod_defaults.DEFAULT_Y1,
        "v0": _rod_defaults.DEFAULT_V0,
        "v1": _rod_defaults.DEFAULT_V1,
    }
    for name in ("gamma0", "gammaT", "y0", "y1", "v0", "v1"):
        value = getattr(cfg, name)
        if value is None:
            value = defaults[name]
        entries.append((name, ",".join(_fmt(c) for c in value)))
    entries.append(("out_dir", cfg.out_dir))
    return entries


def _write_iterates(path, rows) -> None:
    header = "outer_iter,norm_dx_inf,accepted_alpha,inner_trials,theta_final,residual_inf"
    lines = [header]
    for k, it in enumerate(rows, start=1):
        lines.append(
            f"{k},{_fmt(it.norm_dx)},{_fmt(it.accepted_alpha)},"
            f"{it.inner_trials},{_fmt(it.theta_final)},{_fmt(it.residual_inf)}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _write_curve(path, ts, columns, header) -> None:
    lines = [header]
    for k, t in enumerate(ts):
        vals = [t] + [col[k] for col in columns]
        lines.append(",".join(_fmt(v) for v in vals))
    Path(path).write_text("\n".join(lines) + "\n")


def _write_meta(path, cfg: RunConfig, results: dict) -> None:
    lines = [f"{key} = {value}" for key, value in _resolved_entries(cfg)]
    lines.extend(f"result_{key} = {value}" for key, value in results.items())
    Path(path).write_text("\n".join(lines) + "\n")


def run(cfg: RunConfig) -> int:
    """Execute one configured solver run and write the output artifacts."""
    cfg.validate()
    out_dir = Path(cfg.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {cfg.out_dir!r} is not writable: {exc}") from exc

    grid = Grid(cfg.t_end, cfg.n)
    newton_cfg = cfg.newton_config()
    results: dict = {}

    if cfg.problem == "geodesic-force":
        problem = GeodesicForceProblem(
            grid, gamma0=cfg.gamma0, gammaT=cfg.gammaT, force_scale=cfg.force_scale
        )
        final, trace = damped_newton(problem, problem.initial_curve(), newton_cfg)
        iterations = trace.iterations
        termination = trace.terminated
        message = trace.message
        curve_cols = [final.points[:, k] for k in range(3)]
        curve_header = "t,x,y,z"
    elif cfg.problem == "obstacle":
        problem = ObstacleProblem(
            grid,
            gamma0=cfg.gamma0,
            gammaT=cfg.gammaT,
            h_ref=cfg.h_ref,
            p=cfg.p0,
            p_growth=cfg.p_growth,
            violation_tol=cfg.violation_tol,
        )
        result = obstacle_path_follow(problem, newton_cfg)
        final = result.curve
        iterations = [it for stage in result.stages for it in stage.trace.iterations]
        termination = (
            Termination.CONVERGED if result.converged else result.stages[-1].trace.terminated
        )
        message = result.message
        curve_cols = [final.points[:, k] for k in range(3)]
        curve_header = "t,x,y,z"
        results["stage_count"] = str(len(result.stages))
        results["final_p"] = _fmt(result.final_penalty)
        results["violation"] = _fmt(result.violation)
    else:
        problem = RodProblem(
            grid, y0=cfg.y0, y1=cfg.y1, v0=cfg.v0, v1=cfg.v1, sigma=cfg.sigma
        )
        final, trace = damped_newton(problem, problem.initial_state(), newton_cfg)
        iterations = trace.iterations
        termination = trace.terminated
        message = trace.message
        # the P0 multiplier is repeated at the right node of its interval;
        # node 0 repeats the first interval
        lam_at_nodes = np.vstack([final.lam[:1], final.lam])
        curve_cols = (
            [final.y[:, k] for k in range(3)]
            + [final.v[:, k] for k in range(3)]
            + [lam_at_nodes[:, k] for k in range(3)]
        )
        curve_header = "t,x,y,z,vx,vy,vz,lx,ly,lz"
        results["constraint_inf"] = _fmt(np.abs(final.constraint_residuals()).max())

    results["status"] = termination.value
    results["outer_iterations"] = str(len(iterations))
    if iterations:
        results["final_norm_dx"] = _fmt(iterations[-1].norm_dx)
        results["final_residual_inf"] = _fmt(iterations[-1].residual_inf)
    if message:
        results["message"] = message

    _write_iterates(out_dir / "iterates.csv", iterations)
    _write_curve(out_dir / "curve.csv", grid.nodes, curve_cols, curve_header)
    _write_meta(out_dir / "meta.txt", cfg, results)

    exit_code = _EXIT_BY_TERMINATION[termination]
    print(
        f"{cfg.problem}: {termination.value} after {len(iterations)} outer iterations"
        + (f" ({message})" if message else "")
    )
    print(f"artifacts written to {out_dir}")
    return exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bundle-newton",
        description="Damped Newton solver for the built-in manifold variational problems.",
    )
    parser.add_argument("problem", choices=PROBLEMS)
    parser.add_argument("--config", type=str, default=None, help="flat key=value file; flags override it")
    parser.add_argument("--n", type=int, default=None, help="number of interior grid nodes")
    parser.add_argument("--t-end", dest="t_end", type=float, default=None)
    parser.add_argument("--tol", type=float, default=None)
    parser.add_argument("--theta-des", dest="theta_des", type=float, default=None)
    parser.add_argument("--theta-acc", dest="theta_acc", type=float, default=None)
    parser.add_argument("--alpha0", type=float, default=None)
    parser.add_argument("--alpha-fail", dest="alpha_fail", type=float, default=None)
    parser.add_argument("--max-outer", dest="max_outer", type=int, default=None)
    parser.add_argument("--max-inner", dest="max_inner", type=int, default=None)
    parser.add_argument("--force-scale", dest="force_scale", type=float, default=None)
    parser.add_argument("--h-ref", dest="h_ref", type=float, default=None)
    parser.add_argument("--p0", type=float, default=None)
    parser.add_argument("--p-growth", dest="p_growth", type=float, default=None)
    parser.add_argument("--violation-tol", dest="violation_tol", type=float, default=None)
    parser.add_argument("--sigma", type=float, default=None)
    parser.add_argument("--gamma0", type=str, default=None, help="boundary point, e.g. 0.8,0,0.6")
    parser.add_argument("--gammaT", dest="gammaT", type=str, default=None)
    parser.add_argument("--y0", type=str, default=None, help="rod start position")
    parser.add_argument("--y1", type=str, default=None, help="rod end position")
    parser.add_argument("--v0", type=str, default=None, help="rod start direction")
    parser.add_argument("--v1", type=str, default=None, help="rod end direction")
    parser.add_argument("--out-dir", dest="out_dir", type=str, default=None)
    parser.add_argument("--seed", type=int, default=None, help="recorded for randomized tooling; unused by the solver")
    return parser


def config_from_args(args) -> RunConfig:
    cfg = RunConfig(problem=args.problem)
    if args.config is not None:
        file_values = parse_config_file(args.config)
        cfg = replace(cfg, **{k: v for k, v in file_values.items() if k != "problem"})
        if "problem" in file_values and file_values["problem"] != args.problem:
            raise ConfigError(
                f"config file names problem {file_values['problem']!r}, "
                f"command line says {args.problem!r}"
            )
    for field_ in fields(RunConfig):
        if field_.name in ("problem",):
            continue
        value = getattr(args, field_.name, None)
        if value is None:
            continue
        if field_.name in _TRIPLE_KEYS:
            value = _parse_triple(value)
        setattr(cfg, field_.name, value)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return run(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # solver-level failures: singular systems etc.
        print(f"run failed ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
