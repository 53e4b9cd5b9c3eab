"""Command-line interface.

    falva ops      --config problem.yaml [--out DIR]
    falva minimize --config problem.yaml [--out DIR]
    falva verify   --suite NAME [--seed N] [--out DIR]

Exit codes: 0 success, 1 validation or usage error, 2 solver did not
converge, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .action import Lagrangian, free_particle, linear_velocity, oscillator
from .grid import DomainError, Grid, OrderSpec, make_grid, sample
from .ops import combined_derivative, left_rl_derivative, right_rl_derivative
from .solver import NumericalFailure, SolveOptions, minimize_action
from .verify import SUITES, run_suite

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED, EXIT_NUMERICAL = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


LAGRANGIANS = {
    "free": (free_particle, {"mass"}),
    "oscillator": (oscillator, {"mass", "stiffness"}),
    "linear-velocity": (linear_velocity, {"a", "b", "c"}),
}

FUNCTIONS = {
    "zero": lambda p: (lambda t: 0.0),
    "identity": lambda p: (lambda t: t),
    "power": lambda p: (lambda t: t ** p.get("exponent", 1.0)),
    "bump": lambda p: (lambda t: t * (1 - t)),
    "cos": lambda p: math.cos,
    "sin": lambda p: math.sin,
    "exp": lambda p: math.exp,
}


def fmt(x: float) -> str:
    """Round-trip decimal with 17 significant digits."""
    return format(float(x), ".17g")


# {{{ config


@dataclass(frozen=True)
class ProblemConfig:
    interval: tuple[float, float]
    n_points: int
    t_obs: float
    alpha: float
    beta: float
    gamma: complex
    lagrangian: str = "free"
    coefficients: dict = field(default_factory=dict)
    boundary: tuple[float, float] = (0.0, 1.0)
    function: str = "identity"
    function_params: dict = field(default_factory=dict)
    solver: SolveOptions = field(default_factory=SolveOptions)
    output: str = "falva-out"

    @property
    def grid(self) -> Grid:
        return make_grid(self.interval[0], self.interval[1], self.n_points, self.t_obs)

    @property
    def order(self) -> OrderSpec:
        return OrderSpec(self.alpha, self.beta, self.gamma)

    def build_lagrangian(self) -> Lagrangian:
        factory, _ = LAGRANGIANS[self.lagrangian]
        return factory(**self.coefficients)


_TOP_KEYS = {
    "interval", "n_points", "t_obs", "alpha", "beta", "gamma", "lagrangian",
    "boundary", "function", "solver", "output",
}
_SOLVER_KEYS = {"max_iterations", "gradient_tolerance", "shrink", "sufficient_decrease"}


def _number(data: dict, key: str, default=None) -> float:
    if key not in data:
        if default is None:
            raise ConfigError(f"missing required field '{key}'")
        return default
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field '{key}' must be a number, got {value!r}")
    return float(value)


def _pair(data: dict, key: str, default=None) -> tuple[float, float]:
    if key not in data:
        if default is None:
            raise ConfigError(f"missing required field '{key}'")
        return default
    value = data[key]
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ConfigError(f"field '{key}' must be a two-element list, got {value!r}")
    try:
        return float(value[0]), float(value[1])
    except (TypeError, ValueError):
        raise ConfigError(f"field '{key}' must hold numbers, got {value!r}") from None


def parse_config(data: dict) -> ProblemConfig:
    """Validate a config mapping against the grid and order invariants."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown field '{sorted(unknown)[0]}'")

    interval = _pair(data, "interval")
    n_points = _number(data, "n_points")
    if n_points != int(n_points):
        raise ConfigError("field 'n_points' must be an integer")
    t_obs = _number(data, "t_obs", interval[1])
    alpha = _number(data, "alpha")
    beta = _number(data, "beta", alpha)
    gamma = complex(*_pair(data, "gamma", (0.0, -1.0)))

    lag = data.get("lagrangian", {"name": "free"})
    if isinstance(lag, str):
        lag = {"name": lag}
    name = lag.get("name", "free")
    if name not in LAGRANGIANS:
        raise ConfigError(f"field 'lagrangian.name' must be one of {sorted(LAGRANGIANS)}, got {name!r}")
    coefficients = dict(lag.get("coefficients", {}) or {})
    allowed = LAGRANGIANS[name][1]
    for key, value in coefficients.items():
        if key not in allowed:
            raise ConfigError(f"field 'lagrangian.coefficients.{key}' not valid for {name!r}")
        _number(coefficients, key)
    coefficients = {k: float(v) for k, v in coefficients.items()}

    fn = data.get("function", {"name": "identity"})
    if isinstance(fn, str):
        fn = {"name": fn}
    fname = fn.get("name", "identity")
    if fname not in FUNCTIONS:
        raise ConfigError(f"field 'function.name' must be one of {sorted(FUNCTIONS)}, got {fname!r}")
    fparams = {}
    for key in fn:
        if key == "name":
            continue
        if key != "exponent":
            raise ConfigError(f"unknown field 'function.{key}'")
        fparams[key] = _number(fn, key)

    solver = data.get("solver", {}) or {}
    bad = set(solver) - _SOLVER_KEYS
    if bad:
        raise ConfigError(f"unknown field 'solver.{sorted(bad)[0]}'")
    try:
        opts = SolveOptions(
            max_iterations=int(_number(solver, "max_iterations", 500)),
            gradient_tolerance=_number(solver, "gradient_tolerance", 1e-8),
            shrink=_number(solver, "shrink", 0.5),
            sufficient_decrease=_number(solver, "sufficient_decrease", 1e-4),
        )
    except DomainError as exc:
        raise ConfigError(f"field 'solver': {exc}") from None

    cfg = ProblemConfig(
        interval=interval,
        n_points=int(n_points),
        t_obs=t_obs,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        lagrangian=name,
        coefficients=coefficients,
        boundary=_pair(data, "boundary", (0.0, 1.0)),
        function=fname,
        function_params=fparams,
        solver=opts,
        output=str(data.get("output", "falva-out")),
    )
    try:
        cfg.grid
    except DomainError as exc:
        raise ConfigError(f"fields 'interval'/'n_points'/'t_obs': {exc}") from None
    try:
        cfg.order
    except DomainError as exc:
        raise ConfigError(f"fields 'alpha'/'beta'/'gamma': {exc}") from None
    return cfg


def load_config(path: str | os.PathLike) -> ProblemConfig:
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    return parse_config(data)


# }}}


# {{{ output


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_csv(path: Path, header: list[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    _atomic_write(path, buf.getvalue())


def write_report(path: Path, report: dict) -> None:
    _atomic_write(path, json.dumps(report, indent=2, sort_keys=True) + "\n")


def _scalar_column(values: np.ndarray) -> np.ndarray:
    return values if values.ndim == 1 else values[:, 0]


# }}}


# {{{ commands


def cmd_ops(cfg: ProblemConfig, out: Path) -> int:
    grid = cfg.grid
    f = sample(FUNCTIONS[cfg.function](cfg.function_params), grid)
    left = _scalar_column(left_rl_derivative(f, cfg.alpha).values)
    right = _scalar_column(right_rl_derivative(f, cfg.beta).values)
    comb = _scalar_column(combined_derivative(f, cfg.order).values)
    rows = (
        [j, fmt(f.values[j].real), fmt(left[j].real), fmt(right[j].real), fmt(comb[j].real), fmt(comb[j].imag)]
        for j in range(grid.n_points)
    )
    write_csv(
        out / "ops.csv",
        ["node", "input", "left_derivative", "right_derivative", "combined_real", "combined_imag"],
        rows,
    )
    return EXIT_OK


def cmd_minimize(cfg: ProblemConfig, out: Path) -> int:
    grid = cfg.grid
    try:
        report = minimize_action(
            cfg.build_lagrangian(), cfg.order, grid, cfg.boundary[0], cfg.boundary[1], cfg.solver
        )
    except NumericalFailure as exc:
        write_report(out / "report.json", {
            "status": "numerical-failure",
            "message": str(exc),
            "iterate": [fmt(x) for x in np.ravel(np.real(exc.iterate))],
        })
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    path = _scalar_column(np.real(report.final_path.values))
    write_csv(
        out / "path.csv",
        ["node", "tau", "q"],
        ([j, fmt(t), fmt(x)] for j, (t, x) in enumerate(zip(grid.nodes, path))),
    )
    write_report(out / "report.json", {
        "status": "converged" if report.converged else "not-converged",
        "converged": report.converged,
        "iterations": report.iterations,
        "method": report.method,
        "final_action_real": fmt(report.final_action.real),
        "final_action_imag": fmt(report.final_action.imag),
        "gradient_norm": fmt(report.gradient_norm),
        "el_residual_norm": fmt(report.el_residual_norm),
        "lagrangian": cfg.lagrangian,
        "coefficients": {k: fmt(v) for k, v in sorted(cfg.coefficients.items())},
        "alpha": fmt(cfg.alpha),
        "beta": fmt(cfg.beta),
        "gamma": [fmt(cfg.gamma.real), fmt(cfg.gamma.imag)],
        "interval": [fmt(cfg.interval[0]), fmt(cfg.interval[1])],
        "n_points": cfg.n_points,
        "t_obs": fmt(cfg.t_obs),
        "boundary": [fmt(cfg.boundary[0]), fmt(cfg.boundary[1])],
    })
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_verify(suite: str, seed: int, out: Path) -> int:
    results = run_suite(suite, seed)
    rows = []
    for r in results:
        rows.append([
            r.suite, r.case, "pass" if r.passed else "fail",
            " ".join(fmt(m) for m in r.measured), fmt(r.threshold), fmt(r.order),
        ])
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.suite}: {r.case}")
    write_csv(out / f"verify-{suite}.csv",
              ["suite", "case", "status", "measured", "threshold", "observed_order"], rows)
    all_passed = all(r.passed for r in results)
    write_report(out / f"verify-{suite}.json", {
        "suite": suite,
        "seed": seed,
        "cases": len(results),
        "failed": sum(not r.passed for r in results),
        "passed": all_passed,
    })
    return EXIT_OK if all_passed else EXIT_NUMERICAL


# }}}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="falva", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_ in (("ops", "tabulate fractional derivatives"),
                        ("minimize", "minimize the discrete action")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="YAML problem file")
        p.add_argument("--out", help="output directory (default: config 'output')")

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", required=True, choices=sorted(SUITES))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="falva-out")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        if not 0 <= args.seed < 2**64:
            print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
            return EXIT_USAGE
        return cmd_verify(args.suite, args.seed, Path(args.out))

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out or cfg.output)
    if args.command == "ops":
        return cmd_ops(cfg, out)
    if not (cfg.order.is_left or cfg.order.is_right):
        print("error: field 'gamma' must be [0, -1] or [0, 1] for minimize", file=sys.stderr)
        return EXIT_USAGE
    return cmd_minimize(cfg, out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
