"""Command-line batch runner: build a scenario, integrate, verify, write artifacts.

Exit codes: 0 all requested suites pass, 1 a suite failed, 2 configuration
error, 3 the integration diverged.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .dynamics import simulate
from .errors import DivergedAt, InvalidParameter, UnknownScenario, ZeroTemperature
from .reduction import simulate_reduced
from .scenarios import build, describe, scenario_names
from .verify import CHECKS, VerificationReport, check_axioms, check_casimirs, check_equivalence, check_jacobi, check_laws

SUITES = ["laws", "axioms", "equivalence", "jacobi", "casimir"]
CONFIG_KEYS = {"scenario", "params", "h", "t_end", "stride", "suites", "seed", "out", "sabotage",
               "n_states", "n_observables"}
SEED_ENV = "METRIPLEX_SEED"

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    scenario: str
    params: dict = field(default_factory=dict)
    h: Optional[float] = None
    t_end: Optional[float] = None
    stride: int = 1
    suites: list = field(default_factory=lambda: list(SUITES))
    seed: int = 0
    out: str = "metriplex_out"
    sabotage: bool = False
    n_states: int = 100
    n_observables: int = 20

    def validate(self):
        if self.h is not None and not self.h > 0:
            raise ConfigError("h must be > 0")
        if self.t_end is not None and not self.t_end > 0:
            raise ConfigError("t_end must be > 0")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        if self.n_states < 1 or self.n_observables < 3:
            raise ConfigError("need n_states >= 1 and n_observables >= 3")
        bad = [s for s in self.suites if s not in SUITES]
        if bad:
            raise ConfigError(f"unknown suite(s) {bad}; choose from {SUITES + ['all']}")
        return self


def _expand_suites(suites) -> list:
    out = []
    for s in suites:
        for name in (SUITES if s == "all" else [s]):
            if name not in out:
                out.append(name)
    return out


def _parse_param(text: str):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"--param expects key=value, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise ConfigError(f"--param {key}: value {value!r} is not a number") from None


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def load_config(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(data) - CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config key(s): {unknown}")
    if args.scenario is not None:
        data["scenario"] = args.scenario
    for key in ("h", "t_end", "stride", "seed", "out", "n_states", "n_observables"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.suite:
        data["suites"] = args.suite
    if args.sabotage:
        data["sabotage"] = True
    params = dict(data.get("params") or {})
    if not isinstance(params, dict):
        raise ConfigError("params must be an object")
    for item in args.param or []:
        k, v = _parse_param(item)
        params[k] = v
    data["params"] = params
    if "scenario" not in data:
        raise ConfigError("no scenario given (config key 'scenario' or --scenario)")
    if "seed" not in data:
        data["seed"] = _default_seed()
    suites = data.get("suites", ["all"])
    if isinstance(suites, str):
        suites = [suites]
    data["suites"] = _expand_suites(suites)
    try:
        cfg = RunConfig(
            scenario=str(data["scenario"]),
            params=params,
            h=None if data.get("h") is None else float(data["h"]),
            t_end=None if data.get("t_end") is None else float(data["t_end"]),
            stride=int(data.get("stride", 1)),
            suites=data["suites"],
            seed=int(data["seed"]),
            out=str(data.get("out", "metriplex_out")),
            sabotage=bool(data.get("sabotage", False)),
            n_states=int(data.get("n_states", 100)),
            n_observables=int(data.get("n_observables", 20)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from None
    return cfg.validate()


def execute(cfg: RunConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        spec = build(cfg.scenario, cfg.params, sabotage=cfg.sabotage)
    except (UnknownScenario, InvalidParameter) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONFIG
    h = cfg.h if cfg.h is not None else spec.h
    t_end = cfg.t_end if cfg.t_end is not None else spec.t_end
    system = spec.system
    try:
        if spec.kind == "thermo":
            traj = simulate(system, spec.initial_state, t_end, h, stride=cfg.stride)
        else:
            traj = simulate_reduced(system, spec.initial_state, t_end, h, stride=cfg.stride)
    except (DivergedAt, ZeroTemperature) as exc:
        print(f"error: integration diverged at t={exc.t}: {exc}", file=stderr)
        return EXIT_DIVERGED

    report = VerificationReport(cfg.seed, system.name, meta={
        "scenario": spec.name,
        "params": spec.params,
        "sabotage": cfg.sabotage,
        "h": h,
        "t_end": t_end,
        "stride": cfg.stride,
        "suites": cfg.suites,
        "gradient_mode": system.gradient_mode,
    })
    for suite in cfg.suites:
        if suite == "laws":
            report.extend(check_laws(traj, seed=cfg.seed, system=system.name))
        elif suite == "axioms":
            report.extend(check_axioms(system, cfg.n_states, cfg.n_observables, cfg.seed))
        elif suite == "equivalence":
            report.extend(check_equivalence(system, cfg.n_states, cfg.seed))
        elif suite == "jacobi":
            report.extend(check_jacobi(system, seed=cfg.seed))
        elif suite == "casimir" and spec.casimirs_preserved is not None:
            report.extend(check_casimirs(traj, system.casimirs, spec.casimirs_preserved, cfg.seed, system.name))

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    traj.to_csv(out / "trajectory.csv")
    (out / "report.json").write_text(report.to_json())
    summary = report.summary()
    (out / "summary.txt").write_text(summary)
    print(summary, end="", file=stdout)
    return EXIT_OK if report.passed else EXIT_FAIL


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return execute(cfg)


def _cmd_list(args) -> int:
    for name in scenario_names():
        spec = build(name)
        params = ", ".join(f"{k}={v:g}" for k, v in spec.params.items())
        print(f"{name}\n    {describe(name)}\n    h={spec.h:g} t_end={spec.t_end:g}\n    params: {params}")
    return EXIT_OK


def _cmd_explain(args) -> int:
    if args.check not in CHECKS:
        print(f"error: unknown check {args.check!r}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{args.check}: {CHECKS[args.check]}")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metriplex", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and its verification suites")
    run.add_argument("config", nargs="?", help="JSON config file")
    run.add_argument("--scenario")
    run.add_argument("--h", type=float)
    run.add_argument("--t-end", dest="t_end", type=float)
    run.add_argument("--stride", type=int)
    run.add_argument("--seed", type=int, help=f"default: ${SEED_ENV} or 0")
    run.add_argument("--suite", action="append", choices=SUITES + ["all"],
                     help="repeatable; default all")
    run.add_argument("--out", help="output directory (default metriplex_out)")
    run.add_argument("--param", action="append", metavar="KEY=VALUE", help="scenario parameter override")
    run.add_argument("--sabotage", action="store_true", help="flip the sign of the dissipative law")
    run.add_argument("--n-states", dest="n_states", type=int)
    run.add_argument("--n-observables", dest="n_observables", type=int)
    run.set_defaults(func=_cmd_run)

    ls = sub.add_parser("list-scenarios", help="list built-in scenarios and their parameters")
    ls.set_defaults(func=_cmd_list)

    ex = sub.add_parser("explain", help="describe what a named check verifies")
    ex.add_argument("check")
    ex.set_defaults(func=_cmd_explain)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
