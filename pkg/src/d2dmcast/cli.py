"""Command-line front end.

Exit codes: 0 success, 2 user or config error, 3 resource refusal (oracle
cap), 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .channel import InvalidInputError
from .config import ConfigError, RunConfig, load_config, normalize_algorithm
from .experiments import EXPERIMENTS, ExperimentConfig, InternalInvariantError, run_experiment, solve
from .oracle import OracleCapExceeded
from .plan import describe, metrics, plan_from_json, plan_to_dict, validate
from .scenario import generate, scenario_from_json, scenario_to_json

EXIT_OK = 0
EXIT_USER = 2
EXIT_RESOURCE = 3
EXIT_INTERNAL = 4


def _write(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.master_seed = args.seed
    if getattr(args, "trials", None) is not None:
        cfg.trials = args.trials
    if getattr(args, "threads", None) is not None:
        cfg.threads = args.threads
    if getattr(args, "output_dir", None) is not None:
        cfg.output_dir = args.output_dir
    return cfg.check()


def _solver_config(cfg: RunConfig, c: int) -> ExperimentConfig:
    return ExperimentConfig.from_run_config(cfg, (c,), ("channel_gain",))


def cmd_generate(args) -> int:
    cfg = _config(args)
    seed = args.seed if args.seed is not None else cfg.master_seed
    scen, gains = generate(seed, args.c, cfg.radius_m, cfg.params)
    _write(scenario_to_json(scen, gains if args.with_gains else None), args.output)
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = _config(args)
    scen, gains = scenario_from_json(_read(args.scenario))
    alg = normalize_algorithm(args.algorithm)
    scfg = _solver_config(cfg, scen.c)
    scfg.params = scen.params
    scfg.radius_m = scen.radius_m
    plan = solve(alg, gains, scfg)
    violations = validate(plan, gains, cfg.r_min, plan.h_max, scen.params)
    if violations:
        raise InternalInvariantError("; ".join(f"{v.constraint} {v.message}" for v in violations))
    doc = plan_to_dict(plan, gains, cfg.r_min, scen.params)
    m = metrics(plan, gains, cfg.r_min, scen.params)
    doc["algorithm"] = alg
    doc["metrics"] = {
        "total_power_w": m.total_power_w,
        "num_hops": m.num_hops,
        "num_groups": m.num_groups,
        "coverage_by_hop": m.coverage_by_hop,
    }
    _write(json.dumps(doc, indent=2) + "\n", args.output)
    if args.verbose:
        print(describe(plan, gains, cfg.r_min, scen.params), file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _config(args)
    scen, gains = scenario_from_json(_read(args.scenario))
    plan = plan_from_json(_read(args.plan))
    h_max = args.h_max if args.h_max is not None else plan.h_max
    violations = validate(plan, gains, cfg.r_min, h_max, scen.params, strict=args.strict)
    for v in violations:
        print(f"{v.constraint}\t{v.message}")
    if violations:
        print(f"INVALID: {len(violations)} violation(s)", file=sys.stderr)
        return 1
    print("OK", file=sys.stderr)
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _config(args)
    out_dir = cfg.output_dir
    try:
        os.makedirs(out_dir, exist_ok=True)
        probe = os.path.join(out_dir, ".write-test")
        with open(probe, "w"):
            pass
        os.remove(probe)
    except OSError as exc:
        print(f"error: output directory {out_dir!r} is not writable: {exc.strerror}", file=sys.stderr)
        return EXIT_USER
    result, files = run_experiment(args.name, cfg)
    for name, text in files.items():
        _write(text, os.path.join(out_dir, name))
    print(f"wrote {', '.join(sorted(files))} to {out_dir}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="d2dmcast", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key=value config file (default: $D2DMCAST_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw one random cell and print it as JSON")
    p.add_argument("--seed", type=int)
    p.add_argument("--c", type=int, required=True, help="number of MDs")
    p.add_argument("--with-gains", action="store_true", help="embed the realized gain matrix")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="plan a scenario with one algorithm")
    p.add_argument("scenario")
    p.add_argument("--algorithm", "-a", default="channel-gain",
                   choices=["channel-gain", "cluster", "optimal", "bs-broadcast"])
    p.add_argument("-o", "--output", default="-")
    p.add_argument("-v", "--verbose", action="store_true", help="human-readable summary on stderr")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="check a plan against a scenario")
    p.add_argument("scenario")
    p.add_argument("plan")
    p.add_argument("--h-max", type=int)
    p.add_argument("--strict", action="store_true", help="relays must have been served by the BS directly")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment and write CSV + manifest")
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--threads", type=int, help="worker processes (0: all cores); never changes results")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except OracleCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except InternalInvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (InvalidInputError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
