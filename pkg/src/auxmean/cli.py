"""Command-line interface: ``auxmean <subcommand> [flags]``.

Exit codes: 0 on success, 1 when the request is well-formed but infeasible
(KKT budget exhausted) or a verification check fails, 2 on usage errors.
All numbers are printed with Python's shortest round-trip float repr.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

import numpy as np

from .adversary import AdversaryPair, BudgetExhaustedError, worst_case_kkt, worst_case_large_n
from .estimator import NormMode, ScalarEstimator, minmax_risk, optimal_weight, risk_from_moments
from .experiments import ESTIMATORS, ExperimentConfig, results_to_csv, run_experiment, sweep
from .gaussian import GaussianMoments, gelbrich_w2_squared
from .verify import SUITES, run_suite


class UsageError(Exception):
    pass


def _add_spec_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("problem")
    group.add_argument("--n", type=int, help="number of target samples")
    group.add_argument("--N", type=int, help="number of auxiliary samples")
    group.add_argument("--d", type=int, help="dimension")
    group.add_argument("--eps", type=float, help="W2 radius between target and auxiliary")
    group.add_argument("--delta-sq", type=float, help="lower bound on the covariance norm")
    group.add_argument("--mode", choices=[m.value for m in NormMode], help="covariance norm")
    group.add_argument("--config", help="JSON experiment config; flags override its values")


def _add_moment_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("moments")
    group.add_argument("--p", help="JSON file {mean, cov} for the target distribution")
    group.add_argument("--q", help="JSON file {mean, cov} for the auxiliary distribution")
    group.add_argument("--pair", help="JSON file {p: {...}, q: {...}}, e.g. 'adversary' output")


def _add_output_flags(parser: argparse.ArgumentParser, formats: bool = False) -> None:
    parser.add_argument("--output", help="write to this file instead of standard output")
    if formats:
        parser.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="auxmean",
        description="Worst-case-optimal mean estimation with auxiliary samples under a W2 budget.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    p = sub.add_parser("weight", help="optimal weight and min-max risk")
    _add_spec_flags(p)
    _add_output_flags(p)

    p = sub.add_parser("risk", help="min-max risk, or exact MSE under given moments")
    _add_spec_flags(p)
    _add_moment_flags(p)
    p.add_argument("--s", type=float, help="weight on the target mean (default: optimal)")
    _add_output_flags(p)

    p = sub.add_parser("w2", help="squared W2 distance between two Gaussians")
    _add_moment_flags(p)
    _add_output_flags(p)

    p = sub.add_parser("adversary", help="worst-case target/auxiliary moments")
    _add_spec_flags(p)
    p.add_argument("--kind", choices=("large-n", "kkt"), default="large-n")
    p.add_argument("--s", type=float, help="weight on the target mean (default: optimal)")
    p.add_argument("--direction", help="comma-separated unit vector for the mean shift (default e1)")
    _add_output_flags(p)

    for name, text in (("simulate", "Monte Carlo MSE at one eps"), ("sweep", "Monte Carlo MSE over eps values")):
        p = sub.add_parser(name, help=text)
        _add_spec_flags(p)
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int, help="base seed")
        p.add_argument("--estimators", help=f"comma-separated subset of {','.join(ESTIMATORS)}")
        p.add_argument("--jobs", type=int, default=1, help="worker threads (output is unaffected)")
        if name == "sweep":
            p.add_argument("--eps-list", help="comma-separated eps values")
        _add_output_flags(p, formats=True)

    p = sub.add_parser("verify", help="run oracle suites; JSON lines of reports")
    p.add_argument("--suite", choices=("all",) + SUITES, default="all")
    p.add_argument("--seed", type=int, default=0)
    _add_output_flags(p)
    return parser


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated numbers, got {text!r}") from None


def _config(args) -> ExperimentConfig:
    data = _load_json(args.config) if args.config else {}
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    data = dict(data)
    spec = dict(data.get("spec", {}))
    for key in ("n", "N", "d", "eps", "delta_sq", "mode"):
        value = getattr(args, key, None)
        if value is not None:
            spec[key] = value
    data["spec"] = spec
    if getattr(args, "trials", None) is not None:
        data["trials"] = args.trials
    if getattr(args, "seed", None) is not None:
        data["base_seed"] = args.seed
    if getattr(args, "estimators", None):
        data["estimators"] = [e.strip() for e in args.estimators.split(",") if e.strip()]
    if getattr(args, "eps_list", None):
        data["sweep"] = _parse_floats(args.eps_list, "--eps-list")
    try:
        return ExperimentConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _moments(args) -> tuple[GaussianMoments, GaussianMoments]:
    if args.pair and (args.p or args.q):
        raise UsageError("--pair conflicts with --p/--q")
    try:
        if args.pair:
            data = _load_json(args.pair)
            return GaussianMoments.from_dict(data["p"]), GaussianMoments.from_dict(data["q"])
        if args.p and args.q:
            return GaussianMoments.from_dict(_load_json(args.p)), GaussianMoments.from_dict(_load_json(args.q))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid moment file: {exc}") from None
    raise UsageError("need --pair, or both --p and --q")


def _has_moments(args) -> bool:
    return bool(args.pair or args.p or args.q)


def _cmd_weight(args) -> dict:
    report = minmax_risk(_config(args).spec)
    return {"s": report.s_star, "risk": report.risk_star}


def _cmd_risk(args) -> dict:
    spec = _config(args).spec
    if not _has_moments(args):
        if args.s is not None:
            raise UsageError("--s needs moment input (--pair or --p/--q)")
        return minmax_risk(spec).to_dict()
    p, q = _moments(args)
    s = optimal_weight(spec) if args.s is None else args.s
    mse = risk_from_moments(ScalarEstimator(s), p, q, spec.n, spec.N)
    norm = spec.mode.cov_norm(p.cov)
    return {
        "s": s,
        "mse": mse,
        "normalized_mse": mse / norm if norm > 0 else None,
        "mode": spec.mode.value,
        "n": spec.n,
        "N": spec.N,
    }


def _cmd_w2(args) -> dict:
    p, q = _moments(args)
    return {"w2_squared": gelbrich_w2_squared(p, q)}


def _cmd_adversary(args) -> dict:
    spec = _config(args).spec
    s = optimal_weight(spec) if args.s is None else args.s
    direction = None
    if args.direction:
        direction = np.array(_parse_floats(args.direction, "--direction"))
    build = worst_case_large_n if args.kind == "large-n" else worst_case_kkt
    pair: AdversaryPair = build(spec, s, direction)
    out = pair.to_dict()
    out.update({"s": s, "kind": args.kind, "spec": spec.to_dict()})
    return out


def _run_experiments(args) -> str:
    config = _config(args)
    if args.command == "sweep":
        if not config.sweep:
            raise UsageError("sweep needs --eps-list or a config with a 'sweep' list")
        results = sweep(config, n_jobs=args.jobs)
    else:
        results = [run_experiment(config, n_jobs=args.jobs)]
    if args.format == "csv":
        return results_to_csv(results)
    return json.dumps({"config": config.to_dict(), "results": [r.to_dict() for r in results]}) + "\n"


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


_JSON_COMMANDS = {"weight": _cmd_weight, "risk": _cmd_risk, "w2": _cmd_w2, "adversary": _cmd_adversary}


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command in _JSON_COMMANDS:
            _emit(json.dumps(_JSON_COMMANDS[args.command](args)) + "\n", args.output)
            return 0
        if args.command in ("simulate", "sweep"):
            if args.jobs < 1:
                raise UsageError("--jobs must be at least 1")
            _emit(_run_experiments(args), args.output)
            return 0
        reports = run_suite(args.suite, args.seed)
        _emit("".join(json.dumps(r.to_dict()) + "\n" for r in reports), args.output)
        return 0 if all(r.passed for r in reports) else 1
    except BudgetExhaustedError as exc:
        print(f"auxmean: {exc}", file=sys.stderr)
        return 1
    except (UsageError, ValueError) as exc:
        print(f"auxmean {args.command}: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
