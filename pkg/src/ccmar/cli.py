"""Command-line interface.

Every command prints one JSON envelope on stdout::

    {"command": ..., "inputs": {...}, "result": {...}, "version": ...}

Errors go to stderr as ``{"error": code, "detail": message}``.  Exit codes:
0 success, 2 input or format problems, 3 statistical preconditions violated.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .data import load_csv
from .errors import CcmarError, InputError, ReplicationError, StatisticalPreconditionError
from .limits import LimitLaw, upper_critical_value
from .linearity import CHI_FUNCTIONS, run_linearity_test
from .normality import run_normality_test
from .series import fit_complete_case
from .simulation import (
    efficiency_variance_check,
    load_scenario,
    mean_response_family,
    normality_statistic_family,
    replicate,
    verify_transfer,
)
from .transfer import (
    enumerate_complete_case_law,
    exact_component_laws,
    lemma1_mixture,
    mean_family,
)

log = logging.getLogger("ccmar")

EXIT_OK, EXIT_INPUT, EXIT_PRECONDITION = 0, 2, 3


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def envelope(command: str, inputs: dict, result: dict) -> dict:
    return {"command": command, "inputs": _jsonable(inputs), "result": _jsonable(result), "version": __version__}


def _parse_K(text: str):
    if text == "auto":
        return None
    try:
        K = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("K must be 'auto' or a non-negative integer") from None
    if K < 0:
        raise argparse.ArgumentTypeError("K must be non-negative")
    return K


def _parse_alpha(text: str) -> float:
    a = float(text)
    if not 0.0 < a < 1.0:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return a


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


# --- commands ---------------------------------------------------------------


def cmd_estimate(args) -> dict:
    data = load_csv(args.input)
    fit = fit_complete_case(data, args.K)
    result = fit.summary()
    result["n"] = data.n
    return envelope("estimate", {"input": str(args.input), "K": "auto" if args.K is None else args.K}, result)


def cmd_test_normal(args) -> dict:
    data = load_csv(args.input)
    report = run_normality_test(data, args.alpha, args.K)
    inputs = {"input": str(args.input), "alpha": args.alpha, "K": "auto" if args.K is None else args.K}
    return envelope("test-normal", inputs, report.to_dict())


def cmd_test_linear(args) -> dict:
    data = load_csv(args.input)
    report = run_linearity_test(data, args.alpha, args.chi, args.null)
    inputs = {"input": str(args.input), "alpha": args.alpha, "chi": args.chi, "null": args.null}
    return envelope("test-linear", inputs, report.to_dict())


def cmd_critical_values(args) -> dict:
    law = LimitLaw(args.law)
    if any(not 0.0 < lvl < 1.0 for lvl in args.levels):
        raise InputError("levels must lie in (0, 1)")
    rows = [{"level": lvl, "critical_value": upper_critical_value(law, 1.0 - lvl)} for lvl in args.levels]
    return envelope("critical-values", {"law": args.law, "levels": args.levels}, {"law": law.kind.value, "table": rows})


def cmd_verify_lemma1(args) -> dict:
    support = args.support
    probs = np.full(len(support), 1.0 / len(support))
    family = mean_family(t0=args.t0)
    cases = []
    worst = 0.0
    for n in args.n:
        for p in args.p:
            if not 0.0 < p <= 1.0:
                raise InputError("p must lie in (0, 1]")
            joint = [(0, None)] + [(1, x) for x in support]
            joint_probs = [1.0 - p] + list(p * probs)
            if p == 1.0:
                joint, joint_probs = joint[1:], joint_probs[1:]
            enumerated = enumerate_complete_case_law(family, n, joint, joint_probs).as_dict()
            mixture = lemma1_mixture(family, n, p, exact_component_laws(family, support, probs)).discrete().as_dict()
            keys = set(enumerated) | set(mixture)
            diff = max(abs(enumerated.get(k, 0.0) - mixture.get(k, 0.0)) for k in keys)
            worst = max(worst, diff)
            cases.append({"n": n, "p": p, "atoms": len(keys), "max_abs_atom_difference": diff})
    inputs = {"n": args.n, "p": args.p, "support": support, "t0": args.t0}
    result = {"cases": cases, "max_abs_atom_difference": worst, "passed": bool(worst <= args.tol), "tolerance": args.tol}
    return envelope("verify-lemma1", inputs, result)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def _quantiles(values) -> dict:
    values = np.asarray(values, dtype=float)
    return {str(q): float(np.quantile(values, q)) for q in (0.5, 0.9, 0.95, 0.99)}


def cmd_simulate(args) -> dict:
    config = load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    inputs = {
        "scenario": str(args.scenario),
        "config": config.to_dict(),
        "reps": args.reps,
        "analysis": args.analysis,
        "out": str(out),
    }
    if args.analysis in ("normal", "linear"):
        if args.analysis == "normal":
            reports = replicate(config, args.reps, lambda d: run_normality_test(d, args.alpha), threads=args.threads)
        else:
            reports = replicate(
                config, args.reps, lambda d: run_linearity_test(d, args.alpha, args.chi, args.null), threads=args.threads
            )
            inputs.update(chi=args.chi, null=args.null)
        inputs["alpha"] = args.alpha
        stats = [r.statistic for r in reports]
        _write_csv(
            out / "replications.csv",
            ["rep", "statistic", "p_value", "reject", "n_used"],
            [(i, r.statistic, r.p_value, int(r.reject), r.n_used) for i, r in enumerate(reports)],
        )
        summary = {
            "reps": args.reps,
            "rejection_rate": float(np.mean([r.reject for r in reports])),
            "critical_value": reports[0].critical_value,
            "statistic_quantiles": _quantiles(stats),
            "mean_n_used": float(np.mean([r.n_used for r in reports])),
        }
        if args.reps == 1:
            summary["report"] = reports[0].to_dict()
    elif args.analysis == "efficiency":
        check = efficiency_variance_check(config, args.reps, oracle_draws=args.oracle_draws, threads=args.threads)
        m = config.m
        _write_csv(
            out / "replications.csv",
            ["rep"] + [f"theta_hat_{k + 1}" for k in range(m)],
            [(i, *check.estimates[i]) for i in range(args.reps)],
        )
        summary = {
            "reps": args.reps,
            "empirical_covariance": check.empirical,
            "target_covariance": check.target,
            "ratio": check.ratio,
            "E_delta": check.E_delta,
        }
        inputs["oracle_draws"] = args.oracle_draws
    else:
        family = mean_response_family() if args.family == "mean" else normality_statistic_family(config.m)
        check = verify_transfer(config, family, args.reps, threads=args.threads)
        _write_csv(
            out / "replications.csv",
            ["rep", "complete_case_value", "binomial_index_value"],
            [(i, a, b) for i, (a, b) in enumerate(zip(check.mar_values, check.binomial_values))],
        )
        summary = {
            "reps": args.reps,
            "family": family.name,
            "kolmogorov_distance": check.distance,
            "bound": args.bound,
            "within_bound": bool(check.distance < args.bound),
            "p": check.p,
        }
        inputs.update(family=args.family, bound=args.bound)
    env = envelope("simulate", inputs, summary)
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(env, fh, indent=2)
        fh.write("\n")
    return env


# --- wiring -----------------------------------------------------------------


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors as exceptions instead of exiting."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ccmar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="complete-case series least squares fit")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--K", default=None, type=_parse_K, help="'auto' (default) or an integer")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("test-normal", help="martingale-transform test for normal errors")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--alpha", default=0.05, type=_parse_alpha)
    p.add_argument("--K", default=None, type=_parse_K)
    p.set_defaults(func=cmd_test_normal)

    p = sub.add_parser("test-linear", help="test for constant or linear rho")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--alpha", default=0.05, type=_parse_alpha)
    p.add_argument("--chi", default=None, choices=sorted(CHI_FUNCTIONS))
    p.add_argument("--null", default="constant", choices=["constant", "linear"])
    p.set_defaults(func=cmd_test_linear)

    p = sub.add_parser("critical-values", help="upper critical values of the limit laws")
    p.add_argument("--law", required=True, choices=["bm", "bridge"])
    p.add_argument("--levels", default=[0.90, 0.95, 0.99], type=_float_list, help="confidence levels, e.g. 0.90,0.95")
    p.set_defaults(func=cmd_critical_values)

    p = sub.add_parser("simulate", help="Monte Carlo study from a scenario file")
    p.add_argument("--scenario", required=True, type=Path)
    p.add_argument("--reps", required=True, type=int)
    p.add_argument("--analysis", required=True, choices=["normal", "linear", "efficiency", "transfer"])
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--alpha", default=0.05, type=_parse_alpha)
    p.add_argument("--chi", default=None, choices=sorted(CHI_FUNCTIONS))
    p.add_argument("--null", default="constant", choices=["constant", "linear"])
    p.add_argument("--family", default="mean", choices=["mean", "normality"], help="statistic for --analysis transfer")
    p.add_argument("--bound", default=0.03, type=float, help="distance bound reported for --analysis transfer")
    p.add_argument("--oracle-draws", default=1_000_000, type=int)
    p.add_argument("--threads", default=1, type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-lemma1", help="exact binomial-mixture law vs brute-force enumeration")
    p.add_argument("--n", default=[1, 2, 3, 4, 5], type=_int_list)
    p.add_argument("--p", default=[0.3, 0.5, 1.0], type=_float_list)
    p.add_argument("--support", default=[0.0, 1.0], type=_float_list)
    p.add_argument("--t0", default=0.0, type=float)
    p.add_argument("--tol", default=1e-12, type=float)
    p.set_defaults(func=cmd_verify_lemma1)
    return parser


def _fail(code: str, detail: str, status: int) -> int:
    sys.stderr.write(json.dumps({"error": code, "detail": detail}) + "\n")
    return status


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage_error", str(exc), EXIT_INPUT)
    except SystemExit as exc:  # --help / --version
        return 0 if exc.code in (0, None) else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        env = args.func(args)
    except ReplicationError as exc:
        status = EXIT_PRECONDITION if isinstance(exc.cause, StatisticalPreconditionError) else EXIT_INPUT
        return _fail(exc.code, str(exc), status)
    except StatisticalPreconditionError as exc:
        return _fail(exc.code, str(exc), EXIT_PRECONDITION)
    except CcmarError as exc:
        return _fail(exc.code, str(exc), EXIT_INPUT)
    except (FileNotFoundError, IsADirectoryError, PermissionError, UnicodeDecodeError) as exc:
        return _fail("input_error", str(exc), EXIT_INPUT)
    sys.stdout.write(json.dumps(env) + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
