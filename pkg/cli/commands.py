"""
Subcommand implementations and the exit-code contract

    0 success, 1 usage error, 2 divergence only, 3 verification failure
"""

import argparse
import logging
import sys
import time
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

from infra.config import get_app_config, validate_config
from infra.errors import (
    ObjectiveMismatchError,
    PrecondMomentumError,
    TuningFailureError,
    UsageError,
)
from infra.logging_setup import configure_logging
from dataio import load_dataset, normalize_max_abs, split
from objectives import ObjectiveProblem, logistic_from_dataset, parse_synthetic_spec
from objectives.reference_cache import clear_reference_cache, get_cache_stats
from optimizers import METHOD_ALIASES, STOP_GAP, STOP_TOLERANCE, RunConfig, RunReport, run
from preconditioners import PrecondRule, rule_from_name
from telemetry import get_telemetry, new_session_id
from verify import summarize
from verify.suites import run_suite
from workflows import MemberResult, run_members

from .args import GAMMA_GRID, member_namespace, parse_beta2, parse_cli, parse_gamma, parse_grid, parse_methods
from . import report_io

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIVERGED = 2
EXIT_VERIFY_FAILED = 3


def _fail(message: str) -> None:
    print(f"❌ {message}", file=sys.stderr)


@dataclass
class Problem:
    objective: ObjectiveProblem
    test_objective: Optional[ObjectiveProblem] = None
    source: str = ""


def build_problem(args: argparse.Namespace) -> Problem:
    """The training objective (and test objective when a split is requested)"""
    if bool(args.dataset) == bool(args.synthetic):
        raise UsageError("give exactly one of --dataset or --synthetic")
    if args.synthetic:
        return Problem(parse_synthetic_spec(args.synthetic, default_seed=args.seed), source=args.synthetic)

    try:
        dataset = load_dataset(args.dataset, n_features=args.n_features)
    except OSError as e:
        raise UsageError(f"cannot read dataset {args.dataset}: {e}") from e
    if args.normalize:
        dataset = normalize_max_abs(dataset)
    test_objective = None
    if args.train_frac != 1.0:
        dataset, test = split(dataset, args.train_frac, args.seed)
        if test.n:
            test_objective = logistic_from_dataset(test, args.lam)
    return Problem(logistic_from_dataset(dataset, args.lam), test_objective, source=args.dataset)


def build_rule(args: argparse.Namespace, precond: Optional[str] = None) -> PrecondRule:
    mode, beta2, horizon = parse_beta2(args.beta2, args.iters)
    return rule_from_name(precond or args.precond, beta2=beta2, beta2_mode=mode, horizon=horizon,
                          wiring=args.wiring, probes=args.probes)


def build_config(args: argparse.Namespace, problem: Problem, method: str,
                 precond: Optional[str] = None, gamma: Any = None) -> RunConfig:
    gamma = parse_gamma(args.gamma) if gamma is None else gamma
    if gamma == GAMMA_GRID:
        raise UsageError("a grid step size has to be tuned before the run")
    return RunConfig(
        method=method,
        rule=build_rule(args, precond),
        gamma=gamma,
        beta1=args.beta1,
        iters=args.iters,
        tol=args.tol,
        seed=args.seed,
        averaging=args.averaging,
        floor_e=args.floor_e,
        init_diag=args.init_diag,
        record_every=args.record_every,
        test_objective=problem.test_objective,
    )


# Tuning

@dataclass
class TuneOutcome:
    best_gamma: float
    best_seed: int
    members: List[MemberResult]
    rows: List[Dict[str, str]]


def is_converged(report: RunReport, tol: Optional[float]) -> bool:
    """Reached the stopping test, or (without one) ended with a smaller gradient than it started"""
    if report.diverged:
        return False
    if report.stop_reason in (STOP_TOLERANCE, STOP_GAP):
        return True
    if tol is not None:
        return False
    return report.last.grad_sq_norm < report.records[0].grad_sq_norm


def _first_iter_at_final_f(report: RunReport) -> int:
    final = report.last.f
    return next(r.iter for r in report.records if r.f <= final)


def select_gamma(members: Sequence[MemberResult]) -> MemberResult:
    """Lowest final f; then the earliest to reach it; then the smaller step size"""
    candidates = [m for m in members if m.report is not None and not m.report.diverged]
    if not candidates:
        raise TuningFailureError(f"all {len(members)} step sizes of the grid diverged")
    return min(candidates, key=lambda m: (m.report.last.f, _first_iter_at_final_f(m.report), m.config.gamma))


def tune_gamma(args: argparse.Namespace, problem: Problem, method: str,
               precond: Optional[str] = None) -> TuneOutcome:
    grid = parse_grid(args.grid)
    members = [
        (repr(gamma), build_config(args, problem, method, precond, gamma=gamma))
        for gamma in grid
    ]
    results = run_members(members, problem.objective, master_seed=args.seed, max_workers=args.workers)
    best = select_gamma(results)

    rows = []
    for member in results:
        report = member.report
        if report is None:
            rows.append({"gamma": report_io.fmt_float(member.config.gamma), "seed": str(member.config.seed),
                         "stop_reason": "error",
                         "converged": "false", "selected": "false"})
            continue
        converged = is_converged(report, args.tol)
        if not converged and not report.diverged:
            logger.warning(f"gamma={member.config.gamma:g} did not converge ({report.stop_reason})")
        rows.append({
            "gamma": report_io.fmt_float(member.config.gamma),
            "seed": str(member.config.seed),
            "final_f": report_io.fmt_float(report.last.f),
            "final_grad_sq_norm": report_io.fmt_float(report.last.grad_sq_norm),
            "iterations": str(report.iterations),
            "stop_reason": report.stop_reason,
            "converged": str(converged).lower(),
            "selected": str(member is best).lower(),
        })

    diverged = sum(1 for m in results if m.report is None or m.report.diverged)
    get_telemetry().tuning_completed(args.session_id, method=method, best_gamma=best.config.gamma,
                                     grid_size=len(grid), diverged_count=diverged)
    logger.info(f"Tuned {method}: gamma={best.config.gamma:g} over {len(grid)} grid points ({diverged} diverged)")
    return TuneOutcome(best.config.gamma, best.config.seed, results, rows)


# Commands

def _emit_run(args: argparse.Namespace, report: RunReport, objective: ObjectiveProblem, config: RunConfig) -> None:
    telemetry = get_telemetry()
    builder = telemetry.event_builder
    telemetry.emit_batch([
        builder.run_started(args.session_id, method=config.method, precond=report.params["precond"],
                            gamma=config.gamma, iters=config.iters, seed=config.seed,
                            objective_kind=objective.kind, dim=objective.dim),
        builder.run_completed(args.session_id, method=config.method, iterations=report.iterations,
                              stop_reason=report.stop_reason, final_grad_sq_norm=report.last.grad_sq_norm,
                              elapsed_ms=report.last.elapsed_ms, diverged_at=report.diverged_at),
    ])


def cmd_run(args: argparse.Namespace) -> int:
    problem = build_problem(args)
    gamma = parse_gamma(args.gamma)
    seed = args.seed
    if gamma == GAMMA_GRID:
        outcome = tune_gamma(args, problem, args.method)
        gamma, seed = outcome.best_gamma, outcome.best_seed
    config = replace(build_config(args, problem, args.method, gamma=gamma), seed=seed)
    report = run(config, problem.objective)
    _emit_run(args, report, problem.objective, config)

    report_io.write_run_csv(report, args.out)
    if args.report_json:
        report_io.write_json(report_io.run_summary(report), args.report_json)

    if report.diverged:
        _fail(f"{args.method} diverged at iteration {report.diverged_at}")
        return EXIT_DIVERGED
    if args.out:
        print(f"✅ {args.method}: {report.stop_reason} after {report.iterations} iterations, "
              f"f={report.last.f:.10g}, ||grad||^2={report.last.grad_sq_norm:.3e}")
    return EXIT_OK


def _member_label(method: str, precond: Optional[str], args: argparse.Namespace) -> str:
    _, identity_only, _ = METHOD_ALIASES[method]
    return method if identity_only else f"{method}/{precond or args.precond}"


def _problem_key(args: argparse.Namespace) -> tuple:
    return (args.dataset, args.synthetic, args.lam, args.normalize, args.train_frac, args.n_features, args.seed)


def _compare_members(args: argparse.Namespace) -> Tuple[Problem, List[Tuple[str, argparse.Namespace, Optional[str]]]]:
    """(shared problem, [(label, member args, precond)]); member problems must share one digest"""
    if args.member:
        entries = []
        for path in args.member:
            member_args = member_namespace(args, path)
            label = member_args.label or _member_label(member_args.method, None, member_args)
            entries.append((label, member_args, None))
    else:
        entries = [
            (_member_label(method, precond, args), argparse.Namespace(**{**vars(args), "method": method}), precond)
            for method, precond in parse_methods(args.methods)
        ]

    problem = build_problem(entries[0][1])
    digest = problem.objective.digest()
    shared_key = _problem_key(entries[0][1])
    for label, member_args, _ in entries[1:]:
        if _problem_key(member_args) == shared_key:
            continue
        other = build_problem(member_args).objective.digest()
        if other != digest:
            raise ObjectiveMismatchError(f"member {label!r} uses a different objective ({other} != {digest})")

    seen: Dict[str, int] = {}
    labelled = []
    for label, member_args, precond in entries:
        count = seen.get(label, 0)
        seen[label] = count + 1
        labelled.append((label if count == 0 else f"{label}#{count}", member_args, precond))
    return problem, labelled


def cmd_compare(args: argparse.Namespace) -> int:
    problem, entries = _compare_members(args)

    members = []
    for label, member_args, precond in entries:
        gamma = parse_gamma(member_args.gamma)
        if gamma == GAMMA_GRID:
            gamma = tune_gamma(member_args, problem, member_args.method, precond).best_gamma
        members.append((label, build_config(member_args, problem, member_args.method, precond, gamma=gamma)))

    results = run_members(members, problem.objective, master_seed=args.seed, max_workers=args.workers)
    for member in results:
        if member.report is not None:
            _emit_run(args, member.report, problem.objective, member.config)

    summary = _summary_rows(results, problem.objective, args.tol)
    report_io.write_compare_csv(results, args.out)
    if args.out:
        report_io.write_summary_csv(summary, report_io.summary_path(args.out))
        _print_summary(summary)
    if args.report_json:
        report_io.write_json({"members": [
            {"label": m.label, "error": m.error, **(report_io.run_summary(m.report) if m.report else {})}
            for m in results
        ]}, args.report_json)

    completed = [m for m in results if m.report is not None and not m.report.diverged]
    if not completed:
        _fail("every compared method diverged")
        return EXIT_DIVERGED
    return EXIT_OK


def _summary_rows(results: Sequence[MemberResult], objective: ObjectiveProblem,
                  tol: Optional[float]) -> List[Dict[str, str]]:
    rows = []
    for member in results:
        report = member.report
        row = {
            "method": member.label,
            "gamma": report_io.fmt_float(report.params["gamma"]) if report else "",
            "iterations": str(report.iterations) if report else "",
            "iterations_to_tol": report_io.iterations_to_tol_cell(report, tol),
            "final_f": report_io.fmt_float(report.last.f) if report else "",
            "final_grad_sq_norm": report_io.fmt_float(report.last.grad_sq_norm) if report else "",
            "accuracy": "",
        }
        if report is not None and not report.diverged and hasattr(objective, "accuracy"):
            row["accuracy"] = report_io.fmt_float(objective.accuracy(report.final_x))
        rows.append(row)
    return rows


def _print_summary(rows: Sequence[Dict[str, str]]) -> None:
    width = max(len(r["method"]) for r in rows)
    print(f"{'method':<{width}}  {'gamma':>12}  {'iters':>7}  {'to tol':>12}  {'final f':>16}")
    for r in rows:
        gamma = f"{float(r['gamma']):.4g}" if r["gamma"] else "--"
        final_f = f"{float(r['final_f']):.10g}" if r["final_f"] else "--"
        print(f"{r['method']:<{width}}  {gamma:>12}  {r['iterations'] or '--':>7}  "
              f"{r['iterations_to_tol'] or '--':>12}  {final_f:>16}")


def cmd_tune(args: argparse.Namespace) -> int:
    problem = build_problem(args)
    outcome = tune_gamma(args, problem, args.method)
    report_io.write_tune_csv(outcome.rows, args.out)
    if args.report_json:
        report_io.write_json({"method": args.method, "best_gamma": outcome.best_gamma, "best_seed": outcome.best_seed,
                              "grid": outcome.rows}, args.report_json)
    print(f"✅ best gamma for {args.method}: {outcome.best_gamma:g} (seed {outcome.best_seed})")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    result = run_suite(args.suite, l_scale=args.l_scale)
    telemetry = get_telemetry()
    telemetry.emit_batch([
        telemetry.event_builder.check_completed(args.session_id, name=report.name, worst_margin=report.worst_margin,
                                                passed=report.passed, applicable=report.applicable)
        for report in result.reports
    ])
    for report in result.reports:
        if not report.applicable:
            print(f"➖ {report.name}: {report.note}")
            continue
        mark = "✅" if report.passed else "❌"
        kind = "rel" if report.relative else "abs"
        print(f"{mark} {report.name}: worst margin {report.worst_margin:+.3e} ({kind}, tol {report.tolerance:.0e})")
    for name, outcome in result.notes.items():
        print(f"ℹ️  {name}: " + ", ".join(f"{k}={'holds' if v else 'violated'}" for k, v in outcome.items()))

    if args.report_json:
        payload = summarize(result.reports)
        payload.update(suite=args.suite, l_scale=args.l_scale, notes=result.notes)
        report_io.write_json(payload, args.report_json)

    elapsed = time.perf_counter() - start
    failed = [r.name for r in result.reports if not r.passed]
    if failed:
        print(f"❌ {len(failed)} of {len(result.reports)} checks failed in {elapsed:.1f}s: {', '.join(failed)}")
        return EXIT_VERIFY_FAILED
    print(f"✅ all {len(result.reports)} checks passed in {elapsed:.1f}s")
    return EXIT_OK


def cmd_cache(args: argparse.Namespace) -> int:
    if args.action == "clear":
        print(f"🗑️  removed {clear_reference_cache()} cached reference solutions")
        return EXIT_OK
    for key, value in get_cache_stats().items():
        print(f"{key}: {value}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "compare": cmd_compare,
    "tune": cmd_tune,
    "verify": cmd_verify,
    "cache": cmd_cache,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_cli(argv)
    except UsageError as e:
        _fail(str(e))
        return EXIT_USAGE

    configure_logging(get_app_config()['log_level'], verbosity=args.verbose)
    if not validate_config():
        logger.warning("Configuration has problems; continuing with defaults where possible")
    args.session_id = new_session_id()

    try:
        return COMMANDS[args.command](args)
    except TuningFailureError as e:
        _fail(str(e))
        return EXIT_DIVERGED
    except PrecondMomentumError as e:
        _fail(str(e))
        return EXIT_USAGE
    except KeyboardInterrupt:
        print("\n👋 Interrupted")
        return EXIT_USAGE
