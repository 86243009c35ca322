"""
Command-line surface: argparse subcommands plus key=value config files

Values from --config FILE become parser defaults, so explicit flags override them.
"""

import argparse
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from infra.config import get_app_config, load_run_config_file
from infra.errors import UsageError
from optimizers import METHOD_ALIASES, THEORY
from preconditioners import DEFAULT_FLOOR, PRESETS, Beta2Mode, Wiring
from verify.suites import SUITES

logger = logging.getLogger(__name__)

GAMMA_GRID = "grid"
DEFAULT_GRID = "pow2:-20:0"
DEFAULT_COMPARE_METHODS = "heavy-ball,phb,nesterov,pn"


class _UsageParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting"""

    def error(self, message):
        raise UsageError(message)


def _add_problem_args(parser: argparse.ArgumentParser) -> None:
    problem = parser.add_argument_group("problem")
    problem.add_argument("--dataset", help="LibSVM file (logistic regression with L2)")
    problem.add_argument("--synthetic", help="quad:d=10,kappa=100[,rotate=1][,seed=3] or logit:n=200,d=5,lam=0.01")
    problem.add_argument("--lam", type=float, default=1e-3, help="L2 regularization weight for --dataset")
    problem.add_argument("--train-frac", type=float, default=1.0,
                         help="train share of a seeded split; the rest feeds the test_loss column")
    problem.add_argument("--normalize", action="store_true", help="max-abs scale the dataset columns")
    problem.add_argument("--n-features", type=int, default=None, help="force the dataset dimension upward")


def _add_method_args(parser: argparse.ArgumentParser) -> None:
    method = parser.add_argument_group("method")
    method.add_argument("--gamma", default=THEORY, help="step size: number | theory | grid")
    method.add_argument("--grid", default=DEFAULT_GRID, help="step-size grid: 0.5,1,2 or pow2:LO:HI")
    method.add_argument("--beta1", type=float, default=0.9, help="heavy-ball momentum")
    method.add_argument("--beta2", default="0.999", help="smoothing: number | 1-k | 1-K")
    method.add_argument("--precond", default="adam", choices=sorted(PRESETS))
    method.add_argument("--floor-e", type=float, default=DEFAULT_FLOOR, help="clamp floor e")
    method.add_argument("--init-diag", type=float, default=None, help="diagonal of the initial running matrix")
    method.add_argument("--wiring", default=Wiring.AUTO.value, choices=[w.value for w in Wiring])
    method.add_argument("--probes", type=int, default=1, help="Hutchinson probes per iteration")
    method.add_argument("--iters", type=int, default=1000, help="iteration budget K")
    method.add_argument("--tol", type=float, default=None, help="stop once ||grad f||^2 <= tol")
    method.add_argument("--averaging", action="store_true", help="weighted output averaging (heavy-ball methods)")
    method.add_argument("--record-every", type=int, default=1, help="keep every n-th iteration in the CSV")


def _add_output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="CSV output path (stdout when omitted)")
    parser.add_argument("--report-json", help="write a JSON summary here")
    parser.add_argument("--workers", type=int, default=None, help="parallel member runs (default MAX_WORKERS)")


def build_parser() -> argparse.ArgumentParser:
    parser = _UsageParser(prog="precond-momentum",
                          description="Preconditioned heavy-ball / Nesterov benchmark and theory checks")
    parser.add_argument("--config", help="key=value run configuration file; flags override it")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_UsageParser)

    run = sub.add_parser("run", help="run one method and write its CSV trace")
    run.add_argument("--method", default="phb", choices=sorted(METHOD_ALIASES))
    _add_problem_args(run)
    _add_method_args(run)
    _add_output_args(run)

    compare = sub.add_parser("compare", help="run several methods on one objective")
    compare.add_argument("--methods", default=DEFAULT_COMPARE_METHODS,
                         help="comma list of method[/precond] entries")
    compare.add_argument("--member", action="append", default=[],
                         help="key=value file for one member (repeatable); overlays the shared flags")
    _add_problem_args(compare)
    _add_method_args(compare)
    _add_output_args(compare)

    tune = sub.add_parser("tune", help="pick the step size with the lowest final f")
    tune.add_argument("--method", default="phb", choices=sorted(METHOD_ALIASES))
    _add_problem_args(tune)
    _add_method_args(tune)
    _add_output_args(tune)

    verify = sub.add_parser("verify", help="run the built-in theory suites")
    verify.add_argument("--suite", default="all", choices=SUITES)
    verify.add_argument("--l-scale", type=float, default=1.0,
                        help="multiply the L handed to theory parameters (negative control)")
    verify.add_argument("--report-json", help="write every check report as JSON")

    cache = sub.add_parser("cache", help="reference-solution cache maintenance")
    cache.add_argument("action", choices=("stats", "clear"))

    return parser


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:
        if command in action.choices:
            return action.choices[command]
    raise UsageError(f"unknown command {command!r}")


def coerce_values(parser: argparse.ArgumentParser, command: str, values: Dict[str, str]) -> Dict[str, object]:
    """Convert raw key=value strings with the matching flag's own type of `command`"""
    sub = _subparser(parser, command)
    actions = {a.dest: a for a in sub._actions if a.dest != "help"}
    converted: Dict[str, object] = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None:
            raise UsageError(f"config key {key!r} is not an option of {command!r}")
        if isinstance(action, argparse._StoreTrueAction):
            converted[key] = raw.lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction):
            converted[key] = [part.strip() for part in raw.split(",") if part.strip()]
        else:
            try:
                converted[key] = action.type(raw) if action.type else raw
            except (TypeError, ValueError) as e:
                raise UsageError(f"config key {key!r}: invalid value {raw!r}") from e
            if action.choices is not None and converted[key] not in action.choices:
                raise UsageError(f"config key {key!r}: {raw!r} is not one of {', '.join(map(str, action.choices))}")
    return converted


def member_namespace(base: argparse.Namespace, path: str) -> argparse.Namespace:
    """
    Copy of the compare flags overlaid with one member file

    Besides the compare options a member file must set `method` and may set `label`.
    """
    try:
        values = load_run_config_file(path)
    except FileNotFoundError as e:
        raise UsageError(str(e)) from e
    method = values.pop("method", None)
    if method not in METHOD_ALIASES:
        raise UsageError(f"member file {path} must set method to one of {', '.join(METHOD_ALIASES)}")
    label = values.pop("label", None)
    for shared in ("methods", "member", "out", "report_json", "workers"):
        if shared in values:
            raise UsageError(f"member file {path} may not set {shared!r}")
    merged = vars(base).copy()
    overrides = coerce_values(build_parser(), "compare", values)
    # a member naming its own problem replaces the shared one
    if "dataset" in overrides:
        merged["synthetic"] = None
    if "synthetic" in overrides:
        merged["dataset"] = None
    merged.update(overrides)
    merged.update(method=method, label=label)
    return argparse.Namespace(**merged)


def parse_cli(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("choose a command: run, compare, tune, verify or cache")
    if args.config:
        try:
            values = load_run_config_file(args.config)
        except FileNotFoundError as e:
            raise UsageError(str(e)) from e
        _subparser(parser, args.command).set_defaults(**coerce_values(parser, args.command, values))
        args = parser.parse_args(argv)
    if getattr(args, "workers", None) is None and args.command in ("run", "compare", "tune"):
        args.workers = get_app_config()['max_workers']
    return args


def parse_gamma(value: Union[str, float]) -> Union[str, float]:
    """number | theory | grid"""
    text = str(value).strip().lower()
    if text in (THEORY, GAMMA_GRID):
        return text
    try:
        gamma = float(text)
    except ValueError:
        raise UsageError(f"--gamma expects a number, 'theory' or 'grid', got {value!r}") from None
    if not (gamma > 0.0 and math.isfinite(gamma)):
        raise UsageError(f"--gamma must be positive, got {value!r}")
    return gamma


def parse_beta2(value: str, iters: int) -> Tuple[Beta2Mode, float, Optional[int]]:
    """(mode, fixed value, horizon) from number | 1-k | 1-K"""
    text = str(value).strip()
    if text == "1-k":
        return Beta2Mode.ONE_MINUS_INV_K, 0.999, None
    if text == "1-K":
        return Beta2Mode.ONE_MINUS_INV_HORIZON, 0.999, iters
    try:
        return Beta2Mode.FIXED, float(text), None
    except ValueError:
        raise UsageError(f"--beta2 expects a number, '1-k' or '1-K', got {value!r}") from None


def parse_grid(spec: str) -> List[float]:
    """
    Step-size grid, sorted ascending without duplicates

    Examples:
        0.5,1,2
        pow2:-20:0   (2^-20, 2^-19, ..., 2^0)
    """
    text = spec.strip()
    if text.startswith("pow2:"):
        try:
            _, lo, hi = text.split(":")
            exponents = range(int(lo), int(hi) + 1)
        except ValueError:
            raise UsageError(f"power grid must read pow2:LO:HI, got {spec!r}") from None
        values = [float(np.ldexp(1.0, k)) for k in exponents]
    else:
        try:
            values = [float(part) for part in text.split(",") if part.strip()]
        except ValueError:
            raise UsageError(f"grid values must be numbers, got {spec!r}") from None
    if not values:
        raise UsageError("step-size grid is empty")
    if any(not (v > 0.0 and math.isfinite(v)) for v in values):
        raise UsageError(f"grid values must be positive, got {spec!r}")
    return sorted(set(values))


def parse_methods(spec: str) -> List[Tuple[str, Optional[str]]]:
    """'heavy-ball,phb/oasis' -> [('heavy-ball', None), ('phb', 'oasis')]"""
    entries = []
    for item in filter(None, (part.strip() for part in spec.split(","))):
        method, _, precond = item.partition("/")
        if method not in METHOD_ALIASES:
            raise UsageError(f"unknown method {method!r}; choose from {', '.join(METHOD_ALIASES)}")
        if precond and precond not in PRESETS:
            raise UsageError(f"unknown preconditioner {precond!r}; choose from {', '.join(sorted(PRESETS))}")
        entries.append((method, precond or None))
    if not entries:
        raise UsageError("--methods is empty")
    return entries
