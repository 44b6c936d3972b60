"""Command-line front end producing the CSV/JSON datasets.

    bayesclock rcurve --n 5 --family ghz --tau-min 0.01 --tau-max 1.5 --tau-points 100
    bayesclock clock --n 5 --family optimal
    bayesclock stationary --n 5
    bayesclock scaling --n-list 1,2,3,5,8,10 --mode stationary
    bayesclock optimize --n 10 --tau 0.5
    bayesclock oracle --n 3 --samples 100000

Exit status: 0 success, 1 invalid input, 2 internal failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import clockloop, oracle
from .hilbert import make_state
from .noise import K1_FORMS, OUParams, WhiteNoiseParams, REFERENCE_OU, REFERENCE_WHITE
from .optimizer import OptimizerConfig, optimize_state, r_curve

logger = logging.getLogger("bayesclock")

FAMILY_CHOICES = ("optimal", "ghz", "product", "sine")


class UsageError(Exception):
    """Bad flags, config file or output path (exit status 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(x) -> str:
    return format(float(x), ".12g")


# --------------------------------------------------------------------------
# argument parsing


def _noise_flags(p, with_initial=True):
    p.add_argument("--alpha", type=float, default=REFERENCE_OU.alpha, help="OU stationary variance, Hz^2")
    p.add_argument("--gamma", type=float, default=REFERENCE_OU.gamma, help="OU correlation rate, Hz")
    p.add_argument("--beta", type=float, default=REFERENCE_WHITE.beta, help="white-noise strength, Hz")
    p.add_argument("--k1-form", choices=K1_FORMS, default=K1_FORMS[0],
                   help="phase/detuning correlation kernel (default reproduces the reference clock numbers)")
    if with_initial:
        p.add_argument("--init-var", type=float, default=REFERENCE_OU.initial_variance,
                       help="initial LO variance, Hz^2")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value file; explicit flags win")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="bayesclock", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rcurve", parents=[common], help="variance reduction factor R(tau)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--family", choices=FAMILY_CHOICES, default="optimal")
    p.add_argument("--tau-min", type=float, default=1e-2)
    p.add_argument("--tau-max", type=float, default=2.0)
    p.add_argument("--tau-points", type=int, default=100)
    p.add_argument("--spacing", choices=("log", "linear"), default="log")
    p.add_argument("--restarts", type=int, default=4)

    p = sub.add_parser("optimize", parents=[common], help="optimal probe state at one tau (JSON)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--max-iter", type=int, default=OptimizerConfig.max_iterations)

    p = sub.add_parser("clock", parents=[common], help="variance after estimation vs interrogation time")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--family", choices=FAMILY_CHOICES, default="optimal")
    _noise_flags(p)
    p.add_argument("--t-min", type=float, default=0.01)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--t-points", type=int, default=100)

    p = sub.add_parser("stationary", parents=[common], help="minimal stationary variance")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--family", choices=FAMILY_CHOICES, default="optimal")
    _noise_flags(p, with_initial=False)

    p = sub.add_parser("scaling", parents=[common], help="best variance as a function of N")
    p.add_argument("--n-list", default="1,2,3,5,8,10", help="comma-separated atom numbers")
    p.add_argument("--family", choices=FAMILY_CHOICES, default="optimal")
    p.add_argument("--mode", choices=("decoherence_free_opt_tau", "stationary"),
                   default="decoherence_free_opt_tau")
    _noise_flags(p, with_initial=False)

    p = sub.add_parser("oracle", parents=[common], help="Monte Carlo check of the closed forms (JSON)")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--times", default="0.2,1,5", help="comma-separated interrogation times, s")
    _noise_flags(p)
    return parser


def read_config(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"config: cannot read {path}: {exc.strerror}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config: {path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    values = read_config(args.config)
    # initial_variance is the long name used in noise config files
    if "initial_variance" in values:
        values["init_var"] = values.pop("initial_variance")
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config")}
    for key, value in values.items():
        if key not in actions:
            raise UsageError(f"config: unknown key {key!r} for command {args.command}")
        # check every value, even ones an explicit flag will override
        action = actions[key]
        try:
            converted = action.type(value) if action.type else value
        except (TypeError, ValueError):
            raise UsageError(f"config: {key}: invalid value {value!r}") from None
        if action.choices is not None and converted not in action.choices:
            raise UsageError(f"config: {key}: {value!r} is not one of {list(action.choices)}")
    subparser.set_defaults(**values)
    try:
        return parser.parse_args(argv)
    except UsageError as exc:
        raise UsageError(f"config: {exc}") from None


def _int_list(text, name):
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated integers, got {text!r}") from None


def _float_list(text, name):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None


def _require(cond, flag, msg):
    if not cond:
        raise UsageError(f"{flag}: {msg}")


def validate(args):
    """Check every numeric flag against the owning module's preconditions."""
    _require(args.threads >= 1, "--threads", "must be >= 1")
    g = vars(args)
    if "n" in g:
        _require(args.n >= 1, "--n", f"must be >= 1, got {args.n}")
    if "restarts" in g:
        _require(args.restarts >= 1, "--restarts", "must be >= 1")
    if "max_iter" in g:
        _require(args.max_iter >= 1, "--max-iter", "must be >= 1")
    if "alpha" in g:
        _require(args.alpha >= 0, "--alpha", "must be >= 0")
        _require(args.gamma > 0, "--gamma", "must be > 0")
        _require(args.beta >= 0, "--beta", "must be >= 0")
    if "init_var" in g:
        _require(args.init_var >= 0, "--init-var", "must be >= 0")
    if args.command == "rcurve":
        _require(args.tau_min > 0, "--tau-min", "must be > 0")
        _require(args.tau_max >= args.tau_min, "--tau-max", "must be >= --tau-min")
        _require(args.tau_points >= 1, "--tau-points", "must be >= 1")
    elif args.command == "optimize":
        _require(args.tau > 0, "--tau", "must be > 0")
    elif args.command == "clock":
        _require(args.t_min > 0, "--t-min", "must be > 0")
        _require(args.t_max >= args.t_min, "--t-max", "must be >= --t-min")
        _require(args.t_points >= 1, "--t-points", "must be >= 1")
    elif args.command == "scaling":
        ns = _int_list(args.n_list, "--n-list")
        _require(ns and all(n >= 1 for n in ns), "--n-list", "atom numbers must be >= 1")
        _require(ns == sorted(ns), "--n-list", "must be ascending")
    elif args.command == "oracle":
        _require(args.samples >= 100, "--samples", "must be >= 100")
        ts = _float_list(args.times, "--times")
        _require(ts and all(t > 0 for t in ts), "--times", "times must be > 0")
    if args.out is not None:
        parent = args.out.resolve().parent
        writable = parent.is_dir() and os.access(parent, os.W_OK)
        if args.out.exists():
            writable = writable and os.access(args.out, os.W_OK) and args.out.is_file()
        _require(writable, "--out", f"cannot write to {args.out}")


# --------------------------------------------------------------------------
# commands


def _grid(lo, hi, n, spacing="log"):
    if n == 1:
        return np.array([lo])
    return np.geomspace(lo, hi, n) if spacing == "log" else np.linspace(lo, hi, n)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else (str(v) if isinstance(v, (int, np.integer)) else fmt(v))
                    for v in row])
    return buf.getvalue()


def cmd_rcurve(args) -> str:
    taus = _grid(args.tau_min, args.tau_max, args.tau_points, args.spacing)
    cfg = OptimizerConfig(seed=args.seed, restarts=args.restarts)
    taus, R, _ = r_curve(args.n, taus, args.family, cfg)
    return _csv(["N", "tau", "R", "family"], [(args.n, t, r, args.family) for t, r in zip(taus, R)])


def cmd_optimize(args) -> str:
    cfg = OptimizerConfig(seed=args.seed, restarts=args.restarts, max_iterations=args.max_iter)
    res = optimize_state(args.n, args.tau, 1.0, config=cfg)
    data = res.state.to_json()
    data.update({"tau": args.tau, "variance_ratio": res.variance,
                 "iterations": res.iterations, "converged": res.converged})
    return json.dumps(data, indent=2) + "\n"


def _ou(args):
    return OUParams(args.alpha, args.gamma, args.init_var)


def cmd_clock(args) -> str:
    s = clockloop.ClockScenario(_ou(args), WhiteNoiseParams(args.beta), args.n, args.family,
                                args.k1_form)
    ts = _grid(args.t_min, args.t_max, args.t_points)
    points = clockloop.reduction_curve(s, ts, OptimizerConfig(seed=args.seed, restarts=1))
    return _csv(["t_s", "var_prior_Hz2", "var_post_Hz2", "ratio"],
                [(p.t, p.prior_variance, p.posterior_variance, p.ratio) for p in points])


def cmd_stationary(args) -> str:
    cfg = OptimizerConfig(seed=args.seed, restarts=1)
    try:
        v, t = clockloop.stationary_variance(args.n, args.alpha, args.gamma,
                                             WhiteNoiseParams(args.beta), args.family, cfg,
                                             k1_form=args.k1_form)
    except clockloop.NoStationaryPoint:
        v, t = float("nan"), float("nan")
    return _csv(["N", "variance_Hz2", "argmin_time_s"], [(args.n, v, t)])


def cmd_scaling(args) -> str:
    ns = _int_list(args.n_list, "--n-list")
    ou = OUParams(args.alpha, args.gamma, args.alpha)
    wn = WhiteNoiseParams(args.beta)
    restarts = 1 if args.mode == "stationary" else 2

    def one(n):
        cfg = OptimizerConfig(seed=args.seed, restarts=restarts)
        return clockloop.scaling_table([n], args.family, args.mode, ou, wn, cfg,
                                       k1_form=args.k1_form)[0]

    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        rows = list(pool.map(one, ns))
    return _csv(["N", "variance_Hz2", "argmin_time_s"], rows)


def cmd_oracle(args) -> str:
    checks = oracle.consistency_report(
        n_atoms=args.n, times=tuple(_float_list(args.times, "--times")), n_samples=args.samples,
        seed=args.seed, ou=_ou(args), wn=WhiteNoiseParams(args.beta),
        k1_form=args.k1_form)
    report = {"n_atoms": args.n, "samples": args.samples, "checks": checks,
              "all_pass": all(c["pass"] for c in checks)}
    return json.dumps(report, indent=2) + "\n"


COMMANDS = {
    "rcurve": cmd_rcurve,
    "optimize": cmd_optimize,
    "clock": cmd_clock,
    "stationary": cmd_stationary,
    "scaling": cmd_scaling,
    "oracle": cmd_oracle,
}


def run(argv=None) -> int:
    try:
        args = parse_args(argv)
        validate(args)
    except UsageError as exc:
        print(f"bayesclock: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"bayesclock: error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        logger.exception("internal failure")
        return 2
    try:
        if args.out is None:
            sys.stdout.write(text)
        else:
            args.out.write_text(text)
    except OSError as exc:
        print(f"bayesclock: error: --out: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())
