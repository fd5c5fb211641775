"""``threshold-lab`` command-line entry point.

Exit status: 0 when every inequality check passes (vacuous checks count as
passing), 2 when any check fails, 1 on input, validation or capacity errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import InputError, ThresholdLabError, origin
from .events import IncreasingEvent, enumeration_cap, require_monotone
from .exact import point_report
from .families import DEFAULT_GRID_POINTS, MeasureFamily, validate_family
from .lift import DEFAULT_DIGITS, LIFT_TOL, lift_bounds, lift_report, verify_modified_poincare
from .montecarlo import DEFAULT_LEVEL, DEFAULT_SAMPLES, estimate_influence, estimate_measure, estimate_pivotal
from .threshold import (BOUND_TOL, default_grid, sweep, threshold_window, verify_all_pairs,
                        verify_remark_bound, verify_threshold_bound)

COMMANDS = ("analyze", "sweep", "lift", "verify", "mc")
DEFAULTS = {"grid_points": DEFAULT_GRID_POINTS, "m": DEFAULT_DIGITS, "tol": BOUND_TOL,
            "samples": DEFAULT_SAMPLES, "seed": 0, "level": DEFAULT_LEVEL, "format": "json"}


@dataclass
class RunConfig:
    command: str
    event: str
    family: str
    t: float | None = None
    t1: float | None = None
    t2: float | None = None
    grid_points: int = DEFAULT_GRID_POINTS
    m: int = DEFAULT_DIGITS
    epsilon: tuple[float, ...] = ()
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    tol: float = BOUND_TOL
    level: float = DEFAULT_LEVEL
    pairs: int | None = None
    mode: str = "exact"
    format: str = "json"
    out: str | None = None
    unchecked: bool = False

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.command in ("analyze", "lift", "mc") and self.t is None:
            raise InputError(f"{self.command} needs --t")
        if self.command == "verify" and (self.t1 is None or self.t2 is None):
            raise InputError("verify needs --t1 and --t2")
        if self.grid_points < 2:
            raise InputError("--grid-points must be >= 2")
        if self.tol <= 0:
            raise InputError("--tol must be positive")
        if self.m < 1:
            raise InputError("--m must be >= 1")
        if self.format not in ("json", "csv"):
            raise InputError("--format must be json or csv")


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"{what} file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{what} file {path} is not valid JSON: {exc}") from None


def load_inputs(cfg: RunConfig) -> tuple[IncreasingEvent, MeasureFamily]:
    event = IncreasingEvent.from_json(_load_json(cfg.event, "event"))
    family = MeasureFamily.from_json(_load_json(cfg.family, "family"))
    if event.r != family.r:
        raise InputError(f"event has r={event.r} but family has r={family.r}")
    report = validate_family(family, cfg.grid_points)
    if not report.ok:
        raise InputError("family fails validation: " + "; ".join(report.messages.values()))
    for flag in report.flags:
        print(f"warning [measure_family]: {flag}", file=sys.stderr)
    if cfg.command != "mc" or not cfg.unchecked:
        require_monotone(event)
    return event, family


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to ``None``."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _status(failed: bool) -> str:
    return "fail" if failed else "pass"


# -- commands ----------------------------------------------------------------


def cmd_analyze(cfg, event, family):
    rep = point_report(event, family, cfg.t, tol=cfg.tol)
    summary = f"nu={rep.nu:.6g} I={rep.total_influence:.6g} gamma={rep.gamma_t:.6g} " \
              f"russo={rep.russo_status} disj={rep.disj_status}"
    return rep.to_json(), not rep.passed, (rep.csv_header(), [rep.csv_row()]), summary


def _sweep_grid(cfg, family):
    return default_grid(family, cfg.grid_points, cfg.t1, cfg.t2)


def _pairs_doc(sw, cfg):
    summary = verify_all_pairs(sw, max_pairs=cfg.pairs, seed=cfg.seed, tol=cfg.tol)
    return summary.to_json(), not summary.passed


def cmd_sweep(cfg, event, family):
    sw = sweep(event, family, _sweep_grid(cfg, family), mode=cfg.mode, samples=cfg.samples,
               seed=cfg.seed, check_monotone=not cfg.unchecked)
    windows, failed = [], False
    for eps in cfg.epsilon:
        w = threshold_window(sw, eps)
        failed |= not w.within_ceiling
        windows.append(w.to_json())
    pairs, pair_fail = _pairs_doc(sw, cfg)
    failed |= pair_fail or any(not p.passed for p in sw.reports)
    doc = {"mode": sw.mode, "grid": sw.grid, "grid_resolution": sw.resolution,
           "gamma_star": sw.gamma_star, "s_star": sw.s_star, "eta_star": sw.eta_star,
           "windows": windows, "pairs": pairs, "points": [p.to_json() for p in sw.reports]}
    worst = pairs["worst"]
    summary = f"{len(sw.grid)} points, gamma*={sw.gamma_star:.6g}, S*={sw.s_star:.6g}, " + (
        f"worst residual {worst['residual']:.6g} at ({worst['t1']:.6g}, {worst['t2']:.6g})" if worst else
        "all pair checks vacuous")
    return doc, failed, (sw.csv_header(), sw.csv_rows()), summary


def cmd_lift(cfg, event, family):
    rep = lift_report(event, family, cfg.t, cfg.m)
    bounds = lift_bounds(rep, cfg.tol)
    trend = verify_modified_poincare(event, family, cfg.t, cfg.m, cfg.tol)
    fs = trend.checks[-1]
    failed = not bounds.passed or not trend.passed
    doc = {"report": rep.to_json(), "falik_samorodnitsky": fs.to_json(), "lift_bounds": bounds.to_json(),
           "modified_poincare": trend.to_json()}
    header = ["i"] + [f"j{j}" for j in range(event.n)]
    rows = [[i + 1, *row] for i, row in enumerate(rep.abs_moments.tolist())]
    summary = f"m={cfg.m} M1={rep.m1:.6g} M2={rep.m2:.6g} V={rep.variance:.6g} " \
              f"fs={fs.status} bounds={_status(not bounds.passed)}"
    return doc, failed, (header, rows), summary


def cmd_verify(cfg, event, family):
    sw = sweep(event, family, _sweep_grid(cfg, family))
    bound = verify_threshold_bound(sw, cfg.t1, cfg.t2, cfg.tol)
    remark = verify_remark_bound(sw, cfg.t1, cfg.t2, cfg.tol)
    pairs, pair_fail = _pairs_doc(sw, cfg)
    failed = bound.status == "fail" or not remark.passed or pair_fail
    doc = {"bound": bound.to_json(), "remark": remark.to_json(), "pairs": pairs,
           "gamma_star": bound.gamma_star, "s_star": bound.s_star, "eta_star": remark.eta_star,
           "grid_resolution": sw.resolution}
    res = "n/a" if bound.residual is None else f"{bound.residual:.6g}"
    summary = f"threshold bound {bound.status}: lhs={bound.lhs:.6g} rhs={bound.rhs:.6g} residual={res}; " \
              f"eta bound {_status(not remark.passed)}; {pairs['pairs']} pairs, {pairs['failures']} failures"
    return doc, failed, (sw.csv_header(), sw.csv_rows()), summary


def cmd_mc(cfg, event, family):
    kw = {"samples": cfg.samples, "seed": cfg.seed, "level": cfg.level}
    nu = estimate_measure(event, family, cfg.t, **kw)
    piv = [estimate_pivotal(event, family, cfg.t, j, **kw) for j in range(event.n)]
    inf = [estimate_influence(event, family, cfg.t, j, **kw) for j in range(event.n)]
    doc = {"t": cfg.t, "nu": nu.to_json(), "pivotal": [e.to_json() for e in piv],
           "influences": [e.to_json() for e in inf], "monotone_checked": not cfg.unchecked}
    header = ["quantity", "j", "value", "stderr", "lo", "hi", "samples"]
    rows = [["nu", "", nu.value, nu.stderr, nu.lo, nu.hi, nu.samples]]
    rows += [["pivotal", j, e.value, e.stderr, e.lo, e.hi, e.samples] for j, e in enumerate(piv)]
    rows += [["influence", j, e.value, e.stderr, e.lo, e.hi, e.samples] for j, e in enumerate(inf)]
    summary = f"nu ~ {nu.value:.6g} [{nu.lo:.6g}, {nu.hi:.6g}] at level {cfg.level}"
    return doc, False, (header, rows), summary


HANDLERS = {"analyze": cmd_analyze, "sweep": cmd_sweep, "lift": cmd_lift,
            "verify": cmd_verify, "mc": cmd_mc}


def render(cfg: RunConfig, event, family, doc, failed) -> str:
    envelope = {
        "command": cfg.command,
        "status": _status(failed),
        "metadata": {
            "version": __version__,
            "log_base": "e",
            "defaults": DEFAULTS,
            "enumeration_cap": enumeration_cap(),
            "parameters": {k: v for k, v in vars(cfg).items() if k not in ("event", "family", "out")},
            "event": event.to_json(),
            "family": family.to_json(),
        },
        "result": doc,
    }
    return json.dumps(_clean(envelope), sort_keys=True, indent=2) + "\n"


def render_csv(table) -> str:
    header, rows = table
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in _clean(rows):
        writer.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    try:
        cfg.validate()
        event, family = load_inputs(cfg)
        doc, failed, table, summary = HANDLERS[cfg.command](cfg, event, family)
        text = render(cfg, event, family, doc, failed) if cfg.format == "json" else render_csv(table)
    except ThresholdLabError as exc:
        print(f"error [{origin(exc)}]: {exc}", file=sys.stderr)
        return 1
    if cfg.out:
        try:
            with open(cfg.out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error [cli_runner]: cannot write {cfg.out}: {exc}", file=sys.stderr)
            return 1
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); keep the exit status
            sys.stdout = open(os.devnull, "w")
    print(f"{cfg.command}: {_status(failed).upper()} - {summary}", file=sys.stderr)
    return 2 if failed else 0


def _epsilons(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad epsilon list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--event", required=True, help="event definition (JSON)")
    common.add_argument("--family", required=True, help="measure family definition (JSON)")
    common.add_argument("--t", type=float, help="parameter value (analyze, lift, mc)")
    common.add_argument("--t1", type=float, help="left end of the parameter range")
    common.add_argument("--t2", type=float, help="right end of the parameter range")
    common.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS,
                        help=f"sweep grid size (default: {DEFAULT_GRID_POINTS})")
    common.add_argument("--m", type=int, default=DEFAULT_DIGITS,
                        help=f"dyadic digit depth for lift (default: {DEFAULT_DIGITS})")
    common.add_argument("--epsilon", type=_epsilons, default=(),
                        help="comma-separated window levels for sweep, e.g. 0.1,0.25")
    common.add_argument("--samples", type=int, default=DEFAULT_SAMPLES,
                        help=f"Monte Carlo samples (default: {DEFAULT_SAMPLES})")
    common.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    common.add_argument("--level", type=float, default=DEFAULT_LEVEL,
                        help=f"confidence level of Monte Carlo intervals (default: {DEFAULT_LEVEL})")
    common.add_argument("--tol", type=float, default=BOUND_TOL,
                        help=f"pass tolerance for inequality checks (default: {BOUND_TOL:g}; "
                             f"lift default {LIFT_TOL:g})")
    common.add_argument("--pairs", type=int, default=None,
                        help="check this many sampled grid pairs instead of all of them")
    common.add_argument("--mode", choices=("exact", "mc"), default="exact", help="sweep engine (default: exact)")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="output format (default: json)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--unchecked", action="store_true",
                        help="skip the exhaustive monotonicity check (Monte Carlo modes only)")

    parser = argparse.ArgumentParser(prog="threshold-lab",
                                     description="Influences, pivotal probabilities and threshold bounds "
                                                 "for increasing events on {1..r}^n.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"analyze": "exact point report at --t",
             "sweep": "point reports along a grid, windows and all-pairs bound checks",
             "lift": "dyadic-lift moments and modified Poincare checks at --t, depth --m",
             "verify": "threshold bound on [--t1, --t2] plus all grid pairs",
             "mc": "Monte Carlo estimates at --t"}
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(RunConfig(**vars(args)))


if __name__ == "__main__":
    sys.exit(main())
