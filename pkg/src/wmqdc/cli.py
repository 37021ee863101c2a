"""Command-line entry point: ``wmqdc fig3|fig4|fig5|check|point|sweep``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import optomech, oracle
from .errors import DegeneratePostselectionError, TruncationError
from .sweep import ConfigError, RunConfig, figure_series

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEVIATION = 3
EXIT_TRUNCATION = 4

CHECK_STEPS = 200

_FLAG_FIELDS = {
    "k": "k",
    "alpha_frac": "alpha_over_halfpi",
    "tau_start": "tau_start",
    "tau_stop": "tau_stop",
    "steps": "steps",
    "cutoff": "cutoff",
    "kappa_ratio": "kappa_ratio",
}


def _cutoff_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with RunConfig fields")
    common.add_argument("--k", type=float, help="coupling g/omega_m")
    common.add_argument("--alpha-frac", type=float, help="ancilla angle as a fraction of pi/2")
    common.add_argument("--tau-start", type=float)
    common.add_argument("--tau-stop", type=float)
    common.add_argument("--steps", type=int)
    common.add_argument("--cutoff", type=_cutoff_arg, help="Fock cutoff (integer or 'auto')")
    common.add_argument("--kappa-ratio", type=float, help="kappa/omega_m")
    common.add_argument("--paper-literal", action="store_true", default=None, help="use the formulas as printed")
    common.add_argument("--out", type=Path, help="output file (figures: one file per series)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(prog="wmqdc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fig3", parents=[common], help="<q>/sigma series for three ancilla angles")
    sub.add_parser("fig4", parents=[common], help="<p>/(hbar/2sigma) series for three ancilla angles")
    sub.add_parser("fig5", parents=[common], help="arrival densities for omega_m/kappa in {1, 2, 4}")
    sub.add_parser("sweep", parents=[common], help="single series from the configuration")
    point = sub.add_parser("point", parents=[common], help="single-point evaluation as JSON")
    point.add_argument("--tau", type=float, default=math.pi)
    sub.add_parser("check", parents=[common], help="closed forms versus the brute-force oracle")
    return parser


def load_config(args) -> tuple[RunConfig, set]:
    """Merge defaults, the config file and explicit flags; return the explicit keys too."""
    config = RunConfig()
    explicit = set()
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from None
        config = RunConfig.from_json(text)
        explicit |= set(json.loads(text))
    overrides = {name: getattr(args, flag) for flag, name in _FLAG_FIELDS.items() if getattr(args, flag) is not None}
    if args.paper_literal:
        overrides["paper_literal"] = True
    explicit |= set(overrides)
    return RunConfig.from_dict(overrides, base=config), explicit


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def cmd_figure(figure: str, config: RunConfig, args) -> int:
    series = figure_series(config, figure)
    if args.format == "json":
        doc = {"figure": figure, "config": config.to_dict(), "series": [s.to_dict() for s in series]}
        _emit(json.dumps(doc, indent=1) + "\n", args.out)
        return EXIT_OK
    if args.out is not None and len(series) > 1:
        for s in series:
            tag = s.label.split("=", 1)[1]
            path = args.out.with_name(f"{args.out.stem}_{tag}{args.out.suffix or '.csv'}")
            path.write_text(s.to_csv(), encoding="utf-8")
            print(path)
        return EXIT_OK
    if len(series) == 1:
        _emit(series[0].to_csv(), args.out)
        return EXIT_OK
    _emit("".join(f"# series: {s.label}\n{s.to_csv()}" for s in series), args.out)
    return EXIT_OK


def point_record(config: RunConfig, tau: float) -> dict:
    params = config.params()
    record = {
        "k": config.k,
        "alpha_over_halfpi": config.alpha_over_halfpi,
        "tau": tau,
        "paper_literal": config.paper_literal,
        "degenerate": False,
        "q_over_sigma": None,
        "p_over_hbar2sigma": None,
        "prob_success": optomech.success_probability(params, tau),
        "expansion": {},
    }
    method = "literal" if config.paper_literal else "closed"
    try:
        q = optomech.mean_q(params, tau, method)
        p = optomech.mean_p(params, tau, method)
    except DegeneratePostselectionError as exc:
        record["degenerate"] = True
        record["error"] = str(exc)
        return record
    record["q_over_sigma"] = q
    record["p_over_hbar2sigma"] = p
    if optomech.in_odd_window(params, tau):
        q_odd = optomech.mean_q_odd(params, literal=config.paper_literal)
        record["expansion"]["odd"] = {
            "q_over_sigma": q_odd,
            "delta": q_odd - q,
            "relative": abs(q_odd - q) / abs(q) if q else None,
        }
    if optomech.in_even_window(params, tau):
        p_even = optomech.mean_p_even(params, tau, literal=config.paper_literal)
        record["expansion"]["even"] = {
            "p_over_hbar2sigma": p_even,
            "delta": p_even - p,
            "relative": abs(p_even - p) / abs(p) if p else None,
        }
    return record


def cmd_point(config: RunConfig, args) -> int:
    record = point_record(config, args.tau)
    _emit(json.dumps(record, indent=1) + "\n", args.out)
    return EXIT_OK


def cmd_check(config: RunConfig, explicit: set, args) -> int:
    k_values = (config.k,) if "k" in explicit else oracle.DEFAULT_K
    alphas = (config.alpha_over_halfpi,) if "alpha_over_halfpi" in explicit else oracle.DEFAULT_ALPHA_FRACS
    steps = config.steps if "steps" in explicit else CHECK_STEPS
    taus = np.linspace(config.tau_start, config.tau_stop, steps)
    try:
        report = oracle.crosscheck(k_values, alphas, taus, cutoff=config.fock_cutoff)
    except TruncationError as exc:
        print(f"truncation failure: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    if report.n_points == 0:
        print("config error: every grid point is a degenerate post-selection", file=sys.stderr)
        return EXIT_CONFIG
    if args.format == "json":
        doc = {
            "passed": report.passed,
            "tolerance": oracle.CROSSCHECK_TOL,
            "n_points": report.n_points,
            "n_degenerate": report.n_degenerate,
            "max_dev": report.max_dev,
            "flagged": [list(f) for f in report.flagged],
            "divergences": [
                {
                    "formula": d.name,
                    "quantity": d.quantity,
                    "printed_vs_reference": d.literal_vs_reference if math.isfinite(d.literal_vs_reference) else None,
                    "derived_vs_reference": d.derived_vs_reference,
                    "reference": d.reference,
                    "printed_matches": d.printed_matches,
                }
                for d in report.divergences
            ],
        }
        _emit(json.dumps(doc, indent=1) + "\n", args.out)
    else:
        _emit(report.format() + "\n", args.out)
    return EXIT_OK if report.passed else EXIT_DEVIATION


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config, explicit = load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command in ("fig3", "fig4", "fig5", "sweep"):
        return cmd_figure(args.command, config, args)
    if args.command == "point":
        return cmd_point(config, args)
    return cmd_check(config, explicit, args)


if __name__ == "__main__":
    sys.exit(main())
