"""Command-line front end: ``relscatter {amplitudes,packet,evolve,compare,run}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from pathlib import Path

from . import __version__
from .errors import ScatterError
from .harness import ScenarioConfig, amplitude_sweep, run_scenario
from .snapshot import compare, import_snapshot


def _nmax(value: str):
    if value == "resum":
        return value
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("--nmax takes a non-negative integer or 'resum'")
    if n < 0:
        raise argparse.ArgumentTypeError("--nmax must be non-negative")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relscatter", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p, method=True):
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--nmax", type=_nmax, help="MSE loop count or 'resum'")
        if method:
            p.add_argument("--method", choices=("semi", "fd", "both"))
        p.add_argument("--plot-script", action="store_true",
                       help="also write a gnuplot script referencing the CSVs")

    p = sub.add_parser("amplitudes", help="amplitude and convergence table over a p1 sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (table goes to stdout otherwise)")
    p.add_argument("--nmax", type=_nmax)
    p.add_argument("--pmin", type=float)
    p.add_argument("--pmax", type=float)
    p.add_argument("--count", type=int, default=25)
    scenario_args(sub.add_parser("packet", help="semi-analytic snapshots"), method=False)
    scenario_args(sub.add_parser("evolve", help="finite-difference snapshots"), method=False)
    p = sub.add_parser("compare", help="metrics between two snapshot CSV files")
    p.add_argument("first")
    p.add_argument("second")
    scenario_args(sub.add_parser("run", help="full scenario, both methods by default"))
    return parser


def _load(args) -> ScenarioConfig:
    cfg = ScenarioConfig.from_file(args.config)
    changes = {}
    if getattr(args, "out", None):
        changes["output_dir"] = args.out
    if getattr(args, "nmax", None) is not None:
        changes["n_max"] = args.nmax
    if getattr(args, "plot_script", False):
        changes["plot_script"] = True
    return cfg.replace(**changes) if changes else cfg


def _cmd_amplitudes(args) -> int:
    import numpy as np

    cfg = _load(args)
    p_values = None
    if args.pmin is not None or args.pmax is not None:
        if args.pmin is None or args.pmax is None:
            raise ValueError("--pmin and --pmax must be given together")
        p_values = np.linspace(args.pmin, args.pmax, args.count)
    rows = amplitude_sweep(cfg, p_values)
    buf = io.StringIO(newline="")
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    if cfg.output_dir:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "amplitudes.csv").write_text(buf.getvalue())
        print(out / "amplitudes.csv")
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def _summary(report) -> dict:
    return {"scenario_hash": report.scenario_hash, "metrics": report.metrics,
            "superradiance": report.superradiance,
            "final_charges": {k: v[-1] for k, v in report.charges.items() if v},
            "warnings": report.warnings}


def _cmd_scenario(args, method) -> int:
    cfg = _load(args)
    _, report = run_scenario(cfg, method=method)
    json.dump(_summary(report), sys.stdout, indent=1, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def _cmd_compare(args) -> int:
    a, b = import_snapshot(args.first), import_snapshot(args.second)
    json.dump(compare(a, b), sys.stdout, indent=1, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            if args.command == "amplitudes":
                return _cmd_amplitudes(args)
            if args.command == "packet":
                return _cmd_scenario(args, "semi")
            if args.command == "evolve":
                return _cmd_scenario(args, "fd")
            if args.command == "compare":
                return _cmd_compare(args)
            return _cmd_scenario(args, args.method)
    except (ScatterError, ValueError, ArithmeticError, OSError, KeyError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        sys.stderr.write(json.dumps(err) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
