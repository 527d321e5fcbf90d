"""Command line for temporal passing-network analysis.

Errors from any stage are printed to stderr as one JSON object and the
process exits non-zero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import TemporalFlowError
from .report import (
    COLUMNS,
    RunConfig,
    build_bundle,
    dumps,
    game_metric_rows,
    ingest_report,
    load,
    metric_rows,
    profile_rows,
    scan_rows,
    snapshot_rows,
    test_rows,
    write_rows,
    write_text,
)
from .synthgen import SynthConfig, generate, write_dataset

EXIT_ERROR = 2

# flag dest -> RunConfig field
_FLAG_FIELDS = {
    "events": "events", "roster": "roster", "outcome_map": "outcome_map", "out": "out",
    "format": "format", "type": "possession_type", "alpha": "alpha", "seed": "seed",
    "resamples": "resamples", "window_s": "window_s", "step_s": "step_s",
    "min_duration_s": "min_duration_s", "holm": "holm", "yates": "yates", "kw_unit": "kw_unit",
    "n_possessions": "n_possessions",
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--events", help="events CSV")
    p.add_argument("--roster", help="roster CSV")
    p.add_argument("--outcome-map", help="outcome code mapping CSV (code,outcome)")
    p.add_argument("--config", help="key=value config file (default: $TEMPORAL_FLOW_CONFIG)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--type", choices=("ball-in", "ball-out", "both"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--resamples", type=int)
    p.add_argument("--window-s", type=float)
    p.add_argument("--step-s", type=float)
    p.add_argument("--min-duration-s", type=float)
    p.add_argument("--holm", action=argparse.BooleanOptionalAction, default=None,
                   help="Holm-adjust each shot-clock value's scan comparisons")
    p.add_argument("--yates", action=argparse.BooleanOptionalAction, default=None,
                   help="continuity correction on 2x2 outcome tables")
    p.add_argument("--kw-unit", choices=("player", "position"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="temporal-flow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate inputs and write ingest_report.json")
    _common(p)
    p.add_argument("--strict", action="store_true", help="fail if any possession is rejected")
    p = sub.add_parser("profiles", help="graphlet profiles and state entropy per shot-clock value")
    _common(p)
    p.add_argument("--snapshots", action="store_true", help="also write snapshots.csv")
    for name, text in (("scan", "sequential shot-clock profile scan"),
                       ("metrics", "flow centrality and betweenness"),
                       ("tests", "chi-square, odds ratio and Kruskal-Wallis tests"),
                       ("report", "single JSON bundle of every output with provenance")):
        _common(sub.add_parser(name, help=text))
    p = sub.add_parser("synth", help="write a seeded synthetic dataset")
    _common(p)
    p.add_argument("--n-possessions", type=int)
    p.add_argument("--pass-rates", help="three comma-separated passes/s (early,middle,late)")
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    overrides = {field: getattr(args, dest, None) for dest, field in _FLAG_FIELDS.items()}
    return RunConfig.from_sources(args.config, overrides)


def _emit(cfg: RunConfig, name: str, rows) -> None:
    write_rows(rows, COLUMNS[name], cfg.out, name, cfg.format)


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _config(args)
    cmd = args.command
    out = Path(cfg.out)

    if cmd == "synth":
        synth = SynthConfig(seed=cfg.seed, n_possessions=cfg.n_possessions)
        if args.pass_rates:
            synth = synth.with_(pass_rates=tuple(float(x) for x in args.pass_rates.split(",")))
        events, roster = write_dataset(generate(synth), out)
        print(json.dumps({"events": str(events), "roster": str(roster)}))
        return 0
    if cmd == "report":
        write_text(out / "bundle.json", dumps(build_bundle(cfg)))
        return 0

    loaded = load(cfg, strict=cmd == "ingest" and args.strict)
    if cmd == "ingest":
        write_text(out / "ingest_report.json", dumps(ingest_report(loaded)))
    elif cmd == "profiles":
        prof, ent = profile_rows(loaded, cfg)
        _emit(cfg, "profiles", prof)
        _emit(cfg, "entropy", ent)
        if args.snapshots:
            _emit(cfg, "snapshots", snapshot_rows(loaded, cfg))
    elif cmd == "scan":
        _emit(cfg, "scan", scan_rows(loaded, cfg))
    elif cmd == "metrics":
        _emit(cfg, "metrics", metric_rows(loaded, cfg))
        _emit(cfg, "game_metrics", game_metric_rows(loaded, cfg))
    elif cmd == "tests":
        _emit(cfg, "tests", test_rows(loaded, cfg))
    return 0


def _error_json(kind: str, message: str) -> str:
    return json.dumps({"error": {"kind": kind, "message": message}}, sort_keys=True)


def main(argv: list[str] | None = None) -> int:
    try:
        return run(argv)
    except TemporalFlowError as exc:
        print(json.dumps({"error": exc.to_dict()}, sort_keys=True, default=str), file=sys.stderr)
    except (OSError, ValueError) as exc:
        print(_error_json(type(exc).__name__, str(exc)), file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
