"""Run configuration and the table builders behind each CLI command.

Every builder is a pure function of the inputs and the :class:`RunConfig`;
rows come back fully sorted so emitted files are diff-stable.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import platform
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import __version__, _kernels
from .analysis import (
    entropy_curve,
    individual_shot_clock_profiles,
    outcome_association_suite,
    outcome_by_type_test,
    position_difference_test,
    scan_possession_type,
    shot_clock_profiles,
)
from .columnar import TYPE_CODES, PossessionTable, WindowTable, build_tables, position_hits
from .data import (
    POSITIONS,
    AnalysisSet,
    Dataset,
    PossessionType,
    filter_and_categorize,
    load_outcome_map,
    parse_dataset,
)
from .errors import ConfigError
from .graphlets import GRAPHLET_ORDER
from .metrics import Level, Metric, game_aggregates_table, metric_series, ratio
from .stats import TestResult, wilson_interval
from .windowing import WindowConfig

__all__ = [
    "RunConfig",
    "Loaded",
    "load",
    "ingest_report",
    "profile_rows",
    "snapshot_rows",
    "scan_rows",
    "metric_rows",
    "game_metric_rows",
    "test_rows",
    "build_bundle",
    "write_rows",
    "write_text",
    "COLUMNS",
]

CONFIG_ENV = "TEMPORAL_FLOW_CONFIG"

COLUMNS = {
    "profiles": ("possession_type", "shot_clock_s", "position", "class", "count", "frequency"),
    "entropy": ("possession_type", "shot_clock_s", "position", "entropy_bits", "n_windows"),
    "snapshots": ("possession_id", "k", "t_start_s", "shot_clock_s", "carrier", "pass_count", "node_ids"),
    "scan": ("possession_type", "shot_clock_s", "first_different_s", "statistic", "p_value", "n_tests"),
    "metrics": ("subject", "subject_kind", "level", "possession_type", "metric", "shot_clock_s",
                "mean", "ci_low", "ci_high", "n"),
    "game_metrics": ("game_id", "possession_type", "position", "n_possessions", "play_fc", "play_fb",
                     "adapted_fc", "adapted_fc_ci_low", "adapted_fc_ci_high",
                     "adapted_fb", "adapted_fb_ci_low", "adapted_fb_ci_high"),
    "tests": ("test_kind", "scope", "statistic", "df", "p_value", "effect", "ci_low", "ci_high", "n", "flags"),
}

_TYPE_CHOICES = {
    "both": (PossessionType.BALL_IN, PossessionType.BALL_OUT),
    "ball-in": (PossessionType.BALL_IN,),
    "ball-out": (PossessionType.BALL_OUT,),
}


@dataclass(frozen=True)
class RunConfig:
    events: str = ""
    roster: str = ""
    outcome_map: str = ""
    out: str = "out"
    format: str = "csv"
    possession_type: str = "both"
    window_s: float = 6.0
    step_s: float = 0.5
    min_duration_s: float = 6.0
    alpha: float = 0.05
    holm: bool = False
    yates: bool = True
    resamples: int = 2000
    seed: int = 0
    kw_unit: str = "player"
    n_possessions: int = 2000

    def __post_init__(self) -> None:
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, not {self.format!r}")
        if self.possession_type not in _TYPE_CHOICES:
            raise ConfigError(f"type must be one of {sorted(_TYPE_CHOICES)}")
        if self.kw_unit not in ("player", "position"):
            raise ConfigError("kw_unit must be player or position")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.resamples < 1:
            raise ConfigError("resamples must be positive")
        WindowConfig(self.window_s, self.step_s)

    @property
    def window(self) -> WindowConfig:
        return WindowConfig(self.window_s, self.step_s)

    @property
    def types(self) -> tuple[PossessionType, ...]:
        return _TYPE_CHOICES[self.possession_type]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_kv(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name}={str(v).lower() if isinstance(v, bool) else v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_sources(cls, config_path: str | None = None, overrides: Mapping[str, Any] | None = None) -> "RunConfig":
        """Defaults, then the key=value file (or ``$TEMPORAL_FLOW_CONFIG``), then overrides."""
        values: dict[str, Any] = {}
        path = config_path or os.environ.get(CONFIG_ENV)
        if path:
            values.update(parse_kv(Path(path).read_text("utf-8")))
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls(**_coerce(values))


def parse_kv(text: str) -> dict[str, str]:
    out = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {n}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _coerce(values: Mapping[str, Any]) -> dict[str, Any]:
    types = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    out = {}
    for key, value in values.items():
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        kind = types[key]
        if isinstance(value, str):
            if kind == "bool":
                if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise ConfigError(f"{key}: not a boolean: {value!r}")
                value = value.lower() in ("true", "1", "yes")
            elif kind == "int":
                value = int(value)
            elif kind == "float":
                value = float(value)
        out[key] = value
    return out


# -- loading ------------------------------------------------------------------


@dataclass(frozen=True)
class Loaded:
    dataset: Dataset
    analysis: AnalysisSet
    ptab: PossessionTable
    wtab: WindowTable


def load(cfg: RunConfig, strict: bool = True) -> Loaded:
    if not cfg.events or not cfg.roster:
        raise ConfigError("both --events and --roster are required")
    mapping = load_outcome_map(cfg.outcome_map or None)
    dataset = parse_dataset(cfg.events, cfg.roster, mapping, strict=strict)
    analysis = filter_and_categorize(dataset, min_duration=cfg.min_duration_s)
    ptab, wtab = build_tables(analysis.possessions, analysis.rosters, cfg.window)
    return Loaded(dataset, analysis, ptab, wtab)


# -- formatting helpers ---------------------------------------------------------


def _num(x) -> float | int | None:
    if x is None:
        return None
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.12g}")


def _type_names(cfg: RunConfig) -> list[str]:
    return [t.value for t in cfg.types]


# -- command tables -------------------------------------------------------------


def ingest_report(loaded: Loaded) -> dict:
    ds, an, wtab = loaded.dataset, loaded.analysis, loaded.wtab
    prov = ds.provenance
    by_type = {
        t.value: int((wtab.ptype == code).sum()) for t, code in TYPE_CODES.items()
    }
    return {
        "possessions_in": prov.get("possessions_in", len(ds.possessions)),
        "possessions_parsed": len(ds.possessions),
        "possessions_rejected": prov.get("possessions_rejected", 0),
        "passes_parsed": ds.n_passes,
        "issues": list(prov.get("issues", [])),
        "warnings": list(prov.get("warnings", [])),
        "filter": dict(an.log),
        "snapshots": len(wtab),
        "snapshots_by_type": by_type,
        "snapshots_flagged": int(wtab.flagged.sum()),
    }


def profile_rows(loaded: Loaded, cfg: RunConfig) -> tuple[list[dict], list[dict]]:
    """(profiles.csv rows, entropy.csv rows): macro profiles plus one per position."""
    prof, ent = [], []
    for ptype in cfg.types:
        groups = [("", shot_clock_profiles(loaded.wtab, ptype))]
        groups += [
            (pos.value, individual_shot_clock_profiles(loaded.ptab, loaded.wtab, pos, ptype))
            for pos in POSITIONS
        ]
        for position, profiles in groups:
            for key, h, n in entropy_curve(profiles):
                ent.append({"possession_type": ptype.value, "shot_clock_s": key[1], "position": position,
                            "entropy_bits": _num(h), "n_windows": n})
            for p in profiles:
                freq = p.frequencies()
                for cls, count, f in zip(GRAPHLET_ORDER, p.counts, freq):
                    prof.append({"possession_type": ptype.value, "shot_clock_s": p.key[1], "position": position,
                                 "class": cls.value, "count": count, "frequency": _num(f)})
    return prof, ent


def snapshot_rows(loaded: Loaded, cfg: RunConfig) -> list[dict]:
    ptab, wtab = loaded.ptab, loaded.wtab
    step_ms = cfg.window.step_ms
    rows = []
    for i in range(len(wtab)):
        p = int(wtab.poss[i])
        players = ptab.team_players[int(wtab.team[i])]
        mask = int(wtab.involved[i])
        nodes = sorted(players[b] for b in range(len(players)) if mask >> b & 1)
        rows.append({
            "possession_id": ptab.ids[p], "k": int(wtab.k[i]),
            "t_start_s": _num(int(wtab.k[i]) * step_ms / 1000.0),
            "shot_clock_s": _num(wtab.clock_ms[i] / 1000.0),
            "carrier": players[int(wtab.carrier[i])], "pass_count": int(wtab.n_passes[i]),
            "node_ids": ";".join(nodes),
        })
    rows.sort(key=lambda r: (r["possession_id"], r["k"]))
    return rows


def scan_rows(loaded: Loaded, cfg: RunConfig) -> list[dict]:
    rows = []
    for ptype in cfg.types:
        for step in scan_possession_type(loaded.wtab, ptype, alpha=cfg.alpha, holm=cfg.holm):
            rows.append({"possession_type": ptype.value, "shot_clock_s": step.shot_clock,
                         "first_different_s": step.first_different, "statistic": _num(step.statistic),
                         "p_value": _num(step.p_value), "n_tests": step.n_tests})
    return rows


def _rate_row(subject, kind, level, ptype, metric, clock, k, n) -> dict:
    lo, hi = wilson_interval(k, n)
    return {"subject": subject, "subject_kind": kind, "level": level, "possession_type": ptype,
            "metric": metric, "shot_clock_s": clock, "mean": _num(k / n), "ci_low": _num(lo),
            "ci_high": _num(hi), "n": n}


def _ratio_row(subject, kind, level, ptype, fb_k, fc_k, n) -> dict:
    r = ratio(fb_k / n, fc_k / n) if n else None
    return {"subject": subject, "subject_kind": kind, "level": level, "possession_type": ptype,
            "metric": "FBFC", "shot_clock_s": None, "mean": _num(r), "ci_low": None, "ci_high": None, "n": n}


def metric_rows(loaded: Loaded, cfg: RunConfig) -> list[dict]:
    ptab, wtab = loaded.ptab, loaded.wtab
    rows = []
    for ptype in cfg.types:
        code = TYPE_CODES[ptype]
        for level, table in ((Level.PLAY, ptab), (Level.GRAPHLET, wtab)):
            sel = table.ptype == code
            n = int(sel.sum())
            if n == 0:
                continue
            for pos in POSITIONS:
                fc = int(position_hits(table.involved[sel], table.team[sel], ptab.position_mask, pos).sum())
                fb = int(position_hits(table.between[sel], table.team[sel], ptab.position_mask, pos).sum())
                rows.append(_rate_row(pos.value, "position", level.value, ptype.value, "FC", None, fc, n))
                rows.append(_rate_row(pos.value, "position", level.value, ptype.value, "FB", None, fb, n))
                rows.append(_ratio_row(pos.value, "position", level.value, ptype.value, fb, fc, n))
            # players: denominator is their own team's units
            for ti, players in enumerate(ptab.team_players):
                tsel = sel & (table.team == ti)
                nt = int(tsel.sum())
                if nt == 0:
                    continue
                inv, btw = table.involved[tsel], table.between[tsel]
                for b, pid in enumerate(players):
                    fc = int(((inv >> b) & 1).sum())
                    fb = int(((btw >> b) & 1).sum())
                    name = f"{ptab.teams[ti]}:{pid}"
                    rows.append(_rate_row(name, "player", level.value, ptype.value, "FC", None, fc, nt))
                    rows.append(_rate_row(name, "player", level.value, ptype.value, "FB", None, fb, nt))
                    rows.append(_ratio_row(name, "player", level.value, ptype.value, fb, fc, nt))
        if not np.any(wtab.ptype == code):
            continue
        for pos in POSITIONS:
            for metric in Metric:
                series = metric_series(ptab, wtab, pos, ptype, metric)
                for pt in series.points:
                    rows.append({"subject": pos.value, "subject_kind": "position", "level": "graphlet",
                                 "possession_type": ptype.value, "metric": metric.value,
                                 "shot_clock_s": pt.shot_clock, "mean": _num(pt.mean), "ci_low": _num(pt.ci_low),
                                 "ci_high": _num(pt.ci_high), "n": pt.n})
    rows.sort(key=lambda r: (r["subject_kind"], r["subject"], r["level"], r["possession_type"], r["metric"],
                             -1.0 if r["shot_clock_s"] is None else -r["shot_clock_s"]))
    return rows


def game_metric_rows(loaded: Loaded, cfg: RunConfig) -> list[dict]:
    wanted = set(_type_names(cfg))
    rows = []
    for g in game_aggregates_table(loaded.ptab, loaded.wtab):
        if g.possession_type.value not in wanted:
            continue
        rows.append({
            "game_id": g.game_id, "possession_type": g.possession_type.value, "position": g.subject,
            "n_possessions": g.n_possessions, "play_fc": _num(g.play_fc), "play_fb": _num(g.play_fb),
            "adapted_fc": _num(g.adapted_fc), "adapted_fc_ci_low": _num(g.adapted_fc_ci[0]),
            "adapted_fc_ci_high": _num(g.adapted_fc_ci[1]), "adapted_fb": _num(g.adapted_fb),
            "adapted_fb_ci_low": _num(g.adapted_fb_ci[0]), "adapted_fb_ci_high": _num(g.adapted_fb_ci[1]),
        })
    return rows


def _test_row(r: TestResult) -> dict:
    scope = ";".join(f"{k}={v}" for k, v in r.scope.items())
    return {"test_kind": r.kind, "scope": scope, "statistic": _num(r.statistic), "df": r.df,
            "p_value": _num(r.p_value), "effect": _num(r.effect),
            "ci_low": _num(r.ci95[0]) if r.ci95 else None, "ci_high": _num(r.ci95[1]) if r.ci95 else None,
            "n": r.n, "flags": ";".join(r.flags)}


def test_rows(loaded: Loaded, cfg: RunConfig) -> list[dict]:
    ptab, wtab = loaded.ptab, loaded.wtab
    results: list[TestResult] = []
    if all(np.any(ptab.ptype == c) for c in TYPE_CODES.values()):
        results.append(outcome_by_type_test(ptab, correction=cfg.yates))
    for level in Level:
        for metric in Metric:
            for ptype in cfg.types:
                if np.any(ptab.ptype == TYPE_CODES[ptype]):
                    results.append(position_difference_test(
                        ptab, wtab, level, metric, ptype, unit=cfg.kw_unit,
                        resamples=cfg.resamples, seed=cfg.seed,
                    ))
    for level in Level:
        results.extend(outcome_association_suite(ptab, wtab, level, correction=cfg.yates,
                                                 possession_types=cfg.types))
    rows = [_test_row(r) for r in results]
    rows.sort(key=lambda r: (r["test_kind"], r["scope"]))
    return rows


# -- bundle -------------------------------------------------------------------------


def _sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def provenance(cfg: RunConfig) -> dict:
    import scipy

    if cfg.outcome_map:
        map_hash = _sha256(cfg.outcome_map)
    else:
        data = resources.files(__package__).joinpath("outcome_map.csv").read_bytes()
        map_hash = hashlib.sha256(data).hexdigest()
    return {
        "inputs": {"events_sha256": _sha256(cfg.events), "roster_sha256": _sha256(cfg.roster),
                   "outcome_map_sha256": map_hash},
        "versions": {"temporal_flow": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version(), "kernel_backend": _kernels.BACKEND},
    }


def build_bundle(cfg: RunConfig) -> dict:
    loaded = load(cfg)
    prof, ent = profile_rows(loaded, cfg)
    return {
        "config": cfg.to_dict(),
        "provenance": provenance(cfg),
        "ingest": ingest_report(loaded),
        "profiles": prof,
        "entropy": ent,
        "scan": scan_rows(loaded, cfg),
        "metrics": metric_rows(loaded, cfg),
        "game_metrics": game_metric_rows(loaded, cfg),
        "tests": test_rows(loaded, cfg),
    }


# -- writing ------------------------------------------------------------------------


def write_text(path: str | Path, text: str) -> Path:
    """Write and fsync; all output goes through here."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    return path


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, ensure_ascii=False) + "\n"


def write_rows(rows: Sequence[Mapping], columns: Sequence[str], out_dir: str | Path, name: str, fmt: str) -> Path:
    if fmt == "json":
        return write_text(Path(out_dir) / f"{name}.json", dumps([{c: r[c] for c in columns} for r in rows]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if r[c] is None else r[c] for c in columns])
    return write_text(Path(out_dir) / f"{name}.csv", buf.getvalue())
