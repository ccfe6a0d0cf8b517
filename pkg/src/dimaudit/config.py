"""Flat ``key = value`` run configuration.

Blank lines and lines starting with ``#`` are ignored. Lists are
comma-separated. Unknown keys are an error so typos do not pass silently.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .errors import SchemaError
from .ingest import DEFAULT_ATTRIBUTES, Schema
from .predict import DEFAULT_LAMBDA_GRID

STAGES = ("describe", "alpha", "pca", "parallel", "bootstrap", "predict", "cluster", "forest")

_HELP = {
    "input": "rating CSV (header row, comma-separated, UTF-8)",
    "out": "output directory for report.json and table/figure CSVs",
    "seed": "master seed; per-stage seeds are derived from it",
    "workers": "threads for resampling stages (results do not depend on it)",
    "id_column": "player id column",
    "season_column": "season column (empty: none)",
    "rating_column": "overall rating column",
    "attributes": "comma-separated attribute columns to analyse",
    "aggregate": "average multi-season rows per player before filtering",
    "parallel_iterations": "number of Gaussian null datasets",
    "parallel_percentile": "null percentile used as retention threshold",
    "parallel_rule": "prefix (stop at first failure) or count (all exceedances)",
    "bootstrap_iterations": "bootstrap resamples for PC1 stability",
    "folds": "outer cross-validation folds",
    "inner_folds": "inner folds for ridge lambda selection",
    "lambda_grid": "comma-separated ridge penalties searched by inner CV",
    "r2_reference": "fold (evaluation-fold mean) or train (training-fold mean)",
    "top_loadings": "rows in the PC1 loading table",
    "cluster_k": "number of k-means clusters",
    "cluster_from": "first residual component (1-based)",
    "cluster_to": "last residual component (1-based, inclusive)",
    "cluster_input": "raw or standardized residual scores",
    "cluster_restarts": "k-means restarts",
    "ari_resamples": "bootstrap resamples for cluster ARI",
    "silhouette_k_max": "largest K in the silhouette-by-K curve (starts at 2)",
    "forest_trees": "trees in the random-forest benchmark",
    "forest_mtry": "features tried per split (empty: ceil(p/3))",
    "forest_min_leaf": "minimum rows per leaf",
    "forest_max_depth": "maximum tree depth (empty: unlimited)",
}


@dataclass(frozen=True)
class AuditConfig:
    input: Optional[str] = None
    out: str = "audit_out"
    seed: int = 0
    workers: int = 1
    id_column: str = "player_api_id"
    season_column: Optional[str] = "date"
    rating_column: str = "overall_rating"
    attributes: tuple[str, ...] = DEFAULT_ATTRIBUTES
    aggregate: bool = True
    stages: tuple[str, ...] = STAGES
    parallel_iterations: int = 500
    parallel_percentile: float = 0.95
    parallel_rule: str = "prefix"
    bootstrap_iterations: int = 1000
    folds: int = 5
    inner_folds: int = 5
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    r2_reference: str = "fold"
    top_loadings: int = 10
    cluster_k: int = 2
    cluster_from: int = 2
    cluster_to: int = 11
    cluster_input: str = "raw"
    cluster_restarts: int = 10
    ari_resamples: int = 100
    silhouette_k_max: int = 6
    forest_trees: int = 200
    forest_mtry: Optional[int] = None
    forest_min_leaf: int = 5
    forest_max_depth: Optional[int] = None

    def schema(self) -> Schema:
        return Schema(
            id_column=self.id_column,
            rating_column=self.rating_column,
            attributes=self.attributes,
            season_column=self.season_column or None,
        )

    def with_stages(self, stages) -> "AuditConfig":
        unknown = [s for s in stages if s not in STAGES]
        if unknown:
            raise SchemaError(f"unknown stages: {unknown}")
        return replace(self, stages=tuple(s for s in STAGES if s in stages))

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    @classmethod
    def from_mapping(cls, raw: dict[str, str], base: "AuditConfig | None" = None) -> "AuditConfig":
        base = base or cls()
        kinds = {f.name: f for f in fields(cls)}
        updates = {}
        stage_toggles = {}
        for key, text in raw.items():
            key = key.strip().lower()
            text = str(text).strip()
            if key in STAGES:
                stage_toggles[key] = _parse_bool(key, text)
                continue
            if key not in kinds or key == "stages":
                raise SchemaError(f"unknown config key {key!r}")
            updates[key] = _convert(key, text, getattr(base, key))
        cfg = replace(base, **updates)
        if stage_toggles:
            enabled = [s for s in STAGES if stage_toggles.get(s, s in cfg.stages)]
            cfg = cfg.with_stages(enabled)
        return cfg

    @classmethod
    def from_file(cls, path) -> "AuditConfig":
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
        parser.optionxform = str
        try:
            parser.read_string("[audit]\n" + path.read_text(encoding="utf-8"), source=str(path))
        except configparser.Error as exc:
            raise SchemaError(f"cannot parse config {path}: {exc}") from exc
        return cls.from_mapping(dict(parser["audit"]))


def _parse_bool(key: str, text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise SchemaError(f"config key {key!r}: expected a boolean, got {text!r}")


_OPTIONAL_INT = {"forest_mtry", "forest_max_depth"}
_OPTIONAL_STR = {"season_column", "input"}
_FLOAT_LISTS = {"lambda_grid"}


def _convert(key: str, text: str, default):
    try:
        if key in _OPTIONAL_INT:
            return int(text) if text else None
        if key in _OPTIONAL_STR:
            return text or None
        if key in _FLOAT_LISTS:
            return tuple(float(x) for x in text.split(",") if x.strip())
        if key == "attributes":
            return tuple(x.strip() for x in text.split(",") if x.strip())
        if isinstance(default, bool):
            return _parse_bool(key, text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        return text
    except ValueError as exc:
        raise SchemaError(f"config key {key!r}: {exc}") from exc


def help_text() -> str:
    defaults = AuditConfig()
    lines = ["config keys (key = value; defaults in brackets):"]
    for key, desc in _HELP.items():
        value = getattr(defaults, key)
        if key == "attributes":
            shown = f"{len(value)} outfield attributes"
        elif key == "lambda_grid":
            shown = f"15 log-spaced values {value[0]:g}..{value[-1]:g}"
        elif isinstance(value, tuple):
            shown = ",".join(map(str, value))
        else:
            shown = "" if value is None else str(value)
        lines.append(f"  {key:22s} {desc} [{shown}]")
    lines.append(f"  {'<stage>':22s} true/false toggle for each of: {', '.join(STAGES)} [true]")
    return "\n".join(lines)
