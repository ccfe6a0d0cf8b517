"""Rating-table loading, player-level aggregation and listwise deletion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, SchemaError

# Outfield attribute columns of the European Soccer Database ``Player_Attributes``
# table (goalkeeping columns gk_* left out). The published analysis only names
# examples, so this list is a reconstruction of the usual 28-attribute set.
DEFAULT_ATTRIBUTES: tuple[str, ...] = (
    "crossing",
    "finishing",
    "heading_accuracy",
    "short_passing",
    "volleys",
    "dribbling",
    "curve",
    "free_kick_accuracy",
    "long_passing",
    "ball_control",
    "acceleration",
    "sprint_speed",
    "agility",
    "reactions",
    "balance",
    "shot_power",
    "jumping",
    "stamina",
    "strength",
    "long_shots",
    "aggression",
    "interceptions",
    "positioning",
    "vision",
    "penalties",
    "marking",
    "standing_tackle",
    "sliding_tackle",
)


@dataclass(frozen=True)
class Schema:
    """Maps logical roles to CSV column names."""

    id_column: str = "player_api_id"
    rating_column: str = "overall_rating"
    attributes: tuple[str, ...] = DEFAULT_ATTRIBUTES
    season_column: Optional[str] = "date"

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        if len(set(self.attributes)) != len(self.attributes):
            dupes = sorted({a for a in self.attributes if self.attributes.count(a) > 1})
            raise SchemaError(f"duplicate attribute names in schema: {dupes}")


@dataclass(frozen=True, eq=False)
class RatingTable:
    """Raw rows; missing numeric cells are NaN, missing seasons are None."""

    player_ids: list[str]
    seasons: list[Optional[str]]
    overall: np.ndarray
    attributes: np.ndarray
    attribute_names: tuple[str, ...]

    def __post_init__(self):
        n = len(self.player_ids)
        if self.attributes.shape != (n, len(self.attribute_names)):
            raise DataError("attribute block shape does not match rows x names")
        if self.overall.shape != (n,) or len(self.seasons) != n:
            raise DataError("row count mismatch between table fields")
        if any(not pid for pid in self.player_ids):
            raise DataError("every row needs a non-empty player_id")

    def __len__(self) -> int:
        return len(self.player_ids)

    def records(self):
        for i, pid in enumerate(self.player_ids):
            yield {
                "player_id": pid,
                "season": self.seasons[i],
                "overall_rating": float(self.overall[i]),
                "attributes": dict(zip(self.attribute_names, map(float, self.attributes[i]))),
            }


@dataclass(frozen=True, eq=False)
class AttributeMatrix:
    """Complete players x attributes matrix plus the overall-rating target."""

    values: np.ndarray
    attribute_names: tuple[str, ...]
    player_ids: tuple[str, ...]
    overall: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=float)
        overall = np.asarray(self.overall, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "overall", overall)
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))
        object.__setattr__(self, "player_ids", tuple(str(p) for p in self.player_ids))
        if values.ndim != 2:
            raise DataError("values must be a 2-D matrix")
        n, p = values.shape
        if p < 2:
            raise DataError(f"need at least 2 attributes, got {p}")
        if n <= p:
            raise DataError(f"need more rows than attributes (n={n}, p={p})")
        if len(self.attribute_names) != p or len(set(self.attribute_names)) != p:
            raise DataError("attribute_names must be unique and match the column count")
        if len(self.player_ids) != n or overall.shape != (n,):
            raise DataError("player_ids / overall length must equal the row count")
        if np.isnan(values).any() or np.isnan(overall).any():
            raise DataError("AttributeMatrix may not contain missing cells")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def take(self, rows) -> "AttributeMatrix":
        """Row subset (fancy index or boolean mask); used for folds and resamples."""
        rows = np.asarray(rows)
        ids = np.asarray(self.player_ids, dtype=object)[rows]
        return AttributeMatrix(self.values[rows], self.attribute_names, tuple(ids), self.overall[rows])

    def with_overall(self, overall) -> "AttributeMatrix":
        return AttributeMatrix(self.values, self.attribute_names, self.player_ids, overall)


@dataclass(frozen=True)
class VariableStats:
    name: str
    count: int
    mean: float
    sd: float
    min: float
    max: float


@dataclass(frozen=True)
class DescriptiveStats:
    variables: list[VariableStats]
    ddof: int = 1

    def __getitem__(self, name: str) -> VariableStats:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "sd_denominator": "n-1" if self.ddof == 1 else "n",
            "variables": [v.__dict__.copy() for v in self.variables],
        }


def _to_float(cell: str) -> float:
    try:
        value = float(cell)
    except (TypeError, ValueError):
        return math.nan
    return value if math.isfinite(value) else math.nan


def load_table(path, schema: Schema = Schema()) -> RatingTable:
    """Parse a comma-separated UTF-8 file with a header row."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"rating table not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        dupes = sorted({h for h in header if header.count(h) > 1})
        if dupes:
            raise SchemaError(f"duplicate column names in header: {dupes}")
        wanted = [schema.id_column, schema.rating_column, *schema.attributes]
        if schema.season_column:
            wanted.append(schema.season_column)
        missing = [c for c in wanted if c not in header]
        if missing:
            raise SchemaError(f"columns named by the schema are absent from the header: {missing}")
        col = {name: i for i, name in enumerate(header)}
        attr_idx = [col[a] for a in schema.attributes]

        ids, seasons, overall, attrs = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            pid = row[col[schema.id_column]].strip()
            if not pid:
                raise DataError(f"{path}:{lineno}: empty player id")
            ids.append(pid)
            seasons.append(row[col[schema.season_column]] if schema.season_column else None)
            overall.append(_to_float(row[col[schema.rating_column]]))
            attrs.append([_to_float(row[i]) for i in attr_idx])

    q = len(schema.attributes)
    return RatingTable(
        player_ids=ids,
        seasons=seasons,
        overall=np.array(overall, dtype=float),
        attributes=np.array(attrs, dtype=float).reshape(len(ids), q),
        attribute_names=schema.attributes,
    )


def aggregate_players(table: RatingTable) -> RatingTable:
    """Unweighted per-player means, ignoring missing cells.

    Players keep the order of their first appearance. A cell stays missing only
    when it is missing in every one of that player's rows. Seasons collapse to
    None for players with more than one row.
    """
    if len(table) == 0:
        raise DataError("cannot aggregate an empty table")
    order: dict[str, int] = {}
    inverse = np.empty(len(table), dtype=np.intp)
    for i, pid in enumerate(table.player_ids):
        inverse[i] = order.setdefault(pid, len(order))
    m = len(order)

    block = np.column_stack([table.overall, table.attributes])
    present = ~np.isnan(block)
    sums = np.zeros((m, block.shape[1]))
    counts = np.zeros((m, block.shape[1]))
    np.add.at(sums, inverse, np.where(present, block, 0.0))
    np.add.at(counts, inverse, present)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    # single-row players: keep the exact input values (mean of one is itself)
    rows_per = np.bincount(inverse, minlength=m)
    first_row = np.full(m, -1)
    first_row[inverse[::-1]] = np.arange(len(table))[::-1]
    single = rows_per == 1
    means[single] = block[first_row[single]]

    seasons = [table.seasons[first_row[j]] if single[j] else None for j in range(m)]
    return RatingTable(
        player_ids=list(order),
        seasons=seasons,
        overall=means[:, 0].copy(),
        attributes=means[:, 1:].copy(),
        attribute_names=table.attribute_names,
    )


def filter_complete(table: RatingTable, required: Sequence[str]) -> AttributeMatrix:
    """Listwise deletion on ``required`` attributes plus the overall rating."""
    required = tuple(required)
    if len(required) < 2:
        raise DataError(f"need at least 2 required attributes, got {len(required)}")
    unknown = [a for a in required if a not in table.attribute_names]
    if unknown:
        raise SchemaError(f"required attributes not in table: {unknown}")
    idx = [table.attribute_names.index(a) for a in required]
    values = table.attributes[:, idx]
    keep = ~np.isnan(values).any(axis=1) & ~np.isnan(table.overall)
    n, p = int(keep.sum()), len(required)
    if n <= p:
        raise DataError(f"only {n} complete rows survive for {p} attributes (need n > p)")
    ids = [pid for pid, k in zip(table.player_ids, keep) if k]
    return AttributeMatrix(values[keep], required, tuple(ids), table.overall[keep])


def describe(matrix: AttributeMatrix, ddof: int = 1) -> DescriptiveStats:
    """Count/mean/sd/min/max for the overall rating and every attribute column."""
    columns = [("overall_rating", matrix.overall)]
    columns += [(name, matrix.values[:, j]) for j, name in enumerate(matrix.attribute_names)]
    out = []
    for name, col in columns:
        out.append(
            VariableStats(
                name=name,
                count=int(col.size),
                mean=float(np.clip(col.mean(), col.min(), col.max())),
                sd=float(col.std(ddof=ddof)) if col.size > ddof else 0.0,
                min=float(col.min()),
                max=float(col.max()),
            )
        )
    return DescriptiveStats(out, ddof=ddof)


def display_name(column: str) -> str:
    """``ball_control`` -> ``Ball Control`` for table output."""
    return " ".join(part.capitalize() for part in column.replace("-", "_").split("_"))
