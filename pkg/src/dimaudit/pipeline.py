"""Runs the stages in order and assembles the audit report."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .cluster import (
    bootstrap_ari,
    cluster_profiles,
    kmeans,
    residual_scores,
    silhouette,
    silhouette_by_k,
)
from .config import STAGES, AuditConfig
from .consistency import cronbach_alpha
from .errors import StageError
from .forest import ForestParams, forest_cv
from .ingest import AttributeMatrix, aggregate_players, describe, filter_complete, load_table
from .parallel import parallel_analysis
from .pca import PcaModel, ScoreMatrix, pca_fit, top_loadings
from .predict import cross_validate_pc1, cross_validate_ridge, kfold_split
from .seeding import stage_seed
from .stability import bootstrap_pca

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
REPORT_NAME = "report.json"


@dataclass
class AuditReport:
    metadata: dict
    sections: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "metadata": self.metadata, "sections": self.sections}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json(), encoding="utf-8")
        return path

    @classmethod
    def from_dict(cls, data: dict) -> "AuditReport":
        return cls(metadata=data["metadata"], sections=data.get("sections", {}))

    @classmethod
    def read(cls, path) -> "AuditReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def stage_seeds(master: int) -> dict[str, int]:
    names = ("parallel", "bootstrap", "folds", "cluster", "ari", "silhouette", "forest")
    return {name: stage_seed(master, name) for name in names}


def _floats(values) -> list:
    return np.asarray(values, dtype=float).tolist()


def load_matrix(config: AuditConfig) -> AttributeMatrix:
    if not config.input:
        raise ValueError("no input file configured")
    table = load_table(config.input, config.schema())
    if config.aggregate:
        table = aggregate_players(table)
    return filter_complete(table, config.attributes)


def _cluster_input(model: PcaModel, matrix: AttributeMatrix, config: AuditConfig) -> ScoreMatrix:
    scores = residual_scores(model, matrix, config.cluster_from, config.cluster_to)
    if config.cluster_input == "standardized":
        return ScoreMatrix(scores.values / scores.values.std(axis=0), scores.labels)
    if config.cluster_input != "raw":
        raise ValueError(f"cluster_input must be 'raw' or 'standardized', got {config.cluster_input!r}")
    return scores


def run_stages(matrix: AttributeMatrix, config: AuditConfig, report: AuditReport) -> AuditReport:
    """Fill ``report.sections`` for every enabled stage, in pipeline order."""
    seeds = stage_seeds(config.seed)
    sections = report.sections
    model = None

    def needs_model() -> PcaModel:
        nonlocal model
        if model is None:
            model = pca_fit(matrix)
        return model

    def describe_():
        sections["descriptives"] = describe(matrix).to_dict()

    def alpha():
        sections["alpha"] = cronbach_alpha(matrix).to_dict()

    def pca():
        m = needs_model()
        d = m.to_dict()
        d["top_loadings"] = [
            {"attribute": a, "loading": v} for a, v in top_loadings(m, 0, config.top_loadings)
        ]
        d["loadings"] = {
            "attributes": list(m.attribute_names),
            "matrix": _floats(m.loadings),
        }
        d["correlation"] = {"names": list(m.attribute_names), "matrix": _floats(m.correlation.values)}
        sections["pca"] = d

    def parallel():
        res = parallel_analysis(
            matrix,
            iterations=config.parallel_iterations,
            percentile=config.parallel_percentile,
            seed=seeds["parallel"],
            workers=config.workers,
            rule=config.parallel_rule,
            observed=needs_model().eigenvalues,
        )
        sections["parallel"] = res.to_dict()

    def bootstrap():
        res = bootstrap_pca(
            matrix, config.bootstrap_iterations, seeds["bootstrap"], config.workers, needs_model()
        )
        d = res.to_dict()
        edges, counts = res.histogram()
        d["histogram"] = {"edges": _floats(edges), "counts": [int(c) for c in counts]}
        d["pc1_shares"] = _floats(res.pc1_shares)
        sections["bootstrap"] = d

    def predict():
        folds = kfold_split(matrix.n, config.folds, seeds["folds"])
        pc1 = cross_validate_pc1(matrix, folds, config.r2_reference)
        ridge = cross_validate_ridge(
            matrix, folds, config.lambda_grid, config.inner_folds, config.r2_reference
        )
        sections["prediction"] = {
            "folds": {"k": folds.k, "seed": folds.seed, "sizes": folds.sizes().tolist()},
            "r2_reference": config.r2_reference,
            "lambda_grid": list(ridge.lambda_grid),
            "models": [pc1.to_dict(), ridge.to_dict()],
            "ridge_scatter": {
                "player_ids": list(matrix.player_ids),
                "observed": _floats(ridge.observed),
                "predicted": _floats(ridge.predictions),
            },
        }

    def cluster():
        scores = _cluster_input(needs_model(), matrix, config)
        base = kmeans(scores, config.cluster_k, config.cluster_restarts, seeds["cluster"])
        sil = silhouette(scores, base)
        ari = bootstrap_ari(
            scores, config.cluster_k, config.ari_resamples, seeds["ari"], config.cluster_restarts,
            baseline=base, workers=config.workers,
        )
        by_k = silhouette_by_k(
            scores, range(2, config.silhouette_k_max + 1), config.cluster_restarts, seeds["silhouette"]
        )
        profiles = cluster_profiles(base, matrix)
        sections["clustering"] = {
            "k": config.cluster_k,
            "components": list(scores.labels),
            "input": config.cluster_input,
            "seed": seeds["cluster"],
            "inertia": base.inertia,
            "silhouette": sil,
            "silhouette_by_k": [{"k": k, "silhouette": v} for k, v in by_k.items()],
            "ari": ari.to_dict(),
            "attribute_names": list(matrix.attribute_names),
            "profiles": [
                {
                    "cluster": pr.cluster,
                    "size": pr.size,
                    "overall_mean": pr.overall_mean,
                    "overall_sd": pr.overall_sd,
                    "attribute_means": _floats(pr.attribute_means),
                }
                for pr in profiles
            ],
        }

    def forest():
        params = ForestParams(
            n_trees=config.forest_trees,
            mtry=config.forest_mtry,
            min_leaf=config.forest_min_leaf,
            max_depth=config.forest_max_depth,
            seed=seeds["forest"],
        )
        folds = kfold_split(matrix.n, config.folds, seeds["folds"])
        res = forest_cv(matrix, folds, params, config.workers, config.r2_reference)
        d = res.to_dict()
        d["params"] = {
            "n_trees": params.n_trees,
            "mtry": params.resolved_mtry(matrix.p),
            "min_leaf": params.min_leaf,
            "max_depth": params.max_depth,
            "seed": params.seed,
        }
        sections["forest"] = d

    runners = {
        "describe": describe_,
        "alpha": alpha,
        "pca": pca,
        "parallel": parallel,
        "bootstrap": bootstrap,
        "predict": predict,
        "cluster": cluster,
        "forest": forest,
    }
    for name in STAGES:
        if name not in config.stages:
            continue
        log.info("stage %s", name)
        try:
            runners[name]()
        except Exception as exc:  # noqa: BLE001 - re-raised with the stage tag
            raise StageError(name, exc) from exc
    return report


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_pipeline(config: AuditConfig | str | Path, out_dir=None, write: bool = True) -> AuditReport:
    """Ingest, run the enabled stages, write report.json plus table/figure CSVs.

    On a stage failure the partial report (with ``failed_stage`` set) is still
    written before the StageError propagates.
    """
    from .render import render_tables

    if not isinstance(config, AuditConfig):
        config = AuditConfig.from_file(config)
    out = Path(out_dir or config.out)
    report = AuditReport(
        metadata={
            "tool": "dimaudit",
            "version": __version__,
            "dataset": config.input,
            "master_seed": config.seed,
            "stage_seeds": stage_seeds(config.seed),
            "stages": list(config.stages),
            "config": {k: v for k, v in config.to_dict().items() if k not in ("workers", "out")},
            "runtime": {"started_at": _now(), "workers": config.workers},
        }
    )
    failure = None
    try:
        try:
            matrix = load_matrix(config)
        except Exception as exc:  # noqa: BLE001
            raise StageError("ingest", exc) from exc
        report.metadata.update(
            n=matrix.n, p=matrix.p, attribute_names=list(matrix.attribute_names)
        )
        run_stages(matrix, config, report)
    except StageError as exc:
        failure = exc
        report.metadata["failed_stage"] = exc.stage
        report.metadata["error"] = str(exc.cause)
    report.metadata["runtime"]["finished_at"] = _now()
    if write:
        out.mkdir(parents=True, exist_ok=True)
        report.write(out / REPORT_NAME)
        render_tables(report, out)
    if failure is not None:
        raise failure
    return report
