"""Table and figure-data CSVs written from an AuditReport.

Floats are written with ``repr`` so every value parses back bit-exactly.
Files only appear when the section they are built from is present.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .ingest import display_name

TABLE_FILES = {
    "descriptives": "table1_descriptives.csv",
    "alpha": "table2_internal_consistency.csv",
    "pca": "table3_pca_variance.csv",
    "loadings": "table4_pc1_loadings.csv",
    "parallel": "table5_parallel_analysis.csv",
    "prediction": "table6_prediction.csv",
    "clusters": "table7_clusters.csv",
}
FIGURE_FILES = {
    "scree": "fig1_scree.csv",
    "bootstrap": "fig2_bootstrap_histogram.csv",
    "correlation": "fig3_correlation_matrix.csv",
    "scatter": "fig4_ridge_scatter.csv",
    "silhouette": "fig5_silhouette_by_k.csv",
    "profiles": "fig6_cluster_profiles.csv",
}


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "Yes" if value else "No"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write(path: Path, header, rows) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def render_tables(report, out_dir) -> list[Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    sec = report.sections
    written: list[Path] = []

    def emit(name, header, rows):
        written.append(_write(out / name, header, rows))

    if "descriptives" in sec:
        emit(
            TABLE_FILES["descriptives"],
            ["Variable", "N", "Mean", "Std. Dev", "Min", "Max"],
            [
                [display_name(v["name"]), v["count"], v["mean"], v["sd"], v["min"], v["max"]]
                for v in sec["descriptives"]["variables"]
            ],
        )

    if "alpha" in sec:
        a = sec["alpha"]
        emit(
            TABLE_FILES["alpha"],
            ["Metric", "Value"],
            [
                [f"Cronbach's Alpha ({a['k']} Attributes)", a["alpha"]],
                ["Standardized Alpha", a["standardized_alpha"]],
                ["Average Inter-Item Correlation", a["avg_inter_item_r"]],
                ["Number of Players", a["n"]],
            ],
        )

    if "pca" in sec:
        comps = sec["pca"]["components"]
        rows = [[c["component"], c["eigenvalue"], c["share"], c["cumulative_share"]] for c in comps]
        head = comps[: min(4, len(comps))]
        rows.append(
            [
                f"PC1-PC{len(head)} Cumulative",
                sum(c["eigenvalue"] for c in head),
                head[-1]["cumulative_share"],
                head[-1]["cumulative_share"],
            ]
        )
        emit(TABLE_FILES["pca"], ["Component", "Eigenvalue", "Variance Explained", "Cumulative"], rows)
        emit(
            TABLE_FILES["loadings"],
            ["Attribute", "PC1 Loading"],
            [[display_name(t["attribute"]), t["loading"]] for t in sec["pca"]["top_loadings"]],
        )
        corr = sec["pca"]["correlation"]
        emit(
            FIGURE_FILES["correlation"],
            ["attribute", *corr["names"]],
            [[name, *row] for name, row in zip(corr["names"], corr["matrix"])],
        )

    if "parallel" in sec:
        comps = sec["parallel"]["components"]
        emit(
            TABLE_FILES["parallel"],
            ["Component", "Observed", "Random 95%", "Retain?"],
            [[c["component"], c["observed"], c["threshold"], c["retain"]] for c in comps],
        )
        emit(
            FIGURE_FILES["scree"],
            ["rank", "observed", "threshold"],
            [[k + 1, c["observed"], c["threshold"]] for k, c in enumerate(comps)],
        )

    if "bootstrap" in sec:
        hist = sec["bootstrap"]["histogram"]
        edges = hist["edges"]
        emit(
            FIGURE_FILES["bootstrap"],
            ["bin_left", "bin_right", "count"],
            [[edges[i], edges[i + 1], c] for i, c in enumerate(hist["counts"])],
        )

    models = list(sec.get("prediction", {}).get("models", []))
    if "forest" in sec:
        models.append(sec["forest"])
    if models:
        emit(
            TABLE_FILES["prediction"],
            ["Model", "Role", "R Squared (CV Mean)", "R Squared Min", "R Squared Max", "RMSE (CV Mean)"],
            [
                [
                    m["model"],
                    "benchmark" if m.get("benchmark") else "structural",
                    m["mean_r2"],
                    m["r2_range"][0],
                    m["r2_range"][1],
                    m["mean_rmse"],
                ]
                for m in models
            ],
        )
    if "prediction" in sec:
        sc = sec["prediction"]["ridge_scatter"]
        emit(
            FIGURE_FILES["scatter"],
            ["player_id", "observed", "predicted"],
            zip(sc["player_ids"], sc["observed"], sc["predicted"]),
        )

    if "clustering" in sec:
        cl = sec["clustering"]
        emit(
            TABLE_FILES["clusters"],
            ["Cluster", "N", "Mean Overall Rating", "Std Dev"],
            [[p["cluster"], p["size"], p["overall_mean"], p["overall_sd"]] for p in cl["profiles"]],
        )
        emit(
            FIGURE_FILES["silhouette"],
            ["k", "silhouette"],
            [[row["k"], row["silhouette"]] for row in cl["silhouette_by_k"]],
        )
        emit(
            FIGURE_FILES["profiles"],
            ["cluster", "size", *cl["attribute_names"]],
            [[p["cluster"], p["size"], *p["attribute_means"]] for p in cl["profiles"]],
        )

    return written
