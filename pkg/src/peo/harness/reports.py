"""Report bundle persistence.

A bundle directory holds per-prompt rows (CSV), aggregates and the echoed
configuration (JSON), a human-readable comparison table (Markdown), final
images (PNG plus provenance sidecars), and per-run traces (JSON).  Every
byte is a pure function of the experiment result and configuration;
wall-clock metadata lives in a separate metadata.json that determinism
checks exclude.
"""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path

from .experiments import ExperimentResult
from .metrics import MetricReport

SCHEMA_VERSION = 1

CSV_COLUMNS = (
    "variant",
    "prompt_index",
    "prompt",
    "seed",
    "aes_norm",
    "hps",
    "clip_cos",
    "preserve_cos",
    "initial_total",
    "best_total",
    "termination",
    "failure",
    "failed",
    "error",
)

COMPARISON_METRICS = (
    ("aes_norm", "LAION-Aes (norm)"),
    ("hps", "HPSv2"),
    ("clip_cos", "CLIPScore (cos)"),
    ("best_total", "objective total"),
)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows_csv(reports: list[MetricReport], path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for report in reports:
            for row in report.rows:
                d = row.to_dict()
                writer.writerow(
                    [_cell(report.label)]
                    + [_cell(d[c]) for c in CSV_COLUMNS[1:]]
                )


def comparison_markdown(result: ExperimentResult) -> str:
    """Metrics-by-variant table in the layout of the quantitative comparisons."""
    labels = result.variant_labels
    lines = [
        f"# {result.kind.value} on {result.prompt_set_name} ({result.backbone_id})",
        "",
        "| metric | " + " | ".join(labels) + " |",
        "|---" * (len(labels) + 1) + "|",
    ]
    for key, title in COMPARISON_METRICS:
        cells = []
        for report in result.reports:
            agg = report.aggregates.get(key) if report.aggregates else None
            if report.error is not None:
                cells.append("failed")
            elif agg in (None, "unavailable"):
                cells.append("unavailable")
            else:
                cells.append(f"{agg['mean']:.2f} ± {agg['variance']:.4f}")
        lines.append(f"| {title} | " + " | ".join(cells) + " |")
    fail_cells = []
    for report in result.reports:
        if report.error is not None:
            fail_cells.append("failed")
        else:
            fc = report.failure_counts
            fail_cells.append(f"{fc.get('diverged', 0)} div / {fc.get('ceiling', 0)} ceil")
    lines.append("| failures | " + " | ".join(fail_cells) + " |")
    lines.append("")
    return "\n".join(lines)


def write_bundle(
    result: ExperimentResult,
    out_dir: str | Path,
    effective_config: dict,
    decisions: dict | None = None,
) -> Path:
    """Write the full report bundle; returns the bundle directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    write_rows_csv(result.reports, out / "rows.csv")

    summary = {
        "schema_version": SCHEMA_VERSION,
        "kind": result.kind.value,
        "backbone_id": result.backbone_id,
        "prompt_set": {"name": result.prompt_set_name, "origin": result.prompt_origin},
        "global_seed": result.global_seed,
        "settings": result.settings,
        "config": effective_config,
        "decisions": decisions
        or {
            "clip_score": "raw cosine, no rescale",
            "variance": "population (divide by N)",
            "seeds": "paired per prompt index across variants",
            "hps": "optional plugin; omitted when unconfigured",
        },
        "partial_failure": result.partial,
        "variants": [
            {
                "label": r.label,
                "config": r.config,
                "aggregates": r.aggregates,
                "failure_counts": r.failure_counts,
                "seeds": r.seeds,
                "error": r.error,
            }
            for r in result.reports
        ],
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (out / "comparison.md").write_text(comparison_markdown(result))
    (out / "config.json").write_text(json.dumps(effective_config, indent=2, sort_keys=True) + "\n")

    for label, artifacts in result.artifacts.items():
        img_dir = out / "images" / label
        trace_dir = out / "traces" / label
        if artifacts:
            img_dir.mkdir(parents=True, exist_ok=True)
            trace_dir.mkdir(parents=True, exist_ok=True)
        for art in artifacts:
            stem = f"p{art.prompt_index:03d}"
            (img_dir / f"{stem}.png").write_bytes(art.image_png)
            (img_dir / f"{stem}.json").write_text(
                json.dumps(art.provenance, indent=2, sort_keys=True) + "\n"
            )
            (trace_dir / f"{stem}.json").write_text(
                json.dumps(art.trace_doc, indent=2, sort_keys=True) + "\n"
            )

    (out / "metadata.json").write_text(
        json.dumps({"written_at_unix": time.time()}, indent=2) + "\n"
    )
    return out
