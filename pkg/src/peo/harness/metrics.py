"""Per-image metric rows and their aggregation.

Reported metrics follow the evaluation protocol: the normalized aesthetic
score, the raw cosine between image features and the features of the
ORIGINAL prompt (not the optimized embedding), and an optional
human-preference score from a pluggable scorer.  Aggregates are the
arithmetic mean and the population variance (divide by N).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..backbones.base import Backbone
from ..errors import InputError
from ..objective import cosine_similarity, normalize_aesthetic
from ..types import GeneratedImage

# Pluggable human-preference scorer: (image, prompt) -> raw score.
HpsScorer = Callable[[GeneratedImage, str], float]

_HPS_SCORERS: dict[str, HpsScorer] = {}


def register_hps_scorer(name: str, scorer: HpsScorer) -> None:
    _HPS_SCORERS[name] = scorer


def get_hps_scorer(name: str | None) -> HpsScorer | None:
    if name is None:
        return None
    if name not in _HPS_SCORERS:
        raise InputError(f"unknown hps scorer {name!r}; registered: {sorted(_HPS_SCORERS)}")
    return _HPS_SCORERS[name]


@dataclass
class MetricRow:
    prompt: str
    prompt_index: int = 0
    aes_norm: float | None = None
    hps: float | None = None
    clip_cos: float | None = None
    preserve_cos: float | None = None
    initial_total: float | None = None
    best_total: float | None = None
    termination: str | None = None
    failure: str | None = None
    seed: int | None = None
    failed: bool = False
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "prompt": self.prompt,
            "prompt_index": self.prompt_index,
            "aes_norm": self.aes_norm,
            "hps": self.hps,
            "clip_cos": self.clip_cos,
            "preserve_cos": self.preserve_cos,
            "initial_total": self.initial_total,
            "best_total": self.best_total,
            "termination": self.termination,
            "failure": self.failure,
            "seed": self.seed,
            "failed": self.failed,
            "error": self.error,
        }

    @staticmethod
    def from_dict(d: dict) -> "MetricRow":
        return MetricRow(**d)


def compute_metrics(
    image: GeneratedImage,
    initial_prompt: str,
    backbone: Backbone,
    hps_scorer: HpsScorer | None = None,
) -> MetricRow:
    """Score one generated image against its original prompt.

    A scorer exception marks the row failed instead of aborting the batch;
    failed rows are excluded from aggregates but counted.
    """
    row = MetricRow(prompt=initial_prompt)
    try:
        row.aes_norm = normalize_aesthetic(backbone.aesthetic_score(image))
        features = backbone.image_encode(image)
        text = backbone.text_encode(initial_prompt)
        cosines = [
            cosine_similarity(f, t) for f, t in zip(features.vectors, text.vectors)
        ]
        row.clip_cos = float(np.mean(cosines))
        if hps_scorer is not None:
            row.hps = float(hps_scorer(image, initial_prompt))
    except Exception as exc:  # noqa: BLE001 - isolate scorer failures per row
        row.failed = True
        row.error = f"{type(exc).__name__}: {exc}"
    return row


METRIC_FIELDS = ("aes_norm", "hps", "clip_cos", "preserve_cos", "initial_total", "best_total")


def aggregate(rows: list[MetricRow]) -> dict:
    """Mean and population variance per metric over successful rows."""
    good = [r for r in rows if not r.failed]
    if not good:
        raise InputError("no successful rows to aggregate")
    out: dict = {"n": len(rows), "n_failed": len(rows) - len(good)}
    for name in METRIC_FIELDS:
        values = [getattr(r, name) for r in good if getattr(r, name) is not None]
        if not values:
            out[name] = "unavailable"
            continue
        arr = np.asarray(values, dtype=np.float64)
        out[name] = {
            "mean": float(arr.mean()),
            "variance": float(arr.var()),  # population variance: divide by N
            "count": len(values),
        }
    return out


@dataclass
class MetricReport:
    """One experiment variant's rows plus their aggregates."""

    label: str
    rows: list[MetricRow] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    failure_counts: dict = field(default_factory=dict)
    seeds: list[int] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    error: str | None = None

    def finalize(self) -> None:
        self.aggregates = aggregate(self.rows)
        counts = {"ok": 0, "diverged": 0, "ceiling": 0}
        for r in self.rows:
            if r.failure in counts:
                counts[r.failure] += 1
        self.failure_counts = counts

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "rows": [r.to_dict() for r in self.rows],
            "aggregates": self.aggregates,
            "failure_counts": self.failure_counts,
            "seeds": self.seeds,
            "config": self.config,
            "error": self.error,
        }

    @staticmethod
    def from_dict(d: dict) -> "MetricReport":
        return MetricReport(
            label=d["label"],
            rows=[MetricRow.from_dict(r) for r in d["rows"]],
            aggregates=d.get("aggregates", {}),
            failure_counts=d.get("failure_counts", {}),
            seeds=list(d.get("seeds", [])),
            config=d.get("config", {}),
            error=d.get("error"),
        )
