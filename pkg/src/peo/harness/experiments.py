"""Experiment plans and their execution.

A plan is a list of variants (weight or optimizer overrides) applied to
every prompt of a prompt set.  Prompt i receives the same derived seed in
every variant, so cross-variant comparisons are paired.  Variants fail in
isolation: one broken variant leaves the others' reports intact and marks
the bundle partial.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import product
from typing import Callable

from ..backbones.base import Backbone, GenerationSettings
from ..errors import InputError
from ..imaging import png_bytes
from ..objective import preservation_term
from ..optimizer import (
    Algorithm,
    OptimizerConfig,
    detect_failure,
    peo_optimize,
)
from ..types import ObjectiveWeights
from .metrics import HpsScorer, MetricReport, compute_metrics
from .prompts import PromptSet

# The discrete coefficient values explored by the greedy weight search.
WEIGHT_GRID_VALUES = (0.2, 0.5, 0.7, 1.0)
# Learning rates every sweep must cover, low to divergence-inducing.
LR_SWEEP_VALUES = (1e-5, 1e-2, 2e-1)


class ExperimentKind(str, Enum):
    BENCHMARK = "benchmark"
    ABLATION = "ablation"
    WEIGHT_GRID = "weight_grid"
    LR_SWEEP = "lr_sweep"
    OPTIMIZER_CMP = "optimizer_cmp"


@dataclass(frozen=True)
class Variant:
    label: str
    weights: ObjectiveWeights
    optimizer: OptimizerConfig


@dataclass(frozen=True)
class ExperimentPlan:
    kind: ExperimentKind
    variants: tuple[Variant, ...]
    prompt_set: PromptSet
    backbone_id: str
    settings: GenerationSettings
    global_seed: int = 0

    def __post_init__(self):
        if not self.variants:
            raise InputError("experiment plan has no variants")
        object.__setattr__(self, "kind", ExperimentKind(self.kind))


def benchmark_variants(weights: ObjectiveWeights, optimizer: OptimizerConfig) -> tuple[Variant, ...]:
    """Zero-step baseline against the full optimization."""
    return (
        Variant("baseline", weights, replace(optimizer, max_steps=0)),
        Variant("peo", weights, optimizer),
    )


def ablation_variants(
    optimizer: OptimizerConfig, w2: float = 0.5, w3: float = 0.5
) -> tuple[Variant, ...]:
    """The four term combinations: L1 alone, each pair with L1, and all three."""
    return (
        Variant("L1", ObjectiveWeights(1.0, 0.0, 0.0), optimizer),
        Variant("L1+L2", ObjectiveWeights(1.0, w2, 0.0), optimizer),
        Variant("L1+PPT", ObjectiveWeights(1.0, 0.0, w3), optimizer),
        Variant("L1+L2+PPT", ObjectiveWeights(1.0, w2, w3), optimizer),
    )


def weight_grid_variants(
    optimizer: OptimizerConfig, values: tuple[float, ...] = WEIGHT_GRID_VALUES
) -> tuple[Variant, ...]:
    out = []
    for w1, w2, w3 in product(values, repeat=3):
        out.append(
            Variant(f"w1={w1:g},w2={w2:g},w3={w3:g}", ObjectiveWeights(w1, w2, w3), optimizer)
        )
    return tuple(out)


def lr_sweep_variants(
    weights: ObjectiveWeights,
    optimizer: OptimizerConfig,
    values: tuple[float, ...] = LR_SWEEP_VALUES,
) -> tuple[Variant, ...]:
    return tuple(
        Variant(f"lr={v:g}", weights, replace(optimizer, learning_rate=v)) for v in values
    )


def optimizer_cmp_variants(
    weights: ObjectiveWeights | None, optimizer: OptimizerConfig
) -> tuple[Variant, ...]:
    """Baseline plus GD/AdamW/Adam, with all-ones weights per the comparison protocol."""
    w = weights or ObjectiveWeights(1.0, 1.0, 1.0)
    return (
        Variant("baseline", w, replace(optimizer, max_steps=0)),
        Variant("gd", w, replace(optimizer, algorithm=Algorithm.GD)),
        Variant("adamw", w, replace(optimizer, algorithm=Algorithm.ADAMW)),
        Variant("adam", w, replace(optimizer, algorithm=Algorithm.ADAM)),
    )


# Optional external prompt rewriters (configured for baseline comparisons;
# none ships with the package). The rewritten prompt drives generation while
# metrics stay against the original prompt.
PromptPreprocessor = Callable[[str], str]

_PREPROCESSORS: dict[str, PromptPreprocessor] = {}


def register_prompt_preprocessor(name: str, fn: PromptPreprocessor) -> None:
    _PREPROCESSORS[name] = fn


def get_prompt_preprocessor(name: str | None) -> PromptPreprocessor | None:
    if name is None:
        return None
    if name not in _PREPROCESSORS:
        raise InputError(
            f"unknown prompt preprocessor {name!r}; registered: {sorted(_PREPROCESSORS)}"
        )
    return _PREPROCESSORS[name]


_MASK64 = (1 << 64) - 1


def derive_prompt_seed(global_seed: int, prompt_index: int) -> int:
    """Stable per-prompt seed: same prompt index, same seed, in every variant."""
    from ..backbones.toy import _mix64  # documented splitmix64 finalizer

    return _mix64(((global_seed & _MASK64) ^ (0x9E3779B97F4A7C15 * (prompt_index + 1))) & _MASK64) & 0x7FFFFFFFFFFFFFFF


@dataclass
class RunArtifact:
    """Everything persisted for one (variant, prompt) run."""

    prompt_index: int
    trace_doc: dict
    image_png: bytes
    provenance: dict


@dataclass
class ExperimentResult:
    kind: ExperimentKind
    backbone_id: str
    prompt_set_name: str
    prompt_origin: str
    global_seed: int
    settings: dict
    reports: list[MetricReport] = field(default_factory=list)
    artifacts: dict[str, list[RunArtifact]] = field(default_factory=dict)
    partial: bool = False

    def __post_init__(self):
        self.kind = ExperimentKind(self.kind)

    @property
    def variant_labels(self) -> list[str]:
        return [r.label for r in self.reports]


def run_experiment(
    plan: ExperimentPlan,
    backbone: Backbone,
    hps_scorer: HpsScorer | None = None,
    prompt_preprocessor: PromptPreprocessor | None = None,
) -> ExperimentResult:
    """Run every variant over every prompt and aggregate per-variant reports."""
    result = ExperimentResult(
        kind=plan.kind,
        backbone_id=plan.backbone_id,
        prompt_set_name=plan.prompt_set.name,
        prompt_origin=plan.prompt_set.origin.value,
        global_seed=plan.global_seed,
        settings=plan.settings.to_dict(),
    )
    for variant in plan.variants:
        report = MetricReport(
            label=variant.label,
            config={
                "weights": {"w1": variant.weights.w1, "w2": variant.weights.w2, "w3": variant.weights.w3},
                "optimizer": variant.optimizer.to_dict(),
            },
        )
        artifacts: list[RunArtifact] = []
        try:
            for i, prompt in enumerate(plan.prompt_set.prompts):
                seed = derive_prompt_seed(plan.global_seed, i)
                settings = replace(plan.settings, seed=seed)
                cfg = replace(variant.optimizer, seed=seed)
                report.seeds.append(seed)

                generation_prompt = (
                    prompt_preprocessor(prompt) if prompt_preprocessor else prompt
                )
                theta_init = backbone.text_encode(generation_prompt)
                theta_star, trace = peo_optimize(theta_init, backbone, variant.weights, cfg, settings)
                failure = detect_failure(trace)
                image = backbone.generate(theta_star, settings)

                # metrics are always against the ORIGINAL prompt
                row = compute_metrics(image, prompt, backbone, hps_scorer)
                row.prompt_index = i
                row.seed = seed
                row.preserve_cos = preservation_term(theta_init, theta_star)
                row.initial_total = trace.records[0].breakdown.total
                row.best_total = trace.best_total
                row.termination = trace.termination_reason.value
                row.failure = failure.value
                report.rows.append(row)

                trace_doc = trace.to_doc(
                    backbone_id=plan.backbone_id,
                    weights=variant.weights,
                    optimizer=cfg,
                    settings=settings,
                    theta_init_checksum=theta_init.checksum(),
                    theta_star_checksum=theta_star.checksum(),
                    artifacts={"final_image": f"images/{variant.label}/p{i:03d}.png"},
                )
                artifacts.append(
                    RunArtifact(
                        prompt_index=i,
                        trace_doc=trace_doc,
                        image_png=png_bytes(image),
                        provenance=image.provenance.to_dict(),
                    )
                )
            report.finalize()
        except Exception as exc:  # noqa: BLE001 - variant isolation
            report.error = f"{type(exc).__name__}: {exc}"
            result.partial = True
        result.reports.append(report)
        result.artifacts[variant.label] = artifacts
    return result


def build_plan(
    kind: ExperimentKind | str,
    prompt_set: PromptSet,
    backbone_id: str,
    settings: GenerationSettings,
    weights: ObjectiveWeights,
    optimizer: OptimizerConfig,
    global_seed: int = 0,
    lr_values: tuple[float, ...] | None = None,
    grid_values: tuple[float, ...] | None = None,
    ablation_w2: float = 0.5,
    ablation_w3: float = 0.5,
) -> ExperimentPlan:
    try:
        kind = ExperimentKind(kind)
    except ValueError:
        raise InputError(
            f"unknown experiment kind {kind!r}; choose from {[k.value for k in ExperimentKind]}"
        ) from None
    if kind is ExperimentKind.BENCHMARK:
        variants = benchmark_variants(weights, optimizer)
    elif kind is ExperimentKind.ABLATION:
        variants = ablation_variants(optimizer, w2=ablation_w2, w3=ablation_w3)
    elif kind is ExperimentKind.WEIGHT_GRID:
        variants = weight_grid_variants(optimizer, grid_values or WEIGHT_GRID_VALUES)
    elif kind is ExperimentKind.LR_SWEEP:
        variants = lr_sweep_variants(weights, optimizer, lr_values or LR_SWEEP_VALUES)
    elif kind is ExperimentKind.OPTIMIZER_CMP:
        variants = optimizer_cmp_variants(None, optimizer)
    else:  # pragma: no cover - enum is exhaustive
        raise InputError(f"unknown experiment kind {kind}")
    return ExperimentPlan(
        kind=kind,
        variants=variants,
        prompt_set=prompt_set,
        backbone_id=backbone_id,
        settings=settings,
        global_seed=global_seed,
    )
