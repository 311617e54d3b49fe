"""Request/response schemas for the HTTP service.

Every numeric field round-trips through JSON without loss (floats are
serialized via repr, images via base64), so a client can rebuild bundles
byte-identical to ones written server-side.
"""

from __future__ import annotations

import base64

from pydantic import BaseModel, Field

from ..backbones.base import GenerationSettings
from ..harness.experiments import ExperimentResult, RunArtifact
from ..harness.metrics import MetricReport
from ..optimizer import OptimizerConfig
from ..types import ObjectiveWeights


class WeightsModel(BaseModel):
    w1: float = 1.0
    w2: float = 0.5
    w3: float = 0.5

    def to_core(self) -> ObjectiveWeights:
        return ObjectiveWeights(self.w1, self.w2, self.w3)


class OptimizerModel(BaseModel):
    algorithm: str = "adam"
    learning_rate: float = 0.01
    max_steps: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    clip_norm: float | None = None
    seed: int = 0

    def to_core(self) -> OptimizerConfig:
        return OptimizerConfig(**self.model_dump())


class SettingsModel(BaseModel):
    sampler_name: str = "toy-logistic"
    sampling_steps: int = 1
    guidance_scale: float = 0.0
    differentiated_steps: int = 1
    height: int = 8
    width: int = 8
    seed: int = 0

    def to_core(self) -> GenerationSettings:
        return GenerationSettings(**self.model_dump())


class OptimizeRequest(BaseModel):
    prompt: str
    backbone: str = "toy"
    weights: WeightsModel = Field(default_factory=WeightsModel)
    optimizer: OptimizerModel = Field(default_factory=OptimizerModel)
    preset: str | None = None
    settings: SettingsModel | None = None
    seed: int = 0


class OptimizeResponse(BaseModel):
    backbone: str
    settings: dict
    initial_total: float
    best_total: float
    best_step: int
    termination_reason: str
    failure_mode: str
    trace: dict
    before_png_b64: str
    after_png_b64: str
    before_provenance: dict
    after_provenance: dict


class ExperimentRequest(BaseModel):
    kind: str
    prompts: list[str]
    prompt_set_name: str = "prompts"
    prompt_set_origin: str = "custom"
    backbone: str = "toy"
    weights: WeightsModel = Field(default_factory=WeightsModel)
    optimizer: OptimizerModel = Field(default_factory=OptimizerModel)
    preset: str | None = None
    settings: SettingsModel | None = None
    seed: int = 0
    lr_values: list[float] | None = None
    grid_values: list[float] | None = None
    ablation_w2: float = 0.5
    ablation_w3: float = 0.5
    hps_scorer: str | None = None
    prompt_preprocessor: str | None = None


class ArtifactModel(BaseModel):
    prompt_index: int
    trace: dict
    image_png_b64: str
    provenance: dict

    @staticmethod
    def from_core(art: RunArtifact) -> "ArtifactModel":
        return ArtifactModel(
            prompt_index=art.prompt_index,
            trace=art.trace_doc,
            image_png_b64=base64.b64encode(art.image_png).decode("ascii"),
            provenance=art.provenance,
        )

    def to_core(self) -> RunArtifact:
        return RunArtifact(
            prompt_index=self.prompt_index,
            trace_doc=self.trace,
            image_png=base64.b64decode(self.image_png_b64),
            provenance=self.provenance,
        )


class VariantReportModel(BaseModel):
    label: str
    rows: list[dict]
    aggregates: dict
    failure_counts: dict
    seeds: list[int]
    config: dict
    error: str | None = None


class ExperimentResponse(BaseModel):
    kind: str
    backbone: str
    prompt_set_name: str
    prompt_set_origin: str
    global_seed: int
    settings: dict
    variants: list[VariantReportModel]
    artifacts: dict[str, list[ArtifactModel]]
    partial_failure: bool
    comparison_md: str

    def to_core(self) -> ExperimentResult:
        result = ExperimentResult(
            kind=self.kind,  # type: ignore[arg-type]
            backbone_id=self.backbone,
            prompt_set_name=self.prompt_set_name,
            prompt_origin=self.prompt_set_origin,
            global_seed=self.global_seed,
            settings=self.settings,
            partial=self.partial_failure,
        )
        result.reports = [MetricReport.from_dict(v.model_dump()) for v in self.variants]
        result.artifacts = {
            label: [a.to_core() for a in arts] for label, arts in self.artifacts.items()
        }
        return result

    @staticmethod
    def from_core(result: ExperimentResult, comparison_md: str) -> "ExperimentResponse":
        return ExperimentResponse(
            kind=result.kind.value,
            backbone=result.backbone_id,
            prompt_set_name=result.prompt_set_name,
            prompt_set_origin=result.prompt_origin,
            global_seed=result.global_seed,
            settings=result.settings,
            variants=[VariantReportModel(**r.to_dict()) for r in result.reports],
            artifacts={
                label: [ArtifactModel.from_core(a) for a in arts]
                for label, arts in result.artifacts.items()
            },
            partial_failure=result.partial,
            comparison_md=comparison_md,
        )


class CapabilityRequest(BaseModel):
    backbone: str = "toy"


class CapabilityResponse(BaseModel):
    backbone_id: str
    all_passed: bool
    checks: dict


class BackboneInfo(BaseModel):
    name: str
    encoder_count: int
    concurrent_safe: bool
    default_settings: dict


class BackbonesResponse(BaseModel):
    backbones: list[BackboneInfo]


class HealthResponse(BaseModel):
    status: str
    version: str
