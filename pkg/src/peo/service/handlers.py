"""Service handlers: the single implementation both HTTP routes and the
in-process client dispatch to.

Backbones that declare themselves unsafe for concurrent evaluation are
serialized behind a per-backbone lock; concurrent-safe ones run freely.
"""

from __future__ import annotations

import base64
import threading
from contextlib import nullcontext
from dataclasses import replace

from .. import __version__
from ..backbones import available_backbones, capability_check, get_backbone, resolve_preset
from ..errors import InputError
from ..harness.experiments import build_plan, get_prompt_preprocessor, run_experiment
from ..harness.metrics import get_hps_scorer
from ..harness.prompts import PromptOrigin, PromptSet
from ..harness.reports import comparison_markdown
from ..imaging import png_bytes
from ..optimizer import detect_failure, peo_optimize
from .models import (
    BackboneInfo,
    BackbonesResponse,
    CapabilityRequest,
    CapabilityResponse,
    ExperimentRequest,
    ExperimentResponse,
    HealthResponse,
    OptimizeRequest,
    OptimizeResponse,
)


def _resolve_settings(request, backbone):
    if request.settings is not None:
        return request.settings.to_core()
    if request.preset is not None:
        return resolve_preset(request.preset)
    return backbone.default_settings


_BACKBONE_LOCKS: dict[str, threading.Lock] = {}
_LOCKS_GUARD = threading.Lock()


def _serialization_guard(name: str, backbone):
    """A lock for backbones that must not be evaluated concurrently."""
    if backbone.concurrent_safe:
        return nullcontext()
    with _LOCKS_GUARD:
        return _BACKBONE_LOCKS.setdefault(name, threading.Lock())


def handle_health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


def handle_backbones() -> BackbonesResponse:
    infos = []
    for name in available_backbones():
        bb = get_backbone(name)
        infos.append(
            BackboneInfo(
                name=name,
                encoder_count=bb.encoder_count,
                concurrent_safe=bb.concurrent_safe,
                default_settings=bb.default_settings.to_dict(),
            )
        )
    return BackbonesResponse(backbones=infos)


def handle_capability(request: CapabilityRequest) -> CapabilityResponse:
    backbone = get_backbone(request.backbone)
    report = capability_check(backbone)
    doc = report.to_dict()
    return CapabilityResponse(
        backbone_id=doc["backbone_id"], all_passed=doc["all_passed"], checks=doc["checks"]
    )


def handle_optimize(request: OptimizeRequest) -> OptimizeResponse:
    if not request.prompt:
        raise InputError("prompt must be non-empty")
    backbone = get_backbone(request.backbone)
    settings = replace(_resolve_settings(request, backbone), seed=request.seed)
    weights = request.weights.to_core()
    cfg = replace(request.optimizer.to_core(), seed=request.seed)

    with _serialization_guard(request.backbone, backbone):
        theta_init = backbone.text_encode(request.prompt)
        theta_star, trace = peo_optimize(theta_init, backbone, weights, cfg, settings)
        failure = detect_failure(trace)
        before = backbone.generate(theta_init, settings)
        after = backbone.generate(theta_star, settings)
    trace.records[0].image_ref = "before.png"
    trace.records[trace.best_step].image_ref = "after.png"
    doc = trace.to_doc(
        backbone_id=request.backbone,
        weights=weights,
        optimizer=cfg,
        settings=settings,
        theta_init_checksum=theta_init.checksum(),
        theta_star_checksum=theta_star.checksum(),
        artifacts={"before": "before.png", "after": "after.png"},
    )
    return OptimizeResponse(
        backbone=request.backbone,
        settings=settings.to_dict(),
        initial_total=trace.records[0].breakdown.total,
        best_total=trace.best_total,
        best_step=trace.best_step,
        termination_reason=trace.termination_reason.value,
        failure_mode=failure.value,
        trace=doc,
        before_png_b64=base64.b64encode(png_bytes(before)).decode("ascii"),
        after_png_b64=base64.b64encode(png_bytes(after)).decode("ascii"),
        before_provenance=before.provenance.to_dict(),
        after_provenance=after.provenance.to_dict(),
    )


def handle_experiment(request: ExperimentRequest) -> ExperimentResponse:
    backbone = get_backbone(request.backbone)
    settings = _resolve_settings(request, backbone)
    prompt_set = PromptSet(
        name=request.prompt_set_name,
        prompts=tuple(request.prompts),
        origin=PromptOrigin(request.prompt_set_origin),
    )
    plan = build_plan(
        kind=request.kind,
        prompt_set=prompt_set,
        backbone_id=request.backbone,
        settings=settings,
        weights=request.weights.to_core(),
        optimizer=request.optimizer.to_core(),
        global_seed=request.seed,
        lr_values=tuple(request.lr_values) if request.lr_values else None,
        grid_values=tuple(request.grid_values) if request.grid_values else None,
        ablation_w2=request.ablation_w2,
        ablation_w3=request.ablation_w3,
    )
    hps = get_hps_scorer(request.hps_scorer)
    preprocessor = get_prompt_preprocessor(request.prompt_preprocessor)
    with _serialization_guard(request.backbone, backbone):
        result = run_experiment(plan, backbone, hps, prompt_preprocessor=preprocessor)
    return ExperimentResponse.from_core(result, comparison_markdown(result))
