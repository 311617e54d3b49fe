"""Iterative maximization of the tripartite objective over a prompt embedding.

The loop evaluates the objective at the current embedding, pulls its
analytic gradient back through the backbone's VJP hooks, and applies a
gradient-ascent update (GD, Adam, or AdamW).  It stops at the step budget,
when the total stops increasing beyond a small tolerance, or on
divergence; the best-scoring embedding seen (the starting point included)
is what gets returned, so a run can never finish worse than its baseline
under its own objective.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .backbones.base import Backbone, DifferentiableBackbone, GenerationSettings
from .errors import ContractError, DomainError, InputError
from .objective import (
    aesthetic_gate,
    cosine_grad_wrt_second,
    evaluate_objective,
)
from .types import GeneratedImage, ImageFeatures, ObjectiveBreakdown, ObjectiveWeights, PromptEmbedding

# A step must beat the running best by more than this to count as an increase.
STOP_TOLERANCE = 1e-6


class Algorithm(str, Enum):
    GD = "gd"
    ADAM = "adam"
    ADAMW = "adamw"


class TerminationReason(str, Enum):
    MAX_STEPS = "max_steps"
    NO_INCREASE = "no_increase"
    DIVERGED = "diverged"


class FailureMode(str, Enum):
    OK = "ok"
    DIVERGED = "diverged"
    CEILING = "ceiling"


@dataclass(frozen=True)
class OptimizerConfig:
    algorithm: Algorithm = Algorithm.ADAM
    learning_rate: float = 0.01
    max_steps: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01  # adamw only
    clip_norm: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise InputError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.max_steps < 0:
            raise InputError(f"max_steps must be >= 0, got {self.max_steps}")
        if not (0.0 < self.beta1 < 1.0):
            raise InputError(f"beta1 must be in (0, 1), got {self.beta1}")
        if not (0.0 < self.beta2 < 1.0):
            raise InputError(f"beta2 must be in (0, 1), got {self.beta2}")
        if self.eps <= 0.0:
            raise InputError(f"eps must be > 0, got {self.eps}")
        if self.weight_decay < 0.0:
            raise InputError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.clip_norm is not None and self.clip_norm <= 0.0:
            raise InputError(f"clip_norm must be > 0, got {self.clip_norm}")
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm.value,
            "learning_rate": self.learning_rate,
            "max_steps": self.max_steps,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "weight_decay": self.weight_decay,
            "clip_norm": self.clip_norm,
            "seed": self.seed,
        }


@dataclass
class OptimizationState:
    theta: PromptEmbedding
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_index: int
    best_theta: PromptEmbedding
    best_total: float


def init_state(theta: PromptEmbedding) -> OptimizationState:
    zeros = [np.zeros_like(v) for v in theta.vectors]
    return OptimizationState(
        theta=theta,
        first_moment=zeros,
        second_moment=[z.copy() for z in zeros],
        step_index=0,
        best_theta=theta,
        best_total=float("-inf"),
    )


@dataclass
class TraceRecord:
    t: int
    breakdown: ObjectiveBreakdown
    theta_diff_norm: float
    grad_norm: float | None = None
    image_ref: str | None = None

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            **self.breakdown.to_dict(),
            "theta_diff_norm": self.theta_diff_norm,
            "grad_norm": self.grad_norm,
            "image_ref": self.image_ref,
        }

    @staticmethod
    def from_dict(d: dict) -> "TraceRecord":
        return TraceRecord(
            t=int(d["t"]),
            breakdown=ObjectiveBreakdown.from_dict(d),
            theta_diff_norm=float(d["theta_diff_norm"]),
            grad_norm=None if d.get("grad_norm") is None else float(d["grad_norm"]),
            image_ref=d.get("image_ref"),
        )


@dataclass
class OptimizationTrace:
    records: list[TraceRecord] = field(default_factory=list)
    termination_reason: TerminationReason = TerminationReason.MAX_STEPS
    best_step: int = 0
    best_total: float = float("nan")

    def totals(self) -> list[float]:
        return [r.breakdown.total for r in self.records]

    def to_doc(
        self,
        backbone_id: str = "",
        weights: ObjectiveWeights | None = None,
        optimizer: OptimizerConfig | None = None,
        settings: GenerationSettings | None = None,
        artifacts: dict | None = None,
        theta_init_checksum: str | None = None,
        theta_star_checksum: str | None = None,
    ) -> dict:
        return {
            "schema_version": 1,
            "backbone_id": backbone_id,
            "weights": None if weights is None else {"w1": weights.w1, "w2": weights.w2, "w3": weights.w3},
            "optimizer": None if optimizer is None else optimizer.to_dict(),
            "settings": None if settings is None else settings.to_dict(),
            "records": [r.to_dict() for r in self.records],
            "termination_reason": self.termination_reason.value,
            "best_step": self.best_step,
            "best_total": self.best_total,
            "initial_total": self.records[0].breakdown.total if self.records else None,
            "theta_init_checksum": theta_init_checksum,
            "theta_star_checksum": theta_star_checksum,
            "artifacts": artifacts or {},
        }

    @staticmethod
    def from_doc(doc: dict) -> "OptimizationTrace":
        trace = OptimizationTrace(
            records=[TraceRecord.from_dict(r) for r in doc["records"]],
            termination_reason=TerminationReason(doc["termination_reason"]),
            best_step=int(doc.get("best_step", 0)),
            best_total=float(doc.get("best_total", "nan")),
        )
        return trace


def save_trace_doc(doc: dict, path: Path | str) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_trace(path: Path | str) -> OptimizationTrace:
    return OptimizationTrace.from_doc(json.loads(Path(path).read_text()))


def _grads_finite(gradient: list[np.ndarray]) -> bool:
    return all(np.all(np.isfinite(g)) for g in gradient)


def gradient_norm(gradient: list[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.dot(g, g)) for g in gradient)))


def ascent_update(
    state: OptimizationState, gradient: list[np.ndarray], cfg: OptimizerConfig
) -> OptimizationState:
    """One gradient-ascent step; non-finite gradients leave the state untouched."""
    if len(gradient) != len(state.theta.vectors):
        raise ContractError(
            f"gradient has {len(gradient)} vectors, theta has {len(state.theta.vectors)}"
        )
    for g, v in zip(gradient, state.theta.vectors):
        if g.shape != v.shape:
            raise ContractError(f"gradient shape {g.shape} does not match theta {v.shape}")
    if not _grads_finite(gradient):
        return state

    t = state.step_index + 1
    if all(not np.any(g) for g in gradient):
        # A stationary gradient leaves the embedding fixed under every
        # algorithm (AdamW's decoupled decay included).
        return OptimizationState(
            theta=state.theta,
            first_moment=state.first_moment,
            second_moment=state.second_moment,
            step_index=t,
            best_theta=state.best_theta,
            best_total=state.best_total,
        )

    if cfg.clip_norm is not None:
        norm = gradient_norm(gradient)
        if norm > cfg.clip_norm:
            gradient = [g * (cfg.clip_norm / norm) for g in gradient]

    psi = cfg.learning_rate

    if cfg.algorithm is Algorithm.GD:
        new_vectors = [v + psi * g for v, g in zip(state.theta.vectors, gradient)]
        return OptimizationState(
            theta=state.theta.replace_vectors(new_vectors),
            first_moment=state.first_moment,
            second_moment=state.second_moment,
            step_index=t,
            best_theta=state.best_theta,
            best_total=state.best_total,
        )

    base = list(state.theta.vectors)
    if cfg.algorithm is Algorithm.ADAMW:
        # Decoupled decay pulls theta toward zero before the moment step.
        base = [v - psi * cfg.weight_decay * v for v in base]

    new_m, new_v, new_vectors = [], [], []
    for v, m, s, g in zip(base, state.first_moment, state.second_moment, gradient):
        m_t = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        s_t = cfg.beta2 * s + (1.0 - cfg.beta2) * g * g
        m_hat = m_t / (1.0 - cfg.beta1**t)
        s_hat = s_t / (1.0 - cfg.beta2**t)
        new_m.append(m_t)
        new_v.append(s_t)
        new_vectors.append(v + psi * m_hat / (np.sqrt(s_hat) + cfg.eps))
    return OptimizationState(
        theta=state.theta.replace_vectors(new_vectors),
        first_moment=new_m,
        second_moment=new_v,
        step_index=t,
        best_theta=state.best_theta,
        best_total=state.best_total,
    )


def objective_value(
    backbone: Backbone,
    theta: PromptEmbedding,
    theta_init: PromptEmbedding,
    weights: ObjectiveWeights,
    settings: GenerationSettings,
) -> tuple[ObjectiveBreakdown, GeneratedImage, ImageFeatures, float]:
    """Generate, score, and combine the three terms at one embedding."""
    image = backbone.generate(theta, settings)
    features = backbone.image_encode(image)
    raw = float(backbone.aesthetic_score(image))
    breakdown = evaluate_objective(raw, features, theta, theta_init, weights)
    return breakdown, image, features, raw


def objective_gradient(
    backbone: DifferentiableBackbone,
    theta: PromptEmbedding,
    theta_init: PromptEmbedding,
    weights: ObjectiveWeights,
    settings: GenerationSettings,
    image: GeneratedImage,
    features: ImageFeatures,
    raw: float,
) -> list[np.ndarray]:
    """Analytic gradient of the weighted total with respect to every theta vector.

    Pixel-space cotangents from the aesthetic and adherence paths are summed
    and pulled back through the generator once; direct cosine contributions
    add in embedding space.
    """
    k = theta.encoder_count
    grads = [np.zeros_like(v) for v in theta.vectors]
    pixel_cot = np.zeros_like(image.pixels)
    any_pixel_path = False

    gate = weights.w1 * aesthetic_gate(raw)
    if gate != 0.0:
        pixel_cot = pixel_cot + gate * backbone.aesthetic_pixel_grad(image)
        any_pixel_path = True

    if weights.w2 != 0.0:
        per = weights.w2 / k
        feature_cots = []
        for i in range(k):
            f_i, t_i = features.vectors[i], theta.vectors[i]
            grads[i] += per * cosine_grad_wrt_second(f_i, t_i)
            feature_cots.append(per * cosine_grad_wrt_second(t_i, f_i))
        pixel_cot = pixel_cot + backbone.image_encode_vjp(image, feature_cots)
        any_pixel_path = True

    if any_pixel_path:
        for i, g in enumerate(backbone.generate_vjp(theta, settings, pixel_cot)):
            grads[i] += g

    if weights.w3 != 0.0:
        per = weights.w3 / k
        for i in range(k):
            grads[i] += per * cosine_grad_wrt_second(theta_init.vectors[i], theta.vectors[i])

    return grads


def peo_optimize(
    theta_init: PromptEmbedding,
    backbone: Backbone,
    weights: ObjectiveWeights,
    cfg: OptimizerConfig,
    settings: GenerationSettings | None = None,
) -> tuple[PromptEmbedding, OptimizationTrace]:
    """Maximize the objective from theta_init; return the best embedding seen.

    Only the conditional embedding is updated: the backbone's own
    unconditional embedding is never touched.  All encoder vectors move
    jointly.  Divergence (a non-finite gradient or objective, or a stop
    below the starting total) ends the run and is recorded on the trace.
    """
    settings = settings or backbone.default_settings
    theta_init.require_nonzero("theta_init")
    if theta_init.encoder_count != backbone.encoder_count:
        raise ContractError(
            f"theta_init has {theta_init.encoder_count} vectors, "
            f"backbone expects {backbone.encoder_count}"
        )
    if cfg.max_steps > 0 and not isinstance(backbone, DifferentiableBackbone):
        raise ContractError(
            f"backbone {backbone.backbone_id!r} exposes no gradient interface"
        )

    trace = OptimizationTrace()
    breakdown, image, features, raw = objective_value(
        backbone, theta_init, theta_init, weights, settings
    )
    trace.records.append(TraceRecord(t=0, breakdown=breakdown, theta_diff_norm=0.0))

    state = init_state(theta_init)
    state.best_total = breakdown.total
    trace.best_step, trace.best_total = 0, breakdown.total

    if not np.isfinite(breakdown.total):
        trace.termination_reason = TerminationReason.DIVERGED
        return theta_init, trace

    theta = theta_init
    reason = TerminationReason.MAX_STEPS
    for t in range(1, cfg.max_steps + 1):
        gradient = objective_gradient(
            backbone, theta, theta_init, weights, settings, image, features, raw
        )
        trace.records[-1].grad_norm = gradient_norm(gradient)
        if not _grads_finite(gradient):
            reason = TerminationReason.DIVERGED
            break

        state = ascent_update(state, gradient, cfg)
        theta = state.theta
        try:
            breakdown, image, features, raw = objective_value(
                backbone, theta, theta_init, weights, settings
            )
        except (DomainError, ContractError):
            reason = TerminationReason.DIVERGED
            break
        if not np.isfinite(breakdown.total):
            reason = TerminationReason.DIVERGED
            break

        trace.records.append(
            TraceRecord(t=t, breakdown=breakdown, theta_diff_norm=theta.diff_norm(theta_init))
        )
        prev_best = state.best_total
        if breakdown.total > state.best_total:
            state.best_total = breakdown.total
            state.best_theta = theta
            trace.best_step, trace.best_total = t, breakdown.total
        if breakdown.total <= prev_best + STOP_TOLERANCE:
            # Stalled. A stop below the starting total means the trajectory
            # left the neighborhood of the optimum it was climbing.
            reason = (
                TerminationReason.DIVERGED
                if breakdown.total < trace.records[0].breakdown.total
                else TerminationReason.NO_INCREASE
            )
            break

    trace.termination_reason = reason
    return state.best_theta, trace


def detect_failure(trace: OptimizationTrace, aesthetic_ceiling: float = 0.65) -> FailureMode:
    """Classify a finished run: healthy, diverged, or stuck at the aesthetic ceiling.

    "Final total" is judged by the embedding the run settles on — the best
    total observed — because that is what gets returned.
    """
    if not trace.records:
        raise InputError("trace has no records")
    totals = trace.totals()
    best = trace.best_total if np.isfinite(trace.best_total) else max(totals)
    if trace.termination_reason is TerminationReason.DIVERGED or best < totals[0]:
        return FailureMode.DIVERGED
    l1s = [r.breakdown.l1 for r in trace.records]
    if l1s[0] > aesthetic_ceiling and (max(l1s) - l1s[0]) < 0.01:
        return FailureMode.CEILING
    return FailureMode.OK
