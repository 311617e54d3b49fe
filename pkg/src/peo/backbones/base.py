"""Pluggable backbone contract: text encoder, generator, image encoder, aesthetic scorer.

A backbone bundles the four capabilities the optimizer needs.  Gradient-based
optimization additionally requires the vector-Jacobian hooks of
``DifferentiableBackbone``; adapters around autograd frameworks implement
them with one backward call each.
"""

from __future__ import annotations

import hashlib
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ContractError, InputError
from ..types import GeneratedImage, ImageFeatures, PromptEmbedding


@dataclass(frozen=True)
class GenerationSettings:
    """Sampler configuration for one generation call.

    ``differentiated_steps`` bounds how many trailing sampler steps an
    adapter backpropagates through; the toy backbone differentiates through
    everything regardless, real latent-diffusion adapters may truncate for
    memory.
    """

    sampler_name: str = "toy-logistic"
    sampling_steps: int = 1
    guidance_scale: float = 0.0
    differentiated_steps: int = 1
    height: int = 8
    width: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.sampling_steps < 1:
            raise InputError(f"sampling_steps must be >= 1, got {self.sampling_steps}")
        if self.guidance_scale < 0.0:
            raise InputError(f"guidance_scale must be >= 0, got {self.guidance_scale}")
        if not (1 <= self.differentiated_steps <= self.sampling_steps):
            raise InputError(
                f"differentiated_steps must be in [1, {self.sampling_steps}], "
                f"got {self.differentiated_steps}"
            )
        if self.height < 1 or self.width < 1:
            raise InputError("height and width must be positive")

    def to_dict(self) -> dict:
        return {
            "sampler_name": self.sampler_name,
            "sampling_steps": self.sampling_steps,
            "guidance_scale": self.guidance_scale,
            "differentiated_steps": self.differentiated_steps,
            "height": self.height,
            "width": self.width,
            "seed": self.seed,
        }


# Named presets. "sd15" and "turbo" carry the reference sampler settings of
# the two real backbone classes; "toy" is tuned for the desk-scale backbone.
PRESETS: dict[str, GenerationSettings] = {
    "sd15": GenerationSettings(
        sampler_name="unipc",
        sampling_steps=15,
        guidance_scale=7.5,
        differentiated_steps=1,
        height=512,
        width=512,
    ),
    "turbo": GenerationSettings(
        sampler_name="turbo",
        sampling_steps=1,
        guidance_scale=0.0,
        differentiated_steps=1,
        height=512,
        width=512,
    ),
    "toy": GenerationSettings(
        sampler_name="toy-logistic",
        sampling_steps=1,
        guidance_scale=2.0,
        differentiated_steps=1,
        height=8,
        width=8,
    ),
}


def resolve_preset(name: str) -> GenerationSettings:
    try:
        return PRESETS[name]
    except KeyError:
        raise InputError(f"unknown settings preset {name!r}; known: {sorted(PRESETS)}") from None


class Backbone(ABC):
    """The four pluggable capabilities plus identity metadata."""

    backbone_id: str = "backbone"
    encoder_count: int = 1
    concurrent_safe: bool = False
    default_settings: GenerationSettings = GenerationSettings()

    @abstractmethod
    def text_encode(self, prompt: str) -> PromptEmbedding: ...

    @abstractmethod
    def generate(self, theta: PromptEmbedding, settings: GenerationSettings) -> GeneratedImage: ...

    @abstractmethod
    def image_encode(self, image: GeneratedImage) -> ImageFeatures: ...

    @abstractmethod
    def aesthetic_score(self, image: GeneratedImage) -> float: ...

    def unconditional_embedding(self) -> PromptEmbedding | None:
        """The frozen empty-prompt embedding used by classifier-free guidance."""
        return None

    def unconditional_checksum(self) -> str | None:
        uncond = self.unconditional_embedding()
        return None if uncond is None else uncond.checksum()


class DifferentiableBackbone(Backbone):
    """Backbone with the VJP hooks needed for analytic objective gradients."""

    @abstractmethod
    def generate_vjp(
        self,
        theta: PromptEmbedding,
        settings: GenerationSettings,
        pixel_cotangent: np.ndarray,
    ) -> list[np.ndarray]:
        """Pull a pixel-space cotangent back to one gradient per embedding vector."""

    @abstractmethod
    def image_encode_vjp(
        self, image: GeneratedImage, feature_cotangents: Sequence[np.ndarray]
    ) -> np.ndarray:
        """Pull per-encoder feature cotangents back to a pixel-space cotangent."""

    @abstractmethod
    def aesthetic_pixel_grad(self, image: GeneratedImage) -> np.ndarray:
        """d raw_score / d pixels at the given image."""


def encode_prompt(prompt: str, backbone: Backbone) -> PromptEmbedding:
    """Encode a prompt, enforcing the backbone's declared encoder structure."""
    if not prompt:
        raise InputError("prompt must be non-empty")
    theta = backbone.text_encode(prompt)
    if theta.encoder_count != backbone.encoder_count:
        raise ContractError(
            f"backbone {backbone.backbone_id!r} declared {backbone.encoder_count} encoders "
            f"but emitted {theta.encoder_count} vectors"
        )
    return theta


def generate_image(
    theta: PromptEmbedding, settings: GenerationSettings, backbone: Backbone
) -> GeneratedImage:
    if theta.encoder_count != backbone.encoder_count:
        raise ContractError(
            f"embedding has {theta.encoder_count} vectors, backbone expects {backbone.encoder_count}"
        )
    return backbone.generate(theta, settings)


def image_checksum(image: GeneratedImage) -> str:
    return hashlib.sha256(np.ascontiguousarray(image.pixels, dtype="<f8").tobytes()).hexdigest()


@dataclass
class CapabilityReport:
    """Per-capability pass/fail with human-readable detail."""

    backbone_id: str
    checks: dict[str, tuple[bool, str]]

    @property
    def all_passed(self) -> bool:
        return all(ok for ok, _ in self.checks.values())

    def to_dict(self) -> dict:
        return {
            "backbone_id": self.backbone_id,
            "all_passed": self.all_passed,
            "checks": {k: {"passed": ok, "detail": d} for k, (ok, d) in self.checks.items()},
        }


_PROBE_PROMPT = "capability probe"


def capability_check(backbone: Backbone) -> CapabilityReport:
    """Probe determinism, encoder consistency, and differentiability.

    Failures are reported, never raised: the report is the product.
    """
    checks: dict[str, tuple[bool, str]] = {}
    settings = backbone.default_settings

    try:
        e1 = backbone.text_encode(_PROBE_PROMPT)
        e2 = backbone.text_encode(_PROBE_PROMPT)
        ok = e1.checksum() == e2.checksum()
        checks["text_encode_deterministic"] = (ok, "checksums equal" if ok else "checksums differ")
    except Exception as exc:  # noqa: BLE001 - report, don't crash the probe
        checks["text_encode_deterministic"] = (False, f"text_encode raised: {exc}")
        return CapabilityReport(backbone.backbone_id, checks)

    ok = e1.encoder_count == backbone.encoder_count
    checks["encoder_count_consistent"] = (
        ok,
        f"declared {backbone.encoder_count}, emitted {e1.encoder_count}",
    )

    try:
        img1 = backbone.generate(e1, settings)
        img2 = backbone.generate(e1, settings)
        ok = image_checksum(img1) == image_checksum(img2)
        checks["generate_deterministic"] = (ok, "checksums equal" if ok else "checksums differ")
    except Exception as exc:  # noqa: BLE001
        checks["generate_deterministic"] = (False, f"generate raised: {exc}")
        return CapabilityReport(backbone.backbone_id, checks)

    try:
        feats = backbone.image_encode(img1)
        ok = feats.encoder_count == e1.encoder_count
        checks["features_match_encoders"] = (
            ok,
            f"{feats.encoder_count} feature vectors for {e1.encoder_count} encoders",
        )
    except Exception as exc:  # noqa: BLE001
        checks["features_match_encoders"] = (False, f"image_encode raised: {exc}")

    try:
        raw = float(backbone.aesthetic_score(img1))
        ok = bool(np.isfinite(raw))
        checks["aesthetic_finite"] = (ok, f"raw score {raw!r}")
    except Exception as exc:  # noqa: BLE001
        checks["aesthetic_finite"] = (False, f"aesthetic_score raised: {exc}")

    checks["differentiable"] = _probe_differentiability(backbone, e1, settings)
    return CapabilityReport(backbone.backbone_id, checks)


def _probe_differentiability(
    backbone: Backbone, theta: PromptEmbedding, settings: GenerationSettings
) -> tuple[bool, str]:
    """Finite-difference check of generate_vjp on a single embedding coordinate."""
    if not isinstance(backbone, DifferentiableBackbone):
        return (False, "backbone exposes no gradient interface")
    h = 1e-4
    try:
        cot = np.ones((settings.height, settings.width, 1), dtype=np.float64)

        def pixel_sum(vec0: np.ndarray) -> float:
            shifted = theta.replace_vectors([vec0] + [v.copy() for v in theta.vectors[1:]])
            return float(backbone.generate(shifted, settings).pixels.sum())

        v = theta.vectors[0]
        up, down = v.copy(), v.copy()
        up[0] += h
        down[0] -= h
        fd = (pixel_sum(up) - pixel_sum(down)) / (2.0 * h)
        analytic = float(backbone.generate_vjp(theta, settings, cot)[0][0])
        scale = max(abs(fd), abs(analytic), 1e-6)
        rel = abs(fd - analytic) / scale
        ok = bool(rel < 1e-3)
        return (ok, f"fd={fd:.6g} analytic={analytic:.6g} rel_err={rel:.2e}")
    except Exception as exc:  # noqa: BLE001
        return (False, f"gradient probe raised: {exc}")
