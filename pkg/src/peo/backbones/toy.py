"""Desk-scale reference backbone: deterministic, bounded, and exactly differentiable.

The generator is a single logistic map ``pixels = sigmoid(W_gen . theta)``
over an 8x8 grayscale canvas, the image encoder a unit-normalized linear
map, and the aesthetic scorer a bounded logistic readout.  Every function
is C1 with a closed-form Jacobian, so finite differences can certify the
analytic gradient path end to end in milliseconds.

Weights are committed fixture files (little-endian float64, C order) whose
byte layout and generating recurrence are documented in the sidecar
manifest; they are loaded, checksum-verified, and never regenerated at
runtime.  The text encoder folds prompt bytes through FNV-1a into a
splitmix64 stream, which any implementation can reproduce bit-for-bit at
double precision.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..errors import ContractError, DomainError, InputError
from ..types import GeneratedImage, ImageFeatures, PromptEmbedding, Provenance
from .base import DifferentiableBackbone, GenerationSettings, PRESETS

_MASK64 = (1 << 64) - 1

# splitmix64 stream and finalizer constants.
SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
MIX_MULT_1 = 0xBF58476D1CE4E5B9
MIX_MULT_2 = 0x94D049BB133111EB
MIX_SHIFTS = (30, 27, 31)

# FNV-1a 64-bit, used to fold byte strings into stream seeds.
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

FIXTURE_VERSION = "toy_v1"


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & _MASK64
    return h


def _mix64(z: int) -> int:
    z = ((z ^ (z >> MIX_SHIFTS[0])) * MIX_MULT_1) & _MASK64
    z = ((z ^ (z >> MIX_SHIFTS[1])) * MIX_MULT_2) & _MASK64
    return z ^ (z >> MIX_SHIFTS[2])


def unit_stream(seed: int, count: int) -> np.ndarray:
    """``count`` doubles in [-1, 1) from a splitmix64 stream seeded by ``seed``.

    Each 64-bit output maps to [0, 1) via ``(x >> 11) * 2**-53`` and is then
    shifted to ``2*u - 1``; both steps are exact in float64.
    """
    out = np.empty(count, dtype=np.float64)
    state = seed & _MASK64
    for i in range(count):
        state = (state + SPLITMIX_GAMMA) & _MASK64
        u = (_mix64(state) >> 11) * 2.0**-53
        out[i] = 2.0 * u - 1.0
    return out


def sigmoid(z: np.ndarray) -> np.ndarray:
    # Split by sign for overflow-free evaluation at any finite input.
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class ToyParams:
    """Fixture matrices: generator, image encoder, and aesthetic readout."""

    d: int
    image_side: int
    w_gen: np.ndarray  # (side*side, d)
    w_img: np.ndarray  # (d, side*side)
    v_aes: np.ndarray  # (side*side,)


# seed labels for each fixture matrix; also recorded in the manifest
_SEED_LABELS = {
    "w_gen": "peo-toy/w_gen/v1",
    "w_img": "peo-toy/w_img/v1",
    "v_aes": "peo-toy/v_aes/v1",
}

# Generator sharpness. Large enough that oversized ascent steps overshoot
# the logistic transition bands (the divergence failure mode), small enough
# that h=1e-4 central differences still certify the analytic gradient.
W_GEN_SCALE = 8.0


def build_params(d: int = 16, image_side: int = 8) -> ToyParams:
    """Rebuild the fixture matrices from the documented recurrence.

    Used by the fixture generator and the bit-identity regression test;
    runtime always loads the committed files instead.
    """
    n = image_side * image_side
    w_gen = W_GEN_SCALE * unit_stream(fnv1a64(_SEED_LABELS["w_gen"].encode()), n * d).reshape(n, d)
    w_img = unit_stream(fnv1a64(_SEED_LABELS["w_img"].encode()), d * n).reshape(d, n)
    v_aes = unit_stream(fnv1a64(_SEED_LABELS["v_aes"].encode()), n)
    v_aes = v_aes - v_aes.mean()  # zero-sum: neutral images score near 5/10
    return ToyParams(d=d, image_side=image_side, w_gen=w_gen, w_img=w_img, v_aes=v_aes)


def fixture_dir() -> Path:
    return Path(str(resources.files("peo.backbones").joinpath("fixtures", FIXTURE_VERSION)))


def manifest_dict(params: ToyParams) -> dict:
    """The manifest content for a parameter set, checksums included."""

    def entry(name: str, arr: np.ndarray) -> dict:
        raw = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        return {
            "file": f"{name}.f64",
            "shape": list(arr.shape),
            "seed_label": _SEED_LABELS[name],
            "sha256": hashlib.sha256(raw).hexdigest(),
        }

    return {
        "version": FIXTURE_VERSION,
        "dtype": "<f8",
        "layout": "C-order (row-major), little-endian float64",
        "dimensions": {"d": params.d, "image_side": params.image_side},
        "recurrence": {
            "seed": "fnv1a64(seed_label bytes)",
            "fnv_offset": hex(FNV_OFFSET),
            "fnv_prime": hex(FNV_PRIME),
            "splitmix_gamma": hex(SPLITMIX_GAMMA),
            "mix_mult_1": hex(MIX_MULT_1),
            "mix_mult_2": hex(MIX_MULT_2),
            "mix_shifts": list(MIX_SHIFTS),
            "to_double": "u = (mix64(state) >> 11) * 2^-53; value = 2u - 1",
            "w_gen_scale": W_GEN_SCALE,
            "v_aes_post": "subtract arithmetic mean",
        },
        "text_encoder": {
            "salt_format": "<encoder_id>|<prompt utf-8 bytes>",
            "encoder_ids": ["toy-a", "toy-b"],
            "normalize": "unit L2 norm",
            "unconditional": "empty prompt bytes through the same recurrence",
        },
        "matrices": {
            "w_gen": entry("w_gen", params.w_gen),
            "w_img": entry("w_img", params.w_img),
            "v_aes": entry("v_aes", params.v_aes),
        },
    }


def write_fixtures(params: ToyParams, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, arr in (("w_gen", params.w_gen), ("w_img", params.w_img), ("v_aes", params.v_aes)):
        (out_dir / f"{name}.f64").write_bytes(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    manifest = manifest_dict(params)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_params(directory: Path | None = None) -> ToyParams:
    """Load and checksum-verify the committed fixture matrices."""
    directory = directory or fixture_dir()
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise InputError(f"toy fixture manifest missing: {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    dims = manifest["dimensions"]
    arrays = {}
    for name, meta in manifest["matrices"].items():
        raw = (directory / meta["file"]).read_bytes()
        digest = hashlib.sha256(raw).hexdigest()
        if digest != meta["sha256"]:
            raise InputError(
                f"toy fixture {meta['file']} checksum mismatch: {digest} != {meta['sha256']}"
            )
        arrays[name] = np.frombuffer(raw, dtype="<f8").reshape(meta["shape"]).astype(np.float64)
    return ToyParams(
        d=int(dims["d"]),
        image_side=int(dims["image_side"]),
        w_gen=arrays["w_gen"],
        w_img=arrays["w_img"],
        v_aes=arrays["v_aes"],
    )


def text_encode_bytes(data: bytes, d: int, encoder_id: str) -> np.ndarray:
    """The documented byte-folding recurrence behind the toy text encoder."""
    seed = fnv1a64(encoder_id.encode("utf-8") + b"|" + data)
    vec = unit_stream(seed, d)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise DomainError("toy text encoder produced a zero vector")
    return vec / norm


def finite_difference_gradient(
    fn: Callable[[np.ndarray], float], theta: np.ndarray, h: float = 1e-4
) -> np.ndarray:
    """Central-difference gradient of a scalar function of a vector."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.empty_like(theta)
    for i in range(theta.shape[0]):
        up = theta.copy()
        down = theta.copy()
        up[i] += h
        down[i] -= h
        f_up = float(fn(up))
        f_down = float(fn(down))
        if not (np.isfinite(f_up) and np.isfinite(f_down)):
            raise DomainError(f"non-finite function value while probing coordinate {i}")
        grad[i] = (f_up - f_down) / (2.0 * h)
    return grad


def finite_difference_embedding_gradient(
    fn: Callable[[PromptEmbedding], float], theta: PromptEmbedding, h: float = 1e-4
) -> list[np.ndarray]:
    """Central differences over every coordinate of every encoder vector."""
    grads = []
    for k in range(theta.encoder_count):
        def slice_fn(vec: np.ndarray, k: int = k) -> float:
            vectors = [v.copy() for v in theta.vectors]
            vectors[k] = vec
            return fn(theta.replace_vectors(vectors))

        grads.append(finite_difference_gradient(slice_fn, theta.vectors[k], h=h))
    return grads


class ToyBackbone(DifferentiableBackbone):
    """Single-encoder toy backbone over the committed fixture matrices."""

    backbone_id = "toy"
    encoder_count = 1
    concurrent_safe = True

    def __init__(self, params: ToyParams | None = None):
        self.params = params or load_params()
        self.default_settings = PRESETS["toy"]
        self._encoder_ids = ("toy-a",)
        self._gen_mats = (self.params.w_gen,)
        self._img_mats = (self.params.w_img,)
        self._uncond = PromptEmbedding(
            tuple(
                text_encode_bytes(b"", self.params.d, eid) for eid in self._encoder_ids
            ),
            self._encoder_ids,
        )

    def unconditional_embedding(self) -> PromptEmbedding:
        return self._uncond

    def text_encode(self, prompt: str) -> PromptEmbedding:
        if not prompt:
            raise InputError("prompt must be non-empty")
        data = prompt.encode("utf-8")
        return PromptEmbedding(
            tuple(text_encode_bytes(data, self.params.d, eid) for eid in self._encoder_ids),
            self._encoder_ids,
        )

    def _check_theta(self, theta: PromptEmbedding) -> None:
        if theta.encoder_count != self.encoder_count:
            raise ContractError(
                f"{self.backbone_id} expects {self.encoder_count} vectors, got {theta.encoder_count}"
            )
        for i, v in enumerate(theta.vectors):
            if v.shape[0] != self.params.d:
                raise ContractError(
                    f"vector {i} has dimension {v.shape[0]}, expected {self.params.d}"
                )

    def _check_canvas(self, settings: GenerationSettings) -> None:
        side = self.params.image_side
        if settings.height != side or settings.width != side:
            raise ContractError(
                f"{self.backbone_id} renders {side}x{side} images, "
                f"settings ask for {settings.height}x{settings.width}"
            )

    def _logits(self, theta: PromptEmbedding) -> np.ndarray:
        # Mean over encoders keeps the conditional signal scale encoder-count free.
        z = np.zeros(self.params.image_side**2, dtype=np.float64)
        for w, v in zip(self._gen_mats, theta.vectors):
            z += w @ v
        return z / len(self._gen_mats)

    def _guided_logits(self, theta: PromptEmbedding, settings: GenerationSettings) -> np.ndarray:
        z_cond = self._logits(theta)
        s = settings.guidance_scale
        if s == 0.0:
            return z_cond
        z_uncond = self._logits(self._uncond)
        return z_uncond + s * (z_cond - z_uncond)

    def generate(self, theta: PromptEmbedding, settings: GenerationSettings) -> GeneratedImage:
        self._check_theta(theta)
        self._check_canvas(settings)
        z = self._guided_logits(theta, settings)
        pixels = sigmoid(z).reshape(self.params.image_side, self.params.image_side, 1)
        # The logistic map is step-invariant, so one application realizes any
        # step count; the eval counter still reflects the sampler's schedule.
        evals = settings.sampling_steps * (2 if settings.guidance_scale > 0.0 else 1)
        prov = Provenance(
            backbone_id=self.backbone_id, settings=settings.to_dict(), denoise_evals=evals
        )
        return GeneratedImage(pixels=pixels, provenance=prov)

    def generate_vjp(
        self,
        theta: PromptEmbedding,
        settings: GenerationSettings,
        pixel_cotangent: np.ndarray,
    ) -> list[np.ndarray]:
        self._check_theta(theta)
        self._check_canvas(settings)
        z = self._guided_logits(theta, settings)
        p = sigmoid(z)
        g_z = np.asarray(pixel_cotangent, dtype=np.float64).reshape(-1) * p * (1.0 - p)
        scale = settings.guidance_scale if settings.guidance_scale > 0.0 else 1.0
        scale /= len(self._gen_mats)
        return [scale * (w.T @ g_z) for w in self._gen_mats]

    def image_encode(self, image: GeneratedImage) -> ImageFeatures:
        x = self._flat_pixels(image)
        feats = []
        for w in self._img_mats:
            u = w @ x
            norm = float(np.linalg.norm(u))
            if norm == 0.0:
                raise DomainError("toy image encoder produced a zero feature vector")
            feats.append(u / norm)
        return ImageFeatures(tuple(feats), self._encoder_ids)

    def image_encode_vjp(
        self, image: GeneratedImage, feature_cotangents: Sequence[np.ndarray]
    ) -> np.ndarray:
        x = self._flat_pixels(image)
        if len(feature_cotangents) != len(self._img_mats):
            raise ContractError(
                f"{len(feature_cotangents)} cotangents for {len(self._img_mats)} encoders"
            )
        g_x = np.zeros_like(x)
        for w, g_f in zip(self._img_mats, feature_cotangents):
            u = w @ x
            norm = float(np.linalg.norm(u))
            if norm == 0.0:
                raise DomainError("toy image encoder produced a zero feature vector")
            f = u / norm
            g_f = np.asarray(g_f, dtype=np.float64)
            g_u = (g_f - float(np.dot(f, g_f)) * f) / norm
            g_x += w.T @ g_u
        return g_x.reshape(image.pixels.shape)

    def aesthetic_score(self, image: GeneratedImage) -> float:
        x = self._flat_pixels(image)
        return float(10.0 * sigmoid(np.array([float(np.dot(self.params.v_aes, x))]))[0])

    def aesthetic_pixel_grad(self, image: GeneratedImage) -> np.ndarray:
        x = self._flat_pixels(image)
        t = float(np.dot(self.params.v_aes, x))
        s = float(sigmoid(np.array([t]))[0])
        return (10.0 * s * (1.0 - s) * self.params.v_aes).reshape(image.pixels.shape)

    def _flat_pixels(self, image: GeneratedImage) -> np.ndarray:
        side = self.params.image_side
        if image.pixels.shape != (side, side, 1):
            raise ContractError(
                f"expected {side}x{side}x1 image, got {image.pixels.shape}"
            )
        return image.pixels.reshape(-1)


class DualToyBackbone(ToyBackbone):
    """Two-encoder variant mirroring dual-text-encoder backbones.

    The second encoder reuses the committed matrices with a fixed column/row
    roll, so no extra fixture files are needed and both encoders stay
    bit-deterministic.
    """

    backbone_id = "toy2"
    encoder_count = 2

    def __init__(self, params: ToyParams | None = None):
        super().__init__(params)
        p = self.params
        self._encoder_ids = ("toy-a", "toy-b")
        self._gen_mats = (p.w_gen, np.roll(p.w_gen, p.d // 2, axis=1))
        self._img_mats = (p.w_img, np.roll(p.w_img, p.d // 2, axis=0))
        self._uncond = PromptEmbedding(
            tuple(text_encode_bytes(b"", p.d, eid) for eid in self._encoder_ids),
            self._encoder_ids,
        )
