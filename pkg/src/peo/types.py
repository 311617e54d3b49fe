"""Core value types shared across the package.

Embeddings and image features are tuples of float64 vectors, one per text
encoder of the backbone that produced them (single-encoder backbones use
one-element tuples).  Arrays are frozen (non-writeable) on construction so
instances can be shared between optimization steps without defensive copies.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError, DomainError


def _as_frozen_f64(vec, what: str) -> np.ndarray:
    arr = np.array(vec, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ContractError(f"{what} must be a 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{what} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PromptEmbedding:
    """Text embedding under optimization: one vector per text encoder.

    Finiteness is enforced on construction.  Nonzero norm is a requirement
    of the cosine-based objective terms and is checked where those are
    evaluated (and at optimization entry), not here: the generator itself
    is well defined for zero vectors.
    """

    vectors: tuple[np.ndarray, ...]
    encoder_ids: tuple[str, ...]

    def __post_init__(self):
        vecs = tuple(_as_frozen_f64(v, f"embedding vector {i}") for i, v in enumerate(self.vectors))
        ids = tuple(str(e) for e in self.encoder_ids)
        if len(vecs) < 1:
            raise ContractError("embedding needs at least one vector")
        if len(ids) != len(vecs):
            raise ContractError(
                f"{len(vecs)} vectors but {len(ids)} encoder ids"
            )
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "encoder_ids", ids)

    @property
    def encoder_count(self) -> int:
        return len(self.vectors)

    def dims(self) -> tuple[int, ...]:
        return tuple(v.shape[0] for v in self.vectors)

    def require_nonzero(self, what: str = "embedding") -> None:
        for i, v in enumerate(self.vectors):
            if float(np.linalg.norm(v)) == 0.0:
                raise DomainError(f"{what} vector {i} has zero norm")

    def same_structure(self, other: "PromptEmbedding") -> bool:
        return self.encoder_ids == other.encoder_ids and self.dims() == other.dims()

    def diff_norm(self, other: "PromptEmbedding") -> float:
        """L2 norm of the element-wise difference over all encoder vectors."""
        if not self.same_structure(other):
            raise ContractError("embedding structures differ")
        sq = 0.0
        for a, b in zip(self.vectors, other.vectors):
            d = a - b
            sq += float(np.dot(d, d))
        return float(np.sqrt(sq))

    def checksum(self) -> str:
        """SHA-256 over encoder ids and the raw little-endian float64 bytes."""
        h = hashlib.sha256()
        for eid, v in zip(self.encoder_ids, self.vectors):
            h.update(eid.encode("utf-8"))
            h.update(b"\x00")
            h.update(np.ascontiguousarray(v, dtype="<f8").tobytes())
        return h.hexdigest()

    def replace_vectors(self, vectors: Sequence[np.ndarray]) -> "PromptEmbedding":
        return PromptEmbedding(tuple(vectors), self.encoder_ids)


@dataclass(frozen=True)
class ImageFeatures:
    """Image features in the shared text/image space, one vector per encoder."""

    vectors: tuple[np.ndarray, ...]
    encoder_ids: tuple[str, ...]

    def __post_init__(self):
        vecs = tuple(_as_frozen_f64(v, f"feature vector {i}") for i, v in enumerate(self.vectors))
        ids = tuple(str(e) for e in self.encoder_ids)
        if len(vecs) < 1:
            raise ContractError("image features need at least one vector")
        if len(ids) != len(vecs):
            raise ContractError(f"{len(vecs)} vectors but {len(ids)} encoder ids")
        for i, v in enumerate(vecs):
            if float(np.linalg.norm(v)) == 0.0:
                raise DomainError(f"feature vector {i} has zero norm")
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "encoder_ids", ids)

    @property
    def encoder_count(self) -> int:
        return len(self.vectors)


@dataclass(frozen=True)
class Provenance:
    """Where a generated image came from, embedded in PNG sidecar files."""

    backbone_id: str
    settings: dict
    step: int | None = None
    denoise_evals: int = 0

    def to_dict(self) -> dict:
        return {
            "backbone_id": self.backbone_id,
            "settings": dict(self.settings),
            "step": self.step,
            "denoise_evals": self.denoise_evals,
        }


@dataclass(frozen=True)
class GeneratedImage:
    """H x W x C image with all values in [0, 1] after the final decode."""

    pixels: np.ndarray
    provenance: Provenance

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.float64, copy=True)
        if arr.ndim != 3:
            raise ContractError(f"image must be H x W x C, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("image contains non-finite pixels")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise DomainError("image pixels outside [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.pixels.shape  # type: ignore[return-value]


@dataclass(frozen=True)
class ObjectiveWeights:
    """Nonnegative weights for the aesthetic, adherence, and preservation terms."""

    w1: float = 1.0
    w2: float = 0.5
    w3: float = 0.5

    def __post_init__(self):
        for name in ("w1", "w2", "w3"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise DomainError(f"weight {name} must be finite, got {value!r}")
            if value < 0.0:
                raise DomainError(f"weight {name} must be >= 0, got {value}")
            object.__setattr__(self, name, value)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.w1, self.w2, self.w3)


@dataclass(frozen=True)
class ObjectiveBreakdown:
    """Per-term values and their weighted total for one evaluation."""

    l1: float
    l2: float
    l_ppt: float
    total: float

    def to_dict(self) -> dict:
        return {"l1": self.l1, "l2": self.l2, "l_ppt": self.l_ppt, "total": self.total}

    @staticmethod
    def from_dict(d: dict) -> "ObjectiveBreakdown":
        return ObjectiveBreakdown(
            l1=float(d["l1"]), l2=float(d["l2"]), l_ppt=float(d["l_ppt"]), total=float(d["total"])
        )
