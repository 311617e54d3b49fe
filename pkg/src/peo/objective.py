"""The tripartite objective: aesthetic quality, image-text adherence, prompt preservation.

All three terms reduce to two primitives: a 0-10 -> 0-1 rescale of the raw
aesthetic score and plain cosine similarity.  Multi-encoder backbones
average the cosine terms over encoder pairs, which keeps every term inside
[-1, 1] regardless of encoder count.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, DomainError
from .types import ImageFeatures, ObjectiveBreakdown, ObjectiveWeights, PromptEmbedding


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two nonzero vectors, clamped into [-1, 1].

    Identical inputs short-circuit to exactly 1.0 so that the
    self-similarity identity holds bit-for-bit.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("first argument contains non-finite values")
    if not np.all(np.isfinite(b)):
        raise DomainError("second argument contains non-finite values")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0:
        raise DomainError("first argument has zero norm")
    if nb == 0.0:
        raise DomainError("second argument has zero norm")
    if a is b or np.array_equal(a, b):
        return 1.0
    c = float(np.dot(a, b)) / (na * nb)
    return float(min(1.0, max(-1.0, c)))


def cosine_grad_wrt_second(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """d cos(a, b) / d b.

    At b == a (bitwise) the true gradient is the zero vector and is
    returned exactly, so downstream adaptive optimizers do not amplify
    rounding residue into full-size steps.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise DomainError("cosine gradient undefined for zero-norm input")
    if a is b or np.array_equal(a, b):
        return np.zeros_like(b)
    c = float(np.dot(a, b)) / (na * nb)
    return a / (na * nb) - c * b / (nb * nb)


def normalize_aesthetic(raw: float) -> float:
    """Map a raw 0-10 aesthetic score onto [0, 1].

    Scorer outputs slightly outside [0, 10] are clamped after the division;
    in-range values pass through the plain linear map untouched.
    """
    raw = float(raw)
    if not np.isfinite(raw):
        raise DomainError(f"aesthetic score must be finite, got {raw!r}")
    return float(min(1.0, max(0.0, raw / 10.0)))


def aesthetic_gate(raw: float) -> float:
    """d normalize_aesthetic / d raw: 1/10 in range, 0 where the clamp is active."""
    raw = float(raw)
    if not np.isfinite(raw):
        raise DomainError(f"aesthetic score must be finite, got {raw!r}")
    return 0.1 if 0.0 <= raw <= 10.0 else 0.0


def _paired(f: ImageFeatures, theta: PromptEmbedding, what: str):
    if f.encoder_count != theta.encoder_count:
        raise ContractError(
            f"{what}: {f.encoder_count} feature vectors vs {theta.encoder_count} embedding vectors"
        )
    return zip(f.vectors, theta.vectors)


def adherence_term(f: ImageFeatures, theta: PromptEmbedding) -> float:
    """Mean cosine between generated-image features and the embedding, per encoder."""
    cosines = [cosine_similarity(fv, tv) for fv, tv in _paired(f, theta, "adherence")]
    return float(np.mean(cosines))


def preservation_term(theta_init: PromptEmbedding, theta: PromptEmbedding) -> float:
    """Mean cosine between the initial embedding and the embedding under optimization."""
    if theta_init.encoder_count != theta.encoder_count or theta_init.dims() != theta.dims():
        raise ContractError("preservation: embedding structures differ")
    cosines = [
        cosine_similarity(a, b) for a, b in zip(theta_init.vectors, theta.vectors)
    ]
    return float(np.mean(cosines))


def evaluate_objective(
    s_raw: float,
    f: ImageFeatures,
    theta: PromptEmbedding,
    theta_init: PromptEmbedding,
    w: ObjectiveWeights,
) -> ObjectiveBreakdown:
    """Combine the three terms into the weighted total."""
    l1 = normalize_aesthetic(s_raw)
    l2 = adherence_term(f, theta)
    l_ppt = preservation_term(theta_init, theta)
    total = w.w1 * l1 + w.w2 * l2 + w.w3 * l_ppt
    return ObjectiveBreakdown(l1=l1, l2=l2, l_ppt=l_ppt, total=float(total))
