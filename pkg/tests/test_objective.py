"""Objective math: cosine primitive, normalization, terms, weighted total."""

import math

import numpy as np
import pytest

from peo.errors import ContractError, DomainError
from peo.objective import (
    adherence_term,
    cosine_grad_wrt_second,
    cosine_similarity,
    evaluate_objective,
    normalize_aesthetic,
    preservation_term,
)
from peo.types import ImageFeatures, ObjectiveWeights, PromptEmbedding


def emb(*vectors):
    return PromptEmbedding(tuple(np.asarray(v, dtype=float) for v in vectors),
                           tuple(f"e{i}" for i in range(len(vectors))))


def feats(*vectors):
    return ImageFeatures(tuple(np.asarray(v, dtype=float) for v in vectors),
                         tuple(f"e{i}" for i in range(len(vectors))))


class TestCosine:
    def test_identical_unit_vectors(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0

    def test_orthogonal(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_hand_value(self):
        # 24 / 25
        assert cosine_similarity(np.array([3.0, 4.0]), np.array([4.0, 3.0])) == pytest.approx(0.96, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ContractError):
            cosine_similarity(np.array([1.0, 0.0]), np.array([1.0, 0.0, 0.0]))

    def test_zero_norm_names_argument(self):
        with pytest.raises(DomainError, match="first argument"):
            cosine_similarity(np.zeros(3), np.ones(3))
        with pytest.raises(DomainError, match="second argument"):
            cosine_similarity(np.ones(3), np.zeros(3))

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            cosine_similarity(np.array([np.nan, 1.0]), np.ones(2))

    def test_range_symmetry_scale_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(2000):
            d = int(rng.integers(2, 12))
            a = rng.normal(size=d) * 10.0 ** rng.integers(-3, 4)
            b = rng.normal(size=d) * 10.0 ** rng.integers(-3, 4)
            if np.linalg.norm(a) == 0 or np.linalg.norm(b) == 0:
                continue
            c = cosine_similarity(a, b)
            assert -1.0 <= c <= 1.0
            assert cosine_similarity(b, a) == pytest.approx(c, abs=1e-12)
            assert cosine_similarity(3.7 * a, b) == pytest.approx(c, abs=1e-9)

    def test_parallel_and_antiparallel(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            a = rng.normal(size=8)
            scale = float(rng.uniform(0.1, 50.0))
            assert cosine_similarity(a, scale * a) == pytest.approx(1.0, abs=1e-12)
            assert cosine_similarity(a, -scale * a) == pytest.approx(-1.0, abs=1e-12)

    def test_gradient_zero_at_identical(self):
        a = np.array([0.3, -1.2, 0.7])
        g = cosine_grad_wrt_second(a, a.copy())
        assert np.all(g == 0.0)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        h = 1e-6
        for _ in range(50):
            a, b = rng.normal(size=5), rng.normal(size=5)
            g = cosine_grad_wrt_second(a, b)
            for i in range(5):
                up, dn = b.copy(), b.copy()
                up[i] += h
                dn[i] -= h
                fd = (cosine_similarity(a, up) - cosine_similarity(a, dn)) / (2 * h)
                assert g[i] == pytest.approx(fd, abs=1e-6)


class TestNormalizeAesthetic:
    @pytest.mark.parametrize("raw,expected", [(5.8, 0.58), (0.0, 0.0), (10.0, 1.0)])
    def test_linear_map(self, raw, expected):
        assert normalize_aesthetic(raw) == pytest.approx(expected, abs=1e-15)

    def test_clamps_out_of_range(self):
        assert normalize_aesthetic(10.4) == 1.0
        assert normalize_aesthetic(-0.2) == 0.0

    def test_nan_rejected(self):
        with pytest.raises(DomainError):
            normalize_aesthetic(float("nan"))


class TestTerms:
    def test_adherence_identical(self):
        v = np.array([0.2, 0.5, -0.1])
        assert adherence_term(feats(v), emb(v)) == 1.0

    def test_adherence_orthogonal(self):
        assert adherence_term(feats([1.0, 0.0]), emb([0.0, 1.0])) == 0.0

    def test_adherence_two_encoder_mean(self):
        f = feats([1.0, 0.0], [1.0, 0.0])
        t = emb([0.2, math.sqrt(1 - 0.04)], [0.4, math.sqrt(1 - 0.16)])
        assert adherence_term(f, t) == pytest.approx(0.3, abs=1e-12)

    def test_adherence_structure_mismatch(self):
        with pytest.raises(ContractError):
            adherence_term(feats([1.0, 0.0]), emb([1.0, 0.0], [0.0, 1.0]))

    def test_preservation_identity_exact(self):
        t = emb([0.1, 0.2, 0.3])
        assert preservation_term(t, t) == 1.0

    def test_preservation_negation(self):
        t = emb([0.1, -0.2, 0.3])
        t_neg = emb([-0.1, 0.2, -0.3])
        assert preservation_term(t, t_neg) == pytest.approx(-1.0, abs=1e-12)

    def test_preservation_scale_invariance(self):
        t = emb([0.4, 0.3])
        t2 = emb([0.8, 0.6])
        assert preservation_term(t, t2) == pytest.approx(1.0, abs=1e-12)


class TestEvaluateObjective:
    def _inputs(self, l2_target: float):
        theta = emb([1.0, 0.0])
        f = feats([l2_target, math.sqrt(1 - l2_target**2)])
        return f, theta

    def test_weighted_sum(self):
        f, theta = self._inputs(0.28)
        bd = evaluate_objective(6.0, f, theta, theta, ObjectiveWeights(1.0, 0.5, 0.5))
        assert bd.l1 == pytest.approx(0.6, abs=1e-12)
        assert bd.l2 == pytest.approx(0.28, abs=1e-12)
        assert bd.l_ppt == 1.0
        assert bd.total == pytest.approx(1.24, abs=1e-12)

    def test_zero_weights(self):
        f, theta = self._inputs(0.5)
        bd = evaluate_objective(9.9, f, theta, theta, ObjectiveWeights(0.0, 0.0, 0.0))
        assert bd.total == 0.0

    def test_all_ones(self):
        f, theta = self._inputs(0.28)
        theta_init = emb([math.sqrt(1 - 0.81), 0.9])  # cosine 0.435889894354...
        bd = evaluate_objective(5.8, f, theta, theta_init, ObjectiveWeights(1.0, 1.0, 1.0))
        assert bd.total == pytest.approx(bd.l1 + bd.l2 + bd.l_ppt, abs=1e-12)
        assert bd.l1 == pytest.approx(0.58, abs=1e-12)

    def test_linearity_in_each_weight(self):
        rng = np.random.default_rng(21)
        for _ in range(300):
            theta = emb(rng.normal(size=6))
            theta_init = emb(rng.normal(size=6))
            f = feats(rng.normal(size=6))
            raw = float(rng.uniform(0, 10))
            w = ObjectiveWeights(*rng.uniform(0.0, 2.0, size=3))
            bd = evaluate_objective(raw, f, theta, theta_init, w)
            doubled = ObjectiveWeights(w.w1, w.w2, 2.0 * w.w3)
            bd2 = evaluate_objective(raw, f, theta, theta_init, doubled)
            assert bd2.total - bd.total == pytest.approx(w.w3 * bd.l_ppt, abs=1e-9)
            # breakdown invariant: total always recomputes from its parts
            assert bd.total == pytest.approx(
                w.w1 * bd.l1 + w.w2 * bd.l2 + w.w3 * bd.l_ppt, abs=1e-12
            )

    def test_negative_weight_rejected(self):
        with pytest.raises(DomainError, match="w1"):
            ObjectiveWeights(-1.0, 0.0, 0.0)
