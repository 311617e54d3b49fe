"""Toy backbone: fixture integrity, golden values, and differentiability."""

import json

import numpy as np
import pytest

from peo.backbones.base import GenerationSettings
from peo.backbones.toy import (
    build_params,
    finite_difference_gradient,
    fixture_dir,
    load_params,
    manifest_dict,
    text_encode_bytes,
)
from peo.errors import ContractError, DomainError, InputError
from peo.objective import cosine_similarity
from peo.types import PromptEmbedding


class TestFixtures:
    def test_loaded_params_match_recurrence(self, toy):
        rebuilt = build_params()
        loaded = toy.params
        assert np.array_equal(rebuilt.w_gen, loaded.w_gen)
        assert np.array_equal(rebuilt.w_img, loaded.w_img)
        assert np.array_equal(rebuilt.v_aes, loaded.v_aes)

    def test_manifest_checksums_match_files(self):
        manifest = json.loads((fixture_dir() / "manifest.json").read_text())
        rebuilt = manifest_dict(build_params())
        for name in ("w_gen", "w_img", "v_aes"):
            assert manifest["matrices"][name]["sha256"] == rebuilt["matrices"][name]["sha256"]

    def test_checksum_tampering_detected(self, tmp_path):
        import shutil

        for file in fixture_dir().iterdir():
            shutil.copy(file, tmp_path / file.name)
        blob = bytearray((tmp_path / "v_aes.f64").read_bytes())
        blob[0] ^= 0xFF
        (tmp_path / "v_aes.f64").write_bytes(bytes(blob))
        with pytest.raises(InputError, match="checksum mismatch"):
            load_params(tmp_path)

    def test_matrices_finite(self, toy):
        for arr in (toy.params.w_gen, toy.params.w_img, toy.params.v_aes):
            assert np.all(np.isfinite(arr))


class TestTextEncode:
    def test_deterministic(self, toy):
        a = toy.text_encode("a cat")
        b = toy.text_encode("a cat")
        assert a.checksum() == b.checksum()

    def test_empty_prompt_rejected(self, toy):
        with pytest.raises(InputError):
            toy.text_encode("")

    def test_golden_vector(self, toy, golden):
        vec = toy.text_encode("a cat").vectors[0]
        assert vec.tolist() == golden("toy_golden")["cat"]["vector"]

    def test_unit_norm(self, toy):
        for prompt in ("a cat", "zebra", "Ω unicode prompt"):
            assert np.linalg.norm(toy.text_encode(prompt).vectors[0]) == pytest.approx(1.0, abs=1e-12)

    def test_recurrence_is_salted_per_encoder(self, toy):
        a = text_encode_bytes(b"a cat", 16, "toy-a")
        b = text_encode_bytes(b"a cat", 16, "toy-b")
        assert not np.array_equal(a, b)


class TestGenerate:
    def test_zero_embedding_gives_uniform_gray(self, toy):
        # logistic(0) = 0.5 everywhere; the zero vector is constructible even
        # though cosine-based terms reject it downstream.
        theta = PromptEmbedding((np.zeros(16),), ("toy-a",))
        settings = GenerationSettings(sampler_name="toy-logistic", guidance_scale=0.0)
        image = toy.generate(theta, settings)
        assert np.all(image.pixels == 0.5)

    def test_golden_image(self, toy, golden):
        image = toy.generate(toy.text_encode("a cat"), toy.default_settings)
        assert image.pixels.reshape(-1).tolist() == golden("toy_golden")["cat"]["image_pixels"]

    def test_jacobian_probe(self, toy):
        theta = toy.text_encode("a cat")
        settings = toy.default_settings
        h = 1e-4
        analytic = np.column_stack(
            [
                toy.generate_vjp(theta, settings, np.eye(64)[i].reshape(8, 8, 1))[0]
                for i in range(64)
            ]
        ).T  # (64, 16): d pixel_i / d theta_j
        for j in range(16):
            up = theta.vectors[0].copy()
            dn = theta.vectors[0].copy()
            up[j] += h
            dn[j] -= h
            fd = (
                toy.generate(theta.replace_vectors([up]), settings).pixels
                - toy.generate(theta.replace_vectors([dn]), settings).pixels
            ).reshape(-1) / (2 * h)
            np.testing.assert_allclose(analytic[:, j], fd, rtol=1e-5, atol=1e-7)

    def test_dimension_mismatch(self, toy):
        with pytest.raises(ContractError):
            toy.generate(PromptEmbedding((np.ones(5),), ("toy-a",)), toy.default_settings)

    def test_canvas_mismatch(self, toy):
        settings = GenerationSettings(height=16, width=16)
        with pytest.raises(ContractError):
            toy.generate(toy.text_encode("a cat"), settings)

    def test_single_denoise_eval_without_guidance(self, toy):
        settings = GenerationSettings(
            sampler_name="toy-logistic", sampling_steps=1, guidance_scale=0.0
        )
        image = toy.generate(toy.text_encode("a cat"), settings)
        assert image.provenance.denoise_evals == 1

    def test_guided_generation_counts_both_branches(self, toy):
        image = toy.generate(toy.text_encode("a cat"), toy.default_settings)
        assert image.provenance.denoise_evals == 2  # cond + uncond, one step


class TestImageEncode:
    def test_unit_norm(self, toy):
        image = toy.generate(toy.text_encode("a cat"), toy.default_settings)
        feats = toy.image_encode(image)
        assert np.linalg.norm(feats.vectors[0]) == pytest.approx(1.0, abs=1e-12)

    def test_golden_features(self, toy, golden):
        image = toy.generate(toy.text_encode("a cat"), toy.default_settings)
        feats = toy.image_encode(image)
        assert feats.vectors[0].tolist() == golden("toy_golden")["cat"]["features"]

    def test_distinct_images_distinct_features(self, toy, golden):
        g = golden("toy_golden")
        cat = toy.image_encode(toy.generate(toy.text_encode("a cat"), toy.default_settings))
        dog = toy.image_encode(
            toy.generate(toy.text_encode("a dog on a beach"), toy.default_settings)
        )
        cos = cosine_similarity(cat.vectors[0], dog.vectors[0])
        assert cos == pytest.approx(g["cat_dog_feature_cos"], abs=1e-12)
        assert cos != 1.0


class TestAesthetic:
    def test_neutral_image_scores_five(self, toy):
        # v_aes is zero-sum, so the uniform gray image has v . x = 0 exactly.
        theta = PromptEmbedding((np.zeros(16),), ("toy-a",))
        settings = GenerationSettings(sampler_name="toy-logistic", guidance_scale=0.0)
        image = toy.generate(theta, settings)
        assert np.dot(toy.params.v_aes, image.pixels.reshape(-1)) == pytest.approx(0.0, abs=1e-12)
        assert toy.aesthetic_score(image) == pytest.approx(5.0, abs=1e-9)

    def test_bounded_and_monotone_along_v(self, toy):
        from peo.types import GeneratedImage, Provenance

        v = toy.params.v_aes
        prov = Provenance(backbone_id="toy", settings={})

        def score(step):
            x = np.clip(0.5 + step * np.sign(v), 0, 1).reshape(8, 8, 1)
            return toy.aesthetic_score(GeneratedImage(x, prov))

        scores = [score(s) for s in (0.0, 0.1, 0.25, 0.5)]
        assert scores == sorted(scores)  # monotone along v
        assert all(0.0 < s < 10.0 for s in scores)  # bounded, asymptote never reached
        assert scores[-1] > 9.9  # saturating toward 10 at the largest admissible input
        assert score(-0.5) < 0.1

    def test_golden_raw_score(self, toy, golden):
        image = toy.generate(toy.text_encode("a cat"), toy.default_settings)
        assert toy.aesthetic_score(image) == golden("toy_golden")["cat"]["raw_aesthetic"]


class TestFiniteDifference:
    def test_linear_function_exact(self):
        c = np.array([2.0, -3.0, 0.5])
        grad = finite_difference_gradient(lambda x: float(np.dot(x, c)), np.zeros(3))
        assert np.allclose(grad, c, atol=1e-9)

    def test_quadratic_norm(self):
        grad = finite_difference_gradient(
            lambda x: float(np.dot(x, x)), np.array([1.0, 2.0])
        )
        assert grad == pytest.approx([2.0, 4.0], abs=1e-6)

    def test_non_finite_function_rejected(self):
        with pytest.raises(DomainError):
            finite_difference_gradient(lambda x: float("nan"), np.zeros(2))


class TestSmoothness:
    def test_objective_gradients_finite_everywhere(self, toy):
        from peo.optimizer import objective_gradient, objective_value
        from peo.types import ObjectiveWeights

        rng = np.random.default_rng(99)
        settings = toy.default_settings
        weights = ObjectiveWeights()
        theta_init = toy.text_encode("reference prompt")
        for _ in range(1000):
            vec = rng.normal(size=16) * 10.0 ** rng.integers(-2, 3)
            if np.linalg.norm(vec) == 0.0:
                continue
            theta = PromptEmbedding((vec,), ("toy-a",))
            bd, img, feats, raw = objective_value(toy, theta, theta_init, weights, settings)
            grads = objective_gradient(
                toy, theta, theta_init, weights, settings, img, feats, raw
            )
            assert np.isfinite(bd.total)
            assert all(np.all(np.isfinite(g)) for g in grads)
