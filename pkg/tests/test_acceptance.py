"""Acceptance gate: one test per criterion, at the stated tolerances.

Each criterion records a PASS line that the terminal summary prints at the
end of the session (see conftest).  Criterion 10 needs a GPU-scale
backbone and is skipped on desk hardware by design.
"""

import hashlib
import json
import time

import numpy as np
import pytest
from click.testing import CliRunner

from peo.backbones.toy import ToyBackbone, finite_difference_embedding_gradient
from peo.cli import main
from peo.objective import cosine_similarity, evaluate_objective, preservation_term
from peo.optimizer import (
    FailureMode,
    OptimizerConfig,
    TerminationReason,
    ascent_update,
    detect_failure,
    init_state,
    objective_gradient,
    objective_value,
    peo_optimize,
)
from peo.types import ImageFeatures, ObjectiveWeights, PromptEmbedding
from tests.conftest import GOLDEN_DIR, PROMPTS20

ACCEPTANCE_RESULTS: list[str] = []


def record(criterion: int, detail: str) -> None:
    ACCEPTANCE_RESULTS.append(f"criterion {criterion:2d}: PASS  {detail}")


def prompts20():
    return [
        line.strip()
        for line in PROMPTS20.read_text().splitlines()
        if line.strip() and not line.startswith("#")
    ]


@pytest.fixture(scope="module")
def uncond_checksum_at_start(toy):
    return toy.unconditional_checksum()


def test_criterion_01_gradient_oracle(toy):
    start = time.perf_counter()
    rng = np.random.default_rng(20240501)
    weights = ObjectiveWeights()
    settings = toy.default_settings
    worst = 0.0
    for _ in range(50):
        vec = rng.normal(size=16)
        vec *= rng.uniform(0.5, 2.0) / np.linalg.norm(vec)
        theta = PromptEmbedding((vec,), ("toy-a",))
        theta_init = toy.text_encode("gradient oracle prompt")
        bd, img, feats, raw = objective_value(toy, theta, theta_init, weights, settings)
        analytic = objective_gradient(
            toy, theta, theta_init, weights, settings, img, feats, raw
        )[0]
        fd = finite_difference_embedding_gradient(
            lambda th: objective_value(toy, th, theta_init, weights, settings)[0].total,
            theta,
            h=1e-4,
        )[0]
        err = np.abs(analytic - fd)
        rel = np.where(np.abs(fd) > 1e-6, err / np.abs(fd), err / 1e-6)
        worst = max(worst, float(rel.max()))
        assert rel.max() < 1e-3
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    record(1, f"50 draws, worst per-coordinate rel err {worst:.2e}, {elapsed:.2f}s")


def test_criterion_02_cosine_objective_identities():
    start = time.perf_counter()
    rng = np.random.default_rng(20240502)
    for _ in range(10_000):
        d = int(rng.integers(2, 10))
        a = rng.normal(size=d) * 10.0 ** rng.integers(-2, 3)
        b = rng.normal(size=d) * 10.0 ** rng.integers(-2, 3)
        if np.linalg.norm(a) == 0.0 or np.linalg.norm(b) == 0.0:
            continue
        c = cosine_similarity(a, b)
        assert -1.0 <= c <= 1.0
        scale = float(rng.uniform(0.1, 10.0))
        assert abs(cosine_similarity(a, scale * a) - 1.0) <= 1e-12
        assert abs(cosine_similarity(a, -scale * a) + 1.0) <= 1e-12

    rng2 = np.random.default_rng(20240503)
    for _ in range(500):
        theta = PromptEmbedding((rng2.normal(size=6),), ("e0",))
        theta_init = PromptEmbedding((rng2.normal(size=6),), ("e0",))
        f = ImageFeatures((rng2.normal(size=6),), ("e0",))
        raw = float(rng2.uniform(0, 10))
        w = ObjectiveWeights(*rng2.uniform(0.0, 2.0, size=3))
        bd = evaluate_objective(raw, f, theta, theta_init, w)
        assert abs(bd.total - (w.w1 * bd.l1 + w.w2 * bd.l2 + w.w3 * bd.l_ppt)) <= 1e-12
        doubled = evaluate_objective(raw, f, theta, theta_init, ObjectiveWeights(w.w1, w.w2, 2 * w.w3))
        assert abs((doubled.total - bd.total) - w.w3 * bd.l_ppt) <= 1e-9
        assert preservation_term(theta_init, theta_init) == 1.0
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    record(2, f"10,000 vector pairs + 500 objective draws, {elapsed:.2f}s")


def test_criterion_03_adam_first_step_bound():
    rng = np.random.default_rng(20240504)
    cfg = OptimizerConfig()  # defaults: adam, lr 0.01
    bound = 0.01 * (1 + 1e-6)
    for _ in range(100):
        d = int(rng.integers(1, 32))
        g = rng.normal(size=d) * 10.0 ** rng.integers(-8, 8)
        theta = PromptEmbedding((rng.normal(size=d),), ("e0",))
        out = ascent_update(init_state(theta), [g], cfg)
        delta = np.abs(out.theta.vectors[0] - theta.vectors[0])
        assert np.all(delta <= bound)
    record(3, "100 random gradients, |step| <= 0.01*(1+1e-6) at t=1")


def test_criterion_04_best_so_far_and_stopping(toy):
    rng = np.random.default_rng(20240505)
    settings = toy.default_settings
    checked = 0
    for _ in range(200):
        vec = rng.normal(size=16)
        vec *= rng.uniform(0.5, 1.5) / np.linalg.norm(vec)
        theta_init = PromptEmbedding((vec,), ("toy-a",))
        weights = ObjectiveWeights(*rng.uniform(0.1, 1.5, size=3))
        cfg = OptimizerConfig(
            learning_rate=float(rng.uniform(1e-3, 5e-2)),
            max_steps=int(rng.integers(0, 11)),
        )
        star, trace = peo_optimize(theta_init, toy, weights, cfg, settings)
        recomputed = objective_value(toy, star, theta_init, weights, settings)[0].total
        assert abs(recomputed - trace.best_total) <= 1e-9
        assert trace.best_total >= trace.totals()[0]
        checked += 1
    assert checked == 200
    record(4, "200 randomized runs: recomputed theta* total == best_total (1e-9), >= step 0")


def test_criterion_05_cfg_isolation(toy, uncond_checksum_at_start):
    for prompt in prompts20()[:5]:
        peo_optimize(toy.text_encode(prompt), toy, ObjectiveWeights(), OptimizerConfig())
    now = toy.unconditional_checksum()
    assert now == uncond_checksum_at_start
    # ground truth: a freshly constructed backbone derives the same embedding
    assert now == ToyBackbone().unconditional_checksum()
    record(5, "unconditional embedding checksum constant across suite runs")


def test_criterion_06_ppt_argmax_effect(toy, golden):
    g = golden("ppt_effect")
    means = {}
    for label, w3 in (("w3_0", 0.0), ("w3_10", 10.0)):
        cosines = []
        for prompt in prompts20():
            theta0 = toy.text_encode(prompt)
            star, _ = peo_optimize(
                theta0, toy, ObjectiveWeights(1.0, 0.5, w3), OptimizerConfig()
            )
            cosines.append(cosine_similarity(star.vectors[0], theta0.vectors[0]))
        assert cosines == g[label]["per_prompt_cos"]
        means[label] = float(np.mean(cosines))
    margin = means["w3_10"] - means["w3_0"]
    assert margin > 0.0
    assert margin == pytest.approx(g["margin"], abs=1e-12)
    record(6, f"mean cos(theta*, theta_init): {means['w3_10']:.4f} (w3=10) vs {means['w3_0']:.4f} (w3=0)")


def _bundle_digests(bundle):
    out = {}
    for file in sorted(bundle.rglob("*")):
        if file.is_dir() or file.name == "metadata.json":
            continue
        out[str(file.relative_to(bundle))] = hashlib.sha256(file.read_bytes()).hexdigest()
    return out


def test_criterion_07_ablation_golden_regression(tmp_path, repo_cwd):
    runner = CliRunner()
    out = tmp_path / "ablation"
    result = runner.invoke(
        main,
        ["ablate", "--prompt-set", "tests/fixtures/prompts20.txt", "--backbone", "toy",
         "--seed", "0", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output

    committed = json.loads((GOLDEN_DIR / "ablation_checksums.json").read_text())
    assert _bundle_digests(out) == committed
    for name in ("rows.csv", "summary.json", "comparison.md", "config.json"):
        assert (out / name).read_bytes() == (GOLDEN_DIR / "ablation" / name).read_bytes()

    summary = json.loads((out / "summary.json").read_text())
    totals = {
        v["label"]: v["aggregates"]["best_total"]["mean"] for v in summary["variants"]
    }
    others = [totals[k] for k in ("L1", "L1+L2", "L1+PPT")]
    assert totals["L1+L2+PPT"] >= max(others)
    record(7, "byte-identical golden bundle; all-terms variant highest mean total")


def _rerun_byte_identical(runner, tmp_path, label, args):
    first = tmp_path / f"{label}-1"
    second = tmp_path / f"{label}-2"
    result = runner.invoke(main, args + ["--out", str(first)])
    assert result.exit_code == 0, result.output
    result = runner.invoke(
        main, [args[0], "--config", str(first / "config.json"), "--out", str(second)]
    )
    assert result.exit_code == 0, result.output
    d1, d2 = _bundle_digests(first), _bundle_digests(second)
    assert d1 == d2
    return len(d1)


def test_criterion_08_cli_determinism(tmp_path, repo_cwd):
    runner = CliRunner()
    ps = tmp_path / "five.txt"
    ps.write_text("\n".join(prompts20()[:5]) + "\n")
    counts = {}
    counts["optimize"] = _rerun_byte_identical(
        runner, tmp_path, "optimize",
        ["optimize", "--prompt", "a cat", "--backbone", "toy", "--seed", "11"],
    )
    counts["eval"] = _rerun_byte_identical(
        runner, tmp_path, "eval",
        ["eval", "--prompt-set", str(ps), "--backbone", "toy", "--seed", "11"],
    )
    counts["ablate"] = _rerun_byte_identical(
        runner, tmp_path, "ablate",
        ["ablate", "--prompt-set", str(ps), "--backbone", "toy", "--seed", "11"],
    )
    counts["sweep"] = _rerun_byte_identical(
        runner, tmp_path, "sweep",
        ["sweep", "--kind", "lr", "--values", "1e-5,1e-2,2e-1", "--prompt-set", str(ps),
         "--backbone", "toy", "--seed", "11"],
    )
    record(8, "re-run from echoed config byte-identical: " +
              ", ".join(f"{k} ({v} files)" for k, v in counts.items()))


def test_criterion_09_failure_classification(toy, golden):
    sweep = golden("lr_sweep")["variants"]
    assert sweep["lr=0.2"]["diverged_count"] > max(
        sweep["lr=1e-05"]["diverged_count"], sweep["lr=0.01"]["diverged_count"]
    )
    index = sweep["lr=0.2"]["diverged_indices"][0]
    prompt = prompts20()[index]
    theta0 = toy.text_encode(prompt)
    _, trace = peo_optimize(
        theta0, toy, ObjectiveWeights(), OptimizerConfig(learning_rate=2e-1)
    )
    assert trace.termination_reason is TerminationReason.DIVERGED
    assert detect_failure(trace) is FailureMode.DIVERGED

    ceiling = golden("toy_golden")["ceiling"]
    theta_c = PromptEmbedding((np.array(ceiling["vector"]),), ("toy-a",))
    bd0 = objective_value(toy, theta_c, theta_c, ObjectiveWeights(), toy.default_settings)[0]
    assert bd0.l1 == pytest.approx(ceiling["l1_0"], abs=1e-12)
    assert bd0.l1 > 0.65
    _, flat_trace = peo_optimize(
        theta_c, toy, ObjectiveWeights(), OptimizerConfig(learning_rate=1e-5)
    )
    l1s = [r.breakdown.l1 for r in flat_trace.records]
    assert max(l1s) - l1s[0] < 0.01
    assert detect_failure(flat_trace) is FailureMode.CEILING
    record(9, f"lr=2e-1 run on {prompt!r} DIVERGED; l1_0={bd0.l1:.3f} flat run CEILING")


@pytest.mark.skip(reason="optional GPU integration: needs a real SD-v1-5-class adapter and "
                         ">= 50 DiffusionDB prompts; excluded from desk-scale CI")
def test_criterion_10_gpu_integration():
    pass
