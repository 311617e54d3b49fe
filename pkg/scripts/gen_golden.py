"""Generate the committed golden fixtures under tests/golden/.

Run from the repository root after any intentional change to the toy
fixtures or the optimization semantics:

    python3 scripts/gen_golden.py

Everything here is deterministic; re-running without such changes must
reproduce the committed files byte-identically.
"""

from __future__ import annotations

import hashlib
import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parents[1]
GOLDEN = REPO / "tests" / "golden"
PROMPTS20 = "tests/fixtures/prompts20.txt"

sys.path.insert(0, str(REPO / "src"))

from peo.backbones import get_backbone  # noqa: E402
from peo.harness.prompts import load_prompt_set  # noqa: E402
from peo.objective import cosine_similarity  # noqa: E402
from peo.optimizer import (  # noqa: E402
    FailureMode,
    OptimizerConfig,
    detect_failure,
    objective_value,
    peo_optimize,
)
from peo.types import ObjectiveWeights, PromptEmbedding  # noqa: E402


def dump(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path.relative_to(REPO)}")


def toy_golden() -> None:
    toy = get_backbone("toy")
    settings = toy.default_settings
    weights = ObjectiveWeights()

    cat = toy.text_encode("a cat")
    cat_img = toy.generate(cat, settings)
    cat_feats = toy.image_encode(cat_img)
    cat_raw = toy.aesthetic_score(cat_img)

    dog = toy.text_encode("a dog on a beach")
    dog_img = toy.generate(dog, settings)
    dog_feats = toy.image_encode(dog_img)

    # Ceiling fixture: an embedding along the aesthetic-maximizing direction,
    # scaled until the starting normalized score clears the 0.65 ceiling.
    direction = toy.params.w_gen.T @ toy.params.v_aes
    direction = direction / np.linalg.norm(direction)
    scale = 0.05
    while True:
        theta_c = PromptEmbedding((scale * direction,), ("toy-a",))
        l1_0 = objective_value(toy, theta_c, theta_c, weights, settings)[0].l1
        if l1_0 > 0.70:
            break
        scale += 0.05
    _, ceiling_trace = peo_optimize(
        theta_c, toy, weights, OptimizerConfig(learning_rate=1e-5), settings
    )
    assert detect_failure(ceiling_trace) is FailureMode.CEILING

    dump(
        GOLDEN / "toy_golden.json",
        {
            "cat": {
                "prompt": "a cat",
                "vector": cat.vectors[0].tolist(),
                "image_pixels": cat_img.pixels.reshape(-1).tolist(),
                "features": cat_feats.vectors[0].tolist(),
                "raw_aesthetic": cat_raw,
            },
            "dog": {
                "prompt": "a dog on a beach",
                "features": dog_feats.vectors[0].tolist(),
            },
            "cat_dog_feature_cos": cosine_similarity(cat_feats.vectors[0], dog_feats.vectors[0]),
            "ceiling": {
                "scale": scale,
                "vector": theta_c.vectors[0].tolist(),
                "l1_0": l1_0,
            },
        },
    )


def optimize_golden() -> None:
    toy = get_backbone("toy")
    star, trace = peo_optimize(
        toy.text_encode("a cat"), toy, ObjectiveWeights(), OptimizerConfig()
    )
    dump(
        GOLDEN / "optimize_run.json",
        {
            "prompt": "a cat",
            "totals": trace.totals(),
            "best_step": trace.best_step,
            "best_total": trace.best_total,
            "termination_reason": trace.termination_reason.value,
            "theta_star_checksum": star.checksum(),
        },
    )


def ppt_effect_golden() -> None:
    toy = get_backbone("toy")
    prompts = load_prompt_set(REPO / PROMPTS20).prompts
    out: dict = {"prompts": len(prompts)}
    for label, w3 in (("w3_0", 0.0), ("w3_10", 10.0)):
        cosines = []
        for prompt in prompts:
            theta0 = toy.text_encode(prompt)
            star, _ = peo_optimize(
                theta0, toy, ObjectiveWeights(1.0, 0.5, w3), OptimizerConfig()
            )
            cosines.append(cosine_similarity(star.vectors[0], theta0.vectors[0]))
        out[label] = {"per_prompt_cos": cosines, "mean_cos": float(np.mean(cosines))}
    out["margin"] = out["w3_10"]["mean_cos"] - out["w3_0"]["mean_cos"]
    assert out["margin"] > 0.0
    dump(GOLDEN / "ppt_effect.json", out)


def _bundle_checksums(bundle: Path) -> dict:
    sums = {}
    for file in sorted(bundle.rglob("*")):
        if file.is_dir() or file.name == "metadata.json":
            continue
        sums[str(file.relative_to(bundle))] = hashlib.sha256(file.read_bytes()).hexdigest()
    return sums


def _run_cli(args: list[str]) -> None:
    proc = subprocess.run(
        [sys.executable, "-m", "peo.cli", *args], cwd=REPO, capture_output=True, text=True
    )
    if proc.returncode != 0:
        raise RuntimeError(f"cli failed ({proc.returncode}): {proc.stderr}\n{proc.stdout}")


def ablation_golden() -> None:
    bundle = GOLDEN / "ablation"
    if bundle.exists():
        shutil.rmtree(bundle)
    _run_cli(
        ["ablate", "--prompt-set", PROMPTS20, "--backbone", "toy", "--seed", "0",
         "--out", str(bundle)]
    )
    (bundle / "metadata.json").unlink()
    dump(GOLDEN / "ablation_checksums.json", _bundle_checksums(bundle))
    # Keep only the text files in the committed bundle; images and traces are
    # pinned by their checksums.
    for sub in ("images", "traces"):
        shutil.rmtree(bundle / sub)
    print(f"trimmed {bundle.relative_to(REPO)} to text files")


def lr_sweep_golden() -> None:
    work = GOLDEN / "_lr_sweep_work"
    if work.exists():
        shutil.rmtree(work)
    _run_cli(
        ["sweep", "--kind", "lr", "--values", "1e-5,1e-2,2e-1", "--prompt-set", PROMPTS20,
         "--backbone", "toy", "--seed", "0", "--out", str(work)]
    )
    summary = json.loads((work / "summary.json").read_text())
    out: dict = {"values": [1e-5, 1e-2, 2e-1], "variants": {}}
    for variant in summary["variants"]:
        label = variant["label"]
        diffs, diverged = [], []
        for trace_file in sorted((work / "traces" / label).glob("*.json")):
            doc = json.loads(trace_file.read_text())
            diffs.append(doc["records"][doc["best_step"]]["theta_diff_norm"])
            if doc["termination_reason"] == "diverged":
                diverged.append(int(trace_file.stem[1:]))
        out["variants"][label] = {
            "diverged_count": variant["failure_counts"]["diverged"],
            "diverged_indices": diverged,
            "mean_best_diff_norm": float(np.mean(diffs)),
        }
    dump(GOLDEN / "lr_sweep.json", out)
    shutil.rmtree(work)


if __name__ == "__main__":
    GOLDEN.mkdir(parents=True, exist_ok=True)
    toy_golden()
    optimize_golden()
    ppt_effect_golden()
    ablation_golden()
    lr_sweep_golden()
    print("done")
