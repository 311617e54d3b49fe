"""Run configuration: paper defaults, JSON file loading, flag overrides.

Precedence is flags > file > defaults.  Unknown keys in a config file are
hard errors listing the offenders, so a typo never silently falls back to
a default hyperparameter.  The fully-resolved configuration is echoed into
every output bundle and is itself loadable, which is what makes re-runs
reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .backbones.base import GenerationSettings, PRESETS, resolve_preset
from .errors import InputError
from .optimizer import Algorithm, OptimizerConfig
from .types import ObjectiveWeights

_TOP_KEYS = {
    "backbone",
    "preset",
    "settings",
    "weights",
    "optimizer",
    "experiment",
    "seed",
    "output_dir",
    "prompt",
    "prompt_set",
    "prompt_set_origin",
    "hps_scorer",
}
_EXPERIMENT_KEYS = {"kind", "lr_values", "grid_values", "ablation_w2", "ablation_w3"}
_WEIGHT_KEYS = {"w1", "w2", "w3"}
_OPTIMIZER_KEYS = {
    "algorithm",
    "learning_rate",
    "max_steps",
    "beta1",
    "beta2",
    "eps",
    "weight_decay",
    "clip_norm",
    "seed",
}
_SETTINGS_KEYS = {
    "sampler_name",
    "sampling_steps",
    "guidance_scale",
    "differentiated_steps",
    "height",
    "width",
    "seed",
}


@dataclass(frozen=True)
class RunConfig:
    backbone: str = "toy"
    preset: str | None = None
    settings: GenerationSettings | None = None
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    experiment: dict | None = None
    seed: int = 0
    output_dir: str = "peo-out"
    prompt: str | None = None
    prompt_set: str | None = None
    prompt_set_origin: str = "custom"
    hps_scorer: str | None = None

    def resolve_settings(self, default: GenerationSettings) -> GenerationSettings:
        """Explicit settings win over a preset; otherwise the backbone default."""
        if self.settings is not None:
            return self.settings
        if self.preset is not None:
            return resolve_preset(self.preset)
        return default

    def to_echo_dict(self) -> dict:
        """The fully-resolved configuration, loadable by load_config."""
        out: dict = {
            "backbone": self.backbone,
            "weights": {"w1": self.weights.w1, "w2": self.weights.w2, "w3": self.weights.w3},
            "optimizer": self.optimizer.to_dict(),
            "seed": self.seed,
            "output_dir": self.output_dir,
            "prompt_set_origin": self.prompt_set_origin,
        }
        if self.preset is not None:
            out["preset"] = self.preset
        if self.settings is not None:
            out["settings"] = self.settings.to_dict()
        if self.experiment is not None:
            out["experiment"] = dict(self.experiment)
        if self.prompt is not None:
            out["prompt"] = self.prompt
        if self.prompt_set is not None:
            out["prompt_set"] = self.prompt_set
        if self.hps_scorer is not None:
            out["hps_scorer"] = self.hps_scorer
        return out


def _reject_unknown(given: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(given) - allowed)
    if unknown:
        raise InputError(f"unknown {where} key(s): {', '.join(unknown)}")


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise InputError("config must be a JSON object")
    _reject_unknown(data, _TOP_KEYS, "config")

    weights = ObjectiveWeights()
    if "weights" in data:
        w = data["weights"]
        _reject_unknown(w, _WEIGHT_KEYS, "weights")
        weights = replace(weights, **{k: float(v) for k, v in w.items()})

    optimizer = OptimizerConfig()
    if "optimizer" in data:
        o = dict(data["optimizer"])
        _reject_unknown(o, _OPTIMIZER_KEYS, "optimizer")
        if "algorithm" in o:
            try:
                o["algorithm"] = Algorithm(str(o["algorithm"]).lower())
            except ValueError:
                raise InputError(
                    f"unknown optimizer algorithm {o['algorithm']!r}; "
                    f"choose from {[a.value for a in Algorithm]}"
                ) from None
        optimizer = replace(optimizer, **o)

    settings = None
    if "settings" in data:
        s = data["settings"]
        _reject_unknown(s, _SETTINGS_KEYS, "settings")
        settings = GenerationSettings(**s)

    preset = data.get("preset")
    if preset is not None and preset not in PRESETS:
        raise InputError(f"unknown settings preset {preset!r}; known: {sorted(PRESETS)}")

    experiment = None
    if "experiment" in data:
        experiment = dict(data["experiment"])
        _reject_unknown(experiment, _EXPERIMENT_KEYS, "experiment")

    return RunConfig(
        backbone=str(data.get("backbone", "toy")),
        preset=preset,
        settings=settings,
        weights=weights,
        optimizer=optimizer,
        experiment=experiment,
        seed=int(data.get("seed", 0)),
        output_dir=str(data.get("output_dir", "peo-out")),
        prompt=data.get("prompt"),
        prompt_set=data.get("prompt_set"),
        prompt_set_origin=str(data.get("prompt_set_origin", "custom")),
        hps_scorer=data.get("hps_scorer"),
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise InputError(f"config file does not exist: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def apply_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Apply non-None flag values on top of a config (flags > file > defaults)."""
    updates: dict = {}
    weights_updates = {k: v for k, v in overrides.items() if k in _WEIGHT_KEYS and v is not None}
    if weights_updates:
        updates["weights"] = replace(cfg.weights, **weights_updates)
    opt_updates = {
        k: v for k, v in overrides.items() if k in _OPTIMIZER_KEYS and v is not None
    }
    if "algorithm" in opt_updates:
        opt_updates["algorithm"] = Algorithm(str(opt_updates["algorithm"]).lower())
    if opt_updates:
        updates["optimizer"] = replace(cfg.optimizer, **opt_updates)
    for key in ("backbone", "preset", "output_dir", "prompt", "prompt_set", "prompt_set_origin", "hps_scorer"):
        if overrides.get(key) is not None:
            updates[key] = overrides[key]
    if overrides.get("global_seed") is not None:
        updates["seed"] = int(overrides["global_seed"])
    return replace(cfg, **updates)
