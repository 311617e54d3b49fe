"""Command-line front end.

Every command resolves its configuration as flags > config file > defaults,
echoes the result into the output bundle, and funnels the actual work
through the service client (in-process by default, HTTP with --server).

Exit codes: 0 success (a ceiling-limited run still succeeds), 2 usage or
configuration error, 3 a single optimization run diverged, 4 an experiment
completed partially.
"""

from __future__ import annotations

import base64
import functools
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import click

from . import __version__
from .client import PeoClient
from .config import RunConfig, apply_overrides, load_config
from .errors import ContractError, DomainError, InputError
from .harness.experiments import LR_SWEEP_VALUES, WEIGHT_GRID_VALUES
from .harness.prompts import load_prompt_set, save_prompt_set
from .harness.reports import write_bundle
from .harness.simplify import simplify_prompts
from .service.models import (
    CapabilityRequest,
    ExperimentRequest,
    OptimizeRequest,
    OptimizerModel,
    SettingsModel,
    WeightsModel,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_PARTIAL = 4


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_CONFIG)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (InputError, DomainError, ContractError) as exc:
            _fail(str(exc))

    return wrapper


def _parse_weights(text: str | None) -> dict:
    if text is None:
        return {}
    parts = text.split(",")
    if len(parts) != 3:
        raise InputError(f"--weights needs three comma-separated values, got {text!r}")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise InputError(f"--weights values must be numbers, got {text!r}") from None
    return {"w1": values[0], "w2": values[1], "w3": values[2]}


def _parse_values(text: str | None) -> tuple[float, ...] | None:
    if text is None:
        return None
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise InputError(f"--values must be comma-separated numbers, got {text!r}") from None


def _resolve_config(config_path: str | None, **flags) -> RunConfig:
    cfg = load_config(config_path) if config_path else RunConfig()
    return apply_overrides(cfg, **flags)


def _echo_without_output_dir(cfg: RunConfig) -> dict:
    # The bundle's location is not part of its content; dropping it keeps
    # re-runs into fresh directories byte-identical.
    echo = cfg.to_echo_dict()
    echo.pop("output_dir", None)
    return echo


def _request_models(cfg: RunConfig):
    weights = WeightsModel(w1=cfg.weights.w1, w2=cfg.weights.w2, w3=cfg.weights.w3)
    optimizer = OptimizerModel(**cfg.optimizer.to_dict())
    settings = None if cfg.settings is None else SettingsModel(**cfg.settings.to_dict())
    return weights, optimizer, settings


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


common_options = [
    click.option("--config", "config_path", type=click.Path(), default=None, help="JSON config file."),
    click.option("--server", default=None, help="Base URL of a running peo server; in-process when omitted."),
    click.option("--backbone", default=None, help="Registered backbone name."),
    click.option("--preset", default=None, help="Settings preset: sd15, turbo, or toy."),
    click.option("--weights", "weights_text", default=None, help="w1,w2,w3 (e.g. 1.0,0.5,0.5)."),
    click.option("--optimizer", "algorithm", default=None, help="gd, adam, or adamw."),
    click.option("--lr", "learning_rate", type=float, default=None, help="Learning rate."),
    click.option("--steps", "max_steps", type=int, default=None, help="Maximum optimization steps."),
    click.option("--seed", "global_seed", type=int, default=None, help="Global seed."),
    click.option("--out", "output_dir", type=click.Path(), default=None, help="Output directory."),
]


def with_common_options(fn):
    for option in reversed(common_options):
        fn = option(fn)
    return fn


@click.group()
@click.version_option(version=__version__, prog_name="peo")
def main():
    """Prompt embedding optimization and its evaluation harness."""


@main.command()
@with_common_options
@click.option("--prompt", default=None, help="The prompt to optimize.")
@handle_errors
def optimize(config_path, server, prompt, weights_text, algorithm, learning_rate, max_steps,
             global_seed, output_dir, backbone, preset):
    """Optimize one prompt's embedding and write before/after artifacts."""
    cfg = _resolve_config(
        config_path,
        prompt=prompt,
        backbone=backbone,
        preset=preset,
        algorithm=algorithm,
        learning_rate=learning_rate,
        max_steps=max_steps,
        global_seed=global_seed,
        output_dir=output_dir,
        **_parse_weights(weights_text),
    )
    if not cfg.prompt:
        _fail("--prompt is required (flag or config file)")

    weights, optimizer, settings = _request_models(cfg)
    request = OptimizeRequest(
        prompt=cfg.prompt,
        backbone=cfg.backbone,
        weights=weights,
        optimizer=optimizer,
        preset=cfg.preset,
        settings=settings,
        seed=cfg.seed,
    )
    response = PeoClient(server).optimize(request)

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "before.png").write_bytes(base64.b64decode(response.before_png_b64))
    _write_json(out / "before.json", response.before_provenance)
    (out / "after.png").write_bytes(base64.b64decode(response.after_png_b64))
    _write_json(out / "after.json", response.after_provenance)
    _write_json(out / "trace.json", response.trace)
    echo = _echo_without_output_dir(cfg)
    _write_json(out / "config.json", echo)
    _write_json(
        out / "summary.json",
        {
            "schema_version": 1,
            "config": echo,
            "backbone": response.backbone,
            "settings": response.settings,
            "initial_total": response.initial_total,
            "best_total": response.best_total,
            "best_step": response.best_step,
            "termination_reason": response.termination_reason,
            "failure_mode": response.failure_mode,
        },
    )
    _write_json(out / "metadata.json", {"written_at_unix": time.time()})

    click.echo(
        f"{cfg.prompt!r}: initial {response.initial_total:.4f} -> best {response.best_total:.4f} "
        f"at step {response.best_step} ({response.termination_reason}, {response.failure_mode})"
    )
    sys.exit(EXIT_DIVERGED if response.failure_mode == "diverged" else EXIT_OK)


def _resolve_experiment(kind: str | None, cfg: RunConfig, command_kinds: tuple[str, ...],
                        lr_values, grid_values, ablation_w2, ablation_w3) -> dict:
    """Merge flag-level and config-level experiment parameters; flags win.

    The returned dict is fully resolved and goes into the config echo, so a
    re-run from the echoed config needs no extra flags.
    """
    from_config = dict(cfg.experiment or {})
    config_kind = from_config.get("kind")
    if kind is None:
        kind = config_kind
    if kind is None:
        _fail(f"--kind is required (one of {', '.join(command_kinds)})")
    if kind not in command_kinds:
        _fail(f"experiment kind {kind!r} does not belong to this command "
              f"(expected one of {', '.join(command_kinds)})")
    resolved: dict = {"kind": kind}
    if kind == "lr_sweep":
        resolved["lr_values"] = list(
            lr_values or from_config.get("lr_values") or LR_SWEEP_VALUES
        )
    elif kind == "weight_grid":
        resolved["grid_values"] = list(
            grid_values or from_config.get("grid_values") or WEIGHT_GRID_VALUES
        )
    elif kind == "ablation":
        resolved["ablation_w2"] = (
            ablation_w2 if ablation_w2 is not None else from_config.get("ablation_w2", 0.5)
        )
        resolved["ablation_w3"] = (
            ablation_w3 if ablation_w3 is not None else from_config.get("ablation_w3", 0.5)
        )
    return resolved


def _run_experiment_command(kind: str | None, command_kinds: tuple[str, ...], config_path,
                            server, prompt_set, origin, weights_text, algorithm, learning_rate,
                            max_steps, global_seed, output_dir, backbone, preset,
                            lr_values=None, grid_values=None, ablation_w2=None,
                            ablation_w3=None, hps=None):
    cfg = _resolve_config(
        config_path,
        backbone=backbone,
        preset=preset,
        prompt_set=prompt_set,
        prompt_set_origin=origin,
        algorithm=algorithm,
        learning_rate=learning_rate,
        max_steps=max_steps,
        global_seed=global_seed,
        output_dir=output_dir,
        hps_scorer=hps,
        **_parse_weights(weights_text),
    )
    experiment = _resolve_experiment(
        kind, cfg, command_kinds, lr_values, grid_values, ablation_w2, ablation_w3
    )
    cfg = apply_overrides(cfg)  # no-op copy; experiment attaches below
    cfg = replace(cfg, experiment=experiment)
    if not cfg.prompt_set:
        _fail("--prompt-set is required (flag or config file)")
    ps = load_prompt_set(cfg.prompt_set, origin=cfg.prompt_set_origin)

    weights, optimizer, settings = _request_models(cfg)
    request = ExperimentRequest(
        kind=experiment["kind"],
        prompts=list(ps.prompts),
        prompt_set_name=ps.name,
        prompt_set_origin=ps.origin.value,
        backbone=cfg.backbone,
        weights=weights,
        optimizer=optimizer,
        preset=cfg.preset,
        settings=settings,
        seed=cfg.seed,
        lr_values=experiment.get("lr_values"),
        grid_values=experiment.get("grid_values"),
        ablation_w2=experiment.get("ablation_w2", 0.5),
        ablation_w3=experiment.get("ablation_w3", 0.5),
        hps_scorer=cfg.hps_scorer,
    )
    response = PeoClient(server).run_experiment(request)

    result = response.to_core()
    write_bundle(result, cfg.output_dir, _echo_without_output_dir(cfg))
    click.echo(response.comparison_md)
    if response.partial_failure:
        failed = [v.label for v in response.variants if v.error is not None]
        click.echo(f"partial failure: {', '.join(failed)}", err=True)
        sys.exit(EXIT_PARTIAL)
    sys.exit(EXIT_OK)


prompt_set_options = [
    click.option("--prompt-set", default=None, type=click.Path(), help="Prompt set file."),
    click.option("--origin", default=None, help="Prompt set origin tag."),
]


def with_prompt_set_options(fn):
    for option in reversed(prompt_set_options):
        fn = option(fn)
    return fn


@main.command("eval")
@with_common_options
@with_prompt_set_options
@click.option("--hps", default=None, help="Registered HPS scorer name.")
@handle_errors
def eval_cmd(config_path, server, prompt_set, origin, weights_text, algorithm, learning_rate,
             max_steps, global_seed, output_dir, backbone, preset, hps):
    """Benchmark: zero-step baseline vs full optimization over a prompt set."""
    _run_experiment_command("benchmark", ("benchmark",), config_path, server, prompt_set,
                            origin, weights_text, algorithm, learning_rate, max_steps,
                            global_seed, output_dir, backbone, preset, hps=hps)


@main.command()
@with_common_options
@with_prompt_set_options
@click.option("--w2", type=float, default=None, help="Adherence weight for masked variants.")
@click.option("--w3", type=float, default=None, help="Preservation weight for masked variants.")
@handle_errors
def ablate(config_path, server, prompt_set, origin, weights_text, algorithm, learning_rate,
           max_steps, global_seed, output_dir, backbone, preset, w2, w3):
    """Ablation over the four objective-term combinations."""
    _run_experiment_command("ablation", ("ablation",), config_path, server, prompt_set,
                            origin, weights_text, algorithm, learning_rate, max_steps,
                            global_seed, output_dir, backbone, preset,
                            ablation_w2=w2, ablation_w3=w3)


@main.command()
@with_common_options
@with_prompt_set_options
@click.option("--kind", type=click.Choice(["lr", "weights", "optimizer"]), default=None,
              help="Sweep kind; may also come from the config file's experiment section.")
@click.option("--values", "values_text", default=None,
              help="Comma-separated values (learning rates, or the weight grid set).")
@handle_errors
def sweep(config_path, server, prompt_set, origin, weights_text, algorithm, learning_rate,
          max_steps, global_seed, output_dir, backbone, preset, kind, values_text):
    """Hyperparameter sweeps: learning rate, weight grid, or optimizer comparison."""
    values = _parse_values(values_text)
    kind_map = {"lr": "lr_sweep", "weights": "weight_grid", "optimizer": "optimizer_cmp"}
    _run_experiment_command(kind_map.get(kind), ("lr_sweep", "weight_grid", "optimizer_cmp"),
                            config_path, server, prompt_set, origin, weights_text,
                            algorithm, learning_rate, max_steps, global_seed, output_dir,
                            backbone, preset,
                            lr_values=values if kind == "lr" else None,
                            grid_values=values if kind == "weights" else None)


@main.command()
@click.option("--server", default=None)
@handle_errors
def backbones(server):
    """List registered backbones."""
    response = PeoClient(server).backbones()
    for info in response.backbones:
        click.echo(
            f"{info.name}: encoders={info.encoder_count} "
            f"concurrent_safe={info.concurrent_safe} sampler={info.default_settings['sampler_name']}"
        )


@main.command("capability-check")
@click.option("--backbone", default="toy")
@click.option("--server", default=None)
@handle_errors
def capability(backbone, server):
    """Probe a backbone's determinism, encoder consistency, and differentiability."""
    response = PeoClient(server).capability_check(CapabilityRequest(backbone=backbone))
    for name, check in response.checks.items():
        status = "pass" if check["passed"] else "FAIL"
        click.echo(f"{status}  {name}: {check['detail']}")
    sys.exit(EXIT_OK if response.all_passed else 1)


@main.command()
@click.option("--prompt-set", required=True, type=click.Path())
@click.option("--endpoint", required=True, help="Chat-completion endpoint URL.")
@click.option("--model", default="gpt-4")
@click.option("--api-key", default=None, envvar="PEO_API_KEY")
@click.option("--out", "output_path", required=True, type=click.Path())
@handle_errors
def simplify(prompt_set, endpoint, model, api_key, output_path):
    """Rewrite a prompt set into simplified prompts via an external endpoint."""
    ps = load_prompt_set(prompt_set)
    simplified = simplify_prompts(ps, endpoint=endpoint, model=model, api_key=api_key)
    save_prompt_set(simplified, output_path, header=f"simplified from {prompt_set}")
    click.echo(f"wrote {len(simplified)} simplified prompts to {output_path}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
