"""Backbone registry: adapters register factories by name, callers resolve lazily.

External adapters can be dropped into the directory named by the
``PEO_BACKENDS_DIR`` environment variable; each ``*.py`` file there is
imported once and is expected to call :func:`register_backbone` at import
time.
"""

from __future__ import annotations

import importlib.util
import os
import sys
from pathlib import Path
from typing import Callable

from ..errors import InputError
from .base import (
    Backbone,
    CapabilityReport,
    DifferentiableBackbone,
    GenerationSettings,
    PRESETS,
    capability_check,
    encode_prompt,
    generate_image,
    image_checksum,
    resolve_preset,
)
from .toy import DualToyBackbone, ToyBackbone

_FACTORIES: dict[str, Callable[[], Backbone]] = {}
_INSTANCES: dict[str, Backbone] = {}
_EXTERNAL_LOADED = False

BACKENDS_DIR_ENV = "PEO_BACKENDS_DIR"


def register_backbone(name: str, factory: Callable[[], Backbone]) -> None:
    _FACTORIES[name] = factory
    _INSTANCES.pop(name, None)


def available_backbones() -> list[str]:
    load_external_backbones()
    return sorted(_FACTORIES)


def get_backbone(name: str) -> Backbone:
    """Resolve a backbone by name; instances are cached per process."""
    load_external_backbones()
    if name not in _FACTORIES:
        raise InputError(f"unknown backbone {name!r}; registered: {sorted(_FACTORIES)}")
    if name not in _INSTANCES:
        _INSTANCES[name] = _FACTORIES[name]()
    return _INSTANCES[name]


def load_external_backbones(directory: str | os.PathLike | None = None) -> list[str]:
    """Import adapter modules from PEO_BACKENDS_DIR (or an explicit directory)."""
    global _EXTERNAL_LOADED
    if directory is None:
        if _EXTERNAL_LOADED:
            return []
        _EXTERNAL_LOADED = True
        env = os.environ.get(BACKENDS_DIR_ENV)
        if not env:
            return []
        directory = env
    path = Path(directory)
    if not path.is_dir():
        raise InputError(f"backbone adapter directory does not exist: {path}")
    loaded = []
    for file in sorted(path.glob("*.py")):
        mod_name = f"peo_adapter_{file.stem}"
        spec = importlib.util.spec_from_file_location(mod_name, file)
        if spec is None or spec.loader is None:
            continue
        module = importlib.util.module_from_spec(spec)
        sys.modules[mod_name] = module
        spec.loader.exec_module(module)
        loaded.append(file.stem)
    return loaded


register_backbone("toy", ToyBackbone)
register_backbone("toy2", DualToyBackbone)

__all__ = [
    "Backbone",
    "CapabilityReport",
    "DifferentiableBackbone",
    "DualToyBackbone",
    "GenerationSettings",
    "PRESETS",
    "ToyBackbone",
    "available_backbones",
    "capability_check",
    "encode_prompt",
    "generate_image",
    "get_backbone",
    "image_checksum",
    "load_external_backbones",
    "register_backbone",
    "resolve_preset",
]
