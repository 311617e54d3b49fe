"""Deterministic PNG encoding for generated images, with provenance sidecars."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .types import GeneratedImage


def to_uint8(image: GeneratedImage) -> np.ndarray:
    return np.clip(np.rint(image.pixels * 255.0), 0, 255).astype(np.uint8)


def png_bytes(image: GeneratedImage) -> bytes:
    """Encode to PNG. Pillow writes no timestamps, so equal pixels give equal bytes."""
    arr = to_uint8(image)
    if arr.shape[2] == 1:
        pil = Image.fromarray(arr[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(arr, mode="RGB")
    import io

    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def write_png(image: GeneratedImage, path: str | Path, sidecar: bool = True) -> Path:
    """Write the PNG plus a .json sidecar carrying the generation provenance."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(png_bytes(image))
    if sidecar:
        side = path.with_suffix(".json")
        side.write_text(json.dumps(image.provenance.to_dict(), indent=2, sort_keys=True) + "\n")
    return path
