"""Prompt-set loading: newline-delimited UTF-8 files with # comments."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from ..errors import InputError


class PromptOrigin(str, Enum):
    DIFFUSIONDB_SUBSET = "diffusiondb_subset"
    COCO_SUBSET = "coco_subset"
    SIMPLIFIED = "simplified"
    PEO_SET = "peo_set"
    CUSTOM = "custom"


@dataclass(frozen=True)
class PromptSet:
    name: str
    prompts: tuple[str, ...]
    origin: PromptOrigin = PromptOrigin.CUSTOM

    def __post_init__(self):
        if len(self.prompts) == 0:
            raise InputError(f"prompt set {self.name!r} is empty")
        for i, p in enumerate(self.prompts):
            if not p.strip():
                raise InputError(f"prompt set {self.name!r} has an empty prompt at index {i}")
        object.__setattr__(self, "prompts", tuple(self.prompts))
        object.__setattr__(self, "origin", PromptOrigin(self.origin))

    def __len__(self) -> int:
        return len(self.prompts)


def load_prompt_set(
    path: str | Path,
    origin: PromptOrigin | str = PromptOrigin.CUSTOM,
    name: str | None = None,
) -> PromptSet:
    """Read prompts from a file, one per line, skipping blanks and # comments."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"prompt set file does not exist: {path}")
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InputError(f"prompt set {path} is not valid UTF-8: {exc}") from exc
    prompts = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        prompts.append(line)
    if not prompts:
        raise InputError(f"prompt set {path} contains no prompts")
    return PromptSet(name=name or path.stem, prompts=tuple(prompts), origin=PromptOrigin(origin))


def save_prompt_set(ps: PromptSet, path: str | Path, header: str | None = None) -> None:
    lines = []
    if header:
        lines.append(f"# {header}")
    lines.extend(ps.prompts)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
