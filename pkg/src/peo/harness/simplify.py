"""Optional prompt simplification via an external chat-completion endpoint.

Never invoked implicitly: the caller supplies the endpoint.  The request
carries the literal simplification query followed by the numbered prompt
list; the model must answer with one simplified prompt per line.
"""

from __future__ import annotations

import httpx

from ..errors import InputError
from .prompts import PromptOrigin, PromptSet

SIMPLIFY_QUERY = (
    "Given the following list of prompts, make them short, focus on the main "
    "subject of the prompt."
)


def simplify_prompts(
    prompt_set: PromptSet,
    endpoint: str,
    model: str = "gpt-4",
    api_key: str | None = None,
    timeout: float = 60.0,
    transport: httpx.BaseTransport | None = None,
) -> PromptSet:
    """Return a SIMPLIFIED prompt set produced by the configured endpoint."""
    numbered = "\n".join(f"{i + 1}. {p}" for i, p in enumerate(prompt_set.prompts))
    payload = {
        "model": model,
        "messages": [{"role": "user", "content": f"{SIMPLIFY_QUERY}\n{numbered}"}],
    }
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    with httpx.Client(timeout=timeout, transport=transport) as client:
        resp = client.post(endpoint, json=payload, headers=headers)
        resp.raise_for_status()
        body = resp.json()
    try:
        content = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise InputError(f"unexpected completion response shape: {exc}") from exc

    simplified = []
    for line in content.splitlines():
        line = line.strip()
        if not line:
            continue
        # Tolerate "1. prompt" / "1) prompt" numbering in the reply.
        head, sep, tail = line.partition(". ")
        if sep and head.rstrip(")").isdigit():
            line = tail.strip()
        else:
            head, sep, tail = line.partition(") ")
            if sep and head.isdigit():
                line = tail.strip()
        if line:
            simplified.append(line)
    if len(simplified) != len(prompt_set.prompts):
        raise InputError(
            f"endpoint returned {len(simplified)} prompts for {len(prompt_set.prompts)} inputs"
        )
    return PromptSet(
        name=f"{prompt_set.name}-simplified",
        prompts=tuple(simplified),
        origin=PromptOrigin.SIMPLIFIED,
    )
