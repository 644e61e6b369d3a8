"""Long-output summarization for tool results.

Outputs over the length limit are compressed before re-entering an agent
context: filesystem paths and URLs surface first, then numeric values with a
sliver of surrounding context, then head/tail truncation of the remaining
prose. The raw payload is never lost — callers store it as an artifact.

Extraction is fixed pattern rules, never a model, so summaries replay
byte-identically.
"""

from __future__ import annotations

import re

PATH_RE = re.compile(r"(?:https?://[^\s\"'<>\]]+|(?:^|[\s\"'=(\[])((?:/|\./)[\w.\-/]+))")
NUM_RE = re.compile(r"-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")

_CONTEXT_CHARS = 10
_TRUNCATION_MARK = " ... "


def _extract_paths(text: str, max_items: int) -> list[str]:
    seen: list[str] = []
    for m in PATH_RE.finditer(text):
        token = m.group(1) if m.group(1) else m.group(0)
        token = token.rstrip(".,;:)")
        if token and token not in seen:
            seen.append(token)
        if len(seen) >= max_items:
            break
    return seen


def _extract_numbers(text: str, max_items: int) -> list[str]:
    out: list[str] = []
    seen: set[str] = set()
    for m in NUM_RE.finditer(text):
        lo = max(0, m.start() - _CONTEXT_CHARS)
        hi = min(len(text), m.end() + _CONTEXT_CHARS)
        snippet = text[lo:hi].replace("\n", " ").strip()
        if snippet not in seen:
            seen.add(snippet)
            out.append(snippet)
        if len(out) >= max_items:
            break
    return out


def summarize_output(text: str, limit: int) -> str:
    """Return ``text`` unchanged when it fits, else a summary of at most
    ``limit`` characters that leads with paths/URLs, then numbers in
    context, then truncated prose."""
    if limit <= 0:
        raise ValueError("limit must be positive")
    if len(text) <= limit:
        return text

    # generous caps so extraction stays cheap on multi-megabyte payloads
    budget_items = max(4, limit // 16)
    paths = _extract_paths(text, budget_items)
    masked = text
    for p in paths:
        masked = masked.replace(p, " ")
    numbers = _extract_numbers(masked, budget_items)

    parts: list[str] = []
    used = 0

    def push(line: str) -> bool:
        nonlocal used
        if used + len(line) + 1 > limit:
            return False
        parts.append(line)
        used += len(line) + 1
        return True

    for p in paths:
        if not push(p):
            break
    for n in numbers:
        if not push(n):
            break

    remaining = limit - used
    if remaining > len(_TRUNCATION_MARK) + 2:
        prose_budget = remaining - len(_TRUNCATION_MARK) - 1
        head = text[: prose_budget // 2]
        tail = text[len(text) - (prose_budget - len(head)):]
        parts.append(head + _TRUNCATION_MARK + tail)

    summary = "\n".join(parts)
    return summary[:limit]
