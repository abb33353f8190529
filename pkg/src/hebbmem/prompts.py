"""Prompt templates and the renderers that fill them.

Templates live as text files next to this module and are filled in a single
substitution pass, so braces inside conversation text are never interpreted.
"""

from __future__ import annotations

import re
from datetime import datetime
from functools import lru_cache
from importlib import resources
from typing import Iterable

from .types import MemoryNode, SemanticRecord


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    return resources.files(__package__).joinpath("prompts", f"{name}.txt").read_text(encoding="utf-8")


def format_date(ts: datetime) -> str:
    """``15 July 2023`` style, the format the answer prompt asks for."""
    return f"{ts.day} {ts:%B %Y}"


def format_timestamp(ts: datetime) -> str:
    return f"{format_date(ts)} {ts:%H:%M}"


def format_turn(node: MemoryNode) -> str:
    return f"[{format_timestamp(node.timestamp)}] {node.speaker}: {node.text}"


def chronological(nodes: Iterable[MemoryNode]) -> list[MemoryNode]:
    return sorted(nodes, key=lambda n: (n.timestamp, n.id))


_PLACEHOLDER = re.compile(r"\{(?:episodic_context|semantic_knowledge|user_model|query)\}")


def render_extraction(cluster: Iterable[MemoryNode]) -> tuple[str, str]:
    conversation = "\n".join(format_turn(n) for n in chronological(cluster))
    template = load_template("extraction_user")
    head, _, tail = template.partition("{conversation}")
    user = head + conversation + tail
    return load_template("extraction_system"), user


def render_response(
    episodic: Iterable[MemoryNode],
    semantic: Iterable[SemanticRecord],
    user_model: Iterable[SemanticRecord],
    query: str,
) -> tuple[str, str]:
    fills = {
        "{episodic_context}": "\n".join(format_turn(n) for n in chronological(episodic)),
        "{semantic_knowledge}": "\n".join(f"- {r.statement}" for r in semantic),
        "{user_model}": "\n".join(f"- {r.statement}" for r in user_model),
        "{query}": query,
    }
    user = _PLACEHOLDER.sub(lambda m: fills[m.group(0)], load_template("response_user"))
    return load_template("response_system"), user
