"""Embedding and chat backends.

Real clients speak the common ``/embeddings`` and ``/chat/completions`` JSON
shapes over HTTP.  The stubs are deterministic and offline, for tests and
reproducible evaluation runs.
"""

from __future__ import annotations

import hashlib
import logging
import os
import re
import time
from functools import lru_cache
from typing import Callable, Protocol, Sequence, Union

import httpx
import numpy as np

from .encoding import STOPWORDS, tokenize

logger = logging.getLogger(__name__)

ENV_API_BASE = "HEBBMEM_API_BASE"
ENV_API_KEY = "HEBBMEM_API_KEY"
ENV_EMBED_MODEL = "HEBBMEM_EMBED_MODEL"
ENV_CHAT_MODEL = "HEBBMEM_CHAT_MODEL"

DEFAULT_API_BASE = "https://api.openai.com/v1"
DEFAULT_EMBED_MODEL = "text-embedding-3-small"
DEFAULT_CHAT_MODEL = "gpt-4o-mini"


class BackendError(RuntimeError):
    """Base class for backend failures. ``retryable`` tells callers whether a retry may help."""

    retryable = False

    def __init__(self, message: str, *, status: int | None = None):
        super().__init__(message)
        self.status = status


class TransportError(BackendError):
    retryable = True


class ServerError(BackendError):
    retryable = True


class RateLimitError(BackendError):
    retryable = True


class TokenLimitError(BackendError):
    """The request exceeded the model's context or token budget."""


class FatalBackendError(BackendError):
    pass


class MalformedResponseError(FatalBackendError):
    pass


class Embedder(Protocol):
    def embed_text(self, text: str) -> Sequence[float]: ...


class ChatBackend(Protocol):
    def chat(self, system_prompt: str, user_prompt: str) -> str: ...


def _require_text(text: str, what: str = "text") -> None:
    if not isinstance(text, str) or not text.strip():
        raise ValueError(f"{what} must be a non-empty string")


# --------------------------------------------------------------------------
# Stubs
# --------------------------------------------------------------------------


class StubEmbedder:
    """Hash-seeded pseudo-random embeddings with a bag-of-words bias.

    The vector for a text is the sum of a random direction for the whole
    string and one random direction per distinct token, so texts sharing
    words end up closer than unrelated texts.
    """

    def __init__(self, dim: int = 64, seed: int = 0, text_weight: float = 0.5):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.seed = seed
        self.text_weight = text_weight
        self.calls = 0

    def _direction(self, key: str) -> np.ndarray:
        return _seeded_gaussian(self.seed, self.dim, key)

    def embed_text(self, text: str) -> np.ndarray:
        _require_text(text)
        self.calls += 1
        vec = self.text_weight * self._direction("text\x00" + text)
        for tok in sorted(set(tokenize(text))):
            vec = vec + self._direction("tok\x00" + tok)
        return vec / np.linalg.norm(vec)


@lru_cache(maxsize=65536)
def _seeded_gaussian_cached(seed: int, dim: int, key: str) -> bytes:
    digest = hashlib.blake2b(f"{seed}\x00{key}".encode("utf-8"), digest_size=16).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    return rng.standard_normal(dim).tobytes()


def _seeded_gaussian(seed: int, dim: int, key: str) -> np.ndarray:
    return np.frombuffer(_seeded_gaussian_cached(seed, dim, key), dtype=np.float64).copy()


Response = Union[str, Callable[[str, str], str]]


class StubChat:
    """Scripted chat backend.

    ``rules`` is an ordered list of ``(regex, response)``; the first regex
    that matches the system or user prompt wins.  A response may be a plain
    string or a callable receiving ``(system_prompt, user_prompt)``.
    """

    def __init__(self, rules: Sequence[tuple[str, Response]] = (), fallback: Response = "Not mentioned."):
        self.rules = [(re.compile(p), r) for p, r in rules]
        self.fallback = fallback
        self.calls: list[tuple[str, str]] = []

    def chat(self, system_prompt: str, user_prompt: str) -> str:
        _require_text(system_prompt, "system prompt")
        _require_text(user_prompt, "user prompt")
        self.calls.append((system_prompt, user_prompt))
        for pattern, response in self.rules:
            if pattern.search(system_prompt) or pattern.search(user_prompt):
                return response(system_prompt, user_prompt) if callable(response) else response
        fallback = self.fallback
        return fallback(system_prompt, user_prompt) if callable(fallback) else fallback

    @classmethod
    def default(cls) -> "StubChat":
        """Extractive stub used by ``--stub-backends``: deterministic and content-aware."""
        return cls(
            rules=[
                (r"knowledge extraction engine", _stub_distill),
                (r"<EPISODIC MEMORIES>", _stub_answer),
            ]
        )


_LINE_PREFIX = re.compile(r"^\[[^\]]*\]\s*([^:]+):\s*(.*)$")


def _cluster_lines(user_prompt: str) -> list[tuple[str, str]]:
    _, _, body = user_prompt.partition("Memory Cluster:")
    out = []
    for line in body.strip().splitlines():
        m = _LINE_PREFIX.match(line.strip())
        if m:
            out.append((m.group(1).strip(), m.group(2).strip()))
    return out


def _stub_distill(system_prompt: str, user_prompt: str) -> str:
    lines = _cluster_lines(user_prompt)
    speakers = sorted({s for s, _ in lines})
    traits = [f"- {s} takes part in this discussion (evidence: {sum(1 for x, _ in lines if x == s)} turns)" for s in speakers]
    facts = [f"- {s} said: {t}" for s, t in lines[:3]]
    return "1. USER CHARACTERISTICS:\n" + "\n".join(traits) + "\n\n2. FACTUAL INFORMATION:\n" + "\n".join(facts) + "\n"


def _stub_answer(system_prompt: str, user_prompt: str) -> str:
    context, _, rest = user_prompt.partition("<SEMANTIC KNOWLEDGE>")
    question = rest.split("Question:", 1)[-1].split("\n", 1)[0]
    qtok = set(tokenize(question)) - STOPWORDS
    best, best_overlap = None, 0
    for line in context.splitlines():
        m = _LINE_PREFIX.match(line.strip())
        if not m:
            continue
        overlap = len(qtok & set(tokenize(m.group(2))))
        if overlap > best_overlap:
            best, best_overlap = m.group(2), overlap
    return best if best is not None else "Not mentioned."


# --------------------------------------------------------------------------
# HTTP clients
# --------------------------------------------------------------------------


class _HTTPBackend:
    def __init__(
        self,
        base_url: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        *,
        timeout: float = 60.0,
        max_attempts: int = 3,
        backoff: float = 1.0,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")
        self.base_url = (base_url or os.environ.get(ENV_API_BASE) or DEFAULT_API_BASE).rstrip("/")
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY) or os.environ.get("OPENAI_API_KEY")
        self.max_attempts = max_attempts
        self.backoff = backoff
        self._sleep = sleep
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def close(self) -> None:
        self._client.close()

    def _post(self, path: str, payload: dict) -> dict:
        url = f"{self.base_url}/{path.lstrip('/')}"
        last: BackendError | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            try:
                return self._post_once(url, payload)
            except BackendError as exc:
                if not exc.retryable:
                    raise
                last = exc
                logger.warning("attempt %d/%d to %s failed: %s", attempt + 1, self.max_attempts, url, exc)
        assert last is not None
        raise last

    def _post_once(self, url: str, payload: dict) -> dict:
        try:
            resp = self._client.post(url, json=payload)
        except httpx.HTTPError as exc:
            raise TransportError(f"POST {url}: {exc}") from exc
        if resp.status_code >= 400:
            raise _status_error(url, resp)
        try:
            body = resp.json()
        except ValueError as exc:
            raise MalformedResponseError(f"POST {url}: response is not JSON") from exc
        if not isinstance(body, dict):
            raise MalformedResponseError(f"POST {url}: expected a JSON object")
        return body


def _status_error(url: str, resp: httpx.Response) -> BackendError:
    text = resp.text[:500]
    msg = f"POST {url}: HTTP {resp.status_code}: {text}"
    lowered = text.lower()
    if "context_length_exceeded" in lowered or "maximum context length" in lowered:
        return TokenLimitError(msg, status=resp.status_code)
    if resp.status_code == 429:
        return RateLimitError(msg, status=resp.status_code)
    if resp.status_code >= 500 or resp.status_code == 408:
        return ServerError(msg, status=resp.status_code)
    return FatalBackendError(msg, status=resp.status_code)


class HTTPEmbedder(_HTTPBackend):
    def __init__(self, base_url: str | None = None, model: str | None = None, api_key: str | None = None, **kw):
        super().__init__(base_url, model or os.environ.get(ENV_EMBED_MODEL) or DEFAULT_EMBED_MODEL, api_key, **kw)

    def embed_text(self, text: str) -> list[float]:
        _require_text(text)
        body = self._post("embeddings", {"model": self.model, "input": [text]})
        try:
            vec = body["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError("embeddings response lacks data[0].embedding") from exc
        if not isinstance(vec, list) or not vec or not all(isinstance(x, (int, float)) for x in vec):
            raise MalformedResponseError("embedding is not a non-empty list of numbers")
        return [float(x) for x in vec]


class HTTPChat(_HTTPBackend):
    def __init__(
        self,
        base_url: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        temperature: float = 0.0,
        **kw,
    ):
        super().__init__(base_url, model or os.environ.get(ENV_CHAT_MODEL) or DEFAULT_CHAT_MODEL, api_key, **kw)
        self.temperature = temperature

    def chat(self, system_prompt: str, user_prompt: str) -> str:
        _require_text(system_prompt, "system prompt")
        _require_text(user_prompt, "user prompt")
        payload = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": system_prompt},
                {"role": "user", "content": user_prompt},
            ],
        }
        body = self._post("chat/completions", payload)
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError("chat response lacks choices[0].message.content") from exc
        if not isinstance(content, str):
            raise MalformedResponseError("chat content is not a string")
        return content


def make_backends(stub: bool, *, dim: int | None = None, seed: int = 0):
    """``(embedder, chat)`` pair selected by configuration."""
    if stub:
        return StubEmbedder(dim or 64, seed=seed), StubChat.default()
    return HTTPEmbedder(), HTTPChat()
