"""Uniform chat interface over HTTP inference backends, plus a scripted engine for tests.

Every engine exposes the same ``chat(messages, config) -> str`` surface and
records each request/response pair in an :class:`InspectionLog`, so pipelines
stay inspectable regardless of which backend served them.
"""

from __future__ import annotations

import logging
import math
import os
import threading
import time
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence
from urllib.parse import urlparse

import requests

logger = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")
ENGINE_KINDS = ("openai_compatible", "ollama", "scripted")


class EngineError(Exception):
    """Base class for inference backend failures."""


class TransportError(EngineError):
    """Network failure or HTTP status >= 400."""

    def __init__(self, message: str, status: int | None = None, body: str | None = None):
        super().__init__(message)
        self.status = status
        self.body = body


class AuthError(TransportError):
    """HTTP 401: the backend rejected our credentials."""


class ProtocolError(EngineError):
    """Response body does not match the backend's documented shape."""


class EmptyCompletion(EngineError):
    """Backend returned zero-length assistant text."""


class NoRuleMatched(EngineError):
    """No scripted rule matched the prompt; signals a test-fixture gap."""


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown chat role {self.role!r}")
        if self.role in ("user", "assistant") and not self.content:
            raise ValueError(f"{self.role} message content must be non-empty")


@dataclass(frozen=True)
class GenerationConfig:
    temperature: float = 0.0
    max_tokens: int = 4096
    stop_sequences: tuple[str, ...] = ()

    def __post_init__(self):
        if not math.isfinite(self.temperature) or self.temperature < 0:
            raise ValueError(f"temperature must be finite and >= 0, got {self.temperature}")
        if self.max_tokens < 1:
            raise ValueError(f"max_tokens must be >= 1, got {self.max_tokens}")
        object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))


@dataclass(frozen=True)
class EngineDescriptor:
    """Serializable pointer to a backend; resolve with :func:`engine_from_descriptor`."""

    kind: str
    base_url: str = ""
    model: str = ""
    api_key_env: str = ""

    def __post_init__(self):
        if self.kind not in ENGINE_KINDS:
            raise ValueError(f"unknown engine kind {self.kind!r}")
        if self.kind != "scripted":
            parsed = urlparse(self.base_url)
            if not parsed.scheme or not parsed.netloc:
                raise ValueError(f"base_url must be an absolute URL, got {self.base_url!r}")
            if not self.model:
                raise ValueError(f"model must be non-empty for {self.kind} engines")


@dataclass(frozen=True)
class LogEntry:
    engine: str
    request: dict
    response: str | None
    error: str | None
    timestamp: float


class InspectionLog:
    """Append-only, thread-safe record of every chat call made through an engine."""

    def __init__(self):
        self._entries: list[LogEntry] = []
        self._lock = threading.Lock()

    def append(self, entry: LogEntry) -> None:
        with self._lock:
            self._entries.append(entry)

    def entries(self) -> list[LogEntry]:
        with self._lock:
            return list(self._entries)

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


class InferenceEngine:
    """Shared chat() machinery: precondition checks, one retry, inspection logging.

    Subclasses implement ``_complete(messages, config) -> str``. Adapters hold no
    per-request state, so a single engine may be used from multiple threads.
    """

    kind = "base"

    def __init__(self, log: InspectionLog | None = None, retry_backoff: float = 1.0):
        self.log = log if log is not None else InspectionLog()
        self.retry_backoff = retry_backoff

    def describe(self) -> str:
        return self.kind

    def chat(self, messages: Sequence[ChatMessage], config: GenerationConfig | None = None) -> str:
        config = config or GenerationConfig()
        messages = list(messages)
        if not messages:
            raise ValueError("messages must be non-empty")
        if messages[-1].role != "user":
            raise ValueError("last message must have role 'user'")
        request = {
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "config": {
                "temperature": config.temperature,
                "max_tokens": config.max_tokens,
                "stop_sequences": list(config.stop_sequences),
            },
        }
        try:
            text = self._complete_with_retry(messages, config)
            if text == "":
                raise EmptyCompletion(f"{self.describe()} returned empty assistant text")
        except EngineError as exc:
            self._record(request, None, f"{type(exc).__name__}: {exc}")
            raise
        self._record(request, text, None)
        return text

    def _record(self, request: dict, response: str | None, error: str | None) -> None:
        self.log.append(LogEntry(self.describe(), request, response, error, time.time()))

    def _complete_with_retry(self, messages, config) -> str:
        try:
            return self._complete(messages, config)
        except AuthError:
            raise  # a rejected key will not heal on retry
        except TransportError as exc:
            logger.warning("transport error, retrying once in %.1fs: %s", self.retry_backoff, exc)
            time.sleep(self.retry_backoff)
            return self._complete(messages, config)

    def _complete(self, messages: Sequence[ChatMessage], config: GenerationConfig) -> str:
        raise NotImplementedError


def _post_json(url: str, payload: dict, headers: Mapping[str, str], timeout: float) -> dict:
    try:
        resp = requests.post(url, json=payload, headers=dict(headers), timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(f"request to {url} failed: {exc}") from exc
    if resp.status_code == 401:
        raise AuthError(f"authentication rejected by {url}", status=401, body=resp.text)
    if resp.status_code >= 400:
        raise TransportError(f"HTTP {resp.status_code} from {url}", status=resp.status_code, body=resp.text)
    try:
        return resp.json()
    except ValueError as exc:
        raise ProtocolError(f"non-JSON response from {url}") from exc


class OpenAICompatibleEngine(InferenceEngine):
    """POST {base_url}/chat/completions; speaks the OpenAI chat-completions wire shape."""

    kind = "openai_compatible"

    def __init__(self, base_url: str, model: str, api_key_env: str = "",
                 log: InspectionLog | None = None, timeout: float = 300.0, retry_backoff: float = 1.0):
        super().__init__(log, retry_backoff)
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout

    def describe(self) -> str:
        return f"{self.kind}:{self.model}@{self.base_url}"

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env, "") if self.api_key_env else ""
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _complete(self, messages, config) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": config.temperature,
            "max_tokens": config.max_tokens,
            "stop": list(config.stop_sequences),
        }
        body = _post_json(f"{self.base_url}/chat/completions", payload, self._headers(), self.timeout)
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"response lacks choices[0].message.content: {body!r:.200}") from exc
        if not isinstance(content, str):
            raise ProtocolError(f"message content is not a string: {content!r:.200}")
        return content


class OllamaEngine(InferenceEngine):
    """POST {base_url}/api/chat with streaming disabled."""

    kind = "ollama"

    def __init__(self, base_url: str, model: str, api_key_env: str = "",
                 log: InspectionLog | None = None, timeout: float = 300.0, retry_backoff: float = 1.0):
        super().__init__(log, retry_backoff)
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout

    def describe(self) -> str:
        return f"{self.kind}:{self.model}@{self.base_url}"

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env, "") if self.api_key_env else ""
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _complete(self, messages, config) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "stream": False,
            "options": {
                "temperature": config.temperature,
                "num_predict": config.max_tokens,
                "stop": list(config.stop_sequences),
            },
        }
        body = _post_json(f"{self.base_url}/api/chat", payload, self._headers(), self.timeout)
        try:
            content = body["message"]["content"]
        except (KeyError, TypeError) as exc:
            raise ProtocolError(f"response lacks message.content: {body!r:.200}") from exc
        if not isinstance(content, str):
            raise ProtocolError(f"message content is not a string: {content!r:.200}")
        return content


class ScriptedEngine(InferenceEngine):
    """Deterministic test double: ordered (substring matcher, response) rules, first match wins.

    The matcher is checked against the concatenation of all message contents, so
    rules can key on any part of the conversation. An empty matcher matches
    everything and is the conventional final catch-all.
    """

    kind = "scripted"

    def __init__(self, rules: Iterable[tuple[str, str]], log: InspectionLog | None = None):
        super().__init__(log, retry_backoff=0.0)
        self.rules = [(str(m), str(r)) for m, r in rules]
        if not self.rules:
            raise ValueError("rules must be non-empty")
        self._calls = 0
        self._calls_lock = threading.Lock()

    @property
    def call_count(self) -> int:
        with self._calls_lock:
            return self._calls

    def _complete(self, messages, config) -> str:
        with self._calls_lock:
            self._calls += 1
        prompt = "\n".join(m.content for m in messages)
        for matcher, response in self.rules:
            if matcher in prompt:
                return _cut_at_stop(response, config.stop_sequences)
        raise NoRuleMatched(f"no scripted rule matched a prompt starting {prompt[:80]!r}")


def _cut_at_stop(text: str, stop_sequences: Sequence[str]) -> str:
    cut = len(text)
    for stop in stop_sequences:
        if stop:
            idx = text.find(stop)
            if idx != -1:
                cut = min(cut, idx)
    return text[:cut]


def chat(engine: InferenceEngine, messages: Sequence[ChatMessage],
         config: GenerationConfig | None = None) -> str:
    """Send one chat turn through any engine; see :meth:`InferenceEngine.chat`."""
    return engine.chat(messages, config)


def engine_from_descriptor(descriptor: EngineDescriptor, *,
                           rules: Iterable[tuple[str, str]] | None = None,
                           log: InspectionLog | None = None,
                           timeout: float = 300.0,
                           retry_backoff: float = 1.0) -> InferenceEngine:
    """Build a live engine from a descriptor. Scripted engines need their rules passed here."""
    if descriptor.kind == "openai_compatible":
        return OpenAICompatibleEngine(descriptor.base_url, descriptor.model, descriptor.api_key_env,
                                      log=log, timeout=timeout, retry_backoff=retry_backoff)
    if descriptor.kind == "ollama":
        return OllamaEngine(descriptor.base_url, descriptor.model, descriptor.api_key_env,
                            log=log, timeout=timeout, retry_backoff=retry_backoff)
    if descriptor.kind == "scripted":
        if rules is None:
            raise ValueError("scripted engines require rules")
        return ScriptedEngine(rules, log=log)
    raise ValueError(f"unknown engine kind {descriptor.kind!r}")
