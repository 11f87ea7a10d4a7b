"""Text-generation backends behind one request/response contract.

Two implementations: a networked chat-completion client with retry and
backoff, and an offline mock whose responses come from a fixture table.
Both expose ``generate(prompt, key=...)`` and carry their decoding
configuration, so every caller is agnostic about where text comes from.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from typing import Callable, Mapping, Protocol, Sequence

import requests

ENV_API_KEY = "SCISENT_API_KEY"
ENV_API_BASE = "SCISENT_API_BASE"

BACKOFF_BASE_SECONDS = 0.5


class BackendError(Exception):
    """Base class for all backend failures."""


class NetworkError(BackendError):
    pass


class RateLimitedError(BackendError):
    pass


class ProtocolError(BackendError):
    pass


class AuthError(BackendError):
    pass


class MissingFixtureError(BackendError):
    def __init__(self, key: str):
        super().__init__(f"no fixture for key {key!r}")
        self.key = key


@dataclass(frozen=True)
class BackendConfig:
    """Endpoint and decoding parameters for one model.

    Defaults follow the deterministic decoding setup used throughout:
    temperature 0, top_p 0, top_k 1. ``top_k=None`` means the wire
    protocol variant has no such field and it is omitted from requests.
    """

    endpoint_url: str = ""
    model_id: str = ""
    temperature: float = 0.0
    top_p: float = 0.0
    top_k: int | None = 1
    max_tokens: int = 256
    timeout: float = 60.0
    max_retries: int = 3
    clamp_top_p_min: bool = False

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0.0 <= self.top_p <= 1.0:
            raise ValueError("top_p must be in [0, 1]")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be a positive integer or None")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")

    def to_dict(self) -> dict:
        return {
            "endpoint_url": self.endpoint_url,
            "model_id": self.model_id,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "top_k": self.top_k,
            "max_tokens": self.max_tokens,
            "timeout": self.timeout,
            "max_retries": self.max_retries,
            "clamp_top_p_min": self.clamp_top_p_min,
        }


@dataclass(frozen=True)
class GenerationResult:
    """One model response plus enough metadata to reproduce the request."""

    text: str
    model_id: str
    request_fingerprint: str
    latency: float


def request_fingerprint(config: BackendConfig, prompt: str) -> str:
    """Stable hash of everything that determines a generation request.

    A pure function of (model_id, prompt, temperature, top_p, top_k,
    max_tokens); used as the cache key for prediction reuse.
    """
    payload = json.dumps(
        {
            "model_id": config.model_id,
            "prompt": prompt,
            "temperature": config.temperature,
            "top_p": config.top_p,
            "top_k": config.top_k,
            "max_tokens": config.max_tokens,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class Backend(Protocol):
    """Minimal surface shared by the HTTP client and the mock."""

    config: BackendConfig
    adjustments: tuple[str, ...]

    def generate(self, prompt: str, *, key: str | None = None) -> GenerationResult: ...


class ChatCompletionsBackend:
    """HTTP client for a chat-completions endpoint.

    Sends the prompt as a single user message, returns the first choice's
    message content verbatim, and retries transient failures (timeouts,
    connection errors, HTTP 429 and 5xx) with deterministic exponential
    backoff. Other 4xx responses are never retried. The API key is read
    from ``SCISENT_API_KEY`` unless given explicitly; ``SCISENT_API_BASE``
    overrides the configured endpoint URL.
    """

    def __init__(
        self,
        config: BackendConfig,
        *,
        api_key: str | None = None,
        session: object | None = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.monotonic,
        max_concurrency: int = 4,
    ):
        self.config = config
        self._api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY)
        if not self._api_key:
            raise AuthError(f"no API key: pass api_key or set {ENV_API_KEY}")
        base = os.environ.get(ENV_API_BASE) or config.endpoint_url
        if not base:
            raise ValueError(f"no endpoint: set endpoint_url or {ENV_API_BASE}")
        self._url = base.rstrip("/") + "/chat/completions"
        self._session = session if session is not None else requests.Session()
        self._sleep = sleep
        self._clock = clock
        self._semaphore = threading.Semaphore(max_concurrency)
        self.adjustments = self._wire_adjustments()

    def _wire_adjustments(self) -> tuple[str, ...]:
        notes = []
        if self.config.clamp_top_p_min and self.config.top_p == 0.0:
            notes.append("top_p substituted with 1e-9 (clamp_top_p_min)")
        if self.config.top_k is None:
            notes.append("top_k omitted from wire payload")
        return tuple(notes)

    def _payload(self, prompt: str) -> dict:
        top_p = self.config.top_p
        if self.config.clamp_top_p_min and top_p == 0.0:
            top_p = 1e-9
        payload = {
            "model": self.config.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "top_p": top_p,
            "max_tokens": self.config.max_tokens,
        }
        if self.config.top_k is not None:
            payload["top_k"] = self.config.top_k
        return payload

    def generate(self, prompt: str, *, key: str | None = None) -> GenerationResult:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        payload = self._payload(prompt)
        headers = {"Authorization": f"Bearer {self._api_key}"}
        last_error: BackendError | None = None
        started = self._clock()
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self._sleep(BACKOFF_BASE_SECONDS * 2 ** (attempt - 1))
            try:
                with self._semaphore:
                    response = self._session.post(
                        self._url, json=payload, headers=headers, timeout=self.config.timeout
                    )
            except (requests.Timeout, requests.ConnectionError) as exc:
                last_error = NetworkError(str(exc))
                continue
            status = response.status_code
            if status in (401, 403):
                raise AuthError(f"HTTP {status} from {self._url}")
            if status == 429:
                last_error = RateLimitedError(f"HTTP 429 from {self._url}")
                continue
            if status >= 500:
                last_error = NetworkError(f"HTTP {status} from {self._url}")
                continue
            if status >= 400:
                raise ProtocolError(f"HTTP {status} from {self._url}: {response.text[:200]}")
            text = self._extract_content(response)
            return GenerationResult(
                text=text,
                model_id=self.config.model_id,
                request_fingerprint=request_fingerprint(self.config, prompt),
                latency=self._clock() - started,
            )
        assert last_error is not None
        raise last_error

    @staticmethod
    def _extract_content(response) -> str:
        try:
            data = response.json()
        except ValueError:
            raise ProtocolError("response body is not JSON") from None
        choices = data.get("choices") if isinstance(data, dict) else None
        if not choices:
            raise ProtocolError("response JSON has no choices")
        message = choices[0].get("message") if isinstance(choices[0], dict) else None
        if not isinstance(message, dict) or not isinstance(message.get("content"), str):
            raise ProtocolError("response JSON missing choices[0].message.content")
        return message["content"]


class MockBackend:
    """Deterministic fixture-table backend; zero network activity.

    Table keys are matched in order against the caller-supplied key
    (usually a sentence id), the request fingerprint, and the raw prompt.
    A string value is returned on every call; a list value is consumed
    sequentially (the last element repeats once exhausted), which lets
    fixtures drive regeneration loops. Unknown keys return ``default``
    when one is configured and raise :class:`MissingFixtureError`
    otherwise.
    """

    def __init__(
        self,
        table: Mapping[str, str | Sequence[str]],
        *,
        default: str | None = None,
        config: BackendConfig | None = None,
    ):
        self.config = config or BackendConfig(endpoint_url="mock://local", model_id="mock")
        self.adjustments: tuple[str, ...] = ()
        self.default = default
        self.calls = 0
        self._table: dict[str, str | tuple[str, ...]] = {}
        for fixture_key, value in table.items():
            if isinstance(value, str):
                self._table[fixture_key] = value
            else:
                seq = tuple(value)
                if not seq:
                    raise ValueError(f"fixture {fixture_key!r}: empty response sequence")
                self._table[fixture_key] = seq
        self._cursors: dict[str, int] = {}
        self._lock = threading.Lock()

    def generate(self, prompt: str, *, key: str | None = None) -> GenerationResult:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        fingerprint = request_fingerprint(self.config, prompt)
        with self._lock:
            self.calls += 1
            text = self._lookup(prompt, key, fingerprint)
        return GenerationResult(
            text=text,
            model_id=self.config.model_id,
            request_fingerprint=fingerprint,
            latency=0.0,
        )

    def _lookup(self, prompt: str, key: str | None, fingerprint: str) -> str:
        for candidate in (key, fingerprint, prompt):
            if candidate is not None and candidate in self._table:
                value = self._table[candidate]
                if isinstance(value, str):
                    return value
                cursor = self._cursors.get(candidate, 0)
                self._cursors[candidate] = cursor + 1
                return value[min(cursor, len(value) - 1)]
        if self.default is not None:
            return self.default
        raise MissingFixtureError(key if key is not None else fingerprint)
