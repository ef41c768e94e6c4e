"""Uniform chat-completion client with model profiles, token budgeting,
oldest-first truncation, retries, caching, and a deterministic mock
backend for tests and offline runs.

Token counting is rule-pluggable with a whitespace-word default; model
limits are enforced conservatively through a safety factor because exact
subword tokenizers are out of scope. Every exchange can be persisted to
an append-only log so metrics are recomputable offline.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

from . import jsonl


class GatewayError(Exception):
    pass


class BudgetError(GatewayError):
    """Prompt exceeds the profile's enforced source budget."""


class TransportError(GatewayError):
    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


# --- token counting ----------------------------------------------------

_TOKEN_RULES: dict[str, Callable[[str], int]] = {
    "whitespace": lambda text: len(text.split()),
}


def register_token_rule(name: str, fn: Callable[[str], int]) -> None:
    _TOKEN_RULES[name] = fn


def estimate_tokens(text: str, rule: str = "whitespace") -> int:
    if rule not in _TOKEN_RULES:
        raise GatewayError(f"unknown token rule {rule!r}")
    return _TOKEN_RULES[rule](text)


@dataclass(frozen=True)
class TokenBudget:
    limit: int
    rule: str = "whitespace"

    def estimate(self, text: str) -> int:
        return estimate_tokens(text, self.rule)


def truncate_oldest(
    updates: Sequence[str], budget: TokenBudget, reserved: int = 0
) -> list[str]:
    """Drop whole updates from the front until the estimate fits.

    The most recent update is always retained; if it alone exceeds the
    remaining budget it is trimmed word by word from its front. Output is
    a contiguous suffix of the input (first element possibly trimmed).
    """
    if not updates:
        raise GatewayError("truncate_oldest got an empty update list")
    if reserved >= budget.limit:
        raise GatewayError(
            f"reserved tokens ({reserved}) leave no room under limit {budget.limit}"
        )
    available = budget.limit - reserved
    counts = [budget.estimate(u) for u in updates]
    start = 0
    while start < len(updates) - 1 and sum(counts[start:]) > available:
        start += 1
    kept = list(updates[start:])
    if sum(counts[start:]) > available:
        # only the most recent update is left; keep its trailing tokens
        words = kept[-1].split()
        kept[-1] = " ".join(words[len(words) - available :])
    return kept


# --- profiles ----------------------------------------------------------

@dataclass(frozen=True)
class ModelProfile:
    """Generation endpoint settings plus the token limits enforced on it."""

    profile_id: str
    backend: str = "mock"  # "mock" or "openai-chat"
    model: str = ""
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    source_limit: int = 512
    query_limit: int = 128
    target_limit: int = 400
    temperature: float = 0.0
    request_style: str = "prefix"  # "prefix" (T5-style) or "suffix" (chat-style)
    token_rule: str = "whitespace"
    safety_factor: float = 0.9

    def __post_init__(self):
        if self.source_limit <= 0 or self.query_limit <= 0 or self.target_limit <= 0:
            raise GatewayError("token limits must be positive")
        if self.query_limit > self.source_limit:
            raise GatewayError("query limit cannot exceed source limit")
        if self.request_style not in ("prefix", "suffix"):
            raise GatewayError(f"unknown request style {self.request_style!r}")

    @property
    def effective_source_limit(self) -> int:
        return int(self.source_limit * self.safety_factor)

    def budget(self) -> TokenBudget:
        return TokenBudget(limit=self.effective_source_limit, rule=self.token_rule)


BUILTIN_PROFILES = {
    "flan-t5-xl": ModelProfile(
        profile_id="flan-t5-xl",
        backend="openai-chat",
        model="flan-t5-xl",
        source_limit=512,
        request_style="prefix",
    ),
    "long-t5-xl": ModelProfile(
        profile_id="long-t5-xl",
        backend="openai-chat",
        model="long-t5-tglobal-xl",
        source_limit=4096,
        request_style="prefix",
    ),
    "gpt-3.5": ModelProfile(
        profile_id="gpt-3.5",
        backend="openai-chat",
        model="gpt-3.5-turbo",
        source_limit=3696,
        request_style="suffix",
    ),
    "mock": ModelProfile(profile_id="mock", backend="mock", request_style="suffix"),
    "mock-prefix": ModelProfile(
        profile_id="mock-prefix", backend="mock", request_style="prefix"
    ),
}


def profile_registry(overrides: Mapping[str, Mapping] | None = None) -> dict[str, ModelProfile]:
    """Built-in profiles plus config-file overrides/additions."""
    registry = dict(BUILTIN_PROFILES)
    for profile_id, fields in (overrides or {}).items():
        base = registry.get(profile_id)
        if base is not None:
            registry[profile_id] = replace(base, **fields)
        else:
            registry[profile_id] = ModelProfile(profile_id=profile_id, **fields)
    return registry


# --- exchanges ---------------------------------------------------------

def prompt_digest(profile_id: str, prompt: str, params: Mapping) -> str:
    payload = json.dumps(
        {"profile": profile_id, "prompt": prompt, "params": dict(params)},
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ChatExchange:
    profile_id: str
    prompt: str
    params: tuple[tuple[str, object], ...]
    response: str
    digest: str
    prompt_tokens: int
    response_tokens: int
    latency: float = 0.0
    retries: int = 0
    cache_hit: bool = False

    def to_record(self) -> dict:
        return {
            "profile_id": self.profile_id,
            "digest": self.digest,
            "prompt": self.prompt,
            "params": dict(self.params),
            "response": self.response,
            "prompt_tokens": self.prompt_tokens,
            "response_tokens": self.response_tokens,
            "latency": self.latency,
            "retries": self.retries,
            "cache_hit": self.cache_hit,
        }


# --- backends ----------------------------------------------------------

QUESTION_MARKER = "Generate five background questions"
ANSWER_MARKER = "list answers from the background text"


class MockBackend:
    """Deterministic offline backend.

    Responses come from a fixture table keyed by prompt digest; without a
    fixture entry a digest-driven synthesizer answers instead, so full
    pipeline runs are reproducible with no hand-built fixture file. The
    synthesizer understands the question-generation and answer-extraction
    instructions well enough to produce parseable output.
    """

    def __init__(self, fixtures: Mapping[str, str] | None = None, synthesize: bool = True):
        self.fixtures = dict(fixtures or {})
        self.synthesize = synthesize

    @classmethod
    def from_file(cls, path, synthesize: bool = True) -> "MockBackend":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(fixtures=data.get("responses", data), synthesize=synthesize)

    def complete(self, prompt: str, params: Mapping, digest: str) -> str:
        if digest in self.fixtures:
            return self.fixtures[digest]
        if not self.synthesize:
            raise TransportError(f"no fixture for digest {digest[:12]}…")
        return self._synthesize(prompt, digest)

    @staticmethod
    def _synthesize(prompt: str, digest: str) -> str:
        if QUESTION_MARKER in prompt:
            return "\n".join(
                f"{i}. What is the background of item {digest[i * 4 : i * 4 + 4]}?"
                for i in range(1, 6)
            )
        if ANSWER_MARKER in prompt:
            lines = []
            for i in range(1, 6):
                nibble = int(digest[i], 16)
                if nibble % 2:
                    lines.append(f"{i}. unanswerable")
                else:
                    lines.append(f"{i}. The background states fact {digest[i * 3 : i * 3 + 3]}.")
            return "\n".join(lines)
        # echo the tail of the updates section, not the instruction text
        body = prompt
        if "\n\n" in body:
            body = body.rsplit("\n\n", 1)[0]
        if "Background: " in body:
            body = body.split("Background: ", 1)[1]
        if body.startswith("summarize: "):
            body = body[len("summarize: ") :]
        words = body.split()
        tail = words[-24:] if len(words) > 24 else words
        return "Earlier, " + " ".join(tail)


class HttpChatBackend:
    """Chat-completions wire format over HTTPS; credential from env."""

    def __init__(self, profile: ModelProfile, timeout: float = 60.0):
        self.profile = profile
        self.timeout = timeout

    def complete(self, prompt: str, params: Mapping, digest: str) -> str:
        import requests

        api_key = os.environ.get(self.profile.api_key_env, "")
        if not api_key:
            raise TransportError(
                f"no credential in ${self.profile.api_key_env} for profile "
                f"{self.profile.profile_id!r}"
            )
        body = {
            "model": self.profile.model or self.profile.profile_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.get("temperature", self.profile.temperature),
            "max_tokens": params.get("max_tokens", self.profile.target_limit),
        }
        url = self.profile.base_url.rstrip("/") + "/chat/completions"
        try:
            response = requests.post(
                url,
                json=body,
                headers={"Authorization": f"Bearer {api_key}"},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(f"request failed: {exc}") from exc
        if response.status_code in (429,) or response.status_code >= 500:
            raise TransportError(
                f"transient status {response.status_code}", status=response.status_code
            )
        if response.status_code != 200:
            raise GatewayError(
                f"endpoint returned {response.status_code}: {response.text[:200]}"
            )
        data = response.json()
        return data["choices"][0]["message"]["content"]


# --- client ------------------------------------------------------------

@dataclass
class ClientConfig:
    cache_dir: str | None = None
    log_path: str | None = None
    max_retries: int = 3
    backoff: float = 0.5
    concurrency: int = 4
    fixtures_path: str | None = None


class ChatClient:
    """Blocking request/response client shared across threads.

    Identical (profile, prompt, params) requests are served from cache
    when a cache directory is configured; every completed exchange is
    appended to the log before being returned.
    """

    def __init__(
        self,
        profiles: Mapping[str, ModelProfile] | None = None,
        config: ClientConfig | None = None,
    ):
        self.profiles = dict(profiles or BUILTIN_PROFILES)
        self.config = config or ClientConfig()
        self._lock = threading.Lock()
        self._slots = threading.Semaphore(max(1, self.config.concurrency))
        self._memory_cache: dict[str, str] = {}
        fixtures = None
        if self.config.fixtures_path:
            fixtures = MockBackend.from_file(self.config.fixtures_path).fixtures
        self._mock = MockBackend(fixtures=fixtures)

    def profile(self, profile_id: str) -> ModelProfile:
        if profile_id not in self.profiles:
            raise GatewayError(f"unknown profile {profile_id!r}")
        return self.profiles[profile_id]

    def _cache_path(self, digest: str) -> Path | None:
        if not self.config.cache_dir:
            return None
        return Path(self.config.cache_dir) / f"{digest}.json"

    def _cache_get(self, digest: str) -> str | None:
        with self._lock:
            if digest in self._memory_cache:
                return self._memory_cache[digest]
        path = self._cache_path(digest)
        if path and path.exists():
            with open(path, "r", encoding="utf-8") as fh:
                response = json.load(fh)["response"]
            with self._lock:
                self._memory_cache[digest] = response
            return response
        return None

    def _cache_put(self, digest: str, response: str) -> None:
        with self._lock:
            self._memory_cache[digest] = response
        path = self._cache_path(digest)
        if path:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                json.dump({"response": response}, fh, sort_keys=True, ensure_ascii=False)

    def _log(self, exchange: ChatExchange) -> None:
        if not self.config.log_path:
            return
        with self._lock:
            jsonl.append_record(self.config.log_path, exchange.to_record())

    def complete(
        self, profile: ModelProfile | str, prompt: str, params: Mapping | None = None
    ) -> ChatExchange:
        if isinstance(profile, str):
            profile = self.profile(profile)
        params = dict(params or {})
        params.setdefault("temperature", profile.temperature)
        params.setdefault("max_tokens", profile.target_limit)

        prompt_tokens = estimate_tokens(prompt, profile.token_rule)
        if prompt_tokens > profile.effective_source_limit:
            raise BudgetError(
                f"prompt estimate {prompt_tokens} exceeds enforced budget "
                f"{profile.effective_source_limit} for profile {profile.profile_id!r}"
            )

        digest = prompt_digest(profile.profile_id, prompt, params)
        cached = self._cache_get(digest)
        if cached is not None:
            exchange = ChatExchange(
                profile_id=profile.profile_id,
                prompt=prompt,
                params=tuple(sorted(params.items())),
                response=cached,
                digest=digest,
                prompt_tokens=prompt_tokens,
                response_tokens=estimate_tokens(cached, profile.token_rule),
                cache_hit=True,
            )
            self._log(exchange)
            return exchange

        with self._slots:
            response, retries, latency = self._dispatch(profile, prompt, params, digest)

        self._cache_put(digest, response)
        exchange = ChatExchange(
            profile_id=profile.profile_id,
            prompt=prompt,
            params=tuple(sorted(params.items())),
            response=response,
            digest=digest,
            prompt_tokens=prompt_tokens,
            response_tokens=estimate_tokens(response, profile.token_rule),
            latency=latency,
            retries=retries,
        )
        self._log(exchange)
        return exchange

    def _dispatch(
        self, profile: ModelProfile, prompt: str, params: Mapping, digest: str
    ) -> tuple[str, int, float]:
        if profile.backend == "mock":
            # zero latency keeps mock pipeline output byte-stable
            return self._mock.complete(prompt, params, digest), 0, 0.0
        if profile.backend != "openai-chat":
            raise GatewayError(f"unknown backend {profile.backend!r}")
        backend = HttpChatBackend(profile)
        last: TransportError | None = None
        for attempt in range(self.config.max_retries + 1):
            start = time.monotonic()
            try:
                response = backend.complete(prompt, params, digest)
                return response, attempt, time.monotonic() - start
            except TransportError as exc:
                last = exc
                if attempt < self.config.max_retries:
                    time.sleep(self.config.backoff * (2**attempt))
        raise TransportError(
            f"exhausted {self.config.max_retries} retries: {last}", status=last.status
        )
