"""Chat-completion providers: HTTP adapters plus a deterministic mock.

Every adapter exposes a single ``complete`` call.  The mock replays scripted
responses, either keyed by a fingerprint of the outgoing request or drawn in
order from a sequence; scripts can be loaded from JSON files so test suites
and the CLI run with no network access.
"""
from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from typing import Protocol

import httpx


class ProviderError(Exception):
    pass


class ProviderUnavailable(ProviderError):
    pass


class UnknownModel(ProviderError):
    pass


@dataclass(frozen=True)
class Message:
    role: str
    content: str


@dataclass(frozen=True)
class ProviderRequest:
    model_name: str
    messages: tuple[Message, ...]
    temperature: float = 0.0
    max_output_tokens: int = 4096


@dataclass(frozen=True)
class ProviderResponse:
    text: str
    input_tokens: int
    output_tokens: int
    latency_ms: float


class Provider(Protocol):
    name: str

    def complete(self, request: ProviderRequest) -> ProviderResponse: ...


def fingerprint_request(request: ProviderRequest) -> str:
    """Stable 16-hex-char digest of the outgoing message list."""
    payload = json.dumps(
        [[m.role, m.content] for m in request.messages],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _estimate_tokens(text: str) -> int:
    # Rough 4-chars-per-token heuristic; good enough for report plumbing.
    return max(1, len(text) // 4)


class MockProvider:
    """Replays canned responses.

    ``keyed`` maps request fingerprints to response lists (consumed per
    fingerprint, last entry repeating); ``sequence`` is a fallback consumed
    in order for requests with no keyed entry.
    """

    name = "mock"

    def __init__(
        self,
        keyed: dict[str, list[str]] | None = None,
        sequence: list[str] | None = None,
    ):
        self._keyed = {k: list(v) for k, v in (keyed or {}).items()}
        self._sequence = list(sequence or [])
        self._cursor = 0

    @classmethod
    def from_file(cls, path: str) -> "MockProvider":
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        return cls(keyed=data.get("keyed"), sequence=data.get("sequence"))

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        started = time.perf_counter()
        key = fingerprint_request(request)
        responses = self._keyed.get(key)
        if responses:
            text = responses.pop(0) if len(responses) > 1 else responses[0]
        elif self._cursor < len(self._sequence):
            text = self._sequence[self._cursor]
            self._cursor += 1
        else:
            raise ProviderUnavailable(
                f"mock script has no response for fingerprint {key}"
            )
        prompt = "".join(m.content for m in request.messages)
        return ProviderResponse(
            text=text,
            input_tokens=_estimate_tokens(prompt),
            output_tokens=_estimate_tokens(text),
            latency_ms=(time.perf_counter() - started) * 1000.0,
        )


@dataclass
class _HttpSpec:
    env_key: str
    base_url: str
    api_model: str


class HttpChatProvider:
    """Adapter for OpenAI-compatible chat-completion HTTP APIs."""

    def __init__(self, name: str, spec: _HttpSpec, timeout: float = 120.0):
        self.name = name
        self.spec = spec
        self.timeout = timeout

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        api_key = os.environ.get(self.spec.env_key, "")
        if not api_key:
            raise ProviderUnavailable(
                f"set {self.spec.env_key} to use provider {self.name!r}"
            )
        payload = {
            "model": self.spec.api_model,
            "messages": [
                {"role": m.role, "content": m.content} for m in request.messages
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        started = time.perf_counter()
        try:
            response = httpx.post(
                self.spec.base_url,
                json=payload,
                headers={"Authorization": f"Bearer {api_key}"},
                timeout=self.timeout,
            )
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(str(exc)) from exc
        latency_ms = (time.perf_counter() - started) * 1000.0
        data = response.json()
        usage = data.get("usage", {})
        return ProviderResponse(
            text=data["choices"][0]["message"]["content"],
            input_tokens=int(usage.get("prompt_tokens", 0)),
            output_tokens=int(usage.get("completion_tokens", 0)),
            latency_ms=latency_ms,
        )


class AnthropicProvider:
    def __init__(self, name: str, api_model: str, timeout: float = 120.0):
        self.name = name
        self.api_model = api_model
        self.timeout = timeout

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        api_key = os.environ.get("ANTHROPIC_API_KEY", "")
        if not api_key:
            raise ProviderUnavailable("set ANTHROPIC_API_KEY to use this provider")
        system = "\n".join(
            m.content for m in request.messages if m.role == "system"
        )
        payload = {
            "model": self.api_model,
            "max_tokens": request.max_output_tokens,
            "temperature": request.temperature,
            "messages": [
                {"role": m.role, "content": m.content}
                for m in request.messages
                if m.role != "system"
            ],
        }
        if system:
            payload["system"] = system
        started = time.perf_counter()
        try:
            response = httpx.post(
                "https://api.anthropic.com/v1/messages",
                json=payload,
                headers={"x-api-key": api_key, "anthropic-version": "2023-06-01"},
                timeout=self.timeout,
            )
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(str(exc)) from exc
        latency_ms = (time.perf_counter() - started) * 1000.0
        data = response.json()
        usage = data.get("usage", {})
        return ProviderResponse(
            text="".join(
                block.get("text", "") for block in data.get("content", [])
            ),
            input_tokens=int(usage.get("input_tokens", 0)),
            output_tokens=int(usage.get("output_tokens", 0)),
            latency_ms=latency_ms,
        )


_OPENAI_URL = "https://api.openai.com/v1/chat/completions"
_GOOGLE_URL = "https://generativelanguage.googleapis.com/v1beta/openai/chat/completions"
_FIREWORKS_URL = "https://api.fireworks.ai/inference/v1/chat/completions"

# Catalog of selectable models; "mock" is always available.
MODEL_CATALOG: dict[str, tuple[str, _HttpSpec | str]] = {
    "gpt-4o": ("openai", _HttpSpec("OPENAI_API_KEY", _OPENAI_URL, "gpt-4o")),
    "gpt-4o-mini": (
        "openai",
        _HttpSpec("OPENAI_API_KEY", _OPENAI_URL, "gpt-4o-mini"),
    ),
    "o3-mini": ("openai", _HttpSpec("OPENAI_API_KEY", _OPENAI_URL, "o3-mini")),
    "claude-3-5-sonnet": ("anthropic", "claude-3-5-sonnet-latest"),
    "gemini-2.0-flash": (
        "google",
        _HttpSpec("GOOGLE_API_KEY", _GOOGLE_URL, "gemini-2.0-flash"),
    ),
    "llama-3.3-70b": (
        "fireworks",
        _HttpSpec(
            "FIREWORKS_API_KEY",
            _FIREWORKS_URL,
            "accounts/fireworks/models/llama-v3p3-70b-instruct",
        ),
    ),
    "qwen-2.5-72b": (
        "fireworks",
        _HttpSpec(
            "FIREWORKS_API_KEY",
            _FIREWORKS_URL,
            "accounts/fireworks/models/qwen2p5-72b-instruct",
        ),
    ),
    "deepseek-v3": (
        "fireworks",
        _HttpSpec(
            "FIREWORKS_API_KEY", _FIREWORKS_URL, "accounts/fireworks/models/deepseek-v3"
        ),
    ),
}


def list_model_names() -> list[str]:
    return sorted(MODEL_CATALOG) + ["mock"]


def make_provider(name: str, mock_script: str | None = None) -> Provider:
    """Instantiate a provider by catalog name.

    For "mock", ``mock_script`` (or the BPMNKIT_MOCK_SCRIPT env var) names a
    JSON script file; without one the mock starts empty and fails on use.
    """
    if name == "mock":
        script = mock_script or os.environ.get("BPMNKIT_MOCK_SCRIPT")
        if script:
            return MockProvider.from_file(script)
        return MockProvider()
    entry = MODEL_CATALOG.get(name)
    if entry is None:
        raise UnknownModel(f"unknown model {name!r}")
    vendor, spec = entry
    if vendor == "anthropic":
        return AnthropicProvider(name, spec)  # type: ignore[arg-type]
    return HttpChatProvider(name, spec)  # type: ignore[arg-type]
