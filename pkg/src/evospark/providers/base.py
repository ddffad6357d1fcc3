"""Provider interface, call accounting, and the unified retry policy."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from ..errors import FixtureExhausted, ProviderError

DEFAULT_TEMPERATURE = 0.8


@dataclass
class ProviderSettings:
    """Backend configuration; endpoint/model come from env when unset."""

    endpoint: str | None = None
    api_key: str | None = None
    model: str | None = None
    temperature: float = DEFAULT_TEMPERATURE

    @classmethod
    def from_env(cls, env: dict | None = None) -> "ProviderSettings":
        import os

        env = env if env is not None else os.environ
        return cls(
            endpoint=env.get("EVOSPARK_API_BASE"),
            api_key=env.get("EVOSPARK_API_KEY"),
            model=env.get("EVOSPARK_MODEL"),
            temperature=float(env.get("EVOSPARK_TEMPERATURE", DEFAULT_TEMPERATURE)),
        )


@dataclass(frozen=True)
class CallRecord:
    call_id: int
    template_id: str
    prompt_sha256: str
    response: str
    latency_seconds: float
    prompt_tokens: int | None = None
    completion_tokens: int | None = None

    def to_dict(self) -> dict:
        return {
            "call_id": self.call_id,
            "template_id": self.template_id,
            "prompt_sha256": self.prompt_sha256,
            "response": self.response,
            "latency_seconds": self.latency_seconds,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
        }


@runtime_checkable
class Provider(Protocol):
    records: list[CallRecord]
    deterministic: bool

    def complete(self, template_id: str, prompt: str, *, temperature: float | None = None) -> tuple[str, CallRecord]:
        ...


def complete_with_retry(
    provider: Provider,
    template_id: str,
    prompt: str,
    *,
    temperature: float | None = None,
    attempts: int = 3,
    base_delay: float = 0.25,
) -> tuple[str, CallRecord]:
    """Retry transient provider failures with exponential backoff.

    Fixture exhaustion is not retried: replaying the same call cannot
    produce a response the fixture does not contain.
    """
    last: ProviderError | None = None
    for attempt in range(attempts):
        try:
            return provider.complete(template_id, prompt, temperature=temperature)
        except FixtureExhausted:
            raise
        except ProviderError as exc:
            last = exc
            if attempt < attempts - 1 and not provider.deterministic:
                time.sleep(base_delay * (2**attempt))
    raise ProviderError(f"{template_id}: failed after {attempts} attempts: {last}")
