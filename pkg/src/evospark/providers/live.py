"""Live completion backend speaking the OpenAI-compatible chat API.

One non-streaming HTTP request per call; only the sampling temperature is
set explicitly, all other decoding parameters stay at backend defaults.
"""

from __future__ import annotations

import time

import httpx

from ..errors import ProviderError
from ..util import sha256_text
from .base import CallRecord, ProviderSettings


class LiveProvider:
    deterministic = False

    def __init__(
        self,
        settings: ProviderSettings | None = None,
        timeout: float = 120.0,
        client: httpx.Client | None = None,
    ):
        self.settings = settings or ProviderSettings.from_env()
        if not self.settings.endpoint or not self.settings.model:
            raise ProviderError(
                "live backend needs EVOSPARK_API_BASE and EVOSPARK_MODEL (or explicit settings)"
            )
        self.records: list[CallRecord] = []
        self._next_call_id = 1
        self._client = client or httpx.Client(timeout=timeout)

    def complete(self, template_id: str, prompt: str, *, temperature: float | None = None) -> tuple[str, CallRecord]:
        url = self.settings.endpoint.rstrip("/") + "/chat/completions"
        headers = {"Content-Type": "application/json"}
        if self.settings.api_key:
            headers["Authorization"] = f"Bearer {self.settings.api_key}"
        payload = {
            "model": self.settings.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature if temperature is not None else self.settings.temperature,
            "stream": False,
        }
        started = time.perf_counter()
        try:
            response = self._client.post(url, json=payload, headers=headers)
            response.raise_for_status()
            body = response.json()
            text = body["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"live completion failed: {exc}") from exc
        latency = time.perf_counter() - started
        usage = body.get("usage") or {}
        record = CallRecord(
            call_id=self._next_call_id,
            template_id=template_id,
            prompt_sha256=sha256_text(prompt),
            response=text,
            latency_seconds=latency,
            prompt_tokens=usage.get("prompt_tokens"),
            completion_tokens=usage.get("completion_tokens"),
        )
        self._next_call_id += 1
        self.records.append(record)
        return text, record
