"""Deterministic scripted provider for tests and acceptance runs.

Fixture entries are matched by template id in strict file order within each
id, so global interleave does not matter and fixtures survive cosmetic
prompt edits. An entry carrying ``prompt_sha256`` additionally pins the
rendered prompt (golden mode).
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

from ..errors import FixtureExhausted, ProviderError
from ..util import SimClock, sha256_text
from .base import CallRecord


@dataclass(frozen=True)
class FixtureEntry:
    template_id: str
    response: str
    prompt_sha256: str | None = None


def load_fixture(path: str | Path) -> list[FixtureEntry]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise ProviderError(f"fixture {path} must be a JSON array")
    entries = []
    for item in data:
        entries.append(
            FixtureEntry(
                template_id=item["template_id"],
                response=item["response"],
                prompt_sha256=item.get("prompt_sha256"),
            )
        )
    return entries


class ScriptedProvider:
    deterministic = True

    def __init__(self, entries: list[FixtureEntry], clock: SimClock | None = None):
        self.entries = list(entries)
        self.clock = clock or SimClock()
        self.records: list[CallRecord] = []
        self._queues: dict[str, list[FixtureEntry]] = defaultdict(list)
        for entry in self.entries:
            self._queues[entry.template_id].append(entry)
        self._cursors: dict[str, int] = defaultdict(int)
        self._next_call_id = 1

    # --- checkpoint support -------------------------------------------

    def cursor_state(self) -> dict:
        return {
            "cursors": dict(self._cursors),
            "next_call_id": self._next_call_id,
        }

    def restore_cursors(self, state: dict) -> None:
        self._cursors = defaultdict(int, {k: int(v) for k, v in state["cursors"].items()})
        self._next_call_id = int(state["next_call_id"])

    # --- provider interface ---------------------------------------------

    def complete(self, template_id: str, prompt: str, *, temperature: float | None = None) -> tuple[str, CallRecord]:
        queue = self._queues.get(template_id, [])
        cursor = self._cursors[template_id]
        if cursor >= len(queue):
            raise FixtureExhausted(
                f"no scripted response left for template {template_id!r} (consumed {cursor})"
            )
        entry = queue[cursor]
        self._cursors[template_id] = cursor + 1
        prompt_hash = sha256_text(prompt)
        if entry.prompt_sha256 is not None and entry.prompt_sha256 != prompt_hash:
            raise ProviderError(
                f"golden fixture mismatch for {template_id!r}: expected prompt "
                f"{entry.prompt_sha256[:12]}, got {prompt_hash[:12]}"
            )
        latency = self.clock.advance() or self.clock.tick
        record = CallRecord(
            call_id=self._next_call_id,
            template_id=template_id,
            prompt_sha256=prompt_hash,
            response=entry.response,
            latency_seconds=latency,
        )
        self._next_call_id += 1
        self.records.append(record)
        return entry.response, record
