"""Canonical serialization, hashing, and run clocks.

Every persisted record goes through ``canonical_json`` so that transcript
bytes (and therefore transcript hashes) are stable across executions.
"""

from __future__ import annotations

import hashlib
import json
import time
from typing import Any


def canonical_json(obj: Any) -> str:
    """Serialize with sorted keys and no insignificant whitespace."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_obj(obj: Any) -> str:
    return sha256_text(canonical_json(obj))


class SimClock:
    """Deterministic clock for scripted runs.

    Advances by a fixed tick per provider call, so durations persisted in
    the transcript are reproducible byte-for-byte. State is checkpointable.
    """

    def __init__(self, start: float = 0.0, tick: float = 0.01):
        self._now = start
        self.tick = tick

    def now(self) -> float:
        return self._now

    def advance(self) -> float:
        """Advance by one tick; returns the elapsed tick."""
        self._now = round(self._now + self.tick, 9)
        return self.tick

    def to_dict(self) -> dict:
        return {"now": self._now, "tick": self.tick}

    @classmethod
    def from_dict(cls, d: dict) -> "SimClock":
        clock = cls(start=d["now"], tick=d["tick"])
        return clock


class WallClock:
    """Real-time clock used for live provider runs."""

    tick = 0.0

    def now(self) -> float:
        return time.perf_counter()

    def advance(self) -> float:
        return 0.0

    def to_dict(self) -> dict:
        return {"wall": True}
