"""Stratified narrative memory: four stores plus the event-end metabolism.

Stores per run:

* episodic buffer — short-lived per-event turn cache, cleared at event close
* shared knowledge base — write-once global truths
* role episodic log — append-only, hash-chained provenance per role
* role social snapshot — the one mutable store, updated strictly in place

Relation state is a mapping with exactly one edge per counterpart, which
structurally rules out stacked, contradictory edges. Counterparts can be
added (roster growth) but never removed.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from .errors import (
    ClosedEvent,
    EmptyEventBuffer,
    ImmutabilityError,
    UnknownKey,
    UnknownRole,
    ValidationError,
)
from .providers.base import Provider, complete_with_retry
from .providers.schemas import RelationEdge, parse_structured
from .providers.templates import render_prompt
from .util import canonical_json, sha256_obj

DETAIL_WORD_CAP = 500  # prose bound per relation edge
DEFAULT_INTENSITY_THRESHOLD = 3.0


@dataclass(frozen=True)
class EebEntry:
    event_id: str
    turn_id: int
    role_code: str
    counterparts: tuple[str, ...]
    utterance: str
    action: str
    spatial_anchor: str
    timestamp: float

    def to_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "turn_id": self.turn_id,
            "role_code": self.role_code,
            "counterparts": list(self.counterparts),
            "utterance": self.utterance,
            "action": self.action,
            "spatial_anchor": self.spatial_anchor,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EebEntry":
        return cls(
            event_id=d["event_id"],
            turn_id=d["turn_id"],
            role_code=d["role_code"],
            counterparts=tuple(d["counterparts"]),
            utterance=d["utterance"],
            action=d["action"],
            spatial_anchor=d["spatial_anchor"],
            timestamp=d["timestamp"],
        )


@dataclass(frozen=True)
class SwkbEntry:
    key: str
    body: str
    origin: str  # "genesis" | "ecgp_grounding"

    def to_dict(self) -> dict:
        return {"key": self.key, "body": self.body, "origin": self.origin}


@dataclass(frozen=True)
class RebRecord:
    """One link of a role's provenance chain.

    Kinds: ``genesis`` (registration), ``reflection`` (committed
    metabolism), ``raw`` (below-threshold or validation-skipped event,
    archived turns only), ``roster_growth`` (a new counterpart edge was
    added). Every kind carries pre/post snapshot hashes so any in-place
    tampering breaks the chain.
    """

    seq: int
    kind: str
    event_id: str
    role_code: str
    summary: str | None
    pre_hash: str
    post_hash: str
    archived_turn_ids: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "kind": self.kind,
            "event_id": self.event_id,
            "role_code": self.role_code,
            "summary": self.summary,
            "pre_hash": self.pre_hash,
            "post_hash": self.post_hash,
            "archived_turn_ids": list(self.archived_turn_ids),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RebRecord":
        return cls(
            seq=d["seq"],
            kind=d["kind"],
            event_id=d["event_id"],
            role_code=d["role_code"],
            summary=d["summary"],
            pre_hash=d["pre_hash"],
            post_hash=d["post_hash"],
            archived_turn_ids=tuple(d["archived_turn_ids"]),
        )


@dataclass
class RsbSnapshot:
    """A role's current cognition: profile, status, goals, social edges."""

    role_code: str
    profile: str
    status: str
    goals: tuple[str, ...] = ()
    relations: dict[str, RelationEdge] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "role_code": self.role_code,
            "profile": self.profile,
            "status": self.status,
            "goals": list(self.goals),
            "relations": {k: v.to_dict() for k, v in self.relations.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RsbSnapshot":
        return cls(
            role_code=d["role_code"],
            profile=d["profile"],
            status=d["status"],
            goals=tuple(d["goals"]),
            relations={k: RelationEdge.from_dict(v) for k, v in d["relations"].items()},
        )

    def hash(self) -> str:
        return sha256_obj(self.to_dict())

    def clone(self) -> "RsbSnapshot":
        return RsbSnapshot.from_dict(copy.deepcopy(self.to_dict()))


@dataclass(frozen=True)
class MetabolismOutcome:
    role_code: str
    event_id: str
    status: str  # "committed" | "skipped"
    reason: str  # "reflected" | "below_threshold" | "validation_failed"
    intensity: float
    pre_hash: str
    post_hash: str
    relations_changed: tuple[str, ...] = ()
    profile_changed: bool = False

    def to_dict(self) -> dict:
        return {
            "role_code": self.role_code,
            "event_id": self.event_id,
            "status": self.status,
            "reason": self.reason,
            "intensity": self.intensity,
            "pre_hash": self.pre_hash,
            "post_hash": self.post_hash,
            "relations_changed": list(self.relations_changed),
            "profile_changed": self.profile_changed,
        }


def truncate_detail(detail: str, cap: int = DETAIL_WORD_CAP) -> tuple[str, bool]:
    """Cap a relation detail at ``cap`` words, cutting at a sentence boundary."""
    words = detail.split()
    if len(words) <= cap:
        return detail, False
    head = " ".join(words[:cap])
    boundary = max(head.rfind("."), head.rfind("!"), head.rfind("?"))
    if boundary > 0:
        head = head[: boundary + 1]
    return head, True


def render_history(turns: list[EebEntry]) -> str:
    lines = []
    for t in turns:
        anchor = f"{t.spatial_anchor} " if t.spatial_anchor else ""
        lines.append(f"{t.role_code}: {anchor}({t.action}) \"{t.utterance}\"")
    return "\n".join(lines)


class SnmState:
    """All four stores for one run; single-writer, readers get copies."""

    def __init__(self) -> None:
        self._buffer: list[EebEntry] = []
        self._open_event: str | None = None
        self._closed_events: set[str] = set()
        self._swkb: dict[str, SwkbEntry] = {}
        self._reb: dict[str, list[RebRecord]] = {}
        self._rsb: dict[str, RsbSnapshot] = {}
        self.incidents: list[str] = []

    # --- roles ----------------------------------------------------------

    def roles(self) -> list[str]:
        return list(self._rsb)

    def has_role(self, role_code: str) -> bool:
        return role_code in self._rsb

    def _require_role(self, role_code: str) -> RsbSnapshot:
        try:
            return self._rsb[role_code]
        except KeyError:
            raise UnknownRole(f"role {role_code!r} is not registered") from None

    def _append_reb(
        self,
        role_code: str,
        kind: str,
        event_id: str,
        summary: str | None,
        pre_hash: str,
        post_hash: str,
        archived_turn_ids: tuple[int, ...] = (),
    ) -> RebRecord:
        log = self._reb.setdefault(role_code, [])
        record = RebRecord(
            seq=len(log),
            kind=kind,
            event_id=event_id,
            role_code=role_code,
            summary=summary,
            pre_hash=pre_hash,
            post_hash=post_hash,
            archived_turn_ids=archived_turn_ids,
        )
        log.append(record)
        return record

    def register_roster(self, members: list[dict]) -> None:
        """Bulk genesis registration with full cross edges, one genesis record each."""
        codes = [m["role_code"] for m in members]
        for m in members:
            code = m["role_code"]
            if code in self._rsb:
                raise ImmutabilityError(f"role {code!r} already registered")
            self._rsb[code] = RsbSnapshot(
                role_code=code,
                profile=m.get("profile", ""),
                status=m.get("status", ""),
                goals=tuple(m.get("goals", ())),
                relations={
                    other: RelationEdge(relation=(), detail="")
                    for other in codes
                    if other != code
                },
            )
        for code in codes:
            snapshot = self._rsb[code]
            self._append_reb(code, "genesis", "genesis", "initial snapshot", "", snapshot.hash())

    def register_role(
        self,
        role_code: str,
        profile: str,
        status: str = "",
        goals: tuple[str, ...] = (),
        event_id: str = "genesis",
    ) -> None:
        """Register one role mid-run; existing roles grow a reciprocal edge."""
        if role_code in self._rsb:
            raise ImmutabilityError(f"role {role_code!r} already registered")
        existing = list(self._rsb)
        self._rsb[role_code] = RsbSnapshot(
            role_code=role_code,
            profile=profile,
            status=status,
            goals=goals,
            relations={other: RelationEdge(relation=(), detail="") for other in existing},
        )
        self._append_reb(
            role_code, "genesis", event_id, "initial snapshot", "", self._rsb[role_code].hash()
        )
        for other in existing:
            snapshot = self._rsb[other]
            pre = snapshot.hash()
            snapshot.relations[role_code] = RelationEdge(relation=(), detail="")
            self._append_reb(
                other, "roster_growth", event_id, f"met {role_code}", pre, snapshot.hash()
            )

    # --- episodic buffer --------------------------------------------------

    def open_event(self, event_id: str) -> None:
        if event_id in self._closed_events:
            raise ClosedEvent(f"event {event_id!r} was already consolidated")
        self._open_event = event_id

    @property
    def current_event(self) -> str | None:
        return self._open_event

    def record_turn(self, entry: EebEntry) -> None:
        if entry.event_id in self._closed_events:
            raise ClosedEvent(f"event {entry.event_id!r} was already consolidated")
        if entry.event_id != self._open_event:
            raise ClosedEvent(
                f"event {entry.event_id!r} is not the open event ({self._open_event!r})"
            )
        previous = [e.turn_id for e in self._buffer if e.event_id == entry.event_id]
        if previous and entry.turn_id <= max(previous):
            raise ClosedEvent(
                f"turn ids must increase within an event: {entry.turn_id} after {max(previous)}"
            )
        self._buffer.append(entry)

    def eeb_turns(self, event_id: str | None = None) -> list[EebEntry]:
        if event_id is None:
            return list(self._buffer)
        return [e for e in self._buffer if e.event_id == event_id]

    def compute_intensity(self, role_code: str, event_id: str) -> float:
        """Actor turns count 1.0, counterpart turns 0.5."""
        self._require_role(role_code)
        as_actor = 0
        as_counterpart = 0
        for entry in self._buffer:
            if entry.event_id != event_id:
                continue
            if entry.role_code == role_code:
                as_actor += 1
            elif role_code in entry.counterparts:
                as_counterpart += 1
        return as_actor + 0.5 * as_counterpart

    def close_event(self, event_id: str) -> None:
        self._buffer = [e for e in self._buffer if e.event_id != event_id]
        self._closed_events.add(event_id)
        if self._open_event == event_id:
            self._open_event = None

    # --- shared knowledge ---------------------------------------------------

    def get_swkb(self, key: str) -> SwkbEntry:
        try:
            return self._swkb[key]
        except KeyError:
            raise UnknownKey(f"no knowledge entry under key {key!r}") from None

    def append_swkb(self, entry: SwkbEntry) -> None:
        if entry.key in self._swkb:
            raise ImmutabilityError(f"knowledge key {entry.key!r} is write-once")
        self._swkb[entry.key] = entry

    def swkb_keys(self) -> list[str]:
        return list(self._swkb)

    # --- role episodic log ----------------------------------------------------

    def reb_log(self, role_code: str) -> tuple[RebRecord, ...]:
        self._require_role(role_code)
        return tuple(self._reb.get(role_code, ()))

    def reflection_count(self, role_code: str) -> int:
        return sum(1 for r in self.reb_log(role_code) if r.kind == "reflection")

    def verify_reb_chain(self, role_code: str) -> bool:
        records = self.reb_log(role_code)
        if not records:
            return True
        if records[0].pre_hash != "" or records[0].kind != "genesis":
            return False
        for prev, nxt in zip(records, records[1:]):
            if prev.post_hash != nxt.pre_hash:
                return False
            if nxt.seq != prev.seq + 1:
                return False
        return records[-1].post_hash == self._rsb[role_code].hash()

    # --- social snapshot -------------------------------------------------------

    def query_rsb(self, role_code: str) -> RsbSnapshot:
        return self._require_role(role_code).clone()

    def rsb_hash(self, role_code: str) -> str:
        return self._require_role(role_code).hash()

    # --- metabolism ----------------------------------------------------------

    def _validate_relation_update(
        self, current: dict[str, RelationEdge], proposed: dict[str, RelationEdge]
    ) -> None:
        missing = sorted(current.keys() - proposed.keys())
        if missing:
            raise ValidationError("missing_key", f"relation update deleted characters {missing}")
        extra = sorted(proposed.keys() - current.keys())
        if extra:
            raise ValidationError("extra_key", f"relation update invented characters {extra}")

    def run_metabolism(
        self,
        role_code: str,
        event_id: str,
        provider: Provider,
        threshold: float = DEFAULT_INTENSITY_THRESHOLD,
        *,
        validation_attempts: int = 3,
    ) -> MetabolismOutcome:
        """Reflect on one concluded event for one role.

        Below the intensity threshold the event is archived raw and the
        snapshot stays untouched. Above it, relation and profile updates
        are requested, validated, and committed in place; persistent
        validation failure downgrades to a raw archive rather than ever
        committing unvalidated output. Buffer clearing happens at
        ``close_event`` so every participant metabolizes the same turns.
        """
        if event_id in self._closed_events:
            raise ClosedEvent(f"event {event_id!r} was already consolidated")
        snapshot = self._require_role(role_code)
        turns = self.eeb_turns(event_id)
        if not turns:
            raise EmptyEventBuffer(f"no buffered turns for event {event_id!r}")
        intensity = self.compute_intensity(role_code, event_id)
        pre_hash = snapshot.hash()
        archived = tuple(t.turn_id for t in turns)

        if intensity <= threshold:
            self._append_reb(role_code, "raw", event_id, None, pre_hash, pre_hash, archived)
            return MetabolismOutcome(
                role_code=role_code,
                event_id=event_id,
                status="skipped",
                reason="below_threshold",
                intensity=intensity,
                pre_hash=pre_hash,
                post_hash=pre_hash,
            )

        history_text = render_history(turns)
        relation_bindings = {
            "role_profile": snapshot.profile,
            "relation": canonical_json({k: v.to_dict() for k, v in snapshot.relations.items()}),
            "status": snapshot.status,
            "history_text": history_text,
        }
        profile_bindings = {
            "role_profile": canonical_json({"profile": snapshot.profile}),
            "status": snapshot.status,
            "history_text": history_text,
        }

        new_relations: dict[str, RelationEdge] | None = None
        new_profile: str | None = None
        failure: ValidationError | None = None
        prompt = render_prompt("UPDATE_RELATION", relation_bindings)
        for _ in range(validation_attempts):
            response, _record = complete_with_retry(provider, "UPDATE_RELATION", prompt)
            try:
                proposed = parse_structured(response, "relation-map")
                self._validate_relation_update(snapshot.relations, proposed)
                new_relations = proposed
                break
            except ValidationError as exc:
                failure = exc
        if new_relations is not None:
            prompt = render_prompt("UPDATE_PROFILE", profile_bindings)
            for _ in range(validation_attempts):
                response, _record = complete_with_retry(provider, "UPDATE_PROFILE", prompt)
                try:
                    new_profile = parse_structured(response, "profile-string")
                    break
                except ValidationError as exc:
                    failure = exc

        if new_relations is None or new_profile is None:
            self.incidents.append(
                f"metabolism skipped for {role_code} at {event_id}: "
                f"validation failed after {validation_attempts} attempts ({failure})"
            )
            self._append_reb(role_code, "raw", event_id, None, pre_hash, pre_hash, archived)
            return MetabolismOutcome(
                role_code=role_code,
                event_id=event_id,
                status="skipped",
                reason="validation_failed",
                intensity=intensity,
                pre_hash=pre_hash,
                post_hash=pre_hash,
            )

        changed: list[str] = []
        for counterpart, edge in new_relations.items():
            detail, truncated = truncate_detail(edge.detail)
            if truncated:
                self.incidents.append(
                    f"relation detail for {role_code}->{counterpart} truncated to "
                    f"{DETAIL_WORD_CAP} words at {event_id}"
                )
                edge = RelationEdge(relation=edge.relation, detail=detail)
            if snapshot.relations[counterpart] != edge:
                changed.append(counterpart)
            snapshot.relations[counterpart] = edge
        profile_changed = new_profile != snapshot.profile
        snapshot.profile = new_profile

        post_hash = snapshot.hash()
        summary = (
            f"event {event_id}: {len(turns)} turns assimilated; "
            f"relations updated for {', '.join(changed) if changed else 'no one'}; "
            f"profile {'updated' if profile_changed else 'unchanged'}"
        )
        self._append_reb(role_code, "reflection", event_id, summary, pre_hash, post_hash, archived)
        return MetabolismOutcome(
            role_code=role_code,
            event_id=event_id,
            status="committed",
            reason="reflected",
            intensity=intensity,
            pre_hash=pre_hash,
            post_hash=post_hash,
            relations_changed=tuple(changed),
            profile_changed=profile_changed,
        )

    def metabolize_event(
        self,
        role_codes: list[str],
        event_id: str,
        provider: Provider,
        threshold: float = DEFAULT_INTENSITY_THRESHOLD,
    ) -> list[MetabolismOutcome]:
        """Metabolize every participant of a concluded event, then clear its buffer."""
        outcomes = [
            self.run_metabolism(role, event_id, provider, threshold) for role in role_codes
        ]
        self.close_event(event_id)
        return outcomes

    # --- persistence -------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "buffer": [e.to_dict() for e in self._buffer],
            "open_event": self._open_event,
            "closed_events": sorted(self._closed_events),
            "swkb": [e.to_dict() for e in self._swkb.values()],
            "reb": {role: [r.to_dict() for r in log] for role, log in self._reb.items()},
            "rsb": {role: snap.to_dict() for role, snap in self._rsb.items()},
            "incidents": list(self.incidents),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SnmState":
        state = cls()
        state._buffer = [EebEntry.from_dict(e) for e in d["buffer"]]
        state._open_event = d["open_event"]
        state._closed_events = set(d["closed_events"])
        for entry in d["swkb"]:
            state._swkb[entry["key"]] = SwkbEntry(entry["key"], entry["body"], entry["origin"])
        state._reb = {
            role: [RebRecord.from_dict(r) for r in log] for role, log in d["reb"].items()
        }
        state._rsb = {role: RsbSnapshot.from_dict(s) for role, s in d["rsb"].items()}
        state.incidents = list(d["incidents"])
        return state
