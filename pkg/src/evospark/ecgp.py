"""Emergent character grounding: detect, resolve, gate, and ground new names.

A constraint-violating mention of an uninitialized name is treated as a
signal, not an error. The pipeline runs each such spark through a strict
state machine: alias resolution first (cheap, deterministic), then a
plot-criticality gate, then full grounding into roster, knowledge base,
social snapshot, and provenance log.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .errors import CodeCollision, IllegalTransition, ValidationError
from .providers.base import Provider, complete_with_retry
from .providers.schemas import NewRoleInfo, parse_structured
from .providers.templates import render_prompt
from .snm import SnmState, SwkbEntry

ALIAS_DISTANCE_THRESHOLD = 0.2
PROMOTION_GATE = 0.5
NPC_MASK_LABEL = "an unnamed NPC"

_LANGUAGE_SUFFIXES = ("-en", "-zh")
_SEPARATORS = re.compile(r"[\s_\-.'’]+")


class SparkState(str, Enum):
    DETECTED = "detected"
    RESOLVED_ALIAS = "resolved_alias"
    CANDIDATE = "candidate"
    REJECTED = "rejected"
    PROMOTED = "promoted"
    GROUNDED = "grounded"


_ALLOWED_TRANSITIONS: dict[SparkState, set[SparkState]] = {
    SparkState.DETECTED: {SparkState.RESOLVED_ALIAS, SparkState.CANDIDATE},
    SparkState.CANDIDATE: {SparkState.REJECTED, SparkState.PROMOTED},
    SparkState.PROMOTED: {SparkState.GROUNDED},
    SparkState.RESOLVED_ALIAS: set(),
    SparkState.REJECTED: set(),
    SparkState.GROUNDED: set(),
}

TERMINAL_STATES = {SparkState.RESOLVED_ALIAS, SparkState.REJECTED, SparkState.GROUNDED}


@dataclass
class Spark:
    spark_id: str
    raw_name: str
    context: str
    event_id: str
    detection_site: str  # "speaker_field" | "layout_positions" | "narration"
    state: SparkState = SparkState.DETECTED
    resolved_code: str | None = None
    score: float | None = None
    decided_by: str | None = None  # "director" | "human"
    transitions: list[str] = field(default_factory=list)

    def transition(self, target: SparkState) -> None:
        if target not in _ALLOWED_TRANSITIONS[self.state]:
            raise IllegalTransition(f"spark {self.spark_id}: {self.state.value} -> {target.value}")
        self.transitions.append(f"{self.state.value}->{target.value}")
        self.state = target

    @property
    def terminal(self) -> bool:
        return self.state in TERMINAL_STATES

    def audit_record(self) -> dict:
        return {
            "spark_id": self.spark_id,
            "raw_name": self.raw_name,
            "event_id": self.event_id,
            "detection_site": self.detection_site,
            "state": self.state.value,
            "resolved_code": self.resolved_code,
            "score": self.score,
            "transitions": list(self.transitions),
            "decided_by": self.decided_by,
        }


@dataclass(frozen=True)
class RoleRecord:
    role_code: str  # "<CamelName>-<lang>"
    name: str
    nickname: str
    tier: str  # "main" | "npc" | "emergent"
    origin: str  # "genesis" | "promotion"

    def to_dict(self) -> dict:
        return {
            "role_code": self.role_code,
            "name": self.name,
            "nickname": self.nickname,
            "tier": self.tier,
            "origin": self.origin,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RoleRecord":
        return cls(d["role_code"], d["name"], d["nickname"], d["tier"], d["origin"])


class Roster:
    """Ordered role registry; codes are unique and never reused."""

    def __init__(self, records: list[RoleRecord] | None = None):
        self._records: dict[str, RoleRecord] = {}
        for record in records or []:
            self.add(record)

    def add(self, record: RoleRecord) -> None:
        if record.role_code in self._records:
            raise CodeCollision(f"role code {record.role_code!r} already in roster")
        self._records[record.role_code] = record

    def get(self, role_code: str) -> RoleRecord:
        return self._records[role_code]

    def __contains__(self, role_code: str) -> bool:
        return role_code in self._records

    def __len__(self) -> int:
        return len(self._records)

    def codes(self) -> list[str]:
        return list(self._records)

    def records(self) -> list[RoleRecord]:
        return list(self._records.values())

    def speaker_eligible(self, role_code: str) -> bool:
        record = self._records.get(role_code)
        return record is not None and record.tier in ("main", "emergent")

    def match_exact(self, name: str) -> RoleRecord | None:
        for record in self._records.values():
            if name in (record.role_code, record.name, record.nickname):
                return record
        return None

    def display_name(self, role_code: str) -> str:
        record = self._records.get(role_code)
        return record.name if record else role_code

    def to_dict(self) -> dict:
        return {"roles": [r.to_dict() for r in self._records.values()]}

    @classmethod
    def from_dict(cls, d: dict) -> "Roster":
        return cls([RoleRecord.from_dict(r) for r in d["roles"]])


@dataclass(frozen=True)
class ParsedOutput:
    """Name occurrences extracted from one parsed agent or layout output."""

    event_id: str
    speaker: str | None = None
    layout_keys: tuple[str, ...] = ()
    mentions: tuple[str, ...] = ()


# --- normalization and matching --------------------------------------------


def strip_language_suffix(name: str) -> str:
    lowered = name.lower()
    for suffix in _LANGUAGE_SUFFIXES:
        if lowered.endswith(suffix):
            return name[: -len(suffix)]
    return name


def normalize_name(name: str) -> str:
    """Lowercase, drop the language suffix, strip separators."""
    return _SEPARATORS.sub("", strip_language_suffix(name.strip()).lower())


def edit_distance(a: str, b: str) -> int:
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


def normalized_distance(a: str, b: str) -> float:
    na, nb = normalize_name(a), normalize_name(b)
    longest = max(len(na), len(nb))
    if longest == 0:
        return 0.0
    return edit_distance(na, nb) / longest


def closest_alias(raw_name: str, roster: Roster) -> tuple[str | None, float]:
    """Best roster match over names, nicknames, and code stems."""
    best_code: str | None = None
    best = float("inf")
    for record in roster.records():
        for target in (record.name, record.nickname, strip_language_suffix(record.role_code)):
            if not target:
                continue
            d = normalized_distance(raw_name, target)
            if d < best:
                best = d
                best_code = record.role_code
    return best_code, best


# --- pipeline stages ---------------------------------------------------------


def detect_spark(output: ParsedOutput, roster: Roster) -> list[Spark]:
    """One detected spark per non-roster name, deduplicated by normalized form."""
    candidates: list[tuple[str, str]] = []
    if output.speaker:
        candidates.append((output.speaker, "speaker_field"))
    for key in output.layout_keys:
        candidates.append((key, "layout_positions"))
    for mention in output.mentions:
        candidates.append((mention, "narration"))

    sparks: list[Spark] = []
    seen: set[str] = set()
    for name, site in candidates:
        if not name.strip():
            continue
        if roster.match_exact(name):
            continue
        normalized = normalize_name(name)
        if normalized in seen:
            continue
        seen.add(normalized)
        sparks.append(
            Spark(
                spark_id=f"{output.event_id}:{normalized}",
                raw_name=name,
                context="",
                event_id=output.event_id,
                detection_site=site,
            )
        )
    return sparks


def resolve_entity(
    spark: Spark, roster: Roster, threshold: float = ALIAS_DISTANCE_THRESHOLD
) -> Spark:
    """Alias when a roster identity is within the normalized edit-distance gate."""
    code, distance = closest_alias(spark.raw_name, roster)
    if code is not None and distance <= threshold:
        spark.transition(SparkState.RESOLVED_ALIAS)
        spark.resolved_code = code
    else:
        spark.transition(SparkState.CANDIDATE)
    return spark


def validate_spark(
    spark: Spark,
    narrative_context: str,
    provider: Provider,
    *,
    gate: float = PROMOTION_GATE,
    human_override: "Callable[[Spark, bool], bool | None] | None" = None,
) -> Spark:
    """Plot-criticality gate on a candidate spark.

    The director scores first; in interactive runs ``human_override`` is
    consulted with the proposed decision and may veto or approve before the
    candidate transition commits (so the state machine never walks back a
    promoted spark).
    """
    prompt = render_prompt(
        "SPARK_VALIDATION",
        {
            "raw_name": spark.raw_name,
            "context": spark.context or "(no surrounding context captured)",
            "directive_text": narrative_context,
        },
    )
    response, _record = complete_with_retry(provider, "SPARK_VALIDATION", prompt)
    verdict = parse_structured(response, "spark-validation")
    spark.score = verdict["score"]
    director_says_promote = spark.score >= gate
    promote = director_says_promote
    spark.decided_by = "director"
    if human_override is not None:
        decision = human_override(spark, director_says_promote)
        if decision is not None:
            promote = decision
            spark.decided_by = "human"
    spark.transition(SparkState.PROMOTED if promote else SparkState.REJECTED)
    return spark


def derive_role_code(raw_name: str, language: str, roster: Roster) -> str:
    """CamelCase the raw name, append the language suffix, dodge collisions."""
    parts = [p for p in re.split(r"[^0-9A-Za-z]+", raw_name) if p]
    if not parts:
        raise CodeCollision(f"cannot derive a role code from {raw_name!r}")
    stem = "".join(p[0].upper() + p[1:] for p in parts)
    suffix = language.lower()
    code = f"{stem}-{suffix}"
    bump = 2
    while code in roster:
        code = f"{stem}{bump}-{suffix}"
        bump += 1
    return code


def ground_character(
    spark: Spark,
    scene_history_json: str,
    roster: Roster,
    snm: SnmState,
    provider: Provider,
    *,
    language: str = "en",
    event_label: str = "",
    role_agents_json: str = "",
    validation_attempts: int = 3,
) -> RoleRecord:
    """Instantiate a promoted spark as a persistent emergent character.

    Writes, in order: roster entry, knowledge-base profile, social snapshot
    with edges to the whole roster (and reciprocal edges), and the role's
    first provenance record. Any validation failure before the first write
    leaves every store untouched.
    """
    if spark.state is not SparkState.PROMOTED:
        raise IllegalTransition(
            f"spark {spark.spark_id}: grounding requires promoted state, got {spark.state.value}"
        )
    role_code = derive_role_code(spark.raw_name, language, roster)
    prompt = render_prompt(
        "FIND_NEW_ROLE_INFO",
        {
            "role_code": role_code,
            "history_scene_json": scene_history_json,
            "event": event_label or spark.event_id,
            "role_agents": role_agents_json,
        },
    )
    info: NewRoleInfo | None = None
    failure: ValidationError | None = None
    for _ in range(validation_attempts):
        response, _record = complete_with_retry(provider, "FIND_NEW_ROLE_INFO", prompt)
        try:
            info = parse_structured(response, "new-role-info")
            break
        except ValidationError as exc:
            failure = exc
    if info is None:
        raise ValidationError(
            failure.reason if failure else "wrong_type",
            f"grounding output for {role_code} failed validation "
            f"after {validation_attempts} attempts",
        )

    record = RoleRecord(
        role_code=role_code,
        name=info.name,
        nickname=info.nickname,
        tier="emergent",
        origin="promotion",
    )
    roster.add(record)
    snm.append_swkb(
        SwkbEntry(
            key=f"character:{role_code}",
            body=f"{info.name} ({info.identity}, {info.gender}): {info.profile} Relations: {info.relation}",
            origin="ecgp_grounding",
        )
    )
    snm.register_role(
        role_code,
        profile=info.profile,
        status=info.identity,
        goals=(),
        event_id=spark.event_id,
    )
    spark.resolved_code = role_code
    spark.transition(SparkState.GROUNDED)
    return record


def mask_rejected(text: str, rejected_names: set[str], label: str = NPC_MASK_LABEL) -> str:
    """Replace rejected names in prompt-bound text with a generic label."""
    masked = text
    for name in sorted(rejected_names, key=len, reverse=True):
        if name:
            masked = masked.replace(name, label)
    return masked
