"""Stage management: offline role-location-plot alignment and per-round blocking.

Offline alignment runs before an event's scenes execute and, when given a
provider, applies a propose-repair-recheck loop. Dynamic blocking produces
one validated layout per round; unknown layout keys are routed through
entity resolution so malformed codes are renamed in place and genuinely new
names become sparks instead of silent corruption.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .ecgp import Roster, Spark, SparkState, detect_spark, ParsedOutput, resolve_entity
from .errors import (
    FatalMisalignment,
    LayoutUnrecoverable,
    UnknownRoleInLayout,
    ValidationError,
)
from .providers.base import Provider, complete_with_retry
from .providers.schemas import SpatialLayout, parse_structured
from .providers.templates import render_prompt
from .spine import NarrativeSpine, Paradigm
from .world import WorldMap, validate_transition

LAYOUT_ATTEMPTS = 3
ALIGNMENT_ROUNDS = 2


@dataclass(frozen=True)
class ScenePlan:
    scene_id: str
    event_id: str
    location: str
    participants: tuple[str, ...]
    beat: str
    directive_ref: str | None = None

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "event_id": self.event_id,
            "location": self.location,
            "participants": list(self.participants),
            "beat": self.beat,
            "directive_ref": self.directive_ref,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenePlan":
        return cls(
            scene_id=d["scene_id"],
            event_id=d["event_id"],
            location=d["location"],
            participants=tuple(d["participants"]),
            beat=d["beat"],
            directive_ref=d.get("directive_ref"),
        )


@dataclass(frozen=True)
class Violation:
    kind: str  # "R" | "L" | "P"
    scene_id: str
    detail: str
    role: str | None = None
    location: str | None = None
    distance: int | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "scene_id": self.scene_id,
            "detail": self.detail,
            "role": self.role,
            "location": self.location,
            "distance": self.distance,
        }


@dataclass
class AlignmentReport:
    violations: list[Violation]
    plans: tuple[ScenePlan, ...]
    rounds_used: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "violations": [v.to_dict() for v in self.violations],
            "plans": [p.to_dict() for p in self.plans],
            "rounds_used": self.rounds_used,
        }


def _beat_references(beat: str, roster: Roster) -> set[str]:
    """Roster codes whose name, nickname, or name token appears in the beat."""
    lowered = f" {beat.lower()} "
    referenced: set[str] = set()
    for record in roster.records():
        probes = {record.name, record.nickname}
        probes.update(t for t in record.name.split() if len(t) >= 3)
        for probe in probes:
            if not probe:
                continue
            probe_l = probe.lower()
            idx = lowered.find(probe_l)
            while idx != -1:
                before = lowered[idx - 1]
                after = lowered[idx + len(probe_l)]
                if not before.isalnum() and not after.isalnum():
                    referenced.add(record.role_code)
                    break
                idx = lowered.find(probe_l, idx + 1)
            if record.role_code in referenced:
                break
    return referenced


def check_alignment(
    plans: list[ScenePlan] | tuple[ScenePlan, ...],
    world: WorldMap,
    roster: Roster,
    spine: NarrativeSpine,
) -> list[Violation]:
    """Pure role-location-plot validation of an ordered plan list."""
    violations: list[Violation] = []
    seen_scene_locations: dict[str, str] = {}
    for plan in plans:
        for role in plan.participants:
            if role not in roster:
                violations.append(
                    Violation("R", plan.scene_id, f"unknown participant {role!r}", role=role)
                )
        if plan.location not in world.locations:
            violations.append(
                Violation(
                    "L", plan.scene_id, f"unknown location {plan.location!r}", location=plan.location
                )
            )
        elif plan.scene_id in seen_scene_locations:
            if seen_scene_locations[plan.scene_id] != plan.location:
                violations.append(
                    Violation(
                        "L",
                        plan.scene_id,
                        f"scene {plan.scene_id!r} placed in two locations",
                        location=plan.location,
                    )
                )
        else:
            seen_scene_locations[plan.scene_id] = plan.location

    # Transition feasibility between consecutive appearances of each role.
    appearances: dict[str, list[ScenePlan]] = {}
    for plan in plans:
        if plan.location not in world.locations:
            continue
        for role in plan.participants:
            if role in roster:
                appearances.setdefault(role, []).append(plan)
    for role, sequence in appearances.items():
        for prev, nxt in zip(sequence, sequence[1:]):
            verdict = validate_transition(prev.location, nxt.location, world)
            if not verdict.feasible:
                violations.append(
                    Violation(
                        "L",
                        nxt.scene_id,
                        f"{role} cannot move {prev.location} -> {nxt.location} in one scene",
                        role=role,
                        location=nxt.location,
                        distance=verdict.distance,
                    )
                )

    if spine.paradigm in (Paradigm.HDP, Paradigm.SNP):
        for plan in plans:
            for code in sorted(_beat_references(plan.beat, roster)):
                if code not in plan.participants:
                    violations.append(
                        Violation(
                            "P",
                            plan.scene_id,
                            f"beat references {code} who is not a participant",
                            role=code,
                        )
                    )
    return violations


def _plans_from_payload(payload: dict, event_by_scene: dict[str, str], default_event: str) -> tuple[ScenePlan, ...]:
    return tuple(
        ScenePlan(
            scene_id=s["scene_id"],
            event_id=event_by_scene.get(s["scene_id"], default_event),
            location=s["location"],
            participants=tuple(s["participants"]),
            beat=s["beat"],
        )
        for s in payload["scenes"]
    )


def offline_align(
    plans: list[ScenePlan] | tuple[ScenePlan, ...],
    world: WorldMap,
    roster: Roster,
    spine: NarrativeSpine,
    provider: Provider | None = None,
    max_rounds: int = ALIGNMENT_ROUNDS,
) -> AlignmentReport:
    """Validate plans; with a provider, repair and recheck up to ``max_rounds``.

    Without a provider this only reports. With one, violations that survive
    every repair round are fatal: running misaligned scenes would bake
    spatial contradictions into the transcript.
    """
    if not plans:
        raise FatalMisalignment("plan list must be non-empty")
    current = tuple(plans)
    violations = check_alignment(current, world, roster, spine)
    rounds = 0
    if provider is None or not violations:
        return AlignmentReport(violations=violations, plans=current, rounds_used=rounds)

    event_by_scene = {p.scene_id: p.event_id for p in current}
    default_event = current[0].event_id
    while violations and rounds < max_rounds:
        rounds += 1
        prompt = render_prompt(
            "ALIGN_REPAIR",
            {
                "violations_text": "\n".join(f"[{v.kind}] {v.scene_id}: {v.detail}" for v in violations),
                "plans_json": json.dumps([p.to_dict() for p in current], ensure_ascii=False),
            },
        )
        response, _record = complete_with_retry(provider, "ALIGN_REPAIR", prompt)
        try:
            payload = parse_structured(response, "scene-plans")
        except ValidationError:
            continue  # burn the round; a malformed repair never replaces the plans
        current = _plans_from_payload(payload, event_by_scene, default_event)
        violations = check_alignment(current, world, roster, spine)

    if violations:
        raise FatalMisalignment(
            f"{len(violations)} alignment violations persist after {rounds} repair rounds",
            violations=violations,
        )
    return AlignmentReport(violations=[], plans=current, rounds_used=rounds)


@dataclass
class LayoutVerdict:
    status: str  # "valid" | "valid_with_spark" | "invalid" | "fallback"
    failures: list[str] = field(default_factory=list)
    renames: dict[str, str] = field(default_factory=dict)
    sparks: list[Spark] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def usable(self) -> bool:
        return self.status in ("valid", "valid_with_spark")

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "failures": list(self.failures),
            "renames": dict(self.renames),
            "sparks": [s.spark_id for s in self.sparks],
            "warnings": list(self.warnings),
        }


def validate_layout(
    layout: SpatialLayout,
    participants: list[str] | tuple[str, ...],
    roster: Roster,
    event_id: str = "",
) -> tuple[LayoutVerdict, SpatialLayout]:
    """Check coverage and rectify identities.

    Keys are canonicalized to role codes. Exact roster matches are direct
    identification; near-misses are renamed via alias resolution; unknown
    names are removed and come back as sparks. Rectification never invents
    a name: every rename targets an existing roster entry.
    """
    verdict = LayoutVerdict(status="valid")
    rectified: dict[str, object] = {}
    for key, spec in layout.positions.items():
        record = roster.match_exact(key)
        if record is not None:
            code = record.role_code
        else:
            probe = detect_spark(
                ParsedOutput(event_id=event_id, layout_keys=(key,)), roster
            )[0]
            probe = resolve_entity(probe, roster)
            if probe.state is SparkState.RESOLVED_ALIAS:
                code = probe.resolved_code
                verdict.renames[key] = code
            else:
                verdict.sparks.append(probe)
                continue
        if code in rectified:
            verdict.failures.append(f"duplicate coverage for {code}")
            continue
        rectified[code] = spec

    for role in participants:
        if role not in rectified:
            verdict.failures.append(f"missing position for participant {role}")
    for code in rectified:
        if code not in participants:
            verdict.failures.append(f"extra position for non-participant {code}")
    for code, spec in rectified.items():
        for field_name in ("position", "posture", "facing", "relation_to_scene"):
            if not getattr(spec, field_name).strip():
                verdict.failures.append(f"empty {field_name} for {code}")

    if verdict.failures:
        verdict.status = "invalid"
    elif verdict.sparks:
        verdict.status = "valid_with_spark"
    return verdict, SpatialLayout(spatial_layout=layout.spatial_layout, positions=rectified)


def layout_drift_warnings(previous: SpatialLayout | None, current: SpatialLayout) -> list[str]:
    """Soft posture/facing continuity diffs between consecutive rounds."""
    if previous is None:
        return []
    warnings = []
    for code, spec in current.positions.items():
        prior = previous.positions.get(code)
        if prior is None:
            continue
        if prior.posture != spec.posture:
            warnings.append(f"{code}: posture {prior.posture!r} -> {spec.posture!r}")
        if prior.facing != spec.facing:
            warnings.append(f"{code}: facing {prior.facing!r} -> {spec.facing!r}")
    return warnings


def generate_layout(
    plan: ScenePlan,
    round_number: int,
    participants: list[str] | tuple[str, ...],
    roster: Roster,
    world: WorldMap,
    recent_history: str,
    provider: Provider,
    previous: SpatialLayout | None = None,
    attempts: int = LAYOUT_ATTEMPTS,
) -> tuple[SpatialLayout, LayoutVerdict]:
    """One blocking pass for a round; falls back to the previous round's layout.

    Parse or coverage failures retry with fresh provider calls; after
    ``attempts`` failures the previous layout is reused with a drift
    warning, and a first-round failure with nothing to fall back to is
    unrecoverable.
    """
    location = world.location(plan.location)
    roles_list = json.dumps(
        [
            {"role_code": code, "name": roster.display_name(code)}
            for code in participants
        ],
        ensure_ascii=False,
    )
    prompt = render_prompt(
        "GENERATE_SPATIAL_POSITIONING",
        {
            "scene_or_event": f"{plan.event_id}/{plan.scene_id}: {plan.beat}",
            "roles_list": roles_list,
            "location_name": location.name,
            "location_description": location.description,
            "recent_history": recent_history or "(scene opening)",
            "current_round": round_number,
        },
    )
    last_failures: list[str] = []
    for _ in range(attempts):
        response, _record = complete_with_retry(provider, "GENERATE_SPATIAL_POSITIONING", prompt)
        try:
            layout = parse_structured(response, "spatial-layout")
        except ValidationError as exc:
            last_failures = [f"parse: {exc}"]
            continue
        verdict, rectified = validate_layout(layout, participants, roster, plan.event_id)
        if verdict.usable:
            verdict.warnings.extend(layout_drift_warnings(previous, rectified))
            return rectified, verdict
        last_failures = list(verdict.failures)
    if previous is not None:
        verdict = LayoutVerdict(
            status="fallback",
            failures=last_failures,
            warnings=[f"layout generation failed {attempts}x; reusing previous round's blocking"],
        )
        return previous, verdict
    raise LayoutUnrecoverable(
        f"scene {plan.scene_id} round {round_number}: no valid layout after "
        f"{attempts} attempts and no previous layout ({'; '.join(last_failures)})"
    )


def render_spatial_anchor(layout: SpatialLayout, role_code: str) -> str:
    """Deterministic per-turn anchor: ``<position; posture; facing>``."""
    spec = layout.positions.get(role_code)
    if spec is None:
        raise UnknownRoleInLayout(f"role {role_code!r} has no position in this layout")
    return f"<{spec.position}; {spec.posture}; {spec.facing}>"
