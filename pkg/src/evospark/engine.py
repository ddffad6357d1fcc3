"""Episodic simulation orchestrator.

One run owns one engine instance: genesis builds the world, roster, spine,
and seeded memory, then events execute as scene/round loops in which the
director picks speakers, blocking is generated and validated per round,
sparks are resolved to terminal states inside the round that raised them,
and each event ends with the memory metabolism plus a resumable checkpoint.

Determinism contract: with a scripted provider, identical config (seed
included) yields a byte-identical transcript file, including across
kill-and-resume at any checkpoint. All persisted lines are canonical JSON
and all durations come from the run clock.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

from . import ecgp, gms
from .ecgp import ParsedOutput, Roster, RoleRecord, Spark, SparkState
from .errors import ConfigError, ProviderError, RunNotInteractive, ValidationError
from .providers.base import Provider, complete_with_retry
from .providers.schemas import SpatialLayout, parse_structured
from .providers.templates import render_prompt
from .snm import EebEntry, SnmState, SwkbEntry
from .spine import (
    Directive,
    NarrativeSpine,
    Paradigm,
    build_spine,
    check_node_completion,
    next_directive,
)
from .util import SimClock, WallClock, canonical_json, sha256_text
from .world import WorldMap, load_world

DEFAULT_ROUNDS_PER_SCENE = 12
DEFAULT_SCENES_PER_EVENT = 3
HISTORY_WINDOW = 6
PLAYER_ANCHOR = "<offstage; present; addressing the scene>"


@dataclass
class RunConfig:
    run_id: str
    premise: str
    paradigm: Paradigm
    language: str = "EN"
    endpoint: str | None = None
    model: str | None = None
    temperature: float = 0.8
    intensity_threshold: float = 3.0
    alias_threshold: float = 0.2
    promotion_gate: float = 0.5
    event_budget: int = 3
    scenes_per_event: int = DEFAULT_SCENES_PER_EVENT
    rounds_per_scene: int = DEFAULT_ROUNDS_PER_SCENE
    interactive: bool = False
    seed: int = 0
    scenario_id: str | None = None

    def __post_init__(self) -> None:
        self.paradigm = Paradigm.parse(self.paradigm)
        if not (0.0 < self.temperature <= 2.0):
            raise ConfigError(f"temperature must lie in (0, 2], got {self.temperature}")
        if self.event_budget < 1:
            raise ConfigError("event budget must be at least 1")
        if self.language.upper() not in ("EN", "ZH"):
            raise ConfigError(f"language must be EN or ZH, got {self.language!r}")
        if not self.premise.strip():
            raise ConfigError("premise must be non-empty")
        if self.rounds_per_scene < 1 or self.scenes_per_event < 1:
            raise ConfigError("scene and round caps must be positive")

    @property
    def language_suffix(self) -> str:
        return self.language.lower()

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "premise": self.premise,
            "paradigm": self.paradigm.value,
            "language": self.language,
            "endpoint": self.endpoint,
            "model": self.model,
            "temperature": self.temperature,
            "intensity_threshold": self.intensity_threshold,
            "alias_threshold": self.alias_threshold,
            "promotion_gate": self.promotion_gate,
            "event_budget": self.event_budget,
            "scenes_per_event": self.scenes_per_event,
            "rounds_per_scene": self.rounds_per_scene,
            "interactive": self.interactive,
            "seed": self.seed,
            "scenario_id": self.scenario_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class Turn:
    turn_id: int
    event_id: str
    scene_id: str
    round: int
    role_code: str
    speaker_name: str
    spatial_anchor: str
    action: str
    utterance: str
    rsb_hash: str
    llm_call_ids: tuple[int, ...]
    duration: float
    source: str = "agent"  # "agent" | "player"

    def to_dict(self) -> dict:
        return {
            "turn_id": self.turn_id,
            "event_id": self.event_id,
            "scene_id": self.scene_id,
            "round": self.round,
            "role_code": self.role_code,
            "speaker_name": self.speaker_name,
            "spatial_anchor": self.spatial_anchor,
            "action": self.action,
            "utterance": self.utterance,
            "rsb_hash": self.rsb_hash,
            "llm_call_ids": list(self.llm_call_ids),
            "duration": self.duration,
            "source": self.source,
        }


@dataclass(frozen=True)
class PlayerAction:
    text: str
    as_role: str | None = None
    mentions: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"text": self.text, "as_role": self.as_role, "mentions": list(self.mentions)}

    @classmethod
    def from_dict(cls, d: dict) -> "PlayerAction":
        return cls(text=d["text"], as_role=d.get("as_role"), mentions=tuple(d.get("mentions", ())))


class Engine:
    """Owns all mutable state of one run; single orchestration task."""

    def __init__(
        self,
        config: RunConfig,
        provider: Provider,
        run_dir: str | Path,
        stream_hook: Callable[[dict], None] | None = None,
        promotion_hook: Callable[[Spark, bool], bool | None] | None = None,
        round_gate: Callable[[], None] | None = None,
    ):
        self.config = config
        self.provider = provider
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        (self.run_dir / "checkpoints").mkdir(exist_ok=True)
        self.stream_hook = stream_hook
        self.promotion_hook = promotion_hook
        self.round_gate = round_gate

        self.clock = SimClock() if provider.deterministic else WallClock()
        if provider.deterministic:
            provider.clock = self.clock
        self.rng = random.Random(config.seed)

        self.world: WorldMap | None = None
        self.roster = Roster()
        self.spine: NarrativeSpine | None = None
        self.snm = SnmState()
        self.progress: set[str] = set()

        self.seq = 0
        self.turn_counter = 0
        self.event_cursor = 0
        self.status = "created"
        self.finished_early = False
        self.history: list[str] = []
        self.player_queue: deque[PlayerAction] = deque()
        self.decided_sparks: dict[str, str] = {}  # normalized name -> terminal state
        self.rejected_names: set[str] = set()
        self.pending_plans: dict[int, tuple[gms.ScenePlan, ...]] = {}
        self.incidents: list[str] = []

    # --- persistence primitives -------------------------------------------

    @property
    def transcript_path(self) -> Path:
        return self.run_dir / "transcript.jsonl"

    @property
    def sparks_path(self) -> Path:
        return self.run_dir / "sparks.jsonl"

    @property
    def calls_path(self) -> Path:
        return self.run_dir / "calls.jsonl"

    def _emit(self, kind: str, payload: dict) -> dict:
        self.seq += 1
        record = {"seq": self.seq, "kind": kind, **payload}
        with self.transcript_path.open("a", encoding="utf-8") as fh:
            fh.write(canonical_json(record) + "\n")
        if self.stream_hook:
            self.stream_hook(record)
        return record

    def _emit_spark_audit(self, spark: Spark) -> None:
        with self.sparks_path.open("a", encoding="utf-8") as fh:
            fh.write(canonical_json(spark.audit_record()) + "\n")

    def _log_calls(self, records) -> list[int]:
        ids = []
        with self.calls_path.open("a", encoding="utf-8") as fh:
            for record in records:
                fh.write(canonical_json(record.to_dict()) + "\n")
                ids.append(record.call_id)
        return ids

    def _complete(self, template_id: str, bindings: dict) -> tuple[str, int]:
        prompt = render_prompt(template_id, bindings)
        response, record = complete_with_retry(
            self.provider, template_id, prompt, temperature=self.config.temperature
        )
        self._log_calls([record])
        return response, record.call_id

    def _complete_validated(self, template_id: str, bindings: dict, schema: str, attempts: int = 3):
        """Unified call-parse-retry: burn one provider response per bad attempt."""
        last: ValidationError | None = None
        call_ids: list[int] = []
        for _ in range(attempts):
            response, call_id = self._complete(template_id, bindings)
            call_ids.append(call_id)
            try:
                return parse_structured(response, schema), call_ids
            except ValidationError as exc:
                last = exc
        raise ProviderError(
            f"{template_id}: output failed {schema} validation after {attempts} attempts: {last}"
        )

    # --- prompt context helpers ---------------------------------------------

    def _recent_history(self, window: int = HISTORY_WINDOW) -> str:
        lines = self.history[-window:]
        text = "\n".join(lines) if lines else "(story opening)"
        return ecgp.mask_rejected(text, self.rejected_names)

    def _roster_summary(self) -> str:
        return json.dumps(
            [
                {"role_code": r.role_code, "name": r.name, "nickname": r.nickname}
                for r in self.roster.records()
            ],
            ensure_ascii=False,
        )

    def _locations_summary(self) -> str:
        assert self.world is not None
        return json.dumps(
            [
                {"code": loc.code, "name": loc.name, "adjacent": sorted(loc.adjacent)}
                for loc in self.world.locations.values()
            ],
            ensure_ascii=False,
        )

    # --- genesis ---------------------------------------------------------------

    def genesis(self) -> None:
        """Create world, roster, spine, seeded knowledge, and event 1's plans."""
        cfg = self.config
        world_payload, _ = self._complete_validated(
            "GENESIS_WORLD",
            {"premise": cfg.premise, "language": cfg.language},
            "world-genesis",
        )
        self.world = load_world(
            {
                "locations": world_payload["locations"],
                "lore_refs": [lore["key"] for lore in world_payload["lore"]],
            }
        )
        for lore in world_payload["lore"]:
            self.snm.append_swkb(SwkbEntry(key=lore["key"], body=lore["body"], origin="genesis"))

        roster_payload, _ = self._complete_validated(
            "GENESIS_ROSTER",
            {
                "premise": cfg.premise,
                "language": cfg.language,
                "locations_summary": self._locations_summary(),
                "language_suffix": cfg.language_suffix,
            },
            "roster-genesis",
        )
        members = roster_payload["roles"]
        for m in members:
            self.roster.add(
                RoleRecord(
                    role_code=m["role_code"],
                    name=m["name"],
                    nickname=m["nickname"],
                    tier="main",
                    origin="genesis",
                )
            )
        self.snm.register_roster(members)

        self.spine = build_spine(
            cfg.premise, cfg.paradigm, self.provider, roster_summary=self._roster_summary()
        )

        (self.run_dir / "config.json").write_text(
            canonical_json(cfg.to_dict()) + "\n", encoding="utf-8"
        )
        (self.run_dir / "world.json").write_text(
            canonical_json(self.world.to_dict()) + "\n", encoding="utf-8"
        )
        (self.run_dir / "spine.json").write_text(
            canonical_json(self.spine.to_dict()) + "\n", encoding="utf-8"
        )

        self._emit(
            "run_status",
            {
                "phase": "genesis",
                "run_id": cfg.run_id,
                "paradigm": cfg.paradigm.value,
                "roster": [r.role_code for r in self.roster.records()],
                "locations": self.world.codes(),
                "spine_nodes": sorted(self.spine.node_ids()),
            },
        )

        self.pending_plans[1] = self._plan_event(1)
        self.status = "running"
        self.checkpoint(0)

    def _plan_event(self, event_number: int) -> tuple[gms.ScenePlan, ...]:
        assert self.world is not None and self.spine is not None
        event_id = f"e{event_number}"
        directive = next_directive(self.spine, self.progress)
        payload, _ = self._complete_validated(
            "EVENT_PLAN",
            {
                "event_id": event_id,
                "directive_text": directive.as_text(),
                "roster_summary": self._roster_summary(),
                "locations_summary": self._locations_summary(),
                "previous_summary": self._recent_history(),
                "scene_count": self.config.scenes_per_event,
            },
            "scene-plans",
        )
        plans = tuple(
            gms.ScenePlan(
                scene_id=s["scene_id"],
                event_id=event_id,
                location=s["location"],
                participants=tuple(s["participants"]),
                beat=s["beat"],
                directive_ref=directive.node_id,
            )
            for s in payload["scenes"]
        )
        report = gms.offline_align(plans, self.world, self.roster, self.spine, self.provider)
        self._emit(
            "run_status",
            {
                "phase": "plans_aligned",
                "event_id": event_id,
                "scenes": [
                    {
                        "scene_id": p.scene_id,
                        "location": p.location,
                        "participants": list(p.participants),
                    }
                    for p in report.plans
                ],
                "repair_rounds": report.rounds_used,
            },
        )
        return report.plans

    # --- spark pipeline -----------------------------------------------------------

    def _process_spark(
        self,
        spark: Spark,
        directive: Directive,
        scene_participants: list[str],
    ) -> None:
        """Drive one spark to a terminal state within the raising round."""
        normalized = ecgp.normalize_name(spark.raw_name)
        if normalized in self.decided_sparks:
            return
        spark.context = self._recent_history()
        ecgp.resolve_entity(spark, self.roster, threshold=self.config.alias_threshold)
        if spark.state is SparkState.CANDIDATE:
            before = len(self.provider.records)
            human_override = None
            if self.config.interactive and self.promotion_hook is not None:
                hook = self.promotion_hook

                def human_override(s: Spark, director_says: bool) -> bool | None:
                    self._emit(
                        "promotion_request",
                        {
                            "spark_id": s.spark_id,
                            "raw_name": s.raw_name,
                            "event_id": s.event_id,
                            "score": s.score,
                            "director_decision": director_says,
                        },
                    )
                    return hook(s, director_says)

            ecgp.validate_spark(
                spark,
                directive.as_text(),
                self.provider,
                gate=self.config.promotion_gate,
                human_override=human_override,
            )
            self._log_calls(self.provider.records[before:])
        if spark.state is SparkState.PROMOTED:
            before = len(self.provider.records)
            scene_history = json.dumps(
                [line for line in self.history[-8:]], ensure_ascii=False
            )
            record = ecgp.ground_character(
                spark,
                scene_history,
                self.roster,
                self.snm,
                self.provider,
                language=self.config.language_suffix,
                event_label=spark.event_id,
                role_agents_json=self._roster_summary(),
            )
            self._log_calls(self.provider.records[before:])
            if record.role_code not in scene_participants:
                scene_participants.append(record.role_code)
        elif spark.state is SparkState.REJECTED:
            self.rejected_names.add(spark.raw_name)
        self.decided_sparks[normalized] = spark.state.value
        self._emit("spark", spark.audit_record())
        self._emit_spark_audit(spark)

    # --- player actions ----------------------------------------------------------

    def apply_player_action(self, action: PlayerAction) -> int:
        """Queue a player turn; returns the reserved turn id.

        Queued actions occupy the next turn slots in FIFO order (one per
        round, ahead of any agent speaker), so the k-th queued action takes
        turn ``turns_so_far + k`` unless the run ends first.
        """
        if not self.config.interactive:
            raise RunNotInteractive(f"run {self.config.run_id} is not interactive")
        if not action.text.strip():
            raise ValueError("player action text must be non-empty")
        self.player_queue.append(action)
        return self.turn_counter + len(self.player_queue)

    def _player_turn(
        self,
        action: PlayerAction,
        event_id: str,
        scene_id: str,
        round_number: int,
        layout: SpatialLayout,
        directive: Directive,
        scene_participants: list[str],
    ) -> Turn:
        if action.as_role and action.as_role in self.roster:
            role_code = action.as_role
            speaker_name = self.roster.display_name(role_code)
            rsb_hash = self.snm.rsb_hash(role_code) if self.snm.has_role(role_code) else ""
            try:
                anchor = gms.render_spatial_anchor(layout, role_code)
            except Exception:
                anchor = PLAYER_ANCHOR
        else:
            role_code = "player"
            speaker_name = "Player"
            rsb_hash = ""
            anchor = PLAYER_ANCHOR
        for spark in ecgp.detect_spark(
            ParsedOutput(event_id=event_id, mentions=action.mentions), self.roster
        ):
            self._process_spark(spark, directive, scene_participants)
        self.turn_counter += 1
        return Turn(
            turn_id=self.turn_counter,
            event_id=event_id,
            scene_id=scene_id,
            round=round_number,
            role_code=role_code,
            speaker_name=speaker_name,
            spatial_anchor=anchor,
            action="speaks as the player",
            utterance=action.text,
            rsb_hash=rsb_hash,
            llm_call_ids=(),
            duration=0.0,
            source="player",
        )

    # --- the event loop ---------------------------------------------------------

    def _resolve_speaker(
        self,
        named: str,
        directive: Directive,
        scene_participants: list[str],
        event_id: str,
    ) -> str:
        """Map the director's named speaker onto an actual participant."""
        if named in self.roster and named in scene_participants:
            return named
        sparks = ecgp.detect_spark(ParsedOutput(event_id=event_id, speaker=named), self.roster)
        if sparks:
            spark = sparks[0]
            self._process_spark(spark, directive, scene_participants)
            if spark.resolved_code and spark.resolved_code in scene_participants:
                return spark.resolved_code
        elif named in self.roster:
            # Known role, but not blocked into this scene.
            self.incidents.append(
                f"{event_id}: director named non-participant {named}; fell back"
            )
        fallback = scene_participants[0]
        if named not in self.roster:
            self.incidents.append(
                f"{event_id}: unresolved speaker {named!r}; fell back to {fallback}"
            )
        return fallback

    @staticmethod
    def _compose_guidance(directive: Directive, guidance_text: str) -> str:
        """Planned paradigms bind the active node into the role's guidance;
        free emergence passes the director's words through untouched."""
        if directive.paradigm is Paradigm.FREE_EN or directive.terminal:
            return guidance_text
        return f"{directive.as_text()}\n{guidance_text}"

    def _agent_turn(
        self,
        speaker: str,
        guidance: str,
        event_id: str,
        scene_id: str,
        round_number: int,
        layout: SpatialLayout,
        directive: Directive,
        scene_participants: list[str],
    ) -> Turn:
        snapshot = self.snm.query_rsb(speaker)
        anchor = gms.render_spatial_anchor(layout, speaker)
        started = self.clock.now()
        payload, call_ids = self._complete_validated(
            "ROLE_TURN",
            {
                "role_name": self.roster.display_name(speaker),
                "role_code": speaker,
                "profile": snapshot.profile,
                "status": snapshot.status,
                "goals": json.dumps(list(snapshot.goals), ensure_ascii=False),
                "relations_json": canonical_json(
                    {k: v.to_dict() for k, v in snapshot.relations.items()}
                ),
                "spatial_anchor": anchor,
                "guidance": self._compose_guidance(directive, guidance),
                "recent_history": self._recent_history(),
            },
            "role-turn",
        )
        for spark in ecgp.detect_spark(
            ParsedOutput(event_id=event_id, mentions=tuple(payload["mentions"])), self.roster
        ):
            self._process_spark(spark, directive, scene_participants)
        self.turn_counter += 1
        return Turn(
            turn_id=self.turn_counter,
            event_id=event_id,
            scene_id=scene_id,
            round=round_number,
            role_code=speaker,
            speaker_name=self.roster.display_name(speaker),
            spatial_anchor=anchor,
            action=payload["action"],
            utterance=payload["utterance"],
            rsb_hash=self.snm.rsb_hash(speaker),
            llm_call_ids=tuple(call_ids),
            duration=round(self.clock.now() - started, 9),
            source="agent",
        )

    def _record_turn(self, turn: Turn, scene_participants: list[str]) -> None:
        counterparts = tuple(c for c in scene_participants if c != turn.role_code)
        self.snm.record_turn(
            EebEntry(
                event_id=turn.event_id,
                turn_id=turn.turn_id,
                role_code=turn.role_code,
                counterparts=counterparts,
                utterance=turn.utterance,
                action=turn.action,
                spatial_anchor=turn.spatial_anchor,
                timestamp=self.clock.now(),
            )
        )
        self.history.append(
            f"{turn.speaker_name}: {turn.spatial_anchor} ({turn.action}) \"{turn.utterance}\""
        )
        self._emit("turn", turn.to_dict())

    def run_event(self, event_number: int) -> None:
        assert self.world is not None and self.spine is not None
        event_id = f"e{event_number}"
        self._emit("run_status", {"phase": "event_start", "event_id": event_id})
        plans = self.pending_plans.pop(event_number, None) or self._plan_event(event_number)
        self.snm.open_event(event_id)
        event_participants: list[str] = []
        active_node: str | None = None

        for plan in plans:
            directive = next_directive(self.spine, self.progress)
            if directive.terminal:
                self.finished_early = True
                break
            active_node = directive.node_id
            scene_participants = list(plan.participants)
            previous_layout: SpatialLayout | None = None
            for round_number in range(1, self.config.rounds_per_scene + 1):
                if self.round_gate is not None:
                    self.round_gate()
                before = len(self.provider.records)
                layout, verdict = gms.generate_layout(
                    plan,
                    round_number,
                    scene_participants,
                    self.roster,
                    self.world,
                    self._recent_history(),
                    self.provider,
                    previous=previous_layout,
                )
                self._log_calls(self.provider.records[before:])
                for spark in list(verdict.sparks):
                    self._process_spark(spark, directive, scene_participants)
                self._emit(
                    "layout",
                    {
                        "event_id": event_id,
                        "scene_id": plan.scene_id,
                        "round": round_number,
                        "layout": layout.to_dict(),
                        "verdict": verdict.to_dict(),
                    },
                )
                previous_layout = layout

                if self.player_queue:
                    turn = self._player_turn(
                        self.player_queue.popleft(),
                        event_id,
                        plan.scene_id,
                        round_number,
                        layout,
                        directive,
                        scene_participants,
                    )
                else:
                    started = self.clock.now()
                    guidance_payload, guidance_calls = self._complete_validated(
                        "DIRECTOR_GUIDANCE",
                        {
                            "paradigm": self.config.paradigm.value,
                            "directive_text": directive.as_text(),
                            "scene_id": plan.scene_id,
                            "round_number": round_number,
                            "participants": json.dumps(scene_participants, ensure_ascii=False),
                            "recent_history": self._recent_history(),
                        },
                        "director-guidance",
                    )
                    if guidance_payload["end_scene"]:
                        break
                    speaker = self._resolve_speaker(
                        guidance_payload["speaker"], directive, scene_participants, event_id
                    )
                    turn = self._agent_turn(
                        speaker,
                        guidance_payload["guidance"],
                        event_id,
                        plan.scene_id,
                        round_number,
                        layout,
                        directive,
                        scene_participants,
                    )
                    turn = replace(
                        turn,
                        llm_call_ids=tuple(guidance_calls) + turn.llm_call_ids,
                        duration=round(self.clock.now() - started, 9),
                    )
                self._record_turn(turn, scene_participants)
            for code in scene_participants:
                if code not in event_participants:
                    event_participants.append(code)

        if self.snm.eeb_turns(event_id):
            before = len(self.provider.records)
            outcomes = self.snm.metabolize_event(
                sorted(event_participants),
                event_id,
                self.provider,
                self.config.intensity_threshold,
            )
            self._log_calls(self.provider.records[before:])
            for outcome in outcomes:
                snapshot = self.snm.query_rsb(outcome.role_code)
                self._emit(
                    "metabolism",
                    {
                        **outcome.to_dict(),
                        "relations": {k: v.to_dict() for k, v in snapshot.relations.items()},
                    },
                )
                self._persist_role_memory(outcome.role_code)
        else:
            self.snm.close_event(event_id)

        if (
            self.spine.paradigm is not Paradigm.FREE_EN
            and active_node is not None
            and not self.finished_early
        ):
            node = self.spine.find(active_node)
            window = "\n".join(self.history[-(self.config.rounds_per_scene * self.config.scenes_per_event) :])
            before = len(self.provider.records)
            completed = check_node_completion(node, window, self.provider)
            self._log_calls(self.provider.records[before:])
            if completed:
                self.progress.add(node.id)
                self._emit("node_completed", {"event_id": event_id, "node_id": node.id})

        self._emit("run_status", {"phase": "event_end", "event_id": event_id})
        self.event_cursor = event_number
        self.checkpoint(event_number)

    def run(self) -> None:
        """Drive all remaining events to the budget (or early completion)."""
        if self.world is None:
            self.genesis()
        self.status = "running"
        for event_number in range(self.event_cursor + 1, self.config.event_budget + 1):
            self.run_event(event_number)
            if self.finished_early:
                break
        self.status = "finished"
        self._emit("run_status", {"phase": "finished", "run_id": self.config.run_id})

    # --- memory persistence --------------------------------------------------

    def _persist_role_memory(self, role_code: str) -> None:
        memory_dir = self.run_dir / "snm"
        memory_dir.mkdir(exist_ok=True)
        snapshot = self.snm.query_rsb(role_code)
        (memory_dir / f"rsb-{role_code}.json").write_text(
            canonical_json(snapshot.to_dict()) + "\n", encoding="utf-8"
        )
        with (memory_dir / f"reb-{role_code}.jsonl").open("w", encoding="utf-8") as fh:
            for record in self.snm.reb_log(role_code):
                fh.write(canonical_json(record.to_dict()) + "\n")
        (memory_dir / "swkb.json").write_text(
            canonical_json(
                {key: self.snm.get_swkb(key).to_dict() for key in self.snm.swkb_keys()}
            )
            + "\n",
            encoding="utf-8",
        )

    # --- checkpoint / resume -----------------------------------------------------

    def checkpoint(self, event_number: int) -> Path:
        state = {
            "version": 1,
            "event_cursor": self.event_cursor,
            "seq": self.seq,
            "turn_counter": self.turn_counter,
            "status": self.status,
            "finished_early": self.finished_early,
            "progress": sorted(self.progress),
            "history": list(self.history),
            "decided_sparks": dict(self.decided_sparks),
            "rejected_names": sorted(self.rejected_names),
            "player_queue": [a.to_dict() for a in self.player_queue],
            "pending_plans": {
                str(n): [p.to_dict() for p in plans] for n, plans in self.pending_plans.items()
            },
            "incidents": list(self.incidents),
            "roster": self.roster.to_dict(),
            "snm": self.snm.to_dict(),
            "clock": self.clock.to_dict(),
            "rng": _encode_rng(self.rng.getstate()),
            "provider_cursors": self.provider.cursor_state()
            if hasattr(self.provider, "cursor_state")
            else None,
            "transcript_bytes": self.transcript_path.stat().st_size
            if self.transcript_path.exists()
            else 0,
            "sparks_bytes": self.sparks_path.stat().st_size if self.sparks_path.exists() else 0,
            "calls_bytes": self.calls_path.stat().st_size if self.calls_path.exists() else 0,
        }
        path = self.run_dir / "checkpoints" / f"ckpt-{event_number:04d}.json"
        path.write_text(canonical_json(state) + "\n", encoding="utf-8")
        return path

    @classmethod
    def resume(
        cls,
        run_dir: str | Path,
        provider: Provider,
        checkpoint: int | None = None,
        stream_hook: Callable[[dict], None] | None = None,
        promotion_hook: Callable[[Spark, bool], bool | None] | None = None,
        round_gate: Callable[[], None] | None = None,
    ) -> "Engine":
        """Rebuild an engine from the latest (or given) event-boundary checkpoint."""
        run_dir = Path(run_dir)
        config = RunConfig.from_dict(
            json.loads((run_dir / "config.json").read_text(encoding="utf-8"))
        )
        checkpoints = sorted((run_dir / "checkpoints").glob("ckpt-*.json"))
        if not checkpoints:
            raise ConfigError(f"no checkpoints under {run_dir}")
        if checkpoint is None:
            path = checkpoints[-1]
        else:
            path = run_dir / "checkpoints" / f"ckpt-{checkpoint:04d}.json"
        state = json.loads(path.read_text(encoding="utf-8"))

        engine = cls(
            config,
            provider,
            run_dir,
            stream_hook=stream_hook,
            promotion_hook=promotion_hook,
            round_gate=round_gate,
        )
        engine.world = load_world(json.loads((run_dir / "world.json").read_text(encoding="utf-8")))
        engine.spine = NarrativeSpine.from_dict(
            json.loads((run_dir / "spine.json").read_text(encoding="utf-8"))
        )
        engine.roster = Roster.from_dict(state["roster"])
        engine.snm = SnmState.from_dict(state["snm"])
        engine.progress = set(state["progress"])
        engine.seq = state["seq"]
        engine.turn_counter = state["turn_counter"]
        engine.event_cursor = state["event_cursor"]
        engine.status = state["status"]
        engine.finished_early = state["finished_early"]
        engine.history = list(state["history"])
        engine.decided_sparks = dict(state["decided_sparks"])
        engine.rejected_names = set(state["rejected_names"])
        engine.player_queue = deque(PlayerAction.from_dict(a) for a in state["player_queue"])
        engine.pending_plans = {
            int(n): tuple(gms.ScenePlan.from_dict(p) for p in plans)
            for n, plans in state["pending_plans"].items()
        }
        engine.incidents = list(state["incidents"])
        if state["clock"].get("wall"):
            engine.clock = WallClock()
        else:
            engine.clock = SimClock.from_dict(state["clock"])
            if provider.deterministic:
                provider.clock = engine.clock
        engine.rng.setstate(_decode_rng(state["rng"]))
        if state.get("provider_cursors") and hasattr(provider, "restore_cursors"):
            provider.restore_cursors(state["provider_cursors"])
        _truncate(engine.transcript_path, state["transcript_bytes"])
        _truncate(engine.sparks_path, state["sparks_bytes"])
        _truncate(engine.calls_path, state["calls_bytes"])
        return engine


def _encode_rng(state) -> list:
    version, internal, gauss = state
    return [version, list(internal), gauss]


def _decode_rng(encoded) -> tuple:
    version, internal, gauss = encoded
    return (version, tuple(internal), gauss)


def _truncate(path: Path, size: int) -> None:
    if not path.exists():
        return
    with path.open("rb+") as fh:
        fh.truncate(size)


# --- transcript utilities -----------------------------------------------------


def read_transcript(run_dir: str | Path) -> list[dict]:
    path = Path(run_dir) / "transcript.jsonl"
    if not path.exists():
        return []
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line]


def transcript_hash(run_dir: str | Path) -> str:
    path = Path(run_dir) / "transcript.jsonl"
    data = path.read_bytes() if path.exists() else b""
    return sha256_text(data.decode("utf-8"))


def render_screenplay(records: list[dict], run_id: str = "") -> str:
    """Turn layout mirror: ``Name: <anchor> (action) "dialogue"`` per turn."""
    lines = [f"# Transcript{f' of {run_id}' if run_id else ''}", ""]
    for record in records:
        if record.get("kind") != "turn":
            continue
        anchor = record["spatial_anchor"]
        lines.append(
            f"{record['speaker_name']}: {anchor} ({record['action']}) \"{record['utterance']}\""
        )
    return "\n".join(lines) + "\n"
