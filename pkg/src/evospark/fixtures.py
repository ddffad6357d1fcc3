"""Deterministic scripted-run builders for tests, demos, and acceptance runs.

A builder simulates the engine's provider-call schedule and emits the
matching fixture entries: per-template order is what the scripted provider
consumes, so the builder only has to agree with the engine on how many
calls each template gets and what state (roster, participants, intensity)
each response must reflect.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .providers.scripted import FixtureEntry
from .spine import Paradigm
from .util import canonical_json

DEFAULT_THRESHOLD = 3.0

_PROPS = ("long table", "tall window", "hearth", "door", "banner", "map table")


def default_locations() -> list[dict]:
    return [
        {
            "code": "great_hall",
            "name": "Great Hall",
            "description": "A vaulted hall with a long table and a roaring hearth.",
            "adjacent": ["corridor"],
        },
        {
            "code": "corridor",
            "name": "Stone Corridor",
            "description": "A narrow torch-lit passage connecting the keep's wings.",
            "adjacent": ["great_hall", "chambers"],
        },
        {
            "code": "chambers",
            "name": "Private Chambers",
            "description": "Quiet quarters with a writing desk and a barred window.",
            "adjacent": ["corridor"],
        },
    ]


def default_lore() -> list[dict]:
    return [
        {"key": "lore:keep", "body": "The keep has stood for three hundred years."},
        {"key": "lore:oath", "body": "Oaths sworn in the great hall are binding."},
    ]


def default_cast() -> list[dict]:
    return [
        {
            "role_code": "AriaVeld-en",
            "name": "Aria Veld",
            "nickname": "the Warden",
            "profile": "A guarded steward who trusts routines more than people.",
            "status": "Keeping the keep running through a tense season.",
            "goals": ["protect the household", "learn who forged the ledger"],
        },
        {
            "role_code": "CorinVale-en",
            "name": "Corin Vale",
            "nickname": "the Scribe",
            "profile": "A meticulous archivist with a habit of overhearing things.",
            "status": "Copying records nobody else is meant to read.",
            "goals": ["finish the chronicle", "stay out of the steward's way"],
        },
        {
            "role_code": "MiraSenn-en",
            "name": "Mira Senn",
            "nickname": "the Falcon",
            "profile": "A restless courier who knows every road out of the valley.",
            "status": "Grounded by a storm and short on patience.",
            "goals": ["deliver the sealed letter", "settle an old debt"],
        },
    ]


@dataclass
class SparkScript:
    """Injects a spark at (event, scene, round) via a role-turn mention."""

    event: int
    scene: int
    round: int
    raw_name: str
    score: float = 0.9
    # Responses consumed by grounding, in order; fenced entries exercise the
    # validation-retry path.
    role_info_responses: tuple[str, ...] = ()
    # Actual grounding outcome when it differs from the score gate (human
    # override in interactive runs); None follows the director's decision.
    will_ground: bool | None = None


@dataclass
class ScriptedRunBuilder:
    paradigm: Paradigm = Paradigm.FREE_EN
    events: int = 3
    scenes_per_event: int = 3
    rounds_per_scene: int = 4
    intensity_threshold: float = DEFAULT_THRESHOLD
    promotion_gate: float = 0.5
    cast: list[dict] = field(default_factory=default_cast)
    locations: list[dict] = field(default_factory=default_locations)
    lore: list[dict] = field(default_factory=default_lore)
    spine_nodes: int = 5
    # Events at whose end the active node's predicate token is spoken.
    node_completion_events: tuple[int, ...] = ()
    # Rotate speaker order per scene on odd events for intensity variety.
    rotate_odd_events: bool = False
    player_rounds: frozenset[tuple[int, int, int]] = frozenset()
    sparks: tuple[SparkScript, ...] = ()

    def __post_init__(self) -> None:
        self.paradigm = Paradigm.parse(self.paradigm)
        self._entries: list[FixtureEntry] = []
        self._codes = [m["role_code"] for m in self.cast]
        self._profiles = {m["role_code"]: m["profile"] for m in self.cast}

    # --- response payloads -------------------------------------------------

    def _add(self, template_id: str, payload) -> None:
        response = payload if isinstance(payload, str) else canonical_json(payload)
        self._entries.append(FixtureEntry(template_id=template_id, response=response))

    def _scene_location(self, scene: int) -> str:
        return self.locations[(scene - 1) % len(self.locations)]["code"]

    def _scene_participants(self, event: int, scene: int) -> list[str]:
        order = list(self._codes)
        if self.rotate_odd_events and event % 2 == 1:
            shift = (scene - 1) % len(order)
            order = order[shift:] + order[:shift]
        return order

    def _layout_payload(self, participants: list[str], round_number: int) -> dict:
        positions = {}
        for i, code in enumerate(participants):
            prop = _PROPS[(i + round_number) % len(_PROPS)]
            others = [c for c in participants if c != code]
            positions[code] = {
                "position": f"by the {prop}",
                "posture": "standing" if (i + round_number) % 2 == 0 else "seated",
                "facing": f"facing {others[0]}" if others else "facing the room",
                "relation_to_scene": f"within reach of the {prop}",
            }
        return {
            "spatial_layout": f"The group arranges itself around the {_PROPS[round_number % len(_PROPS)]}.",
            "positions": positions,
        }

    # --- the schedule simulation ----------------------------------------------

    def build(self) -> list[FixtureEntry]:
        self._entries = []
        self._add(
            "GENESIS_WORLD",
            {"locations": self.locations, "lore": self.lore},
        )
        self._add("GENESIS_ROSTER", {"roles": self.cast})
        node_ids = [f"n{i}" for i in range(1, self.spine_nodes + 1)]
        if self.paradigm is Paradigm.SNP:
            self._add(
                "GENESIS_SPINE_SNP",
                {
                    "nodes": [
                        {
                            "id": nid,
                            "title": f"Milestone {nid}",
                            "objective": f"Drive the story through milestone {nid}.",
                            "completion_condition": f"The token NODE-{nid}-DONE is spoken.",
                            "predicate": f"contains:NODE-{nid}-DONE",
                            "constraints": [],
                        }
                        for nid in node_ids
                    ]
                },
            )
        elif self.paradigm is Paradigm.HDP:
            root, *children = node_ids
            self._add(
                "GENESIS_SPINE_HDP",
                {
                    "root": {
                        "id": root,
                        "title": "The arc",
                        "objective": "Carry the premise to its turning point.",
                        "completion_condition": f"The token NODE-{root}-DONE is spoken.",
                        "predicate": f"contains:NODE-{root}-DONE",
                        "constraints": ["the ledger must surface on stage"],
                        "children": [
                            {
                                "id": nid,
                                "title": f"Beat {nid}",
                                "objective": f"Play out beat {nid}.",
                                "completion_condition": f"The token NODE-{nid}-DONE is spoken.",
                                "predicate": f"contains:NODE-{nid}-DONE",
                                "constraints": [],
                                "children": [],
                            }
                            for nid in children
                        ],
                    }
                },
            )

        sparks_by_slot = {(s.event, s.scene, s.round): s for s in self.sparks}
        progress_count = 0
        registered = list(self._codes)  # grows when sparks ground

        for event in range(1, self.events + 1):
            event_id = f"e{event}"
            self._add(
                "EVENT_PLAN",
                {
                    "scenes": [
                        {
                            "scene_id": f"{event_id}s{scene}",
                            "location": self._scene_location(scene),
                            "participants": self._scene_participants(event, scene),
                            "beat": f"Tension {event}.{scene}: the matter of the ledger advances.",
                        }
                        for scene in range(1, self.scenes_per_event + 1)
                    ]
                },
            )
            actor_turns: dict[str, int] = {}
            counterpart_turns: dict[str, int] = {}
            event_participants: list[str] = []

            for scene in range(1, self.scenes_per_event + 1):
                participants = self._scene_participants(event, scene)
                for round_number in range(1, self.rounds_per_scene + 1):
                    self._add(
                        "GENERATE_SPATIAL_POSITIONING",
                        self._layout_payload(participants, round_number),
                    )
                    slot = (event, scene, round_number)
                    if slot in self.player_rounds:
                        speaker = "player"
                        for code in participants:
                            counterpart_turns[code] = counterpart_turns.get(code, 0) + 1
                    else:
                        speaker = participants[(round_number - 1) % len(participants)]
                        self._add(
                            "DIRECTOR_GUIDANCE",
                            {
                                "speaker": speaker,
                                "guidance": f"Press the matter; round {round_number} of {event_id}s{scene}.",
                                "end_scene": False,
                            },
                        )
                        mentions: list[str] = []
                        spark = sparks_by_slot.get(slot)
                        if spark is not None:
                            mentions = [spark.raw_name]
                        utterance = (
                            f"Spoken in {event_id}s{scene} round {round_number} by {speaker}."
                        )
                        if (
                            self.paradigm is not Paradigm.FREE_EN
                            and event in self.node_completion_events
                            and scene == self.scenes_per_event
                            and round_number == self.rounds_per_scene
                            and progress_count < self.spine_nodes
                        ):
                            token = node_ids[progress_count]
                            utterance += f" NODE-{token}-DONE."
                            progress_count += 1
                        self._add(
                            "ROLE_TURN",
                            {
                                "action": f"holds ground near the {_PROPS[round_number % len(_PROPS)]}",
                                "utterance": utterance,
                                "mentions": mentions,
                            },
                        )
                        if spark is not None:
                            self._add(
                                "SPARK_VALIDATION",
                                {"score": spark.score, "reason": "scripted gate decision"},
                            )
                            grounds = (
                                spark.will_ground
                                if spark.will_ground is not None
                                else spark.score >= self.promotion_gate
                            )
                            if grounds:
                                for response in spark.role_info_responses or (
                                    canonical_json(
                                        {
                                            "profile": f"A newcomer drawn into the affair of {event_id}.",
                                            "gender": "unspecified",
                                            "identity": "an emergent figure",
                                            "relation": "entangled with the household",
                                            "name": spark.raw_name,
                                            "nickname": spark.raw_name.split()[0],
                                        }
                                    ),
                                ):
                                    self._add("FIND_NEW_ROLE_INFO", response)
                                new_code = _camel(spark.raw_name) + "-en"
                                if new_code not in registered:
                                    registered.append(new_code)
                                if new_code not in participants:
                                    participants = participants + [new_code]
                        if speaker != "player":
                            actor_turns[speaker] = actor_turns.get(speaker, 0) + 1
                            for code in participants:
                                if code != speaker:
                                    counterpart_turns[code] = counterpart_turns.get(code, 0) + 1
                for code in participants:
                    if code not in event_participants:
                        event_participants.append(code)

            for code in sorted(event_participants):
                intensity = actor_turns.get(code, 0) + 0.5 * counterpart_turns.get(code, 0)
                if intensity > self.intensity_threshold:
                    others = [c for c in registered if c != code]
                    self._add(
                        "UPDATE_RELATION",
                        {
                            other: {
                                "relation": ["companion in the affair"],
                                "detail": f"Shared the events of {event_id} with {other}.",
                            }
                            for other in others
                        },
                    )
                    self._add(
                        "UPDATE_PROFILE",
                        f"{self._profiles.get(code, 'An emergent figure.')} Tempered by {event_id}.",
                    )
        return list(self._entries)


def _camel(raw_name: str) -> str:
    parts = [p for p in raw_name.replace("_", " ").replace("-", " ").split() if p]
    return "".join(p[0].upper() + p[1:] for p in parts)


def golden_free_en_config(run_id: str = "golden-free-en", seed: int = 7) -> dict:
    """Config kwargs for the deterministic reference run."""
    return {
        "run_id": run_id,
        "premise": (
            "A keep under quiet suspicion: a forged ledger surfaces and three "
            "members of the household each have reasons to hide it."
        ),
        "paradigm": Paradigm.FREE_EN,
        "language": "EN",
        "event_budget": 3,
        "scenes_per_event": 3,
        "rounds_per_scene": 4,
        "seed": seed,
    }


def golden_free_en_script() -> list[FixtureEntry]:
    return ScriptedRunBuilder(
        paradigm=Paradigm.FREE_EN, events=3, scenes_per_event=3, rounds_per_scene=4
    ).build()


def smoke_snp_config(run_id: str = "smoke-snp", seed: int = 11) -> dict:
    return {
        "run_id": run_id,
        "premise": (
            "A valley chronicle told in fifteen significant events, following the "
            "keep's household from suspicion to reckoning."
        ),
        "paradigm": Paradigm.SNP,
        "language": "EN",
        "event_budget": 15,
        "scenes_per_event": 3,
        "rounds_per_scene": 2,
        "seed": seed,
    }


def smoke_snp_script() -> list[FixtureEntry]:
    """Long-horizon analogue: 15 events with mixed reflection intensities."""
    return ScriptedRunBuilder(
        paradigm=Paradigm.SNP,
        events=15,
        scenes_per_event=3,
        rounds_per_scene=2,
        rotate_odd_events=True,
        spine_nodes=5,
        node_completion_events=(3, 6, 9, 12, 15),
    ).build()
