"""Strict structured-output parsing.

Responses that should be JSON must be exactly JSON: code fences and
surrounding prose are rejected with a typed reason rather than stripped,
because the prompt contracts forbid them and silent leniency would hide
prompt regressions. Retries at the call sites absorb real-model noise.

Validation reasons: fence, extra_prose, missing_key, extra_key, wrong_type.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable

from ..errors import ValidationError
from ..util import canonical_json

# --- wire types shared with the memory / blocking / grounding modules -----


@dataclass(frozen=True)
class RelationEdge:
    """One directed social edge: short labels plus a prose detail."""

    relation: tuple[str, ...]
    detail: str

    def to_dict(self) -> dict:
        return {"relation": list(self.relation), "detail": self.detail}

    @classmethod
    def from_dict(cls, d: dict) -> "RelationEdge":
        return cls(relation=tuple(d["relation"]), detail=d["detail"])


@dataclass(frozen=True)
class PositionSpec:
    position: str
    posture: str
    facing: str
    relation_to_scene: str

    def to_dict(self) -> dict:
        return {
            "position": self.position,
            "posture": self.posture,
            "facing": self.facing,
            "relation_to_scene": self.relation_to_scene,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PositionSpec":
        return cls(d["position"], d["posture"], d["facing"], d["relation_to_scene"])


@dataclass(frozen=True)
class SpatialLayout:
    """Per-round stage blocking: composition summary plus per-character specs."""

    spatial_layout: str
    positions: dict[str, PositionSpec] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "spatial_layout": self.spatial_layout,
            "positions": {k: v.to_dict() for k, v in self.positions.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpatialLayout":
        return cls(
            spatial_layout=d["spatial_layout"],
            positions={k: PositionSpec.from_dict(v) for k, v in d["positions"].items()},
        )


@dataclass(frozen=True)
class NewRoleInfo:
    profile: str
    gender: str
    identity: str
    relation: str
    name: str
    nickname: str

    def to_dict(self) -> dict:
        return {
            "profile": self.profile,
            "gender": self.gender,
            "identity": self.identity,
            "relation": self.relation,
            "name": self.name,
            "nickname": self.nickname,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NewRoleInfo":
        return cls(
            d["profile"], d["gender"], d["identity"], d["relation"], d["name"], d["nickname"]
        )


# --- low-level strictness helpers -----------------------------------------


def _strict_load(text: str) -> Any:
    stripped = text.strip()
    try:
        return json.loads(stripped)
    except json.JSONDecodeError:
        if "```" in stripped:
            raise ValidationError("fence", "response contains markdown code fences") from None
        raise ValidationError("extra_prose", "response is not a bare JSON document") from None


def _object(text: str) -> dict:
    value = _strict_load(text)
    if not isinstance(value, dict):
        raise ValidationError("wrong_type", "expected a JSON object at top level")
    return value


def _text(text: str) -> str:
    stripped = text.strip()
    if "```" in stripped:
        raise ValidationError("fence", "plain-text response contains code fences")
    if stripped.startswith("{") or stripped.startswith("["):
        try:
            json.loads(stripped)
        except json.JSONDecodeError:
            pass
        else:
            raise ValidationError("wrong_type", "expected plain text, got a JSON structure")
    if not stripped:
        raise ValidationError("wrong_type", "empty response")
    return stripped


def _check_keys(obj: dict, required: set[str], optional: set[str] = frozenset(), where: str = "object") -> None:
    missing = sorted(required - obj.keys())
    if missing:
        raise ValidationError("missing_key", f"{where} missing {missing}")
    extra = sorted(obj.keys() - required - optional)
    if extra:
        raise ValidationError("extra_key", f"{where} has unexpected {extra}")


def _str_of(obj: dict, key: str, where: str = "object") -> str:
    value = obj[key]
    if not isinstance(value, str):
        raise ValidationError("wrong_type", f"{where}.{key} must be a string")
    return value


def _str_list_of(obj: dict, key: str, where: str = "object") -> list[str]:
    value = obj[key]
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise ValidationError("wrong_type", f"{where}.{key} must be a list of strings")
    return value


# --- schema parsers --------------------------------------------------------


def _parse_relation_map(text: str) -> dict[str, RelationEdge]:
    obj = _object(text)
    edges: dict[str, RelationEdge] = {}
    for key, value in obj.items():
        if not isinstance(value, dict):
            raise ValidationError("wrong_type", f"relation entry {key!r} must be an object")
        _check_keys(value, {"relation", "detail"}, where=f"relation entry {key!r}")
        relation = value["relation"]
        if not isinstance(relation, list) or not all(isinstance(x, str) for x in relation):
            raise ValidationError("wrong_type", f"relation entry {key!r}.relation must be a list of strings")
        detail = value["detail"]
        if not isinstance(detail, str):
            raise ValidationError("wrong_type", f"relation entry {key!r}.detail must be a string")
        edges[key] = RelationEdge(relation=tuple(relation), detail=detail)
    return edges


def _parse_profile_string(text: str) -> str:
    return _text(text)


def _parse_spatial_layout(text: str) -> SpatialLayout:
    obj = _object(text)
    _check_keys(obj, {"spatial_layout", "positions"}, where="layout")
    summary = _str_of(obj, "spatial_layout", "layout")
    positions = obj["positions"]
    if not isinstance(positions, dict):
        raise ValidationError("wrong_type", "layout.positions must be an object")
    specs: dict[str, PositionSpec] = {}
    for name, spec in positions.items():
        if not isinstance(spec, dict):
            raise ValidationError("wrong_type", f"layout.positions[{name!r}] must be an object")
        _check_keys(spec, {"position", "posture", "facing", "relation_to_scene"}, where=f"positions[{name!r}]")
        specs[name] = PositionSpec(
            position=_str_of(spec, "position", name),
            posture=_str_of(spec, "posture", name),
            facing=_str_of(spec, "facing", name),
            relation_to_scene=_str_of(spec, "relation_to_scene", name),
        )
    return SpatialLayout(spatial_layout=summary, positions=specs)


def _parse_new_role_info(text: str) -> NewRoleInfo:
    obj = _object(text)
    keys = {"profile", "gender", "identity", "relation", "name", "nickname"}
    _check_keys(obj, keys, where="new role info")
    return NewRoleInfo(**{k: _str_of(obj, k, "new role info") for k in keys})


def _parse_world_genesis(text: str) -> dict:
    obj = _object(text)
    _check_keys(obj, {"locations", "lore"}, where="world")
    if not isinstance(obj["locations"], list) or not obj["locations"]:
        raise ValidationError("wrong_type", "world.locations must be a non-empty list")
    for loc in obj["locations"]:
        if not isinstance(loc, dict):
            raise ValidationError("wrong_type", "location entries must be objects")
        _check_keys(loc, {"code", "name", "description"}, {"adjacent"}, where="location")
        _str_of(loc, "code", "location")
        if "adjacent" in loc:
            _str_list_of(loc, "adjacent", "location")
    if not isinstance(obj["lore"], list):
        raise ValidationError("wrong_type", "world.lore must be a list")
    for entry in obj["lore"]:
        if not isinstance(entry, dict):
            raise ValidationError("wrong_type", "lore entries must be objects")
        _check_keys(entry, {"key", "body"}, where="lore entry")
        _str_of(entry, "key", "lore entry")
        _str_of(entry, "body", "lore entry")
    return obj


def _parse_roster_genesis(text: str) -> dict:
    obj = _object(text)
    _check_keys(obj, {"roles"}, where="roster")
    if not isinstance(obj["roles"], list) or not obj["roles"]:
        raise ValidationError("wrong_type", "roster.roles must be a non-empty list")
    for role in obj["roles"]:
        if not isinstance(role, dict):
            raise ValidationError("wrong_type", "role entries must be objects")
        _check_keys(
            role,
            {"role_code", "name", "nickname", "profile", "status", "goals"},
            where="role entry",
        )
        for k in ("role_code", "name", "nickname", "profile", "status"):
            _str_of(role, k, "role entry")
        _str_list_of(role, "goals", "role entry")
    return obj


def _check_plan_node(node: dict, allow_children: bool, where: str) -> None:
    if not isinstance(node, dict):
        raise ValidationError("wrong_type", f"{where} must be an object")
    required = {"id", "title", "objective", "completion_condition"}
    optional = {"constraints", "predicate"}
    if allow_children:
        optional = optional | {"children"}
    _check_keys(node, required, optional, where=where)
    for k in required:
        _str_of(node, k, where)
    if "constraints" in node:
        _str_list_of(node, "constraints", where)
    if "predicate" in node and not isinstance(node["predicate"], str):
        raise ValidationError("wrong_type", f"{where}.predicate must be a string")
    if allow_children and "children" in node:
        if not isinstance(node["children"], list):
            raise ValidationError("wrong_type", f"{where}.children must be a list")
        for child in node["children"]:
            _check_plan_node(child, True, f"{where}.child")


def _parse_spine_snp(text: str) -> dict:
    obj = _object(text)
    _check_keys(obj, {"nodes"}, where="spine")
    if not isinstance(obj["nodes"], list) or not obj["nodes"]:
        raise ValidationError("wrong_type", "spine.nodes must be a non-empty list")
    for node in obj["nodes"]:
        _check_plan_node(node, False, "key node")
    return obj


def _parse_spine_hdp(text: str) -> dict:
    obj = _object(text)
    _check_keys(obj, {"root"}, where="spine")
    _check_plan_node(obj["root"], True, "event node")
    return obj


def _parse_scene_plans(text: str) -> dict:
    obj = _object(text)
    _check_keys(obj, {"scenes"}, where="plan")
    if not isinstance(obj["scenes"], list) or not obj["scenes"]:
        raise ValidationError("wrong_type", "plan.scenes must be a non-empty list")
    for scene in obj["scenes"]:
        if not isinstance(scene, dict):
            raise ValidationError("wrong_type", "scene entries must be objects")
        _check_keys(scene, {"scene_id", "location", "participants", "beat"}, where="scene entry")
        _str_of(scene, "scene_id", "scene entry")
        _str_of(scene, "location", "scene entry")
        _str_of(scene, "beat", "scene entry")
        _str_list_of(scene, "participants", "scene entry")
    return obj


def _parse_director_guidance(text: str) -> dict:
    obj = _object(text)
    _check_keys(obj, {"speaker", "guidance", "end_scene"}, where="guidance")
    _str_of(obj, "speaker", "guidance")
    _str_of(obj, "guidance", "guidance")
    if not isinstance(obj["end_scene"], bool):
        raise ValidationError("wrong_type", "guidance.end_scene must be a boolean")
    return obj


def _parse_role_turn(text: str) -> dict:
    obj = _object(text)
    _check_keys(obj, {"action", "utterance", "mentions"}, where="turn")
    _str_of(obj, "action", "turn")
    _str_of(obj, "utterance", "turn")
    _str_list_of(obj, "mentions", "turn")
    return obj


def _parse_spark_validation(text: str) -> dict:
    obj = _object(text)
    _check_keys(obj, {"score", "reason"}, where="spark validation")
    score = obj["score"]
    if isinstance(score, bool) or not isinstance(score, (int, float)):
        raise ValidationError("wrong_type", "spark validation score must be a number")
    if not 0.0 <= float(score) <= 1.0:
        raise ValidationError("wrong_type", "spark validation score must lie in [0, 1]")
    _str_of(obj, "reason", "spark validation")
    return {"score": float(score), "reason": obj["reason"]}


def _parse_completion_check(text: str) -> bool:
    word = _text(text).strip().upper()
    if word.startswith("YES"):
        return True
    if word.startswith("NO"):
        return False
    raise ValidationError("wrong_type", "completion check must answer YES or NO")


def _parse_judge_verdict(text: str) -> dict:
    obj = _object(text)
    _check_keys(obj, {"winner", "likert_first", "likert_second"}, where="verdict")
    winner = _str_of(obj, "winner", "verdict")
    if winner not in ("first", "second", "tie"):
        raise ValidationError("wrong_type", "verdict.winner must be 'first', 'second', or 'tie'")
    for k in ("likert_first", "likert_second"):
        v = obj[k]
        if isinstance(v, bool) or not isinstance(v, int) or not 1 <= v <= 5:
            raise ValidationError("wrong_type", f"verdict.{k} must be an integer in 1..5")
    return obj


SCHEMAS: dict[str, Callable[[str], Any]] = {
    "relation-map": _parse_relation_map,
    "profile-string": _parse_profile_string,
    "spatial-layout": _parse_spatial_layout,
    "new-role-info": _parse_new_role_info,
    "world-genesis": _parse_world_genesis,
    "roster-genesis": _parse_roster_genesis,
    "spine-snp": _parse_spine_snp,
    "spine-hdp": _parse_spine_hdp,
    "scene-plans": _parse_scene_plans,
    "director-guidance": _parse_director_guidance,
    "role-turn": _parse_role_turn,
    "spark-validation": _parse_spark_validation,
    "completion-check": _parse_completion_check,
    "judge-verdict": _parse_judge_verdict,
}


def parse_structured(response: str, schema_id: str):
    """Parse and validate a provider response against a registered schema."""
    try:
        parser = SCHEMAS[schema_id]
    except KeyError:
        raise KeyError(f"unregistered schema: {schema_id!r}") from None
    return parser(response)


def serialize_structured(obj: Any, schema_id: str) -> str:
    """Inverse of ``parse_structured`` on valid objects (round-trip identity)."""
    if schema_id == "profile-string":
        return obj
    if schema_id == "completion-check":
        return "YES" if obj else "NO"
    if schema_id == "relation-map":
        return canonical_json({k: v.to_dict() for k, v in obj.items()})
    if schema_id in ("spatial-layout", "new-role-info"):
        return canonical_json(obj.to_dict())
    return canonical_json(obj)
