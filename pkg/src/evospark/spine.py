"""Polymorphic narrative spine and per-scene directives.

Three control paradigms share one spine shape: a rigid event tree (HDP),
a linear milestone list (SNP), or the empty open-ended state (Free EN).
The paradigm is fixed at run initialization; the spine itself is immutable
and only the orchestrator-owned progress set advances.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import MalformedPlan, ValidationError
from .providers.base import Provider, complete_with_retry
from .providers.schemas import parse_structured
from .providers.templates import render_prompt


class Paradigm(str, Enum):
    HDP = "hdp"
    SNP = "snp"
    FREE_EN = "free_en"

    @classmethod
    def parse(cls, value: "str | Paradigm") -> "Paradigm":
        if isinstance(value, Paradigm):
            return value
        normalized = value.strip().lower().replace("-", "_").replace(" ", "_")
        aliases = {"freeen": "free_en", "free": "free_en", "fen": "free_en"}
        normalized = aliases.get(normalized, normalized)
        return cls(normalized)


@dataclass(frozen=True)
class PlanNode:
    """One spine node; milestones are nodes without children."""

    id: str
    title: str
    objective: str
    completion_condition: str
    predicate: str | None = None  # scripted predicate, e.g. "contains:TOKEN"
    constraints: tuple[str, ...] = ()
    children: tuple["PlanNode", ...] = ()

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "title": self.title,
            "objective": self.objective,
            "completion_condition": self.completion_condition,
            "constraints": list(self.constraints),
        }
        if self.predicate is not None:
            d["predicate"] = self.predicate
        if self.children:
            d["children"] = [c.to_dict() for c in self.children]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PlanNode":
        return cls(
            id=d["id"],
            title=d["title"],
            objective=d["objective"],
            completion_condition=d["completion_condition"],
            predicate=d.get("predicate"),
            constraints=tuple(d.get("constraints", [])),
            children=tuple(cls.from_dict(c) for c in d.get("children", [])),
        )


EventNode = PlanNode
KeyNode = PlanNode


@dataclass(frozen=True)
class Directive:
    """What the Director steers toward for the current scene."""

    paradigm: Paradigm
    node_id: str | None = None
    title: str | None = None
    objective: str | None = None
    constraints: tuple[str, ...] = ()
    guidance_note: str = ""
    terminal: bool = False

    def as_text(self) -> str:
        if self.terminal:
            return "All planned narrative nodes are complete. Wind the story down."
        if self.paradigm is Paradigm.FREE_EN:
            return self.guidance_note
        lines = [f"Node {self.node_id}: {self.title}", f"Objective: {self.objective}"]
        for constraint in self.constraints:
            lines.append(f"Plot constraint: {constraint}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "paradigm": self.paradigm.value,
            "node_id": self.node_id,
            "title": self.title,
            "objective": self.objective,
            "constraints": list(self.constraints),
            "guidance_note": self.guidance_note,
            "terminal": self.terminal,
        }


FREE_EN_GUIDANCE = (
    "No plot is imposed. Stay true to your character, react to what just "
    "happened, and pursue your own goals and relationships."
)


@dataclass(frozen=True)
class NarrativeSpine:
    paradigm: Paradigm
    hdp_tree: PlanNode | None = None
    snp_nodes: tuple[PlanNode, ...] = ()

    def __post_init__(self) -> None:
        if self.paradigm is Paradigm.HDP:
            if self.hdp_tree is None or self.snp_nodes:
                raise MalformedPlan("hierarchical spine requires a tree and no milestone list")
        elif self.paradigm is Paradigm.SNP:
            if not self.snp_nodes or self.hdp_tree is not None:
                raise MalformedPlan("sequential spine requires milestones and no tree")
        else:
            if self.hdp_tree is not None or self.snp_nodes:
                raise MalformedPlan("free-emergence spine must stay empty")
        ids = [n.id for n in self.preorder()]
        if len(ids) != len(set(ids)):
            raise MalformedPlan("spine node ids must be unique")
        for node in self.preorder():
            if not node.completion_condition.strip():
                raise MalformedPlan(f"node {node.id}: completion_condition must be non-empty")

    @property
    def is_empty(self) -> bool:
        return self.paradigm is Paradigm.FREE_EN

    def preorder(self) -> list[PlanNode]:
        if self.paradigm is Paradigm.SNP:
            return list(self.snp_nodes)
        if self.paradigm is Paradigm.HDP and self.hdp_tree is not None:
            out: list[PlanNode] = []
            stack = [self.hdp_tree]
            while stack:
                node = stack.pop()
                out.append(node)
                stack.extend(reversed(node.children))
            return out
        return []

    def node_ids(self) -> set[str]:
        return {n.id for n in self.preorder()}

    def find(self, node_id: str) -> PlanNode:
        for node in self.preorder():
            if node.id == node_id:
                return node
        raise KeyError(f"node {node_id!r} not in spine")

    def to_dict(self) -> dict:
        return {
            "paradigm": self.paradigm.value,
            "hdp_tree": self.hdp_tree.to_dict() if self.hdp_tree else None,
            "snp_nodes": [n.to_dict() for n in self.snp_nodes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NarrativeSpine":
        return cls(
            paradigm=Paradigm.parse(d["paradigm"]),
            hdp_tree=PlanNode.from_dict(d["hdp_tree"]) if d.get("hdp_tree") else None,
            snp_nodes=tuple(PlanNode.from_dict(n) for n in d.get("snp_nodes", [])),
        )


def _node_from_payload(payload: dict, allow_children: bool) -> PlanNode:
    children = tuple(
        _node_from_payload(c, True) for c in payload.get("children", [])
    ) if allow_children else ()
    return PlanNode(
        id=payload["id"],
        title=payload["title"],
        objective=payload["objective"],
        completion_condition=payload["completion_condition"],
        predicate=payload.get("predicate"),
        constraints=tuple(payload.get("constraints", [])),
        children=children,
    )


def build_spine(
    premise: str,
    paradigm: Paradigm,
    provider: Provider | None,
    *,
    roster_summary: str = "",
    schema_attempts: int = 3,
) -> NarrativeSpine:
    """Expand a premise into a spine of the requested shape.

    Free EN returns the empty spine without a provider call. Planned
    paradigms call the provider and re-ask up to ``schema_attempts`` times
    on schema violations before failing hard: a silently accepted
    malformed plan would corrupt the spine invariant.
    """
    if not premise.strip():
        raise MalformedPlan("premise must be non-empty")
    paradigm = Paradigm.parse(paradigm)
    if paradigm is Paradigm.FREE_EN:
        return NarrativeSpine(paradigm=paradigm)
    if provider is None:
        raise MalformedPlan(f"{paradigm.value} spine requires a completion backend")

    template = "GENESIS_SPINE_SNP" if paradigm is Paradigm.SNP else "GENESIS_SPINE_HDP"
    schema = "spine-snp" if paradigm is Paradigm.SNP else "spine-hdp"
    prompt = render_prompt(template, {"premise": premise, "roster_summary": roster_summary})
    last_error: Exception | None = None
    for _ in range(schema_attempts):
        response, _record = complete_with_retry(provider, template, prompt)
        try:
            payload = parse_structured(response, schema)
            if paradigm is Paradigm.SNP:
                nodes = tuple(_node_from_payload(n, False) for n in payload["nodes"])
                return NarrativeSpine(paradigm=paradigm, snp_nodes=nodes)
            root = _node_from_payload(payload["root"], True)
            return NarrativeSpine(paradigm=paradigm, hdp_tree=root)
        except (ValidationError, MalformedPlan) as exc:
            last_error = exc
    raise MalformedPlan(f"provider plan failed schema validation after {schema_attempts} attempts: {last_error}")


def next_directive(spine: NarrativeSpine, progress: set[str]) -> Directive:
    """First uncompleted node in traversal order, or the paradigm's default."""
    unknown = progress - spine.node_ids()
    if unknown:
        raise KeyError(f"progress references unknown nodes: {sorted(unknown)}")
    if spine.paradigm is Paradigm.FREE_EN:
        return Directive(paradigm=spine.paradigm, guidance_note=FREE_EN_GUIDANCE)
    for node in spine.preorder():
        if node.id not in progress:
            return Directive(
                paradigm=spine.paradigm,
                node_id=node.id,
                title=node.title,
                objective=node.objective,
                constraints=node.constraints if spine.paradigm is Paradigm.HDP else (),
                guidance_note=node.objective,
            )
    return Directive(paradigm=spine.paradigm, terminal=True)


def check_node_completion(
    node: PlanNode,
    transcript_window: str,
    provider: Provider | None = None,
) -> bool:
    """Scripted predicate when the node carries one, provider judgment otherwise."""
    if node.predicate is not None:
        kind, _, argument = node.predicate.partition(":")
        if kind == "contains":
            return argument in transcript_window
        raise MalformedPlan(f"node {node.id}: unknown predicate kind {kind!r}")
    if provider is None:
        raise MalformedPlan(f"node {node.id}: no predicate and no provider for completion check")
    prompt = render_prompt(
        "COMPLETION_CHECK",
        {"condition": node.completion_condition, "window": transcript_window},
    )
    response, _record = complete_with_retry(provider, "COMPLETION_CHECK", prompt)
    return parse_structured(response, "completion-check")
