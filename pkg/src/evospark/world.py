"""Modularized world map: static locations, adjacency, and transition feasibility.

The map is immutable after load and safe to share between runs. One-scene
feasibility is defined as graph adjacency (shortest path <= 1); longer moves
need intermediate travel scenes, which makes location jumps detectable
during plan alignment.
"""

from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass, field

from .errors import DanglingAdjacency, DuplicateCode, ParseError, UnknownLocation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Location:
    code: str
    name: str
    description: str
    adjacent: frozenset[str]


@dataclass(frozen=True)
class TransitionVerdict:
    feasible: bool
    distance: int | None  # shortest-path length; None when unreachable

    def __bool__(self) -> bool:  # pragma: no cover - convenience
        return self.feasible


@dataclass(frozen=True)
class WorldMap:
    locations: dict[str, Location]
    lore_refs: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.locations:
            raise ParseError("world map must define at least one location")

    def location(self, code: str) -> Location:
        try:
            return self.locations[code]
        except KeyError:
            raise UnknownLocation(f"unknown location code: {code!r}") from None

    def codes(self) -> list[str]:
        return list(self.locations)

    def shortest_path_length(self, from_code: str, to_code: str) -> int | None:
        """Breadth-first shortest path length; None if unreachable."""
        self.location(from_code)
        self.location(to_code)
        if from_code == to_code:
            return 0
        seen = {from_code}
        queue: deque[tuple[str, int]] = deque([(from_code, 0)])
        while queue:
            code, dist = queue.popleft()
            for nxt in sorted(self.locations[code].adjacent):
                if nxt == to_code:
                    return dist + 1
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append((nxt, dist + 1))
        return None

    def is_connected(self) -> bool:
        start = next(iter(self.locations))
        seen = {start}
        queue = deque([start])
        while queue:
            code = queue.popleft()
            for nxt in self.locations[code].adjacent:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return len(seen) == len(self.locations)

    def to_dict(self) -> dict:
        return {
            "locations": [
                {
                    "code": loc.code,
                    "name": loc.name,
                    "description": loc.description,
                    "adjacent": sorted(loc.adjacent),
                }
                for loc in self.locations.values()
            ],
            "lore_refs": list(self.lore_refs),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "WorldMap":
        return load_world(doc)


def load_world(doc: str | dict) -> WorldMap:
    """Parse and validate a world description document.

    Adjacency is symmetrized: declaring A->B implies B->A. Duplicate codes
    and adjacency references to undefined locations are rejected. A
    disconnected map is legal but logged as a warning, since later lore
    growth may attach new regions.
    """
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ParseError(f"world document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("locations"), list):
        raise ParseError("world document must be an object with a 'locations' list")
    raw = doc["locations"]
    if not raw:
        raise ParseError("world map must define at least one location")

    seen: dict[str, dict] = {}
    for entry in raw:
        if not isinstance(entry, dict) or "code" not in entry:
            raise ParseError(f"malformed location entry: {entry!r}")
        code = entry["code"]
        if code in seen:
            raise DuplicateCode(f"duplicate location code: {code!r}")
        seen[code] = entry

    adjacency: dict[str, set[str]] = {code: set() for code in seen}
    for code, entry in seen.items():
        for neighbor in entry.get("adjacent", []) or []:
            if neighbor not in seen:
                raise DanglingAdjacency(
                    f"location {code!r} lists undefined neighbor {neighbor!r}"
                )
            if neighbor == code:
                continue
            adjacency[code].add(neighbor)
            adjacency[neighbor].add(code)

    locations = {
        code: Location(
            code=code,
            name=entry.get("name", code),
            description=entry.get("description", ""),
            adjacent=frozenset(adjacency[code]),
        )
        for code, entry in seen.items()
    }
    world = WorldMap(locations=locations, lore_refs=tuple(doc.get("lore_refs", [])))
    if not world.is_connected():
        logger.warning("world map is disconnected; continuing (travel between components is infeasible)")
    return world


def validate_transition(from_code: str, to_code: str, world: WorldMap) -> TransitionVerdict:
    """One-scene feasibility: staying put or moving to an adjacent location."""
    distance = world.shortest_path_length(from_code, to_code)
    feasible = distance is not None and distance <= 1
    return TransitionVerdict(feasible=feasible, distance=distance)
