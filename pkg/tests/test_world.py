from __future__ import annotations

import random
from collections import deque

import pytest

from evospark.errors import DanglingAdjacency, DuplicateCode, ParseError, UnknownLocation
from evospark.world import load_world, validate_transition


def bfs_oracle(adjacency: dict[str, set[str]], start: str, goal: str) -> int | None:
    """Independent breadth-first search used to pin shortest-path lengths."""
    if start == goal:
        return 0
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        node, dist = queue.popleft()
        for nxt in adjacency[node]:
            if nxt == goal:
                return dist + 1
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, dist + 1))
    return None


def test_minimal_single_location_world():
    world = load_world({"locations": [{"code": "hall", "name": "Hall", "description": ""}]})
    assert world.codes() == ["hall"]
    assert world.location("hall").adjacent == frozenset()


def test_one_sided_adjacency_is_symmetrized():
    world = load_world(
        {
            "locations": [
                {"code": "a", "name": "A", "description": "", "adjacent": ["b"]},
                {"code": "b", "name": "B", "description": ""},
            ]
        }
    )
    assert "a" in world.location("b").adjacent
    assert "b" in world.location("a").adjacent


def test_three_location_keep_scene():
    # A hearth-to-chambers escort is possible via the corridor: reachable,
    # but not in a single scene transition.
    world = load_world(
        {
            "locations": [
                {"code": "throne_room", "name": "Throne Room", "description": "", "adjacent": ["corridor"]},
                {"code": "corridor", "name": "Corridor", "description": "", "adjacent": ["chambers"]},
                {"code": "chambers", "name": "Chambers", "description": ""},
            ]
        }
    )
    assert len(world.codes()) == 3
    assert world.shortest_path_length("throne_room", "chambers") == 2


def test_duplicate_codes_rejected():
    with pytest.raises(DuplicateCode):
        load_world(
            {
                "locations": [
                    {"code": "hall", "name": "Hall", "description": ""},
                    {"code": "hall", "name": "Hall 2", "description": ""},
                ]
            }
        )


def test_dangling_adjacency_rejected():
    with pytest.raises(DanglingAdjacency):
        load_world(
            {"locations": [{"code": "hall", "name": "Hall", "description": "", "adjacent": ["void"]}]}
        )


@pytest.mark.parametrize("doc", ["not json at all", "{}", '{"locations": []}', '{"locations": 3}'])
def test_malformed_documents(doc):
    with pytest.raises(ParseError):
        load_world(doc)


def test_disconnected_world_warns_not_fails(caplog):
    with caplog.at_level("WARNING"):
        world = load_world(
            {
                "locations": [
                    {"code": "a", "name": "A", "description": ""},
                    {"code": "b", "name": "B", "description": ""},
                ]
            }
        )
    assert not world.is_connected()
    assert any("disconnected" in message for message in caplog.messages)


def test_transition_verdicts(keep_world):
    assert validate_transition("great_hall", "great_hall", keep_world).distance == 0
    assert validate_transition("great_hall", "great_hall", keep_world).feasible

    adjacent = validate_transition("great_hall", "corridor", keep_world)
    assert adjacent.feasible and adjacent.distance == 1

    two_hops = validate_transition("great_hall", "chambers", keep_world)
    assert not two_hops.feasible
    assert two_hops.distance == 2


def test_transition_unknown_location(keep_world):
    with pytest.raises(UnknownLocation):
        validate_transition("great_hall", "void", keep_world)


def test_adjacency_matrix_equals_transpose_and_symmetric_feasibility():
    rng = random.Random(42)
    for _ in range(30):
        n = rng.randint(2, 20)
        codes = [f"loc{i}" for i in range(n)]
        adjacency = {c: set() for c in codes}
        for _ in range(rng.randint(1, 2 * n)):
            a, b = rng.sample(codes, 2)
            adjacency[a].add(b)  # declare one-sided; loader must symmetrize
        world = load_world(
            {
                "locations": [
                    {"code": c, "name": c, "description": "", "adjacent": sorted(adjacency[c])}
                    for c in codes
                ]
            }
        )
        symmetric = {c: set(world.location(c).adjacent) for c in codes}
        for a in codes:
            for b in symmetric[a]:
                assert a in symmetric[b]
        x, y = rng.sample(codes, 2)
        assert (
            validate_transition(x, y, world).feasible
            == validate_transition(y, x, world).feasible
        )


def test_shortest_paths_match_bfs_oracle():
    rng = random.Random(7)
    for _ in range(25):
        n = rng.randint(2, 20)
        codes = [f"loc{i}" for i in range(n)]
        adjacency = {c: set() for c in codes}
        for _ in range(rng.randint(1, 3 * n)):
            a, b = rng.sample(codes, 2)
            adjacency[a].add(b)
            adjacency[b].add(a)
        world = load_world(
            {
                "locations": [
                    {"code": c, "name": c, "description": "", "adjacent": sorted(adjacency[c])}
                    for c in codes
                ]
            }
        )
        for _ in range(10):
            x, y = rng.sample(codes, 2)
            assert world.shortest_path_length(x, y) == bfs_oracle(adjacency, x, y)
