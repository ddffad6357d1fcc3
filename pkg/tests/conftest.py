from __future__ import annotations

import json
from pathlib import Path

import pytest

from evospark.ecgp import RoleRecord, Roster
from evospark.providers.scripted import FixtureEntry, ScriptedProvider
from evospark.snm import SnmState
from evospark.util import canonical_json
from evospark.world import load_world

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def scripted(*entries: tuple[str, object]) -> ScriptedProvider:
    """Build a scripted provider from (template_id, payload) pairs."""
    fixture = []
    for template_id, payload in entries:
        response = payload if isinstance(payload, str) else canonical_json(payload)
        fixture.append(FixtureEntry(template_id=template_id, response=response))
    return ScriptedProvider(fixture)


@pytest.fixture
def keep_world():
    return load_world(
        {
            "locations": [
                {"code": "great_hall", "name": "Great Hall", "description": "Vaulted.", "adjacent": ["corridor"]},
                {"code": "corridor", "name": "Corridor", "description": "Narrow.", "adjacent": ["chambers"]},
                {"code": "chambers", "name": "Chambers", "description": "Quiet.", "adjacent": []},
            ]
        }
    )


@pytest.fixture
def keep_roster():
    return Roster(
        [
            RoleRecord("AriaVeld-en", "Aria Veld", "the Warden", "main", "genesis"),
            RoleRecord("CorinVale-en", "Corin Vale", "the Scribe", "main", "genesis"),
            RoleRecord("MiraSenn-en", "Mira Senn", "the Falcon", "main", "genesis"),
        ]
    )


@pytest.fixture
def keep_snm(keep_roster):
    snm = SnmState()
    snm.register_roster(
        [
            {"role_code": r.role_code, "profile": f"{r.name}'s profile", "status": "steady", "goals": []}
            for r in keep_roster.records()
        ]
    )
    return snm


def load_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))
