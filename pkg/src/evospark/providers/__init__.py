"""Pluggable completion backend: templates, structured parsing, scripted + live providers."""

from .base import CallRecord, Provider, ProviderSettings, complete_with_retry
from .schemas import (
    NewRoleInfo,
    PositionSpec,
    RelationEdge,
    SpatialLayout,
    parse_structured,
    serialize_structured,
)
from .scripted import FixtureEntry, ScriptedProvider, load_fixture
from .live import LiveProvider
from .templates import TEMPLATES, PromptTemplate, get_template, render_prompt

__all__ = [
    "CallRecord",
    "FixtureEntry",
    "LiveProvider",
    "NewRoleInfo",
    "PositionSpec",
    "PromptTemplate",
    "Provider",
    "ProviderSettings",
    "RelationEdge",
    "ScriptedProvider",
    "SpatialLayout",
    "TEMPLATES",
    "complete_with_retry",
    "get_template",
    "load_fixture",
    "parse_structured",
    "render_prompt",
    "serialize_structured",
]
