"""evospark: a narrative multi-agent simulation engine.

Expands a story premise into a long-horizon agent society with stratified
evolving memory, emergent-character grounding, and narrative-spatial
alignment around a pluggable completion backend, plus an evaluation
harness and a human-in-the-loop run service.
"""

from .ecgp import (
    ParsedOutput,
    RoleRecord,
    Roster,
    Spark,
    SparkState,
    detect_spark,
    ground_character,
    resolve_entity,
    validate_spark,
)
from .engine import Engine, PlayerAction, RunConfig, Turn, read_transcript, transcript_hash
from .errors import EvosparkError, ValidationError
from .evaluation import (
    JudgeVerdict,
    aggregate,
    cohen_kappa,
    judge_pair,
    latency_stats,
    metrics_for,
)
from .gms import (
    AlignmentReport,
    ScenePlan,
    SpatialLayout,
    generate_layout,
    offline_align,
    render_spatial_anchor,
    validate_layout,
)
from .providers import (
    FixtureEntry,
    LiveProvider,
    ProviderSettings,
    ScriptedProvider,
    parse_structured,
    render_prompt,
)
from .snm import EebEntry, RelationEdge, RsbSnapshot, SnmState, SwkbEntry
from .spine import (
    Directive,
    NarrativeSpine,
    Paradigm,
    PlanNode,
    build_spine,
    check_node_completion,
    next_directive,
)
from .world import Location, WorldMap, load_world, validate_transition

__version__ = "0.1.0"

__all__ = [
    "AlignmentReport",
    "Directive",
    "EebEntry",
    "Engine",
    "EvosparkError",
    "FixtureEntry",
    "JudgeVerdict",
    "LiveProvider",
    "Location",
    "NarrativeSpine",
    "Paradigm",
    "ParsedOutput",
    "PlanNode",
    "PlayerAction",
    "ProviderSettings",
    "RelationEdge",
    "RoleRecord",
    "Roster",
    "RsbSnapshot",
    "RunConfig",
    "ScenePlan",
    "ScriptedProvider",
    "SnmState",
    "Spark",
    "SparkState",
    "SpatialLayout",
    "SwkbEntry",
    "Turn",
    "ValidationError",
    "WorldMap",
    "aggregate",
    "build_spine",
    "check_node_completion",
    "cohen_kappa",
    "detect_spark",
    "generate_layout",
    "ground_character",
    "judge_pair",
    "latency_stats",
    "load_world",
    "metrics_for",
    "next_directive",
    "offline_align",
    "parse_structured",
    "read_transcript",
    "render_prompt",
    "render_spatial_anchor",
    "resolve_entity",
    "transcript_hash",
    "validate_layout",
    "validate_spark",
    "validate_transition",
]
