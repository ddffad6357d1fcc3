from __future__ import annotations

import json

import pytest

from evospark.engine import (
    Engine,
    PlayerAction,
    RunConfig,
    read_transcript,
    render_screenplay,
    transcript_hash,
)
from evospark.errors import ConfigError, ProviderError, RunNotInteractive
from evospark.evaluation import eaa_evolution_points
from evospark.fixtures import (
    ScriptedRunBuilder,
    SparkScript,
    golden_free_en_config,
    golden_free_en_script,
    smoke_snp_config,
    smoke_snp_script,
)
from evospark.providers.scripted import ScriptedProvider
from evospark.spine import Paradigm


def run_golden(tmp_path, name="run", **overrides):
    config = RunConfig.from_dict({**golden_free_en_config(), **overrides})
    engine = Engine(config, ScriptedProvider(golden_free_en_script()), tmp_path / name)
    engine.run()
    return engine


# --- config validation --------------------------------------------------------


def test_config_rejects_bad_temperature():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({**golden_free_en_config(), "temperature": 0.0})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({**golden_free_en_config(), "temperature": 2.5})


def test_config_rejects_zero_event_budget():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({**golden_free_en_config(), "event_budget": 0})


# --- genesis -------------------------------------------------------------------


def test_genesis_creates_all_artifacts(tmp_path):
    config = RunConfig.from_dict(golden_free_en_config())
    engine = Engine(config, ScriptedProvider(golden_free_en_script()), tmp_path / "g")
    engine.genesis()
    assert engine.world is not None and len(engine.world.codes()) == 3
    assert len(engine.roster) == 3
    assert engine.spine.is_empty
    assert engine.snm.get_swkb("lore:keep")
    assert set(engine.snm.roles()) == {"AriaVeld-en", "CorinVale-en", "MiraSenn-en"}
    assert (tmp_path / "g" / "checkpoints" / "ckpt-0000.json").exists()
    assert 1 in engine.pending_plans  # first event pre-aligned


def test_genesis_malformed_world_fails_after_retries(tmp_path):
    provider = ScriptedProvider(
        [e for e in golden_free_en_script() if e.template_id != "GENESIS_WORLD"]
    )
    bad = ScriptedRunBuilder().build()[:0]  # no entries at all: simplest hard failure
    config = RunConfig.from_dict(golden_free_en_config())
    from evospark.providers.scripted import FixtureEntry

    provider = ScriptedProvider(
        [FixtureEntry("GENESIS_WORLD", "```json\n{}\n```")] * 3
    )
    with pytest.raises(ProviderError):
        Engine(config, provider, tmp_path / "bad").genesis()


def test_genesis_classical_premise_casts_the_lovers(tmp_path):
    from evospark.fixtures import default_locations, default_lore
    from evospark.scenarios import get_scenario

    premise = get_scenario("classical_verona").premise
    cast = [
        {
            "role_code": "RomeoMontague-en",
            "name": "Romeo Montague",
            "nickname": "Romeo",
            "profile": "An impulsive young Montague.",
            "status": "Newly, secretly married.",
            "goals": ["stay alive", "stay married"],
        },
        {
            "role_code": "JulietCapulet-en",
            "name": "Juliet Capulet",
            "nickname": "Juliet",
            "profile": "A resolute young Capulet.",
            "status": "Newly, secretly married.",
            "goals": ["escape the feud"],
        },
    ]
    builder = ScriptedRunBuilder(
        paradigm=Paradigm.SNP,
        events=1,
        scenes_per_event=1,
        rounds_per_scene=2,
        cast=cast,
        spine_nodes=4,
    )
    config = RunConfig.from_dict(
        {
            "run_id": "verona",
            "premise": premise,
            "paradigm": "snp",
            "event_budget": 1,
            "scenes_per_event": 1,
            "rounds_per_scene": 2,
            "seed": 1,
        }
    )
    engine = Engine(config, ScriptedProvider(builder.build()), tmp_path / "verona")
    engine.genesis()
    assert {"RomeoMontague-en", "JulietCapulet-en"} <= set(engine.roster.codes())
    assert not engine.spine.is_empty
    assert len(engine.spine.preorder()) == 4


# --- golden run structure -------------------------------------------------------


def test_golden_run_counts(tmp_path):
    engine = run_golden(tmp_path)
    records = read_transcript(tmp_path / "run")
    kinds = {}
    for record in records:
        kinds[record["kind"]] = kinds.get(record["kind"], 0) + 1
    assert kinds["turn"] == 36  # 3 events x 3 scenes x 4 rounds
    assert kinds["layout"] == 36
    assert kinds["metabolism"] == 9  # 3 roles x 3 events
    assert engine.status == "finished"


def test_every_turn_carries_anchor_from_validated_layout(tmp_path):
    run_golden(tmp_path)
    records = read_transcript(tmp_path / "run")
    layout_status = {}
    for record in records:
        if record["kind"] == "layout":
            layout_status[(record["event_id"], record["scene_id"], record["round"])] = record[
                "verdict"
            ]["status"]
    turns = [r for r in records if r["kind"] == "turn"]
    assert turns
    for turn in turns:
        anchor = turn["spatial_anchor"]
        assert anchor.startswith("<") and anchor.endswith(">") and anchor.count(";") == 2
        assert layout_status[(turn["event_id"], turn["scene_id"], turn["round"])] in (
            "valid",
            "valid_with_spark",
        )


def test_layout_coverage_equals_participants_in_all_valid_rounds(tmp_path):
    run_golden(tmp_path)
    for record in read_transcript(tmp_path / "run"):
        if record["kind"] != "layout":
            continue
        if record["verdict"]["status"] in ("valid", "valid_with_spark"):
            assert len(record["layout"]["positions"]) == 3


def test_free_en_run_has_no_plot_constraints(tmp_path):
    run_golden(tmp_path)
    raw = (tmp_path / "run" / "transcript.jsonl").read_text(encoding="utf-8")
    assert "Plot constraint:" not in raw


def test_seq_strictly_increasing(tmp_path):
    run_golden(tmp_path)
    seqs = [r["seq"] for r in read_transcript(tmp_path / "run")]
    assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)


def test_turns_record_snapshot_hash_for_evolution_judging(tmp_path):
    run_golden(tmp_path)
    records = read_transcript(tmp_path / "run")
    turns = [r for r in records if r["kind"] == "turn"]
    assert all(r["rsb_hash"] for r in turns)
    # snapshots evolve between events, so change points must exist
    assert eaa_evolution_points(turns)


def test_determinism_and_resume(tmp_path):
    engine_a = run_golden(tmp_path, "a")
    engine_b = run_golden(tmp_path, "b")
    assert transcript_hash(tmp_path / "a") == transcript_hash(tmp_path / "b")

    config = RunConfig.from_dict(golden_free_en_config())
    engine = Engine(config, ScriptedProvider(golden_free_en_script()), tmp_path / "c")
    engine.genesis()
    engine.run_event(1)
    del engine
    resumed = Engine.resume(tmp_path / "c", ScriptedProvider(golden_free_en_script()))
    resumed.run()
    assert transcript_hash(tmp_path / "c") == transcript_hash(tmp_path / "a")


# --- player actions -----------------------------------------------------------------


def interactive_engine(tmp_path, player_rounds, name="inter"):
    builder = ScriptedRunBuilder(
        paradigm=Paradigm.FREE_EN,
        events=1,
        scenes_per_event=1,
        rounds_per_scene=6,
        player_rounds=frozenset(player_rounds),
    )
    config = RunConfig.from_dict(
        {
            **golden_free_en_config(run_id=name),
            "event_budget": 1,
            "scenes_per_event": 1,
            "rounds_per_scene": 6,
            "interactive": True,
        }
    )
    return Engine(config, ScriptedProvider(builder.build()), tmp_path / name)


def test_player_action_requires_interactive(tmp_path):
    config = RunConfig.from_dict(golden_free_en_config())
    engine = Engine(config, ScriptedProvider(golden_free_en_script()), tmp_path / "ni")
    with pytest.raises(RunNotInteractive):
        engine.apply_player_action(PlayerAction(text="hello"))


def test_player_actions_fifo_and_turn_ids(tmp_path):
    engine = interactive_engine(tmp_path, {(1, 1, 1), (1, 1, 2)})
    first = engine.apply_player_action(PlayerAction(text="First interjection"))
    second = engine.apply_player_action(PlayerAction(text="Second interjection"))
    assert (first, second) == (1, 2)
    engine.run()
    turns = [r for r in read_transcript(engine.run_dir) if r["kind"] == "turn"]
    assert turns[0]["source"] == "player" and turns[0]["utterance"] == "First interjection"
    assert turns[1]["source"] == "player" and turns[1]["utterance"] == "Second interjection"
    assert turns[0]["turn_id"] == 1 and turns[1]["turn_id"] == 2
    assert all(t["source"] == "agent" for t in turns[2:])


def test_player_action_queued_midway_lands_next_round(tmp_path):
    engine = interactive_engine(tmp_path, {(1, 1, 4)}, name="mid")
    engine.genesis()

    captured = {}
    original = engine._agent_turn

    def spy(*args, **kwargs):
        turn = original(*args, **kwargs)
        if turn.round == 3 and "queued" not in captured:
            engine.apply_player_action(PlayerAction(text="Speaking from the floor"))
            captured["queued"] = turn.round
        return turn

    engine._agent_turn = spy
    engine.run()
    turns = [r for r in read_transcript(engine.run_dir) if r["kind"] == "turn"]
    player_turns = [t for t in turns if t["source"] == "player"]
    assert len(player_turns) == 1
    assert player_turns[0]["round"] == 4  # queued during round 3, speaks in round 4


def test_player_mentions_take_spark_detection_path(tmp_path):
    builder = ScriptedRunBuilder(
        paradigm=Paradigm.FREE_EN,
        events=1,
        scenes_per_event=1,
        rounds_per_scene=2,
        player_rounds=frozenset({(1, 1, 1)}),
    )
    entries = builder.build()
    from evospark.providers.scripted import FixtureEntry
    from evospark.util import canonical_json

    entries.append(
        FixtureEntry("SPARK_VALIDATION", canonical_json({"score": 0.1, "reason": "incidental"}))
    )
    config = RunConfig.from_dict(
        {
            **golden_free_en_config(run_id="spark-parity"),
            "event_budget": 1,
            "scenes_per_event": 1,
            "rounds_per_scene": 2,
            "interactive": True,
        }
    )
    engine = Engine(config, ScriptedProvider(entries), tmp_path / "par")
    engine.apply_player_action(
        PlayerAction(text="Have you seen Willem Crane?", mentions=("Willem Crane",))
    )
    engine.run()
    sparks = [r for r in read_transcript(engine.run_dir) if r["kind"] == "spark"]
    assert len(sparks) == 1
    assert sparks[0]["raw_name"] == "Willem Crane"
    assert sparks[0]["state"] == "rejected"


# --- sparks end to end ------------------------------------------------------------


def test_spark_grounds_before_next_round_and_becomes_eligible(tmp_path):
    builder = ScriptedRunBuilder(
        paradigm=Paradigm.FREE_EN,
        events=1,
        scenes_per_event=1,
        rounds_per_scene=4,
        sparks=(SparkScript(event=1, scene=1, round=2, raw_name="Willem Crane", score=0.9),),
    )
    config = RunConfig.from_dict(
        {
            **golden_free_en_config(run_id="spark-ground"),
            "event_budget": 1,
            "scenes_per_event": 1,
            "rounds_per_scene": 4,
        }
    )
    engine = Engine(config, ScriptedProvider(builder.build()), tmp_path / "sg")
    engine.run()
    records = read_transcript(engine.run_dir)

    spark_records = [r for r in records if r["kind"] == "spark"]
    assert len(spark_records) == 1
    assert spark_records[0]["state"] == "grounded"
    assert spark_records[0]["resolved_code"] == "WillemCrane-en"
    spark_seq = spark_records[0]["seq"]

    round3_layout = next(
        r for r in records if r["kind"] == "layout" and r["round"] == 3
    )
    assert spark_seq < round3_layout["seq"]  # grounded before round 3
    assert "WillemCrane-en" in round3_layout["layout"]["positions"]

    # the grounded role takes the rotation slot in round 4
    round4_turn = next(r for r in records if r["kind"] == "turn" and r["round"] == 4)
    assert round4_turn["role_code"] == "WillemCrane-en"

    assert "WillemCrane-en" in engine.roster
    assert engine.roster.get("WillemCrane-en").tier == "emergent"
    assert engine.snm.has_role("WillemCrane-en")
    # sparks audit file mirrors the stream record
    audit = [
        json.loads(line)
        for line in (engine.run_dir / "sparks.jsonl").read_text().splitlines()
    ]
    assert audit[0]["spark_id"] == spark_records[0]["spark_id"]


def test_grounded_name_does_not_respark_on_50_turn_continuation(tmp_path):
    spark = SparkScript(event=1, scene=1, round=2, raw_name="Willem Crane", score=0.9)
    builder = ScriptedRunBuilder(
        paradigm=Paradigm.FREE_EN,
        events=5,
        scenes_per_event=2,
        rounds_per_scene=6,
        sparks=(spark,),
    )
    config = RunConfig.from_dict(
        {
            **golden_free_en_config(run_id="closure"),
            "event_budget": 5,
            "scenes_per_event": 2,
            "rounds_per_scene": 6,
        }
    )
    engine = Engine(config, ScriptedProvider(builder.build()), tmp_path / "cl")
    engine.run()
    records = read_transcript(engine.run_dir)
    turns = [r for r in records if r["kind"] == "turn"]
    spark_records = [r for r in records if r["kind"] == "spark"]
    spark_seq = spark_records[0]["seq"]
    continuation = [t for t in turns if t["seq"] > spark_seq]
    assert len(continuation) >= 50
    assert len(spark_records) == 1  # zero re-detections after grounding


# --- narrative progress ----------------------------------------------------------


def test_snp_run_completes_nodes_and_stops_at_terminal(tmp_path):
    builder = ScriptedRunBuilder(
        paradigm=Paradigm.SNP,
        events=3,
        scenes_per_event=2,
        rounds_per_scene=2,
        spine_nodes=2,
        node_completion_events=(1, 2),
    )
    config = RunConfig.from_dict(
        {
            **golden_free_en_config(run_id="snp-terminal"),
            "paradigm": "snp",
            "event_budget": 3,
            "scenes_per_event": 2,
            "rounds_per_scene": 2,
        }
    )
    engine = Engine(config, ScriptedProvider(builder.build()), tmp_path / "term")
    engine.run()
    records = read_transcript(engine.run_dir)
    completed = [r["node_id"] for r in records if r["kind"] == "node_completed"]
    assert completed == ["n1", "n2"]
    assert engine.finished_early
    assert engine.progress == {"n1", "n2"}
    # event 3 opens, hits the terminal directive, and produces no turns
    event3_turns = [r for r in records if r["kind"] == "turn" and r["event_id"] == "e3"]
    assert event3_turns == []


def test_guidance_composition_binds_constraints_outside_free_mode():
    from evospark.spine import Directive

    hdp = Directive(
        paradigm=Paradigm.HDP,
        node_id="a1",
        title="The arc",
        objective="Surface the ledger.",
        constraints=("the ledger must surface on stage",),
    )
    composed = Engine._compose_guidance(hdp, "Press them now.")
    assert "Surface the ledger." in composed
    assert "Plot constraint: the ledger must surface on stage" in composed
    assert composed.endswith("Press them now.")

    free = Directive(paradigm=Paradigm.FREE_EN, guidance_note="Improvise.")
    assert Engine._compose_guidance(free, "Press them now.") == "Press them now."


def test_hdp_run_traverses_tree_in_preorder(tmp_path):
    builder = ScriptedRunBuilder(
        paradigm=Paradigm.HDP,
        events=3,
        scenes_per_event=2,
        rounds_per_scene=2,
        spine_nodes=3,  # root + 2 children
        node_completion_events=(1, 2, 3),
    )
    config = RunConfig.from_dict(
        {
            **golden_free_en_config(run_id="hdp-run"),
            "paradigm": "hdp",
            "event_budget": 3,
            "scenes_per_event": 2,
            "rounds_per_scene": 2,
        }
    )
    engine = Engine(config, ScriptedProvider(builder.build()), tmp_path / "hdp")
    engine.run()
    records = read_transcript(engine.run_dir)
    completed = [r["node_id"] for r in records if r["kind"] == "node_completed"]
    assert completed == ["n1", "n2", "n3"]  # pre-order: root then children in order
    assert engine.progress == {"n1", "n2", "n3"}


def test_smoke_reb_counts_match_recount(tmp_path):
    config = RunConfig.from_dict(smoke_snp_config())
    engine = Engine(config, ScriptedProvider(smoke_snp_script()), tmp_path / "smoke")
    engine.run()
    assert engine.event_cursor == 15
    assert engine.snm.reflection_count("AriaVeld-en") == 15
    assert engine.snm.reflection_count("MiraSenn-en") == 8


# --- export ----------------------------------------------------------------------


def test_screenplay_rendering(tmp_path):
    run_golden(tmp_path)
    records = read_transcript(tmp_path / "run")
    text = render_screenplay(records, "run")
    lines = [line for line in text.splitlines() if line and not line.startswith("#")]
    assert len(lines) == 36
    assert lines[0].startswith("Aria Veld: <")
    assert '("' not in lines[0].split(")", 1)[0]  # anchor, then action, then dialogue
    assert lines[0].count('"') >= 2


def test_screenplay_empty_run_is_header_only():
    assert render_screenplay([], "empty").startswith("# Transcript of empty")
