"""Command-line entry points: init, run, resume, eval, serve, export."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .engine import Engine, RunConfig, read_transcript, render_screenplay, transcript_hash
from .evaluation import aggregate, judge_pair, metrics_for
from .fixtures import golden_free_en_config, golden_free_en_script
from .providers.base import ProviderSettings
from .providers.live import LiveProvider
from .providers.scripted import ScriptedProvider, load_fixture
from .scenarios import SCENARIOS, get_scenario
from .spine import Paradigm
from .util import canonical_json


def _provider_for(fixture: str | None):
    if fixture:
        return ScriptedProvider(load_fixture(fixture))
    return LiveProvider(ProviderSettings.from_env())


def _load_config(path: str, seed: int | None, interactive: bool) -> RunConfig:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if seed is not None:
        data["seed"] = seed
    if interactive:
        data["interactive"] = True
    if data.get("scenario_id") and not data.get("premise"):
        scenario = get_scenario(data["scenario_id"])
        data["premise"] = scenario.premise
        data.setdefault("language", scenario.language)
    return RunConfig.from_dict(data)


@click.group()
def main() -> None:
    """Narrative multi-agent simulation engine."""


@main.command()
@click.option("--config", "config_path", default="evospark-run.json", show_default=True)
@click.option("--fixture-out", default=None, help="Also write the demo scripted fixture here.")
def init(config_path: str, fixture_out: str | None) -> None:
    """Write a ready-to-run demo config (scripted, deterministic)."""
    config = golden_free_en_config()
    config["paradigm"] = config["paradigm"].value
    Path(config_path).write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    click.echo(f"wrote {config_path}")
    if fixture_out:
        entries = [
            {"template_id": e.template_id, "response": e.response}
            for e in golden_free_en_script()
        ]
        Path(fixture_out).write_text(json.dumps(entries, indent=2) + "\n", encoding="utf-8")
        click.echo(f"wrote {fixture_out}")
    click.echo(f"scenarios available by id: {', '.join(sorted(SCENARIOS))}")


@main.command()
@click.option("--config", "config_path", required=True)
@click.option("--seed", type=int, default=None)
@click.option("--fixture", default=None, help="Scripted-provider fixture JSON (omit for live backend).")
@click.option("--data-dir", default="runs", show_default=True)
@click.option("--interactive", is_flag=True, default=False)
def run(config_path: str, seed: int | None, fixture: str | None, data_dir: str, interactive: bool) -> None:
    """Execute a run to completion and print its transcript hash."""
    config = _load_config(config_path, seed, interactive)
    run_dir = Path(data_dir) / config.run_id
    engine = Engine(config, _provider_for(fixture), run_dir)
    engine.run()
    click.echo(f"run {config.run_id}: {engine.turn_counter} turns, seq {engine.seq}")
    click.echo(f"transcript sha256 {transcript_hash(run_dir)}")


@main.command()
@click.option("--run-dir", required=True)
@click.option("--fixture", default=None)
@click.option("--checkpoint", type=int, default=None, help="Event number to resume from (default latest).")
def resume(run_dir: str, fixture: str | None, checkpoint: int | None) -> None:
    """Continue a run from its last (or a given) event-boundary checkpoint."""
    engine = Engine.resume(run_dir, _provider_for(fixture), checkpoint=checkpoint)
    engine.run()
    click.echo(f"run {engine.config.run_id}: resumed to completion")
    click.echo(f"transcript sha256 {transcript_hash(run_dir)}")


@main.command(name="eval")
@click.option("--a", "run_a", required=True, help="Run directory for side A.")
@click.option("--b", "run_b", required=True, help="Run directory for side B.")
@click.option("--paradigm", required=True)
@click.option("--judge-model", default=None, help="Override EVOSPARK_MODEL for judging.")
@click.option("--fixture", default=None, help="Scripted judge fixture (for offline evaluation).")
@click.option("--long-horizon", is_flag=True, default=False, help="Include the evolution-alignment metric.")
@click.option("--out", default=None, help="Write the JSON report here.")
def eval_runs(
    run_a: str,
    run_b: str,
    paradigm: str,
    judge_model: str | None,
    fixture: str | None,
    long_horizon: bool,
    out: str | None,
) -> None:
    """Pairwise position-swapped judging of two finished runs."""
    if fixture:
        provider = ScriptedProvider(load_fixture(fixture))
    else:
        settings = ProviderSettings.from_env()
        if judge_model:
            settings.model = judge_model
        provider = LiveProvider(settings)

    def transcript_text(run_dir: str) -> str:
        lines = []
        for record in read_transcript(run_dir):
            if record.get("kind") == "turn":
                lines.append(
                    f"{record['speaker_name']}: {record['spatial_anchor']} "
                    f"({record['action']}) \"{record['utterance']}\""
                )
        return "\n".join(lines)

    text_a, text_b = transcript_text(run_a), transcript_text(run_b)
    report: dict[str, dict] = {}
    rows = []
    for metric in metrics_for(Paradigm.parse(paradigm), include_long_horizon=long_horizon):
        pair = judge_pair(text_a, text_b, metric, provider, paradigm=paradigm)
        summary = aggregate([pair]).to_dict()
        report[metric] = summary
        rows.append(
            f"{metric:>4}  win A {summary['win_rate_a']:>5.0%}  "
            f"tie {summary['tie_rate']:>5.0%}  win B {summary['win_rate_b']:>5.0%}  "
            f"likert {summary['mean_likert_a']:.2f} vs {summary['mean_likert_b']:.2f}"
        )
    click.echo(f"{'metric':>6}  A={run_a}  B={run_b}")
    for row in rows:
        click.echo(row)
    if out:
        Path(out).write_text(canonical_json(report) + "\n", encoding="utf-8")
        click.echo(f"wrote {out}")


@main.command()
@click.option("--data-dir", default="runs", show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8040, show_default=True)
def serve(data_dir: str, host: str, port: int) -> None:
    """Serve the run console API (HTTP + event stream)."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(data_dir), host=host, port=port, log_level="warning")


@main.command()
@click.option("--run-dir", required=True)
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["jsonl", "screenplay-text"]),
    default="jsonl",
    show_default=True,
)
def export(run_dir: str, fmt: str) -> None:
    """Print a finished run's transcript."""
    run_dir_path = Path(run_dir)
    if fmt == "jsonl":
        transcript = run_dir_path / "transcript.jsonl"
        sys.stdout.write(transcript.read_text(encoding="utf-8") if transcript.exists() else "")
        return
    records = read_transcript(run_dir_path)
    sys.stdout.write(render_screenplay(records, run_dir_path.name))


if __name__ == "__main__":
    main()
