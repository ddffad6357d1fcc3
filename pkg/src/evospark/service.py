"""Run lifecycle service: persistence, HTTP + event-stream API, human hooks.

Each run executes on its own thread; every persisted transcript record is
also a stream event, so subscribers replay history from disk-backed state
and then tail live appends with no gaps or duplicates. Promotion requests
in interactive runs pause only the raising scene: the engine thread blocks
until a human decision arrives or the timeout applies the director's call.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import PlainTextResponse, StreamingResponse
from pydantic import BaseModel

from .ecgp import Spark
from .engine import Engine, PlayerAction, RunConfig, read_transcript, render_screenplay
from .errors import (
    ConfigError,
    EvosparkError,
    NotAwaiting,
    RunNotInteractive,
    UnknownPhase,
    UnknownRun,
    UnknownSpark,
)
from .providers.base import ProviderSettings
from .providers.live import LiveProvider
from .providers.scripted import FixtureEntry, ScriptedProvider, load_fixture
from .util import canonical_json

DEFAULT_PROMOTION_TIMEOUT = 60.0


@dataclass
class RunRuntime:
    engine: Engine
    status: str = "created"  # created|running|paused|awaiting_human|finished|failed
    records: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    condition: threading.Condition = field(default_factory=threading.Condition)
    pause_gate: threading.Event = field(default_factory=threading.Event)
    pending_promotions: dict[str, dict] = field(default_factory=dict)
    promotion_timeout: float = DEFAULT_PROMOTION_TIMEOUT
    thread: threading.Thread | None = None
    error: str | None = None

    def publish(self, record: dict) -> None:
        with self.condition:
            self.records.append(record)
            self.condition.notify_all()

    def set_status(self, status: str) -> None:
        with self.condition:
            self.status = status
            self.condition.notify_all()

    def handle(self) -> dict:
        engine = self.engine
        return {
            "run_id": engine.config.run_id,
            "status": self.status,
            "interactive": engine.config.interactive,
            "paradigm": engine.config.paradigm.value,
            "event_cursor": engine.event_cursor,
            "event_budget": engine.config.event_budget,
            "turns": engine.turn_counter,
            "seq": engine.seq,
            "error": self.error,
        }


class RunManager:
    """Hosts many concurrent runs; one orchestration thread per run."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.runs: dict[str, RunRuntime] = {}
        self._idempotency: dict[str, str] = {}
        self._registry_lock = threading.Lock()

    # --- helpers ------------------------------------------------------------

    def _get(self, run_id: str) -> RunRuntime:
        runtime = self.runs.get(run_id)
        if runtime is None:
            raise UnknownRun(f"no run {run_id!r}")
        return runtime

    def _build_provider(self, payload: dict):
        fixture = payload.get("fixture")
        fixture_path = payload.get("fixture_path")
        if fixture is not None:
            entries = [
                FixtureEntry(
                    template_id=e["template_id"],
                    response=e["response"],
                    prompt_sha256=e.get("prompt_sha256"),
                )
                for e in fixture
            ]
            return ScriptedProvider(entries)
        if fixture_path:
            return ScriptedProvider(load_fixture(fixture_path))
        return LiveProvider(ProviderSettings.from_env())

    # --- lifecycle --------------------------------------------------------------

    def create_run(self, payload: dict, idempotency_key: str | None = None) -> dict:
        with self._registry_lock:
            if idempotency_key and idempotency_key in self._idempotency:
                return self._get(self._idempotency[idempotency_key]).handle()
            try:
                config = RunConfig.from_dict(payload["config"])
            except (KeyError, TypeError) as exc:
                raise ConfigError(f"invalid run config: {exc}") from exc
            if config.run_id in self.runs:
                raise ConfigError(f"run id {config.run_id!r} already exists")
            run_dir = self.data_dir / config.run_id
            if run_dir.exists():
                raise ConfigError(f"run directory for {config.run_id!r} already exists")
            provider = self._build_provider(payload)

            runtime = RunRuntime(engine=None)  # placeholder until engine exists
            runtime.promotion_timeout = float(
                payload.get("promotion_timeout", DEFAULT_PROMOTION_TIMEOUT)
            )
            start_paused = bool(payload.get("start_paused", False))
            if not start_paused:
                runtime.pause_gate.set()
            engine = Engine(
                config,
                provider,
                run_dir,
                stream_hook=runtime.publish,
                promotion_hook=self._promotion_hook(runtime),
                round_gate=self._round_gate(runtime),
            )
            runtime.engine = engine
            self.runs[config.run_id] = runtime
            if idempotency_key:
                self._idempotency[idempotency_key] = config.run_id

        engine.genesis()  # synchronous: handle is only returned with checkpoint 0 on disk
        runtime.set_status("paused" if start_paused else "running")
        self._start_thread(runtime)
        return runtime.handle()

    def resume_run(self, run_id: str, payload: dict) -> dict:
        """Crash recovery: rebuild from the newest checkpoint and continue."""
        with self._registry_lock:
            if run_id in self.runs and self.runs[run_id].status in ("running", "paused"):
                raise ConfigError(f"run {run_id!r} is still active")
            run_dir = self.data_dir / run_id
            if not run_dir.exists():
                raise UnknownRun(f"no persisted run {run_id!r}")
            provider = self._build_provider(payload)
            runtime = RunRuntime(engine=None)
            runtime.promotion_timeout = float(
                payload.get("promotion_timeout", DEFAULT_PROMOTION_TIMEOUT)
            )
            runtime.pause_gate.set()
            engine = Engine.resume(
                run_dir,
                provider,
                stream_hook=runtime.publish,
                promotion_hook=self._promotion_hook(runtime),
                round_gate=self._round_gate(runtime),
            )
            runtime.engine = engine
            runtime.records = read_transcript(run_dir)
            self.runs[run_id] = runtime
        runtime.set_status("running")
        self._start_thread(runtime)
        return runtime.handle()

    def _start_thread(self, runtime: RunRuntime) -> None:
        def work() -> None:
            try:
                runtime.engine.run()
                runtime.set_status("finished")
            except EvosparkError as exc:
                runtime.error = str(exc)
                runtime.set_status("failed")
            except Exception as exc:  # surface, never swallow silently
                runtime.error = f"{type(exc).__name__}: {exc}"
                runtime.set_status("failed")

        runtime.thread = threading.Thread(target=work, name="evospark-run", daemon=True)
        runtime.thread.start()

    def _round_gate(self, runtime: RunRuntime):
        def gate() -> None:
            runtime.pause_gate.wait()
            with runtime.lock:
                pass  # serialize round starts against action reservations

        return gate

    def _promotion_hook(self, runtime: RunRuntime):
        def hook(spark: Spark, director_says: bool) -> bool | None:
            box: dict = {"decision": None, "event": threading.Event()}
            with runtime.condition:
                runtime.pending_promotions[spark.spark_id] = box
                runtime.status = "awaiting_human"
                runtime.condition.notify_all()
            decided = box["event"].wait(timeout=runtime.promotion_timeout)
            with runtime.condition:
                runtime.pending_promotions.pop(spark.spark_id, None)
                runtime.status = "running"
                runtime.condition.notify_all()
            return box["decision"] if decided else None  # timeout -> director's call

        return hook

    # --- operations ------------------------------------------------------------

    def submit_action(self, run_id: str, action: PlayerAction) -> dict:
        runtime = self._get(run_id)
        if runtime.status in ("finished", "failed"):
            raise UnknownPhase(f"run {run_id!r} is {runtime.status}; actions are closed")
        if not runtime.engine.config.interactive:
            raise RunNotInteractive(f"run {run_id!r} is not interactive")
        with runtime.lock:
            turn_id = runtime.engine.apply_player_action(action)
        return {"run_id": run_id, "turn_id": turn_id, "queued": True}

    def decide_promotion(self, run_id: str, spark_id: str, approve: bool) -> dict:
        runtime = self._get(run_id)
        with runtime.condition:
            box = runtime.pending_promotions.get(spark_id)
            if box is None:
                known = any(
                    r.get("kind") == "spark" and r.get("spark_id") == spark_id
                    for r in runtime.records
                ) or any(
                    r.get("kind") == "promotion_request" and r.get("spark_id") == spark_id
                    for r in runtime.records
                )
                if known:
                    raise NotAwaiting(f"spark {spark_id!r} is no longer awaiting a decision")
                raise UnknownSpark(f"no pending spark {spark_id!r}")
        box["decision"] = bool(approve)
        box["event"].set()
        return {"run_id": run_id, "spark_id": spark_id, "approved": bool(approve)}

    def pause(self, run_id: str) -> dict:
        runtime = self._get(run_id)
        if runtime.status not in ("running", "awaiting_human"):
            raise UnknownPhase(f"cannot pause a {runtime.status} run")
        runtime.pause_gate.clear()
        runtime.set_status("paused")
        return runtime.handle()

    def resume(self, run_id: str) -> dict:
        runtime = self._get(run_id)
        if runtime.status != "paused":
            raise UnknownPhase(f"cannot resume a {runtime.status} run")
        runtime.pause_gate.set()
        runtime.set_status("running")
        return runtime.handle()

    def export(self, run_id: str, fmt: str) -> tuple[str, str]:
        runtime = self.runs.get(run_id)
        run_dir = self.data_dir / run_id
        if runtime is None and not run_dir.exists():
            raise UnknownRun(f"no run {run_id!r}")
        transcript_path = run_dir / "transcript.jsonl"
        if fmt == "jsonl":
            text = transcript_path.read_text(encoding="utf-8") if transcript_path.exists() else ""
            return text, "application/jsonl"
        if fmt == "screenplay-text":
            records = read_transcript(run_dir)
            return render_screenplay(records, run_id), "text/plain"
        raise ConfigError(f"unknown export format {fmt!r}")

    def describe(self, run_id: str) -> dict:
        runtime = self._get(run_id)
        engine = runtime.engine
        graph = {}
        for role in engine.snm.roles():
            snapshot = engine.snm.query_rsb(role)
            graph[role] = {k: v.to_dict() for k, v in snapshot.relations.items()}
        occupancy: dict[str, list[str]] = {}
        latest_layout = None
        for record in reversed(runtime.records):
            if record.get("kind") == "layout":
                latest_layout = record
                break
        if latest_layout:
            occupancy[latest_layout["scene_id"]] = sorted(latest_layout["layout"]["positions"])
        return {
            **runtime.handle(),
            "roster": [r.to_dict() for r in engine.roster.records()],
            "locations": engine.world.codes() if engine.world else [],
            "social_graph": graph,
            "occupancy": occupancy,
            "pending_promotions": sorted(runtime.pending_promotions),
        }

    def stream(self, run_id: str, from_seq: int = 0):
        runtime = self._get(run_id)
        cursor = 0
        while True:
            with runtime.condition:
                while cursor >= len(runtime.records) and runtime.status in (
                    "created",
                    "running",
                    "paused",
                    "awaiting_human",
                ):
                    runtime.condition.wait(timeout=0.2)
                if cursor >= len(runtime.records):
                    if runtime.status in ("finished", "failed"):
                        return
                    continue
                batch = runtime.records[cursor:]
                cursor = len(runtime.records)
            for record in batch:
                if record["seq"] > from_seq:
                    yield record


# --- HTTP layer ---------------------------------------------------------------


class ActionBody(BaseModel):
    text: str
    as_role: str | None = None
    mentions: list[str] = []


class PromotionBody(BaseModel):
    approve: bool


class CreateRunBody(BaseModel):
    config: dict
    fixture: list[dict] | None = None
    fixture_path: str | None = None
    idempotency_key: str | None = None
    promotion_timeout: float | None = None
    start_paused: bool = False


class ResumeRunBody(BaseModel):
    fixture: list[dict] | None = None
    fixture_path: str | None = None
    promotion_timeout: float | None = None


_HTTP_CODES: list[tuple[type, int]] = [
    (ConfigError, 400),
    (UnknownRun, 404),
    (UnknownSpark, 404),
    (NotAwaiting, 409),
    (UnknownPhase, 409),
    (RunNotInteractive, 409),
]


def _http_error(exc: Exception) -> HTTPException:
    for err_type, code in _HTTP_CODES:
        if isinstance(exc, err_type):
            return HTTPException(status_code=code, detail=str(exc))
    if isinstance(exc, ValueError):
        return HTTPException(status_code=400, detail=str(exc))
    return HTTPException(status_code=500, detail=str(exc))


def create_app(data_dir: str | Path, manager: RunManager | None = None) -> FastAPI:
    app = FastAPI(title="evospark", version="0.1.0")
    app.state.manager = manager or RunManager(data_dir)

    def auth(request: Request) -> None:
        token = os.environ.get("EVOSPARK_SERVICE_TOKEN")
        if token and request.headers.get("Authorization") != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="invalid or missing bearer token")

    @app.get("/healthz")
    def healthz() -> dict:
        return {"ok": True}

    @app.post("/runs", dependencies=[Depends(auth)])
    def create_run(body: CreateRunBody) -> dict:
        try:
            payload = body.model_dump(exclude_none=True)
            return app.state.manager.create_run(payload, body.idempotency_key)
        except Exception as exc:
            raise _http_error(exc) from exc

    @app.get("/runs", dependencies=[Depends(auth)])
    def list_runs() -> list[dict]:
        return [runtime.handle() for runtime in app.state.manager.runs.values()]

    @app.get("/runs/{run_id}", dependencies=[Depends(auth)])
    def get_run(run_id: str) -> dict:
        try:
            return app.state.manager.describe(run_id)
        except Exception as exc:
            raise _http_error(exc) from exc

    @app.post("/runs/{run_id}/resume-from-checkpoint", dependencies=[Depends(auth)])
    def resume_from_checkpoint(run_id: str, body: ResumeRunBody) -> dict:
        try:
            return app.state.manager.resume_run(run_id, body.model_dump(exclude_none=True))
        except Exception as exc:
            raise _http_error(exc) from exc

    @app.post("/runs/{run_id}/actions", dependencies=[Depends(auth)])
    def submit_action(run_id: str, body: ActionBody) -> dict:
        try:
            action = PlayerAction(
                text=body.text, as_role=body.as_role, mentions=tuple(body.mentions)
            )
            return app.state.manager.submit_action(run_id, action)
        except Exception as exc:
            raise _http_error(exc) from exc

    @app.post("/runs/{run_id}/promotions/{spark_id}", dependencies=[Depends(auth)])
    def decide_promotion(run_id: str, spark_id: str, body: PromotionBody) -> dict:
        try:
            return app.state.manager.decide_promotion(run_id, spark_id, body.approve)
        except Exception as exc:
            raise _http_error(exc) from exc

    @app.post("/runs/{run_id}/pause", dependencies=[Depends(auth)])
    def pause(run_id: str) -> dict:
        try:
            return app.state.manager.pause(run_id)
        except Exception as exc:
            raise _http_error(exc) from exc

    @app.post("/runs/{run_id}/resume", dependencies=[Depends(auth)])
    def resume(run_id: str) -> dict:
        try:
            return app.state.manager.resume(run_id)
        except Exception as exc:
            raise _http_error(exc) from exc

    @app.get("/runs/{run_id}/export", dependencies=[Depends(auth)])
    def export(run_id: str, format: str = Query("jsonl")) -> PlainTextResponse:
        try:
            text, media_type = app.state.manager.export(run_id, format)
            return PlainTextResponse(content=text, media_type=media_type)
        except Exception as exc:
            raise _http_error(exc) from exc

    @app.get("/runs/{run_id}/stream", dependencies=[Depends(auth)])
    def stream(run_id: str, from_seq: int = Query(0)) -> StreamingResponse:
        try:
            app.state.manager._get(run_id)
        except Exception as exc:
            raise _http_error(exc) from exc

        def sse():
            for record in app.state.manager.stream(run_id, from_seq):
                yield f"id: {record['seq']}\ndata: {canonical_json(record)}\n\n"

        return StreamingResponse(sse(), media_type="text/event-stream")

    return app
