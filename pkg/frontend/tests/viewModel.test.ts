import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { StreamEvent, RunDescription } from "../src/types.js";
import { emptyState, graphEdges, recordAck, reduce, turnCount } from "../src/viewModel.js";

const here = dirname(fileURLToPath(import.meta.url));

function goldenEvents(): StreamEvent[] {
  const raw = readFileSync(join(here, "fixtures", "golden-stream.jsonl"), "utf-8");
  return raw
    .split("\n")
    .filter((line) => line.trim())
    .map((line) => StreamEvent.parse(JSON.parse(line)));
}

function goldenDescribe(): RunDescription {
  return RunDescription.parse(
    JSON.parse(readFileSync(join(here, "fixtures", "golden-describe.json"), "utf-8")),
  );
}

describe("view model over a finished golden run", () => {
  it("renders exactly one turn per stream turn event (no drops, no dupes)", () => {
    const events = goldenEvents();
    const state = events.reduce(reduce, emptyState());
    const streamTurnEvents = events.filter((e) => e.kind === "turn");
    expect(turnCount(state)).toBe(streamTurnEvents.length);
    expect(turnCount(state)).toBe(36);
    const ids = state.turns.map((t) => t.turn_id);
    expect(new Set(ids).size).toBe(ids.length);
  });

  it("is idempotent under replay overlap", () => {
    const events = goldenEvents();
    const state = emptyState();
    for (const event of events) reduce(state, event);
    for (const event of events.slice(0, 20)) reduce(state, event); // stale seqs
    expect(turnCount(state)).toBe(36);
  });

  it("mirrors the social graph of the REST snapshot exactly", () => {
    const state = goldenEvents().reduce(reduce, emptyState());
    expect(graphEdges(state)).toEqual(goldenDescribe().social_graph);
  });

  it("tracks roster, locations, occupancy, and scene placement", () => {
    const state = goldenEvents().reduce(reduce, emptyState());
    expect(state.roster).toEqual(["AriaVeld-en", "CorinVale-en", "MiraSenn-en"]);
    expect(state.locations).toEqual(["great_hall", "corridor", "chambers"]);
    expect(state.currentScene).toBe("e3s3");
    expect(state.occupancy["e3s3"]).toEqual(["AriaVeld-en", "CorinVale-en", "MiraSenn-en"]);
    expect(state.sceneLocations["e3s3"]).toBe("chambers");
    expect(state.status).toBe("finished");
  });

  it("keeps the promotion queue empty when no sparks fire", () => {
    const state = goldenEvents().reduce(reduce, emptyState());
    expect(state.promotions).toEqual([]);
  });
});

describe("promotion queue and action acks", () => {
  const base = { seq: 0, event_id: "e1" };

  it("adds on promotion_request and clears on the terminal spark event", () => {
    const state = emptyState();
    reduce(state, {
      ...base,
      seq: 1,
      kind: "promotion_request",
      spark_id: "e1:willemcrane",
      raw_name: "Willem Crane",
      score: 0.9,
      director_decision: true,
    });
    expect(state.promotions).toHaveLength(1);
    reduce(state, {
      seq: 2,
      kind: "spark",
      spark_id: "e1:willemcrane",
      raw_name: "Willem Crane",
      event_id: "e1",
      detection_site: "narration",
      state: "grounded",
      resolved_code: "WillemCrane-en",
      score: 0.9,
      transitions: ["detected->candidate", "candidate->promoted", "promoted->grounded"],
      decided_by: "human",
    });
    expect(state.promotions).toHaveLength(0);
    expect(state.roster).toContain("WillemCrane-en");
  });

  it("reconciles queued actions when the acked turn arrives", () => {
    const state = emptyState();
    recordAck(state, { turn_id: 1 }, "hello stage");
    expect(state.queuedActions).toHaveLength(1);
    reduce(state, {
      seq: 5,
      kind: "turn",
      turn_id: 1,
      event_id: "e1",
      scene_id: "e1s1",
      round: 1,
      role_code: "player",
      speaker_name: "Player",
      spatial_anchor: "<offstage; present; addressing the scene>",
      action: "speaks as the player",
      utterance: "hello stage",
      rsb_hash: "",
      llm_call_ids: [],
      duration: 0,
      source: "player",
    });
    expect(state.queuedActions).toHaveLength(0);
    expect(state.turns[0]?.source).toBe("player");
  });
});
