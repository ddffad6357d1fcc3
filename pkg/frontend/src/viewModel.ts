import type {
  RelationEdge,
  RunDescription,
  StreamEvent,
  TurnEvent,
} from "./types.js";

export interface PendingPromotion {
  sparkId: string;
  rawName: string;
  eventId: string;
  score: number | null;
  directorDecision: boolean;
  /** Set optimistically after POSTing a decision, cleared on the terminal spark event. */
  optimisticDecision?: boolean;
}

export interface ConsoleState {
  runId: string | null;
  status: string;
  cursor: number;
  turns: TurnEvent[];
  locations: string[];
  roster: string[];
  /** role -> counterpart -> edge, mirroring the latest metabolism payloads. */
  socialGraph: Record<string, Record<string, RelationEdge>>;
  /** scene -> role codes present, from each scene's latest layout. */
  occupancy: Record<string, string[]>;
  /** scene -> location code, from the aligned plans. */
  sceneLocations: Record<string, string>;
  currentScene: string | null;
  promotions: PendingPromotion[];
  completedNodes: string[];
  queuedActions: { turnId: number; text: string }[];
}

export function emptyState(): ConsoleState {
  return {
    runId: null,
    status: "unknown",
    cursor: 0,
    turns: [],
    locations: [],
    roster: [],
    socialGraph: {},
    occupancy: {},
    sceneLocations: {},
    currentScene: null,
    promotions: [],
    completedNodes: [],
    queuedActions: [],
  };
}

/**
 * The one reducer all view updates flow through. State is derived solely
 * from stream events (plus REST reads applied via `applySnapshot`): the
 * console never invents narrative state of its own.
 */
export function reduce(state: ConsoleState, event: StreamEvent): ConsoleState {
  if (event.seq <= state.cursor) {
    return state; // replay overlap: drop duplicates
  }
  state.cursor = event.seq;
  switch (event.kind) {
    case "turn": {
      state.turns.push(event);
      state.queuedActions = state.queuedActions.filter((q) => q.turnId !== event.turn_id);
      break;
    }
    case "layout": {
      state.occupancy[event.scene_id] = Object.keys(event.layout.positions).sort();
      state.currentScene = event.scene_id;
      break;
    }
    case "metabolism": {
      state.socialGraph[event.role_code] = { ...event.relations };
      break;
    }
    case "promotion_request": {
      state.promotions.push({
        sparkId: event.spark_id,
        rawName: event.raw_name,
        eventId: event.event_id,
        score: event.score,
        directorDecision: event.director_decision,
      });
      break;
    }
    case "spark": {
      // Any terminal spark resolves its queue entry, however it was decided.
      state.promotions = state.promotions.filter((p) => p.sparkId !== event.spark_id);
      if (event.state === "grounded" && event.resolved_code) {
        if (!state.roster.includes(event.resolved_code)) {
          state.roster.push(event.resolved_code);
        }
      }
      break;
    }
    case "node_completed": {
      state.completedNodes.push(event.node_id);
      break;
    }
    case "run_status": {
      const record = event as Record<string, unknown>;
      if (event.phase === "genesis") {
        state.runId = (record["run_id"] as string) ?? state.runId;
        state.roster = [...((record["roster"] as string[]) ?? [])];
        state.locations = [...((record["locations"] as string[]) ?? [])];
      }
      if (event.phase === "plans_aligned") {
        const scenes = (record["scenes"] as { scene_id: string; location: string }[]) ?? [];
        for (const scene of scenes) {
          state.sceneLocations[scene.scene_id] = scene.location;
        }
      }
      if (event.phase === "finished") state.status = "finished";
      break;
    }
  }
  return state;
}

/** Fold a REST snapshot in (initial load or reconciliation after a gap). */
export function applySnapshot(state: ConsoleState, description: RunDescription): ConsoleState {
  state.runId = description.run_id;
  state.status = description.status;
  state.roster = description.roster.map((r) => r.role_code);
  state.locations = [...description.locations];
  return state;
}

export function recordAck(state: ConsoleState, ack: { turn_id: number }, text: string): void {
  state.queuedActions.push({ turnId: ack.turn_id, text });
}

export function turnCount(state: ConsoleState): number {
  return state.turns.length;
}

/** Flatten the graph for diffing against a REST `social_graph` snapshot. */
export function graphEdges(state: ConsoleState): Record<string, Record<string, RelationEdge>> {
  return state.socialGraph;
}
