import type { ConsoleState } from "./viewModel.js";
import type { TurnEvent } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** One transcript row; the spatial anchor gets its own span so it renders distinctly. */
export function renderTurnHtml(turn: TurnEvent): string {
  const anchor = turn.spatial_anchor
    ? `<span class="anchor">${escapeHtml(turn.spatial_anchor)}</span> `
    : "";
  const who = `<b class="${turn.source === "player" ? "player" : "agent"}">${escapeHtml(turn.speaker_name)}</b>`;
  return (
    `<div class="turn" data-turn-id="${turn.turn_id}">` +
    `${who}: ${anchor}<em>(${escapeHtml(turn.action)})</em> ` +
    `&quot;${escapeHtml(turn.utterance)}&quot;</div>`
  );
}

export function renderTranscriptHtml(state: ConsoleState): string {
  return state.turns.map(renderTurnHtml).join("\n");
}

/** Social graph as stable text lines: one directed edge per roster pair. */
export function renderGraphLines(state: ConsoleState): string[] {
  const lines: string[] = [];
  for (const role of Object.keys(state.socialGraph).sort()) {
    const edges = state.socialGraph[role] ?? {};
    for (const counterpart of Object.keys(edges).sort()) {
      const edge = edges[counterpart];
      if (!edge) continue;
      const labels = edge.relation.length ? edge.relation.join(", ") : "–";
      lines.push(`${role} -[${labels}]-> ${counterpart}`);
    }
  }
  return lines;
}

/** Map view: every location, with the current scene's cast shown at its location. */
export function renderMapLines(state: ConsoleState): string[] {
  const currentLocation = state.currentScene
    ? state.sceneLocations[state.currentScene]
    : undefined;
  const cast = state.currentScene ? (state.occupancy[state.currentScene] ?? []) : [];
  return state.locations.map((code) => {
    if (code === currentLocation && cast.length) {
      return `${code} * ${cast.join(", ")} (${state.currentScene})`;
    }
    return code;
  });
}

export function renderQueueLines(state: ConsoleState): string[] {
  return state.promotions.map(
    (p) =>
      `${p.sparkId}: "${p.rawName}" score=${p.score ?? "?"} director says ${
        p.directorDecision ? "promote" : "reject"
      }${p.optimisticDecision !== undefined ? " (deciding…)" : ""}`,
  );
}

export function renderStatusLine(state: ConsoleState): string {
  const queued = state.queuedActions.length
    ? `, ${state.queuedActions.length} action(s) queued`
    : "";
  return `${state.runId ?? "?"} [${state.status}] seq=${state.cursor} turns=${state.turns.length}${queued}`;
}
