import { ServiceClient } from "./client.js";
import {
  renderGraphLines,
  renderMapLines,
  renderQueueLines,
  renderStatusLine,
  renderTranscriptHtml,
} from "./render.js";
import { applySnapshot, emptyState, recordAck, reduce, type ConsoleState } from "./viewModel.js";

// Browser wiring: one stream subscription per open run tab, all state
// updates funneled through the reducer, re-render after each event.

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function paint(state: ConsoleState, interactive: boolean): void {
  el("status").textContent = renderStatusLine(state);
  el("transcript").innerHTML = renderTranscriptHtml(state);
  el("graph").textContent = renderGraphLines(state).join("\n");
  el("map").textContent = renderMapLines(state).join("\n");
  el("queue").textContent = renderQueueLines(state).join("\n") || "(no pending promotions)";
  // Steering controls only exist for interactive runs: batch runs stay read-only.
  el("controls").style.display = interactive ? "block" : "none";
}

export async function connect(baseUrl: string, runId: string): Promise<void> {
  const client = new ServiceClient({ baseUrl });
  const state = emptyState();
  let interactive = false;
  try {
    const description = await client.getRun(runId);
    interactive = description.interactive;
    applySnapshot(state, description);
  } catch (error) {
    el("banner").textContent = `cannot load run ${runId}: ${String(error)}`;
    el("banner").style.display = "block";
    return;
  }
  paint(state, interactive);

  el<HTMLButtonElement>("send-action").onclick = async () => {
    const input = el<HTMLInputElement>("action-text");
    if (!input.value.trim()) return;
    try {
      const ack = await client.submitAction(runId, { text: input.value });
      recordAck(state, ack, input.value);
      input.value = "";
      paint(state, interactive);
    } catch (error) {
      el("banner").textContent = String(error);
      el("banner").style.display = "block";
    }
  };

  el<HTMLButtonElement>("approve").onclick = () => decide(true);
  el<HTMLButtonElement>("reject").onclick = () => decide(false);
  async function decide(approve: boolean): Promise<void> {
    const pending = state.promotions[0];
    if (!pending) return;
    pending.optimisticDecision = approve;
    paint(state, interactive);
    try {
      await client.decidePromotion(runId, pending.sparkId, approve);
    } catch (error) {
      pending.optimisticDecision = undefined;
      el("banner").textContent = String(error);
      el("banner").style.display = "block";
    }
  }

  try {
    await client.stream(runId, 0, (event) => {
      reduce(state, event);
      paint(state, interactive);
    });
  } catch (error) {
    el("banner").textContent = `stream closed: ${String(error)}`;
    el("banner").style.display = "block";
  }
}

declare global {
  interface Window {
    evosparkConnect: typeof connect;
  }
}
if (typeof window !== "undefined") {
  window.evosparkConnect = connect;
}
