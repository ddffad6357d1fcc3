import {
  ActionAck,
  PromotionAck,
  RunDescription,
  RunHandle,
  StreamEvent,
} from "./types.js";

export interface ClientOptions {
  baseUrl: string;
  token?: string;
}

/** Parse server-sent-event frames out of an incoming text chunk stream. */
export async function* parseSseStream(
  chunks: AsyncIterable<Uint8Array | string>,
): AsyncGenerator<StreamEvent> {
  const decoder = new TextDecoder();
  let buffer = "";
  for await (const chunk of chunks) {
    buffer += typeof chunk === "string" ? chunk : decoder.decode(chunk, { stream: true });
    let boundary = buffer.indexOf("\n\n");
    while (boundary !== -1) {
      const frame = buffer.slice(0, boundary);
      buffer = buffer.slice(boundary + 2);
      for (const line of frame.split("\n")) {
        if (line.startsWith("data: ")) {
          yield StreamEvent.parse(JSON.parse(line.slice("data: ".length)));
        }
      }
      boundary = buffer.indexOf("\n\n");
    }
  }
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

/** Thin typed wrapper over the run service's HTTP + event-stream API. */
export class ServiceClient {
  constructor(private readonly options: ClientOptions) {}

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.options.token) headers["Authorization"] = `Bearer ${this.options.token}`;
    return headers;
  }

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await fetch(`${this.options.baseUrl}${path}`, {
      ...init,
      headers: { ...this.headers(), ...(init?.headers ?? {}) },
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ServiceError(response.status, detail);
    }
    return response.json();
  }

  async createRun(body: Record<string, unknown>): Promise<RunHandle> {
    return RunHandle.parse(await this.request("/runs", { method: "POST", body: JSON.stringify(body) }));
  }

  async getRun(runId: string): Promise<RunDescription> {
    return RunDescription.parse(await this.request(`/runs/${runId}`));
  }

  async listRuns(): Promise<RunHandle[]> {
    const payload = (await this.request("/runs")) as unknown[];
    return payload.map((item) => RunHandle.parse(item));
  }

  async submitAction(
    runId: string,
    action: { text: string; as_role?: string; mentions?: string[] },
  ): Promise<ActionAck> {
    return ActionAck.parse(
      await this.request(`/runs/${runId}/actions`, {
        method: "POST",
        body: JSON.stringify(action),
      }),
    );
  }

  async decidePromotion(runId: string, sparkId: string, approve: boolean): Promise<PromotionAck> {
    return PromotionAck.parse(
      await this.request(`/runs/${runId}/promotions/${sparkId}`, {
        method: "POST",
        body: JSON.stringify({ approve }),
      }),
    );
  }

  async pause(runId: string): Promise<RunHandle> {
    return RunHandle.parse(await this.request(`/runs/${runId}/pause`, { method: "POST" }));
  }

  async resume(runId: string): Promise<RunHandle> {
    return RunHandle.parse(await this.request(`/runs/${runId}/resume`, { method: "POST" }));
  }

  async exportTranscript(runId: string, format: "jsonl" | "screenplay-text"): Promise<string> {
    const response = await fetch(
      `${this.options.baseUrl}/runs/${runId}/export?format=${format}`,
      { headers: this.headers() },
    );
    if (!response.ok) throw new ServiceError(response.status, response.statusText);
    return response.text();
  }

  /**
   * Subscribe to a run's event stream: history replays from `fromSeq`, then
   * live events follow until the run finishes or the signal aborts.
   */
  async stream(
    runId: string,
    fromSeq: number,
    onEvent: (event: StreamEvent) => void,
    signal?: AbortSignal,
  ): Promise<void> {
    const response = await fetch(
      `${this.options.baseUrl}/runs/${runId}/stream?from_seq=${fromSeq}`,
      { headers: this.headers(), signal },
    );
    if (!response.ok || response.body === null) {
      throw new ServiceError(response.status, "stream unavailable");
    }
    for await (const event of parseSseStream(
      response.body as unknown as AsyncIterable<Uint8Array>,
    )) {
      onEvent(event);
    }
  }
}
