/**
 * Typed client for the session service. Reads are open; mutations carry the
 * shared token from settings. Events can be consumed as JSON polls (used by
 * the tests and the reconnect path) or as a live SSE stream.
 */

import type {
  Decision,
  EngineEvent,
  GateTicket,
  ProvenanceRecord,
  SessionDescriptor,
} from "./types.js";

export interface ConsoleSettings {
  baseUrl: string;
  token: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: Record<string, unknown>,
  ) {
    super(`service error ${status}: ${JSON.stringify(body)}`);
  }
}

export class ApiClient {
  constructor(private readonly settings: ConsoleSettings) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (method !== "GET") {
      headers["x-auth-token"] = this.settings.token;
    }
    const response = await fetch(`${this.settings.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = (await response.json()) as Record<string, unknown>;
    if (!response.ok) {
      throw new ApiError(response.status, payload);
    }
    return payload as T;
  }

  listSessions(): Promise<SessionDescriptor[]> {
    return this.request("GET", "/sessions");
  }

  getSession(sessionId: string): Promise<SessionDescriptor> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  createSession(query: string, seed?: number): Promise<SessionDescriptor> {
    return this.request("POST", "/sessions", { query, seed });
  }

  listGates(sessionId: string): Promise<GateTicket[]> {
    return this.request("GET", `/sessions/${sessionId}/gates`);
  }

  submitDecision(ticketId: string, decision: Decision): Promise<GateTicket> {
    return this.request("POST", `/gates/${ticketId}/decision`, decision);
  }

  lineage(artifactId: string): Promise<ProvenanceRecord[]> {
    return this.request("GET", `/artifacts/${artifactId}/lineage`);
  }

  pollEvents(sessionId: string, afterSeq: number): Promise<EngineEvent[]> {
    return this.request("GET", `/sessions/${sessionId}/events?after=${afterSeq}`);
  }

  /**
   * Live SSE subscription via fetch streaming. Returns a stop function.
   * On connection loss the caller reconnects from the last seen sequence
   * (the poll path covers any gap marker).
   */
  streamEvents(
    sessionId: string,
    afterSeq: number,
    onEvent: (event: EngineEvent) => void,
    onError?: (error: unknown) => void,
  ): () => void {
    const controller = new AbortController();
    const url = `${this.settings.baseUrl}/sessions/${sessionId}/events?after=${afterSeq}`;
    (async () => {
      try {
        const response = await fetch(url, {
          headers: { accept: "text/event-stream" },
          signal: controller.signal,
        });
        if (!response.ok || response.body === null) {
          throw new ApiError(response.status, { error: "stream_unavailable" });
        }
        const reader = response.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          buffer += decoder.decode(value, { stream: true });
          let sep;
          while ((sep = buffer.indexOf("\n\n")) >= 0) {
            const frame = buffer.slice(0, sep);
            buffer = buffer.slice(sep + 2);
            const dataLine = frame
              .split("\n")
              .find((line) => line.startsWith("data: "));
            if (dataLine) {
              onEvent(JSON.parse(dataLine.slice(6)) as EngineEvent);
            }
          }
        }
      } catch (error) {
        if (!controller.signal.aborted && onError) {
          onError(error);
        }
      }
    })();
    return () => controller.abort();
  }
}
