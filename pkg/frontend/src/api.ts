// Thin HTTP + SSE client. Commands are fire-and-retry with a stable
// idempotency key, so a retried POST after a dropped response is a no-op
// on the server.

import type { SessionEvent } from "./types.js";

export interface ClientConfig {
  baseUrl: string;
  sessionId: string;
  credential: string;
}

export interface CommandResult {
  ok: boolean;
  status: number;
  body: any;
}

const RETRY_DELAYS_MS = [250, 1000, 3000];

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export async function sendCommand(
  cfg: ClientConfig,
  kind: string,
  payload: Record<string, unknown> = {},
): Promise<CommandResult> {
  const key = crypto.randomUUID();
  const url = `${cfg.baseUrl}/sessions/${cfg.sessionId}/commands`;
  const body = JSON.stringify({
    credential: cfg.credential,
    command: { kind, payload },
    idempotency_key: key,
  });
  let lastError: unknown = null;
  for (let attempt = 0; attempt <= RETRY_DELAYS_MS.length; attempt++) {
    try {
      const resp = await fetch(url, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body,
      });
      const data = await resp.json().catch(() => null);
      return { ok: resp.ok, status: resp.status, body: data };
    } catch (err) {
      // network failure only; HTTP errors return above without retrying
      lastError = err;
      if (attempt < RETRY_DELAYS_MS.length) await sleep(RETRY_DELAYS_MS[attempt]);
    }
  }
  throw lastError;
}

/**
 * Subscribe to the session's event stream and keep the subscription alive.
 * On reconnect the stream resumes from the last sequence number seen, so
 * the fold never skips or repeats an event.
 */
export function subscribe(
  cfg: ClientConfig,
  onEvent: (event: SessionEvent) => void,
): () => void {
  let lastSeq = 0;
  let source: EventSource | null = null;
  let stopped = false;

  const connect = () => {
    if (stopped) return;
    const url =
      `${cfg.baseUrl}/sessions/${cfg.sessionId}/events` +
      `?credential=${encodeURIComponent(cfg.credential)}` +
      `&from=${lastSeq + 1}`;
    source = new EventSource(url);
    source.onmessage = (msg) => {
      const event = JSON.parse(msg.data) as SessionEvent;
      if (event.seq <= lastSeq) return;
      lastSeq = event.seq;
      onEvent(event);
    };
    source.onerror = () => {
      source?.close();
      if (!stopped) setTimeout(connect, 1000);
    };
  };

  connect();
  return () => {
    stopped = true;
    source?.close();
  };
}
