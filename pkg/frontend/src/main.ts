// Entry point: wire the event subscription to the fold and the fold to
// whichever view this participant gets. Connection parameters come from
// the query string so one static bundle serves both roles.

import { sendCommand, subscribe } from "./api.js";
import type { ClientConfig } from "./api.js";
import { initialState, reduce } from "./store.js";
import { renderAssessor } from "./assessor.js";
import { renderParticipant } from "./participant.js";
import type { SessionState } from "./types.js";

function readConfig(): ClientConfig & { role: string; participantId: string } {
  const params = new URLSearchParams(window.location.search);
  const need = (name: string): string => {
    const value = params.get(name);
    if (!value) throw new Error(`missing query parameter: ${name}`);
    return value;
  };
  return {
    baseUrl: params.get("base") ?? "",
    sessionId: need("session"),
    credential: need("credential"),
    participantId: need("participant"),
    role: params.get("role") ?? "practitioner",
  };
}

function main(): void {
  const cfg = readConfig();
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");

  const state: SessionState = initialState();
  let ownSelection: string | null = null;

  const render = () => {
    if (cfg.role === "assessor") {
      renderAssessor(root, state);
    } else {
      renderParticipant(root, { state, selfId: cfg.participantId, ownSelection });
    }
  };

  root.addEventListener("click", (ev) => {
    const target = ev.target as HTMLElement;
    const card = target.getAttribute("data-card");
    if (card) {
      ownSelection = card;
      render();
      void sendCommand(cfg, "cast_vote", { card });
      return;
    }
    if (target.getAttribute("data-testid") === "reveal-button") {
      void sendCommand(cfg, "reveal");
    }
  });

  subscribe(cfg, (event) => {
    if (event.kind === "round.opened") ownSelection = null;
    reduce(state, event);
    render();
  });

  render();
}

main();
