// Practitioner view: story text, the five-card hand, counts-only round
// progress, and the revealed distribution. Other participants' selections
// must never reach this DOM before the reveal; the server only streams
// aggregate counts to practitioners, and this renderer only ever shows the
// local participant's own selection.

import { CARD_VALUES, VOTE_COLUMNS } from "./types.js";
import type { SessionState } from "./types.js";
import { currentRound, floorHolder } from "./store.js";

export interface ParticipantViewModel {
  state: SessionState;
  selfId: string;
  /** Card this participant last picked in the current round, if any. */
  ownSelection: string | null;
}

function el(tag: string, attrs: Record<string, string>, text?: string): HTMLElement {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderParticipant(root: HTMLElement, vm: ParticipantViewModel): void {
  const { state, selfId } = vm;
  root.textContent = "";

  root.appendChild(el("h1", { "data-testid": "phase" }, state.phase));

  if (state.storyText !== null) {
    root.appendChild(el("p", { "data-testid": "story-text" }, state.storyText));
  }

  const round = currentRound(state);

  const hand = el("div", { "data-testid": "card-hand" });
  const votingOpen = round !== null && round.status === "open";
  for (const card of CARD_VALUES) {
    const btn = el("button", {
      "data-testid": `card-${card}`,
      "data-card": card,
    }, card) as HTMLButtonElement;
    // cards can be changed freely until the reveal, never after
    btn.disabled = !votingOpen;
    if (vm.ownSelection === card && votingOpen) btn.classList.add("selected");
    hand.appendChild(btn);
  }
  root.appendChild(hand);

  if (round) {
    if (round.status === "open") {
      // counts only; no identities, no values
      root.appendChild(
        el(
          "p",
          { "data-testid": "vote-progress" },
          `${round.cast} of ${round.expected} votes cast`,
        ),
      );
      if (vm.ownSelection !== null) {
        root.appendChild(
          el("p", { "data-testid": "own-selection" }, `Your card: ${vm.ownSelection}`),
        );
      }
    } else if (round.distribution) {
      // the whole distribution lands in one update, flip animation per column
      const table = el("div", { "data-testid": "distribution", class: "flip" });
      for (const column of VOTE_COLUMNS) {
        const row = el("div", { "data-testid": `dist-${column}`, class: "flip-card" });
        row.textContent = `${column}: ${round.distribution[column] ?? 0}`;
        table.appendChild(row);
      }
      root.appendChild(table);
    }
  }

  const floor = floorHolder(state);
  if (floor !== null) {
    const who = state.participants.find((p) => p.id === floor);
    const label = who ? who.name : floor;
    const note = el(
      "p",
      { "data-testid": "floor-holder" },
      floor === selfId ? "You have the floor" : `${label} has the floor`,
    );
    root.appendChild(note);
  }

  const parking = el("div", { "data-testid": "parking-box" });
  parking.appendChild(el("input", { "data-testid": "parking-input", placeholder: "Park a question" }));
  root.appendChild(parking);
}
