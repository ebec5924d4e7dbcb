// Assessor console: phase map, story panel, per-participant has-cast
// indicators, and the reveal control. The reveal button is disabled until
// every expected ballot is in; the server enforces the same guard, the
// button state just mirrors it.

import { VOTE_COLUMNS } from "./types.js";
import type { SessionState } from "./types.js";
import { currentRound, floorHolder, revealEnabled } from "./store.js";

function el(tag: string, attrs: Record<string, string>, text?: string): HTMLElement {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderAssessor(root: HTMLElement, state: SessionState): void {
  root.textContent = "";

  root.appendChild(el("h1", { "data-testid": "phase" }, state.phase));
  if (state.areaId !== null) {
    root.appendChild(
      el("p", { "data-testid": "area" }, `${state.areaId}: ${state.areaIntent ?? ""}`),
    );
  }
  if (state.storyText !== null) {
    root.appendChild(el("p", { "data-testid": "story-text" }, state.storyText));
  }

  const round = currentRound(state);

  // has-cast indicators show who has voted, never what they voted
  const roster = el("ul", { "data-testid": "roster" });
  for (const p of state.participants) {
    if (p.role !== "practitioner") continue;
    const cast = round !== null && round.status === "open" && !!round.hasCast[p.id];
    const item = el("li", {
      "data-testid": `participant-${p.id}`,
      "data-cast": cast ? "yes" : "no",
    });
    item.textContent = `${p.name}${p.active ? "" : " (inactive)"}${cast ? " ✓" : ""}`;
    roster.appendChild(item);
  }
  root.appendChild(roster);

  if (round) {
    root.appendChild(
      el(
        "p",
        { "data-testid": "vote-progress" },
        `${round.cast} of ${round.expected} votes cast`,
      ),
    );
    const reveal = el("button", { "data-testid": "reveal-button" }, "Reveal") as HTMLButtonElement;
    reveal.disabled = !revealEnabled(state);
    root.appendChild(reveal);

    if (round.status === "revealed" && round.distribution) {
      const table = el("div", { "data-testid": "distribution" });
      for (const column of VOTE_COLUMNS) {
        const row = el("div", { "data-testid": `dist-${column}` });
        row.textContent = `${column}: ${round.distribution[column] ?? 0}`;
        table.appendChild(row);
      }
      root.appendChild(table);
    }
  }

  const controls = el("div", { "data-testid": "presenter-controls" });
  for (const policy of ["rotate", "dissenting", "manual"]) {
    controls.appendChild(el("button", { "data-testid": `presenter-${policy}` }, policy));
  }
  if (state.presenter !== null) {
    controls.appendChild(el("span", { "data-testid": "presenter" }, state.presenter));
  }
  root.appendChild(controls);

  const floor = floorHolder(state);
  if (floor !== null) {
    const notes = el("div", { "data-testid": "explanation-panel" });
    notes.appendChild(el("p", { "data-testid": "floor-holder" }, floor));
    notes.appendChild(el("textarea", { "data-testid": "explanation-note" }));
    root.appendChild(notes);
  }

  const parking = el("ul", { "data-testid": "parking-panel" });
  for (const item of Object.values(state.parking)) {
    parking.appendChild(
      el(
        "li",
        { "data-testid": `parking-${item.itemId}`, "data-status": item.status },
        `[${item.tag}] ${item.text}`,
      ),
    );
  }
  root.appendChild(parking);
}
