// Client state is a pure fold over the received event stream.
// Nothing here is authoritative: the server's journal is.

import type { RoundInfo, SessionEvent, SessionState } from "./types.js";

export function initialState(): SessionState {
  return {
    lastSeq: 0,
    sessionId: "",
    catalogTitle: "",
    phase: "Welcome",
    participants: [],
    areaId: null,
    areaIntent: null,
    storyId: null,
    storyText: null,
    rounds: {},
    currentRoundId: null,
    presenter: null,
    explaining: null,
    practiceTables: {},
    findings: {},
    parking: {},
    closed: false,
  };
}

function round(state: SessionState, roundId: string): RoundInfo {
  const existing = state.rounds[roundId];
  if (existing) return existing;
  const fresh: RoundInfo = {
    roundId,
    storyId: "",
    kind: "preliminary",
    expected: 0,
    cast: 0,
    status: "open",
    distribution: null,
    hasCast: {},
  };
  state.rounds[roundId] = fresh;
  return fresh;
}

/** Fold one event into the state; returns the same (mutated) state object. */
export function reduce(state: SessionState, event: SessionEvent): SessionState {
  const p = event.payload;
  state.lastSeq = event.seq;
  switch (event.kind) {
    case "session.created":
      state.sessionId = p.session_id;
      state.catalogTitle = p.catalog_title;
      break;
    case "participant.joined":
      state.participants.push({
        id: p.participant_id,
        name: p.display_name,
        role: p.role_tag,
        active: true,
      });
      break;
    case "phase.changed":
      state.phase = p.to;
      break;
    case "area.entered":
      state.areaId = p.area_id;
      state.areaIntent = p.intent;
      break;
    case "story.presented":
      // story text stays on screen until the next one is presented
      state.storyId = p.story_id;
      state.storyText = p.text;
      state.currentRoundId = null;
      state.presenter = null;
      state.explaining = null;
      break;
    case "round.opened": {
      const r = round(state, p.round_id);
      r.storyId = p.story_id;
      r.kind = p.kind;
      r.expected = p.expected;
      state.currentRoundId = p.round_id;
      break;
    }
    case "vote.progress":
      round(state, p.round_id).hasCast[p.participant_id] = true;
      break;
    case "round.progress": {
      const r = round(state, p.round_id);
      r.cast = p.cast;
      r.expected = p.expected;
      break;
    }
    case "round.revealed": {
      const r = round(state, p.round_id);
      r.status = "revealed";
      r.distribution = p.distribution;
      r.cast = p.total;
      break;
    }
    case "presenter.selected":
      state.presenter = p.participant_id;
      break;
    case "explanations.started":
      state.explaining = { order: p.order, floorIdx: 0, earlyExit: false };
      break;
    case "explanation.recorded":
      if (state.explaining) state.explaining.floorIdx = p.position + 1;
      break;
    case "explanation.early_exit":
      if (state.explaining) state.explaining.earlyExit = true;
      break;
    case "practice_table.updated":
      state.practiceTables[p.story_id] = {
        ...(state.practiceTables[p.story_id] ?? {}),
        ...p.fields,
      };
      break;
    case "finding.drafted":
      state.findings[p.story_id] = {
        storyId: p.story_id,
        rating: p.rating,
        rationale: p.rationale,
        misinformationNote: p.misinformation_note ?? null,
        validationStatus: null,
      };
      break;
    case "finding.validated": {
      const finding = state.findings[p.story_id];
      if (finding) finding.validationStatus = p.status;
      break;
    }
    case "judgment.resolved": {
      const finding = state.findings[p.story_id];
      if (finding) finding.rating = p.rating;
      break;
    }
    case "parking.added":
      state.parking[p.item_id] = {
        itemId: p.item_id,
        text: p.text,
        tag: p.tag,
        status: "open",
        owner: null,
        consensusReached: null,
      };
      break;
    case "parking.assigned": {
      const item = state.parking[p.item_id];
      if (item) {
        item.status = "assigned";
        item.owner = p.participant_id;
      }
      break;
    }
    case "parking.closed": {
      const item = state.parking[p.item_id];
      if (item) {
        item.status = p.status;
        item.consensusReached = p.consensus_reached;
      }
      break;
    }
    case "participant.activity": {
      const who = state.participants.find((x) => x.id === p.participant_id);
      if (who) who.active = p.active;
      break;
    }
    case "session.closed":
      state.closed = true;
      break;
    default:
      // unknown kinds are ignored so old clients survive new events
      break;
  }
  return state;
}

export function currentRound(state: SessionState): RoundInfo | null {
  return state.currentRoundId ? state.rounds[state.currentRoundId] ?? null : null;
}

/** Reveal is enabled if and only if every expected ballot is in. */
export function revealEnabled(state: SessionState): boolean {
  const r = currentRound(state);
  return !!r && r.status === "open" && r.expected > 0 && r.cast >= r.expected;
}

export function floorHolder(state: SessionState): string | null {
  const exp = state.explaining;
  if (!exp || exp.floorIdx >= exp.order.length) return null;
  return exp.order[exp.floorIdx];
}
