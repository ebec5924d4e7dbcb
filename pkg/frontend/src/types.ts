// Wire types for the session service's event stream and command API.

export interface SessionEvent {
  seq: number;
  ts: string;
  kind: string;
  payload: Record<string, any>;
}

export type RoundKind = "preliminary" | "definitive";

export interface RoundInfo {
  roundId: string;
  storyId: string;
  kind: RoundKind;
  expected: number;
  cast: number;
  status: "open" | "revealed";
  // fixed column order: StronglyDisagree, Disagree, Agree, StronglyAgree, DontKnow
  distribution: Record<string, number> | null;
  // per-participant cast flags; populated only on assessor streams,
  // where vote.progress events are visible
  hasCast: Record<string, boolean>;
}

export interface Participant {
  id: string;
  name: string;
  role: "assessor" | "practitioner";
  active: boolean;
}

export interface ParkingItem {
  itemId: string;
  text: string;
  tag: string;
  status: string;
  owner: string | null;
  consensusReached: boolean | null;
}

export interface Finding {
  storyId: string;
  rating: string;
  rationale: string;
  misinformationNote: string | null;
  validationStatus: string | null;
}

export interface SessionState {
  lastSeq: number;
  sessionId: string;
  catalogTitle: string;
  phase: string;
  participants: Participant[];
  areaId: string | null;
  areaIntent: string | null;
  storyId: string | null;
  storyText: string | null;
  rounds: Record<string, RoundInfo>;
  currentRoundId: string | null;
  presenter: string | null;
  explaining: { order: string[]; floorIdx: number; earlyExit: boolean } | null;
  practiceTables: Record<string, Record<string, unknown>>;
  findings: Record<string, Finding>;
  parking: Record<string, ParkingItem>;
  closed: boolean;
}

export const CARD_VALUES = [
  "Always",
  "MostOfTheTime",
  "Seldom",
  "Never",
  "DontKnow",
] as const;
export type CardValue = (typeof CARD_VALUES)[number];

export const VOTE_COLUMNS = [
  "StronglyDisagree",
  "Disagree",
  "Agree",
  "StronglyAgree",
  "DontKnow",
] as const;
