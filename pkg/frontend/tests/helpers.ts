import { readFileSync } from "node:fs";
import { resolve } from "node:path";
import type { SessionEvent } from "../src/types.js";

export function loadFixture<T>(name: string): T {
  // vitest runs with the frontend directory as its root
  const path = resolve(process.cwd(), "tests", "fixtures", name);
  return JSON.parse(readFileSync(path, "utf-8")) as T;
}

export interface PrivacyFixture {
  votes: Record<string, string>;
  practitioner_stream: SessionEvent[];
  assessor_stream: SessionEvent[];
  reveal_seq: number;
}

export interface GateFixture {
  assessor_stream: SessionEvent[];
  cast_seqs: number[];
}

/**
 * DOM text with the card hand excluded. The hand is static chrome that
 * lists all five card names for every participant; it carries no
 * information about anyone's vote, so privacy assertions look at
 * everything else.
 */
export function textOutsideHand(root: HTMLElement): string {
  const clone = root.cloneNode(true) as HTMLElement;
  clone.querySelector('[data-testid="card-hand"]')?.remove();
  return clone.textContent ?? "";
}

export function distributionText(root: HTMLElement): string | null {
  const node = root.querySelector('[data-testid="distribution"]');
  return node ? (node.textContent ?? "") : null;
}
