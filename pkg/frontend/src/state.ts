/**
 * Session state: token, rater, active queue, the current item, and pending
 * counts. Everything round-trips through the API; the only client-side
 * state a reload loses is the unsubmitted selection.
 */

import { QueueKind, WorkItem } from "./api.js";

export interface SessionState {
  token: string;
  rater: string;
  activeQueue: QueueKind;
  currentItem: WorkItem | null;
  /** index of the issue panel awaiting a verdict on a link item */
  candidateIndex: number;
  pendingCounts: Record<QueueKind, number>;
  notice: string | null;
  /** per-category tallies for the completion summary */
  decidedCounts: Record<string, number>;
}

export function initialState(token: string, rater: string): SessionState {
  if (!rater.trim()) {
    throw new Error("rater name must be non-empty");
  }
  return {
    token,
    rater,
    activeQueue: "links",
    currentItem: null,
    candidateIndex: 0,
    pendingCounts: { links: 0, issues: 0, conflicts: 0 },
    notice: null,
    decidedCounts: {},
  };
}

export function withQueue(state: SessionState, queue: QueueKind): SessionState {
  return { ...state, activeQueue: queue, currentItem: null, candidateIndex: 0, notice: null };
}

export function withItem(state: SessionState, item: WorkItem | null): SessionState {
  // notices survive the queue refresh that follows a lost race; they clear
  // on the next successful decision or queue switch
  return { ...state, currentItem: item, candidateIndex: 0 };
}

export function withCounts(
  state: SessionState,
  counts: Partial<Record<QueueKind, number>>,
): SessionState {
  return { ...state, pendingCounts: { ...state.pendingCounts, ...counts } };
}

export function withNotice(state: SessionState, notice: string | null): SessionState {
  return { ...state, notice };
}

export function recordDecision(state: SessionState, category: string): SessionState {
  const decidedCounts = { ...state.decidedCounts };
  decidedCounts[category] = (decidedCounts[category] ?? 0) + 1;
  return { ...state, decidedCounts, notice: null };
}

export function advanceCandidate(state: SessionState): SessionState {
  if (state.currentItem === null || state.currentItem.kind !== "link") {
    return state;
  }
  const total = state.currentItem.candidates.length;
  if (state.candidateIndex + 1 >= total) {
    // every panel decided: the item is finished and must be replaced
    return { ...state, currentItem: null, candidateIndex: 0 };
  }
  return { ...state, candidateIndex: state.candidateIndex + 1 };
}
