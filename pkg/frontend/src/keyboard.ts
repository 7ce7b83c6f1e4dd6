/**
 * Keyboard-first command maps. Triage throughput is the design driver, so
 * every decision has a number key; the maps are the only way the UI can
 * produce a verdict or label, which keeps submissions inside the fixed
 * enumerations by construction.
 */

import { ISSUE_LABELS, IssueLabel, LINK_VERDICTS, LinkVerdict } from "./api.js";

export type UiCommand =
  | { kind: "verdict"; verdict: LinkVerdict }
  | { kind: "label"; label: IssueLabel }
  | { kind: "next-candidate" }
  | { kind: "skip" }
  | { kind: "switch-queue" };

const VERDICT_BY_KEY: Readonly<Record<string, LinkVerdict>> = Object.freeze({
  "1": "addressed",
  "2": "mentioned_only",
  "3": "wrong",
});

const LABEL_BY_KEY: Readonly<Record<string, IssueLabel>> = Object.freeze({
  "1": "BUG",
  "2": "IMPROVEMENT",
  "3": "TEST",
  "4": "DOC",
  "5": "OTHER",
});

export function resolveTriageCommand(key: string): UiCommand | undefined {
  const verdict = VERDICT_BY_KEY[key];
  if (verdict) return { kind: "verdict", verdict };
  if (key === "Tab") return { kind: "next-candidate" };
  if (key === "s") return { kind: "skip" };
  if (key === "q") return { kind: "switch-queue" };
  return undefined;
}

export function resolveTypingCommand(key: string): UiCommand | undefined {
  const label = LABEL_BY_KEY[key];
  if (label) return { kind: "label", label };
  if (key === "s") return { kind: "skip" };
  if (key === "q") return { kind: "switch-queue" };
  return undefined;
}

export function verdictKeys(): ReadonlyMap<LinkVerdict, string> {
  return new Map(LINK_VERDICTS.map((v, i) => [v, String(i + 1)]));
}

export function labelKeys(): ReadonlyMap<IssueLabel, string> {
  return new Map(ISSUE_LABELS.map((l, i) => [l, String(i + 1)]));
}
