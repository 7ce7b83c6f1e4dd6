/**
 * Two simulated raters work the fixture's issue queue through the client
 * layer in 100 randomized interleavings. After every trial the store must
 * satisfy the two-rater/committee protocol with no duplicate or lost
 * decisions; duplicate submissions must be rejected, never double-counted.
 */

import { describe, expect, it } from "vitest";

import { ApiError, IssueLabel, ValidationApi } from "../src/api.js";
import { readServerInfo } from "./server-info.js";

// deterministic PRNG so failures are reproducible
function mulberry32(seed: number): () => number {
  let t = seed >>> 0;
  return () => {
    t += 0x6d2b79f5;
    let r = Math.imul(t ^ (t >>> 15), 1 | t);
    r = (r + Math.imul(r ^ (r >>> 7), 61 | r)) ^ r;
    return ((r ^ (r >>> 14)) >>> 0) / 4294967296;
  };
}

function shuffled<T>(items: T[], rand: () => number): T[] {
  const out = [...items];
  for (let i = out.length - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [out[i], out[j]] = [out[j]!, out[i]!];
  }
  return out;
}

// with an empty store every linked tracker-BUG issue awaits its two labels,
// including the number-heuristic false links that no expert rejected yet
const PENDING_ISSUES = [
  "DEMO-1", "DEMO-2", "DEMO-101", "DEMO-102", "DEMO-103", "DEMO-104",
  "DEMO-105", "DEMO-106", "DEMO-107", "DEMO-108",
];

describe("concurrent rater round trips", () => {
  it("100 randomized interleavings keep the store consistent", async () => {
    const info = readServerInfo();
    const api = new ValidationApi({ baseUrl: info.baseUrl, token: info.token });
    const rand = mulberry32(20240817);

    for (let trial = 0; trial < 100; trial++) {
      const resetResponse = await fetch(`${info.baseUrl}/admin/reset`, {
        method: "POST",
        headers: { "X-Session-Token": info.token },
      });
      expect(resetResponse.ok).toBe(true);

      // the full pending queue is visible to both raters
      const before = await api.queue("issues");
      expect(before.items.sort()).toEqual(PENDING_ISSUES.map((k) => `issue:${k}`).sort());

      type Op = { issue: string; rater: "alice" | "bob"; label: IssueLabel };
      const ops: Op[] = [];
      const pick = (choices: IssueLabel[]) =>
        choices[Math.floor(rand() * choices.length)]!;
      for (const issue of PENDING_ISSUES) {
        ops.push({ issue, rater: "alice", label: pick(["BUG", "IMPROVEMENT"]) });
        ops.push({ issue, rater: "bob", label: pick(["BUG", "IMPROVEMENT", "DOC"]) });
      }
      // randomized interleaving, submitted in racing pairs
      const order = shuffled(ops, rand);
      for (let i = 0; i < order.length; i += 2) {
        const batch = order.slice(i, i + 2).map((op) =>
          api.submitIssueType({ ...op, round: "independent" }),
        );
        const results = await Promise.all(batch);
        for (const result of results) expect(result.status).toBe("recorded");
      }

      // a duplicate submission must be rejected, not double-counted
      const dup = order[Math.floor(rand() * order.length)]!;
      await expect(
        api.submitIssueType({ ...dup, round: "independent" }),
      ).rejects.toBeInstanceOf(ApiError);

      // nothing lost: every issue now has its two labels
      const after = await api.queue("issues");
      expect(after.count).toBe(0);

      // a third independent label is impossible
      await expect(
        api.submitIssueType({
          issue: PENDING_ISSUES[0]!, rater: "carol", label: "BUG", round: "independent",
        }),
      ).rejects.toBeInstanceOf(ApiError);

      // committee closes every conflict; the independent raters are barred
      const conflicts = await api.queue("conflicts");
      for (const id of conflicts.items) {
        const key = id.slice("conflict:".length);
        await expect(
          api.submitIssueType({ issue: key, rater: "alice", label: "BUG", round: "committee" }),
        ).rejects.toBeInstanceOf(ApiError);
        const done = await api.submitIssueType({
          issue: key, rater: "carol", label: "BUG", round: "committee",
        });
        expect(done.status).toBe("recorded");
      }
      const remaining = await api.queue("conflicts");
      expect(remaining.count).toBe(0);
    }
  }, 180_000);
});
