/**
 * App-level behavior with a scripted API: a decision race surfaces as a
 * notice and a queue refresh, never as a duplicate submission.
 */

import { describe, expect, it, vi } from "vitest";

import { LinkItem, StaleItemError, ValidationApi } from "../src/api.js";
import { App } from "../src/main.js";

const ITEM: LinkItem = {
  id: "link:" + "c".repeat(40),
  kind: "link",
  commit: {
    id: "c".repeat(40),
    message: "DEMO-7 fix it",
    author: "dev",
    date: "2020-01-01",
    files: [],
  },
  candidates: [
    {
      issue: "DEMO-7",
      detector: "JL_KEY",
      matched_text: "DEMO-7",
      at_message_start: true,
      context: null,
    },
  ],
  verdicts: ["addressed", "mentioned_only", "wrong"],
};

function scriptedApi(overrides: Partial<Record<keyof ValidationApi, unknown>>): ValidationApi {
  const base = {
    queue: vi.fn(async () => ({ kind: "links", items: [], count: 0 })),
    item: vi.fn(async () => ITEM),
    submitLinkDecision: vi.fn(async () => ({ status: "recorded" })),
    submitIssueType: vi.fn(async () => ({ status: "recorded", conflict: false })),
    health: vi.fn(async () => ({ status: "ok" })),
  };
  return Object.assign(Object.create(ValidationApi.prototype), base, overrides);
}

describe("app flow", () => {
  it("losing a decision race shows a notice and refreshes the queue", async () => {
    const submit = vi
      .fn()
      .mockRejectedValueOnce(new StaleItemError(409, "already decided"));
    const queue = vi.fn(async () => ({ kind: "links" as const, items: [], count: 0 }));
    const api = scriptedApi({ submitLinkDecision: submit, queue });
    const mount = document.createElement("main");
    document.body.replaceChildren(mount);
    const app = new App(api, mount, "tok", "alice");
    app.state = { ...app.state, currentItem: ITEM };
    await app.submitVerdict("DEMO-7", "addressed");
    expect(submit).toHaveBeenCalledTimes(1); // no retry, no duplicate
    expect(queue).toHaveBeenCalled(); // queue refreshed
    expect(mount.querySelector(".notice")?.textContent).toContain("another rater");
  });

  it("successful verdicts advance through the panels then reload", async () => {
    const submit = vi.fn(async () => ({ status: "recorded" }));
    const queue = vi.fn(async () => ({ kind: "links" as const, items: [], count: 0 }));
    const api = scriptedApi({ submitLinkDecision: submit, queue });
    const mount = document.createElement("main");
    const app = new App(api, mount, "tok", "alice");
    app.state = { ...app.state, currentItem: ITEM };
    await app.submitVerdict("DEMO-7", "mentioned_only");
    expect(submit).toHaveBeenCalledWith({
      commit: ITEM.commit.id,
      issue: "DEMO-7",
      rater: "alice",
      verdict: "mentioned_only",
    });
    // single panel decided: the item completes and the queue is consulted
    expect(app.state.currentItem).toBeNull();
    expect(app.state.decidedCounts["link:mentioned_only"]).toBe(1);
  });

  it("rejects an empty rater name", () => {
    const api = scriptedApi({});
    expect(
      () => new App(api, document.createElement("main"), "tok", "  "),
    ).toThrow(/non-empty/);
  });
});
