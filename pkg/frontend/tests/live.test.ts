/**
 * Round-trip tests against the real validation server (spawned by the
 * global setup on a fixture pipeline with an empty decision store).
 */

import { beforeEach, describe, expect, it } from "vitest";

import { IssueItem, LinkItem, StaleItemError, ValidationApi } from "../src/api.js";
import { renderIssueTyping } from "../src/render.js";
import { readServerInfo } from "./server-info.js";

function client(): ValidationApi {
  const info = readServerInfo();
  return new ValidationApi({ baseUrl: info.baseUrl, token: info.token });
}

async function reset(api: ValidationApi): Promise<void> {
  const info = readServerInfo();
  const response = await fetch(`${info.baseUrl}/admin/reset`, {
    method: "POST",
    headers: { "X-Session-Token": info.token },
  });
  if (!response.ok) throw new Error("reset failed");
}

describe("live round trips", () => {
  beforeEach(async () => {
    await reset(client());
  });

  it("serves the pending link queue with full context", async () => {
    const api = client();
    const queue = await api.queue("links");
    expect(queue.count).toBe(2); // version bump + mid-message mention
    const item = (await api.item(queue.items[0]!)) as LinkItem;
    expect(item.kind).toBe("link");
    expect(item.commit.message.length).toBeGreaterThan(0);
    expect(item.candidates.length).toBeGreaterThan(0);
    expect(item.candidates[0]!.context?.title.length).toBeGreaterThan(0);
  });

  it("link decisions advance the queue and conflict on races", async () => {
    const api = client();
    const queue = await api.queue("links");
    const item = (await api.item(queue.items[0]!)) as LinkItem;
    const candidate = item.candidates[0]!;
    await api.submitLinkDecision({
      commit: item.commit.id,
      issue: candidate.issue,
      rater: "alice",
      verdict: "mentioned_only",
    });
    // the race: bob decides the same pair a moment later
    await expect(
      api.submitLinkDecision({
        commit: item.commit.id,
        issue: candidate.issue,
        rater: "bob",
        verdict: "addressed",
      }),
    ).rejects.toBeInstanceOf(StaleItemError);
  });

  it("independent-round rendering leaks no other rater's label", async () => {
    const api = client();
    await api.submitIssueType({
      issue: "DEMO-101", rater: "alice", label: "IMPROVEMENT", round: "independent",
    });
    // bob fetches the same issue: the payload must carry no trace of alice
    const item = (await api.item("issue:DEMO-101", "bob")) as IssueItem;
    expect(item.round).toBe("independent");
    expect("blinded_labels" in item).toBe(false);
    expect(JSON.stringify(item)).not.toContain("alice");
    const node = renderIssueTyping(item, () => {});
    expect(node.querySelectorAll("[data-peer-label]").length).toBe(0);
    document.body.replaceChildren(node);
    expect(document.querySelectorAll("[data-peer-label]").length).toBe(0);
  });

  it("committee items show the blinded pair to a fresh rater only", async () => {
    const api = client();
    await api.submitIssueType({
      issue: "DEMO-102", rater: "alice", label: "BUG", round: "independent",
    });
    await api.submitIssueType({
      issue: "DEMO-102", rater: "bob", label: "DOC", round: "independent",
    });
    const conflicts = await api.queue("conflicts");
    expect(conflicts.items).toContain("conflict:DEMO-102");
    await expect(api.item("conflict:DEMO-102", "alice")).rejects.toMatchObject({
      status: 403,
    });
    const item = (await api.item("conflict:DEMO-102", "carol")) as IssueItem;
    expect(item.blinded_labels).toEqual(["BUG", "DOC"]);
    expect(JSON.stringify(item)).not.toContain("alice");
    expect(JSON.stringify(item)).not.toContain("bob");
    const node = renderIssueTyping(item, () => {});
    expect(node.querySelectorAll("[data-peer-label]").length).toBe(2);
    await api.submitIssueType({
      issue: "DEMO-102", rater: "carol", label: "DOC", round: "committee",
    });
    const after = await api.queue("conflicts");
    expect(after.items).not.toContain("conflict:DEMO-102");
  });
});
