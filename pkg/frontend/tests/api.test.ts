import { describe, expect, it, vi } from "vitest";

import { ApiError, StaleItemError, ValidationApi } from "../src/api.js";

function fakeFetch(status: number, body: unknown) {
  return vi.fn(async (_url: RequestInfo | URL, _init?: RequestInit) => {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  });
}

describe("api client", () => {
  it("sends the session token header on every request", async () => {
    const impl = fakeFetch(200, { kind: "links", items: [], count: 0 });
    const api = new ValidationApi({ baseUrl: "http://x", token: "tok", fetchImpl: impl });
    await api.queue("links", "alice");
    const [url, init] = impl.mock.calls[0]!;
    expect(String(url)).toBe("http://x/queues/links?rater=alice");
    expect((init!.headers as Record<string, string>)["X-Session-Token"]).toBe("tok");
  });

  it("raises StaleItemError on 409", async () => {
    const impl = fakeFetch(409, { detail: "already decided" });
    const api = new ValidationApi({ baseUrl: "http://x", token: "t", fetchImpl: impl });
    await expect(api.item("link:abc")).rejects.toBeInstanceOf(StaleItemError);
  });

  it("raises ApiError with status for other failures", async () => {
    const impl = fakeFetch(401, { detail: "bad token" });
    const api = new ValidationApi({ baseUrl: "http://x", token: "t", fetchImpl: impl });
    const failure = api.queue("issues");
    await expect(failure).rejects.toBeInstanceOf(ApiError);
    await expect(api.queue("issues")).rejects.toMatchObject({ status: 401 });
  });

  it("posts decisions as JSON bodies", async () => {
    const impl = fakeFetch(200, { status: "recorded", conflict: false });
    const api = new ValidationApi({ baseUrl: "http://x/", token: "t", fetchImpl: impl });
    await api.submitIssueType({
      issue: "DEMO-1", rater: "alice", label: "BUG", round: "independent",
    });
    const [url, init] = impl.mock.calls[0]!;
    expect(String(url)).toBe("http://x/decisions/issue-type");
    expect(init!.method).toBe("POST");
    expect(JSON.parse(init!.body as string)).toEqual({
      issue: "DEMO-1", rater: "alice", label: "BUG", round: "independent",
    });
  });
});
