// API client: envelope handling, auth headers, and the guarantee that
// numbers displayed come from intercepted server responses unchanged.

import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api";
import { displayScore } from "../src/widgets";

interface Call {
  url: string;
  init?: RequestInit;
}

function mockFetch(status: number, payload: unknown, calls: Call[] = []) {
  return async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    return {
      ok: status < 400,
      status,
      json: async () => payload,
    } as Response;
  };
}

describe("envelope handling", () => {
  it("unwraps ok responses", async () => {
    const client = new ApiClient("http://x", null, mockFetch(200, { ok: true, scenario: 4 }));
    const body = await client.capabilities();
    expect(body.scenario).toBe(4);
  });

  it("raises typed errors from the error envelope", async () => {
    const client = new ApiClient(
      "http://x",
      null,
      mockFetch(403, {
        ok: false,
        error: { code: "capability_not_supported", message: "U6 is not offered in scenario 1" },
      }),
    );
    const err = await client.pending("computing", "evaluation").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.isCapabilityError).toBe(true);
    expect(err.displayMessage).toBe("not available in this deployment");
  });

  it("other errors keep the server message", async () => {
    const client = new ApiClient(
      "http://x",
      null,
      mockFetch(409, { ok: false, error: { code: "conflict", message: "already exists" } }),
    );
    const err = await client.submitRecord("computing", {}).catch((e) => e);
    expect(err.displayMessage).toBe("already exists");
  });
});

describe("auth headers", () => {
  it("sends the bearer token once set and never before", async () => {
    const calls: Call[] = [];
    const client = new ApiClient("http://x", null, mockFetch(200, { ok: true }, calls));
    await client.capabilities();
    expect((calls[0].init?.headers as Record<string, string>)["Authorization"]).toBeUndefined();
    client.setToken("tok-123");
    await client.capabilities();
    expect((calls[1].init?.headers as Record<string, string>)["Authorization"]).toBe(
      "Bearer tok-123",
    );
  });
});

describe("scores are server-reported, never computed here", () => {
  it("the displayed rating score is byte-for-byte the intercepted response value", async () => {
    const serverScore = {
      score_percent: 83.33333333333334,
      score_display: "83.33",
      rating_count: 2,
    };
    const client = new ApiClient(
      "http://x",
      "tok",
      mockFetch(200, { ok: true, score: serverScore }),
    );
    const body = await client.rate("computing", "r1", 3, 3);
    // the client hands the payload through untouched
    expect(JSON.stringify(body.score)).toBe(JSON.stringify(serverScore));
    // and what the widget renders is exactly the server's string
    expect(displayScore(body.score.score_display, body.score.rating_count)).toContain("83.33%");
  });

  it("consensus numbers pass through unchanged too", async () => {
    const serverStatus = {
      ok: true,
      record_id: "r1",
      evaluation_count: 9,
      threshold: 10,
      auto_decide: true,
      would_decide: { outcome: "none", supporting_count: 9, field_id: null, subfield_id: null },
      groups: [{ is_review: true, field_id: "a", subfield_id: "b", count: 9 }],
    };
    const client = new ApiClient("http://x", "tok", mockFetch(200, serverStatus));
    const got = await client.consensus("computing", "r1");
    expect(got.would_decide.supporting_count).toBe(9);
    expect(got.evaluation_count).toBe(9);
  });
});

describe("request shapes", () => {
  it("evaluation posts the two scales exactly", async () => {
    const calls: Call[] = [];
    const client = new ApiClient(
      "http://x",
      "tok",
      mockFetch(200, { ok: true, decision: {}, record_status: "approved" }, calls),
    );
    await client.evaluate("computing", "r1", true, "networks", "network-types");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      is_review: true,
      field_id: "networks",
      subfield_id: "network-types",
    });
    await client.evaluate("computing", "r1", false, null, null);
    expect(JSON.parse(String(calls[1].init?.body))).toEqual({ is_review: false });
  });

  it("rating posts the selected points", async () => {
    const calls: Call[] = [];
    const client = new ApiClient("http://x", "tok", mockFetch(200, { ok: true, score: {} }, calls));
    await client.rate("computing", "r1", 2, 3);
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ quality: 2, familiarity: 3 });
  });
});
