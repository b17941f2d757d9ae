import { describe, expect, it } from "vitest";

import {
  ConsoleApi,
  ServiceError,
  newIdempotencyKey,
  withRetry,
} from "../src/api.js";

interface Captured {
  url: string;
  method: string;
  headers: Record<string, string>;
  body?: string;
}

function fakeFetch(
  handler: (call: Captured) => { status: number; body: unknown },
): { calls: Captured[]; fetchFn: typeof fetch } {
  const calls: Captured[] = [];
  const fetchFn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const call: Captured = {
      url: String(input),
      method: init?.method ?? "GET",
      headers: (init?.headers ?? {}) as Record<string, string>,
      body: init?.body as string | undefined,
    };
    calls.push(call);
    const { status, body } = handler(call);
    return {
      ok: status < 400,
      status,
      json: async () => body,
    } as Response;
  }) as typeof fetch;
  return { calls, fetchFn };
}

describe("ConsoleApi", () => {
  it("sends the idempotency key on mutating calls", async () => {
    const { calls, fetchFn } = fakeFetch(() => ({
      status: 201,
      body: { session_id: "s1" },
    }));
    const api = new ConsoleApi("http://svc", fetchFn);
    await api.createSession("greedy", "fixed-key");
    expect(calls[0].url).toBe("http://svc/sessions");
    expect(calls[0].headers["Idempotency-Key"]).toBe("fixed-key");
    expect(JSON.parse(calls[0].body!)).toEqual({ mode: "greedy" });
  });

  it("reuses one key across answer retries", async () => {
    let attempt = 0;
    const { calls, fetchFn } = fakeFetch(() => {
      attempt += 1;
      if (attempt === 1) {
        throw new TypeError("network down");
      }
      return { status: 200, body: { status: "active" } };
    });
    const api = new ConsoleApi("http://svc", fetchFn);
    const key = newIdempotencyKey();
    await withRetry(() => api.answer("s1", { attribute: "Savings", value: "5" }, key));
    expect(calls).toHaveLength(2);
    expect(calls[0].headers["Idempotency-Key"]).toBe(key);
    expect(calls[1].headers["Idempotency-Key"]).toBe(key);
  });

  it("surfaces service errors verbatim and does not retry them", async () => {
    const { calls, fetchFn } = fakeFetch(() => ({
      status: 409,
      body: { code: "session_closed", message: "session s1 is already classified" },
    }));
    const api = new ConsoleApi("http://svc", fetchFn);
    const attempt = withRetry(() =>
      api.answer("s1", { attribute: "Savings", unknown: true }, "k"),
    );
    await expect(attempt).rejects.toThrowError(ServiceError);
    await expect(
      withRetry(() => api.answer("s1", { attribute: "Savings", unknown: true }, "k")),
    ).rejects.toThrow(/session_closed/);
    expect(calls.length).toBe(2); // one call per attempt above, no retries
  });

  it("builds listing filters as query parameters", async () => {
    const { calls, fetchFn } = fakeFetch(() => ({
      status: 200,
      body: { tree_version: 1, sessions: [] },
    }));
    const api = new ConsoleApi("", fetchFn);
    await api.listSessions({ status: "classified", novel: true });
    expect(calls[0].url).toBe("/sessions?status=classified&novel=true");
  });

  it("generates unique idempotency keys", () => {
    const keys = new Set(Array.from({ length: 100 }, () => newIdempotencyKey()));
    expect(keys.size).toBe(100);
  });
});
