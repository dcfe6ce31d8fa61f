// Fetch stub that replays fixture bytes captured from the real service
// (scripts/capture_ui_fixtures.py), recording every request it serves.

import { readFileSync } from "node:fs";
import { join } from "node:path";

export function fixtureText(name: string): string {
  // vitest runs with cwd at the frontend package root; import.meta.url is
  // unusable under jsdom (it resolves against the window location)
  return readFileSync(join(process.cwd(), "tests", "fixtures", name), "utf-8");
}

export interface RecordedCall {
  url: string;
  method: string;
  body: string | null;
}

export interface FetchStub {
  calls: RecordedCall[];
  restore(): void;
}

type RouteTable = Record<string, string | { status: number; body: string }>;

export function stubFetch(routes: RouteTable): FetchStub {
  const original = globalThis.fetch;
  const calls: RecordedCall[] = [];
  globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const method = init?.method ?? "GET";
    if (init?.signal?.aborted) {
      throw new DOMException("The operation was aborted.", "AbortError");
    }
    calls.push({ url, method, body: (init?.body as string) ?? null });
    const key = `${method} ${url.replace(/^https?:\/\/[^/]+/, "")}`;
    const route = routes[key];
    if (route === undefined) {
      return new Response(JSON.stringify({ code: "not_found", message: key }), {
        status: 404,
        headers: { "Content-Type": "application/json" },
      });
    }
    if (typeof route === "string") {
      return new Response(route, {
        status: 200,
        headers: { "Content-Type": "application/json" },
      });
    }
    return new Response(route.body, {
      status: route.status,
      headers: { "Content-Type": "application/json" },
    });
  }) as typeof fetch;
  return {
    calls,
    restore() {
      globalThis.fetch = original;
    },
  };
}

export function demoRoutes(): RouteTable {
  return {
    "GET /v1/geo/regions": fixtureText("regions.json"),
    "GET /v1/rollup?level=ba": fixtureText("rollup_ba.json"),
    "GET /v1/rollup?level=state": fixtureText("rollup_state.json"),
    "GET /v1/rollup?level=national": fixtureText("rollup_national.json"),
    "GET /v1/ba/BA_SOLO": fixtureText("ba_solo.json"),
    "GET /v1/ba/BA_MIX": fixtureText("ba_mix.json"),
    "GET /v1/ba/BA_EMPTY": fixtureText("ba_empty.json"),
    "POST /v1/scenario": fixtureText("scenario_solo.json"),
  };
}
