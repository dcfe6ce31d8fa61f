// Thin client over the /v1 endpoints. Every call keeps the exact response
// text alongside the parsed value so views (and tests) can prove that what
// is displayed came from the API payload, byte for byte.

import type {
  BaDetail,
  RegionCollection,
  RollupReport,
  ScenarioRequest,
  ScenarioResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export interface Payload<T> {
  data: T;
  raw: string;
}

async function request<T>(
  url: string,
  init?: RequestInit,
): Promise<Payload<T>> {
  const resp = await fetch(url, init);
  const raw = await resp.text();
  if (!resp.ok) {
    let code = "http_error";
    let message = raw;
    try {
      const body = JSON.parse(raw);
      code = body.code ?? code;
      message = body.message ?? message;
    } catch {
      // non-JSON error body: keep the raw text as the message
    }
    throw new ApiError(resp.status, code, message);
  }
  return { data: JSON.parse(raw) as T, raw };
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  getRollup(level: string): Promise<Payload<RollupReport>> {
    return request(`${this.baseUrl}/v1/rollup?level=${encodeURIComponent(level)}`);
  }

  getBa(baId: string): Promise<Payload<BaDetail>> {
    return request(`${this.baseUrl}/v1/ba/${encodeURIComponent(baId)}`);
  }

  getRegions(): Promise<Payload<RegionCollection>> {
    return request(`${this.baseUrl}/v1/geo/regions`);
  }

  runScenario(
    req: ScenarioRequest,
    signal?: AbortSignal,
  ): Promise<Payload<ScenarioResponse>> {
    return request(`${this.baseUrl}/v1/scenario`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
      signal,
    });
  }
}
