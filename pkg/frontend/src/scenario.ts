// Siting scenario form: validation mirrors the API's request invariants so
// submit stays disabled until the request would be accepted. Each submit
// cancels any in-flight request; completed runs accumulate in a comparison
// list that belongs to the scenario store alone (layer switches on the map
// never touch it).

import { ApiClient, ApiError, Payload } from "./api.js";
import type { Accounting, ScenarioRequest, ScenarioResponse } from "./types.js";

export interface ScenarioFormState {
  latitude: string;
  longitude: string;
  power_capacity_mw: string;
  square_footage: string;
  dc_type: string;
  climate_type: string;
  uptime: string;
  accounting: Accounting;
}

export function emptyForm(): ScenarioFormState {
  return {
    latitude: "",
    longitude: "",
    power_capacity_mw: "",
    square_footage: "",
    dc_type: "",
    climate_type: "",
    uptime: "",
    accounting: "attributional",
  };
}

export interface ValidationResult {
  valid: boolean;
  errors: string[];
}

function parseNumber(text: string): number | null {
  if (text.trim() === "") return null;
  const value = Number(text);
  return Number.isFinite(value) ? value : NaN;
}

export function validateForm(form: ScenarioFormState): ValidationResult {
  const errors: string[] = [];
  const lat = parseNumber(form.latitude);
  const lon = parseNumber(form.longitude);
  if (lat === null || Number.isNaN(lat) || lat < -90 || lat > 90) {
    errors.push("latitude must be a number in [-90, 90]");
  }
  if (lon === null || Number.isNaN(lon) || lon < -180 || lon > 180) {
    errors.push("longitude must be a number in [-180, 180]");
  }

  const capacity = parseNumber(form.power_capacity_mw);
  const footage = parseNumber(form.square_footage);
  const hasCapacity = capacity !== null;
  const hasFootage = footage !== null;
  if (hasCapacity === hasFootage) {
    errors.push("provide exactly one of power capacity or square footage");
  }
  if (hasCapacity && (Number.isNaN(capacity) || capacity! <= 0)) {
    errors.push("power capacity must be positive");
  }
  if (hasFootage) {
    if (Number.isNaN(footage) || footage! <= 0) {
      errors.push("square footage must be positive");
    }
    if (!form.dc_type) errors.push("footage requests need a facility type");
    if (!form.climate_type) errors.push("footage requests need a climate type");
  }

  const uptime = parseNumber(form.uptime);
  if (uptime !== null && (Number.isNaN(uptime) || uptime <= 0 || uptime > 1)) {
    errors.push("uptime must be in (0, 1]");
  }
  return { valid: errors.length === 0, errors };
}

export function toRequest(form: ScenarioFormState): ScenarioRequest {
  const check = validateForm(form);
  if (!check.valid) throw new Error(`invalid form: ${check.errors.join("; ")}`);
  const req: ScenarioRequest = {
    latitude: Number(form.latitude),
    longitude: Number(form.longitude),
    accounting: form.accounting,
  };
  const capacity = parseNumber(form.power_capacity_mw);
  if (capacity !== null) {
    req.power_capacity_mw = capacity;
  } else {
    req.square_footage = Number(form.square_footage);
    req.dc_type = form.dc_type;
    req.climate_type = form.climate_type;
  }
  const uptime = parseNumber(form.uptime);
  if (uptime !== null) req.uptime = uptime;
  return req;
}

export interface ScenarioRun {
  request: ScenarioRequest;
  response: ScenarioResponse;
  raw: string;
}

export class ScenarioStore {
  readonly history: ScenarioRun[] = [];
  private inflight: AbortController | null = null;

  constructor(private readonly client: ApiClient) {}

  /** Submit the form, cancelling any in-flight request first. */
  async run(form: ScenarioFormState): Promise<ScenarioRun> {
    const request = toRequest(form);
    if (this.inflight) this.inflight.abort();
    const controller = new AbortController();
    this.inflight = controller;
    let payload: Payload<ScenarioResponse>;
    try {
      payload = await this.client.runScenario(request, controller.signal);
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
    const run: ScenarioRun = { request, response: payload.data, raw: payload.raw };
    this.history.push(run);
    return run;
  }
}

export function describeApiError(err: unknown): string {
  if (err instanceof ApiError) {
    return `${err.code}: ${err.message}`;
  }
  return err instanceof Error ? err.message : String(err);
}
