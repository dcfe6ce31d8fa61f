import { describe, expect, it } from "vitest";

import {
  initialViewState,
  LAYERS,
  METRICS,
  selectRegion,
  setLayer,
  setMetric,
} from "../src/state.js";

describe("map view state", () => {
  it("starts on the BA emissions layer with nothing selected", () => {
    expect(initialViewState()).toEqual({
      layer: "ba",
      metric: "emissions",
      selected_region: null,
    });
  });

  it("every metric is valid on every layer", () => {
    for (const layer of LAYERS) {
      for (const metric of METRICS) {
        const state = setMetric(setLayer(initialViewState(), layer), metric);
        expect(state.layer).toBe(layer);
        expect(state.metric).toBe(metric);
      }
    }
  });

  it("clears the selection when the layer changes", () => {
    const selected = selectRegion(initialViewState(), "BA_MIX");
    expect(selected.selected_region).toBe("BA_MIX");
    const switched = setLayer(selected, "state");
    expect(switched.selected_region).toBeNull();
  });

  it("keeps the selection when only the metric changes", () => {
    const selected = selectRegion(initialViewState(), "BA_MIX");
    expect(setMetric(selected, "intensity").selected_region).toBe("BA_MIX");
  });

  it("same-layer switch is a no-op that preserves selection", () => {
    const selected = selectRegion(initialViewState(), "BA_SOLO");
    expect(setLayer(selected, "ba")).toBe(selected);
  });

  it("rejects unknown layers and metrics", () => {
    expect(() => setLayer(initialViewState(), "county" as never)).toThrow();
    expect(() => setMetric(initialViewState(), "vibes" as never)).toThrow();
  });
});
