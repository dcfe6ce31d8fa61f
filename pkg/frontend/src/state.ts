// Map view state: which layer and metric drive the display, plus the
// current region selection. Changing layer always clears the selection.

import type { Level, Metric } from "./types.js";

export const LAYERS: Level[] = ["ba", "state"];
export const METRICS: Metric[] = ["energy", "emissions", "intensity", "count"];

export interface MapViewState {
  layer: Level;
  metric: Metric;
  selected_region: string | null;
}

export function initialViewState(): MapViewState {
  return { layer: "ba", metric: "emissions", selected_region: null };
}

export function setLayer(state: MapViewState, layer: Level): MapViewState {
  if (!LAYERS.includes(layer)) throw new Error(`unknown layer: ${layer}`);
  if (layer === state.layer) return state;
  return { layer, metric: state.metric, selected_region: null };
}

export function setMetric(state: MapViewState, metric: Metric): MapViewState {
  if (!METRICS.includes(metric)) throw new Error(`unknown metric: ${metric}`);
  return { ...state, metric };
}

export function selectRegion(
  state: MapViewState,
  region: string | null,
): MapViewState {
  return { ...state, selected_region: region };
}
