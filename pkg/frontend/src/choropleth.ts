// SVG choropleth over the BA region polygons. Values come straight from the
// feature properties the API returned; hover surfaces them unchanged.

import { metricValue } from "./format.js";
import type { Metric, RegionCollection, RegionFeature, Ring } from "./types.js";

export interface MapBounds {
  lonMin: number;
  latMin: number;
  lonMax: number;
  latMax: number;
}

export function collectionBounds(regions: RegionCollection): MapBounds {
  let lonMin = Infinity, latMin = Infinity, lonMax = -Infinity, latMax = -Infinity;
  for (const feature of regions.features) {
    for (const ring of featureRings(feature)) {
      for (const [lon, lat] of ring) {
        lonMin = Math.min(lonMin, lon);
        latMin = Math.min(latMin, lat);
        lonMax = Math.max(lonMax, lon);
        latMax = Math.max(latMax, lat);
      }
    }
  }
  return { lonMin, latMin, lonMax, latMax };
}

export function featureRings(feature: RegionFeature): Ring[] {
  const geom = feature.geometry;
  const parts = geom.type === "Polygon" ? [geom.coordinates] : geom.coordinates;
  return parts.flat();
}

export interface Projection {
  toScreen(lon: number, lat: number): [number, number];
  toLonLat(x: number, y: number): [number, number];
}

export function makeProjection(
  bounds: MapBounds,
  width: number,
  height: number,
  pad = 10,
): Projection {
  const sx = (width - 2 * pad) / (bounds.lonMax - bounds.lonMin || 1);
  const sy = (height - 2 * pad) / (bounds.latMax - bounds.latMin || 1);
  return {
    toScreen(lon, lat) {
      return [
        pad + (lon - bounds.lonMin) * sx,
        height - pad - (lat - bounds.latMin) * sy,
      ];
    },
    toLonLat(x, y) {
      return [
        bounds.lonMin + (x - pad) / sx,
        bounds.latMin + (height - pad - y) / sy,
      ];
    },
  };
}

export function ringPath(ring: Ring, proj: Projection): string {
  const pieces = ring.map(([lon, lat], i) => {
    const [x, y] = proj.toScreen(lon, lat);
    return `${i === 0 ? "M" : "L"}${x.toFixed(2)},${y.toFixed(2)}`;
  });
  return pieces.join("") + "Z";
}

// white -> dark red ramp
export function colorFor(value: number | null, min: number, max: number): string {
  if (value === null) return "#d0d0d0";
  const t = max > min ? (value - min) / (max - min) : 0.5;
  const r = Math.round(255 - t * 80);
  const g = Math.round(235 - t * 180);
  const b = Math.round(225 - t * 190);
  return `rgb(${r},${g},${b})`;
}

export interface ChoroplethHandlers {
  onHover?(feature: RegionFeature | null): void;
  onSelect?(feature: RegionFeature): void;
  onMapClick?(lon: number, lat: number): void;
}

export class Choropleth {
  private metric: Metric;
  private readonly proj: Projection;
  private readonly paths = new Map<string, SVGPathElement>();

  constructor(
    private readonly svg: SVGSVGElement,
    private readonly regions: RegionCollection,
    metric: Metric,
    private readonly handlers: ChoroplethHandlers = {},
    width = 600,
    height = 400,
  ) {
    this.metric = metric;
    this.proj = makeProjection(collectionBounds(regions), width, height);
    svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
    this.build();
    this.recolor();
  }

  private build(): void {
    const ns = "http://www.w3.org/2000/svg";
    this.svg.addEventListener("click", (ev: MouseEvent) => {
      if (!this.handlers.onMapClick) return;
      const rect = this.svg.getBoundingClientRect();
      const [lon, lat] = this.proj.toLonLat(ev.clientX - rect.left, ev.clientY - rect.top);
      this.handlers.onMapClick(lon, lat);
    });
    for (const feature of this.regions.features) {
      const path = document.createElementNS(ns, "path");
      path.setAttribute("d", featureRings(feature).map((r) => ringPath(r, this.proj)).join(" "));
      path.setAttribute("data-ba-id", feature.properties.ba_id);
      path.setAttribute("stroke", "#555");
      path.setAttribute("fill-rule", "evenodd");
      path.addEventListener("mouseenter", () => this.handlers.onHover?.(feature));
      path.addEventListener("mouseleave", () => this.handlers.onHover?.(null));
      path.addEventListener("click", (ev) => {
        ev.stopPropagation();
        this.handlers.onSelect?.(feature);
      });
      this.paths.set(feature.properties.ba_id, path);
      this.svg.appendChild(path);
    }
  }

  /** Re-color for a new metric without touching geometry or refetching. */
  setMetric(metric: Metric): void {
    this.metric = metric;
    this.recolor();
  }

  private recolor(): void {
    const values = this.regions.features
      .map((f) => metricValue(this.metric, f.properties))
      .filter((v): v is number => v !== null);
    const min = Math.min(...values);
    const max = Math.max(...values);
    for (const feature of this.regions.features) {
      const path = this.paths.get(feature.properties.ba_id)!;
      const value = metricValue(this.metric, feature.properties);
      path.setAttribute("fill", colorFor(value, min, max));
    }
  }

  pathFor(baId: string): SVGPathElement | undefined {
    return this.paths.get(baId);
  }
}
