// App assembly: map panel + siting panel. All numbers shown anywhere in this
// UI originate from API payloads; the client renders, never recomputes.

import { ApiClient } from "./api.js";
import { Choropleth } from "./choropleth.js";
import {
  formatGrams,
  formatIntensity,
  formatMwh,
  formatShare,
  metricLabel,
  metricValue,
} from "./format.js";
import {
  describeApiError,
  emptyForm,
  ScenarioFormState,
  ScenarioRun,
  ScenarioStore,
  validateForm,
} from "./scenario.js";
import { initialViewState, MapViewState, selectRegion, setLayer, setMetric } from "./state.js";
import { LAYERS, METRICS } from "./state.js";
import type { Metric, RegionCollection, RegionFeature, RollupReport } from "./types.js";

const FUEL_COLORS: Record<string, string> = {
  coal: "#4a4a4a",
  natural_gas: "#e08f2e",
  oil: "#8a5a2a",
  nuclear: "#7e57c2",
  hydro: "#3f7fbf",
  wind: "#58b3a5",
  solar: "#e6c34a",
  geothermal: "#b0623d",
  biomass: "#6f9e48",
  other: "#999999",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export interface App {
  view: MapViewState;
  store: ScenarioStore;
  choropleth: Choropleth | null;
  reload(): Promise<void>;
}

export function initApp(root: HTMLElement, client: ApiClient): App {
  let view = initialViewState();
  const store = new ScenarioStore(client);
  let regions: RegionCollection | null = null;
  let stateRollup: RollupReport | null = null;
  let choropleth: Choropleth | null = null;

  root.innerHTML = "";
  const mapPanel = el("section", "map-panel");
  const error = el("div", "error-state");
  error.hidden = true;
  const retry = el("button", "retry", "Retry");
  retry.addEventListener("click", () => {
    void app.reload();
  });
  error.appendChild(el("span", "error-message", "Could not load map data. "));
  error.appendChild(retry);

  const controls = el("div", "controls");
  const layerButtons = new Map(
    LAYERS.map((layer) => {
      const b = el("button", "layer-btn", layer.toUpperCase());
      b.dataset.layer = layer;
      b.addEventListener("click", () => {
        view = setLayer(view, layer);
        renderLayer();
      });
      controls.appendChild(b);
      return [layer, b] as const;
    }),
  );
  const metricButtons = new Map(
    METRICS.map((metric) => {
      const b = el("button", "metric-btn", metricLabel(metric));
      b.dataset.metric = metric;
      b.addEventListener("click", () => {
        view = setMetric(view, metric as Metric);
        if (choropleth) choropleth.setMetric(view.metric); // re-color, no refetch
        renderStateList();
        renderButtons();
      });
      controls.appendChild(b);
      return [metric, b] as const;
    }),
  );

  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("class", "map");
  const hover = el("div", "hover-panel", "hover over a region");
  const stateList = el("ol", "state-list");
  const detail = el("div", "region-detail");
  mapPanel.append(error, controls, svg, hover, stateList, detail);

  const scenarioPanel = el("section", "scenario-panel");
  const form = buildScenarioForm(scenarioPanel, () => submitScenario());
  const result = el("div", "scenario-result");
  const history = el("ul", "scenario-history");
  scenarioPanel.append(result, el("h3", undefined, "Compared placements"), history);

  root.append(mapPanel, scenarioPanel);

  function renderButtons(): void {
    for (const [layer, b] of layerButtons) b.classList.toggle("active", layer === view.layer);
    for (const [metric, b] of metricButtons) b.classList.toggle("active", metric === view.metric);
  }

  function hoverText(f: RegionFeature): string {
    const p = f.properties;
    // exact payload values, no rounding
    return [
      p.ba_id,
      `intensity=${p.intensity_g_per_kwh}`,
      `energy=${p.energy_twh}`,
      `emissions=${p.emissions_mt}`,
      `count=${p.n_data_centers}`,
    ].join(" ");
  }

  function renderLayer(): void {
    renderButtons();
    svg.style.display = view.layer === "ba" ? "" : "none";
    hover.style.display = view.layer === "ba" ? "" : "none";
    stateList.style.display = view.layer === "state" ? "" : "none";
    detail.textContent = "";
    renderStateList();
  }

  function renderStateList(): void {
    if (view.layer !== "state" || !stateRollup) return;
    stateList.innerHTML = "";
    const rows = [...stateRollup.rows].sort((a, b) => {
      const va = metricValue(view.metric, a) ?? -Infinity;
      const vb = metricValue(view.metric, b) ?? -Infinity;
      return vb - va || a.key.localeCompare(b.key);
    });
    for (const row of rows) {
      const item = el("li", "state-row");
      item.dataset.key = row.key;
      item.textContent = `${row.key}: ${metricValue(view.metric, row)}`;
      stateList.appendChild(item);
    }
  }

  async function showDetail(baId: string): Promise<void> {
    view = selectRegion(view, baId);
    const payload = await client.getBa(baId);
    const d = payload.data;
    detail.innerHTML = "";
    detail.append(
      el("h3", undefined, d.ba_id),
      el("div", "detail-intensity", formatIntensity(d.intensity_g_per_kwh)),
      el("div", "detail-energy", `energy ${d.energy_twh} TWh`),
      el("div", "detail-emissions", `emissions ${d.emissions_mt} MT`),
      el("div", "detail-count", `${d.n_data_centers} data centers`),
    );
    if (d.flags.unattributable) {
      detail.appendChild(el("div", "flag", "unattributable: no eligible generation"));
    }
  }

  function submitScenario(): void {
    const state = readForm(form);
    const messages = form.querySelector<HTMLElement>(".form-errors")!;
    store
      .run(state)
      .then((run) => {
        messages.textContent = "";
        renderScenarioResult(result, run);
        renderHistory();
      })
      .catch((err) => {
        if (err instanceof DOMException && err.name === "AbortError") return;
        messages.textContent = describeApiError(err);
      });
  }

  function renderHistory(): void {
    history.innerHTML = "";
    for (const run of store.history) {
      const item = el("li", "history-row");
      item.textContent =
        `${run.response.ba_id} @ (${run.request.latitude}, ${run.request.longitude}) -> ` +
        `${formatMwh(run.response.energy_mwh)}, ${formatGrams(run.response.emissions_g)}`;
      history.appendChild(item);
    }
  }

  const app: App = {
    get view() {
      return view;
    },
    set view(v: MapViewState) {
      view = v;
    },
    store,
    get choropleth() {
      return choropleth;
    },
    async reload() {
      error.hidden = true;
      try {
        const [regionsPayload, statePayload] = await Promise.all([
          client.getRegions(),
          client.getRollup("state"),
        ]);
        regions = regionsPayload.data;
        stateRollup = statePayload.data;
      } catch (err) {
        error.hidden = false;
        error.querySelector(".error-message")!.textContent =
          `Could not load map data (${describeApiError(err)}). `;
        return;
      }
      svg.innerHTML = "";
      choropleth = new Choropleth(svg, regions, view.metric, {
        onHover(feature) {
          hover.textContent = feature ? hoverText(feature) : "hover over a region";
        },
        onSelect(feature) {
          void showDetail(feature.properties.ba_id);
        },
        onMapClick(lon, lat) {
          setFormCoords(form, lat, lon);
        },
      });
      renderLayer();
    },
  };
  renderButtons();
  return app;
}

function buildScenarioForm(parent: HTMLElement, onSubmit: () => void): HTMLFormElement {
  const form = el("form", "scenario-form");
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    onSubmit();
  });
  const fields: [keyof ScenarioFormState, string][] = [
    ["latitude", "Latitude"],
    ["longitude", "Longitude"],
    ["power_capacity_mw", "Power capacity (MW)"],
    ["square_footage", "Square footage"],
    ["dc_type", "Facility type"],
    ["climate_type", "Climate type"],
    ["uptime", "Uptime (0-1]"],
  ];
  for (const [name, label] of fields) {
    const wrap = el("label", "field", label + " ");
    const input = el("input");
    input.name = name;
    input.addEventListener("input", () => refreshValidity(form));
    wrap.appendChild(input);
    form.appendChild(wrap);
  }
  const accounting = el("select");
  accounting.name = "accounting";
  for (const option of ["attributional", "consequential"]) {
    const o = el("option", undefined, option);
    o.value = option;
    accounting.appendChild(o);
  }
  accounting.addEventListener("change", () => refreshValidity(form));
  const accountingWrap = el("label", "field", "Accounting ");
  accountingWrap.appendChild(accounting);
  form.appendChild(accountingWrap);

  const submit = el("button", "run-scenario", "Run scenario");
  submit.type = "submit";
  submit.disabled = true;
  form.appendChild(submit);
  form.appendChild(el("div", "form-errors"));
  parent.appendChild(form);
  return form;
}

export function readForm(form: HTMLFormElement): ScenarioFormState {
  const state = emptyForm();
  for (const key of Object.keys(state) as (keyof ScenarioFormState)[]) {
    const input = form.querySelector<HTMLInputElement | HTMLSelectElement>(`[name=${key}]`);
    if (input) (state as unknown as Record<string, string>)[key] = input.value;
  }
  return state;
}

function refreshValidity(form: HTMLFormElement): void {
  const submit = form.querySelector<HTMLButtonElement>("button[type=submit]")!;
  submit.disabled = !validateForm(readForm(form)).valid;
}

function setFormCoords(form: HTMLFormElement, lat: number, lon: number): void {
  form.querySelector<HTMLInputElement>("[name=latitude]")!.value = lat.toFixed(5);
  form.querySelector<HTMLInputElement>("[name=longitude]")!.value = lon.toFixed(5);
  refreshValidity(form);
}

export function renderScenarioResult(container: HTMLElement, run: ScenarioRun): void {
  const r = run.response;
  container.innerHTML = "";
  container.append(
    el("h3", undefined, `Placement in ${r.ba_id}`),
    el("div", "result-energy", formatMwh(r.energy_mwh)),
    el("div", "result-emissions", formatGrams(r.emissions_g)),
    el("div", "result-intensity", formatIntensity(r.intensity_g_per_kwh)),
    el(
      "div",
      "result-capacity",
      `${r.power_capacity_mw} MW (${r.capacity_provenance}), uptime ${r.uptime}`,
    ),
  );
  if (r.flags.length) {
    container.appendChild(el("div", "result-flags", `flags: ${r.flags.join(", ")}`));
  }
  container.appendChild(renderFuelDonut(r.fuel_mix));
  const plants = el("ol", "top-plants");
  for (const row of r.per_plant) {
    const item = el("li", "plant-row");
    item.textContent =
      `${row.plant_id} (${row.fuel_category}): ${formatMwh(row.load_mwh)}, ` +
      `${formatGrams(row.emissions_g)}`;
    plants.appendChild(item);
  }
  container.append(el("h4", undefined, "Top supplying plants"), plants);
}

function renderFuelDonut(mix: Record<string, number>): SVGSVGElement {
  const ns = "http://www.w3.org/2000/svg";
  const svg = document.createElementNS(ns, "svg");
  svg.setAttribute("class", "fuel-donut");
  svg.setAttribute("viewBox", "0 0 42 42");
  const radius = 15.91549;
  const circumference = 100;
  let offset = 25;
  for (const [fuel, share] of Object.entries(mix)) {
    const arc = document.createElementNS(ns, "circle");
    arc.setAttribute("r", String(radius));
    arc.setAttribute("cx", "21");
    arc.setAttribute("cy", "21");
    arc.setAttribute("fill", "transparent");
    arc.setAttribute("stroke", FUEL_COLORS[fuel] ?? FUEL_COLORS.other);
    arc.setAttribute("stroke-width", "6");
    const length = share * circumference;
    arc.setAttribute("stroke-dasharray", `${length} ${circumference - length}`);
    arc.setAttribute("stroke-dashoffset", String(offset));
    arc.setAttribute("data-fuel", fuel);
    arc.setAttribute("data-share", formatShare(share));
    svg.appendChild(arc);
    offset -= length;
  }
  return svg;
}
