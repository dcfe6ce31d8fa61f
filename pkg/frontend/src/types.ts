// Wire types mirroring the /v1 API payloads. The UI renders these values
// as received and never recomputes attribution locally.

export type Level = "ba" | "state";
export type Metric = "energy" | "emissions" | "intensity" | "count";
export type Accounting = "attributional" | "consequential";

export interface RollupRow {
  key: string;
  n_data_centers: number;
  total_capacity_mw: number;
  energy_twh: number;
  emissions_mt: number;
  intensity_g_per_kwh: number | null;
  fuel_mix: Record<string, number>;
}

export interface RollupReport {
  level: string;
  rows: RollupRow[];
}

export interface PlantDetail {
  plant_id: string;
  fuel_category: string;
  annual_net_generation_mwh: number;
  emission_rate_g_per_kwh: number;
  coefficient: number | null;
}

export interface BaDetail {
  ba_id: string;
  intensity_g_per_kwh: number | null;
  fuel_mix: Record<string, number>;
  energy_twh: number;
  emissions_mt: number;
  n_data_centers: number;
  plants: PlantDetail[];
  flags: { unattributable: boolean };
}

export interface RegionProperties {
  ba_id: string;
  name: string;
  intensity_g_per_kwh: number | null;
  energy_twh: number;
  emissions_mt: number;
  n_data_centers: number;
  unattributable: boolean;
}

export type Ring = [number, number][];

export interface RegionFeature {
  type: "Feature";
  properties: RegionProperties;
  geometry:
    | { type: "Polygon"; coordinates: Ring[] }
    | { type: "MultiPolygon"; coordinates: Ring[][] };
}

export interface RegionCollection {
  type: "FeatureCollection";
  features: RegionFeature[];
}

export interface ScenarioRequest {
  latitude: number;
  longitude: number;
  power_capacity_mw?: number;
  square_footage?: number;
  dc_type?: string;
  climate_type?: string;
  uptime?: number;
  accounting: Accounting;
}

export interface ScenarioPlantRow {
  plant_id: string;
  fuel_category: string;
  load_mwh: number;
  emissions_g: number;
}

export interface ScenarioResponse {
  ba_id: string;
  power_capacity_mw: number;
  capacity_provenance: "reported" | "imputed";
  uptime: number;
  energy_mwh: number;
  emissions_g: number | null;
  intensity_g_per_kwh: number | null;
  accounting: Accounting;
  fuel_mix: Record<string, number>;
  per_plant: ScenarioPlantRow[];
  flags: string[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
}
