// Display formatting. Inputs are always the raw API numbers; these helpers
// only change presentation, never the value.

const mwhFormat = new Intl.NumberFormat("en-US", { maximumFractionDigits: 0 });

export function formatMwh(value: number): string {
  return `${mwhFormat.format(value)} MWh`;
}

export function formatGrams(value: number | null): string {
  if (value === null) return "n/a";
  if (value === 0) return "0 g";
  const exp = value.toExponential();
  const [mantissa, exponent] = exp.split("e");
  const trimmed = mantissa.length > 6 ? Number(mantissa).toFixed(4) : mantissa;
  return `${trimmed}e${Number(exponent)} g`;
}

export function formatIntensity(value: number | null): string {
  return value === null ? "n/a" : `${value} gCO2e/kWh`;
}

export function formatShare(value: number): string {
  return `${(value * 100).toFixed(1)}%`;
}

export function metricValue(
  metric: string,
  row: {
    energy_twh: number;
    emissions_mt: number;
    intensity_g_per_kwh: number | null;
    n_data_centers: number;
  },
): number | null {
  switch (metric) {
    case "energy":
      return row.energy_twh;
    case "emissions":
      return row.emissions_mt;
    case "intensity":
      return row.intensity_g_per_kwh;
    case "count":
      return row.n_data_centers;
    default:
      throw new Error(`unknown metric: ${metric}`);
  }
}

export function metricLabel(metric: string): string {
  switch (metric) {
    case "energy":
      return "Energy (TWh)";
    case "emissions":
      return "Emissions (MT CO2e)";
    case "intensity":
      return "Intensity (gCO2e/kWh)";
    case "count":
      return "Data centers";
    default:
      throw new Error(`unknown metric: ${metric}`);
  }
}
