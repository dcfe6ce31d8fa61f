"""Deterministic synthetic corpora for fixtures, demos, and scale checks.

Generates the full input file set (facility CSV, plant CSV, BA regions
GeoJSON, marginal rates, country benchmarks) for a grid of rectangular
balancing authorities laid over the contiguous-US bounding box.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

STATE_CODES = (
    "AL AZ AR CA CO CT DE FL GA ID IL IN IA KS KY LA ME MD MA MI MN MS MO "
    "MT NE NV NH NJ NM NY NC ND OH OK OR PA RI SC SD TN TX UT VT VA WA WV WI WY DC"
).split()

CLIMATE_TYPES = ("Cfa", "Dfa", "BSk", "Csb", "Dfb")

# (fuel, emission rate g/kWh, relative pool weight)
FUEL_PROFILE = (
    ("coal", 1000.0, 0.16),
    ("natural_gas", 450.0, 0.40),
    ("oil", 820.0, 0.02),
    ("nuclear", 0.0, 0.19),
    ("hydro", 0.0, 0.06),
    ("wind", 0.0, 0.09),
    ("solar", 0.0, 0.05),
    ("geothermal", 38.0, 0.01),
    ("biomass", 52.0, 0.02),
)

LON_MIN, LON_MAX = -120.0, -72.0
LAT_MIN, LAT_MAX = 27.0, 47.0


@dataclass
class SynthCorpus:
    data_centers_csv: str
    power_plants_csv: str
    regions_geojson: str
    marginal_rates_csv: str
    benchmarks_csv: str

    def write(self, directory) -> dict:
        """Write all input files; returns name -> path."""
        from pathlib import Path

        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        files = {
            "data_centers": d / "data_centers.csv",
            "power_plants": d / "power_plants.csv",
            "regions": d / "regions.geojson",
            "marginal_rates": d / "marginal_rates.csv",
            "benchmarks": d / "benchmarks.csv",
        }
        files["data_centers"].write_text(self.data_centers_csv)
        files["power_plants"].write_text(self.power_plants_csv)
        files["regions"].write_text(self.regions_geojson)
        files["marginal_rates"].write_text(self.marginal_rates_csv)
        files["benchmarks"].write_text(self.benchmarks_csv)
        return {k: str(v) for k, v in files.items()}


def _ba_grid(n_bas: int) -> list[tuple[str, float, float, float, float]]:
    """Split the bounding box into n_bas rectangular cells (ba_id, bounds)."""
    cols = math.ceil(math.sqrt(n_bas * (LON_MAX - LON_MIN) / (LAT_MAX - LAT_MIN)))
    rows = math.ceil(n_bas / cols)
    dx = (LON_MAX - LON_MIN) / cols
    dy = (LAT_MAX - LAT_MIN) / rows
    cells = []
    for i in range(n_bas):
        r, c = divmod(i, cols)
        x0 = LON_MIN + c * dx
        y0 = LAT_MIN + r * dy
        cells.append((f"BA{i:03d}", x0, y0, x0 + dx, y0 + dy))
    return cells


def make_corpus(
    n_facilities: int = 2132,
    n_plants: int = 3318,
    n_bas: int = 52,
    seed: int = 7,
    missing_capacity_fraction: float = 0.16,
    uptime_benchmark_intensity: float = 369.0,
) -> SynthCorpus:
    rng = np.random.default_rng(seed)
    cells = _ba_grid(n_bas)

    features = []
    for ba_id, x0, y0, x1, y1 in cells:
        ring = [[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]
        features.append(
            {
                "type": "Feature",
                "properties": {"ba_id": ba_id, "name": f"Synthetic BA {ba_id}"},
                "geometry": {"type": "Polygon", "coordinates": [ring]},
            }
        )
    regions_geojson = json.dumps({"type": "FeatureCollection", "features": features})

    plant_buf = io.StringIO()
    w = csv.writer(plant_buf, lineterminator="\n")
    w.writerow(
        ["plant_id", "latitude", "longitude", "ba_id", "fuel_category",
         "annual_net_generation_mwh", "emission_rate", "emission_rate_unit",
         "nameplate_capacity_mw"]
    )
    fuel_names = [f[0] for f in FUEL_PROFILE]
    fuel_rates = {f[0]: f[1] for f in FUEL_PROFILE}
    fuel_weights = np.array([f[2] for f in FUEL_PROFILE])
    fuel_weights = fuel_weights / fuel_weights.sum()
    for j in range(n_plants):
        ba_id, x0, y0, x1, y1 = cells[j % len(cells)]
        lon = float(rng.uniform(x0 + 1e-3, x1 - 1e-3))
        lat = float(rng.uniform(y0 + 1e-3, y1 - 1e-3))
        fuel = fuel_names[int(rng.choice(len(fuel_names), p=fuel_weights))]
        generation = float(np.round(rng.lognormal(mean=12.5, sigma=1.0), 1))
        base_rate = fuel_rates[fuel]
        rate = base_rate * float(rng.uniform(0.9, 1.1)) if base_rate > 0 else 0.0
        if j % 5 == 0:
            unit, rate_out = "lb_per_mwh", rate * 1000.0 / 453.59237
        else:
            unit, rate_out = "g_per_kwh", rate
        nameplate = float(np.round(rng.uniform(25.0, 1200.0), 1))
        w.writerow([f"P{j:05d}", f"{lat:.5f}", f"{lon:.5f}", ba_id, fuel,
                    f"{generation:.1f}", f"{rate_out:.6f}", unit, f"{nameplate:.1f}"])

    dc_buf = io.StringIO()
    w = csv.writer(dc_buf, lineterminator="\n")
    w.writerow(
        ["id", "provider", "address", "state", "latitude", "longitude",
         "square_footage", "sqft_source", "dc_type", "climate_type",
         "power_capacity_mw"]
    )
    for i in range(n_facilities):
        cell = cells[int(rng.integers(0, len(cells)))]
        ba_id, x0, y0, x1, y1 = cell
        lon = float(rng.uniform(x0 + 1e-3, x1 - 1e-3))
        lat = float(rng.uniform(y0 + 1e-3, y1 - 1e-3))
        state = STATE_CODES[int(rng.integers(0, len(STATE_CODES)))]
        capacity = float(np.clip(rng.lognormal(mean=1.5, sigma=1.2), 0.04, 325.0))
        # Footage implies ~92 W/sqft density with noise, so capacity is learnable.
        sqft = capacity * 1e6 / (91.75 * float(rng.uniform(0.8, 1.25)))
        dc_type = "hyperscale" if rng.random() < 0.12 else "other"
        climate = CLIMATE_TYPES[int(rng.integers(0, len(CLIMATE_TYPES)))]
        missing = rng.random() < missing_capacity_fraction
        w.writerow(
            [f"DC{i:05d}", f"Provider {i % 37}", f"{i} Synthetic Way", state,
             f"{lat:.5f}", f"{lon:.5f}", f"{sqft:.0f}", "baxtel", dc_type, climate,
             "" if missing else f"{capacity:.3f}"]
        )

    rates_buf = io.StringIO()
    w = csv.writer(rates_buf, lineterminator="\n")
    w.writerow(["ba_id", "rate_g_per_kwh"])
    for idx, (ba_id, *_rest) in enumerate(cells):
        # Marginal rates deliberately differ from the BA's average rates.
        w.writerow([ba_id, f"{420.0 + 7.0 * (idx % 11):.1f}"])

    bench_buf = io.StringIO()
    w = csv.writer(bench_buf, lineterminator="\n")
    w.writerow(["country", "total_twh", "intensity_g_per_kwh"])
    w.writerow(["United States (grid average)", "4178", f"{uptime_benchmark_intensity:.0f}"])
    w.writerow(["China", "8849", "582"])
    w.writerow(["France", "468", "58"])
    w.writerow(["Germany", "507", "381"])

    return SynthCorpus(
        data_centers_csv=dc_buf.getvalue(),
        power_plants_csv=plant_buf.getvalue(),
        regions_geojson=regions_geojson,
        marginal_rates_csv=rates_buf.getvalue(),
        benchmarks_csv=bench_buf.getvalue(),
    )


def demo_corpus() -> SynthCorpus:
    """Three-BA fixture small enough to inspect by hand.

    BA_SOLO has a single 500 g/kWh plant, so a 1 MW facility at 0.75 uptime
    attributes 6,570 MWh and 3.285e9 g there; BA_MIX has a 75/25 zero/1000
    g/kWh split; BA_EMPTY has no eligible generation.
    """
    regions = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "properties": {"ba_id": "BA_SOLO", "name": "Solo Plant BA"},
                "geometry": {"type": "Polygon", "coordinates": [[
                    [-100.0, 30.0], [-95.0, 30.0], [-95.0, 35.0], [-100.0, 35.0], [-100.0, 30.0]
                ]]},
            },
            {
                "type": "Feature",
                "properties": {"ba_id": "BA_MIX", "name": "Mixed Fuel BA"},
                "geometry": {"type": "Polygon", "coordinates": [[
                    [-95.0, 30.0], [-90.0, 30.0], [-90.0, 35.0], [-95.0, 35.0], [-95.0, 30.0]
                ]]},
            },
            {
                "type": "Feature",
                "properties": {"ba_id": "BA_EMPTY", "name": "No Generation BA"},
                "geometry": {"type": "Polygon", "coordinates": [[
                    [-90.0, 30.0], [-85.0, 30.0], [-85.0, 35.0], [-90.0, 35.0], [-90.0, 30.0]
                ]]},
            },
        ],
    }
    plants = (
        "plant_id,latitude,longitude,ba_id,fuel_category,annual_net_generation_mwh,"
        "emission_rate,emission_rate_unit,nameplate_capacity_mw\n"
        "P_SOLO,32.5,-97.5,BA_SOLO,natural_gas,1000000,500,g_per_kwh,600\n"
        "P_CLEAN,32.5,-93.5,BA_MIX,nuclear,750000,0,g_per_kwh,900\n"
        "P_COAL,32.0,-92.5,BA_MIX,coal,250000,1000,g_per_kwh,400\n"
        "P_IDLE,32.5,-87.5,BA_EMPTY,oil,0,820,g_per_kwh,50\n"
    )
    dcs = (
        "id,provider,address,state,latitude,longitude,square_footage,sqft_source,"
        "dc_type,climate_type,power_capacity_mw\n"
        "DC_SOLO,Acme,1 Solo Rd,TX,32.5,-97.6,12000,baxtel,other,Cfa,1\n"
        "DC_MIX,Acme,2 Mix Rd,LA,32.4,-93.0,40000,baxtel,hyperscale,Cfa,4\n"
        "DC_NOCAP,Beta,3 Mix Rd,LA,33.0,-93.2,25000,osm,other,Cfa,\n"
        "DC_EMPTY,Gamma,4 Idle Rd,MS,32.5,-88.0,9000,scraped,other,Cfa,0.5\n"
    )
    rates = "ba_id,rate_g_per_kwh\nBA_SOLO,400\nBA_MIX,650\n"
    benchmarks = (
        "country,total_twh,intensity_g_per_kwh\n"
        "United States (grid average),4178,369\n"
        "France,468,58\n"
    )
    return SynthCorpus(
        data_centers_csv=dcs,
        power_plants_csv=plants,
        regions_geojson=json.dumps(regions),
        marginal_rates_csv=rates,
        benchmarks_csv=benchmarks,
    )
