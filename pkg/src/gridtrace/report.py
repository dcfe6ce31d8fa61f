"""Roll-ups, rankings, benchmark comparisons, and deterministic exports.

Emissions are attributed to the state where the facility sits even when the
supplying plants are elsewhere; energy totals include facilities in
unattributable balancing authorities, whose emissions are reported separately.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import IO, Optional, Sequence

from .attribution import AttributionRun, carbon_intensity, fuel_mix as _fuel_mix
from .records import DataCenterRecord

LEVELS = ("national", "ba", "state")
RANK_METRICS = ("emissions", "energy", "intensity", "count")

GRAMS_PER_MT = 1e12  # million metric tons
MWH_PER_TWH = 1e6

# Declared export precision: energy 2 dp TWh, emissions 2 dp MT, intensity
# whole g/kWh, capacity 2 dp MW, fuel shares 6 dp.
_ENERGY_DP = 2
_EMISSIONS_DP = 2
_CAPACITY_DP = 2
_SHARE_DP = 6


@dataclass
class RollupRow:
    key: str
    n_data_centers: int
    total_capacity_mw: float
    energy_twh: float
    emissions_mt: float
    intensity_g_per_kwh: Optional[float]
    fuel_mix: dict[str, float] = field(default_factory=dict)


@dataclass
class RollupReport:
    level: str
    rows: list[RollupRow]

    def row(self, key: str) -> RollupRow:
        for r in self.rows:
            if r.key == key:
                return r
        raise KeyError(key)


@dataclass
class CountryBenchmark:
    country: str
    total_twh: float
    intensity_g_per_kwh: float

    def __post_init__(self) -> None:
        if self.total_twh < 0 or self.intensity_g_per_kwh < 0:
            raise ValueError("benchmark values must be non-negative")


def _group_key(facility: DataCenterRecord, level: str) -> str:
    if level == "national":
        return "US"
    if level == "ba":
        return facility.ba_id or "unassigned"
    if level == "state":
        return facility.state or "unknown"
    raise ValueError(f"unknown rollup level {level!r}")


def rollup(
    run: AttributionRun,
    facilities: Sequence[DataCenterRecord],
    level: str,
) -> RollupReport:
    """Aggregate attribution output at the requested geographic level.

    Rows are sorted by key so the report is independent of input order.
    """
    if level not in LEVELS:
        raise ValueError(f"unknown rollup level {level!r}")
    by_id = {f.id: f for f in facilities}

    groups: dict[str, dict] = {}

    def group(key: str) -> dict:
        return groups.setdefault(
            key,
            {"n": 0, "capacity": [], "energy": [], "results": []},
        )

    for f in facilities:
        g = group(_group_key(f, level))
        g["n"] += 1
        if f.power_capacity_mw is not None:
            g["capacity"].append(f.power_capacity_mw)
        load = run.facility_loads_mwh.get(f.id)
        if load is not None:
            g["energy"].append(load)

    for r in run.results:
        facility = by_id.get(r.dc_id)
        if facility is None:
            continue
        group(_group_key(facility, level))["results"].append(r)

    rows = []
    for key in sorted(groups):
        g = groups[key]
        results = g["results"]
        emissions_g = math.fsum(res.emissions_g for res in results)
        attributed_mwh = math.fsum(res.load_mwh for res in results)
        rows.append(
            RollupRow(
                key=key,
                n_data_centers=g["n"],
                total_capacity_mw=math.fsum(g["capacity"]),
                energy_twh=math.fsum(g["energy"]) / MWH_PER_TWH,
                emissions_mt=emissions_g / GRAMS_PER_MT,
                intensity_g_per_kwh=carbon_intensity(emissions_g, attributed_mwh),
                fuel_mix=_fuel_mix(results) if results else {},
            )
        )
    return RollupReport(level=level, rows=rows)


def rank(report: RollupReport, metric: str, k: int) -> list[RollupRow]:
    """Top-k rows by metric, descending, ties broken by key lexicographic."""
    if metric not in RANK_METRICS:
        raise ValueError(f"unknown rank metric {metric!r}")
    if k < 0:
        raise ValueError("k must be non-negative")

    def value(row: RollupRow) -> float:
        if metric == "emissions":
            return row.emissions_mt
        if metric == "energy":
            return row.energy_twh
        if metric == "count":
            return float(row.n_data_centers)
        return row.intensity_g_per_kwh if row.intensity_g_per_kwh is not None else -math.inf

    ordered = sorted(report.rows, key=lambda r: (-value(r), r.key))
    return ordered[:k]


@dataclass
class BenchmarkComparison:
    country: str
    country_intensity_g_per_kwh: float
    subject_intensity_g_per_kwh: float
    pct_difference: Optional[float]  # (subject / country - 1) * 100


def compare_benchmarks(
    subject_intensity_g_per_kwh: float,
    benchmarks: Sequence[CountryBenchmark],
) -> list[BenchmarkComparison]:
    rows = []
    for b in benchmarks:
        if b.intensity_g_per_kwh == 0:
            pct = None
        else:
            pct = (subject_intensity_g_per_kwh / b.intensity_g_per_kwh - 1.0) * 100.0
        rows.append(
            BenchmarkComparison(
                country=b.country,
                country_intensity_g_per_kwh=b.intensity_g_per_kwh,
                subject_intensity_g_per_kwh=subject_intensity_g_per_kwh,
                pct_difference=pct,
            )
        )
    return rows


def parse_benchmarks(source: IO[str]) -> list[CountryBenchmark]:
    """Read the static country benchmark table: country,total_twh,intensity_g_per_kwh."""
    reader = csv.DictReader(source)
    required = {"country", "total_twh", "intensity_g_per_kwh"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise ValueError(f"benchmark file must have columns {sorted(required)}")
    return [
        CountryBenchmark(
            country=row["country"].strip(),
            total_twh=float(row["total_twh"]),
            intensity_g_per_kwh=float(row["intensity_g_per_kwh"]),
        )
        for row in reader
    ]


def _round_row(row: RollupRow) -> dict:
    return {
        "key": row.key,
        "n_data_centers": row.n_data_centers,
        "total_capacity_mw": round(row.total_capacity_mw, _CAPACITY_DP),
        "energy_twh": round(row.energy_twh, _ENERGY_DP),
        "emissions_mt": round(row.emissions_mt, _EMISSIONS_DP),
        "intensity_g_per_kwh": (
            None if row.intensity_g_per_kwh is None else round(row.intensity_g_per_kwh)
        ),
        "fuel_mix": {k: round(v, _SHARE_DP) for k, v in sorted(row.fuel_mix.items())},
    }


def export(report: RollupReport, format: str) -> bytes:
    """Serialize a report deterministically at the declared precision."""
    if format == "json":
        doc = {"level": report.level, "rows": [_round_row(r) for r in report.rows]}
        return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode()
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["key", "n_data_centers", "total_capacity_mw", "energy_twh",
             "emissions_mt", "intensity_g_per_kwh", "fuel_mix"]
        )
        for row in report.rows:
            d = _round_row(row)
            writer.writerow(
                [
                    d["key"],
                    d["n_data_centers"],
                    f"{d['total_capacity_mw']:.{_CAPACITY_DP}f}",
                    f"{d['energy_twh']:.{_ENERGY_DP}f}",
                    f"{d['emissions_mt']:.{_EMISSIONS_DP}f}",
                    "" if d["intensity_g_per_kwh"] is None else str(d["intensity_g_per_kwh"]),
                    json.dumps(d["fuel_mix"], sort_keys=True, separators=(",", ":")),
                ]
            )
        return buf.getvalue().encode()
    raise ValueError(f"unknown export format {format!r}")


def import_csv(data: bytes) -> RollupReport:
    """Re-parse an exported CSV; values carry the declared export precision."""
    reader = csv.DictReader(io.StringIO(data.decode()))
    rows = []
    for row in reader:
        rows.append(
            RollupRow(
                key=row["key"],
                n_data_centers=int(row["n_data_centers"]),
                total_capacity_mw=float(row["total_capacity_mw"]),
                energy_twh=float(row["energy_twh"]),
                emissions_mt=float(row["emissions_mt"]),
                intensity_g_per_kwh=(
                    float(row["intensity_g_per_kwh"]) if row["intensity_g_per_kwh"] else None
                ),
                fuel_mix=json.loads(row["fuel_mix"]),
            )
        )
    return RollupReport(level="unknown", rows=rows)
