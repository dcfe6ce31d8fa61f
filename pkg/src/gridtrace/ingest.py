"""Parse, validate, deduplicate, and merge facility and plant data.

Sources arrive as UTF-8 delimited text with a mandatory header row. Rows that
violate record invariants are rejected (never silently coerced) and logged in
the IngestReport; a missing mandatory column aborts the parse.
"""
from __future__ import annotations

import csv
import hashlib
import logging
import math
from typing import IO, Iterable, Optional

import numpy as np

from .records import (
    CONTIGUOUS_BBOX,
    CONTIGUOUS_STATES,
    DataCenterRecord,
    FUEL_CATEGORIES,
    IngestError,
    IngestReport,
    PowerPlantRecord,
    SQFT_SOURCE_PRIORITY,
    SQFT_SOURCES,
    lb_per_mwh_to_g_per_kwh,
)

logger = logging.getLogger(__name__)

DC_COLUMNS = [
    "id",
    "provider",
    "address",
    "state",
    "latitude",
    "longitude",
    "square_footage",
    "sqft_source",
    "dc_type",
    "climate_type",
    "power_capacity_mw",
]

PLANT_COLUMNS = [
    "plant_id",
    "latitude",
    "longitude",
    "ba_id",
    "fuel_category",
    "annual_net_generation_mwh",
    "emission_rate",
    "emission_rate_unit",
    "nameplate_capacity_mw",
]

DEFAULT_PLANT_MIN_NAMEPLATE_MW = 25.0
DEFAULT_DEDUP_RADIUS_M = 50.0

EARTH_RADIUS_M = 6_371_000.0

# Source fuel codes seen in plant inventories, folded onto canonical categories.
FUEL_CODE_MAP = {
    "coal": "coal",
    "col": "coal",
    "gas": "natural_gas",
    "ng": "natural_gas",
    "natural_gas": "natural_gas",
    "oil": "oil",
    "dfo": "oil",
    "rfo": "oil",
    "petroleum": "oil",
    "nuclear": "nuclear",
    "nuc": "nuclear",
    "hydro": "hydro",
    "wat": "hydro",
    "water": "hydro",
    "wind": "wind",
    "wnd": "wind",
    "solar": "solar",
    "sun": "solar",
    "geothermal": "geothermal",
    "geo": "geothermal",
    "biomass": "biomass",
    "wood": "biomass",
    "wds": "biomass",
    "lfg": "biomass",
    "other": "other",
    "oth": "other",
    "ofsl": "other",
}


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


def _require_columns(header: Iterable[str], required: Iterable[str], what: str) -> None:
    missing = [c for c in required if c not in header]
    if missing:
        raise IngestError(f"{what}: missing mandatory column(s) {missing}")


def _parse_float(cell: str, what: str) -> Optional[float]:
    """Parse an optional numeric cell. Empty means absent; malformed raises."""
    cell = cell.strip()
    if not cell:
        return None
    try:
        value = float(cell)
    except ValueError:
        raise ValueError(f"malformed {what}: {cell!r}")
    if math.isnan(value) or math.isinf(value):
        raise ValueError(f"non-finite {what}: {cell!r}")
    return value


def parse_data_centers(
    source: IO[str],
    source_tag: str = "baxtel",
    contiguous_only: bool = True,
) -> tuple[list[DataCenterRecord], IngestReport]:
    """Parse a data-center CSV stream into validated records.

    ``source_tag`` names the originating dataset and is used as the default
    square-footage provenance when the row does not declare one.
    """
    if source_tag not in SQFT_SOURCES:
        raise IngestError(f"unknown source tag {source_tag!r}")
    reader = csv.DictReader(source)
    if reader.fieldnames is None:
        raise IngestError("data-center source: empty stream, no header row")
    _require_columns(reader.fieldnames, DC_COLUMNS, "data-center source")

    report = IngestReport()
    records: list[DataCenterRecord] = []
    for row in reader:
        report.records_read += 1
        line = reader.line_num
        try:
            rec = _parse_dc_row(row, source_tag)
        except ValueError as exc:
            report.reject(line, str(exc))
            continue
        if contiguous_only and rec.state not in CONTIGUOUS_STATES:
            report.reject(line, f"outside contiguous US: state {rec.state}")
            continue
        records.append(rec)
    return records, report


def _parse_dc_row(row: dict, source_tag: str) -> DataCenterRecord:
    rec_id = row["id"].strip()
    if not rec_id:
        raise ValueError("missing id")
    state = row["state"].strip().upper()
    if len(state) != 2 or not state.isalpha():
        raise ValueError(f"invalid state code: {row['state']!r}")

    lat = _parse_float(row["latitude"], "latitude")
    lon = _parse_float(row["longitude"], "longitude")
    if lat is None or lon is None:
        raise ValueError("missing coordinates")
    if not -90.0 <= lat <= 90.0:
        raise ValueError("latitude out of range")
    if not -180.0 <= lon <= 180.0:
        raise ValueError("longitude out of range")
    if state in CONTIGUOUS_STATES:
        lon_min, lat_min, lon_max, lat_max = CONTIGUOUS_BBOX
        if not (lat_min <= lat <= lat_max and lon_min <= lon <= lon_max):
            raise ValueError("coordinates inconsistent with contiguous state code")

    sqft = _parse_float(row["square_footage"], "square_footage")
    if sqft is not None and sqft <= 0:
        raise ValueError("square footage must be positive")
    sqft_source = row["sqft_source"].strip().lower() or None
    if sqft is not None:
        if sqft_source is None:
            sqft_source = source_tag
        elif sqft_source not in SQFT_SOURCES:
            raise ValueError(f"unknown sqft_source: {sqft_source!r}")
    else:
        sqft_source = None

    capacity = _parse_float(row["power_capacity_mw"], "power_capacity_mw")
    if capacity is not None and capacity <= 0:
        raise ValueError("power capacity must be positive")

    dc_type = row["dc_type"].strip().lower()
    dc_type = "hyperscale" if dc_type == "hyperscale" else "other"

    return DataCenterRecord(
        id=rec_id,
        provider=row["provider"].strip(),
        address=row["address"].strip(),
        state=state,
        latitude=lat,
        longitude=lon,
        square_footage=sqft,
        sqft_source=sqft_source,
        dc_type=dc_type,
        climate_type=row["climate_type"].strip(),
        power_capacity_mw=capacity,
        capacity_provenance="reported" if capacity is not None else None,
        origin=source_tag,
    )


def map_fuel_code(code: str) -> tuple[str, bool]:
    """Map a source fuel code to a canonical category.

    Returns (category, known). Unknown codes land in "other".
    """
    key = code.strip().lower()
    if key in FUEL_CODE_MAP:
        return FUEL_CODE_MAP[key], True
    if key in FUEL_CATEGORIES:
        return key, True
    return "other", False


def parse_power_plants(
    source: IO[str],
    min_nameplate_mw: float = DEFAULT_PLANT_MIN_NAMEPLATE_MW,
) -> tuple[list[PowerPlantRecord], IngestReport]:
    """Parse a power-plant CSV stream.

    Emission rates are converted to g CO2e / kWh at parse time. Plants below
    the nameplate inclusion threshold, or lacking generation/emission fields,
    or reporting negative net generation, are excluded and counted.
    """
    reader = csv.DictReader(source)
    if reader.fieldnames is None:
        raise IngestError("power-plant source: empty stream, no header row")
    _require_columns(reader.fieldnames, PLANT_COLUMNS, "power-plant source")

    report = IngestReport()
    records: list[PowerPlantRecord] = []
    for row in reader:
        report.records_read += 1
        line = reader.line_num
        try:
            rec = _parse_plant_row(row, min_nameplate_mw)
        except ValueError as exc:
            report.reject(line, str(exc))
            continue
        records.append(rec)
    return records, report


def _parse_plant_row(row: dict, min_nameplate_mw: float) -> PowerPlantRecord:
    plant_id = row["plant_id"].strip()
    if not plant_id:
        raise ValueError("missing plant_id")
    ba_id = row["ba_id"].strip()
    if not ba_id:
        raise ValueError("missing ba_id")

    lat = _parse_float(row["latitude"], "latitude")
    lon = _parse_float(row["longitude"], "longitude")
    if lat is None or lon is None:
        raise ValueError("missing coordinates")
    if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
        raise ValueError("coordinates out of range")

    nameplate = _parse_float(row["nameplate_capacity_mw"], "nameplate_capacity_mw")
    if nameplate is None:
        raise ValueError("missing nameplate capacity")
    if nameplate < min_nameplate_mw:
        raise ValueError(f"below {min_nameplate_mw:g} MW inclusion threshold")

    generation = _parse_float(row["annual_net_generation_mwh"], "annual_net_generation_mwh")
    if generation is None:
        raise ValueError("missing annual net generation")
    if generation < 0:
        raise ValueError("negative annual net generation")

    rate = _parse_float(row["emission_rate"], "emission_rate")
    if rate is None:
        raise ValueError("missing emission rate")
    if rate < 0:
        raise ValueError("negative emission rate")
    unit = row["emission_rate_unit"].strip().lower()
    if unit == "lb_per_mwh":
        rate = lb_per_mwh_to_g_per_kwh(rate)
    elif unit != "g_per_kwh":
        raise ValueError(f"unknown emission rate unit: {unit!r}")

    fuel, known = map_fuel_code(row["fuel_category"])
    if not known:
        logger.warning("plant %s: unknown fuel code %r mapped to 'other'",
                       plant_id, row["fuel_category"])

    return PowerPlantRecord(
        plant_id=plant_id,
        latitude=lat,
        longitude=lon,
        ba_id=ba_id,
        fuel_category=fuel,
        annual_net_generation_mwh=generation,
        emission_rate_g_per_kwh=rate,
        nameplate_capacity_mw=nameplate,
    )


def merge_square_footage(
    candidates: list[tuple[float, str]],
) -> Optional[tuple[float, str]]:
    """Pick the authoritative footage from per-facility candidates.

    Highest-priority source wins (baxtel > scraped > osm); ties within a
    source keep the largest value. Empty input means no footage is known.
    """
    if not candidates:
        return None
    for value, src in candidates:
        if src not in SQFT_SOURCE_PRIORITY:
            raise ValueError(f"unknown sqft source {src!r}")
    return max(candidates, key=lambda c: (SQFT_SOURCE_PRIORITY[c[1]], c[0]))


def dedup_facilities(
    records: list[DataCenterRecord],
    radius_m: float = DEFAULT_DEDUP_RADIUS_M,
) -> tuple[list[DataCenterRecord], IngestReport]:
    """Merge facilities within ``radius_m`` (haversine) of each other.

    Proximity is closed transitively: chains of nearby records collapse into
    one cluster. The surviving record takes its identity from the
    highest-priority source in the cluster (ties broken by lexicographic id),
    footage from merge_square_footage, and the output is sorted by id so the
    result does not depend on input row order.
    """
    if radius_m <= 0:
        raise ValueError("dedup radius must be positive")
    report = IngestReport(records_read=len(records))
    if not records:
        return [], report

    n = len(records)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    lats = np.radians(np.array([r.latitude for r in records]))
    lons = np.radians(np.array([r.longitude for r in records]))
    # All-pairs haversine; fine at corpus scale (thousands of rows).
    dphi = lats[:, None] - lats[None, :]
    dlmb = lons[:, None] - lons[None, :]
    a = np.sin(dphi / 2) ** 2 + np.cos(lats)[:, None] * np.cos(lats)[None, :] * np.sin(dlmb / 2) ** 2
    dist = 2 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(a)))
    close_i, close_j = np.nonzero(dist <= radius_m)
    for i, j in zip(close_i.tolist(), close_j.tolist()):
        if i < j:
            union(i, j)

    clusters: dict[int, list[DataCenterRecord]] = {}
    for i, rec in enumerate(records):
        clusters.setdefault(find(i), []).append(rec)

    merged: list[DataCenterRecord] = []
    for members in clusters.values():
        merged.append(_merge_cluster(members))
        report.duplicates_merged += len(members) - 1
    merged.sort(key=lambda r: r.id)
    return merged, report


def _merge_cluster(members: list[DataCenterRecord]) -> DataCenterRecord:
    if len(members) == 1:
        return members[0]
    identity = min(
        members,
        key=lambda r: (-SQFT_SOURCE_PRIORITY.get(r.origin, -1), r.id),
    )
    footage = merge_square_footage(
        [(r.square_footage, r.sqft_source) for r in members if r.square_footage is not None]
    )
    capacity = identity.power_capacity_mw
    if capacity is None:
        known = [r.power_capacity_mw for r in members if r.power_capacity_mw is not None]
        capacity = max(known) if known else None
    return DataCenterRecord(
        id=identity.id,
        provider=identity.provider,
        address=identity.address,
        state=identity.state,
        latitude=identity.latitude,
        longitude=identity.longitude,
        square_footage=footage[0] if footage else None,
        sqft_source=footage[1] if footage else None,
        dc_type=identity.dc_type,
        climate_type=identity.climate_type,
        power_capacity_mw=capacity,
        capacity_provenance="reported" if capacity is not None else None,
        origin=identity.origin,
    )


def content_hash(paths: list) -> dict[str, str]:
    """SHA-256 of each input file, recorded in run metadata for audit."""
    out = {}
    for p in paths:
        h = hashlib.sha256()
        with open(p, "rb") as fh:
            for chunk in iter(lambda: fh.read(65536), b""):
                h.update(chunk)
        out[str(p)] = h.hexdigest()
    return out
