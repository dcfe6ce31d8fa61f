"""Canonical record types shared across the pipeline."""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional

HOURS_PER_YEAR = 8760.0
GRAMS_PER_POUND = 453.59237
KWH_PER_MWH = 1000.0

FUEL_CATEGORIES = (
    "coal",
    "natural_gas",
    "oil",
    "nuclear",
    "hydro",
    "wind",
    "solar",
    "geothermal",
    "biomass",
    "other",
)

FOSSIL_FUELS = ("coal", "natural_gas", "oil")
RENEWABLE_FUELS = ("hydro", "wind", "solar", "geothermal", "biomass")

SQFT_SOURCES = ("baxtel", "scraped", "osm")
# Higher value wins when merging footage candidates.
SQFT_SOURCE_PRIORITY = {"baxtel": 2, "scraped": 1, "osm": 0}

DC_TYPES = ("hyperscale", "other")

# Lower-48 states plus DC. AK, HI, and territories are out of scope.
CONTIGUOUS_STATES = frozenset(
    "AL AZ AR CA CO CT DE DC FL GA ID IL IN IA KS KY LA ME MD MA MI MN MS MO "
    "MT NE NV NH NJ NM NY NC ND OH OK OR PA RI SC SD TN TX UT VT VA WA WV WI WY".split()
)

# Coarse bounding box of the contiguous US, used as a plausibility check of
# coordinates against a lower-48 state code.
CONTIGUOUS_BBOX = (-125.0, 24.3, -66.9, 49.4)  # (lon_min, lat_min, lon_max, lat_max)


def lb_per_mwh_to_g_per_kwh(rate: float) -> float:
    """Convert an emission rate in lb CO2e / MWh to g CO2e / kWh."""
    return rate * GRAMS_PER_POUND / KWH_PER_MWH


def g_per_kwh_to_lb_per_mwh(rate: float) -> float:
    return rate * KWH_PER_MWH / GRAMS_PER_POUND


@dataclass
class DataCenterRecord:
    """One data-center facility after ingestion."""

    id: str
    provider: str
    address: str
    state: str
    latitude: float
    longitude: float
    square_footage: Optional[float] = None
    sqft_source: Optional[str] = None
    dc_type: str = "other"
    climate_type: str = ""
    power_capacity_mw: Optional[float] = None
    capacity_provenance: Optional[str] = None  # "reported" | "imputed"
    ba_id: Optional[str] = None
    ba_flag: Optional[str] = None  # None | "ambiguous" | "fallback"
    origin: str = "baxtel"  # which source file the surviving identity came from

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DataCenterRecord":
        return cls(**d)


@dataclass
class PowerPlantRecord:
    """One power plant with its annual generation and emission rate."""

    plant_id: str
    latitude: float
    longitude: float
    ba_id: str
    fuel_category: str
    annual_net_generation_mwh: float
    emission_rate_g_per_kwh: float
    nameplate_capacity_mw: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PowerPlantRecord":
        return cls(**d)


@dataclass
class IngestReport:
    """Bookkeeping for one ingestion pass.

    Invariant: records_read == accepted + records_rejected + duplicates_merged.
    """

    records_read: int = 0
    records_rejected: int = 0
    duplicates_merged: int = 0
    rejection_reasons: list[tuple[int, str]] = field(default_factory=list)

    @property
    def accepted(self) -> int:
        return self.records_read - self.records_rejected - self.duplicates_merged

    def reject(self, row: int, reason: str) -> None:
        self.records_rejected += 1
        self.rejection_reasons.append((row, reason))

    def to_dict(self) -> dict:
        return {
            "records_read": self.records_read,
            "records_rejected": self.records_rejected,
            "duplicates_merged": self.duplicates_merged,
            "accepted": self.accepted,
            "rejection_reasons": [list(r) for r in self.rejection_reasons],
        }


class IngestError(Exception):
    """Fatal ingestion problem (missing mandatory column, unreadable stream)."""
