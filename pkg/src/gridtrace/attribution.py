"""Energy loads, generation-weighted attribution, and carbon intensities.

Each facility's annual load is capacity x 8760 h x uptime. Within its
balancing authority the load is apportioned to plants in proportion to their
share of annual net generation; attributed emissions follow from each plant's
emission rate. Emission sums use compensated summation (math.fsum) so national
totals around 1e14 g are independent of accumulation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .records import DataCenterRecord, HOURS_PER_YEAR, KWH_PER_MWH, PowerPlantRecord


class UnattributableBAError(Exception):
    """The balancing authority has no eligible generation to attribute against."""

    def __init__(self, ba_id: str, reason: str):
        super().__init__(f"BA {ba_id}: {reason}")
        self.ba_id = ba_id
        self.reason = reason


@dataclass
class LoadParams:
    uptime: float = 0.75
    hours_per_year: float = HOURS_PER_YEAR
    year: int = 2024

    def __post_init__(self) -> None:
        if not 0.0 < self.uptime <= 1.0:
            raise ValueError("uptime must be in (0, 1]")
        if self.hours_per_year <= 0:
            raise ValueError("hours_per_year must be positive")


@dataclass
class EgwCoefficients:
    """Per-plant generation shares of one balancing authority's pool."""

    ba_id: str
    coefficients: dict[str, float]
    pool_generation_mwh: float

    def __post_init__(self) -> None:
        for plant_id, c in self.coefficients.items():
            if not 0.0 <= c <= 1.0:
                raise ValueError(f"coefficient for {plant_id} outside [0, 1]: {c}")


@dataclass
class AttributionResult:
    dc_id: str
    plant_id: str
    ba_id: str
    load_mwh: float
    emissions_g: float
    fuel_category: str


@dataclass
class MarginalRate:
    ba_id: str
    rate_g_per_kwh: float

    def __post_init__(self) -> None:
        if self.rate_g_per_kwh < 0:
            raise ValueError("marginal rate must be non-negative")


def energy_load(capacity_mw: float, params: LoadParams) -> float:
    """Annual energy in MWh for a facility drawing its capacity at the given uptime."""
    if capacity_mw <= 0:
        raise ValueError("capacity must be positive")
    return capacity_mw * params.hours_per_year * params.uptime


def eligible_pool(plants: Iterable[PowerPlantRecord]) -> list[PowerPlantRecord]:
    """Plants that can carry load: positive annual net generation."""
    return [p for p in plants if p.annual_net_generation_mwh > 0]


def egw_coefficients(plants: Sequence[PowerPlantRecord]) -> EgwCoefficients:
    """Generation-weighted coefficients for one BA's eligible plants.

    coefficient_j = generation_j / sum(generation); the shares lie on the
    simplex by construction.
    """
    pool = eligible_pool(plants)
    ba_ids = {p.ba_id for p in plants}
    if len(ba_ids) > 1:
        raise ValueError(f"plants span multiple BAs: {sorted(ba_ids)}")
    ba_id = next(iter(ba_ids)) if ba_ids else "?"
    if not pool:
        raise UnattributableBAError(ba_id, "no plants with positive net generation")
    total = math.fsum(p.annual_net_generation_mwh for p in pool)
    if total <= 0:
        raise UnattributableBAError(ba_id, "zero total net generation")
    return EgwCoefficients(
        ba_id=ba_id,
        coefficients={p.plant_id: p.annual_net_generation_mwh / total for p in pool},
        pool_generation_mwh=total,
    )


def attribute_dc(
    dc: DataCenterRecord,
    coeffs: EgwCoefficients,
    plants: Sequence[PowerPlantRecord],
    params: LoadParams,
) -> list[AttributionResult]:
    """Apportion one facility's annual load across its BA's plants.

    Per plant: load = coefficient x facility load; emissions = load x 1000 kWh/MWh
    x rate g/kWh. Plant loads sum back to the facility load.
    """
    if dc.ba_id != coeffs.ba_id:
        raise ValueError(f"facility {dc.id} is in {dc.ba_id}, coefficients are for {coeffs.ba_id}")
    if dc.power_capacity_mw is None:
        raise ValueError(f"facility {dc.id} has no capacity (reported or imputed)")
    total_load = energy_load(dc.power_capacity_mw, params)
    by_id = {p.plant_id: p for p in plants}
    results = []
    for plant_id, coeff in coeffs.coefficients.items():
        plant = by_id[plant_id]
        load = coeff * total_load
        results.append(
            AttributionResult(
                dc_id=dc.id,
                plant_id=plant_id,
                ba_id=coeffs.ba_id,
                load_mwh=load,
                emissions_g=load * KWH_PER_MWH * plant.emission_rate_g_per_kwh,
                fuel_category=plant.fuel_category,
            )
        )
    return results


def total_load_mwh(results: Iterable[AttributionResult]) -> float:
    return math.fsum(r.load_mwh for r in results)


def total_emissions_g(results: Iterable[AttributionResult]) -> float:
    return math.fsum(r.emissions_g for r in results)


def carbon_intensity(emissions_g: float, load_mwh: float) -> Optional[float]:
    """Grams CO2e per kWh; None when the load is zero (undefined)."""
    if load_mwh <= 0:
        return None
    return emissions_g / (load_mwh * KWH_PER_MWH)


def ba_carbon_intensity(results: Sequence[AttributionResult]) -> Optional[float]:
    """Intensity of one BA's attributed mix: sum emissions over sum load."""
    return carbon_intensity(total_emissions_g(results), total_load_mwh(results))


def weighted_average_intensity(results: Sequence[AttributionResult]) -> Optional[float]:
    """National intensity weighted by attributed energy."""
    return carbon_intensity(total_emissions_g(results), total_load_mwh(results))


def fuel_mix(results: Sequence[AttributionResult]) -> dict[str, float]:
    """Share of attributed load by fuel category; shares sum to one."""
    by_fuel: dict[str, list[float]] = {}
    for r in results:
        by_fuel.setdefault(r.fuel_category, []).append(r.load_mwh)
    total = math.fsum(load for loads in by_fuel.values() for load in loads)
    if total <= 0:
        raise ValueError("cannot compute fuel mix of zero load")
    return {fuel: math.fsum(loads) / total for fuel, loads in sorted(by_fuel.items())}


def consequential_emissions(load_mwh: float, rate: MarginalRate) -> float:
    """Emissions under marginal-rate accounting: load x 1000 x rate."""
    return load_mwh * KWH_PER_MWH * rate.rate_g_per_kwh


@dataclass
class AttributionRun:
    """Corpus-wide attribution output."""

    results: list[AttributionResult]
    coefficients: dict[str, EgwCoefficients]
    params: LoadParams
    unattributable: dict[str, list[str]] = field(default_factory=dict)  # ba_id -> dc ids
    skipped_no_capacity: list[str] = field(default_factory=list)
    # loads of every facility that has a capacity, attributable or not
    facility_loads_mwh: dict[str, float] = field(default_factory=dict)

    @property
    def attributed_load_mwh(self) -> float:
        return total_load_mwh(self.results)

    @property
    def attributed_emissions_g(self) -> float:
        return total_emissions_g(self.results)

    @property
    def total_energy_mwh(self) -> float:
        """Energy of all facilities with capacity, including unattributable BAs."""
        return math.fsum(self.facility_loads_mwh.values())


def attribute_all(
    facilities: Sequence[DataCenterRecord],
    plants: Sequence[PowerPlantRecord],
    params: LoadParams,
) -> AttributionRun:
    """Attribute every facility with a capacity and a BA assignment.

    Facilities in BAs with no eligible generation are kept in energy totals
    but listed separately from emission totals.
    """
    plants_by_ba: dict[str, list[PowerPlantRecord]] = {}
    for p in plants:
        plants_by_ba.setdefault(p.ba_id, []).append(p)

    coefficients: dict[str, EgwCoefficients] = {}
    unattributable: dict[str, list[str]] = {}
    for ba_id, ba_plants in sorted(plants_by_ba.items()):
        try:
            coefficients[ba_id] = egw_coefficients(ba_plants)
        except UnattributableBAError:
            unattributable[ba_id] = []

    run = AttributionRun(results=[], coefficients=coefficients, params=params,
                         unattributable=unattributable)
    for dc in facilities:
        if dc.power_capacity_mw is None:
            run.skipped_no_capacity.append(dc.id)
            continue
        run.facility_loads_mwh[dc.id] = energy_load(dc.power_capacity_mw, params)
        if dc.ba_id is None or dc.ba_id not in plants_by_ba:
            run.unattributable.setdefault(dc.ba_id or "unassigned", []).append(dc.id)
            continue
        if dc.ba_id not in coefficients:
            run.unattributable[dc.ba_id].append(dc.id)
            continue
        run.results.extend(
            attribute_dc(dc, coefficients[dc.ba_id], plants_by_ba[dc.ba_id], params)
        )
    return run


@dataclass
class ConsequentialTotals:
    emissions_g: float
    covered_load_mwh: float
    facilities_covered: int
    facilities_missing_rate: list[str]


def consequential_totals(
    run: AttributionRun,
    rates: dict[str, MarginalRate],
    facilities: Sequence[DataCenterRecord],
) -> ConsequentialTotals:
    """Total emissions under marginal rates; facilities without a BA rate are
    excluded and counted."""
    by_id = {dc.id: dc for dc in facilities}
    covered: list[float] = []
    loads: list[float] = []
    missing: list[str] = []
    for dc_id, load in sorted(run.facility_loads_mwh.items()):
        dc = by_id[dc_id]
        rate = rates.get(dc.ba_id) if dc.ba_id else None
        if rate is None:
            missing.append(dc_id)
            continue
        covered.append(consequential_emissions(load, rate))
        loads.append(load)
    return ConsequentialTotals(
        emissions_g=math.fsum(covered),
        covered_load_mwh=math.fsum(loads),
        facilities_covered=len(covered),
        facilities_missing_rate=missing,
    )
