"""HTTP API over a precomputed artifact bundle plus on-the-fly siting scenarios.

The corpus is never recomputed at request time: rollups and attribution come
from the artifact directory written by the batch pipeline, and only scenario
requests (a single hypothetical facility) compute fresh numbers, via the same
library code paths the pipeline uses.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, model_validator

from . import __version__
from .attribution import (
    AttributionResult,
    EgwCoefficients,
    LoadParams,
    MarginalRate,
    UnattributableBAError,
    ba_carbon_intensity,
    attribute_dc,
    egw_coefficients,
    energy_load,
    fuel_mix,
)
from .gbrt import GbrtModel
from .geo import BARegion, assign_ba, load_regions_geojson, regions_to_geojson
from .impute import DEFAULT_CAPACITY_FLOOR_MW, FeatureVector, Preprocessor, predict_capacity
from .records import DataCenterRecord, PowerPlantRecord

SCENARIO_TOP_N = 5


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class ServiceConfig:
    port: int = 8080
    artifact_dir: str = "out"
    default_uptime: Optional[float] = None  # None: use the pipeline's params
    cors_origins: list[str] = field(default_factory=list)
    fallback_assignment: bool = True

    @classmethod
    def load(cls, path: Optional[str] = None, env: Optional[dict] = None) -> "ServiceConfig":
        """File config with environment overrides (GRIDTRACE_*)."""
        cfg = cls()
        if path:
            with open(path) as fh:
                raw = json.load(fh)
            for key in ("port", "artifact_dir", "default_uptime", "cors_origins",
                        "fallback_assignment"):
                if key in raw:
                    setattr(cfg, key, raw[key])
        env = env if env is not None else dict(os.environ)
        if "GRIDTRACE_PORT" in env:
            cfg.port = int(env["GRIDTRACE_PORT"])
        if "GRIDTRACE_ARTIFACTS" in env:
            cfg.artifact_dir = env["GRIDTRACE_ARTIFACTS"]
        if "GRIDTRACE_UPTIME" in env:
            cfg.default_uptime = float(env["GRIDTRACE_UPTIME"])
        if "GRIDTRACE_CORS_ORIGINS" in env:
            cfg.cors_origins = [o for o in env["GRIDTRACE_CORS_ORIGINS"].split(",") if o]
        return cfg


@dataclass
class ArtifactBundle:
    """Immutable pipeline outputs loaded once at startup."""

    facilities: list[DataCenterRecord]
    plants: list[PowerPlantRecord]
    regions: list[BARegion]
    params: LoadParams
    rollups: dict[str, dict]
    results: list[AttributionResult]
    coefficients: dict[str, EgwCoefficients]
    plants_by_ba: dict[str, list[PowerPlantRecord]]
    marginal_rates: dict[str, MarginalRate]
    unattributable: dict[str, list[str]]
    model: Optional[GbrtModel] = None
    preprocessor: Optional[Preprocessor] = None
    capacity_floor_mw: float = DEFAULT_CAPACITY_FLOOR_MW
    content_hash: str = ""

    @classmethod
    def load(cls, artifact_dir: str) -> "ArtifactBundle":
        d = Path(artifact_dir)
        hasher = hashlib.sha256()

        def read(name: str) -> bytes:
            data = (d / name).read_bytes()
            hasher.update(name.encode())
            hasher.update(data)
            return data

        dataset = json.loads(read("dataset.json"))
        facilities = [DataCenterRecord.from_dict(r) for r in dataset["facilities"]]
        plants = [PowerPlantRecord.from_dict(r) for r in dataset["plants"]]
        params = LoadParams(**dataset["params"])
        marginal_rates = {
            ba: MarginalRate(ba_id=ba, rate_g_per_kwh=rate)
            for ba, rate in dataset.get("marginal_rates", {}).items()
        }
        regions = load_regions_geojson(read("regions.geojson").decode())
        rollups = json.loads(read("rollups.json"))
        summary = json.loads(read("summary.json"))

        results = []
        reader = csv.DictReader(io.StringIO(read("attribution.csv").decode()))
        for row in reader:
            results.append(
                AttributionResult(
                    dc_id=row["dc_id"],
                    plant_id=row["plant_id"],
                    ba_id=row["ba_id"],
                    fuel_category=row["fuel_category"],
                    load_mwh=float(row["load_mwh"]),
                    emissions_g=float(row["emissions_g"]),
                )
            )

        model = preprocessor = None
        floor = DEFAULT_CAPACITY_FLOOR_MW
        if (d / "model.json").exists():
            doc = json.loads(read("model.json"))
            model = GbrtModel.from_dict(doc["model"])
            preprocessor = Preprocessor.from_dict(doc["preprocessor"])
            floor = doc.get("floor_mw", DEFAULT_CAPACITY_FLOOR_MW)

        plants_by_ba: dict[str, list[PowerPlantRecord]] = {}
        for p in plants:
            plants_by_ba.setdefault(p.ba_id, []).append(p)
        coefficients = {}
        for ba_id, ba_plants in sorted(plants_by_ba.items()):
            try:
                coefficients[ba_id] = egw_coefficients(ba_plants)
            except UnattributableBAError:
                pass

        return cls(
            facilities=facilities,
            plants=plants,
            regions=regions,
            params=params,
            rollups=rollups,
            results=results,
            coefficients=coefficients,
            plants_by_ba=plants_by_ba,
            marginal_rates=marginal_rates,
            unattributable=summary.get("unattributable", {}),
            model=model,
            preprocessor=preprocessor,
            capacity_floor_mw=floor,
            content_hash=hasher.hexdigest(),
        )


class ScenarioRequest(BaseModel):
    latitude: float = Field(ge=-90, le=90)
    longitude: float = Field(ge=-180, le=180)
    power_capacity_mw: Optional[float] = Field(default=None, gt=0)
    square_footage: Optional[float] = Field(default=None, gt=0)
    dc_type: Optional[str] = None
    climate_type: Optional[str] = None
    uptime: Optional[float] = Field(default=None, gt=0, le=1)
    accounting: str = "attributional"

    @model_validator(mode="after")
    def _exactly_one_sizing(self) -> "ScenarioRequest":
        has_capacity = self.power_capacity_mw is not None
        has_features = self.square_footage is not None
        if has_capacity == has_features:
            raise ValueError(
                "provide exactly one of power_capacity_mw or square_footage(+dc_type, climate_type)"
            )
        if has_features and (self.dc_type is None or self.climate_type is None):
            raise ValueError("footage-based requests need dc_type and climate_type")
        if self.accounting not in ("attributional", "consequential"):
            raise ValueError("accounting must be attributional or consequential")
        return self


def _json_bytes(payload: dict) -> bytes:
    return (json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n").encode()


def create_app(bundle: Optional[ArtifactBundle], config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="gridtrace", version=__version__, docs_url=None, redoc_url=None)
    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=config.cors_origins,
            allow_methods=["GET", "POST"],
            allow_headers=["*"],
        )

    @app.exception_handler(ServiceError)
    async def _service_error(_req: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content={"code": "invalid_request", "message": str(exc.errors())})

    def require_bundle() -> ArtifactBundle:
        if bundle is None:
            raise ServiceError(503, "artifacts_unavailable", "pipeline artifacts not loaded")
        return bundle

    def etagged(request: Request, body: bytes) -> Response:
        b = require_bundle()
        etag = '"' + hashlib.sha256((b.content_hash + "|").encode() + body).hexdigest() + '"'
        if request.headers.get("if-none-match") == etag:
            return Response(status_code=304, headers={"ETag": etag})
        return Response(content=body, media_type="application/json",
                        headers={"ETag": etag})

    @app.get("/v1/rollup")
    def get_rollup(request: Request, level: str = "national"):
        b = require_bundle()
        if level not in b.rollups:
            raise ServiceError(400, "unknown_level",
                               f"level must be one of {sorted(b.rollups)}")
        return etagged(request, _json_bytes(b.rollups[level]))

    @app.get("/v1/ba/{ba_id}")
    def get_ba(request: Request, ba_id: str):
        b = require_bundle()
        return etagged(request, _json_bytes(_ba_detail(b, ba_id)))

    @app.get("/v1/geo/regions")
    def get_regions(request: Request):
        b = require_bundle()
        ba_rows = {row["key"]: row for row in b.rollups["ba"]["rows"]}
        properties = {}
        for region in b.regions:
            row = ba_rows.get(region.ba_id)
            properties[region.ba_id] = {
                "intensity_g_per_kwh": row["intensity_g_per_kwh"] if row else None,
                "energy_twh": row["energy_twh"] if row else 0.0,
                "emissions_mt": row["emissions_mt"] if row else 0.0,
                "n_data_centers": row["n_data_centers"] if row else 0,
                "unattributable": region.ba_id in b.unattributable,
            }
        return etagged(request, _json_bytes(regions_to_geojson(b.regions, properties)))

    @app.post("/v1/scenario")
    def post_scenario(req: ScenarioRequest):
        b = require_bundle()
        payload = run_scenario(b, req, config)
        return Response(content=_json_bytes(payload), media_type="application/json")

    return app


def _ba_detail(b: ArtifactBundle, ba_id: str) -> dict:
    ba_rows = {row["key"]: row for row in b.rollups["ba"]["rows"]}
    known = set(b.plants_by_ba) | {r.ba_id for r in b.regions} | set(ba_rows)
    if ba_id not in known:
        raise ServiceError(404, "unknown_ba", f"no balancing authority {ba_id!r}")
    row = ba_rows.get(ba_id)
    coeffs = b.coefficients.get(ba_id)
    plants = []
    for p in sorted(b.plants_by_ba.get(ba_id, []), key=lambda p: p.plant_id):
        plants.append(
            {
                "plant_id": p.plant_id,
                "fuel_category": p.fuel_category,
                "annual_net_generation_mwh": p.annual_net_generation_mwh,
                "emission_rate_g_per_kwh": p.emission_rate_g_per_kwh,
                "coefficient": coeffs.coefficients.get(p.plant_id) if coeffs else None,
            }
        )
    unattributable = ba_id not in b.coefficients
    return {
        "ba_id": ba_id,
        "intensity_g_per_kwh": row["intensity_g_per_kwh"] if row else None,
        "fuel_mix": row["fuel_mix"] if row else {},
        "energy_twh": row["energy_twh"] if row else 0.0,
        "emissions_mt": row["emissions_mt"] if row else 0.0,
        "n_data_centers": row["n_data_centers"] if row else 0,
        "plants": plants,
        "flags": {"unattributable": unattributable},
    }


def run_scenario(b: ArtifactBundle, req: ScenarioRequest, config: ServiceConfig) -> dict:
    """Geo-assign, optionally impute, and attribute one hypothetical facility."""
    assignment = assign_ba((req.longitude, req.latitude), b.regions)
    if assignment.flag == "fallback" and not config.fallback_assignment:
        raise ServiceError(422, "outside_regions",
                           "point lies outside every balancing-authority region")
    flags = [assignment.flag] if assignment.flag else []

    capacity = req.power_capacity_mw
    provenance = "reported"
    if capacity is None:
        if b.model is None or b.preprocessor is None:
            raise ServiceError(422, "no_model",
                               "no capacity model in artifacts; supply power_capacity_mw")
        fv = FeatureVector(
            square_footage=req.square_footage,
            climate_type=req.climate_type,
            ba_id=assignment.ba_id,
            dc_type=req.dc_type,
        )
        capacity = predict_capacity(b.model, b.preprocessor, fv, b.capacity_floor_mw)
        provenance = "imputed"

    uptime = req.uptime
    if uptime is None:
        uptime = config.default_uptime if config.default_uptime is not None else b.params.uptime
    params = LoadParams(uptime=uptime, hours_per_year=b.params.hours_per_year,
                        year=b.params.year)
    load = energy_load(capacity, params)

    coeffs = b.coefficients.get(assignment.ba_id)
    if coeffs is None:
        flags.append("unattributable")
        per_plant: list[AttributionResult] = []
    else:
        dc = DataCenterRecord(
            id="scenario", provider="", address="", state="",
            latitude=req.latitude, longitude=req.longitude,
            power_capacity_mw=capacity, ba_id=assignment.ba_id,
        )
        per_plant = attribute_dc(dc, coeffs, b.plants_by_ba[assignment.ba_id], params)

    if req.accounting == "consequential":
        rate = b.marginal_rates.get(assignment.ba_id)
        if rate is None:
            raise ServiceError(422, "missing_marginal_rate",
                               f"no marginal emission rate for BA {assignment.ba_id}")
        emissions = load * 1000.0 * rate.rate_g_per_kwh
        intensity = rate.rate_g_per_kwh
    else:
        emissions = math.fsum(r.emissions_g for r in per_plant) if per_plant else None
        intensity = ba_carbon_intensity(per_plant) if per_plant else None

    top = sorted(per_plant, key=lambda r: (-r.load_mwh, r.plant_id))[:SCENARIO_TOP_N]
    return {
        "ba_id": assignment.ba_id,
        "power_capacity_mw": capacity,
        "capacity_provenance": provenance,
        "uptime": uptime,
        "energy_mwh": load,
        "emissions_g": emissions,
        "intensity_g_per_kwh": intensity,
        "accounting": req.accounting,
        "fuel_mix": fuel_mix(per_plant) if per_plant else {},
        "per_plant": [
            {
                "plant_id": r.plant_id,
                "fuel_category": r.fuel_category,
                "load_mwh": r.load_mwh,
                "emissions_g": r.emissions_g,
            }
            for r in top
        ],
        "flags": flags,
    }
