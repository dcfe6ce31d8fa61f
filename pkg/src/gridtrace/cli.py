"""Batch driver: ingest -> impute -> attribute -> report -> serve.

Every stage writes deterministic artifacts into the output directory and
refreshes run.json with the echoed config, input content hashes, and package
version, so identical inputs and config reproduce identical bytes.

Exit codes: 0 success, 1 validation produced no usable output, 2 fatal
(missing inputs, bad configuration, unusable environment).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .attribution import (
    AttributionRun,
    LoadParams,
    MarginalRate,
    attribute_all,
    consequential_totals,
    weighted_average_intensity,
)
from .gbrt import Hyperparameters
from .geo import RegionConfigError, assign_ba, load_regions_geojson
from .impute import DEFAULT_CAPACITY_FLOOR_MW, DEFAULT_TEST_FRACTION, impute_missing
from .ingest import (
    DEFAULT_DEDUP_RADIUS_M,
    DEFAULT_PLANT_MIN_NAMEPLATE_MW,
    IngestError,
    content_hash,
    dedup_facilities,
    parse_data_centers,
    parse_power_plants,
)
from .records import DataCenterRecord, PowerPlantRecord
from .report import (
    LEVELS,
    RollupReport,
    RollupRow,
    compare_benchmarks,
    export,
    parse_benchmarks,
    rank,
    rollup,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_FATAL = 2


class ConfigError(Exception):
    pass


class RunConfig:
    """Pipeline configuration: a JSON file plus flag overrides."""

    def __init__(self, raw: dict, base_dir: Path):
        self.raw = raw
        self.base_dir = base_dir
        dcs = raw.get("data_centers")
        if dcs is None:
            raise ConfigError("config missing 'data_centers'")
        if isinstance(dcs, str):
            dcs = [{"path": dcs, "source_tag": "baxtel"}]
        self.data_centers = [
            (self._path(d["path"]), d.get("source_tag", "baxtel")) for d in dcs
        ]
        if "power_plants" not in raw:
            raise ConfigError("config missing 'power_plants'")
        self.power_plants = self._path(raw["power_plants"])
        if "regions" not in raw:
            raise ConfigError("config missing 'regions'")
        self.regions = self._path(raw["regions"])
        self.benchmarks = self._path(raw["benchmarks"]) if raw.get("benchmarks") else None
        self.marginal_rates = (
            self._path(raw["marginal_rates"]) if raw.get("marginal_rates") else None
        )
        self.uptime = float(raw.get("uptime", 0.75))
        self.year = int(raw.get("year", 2024))
        self.dedup_radius_m = float(raw.get("dedup_radius_m", DEFAULT_DEDUP_RADIUS_M))
        self.plant_min_nameplate_mw = float(
            raw.get("plant_min_nameplate_mw", DEFAULT_PLANT_MIN_NAMEPLATE_MW)
        )
        self.capacity_floor_mw = float(raw.get("capacity_floor_mw", DEFAULT_CAPACITY_FLOOR_MW))
        self.test_fraction = float(raw.get("test_fraction", DEFAULT_TEST_FRACTION))
        gbrt_raw = dict(raw.get("gbrt", {}))
        if "seed" in raw and "seed" not in gbrt_raw:
            gbrt_raw["seed"] = int(raw["seed"])
        try:
            self.gbrt = Hyperparameters(**gbrt_raw)
            self.gbrt.validate()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad GBRT hyperparameters: {exc}")
        self.out = Path(raw.get("out", "out"))
        if not self.out.is_absolute():
            self.out = base_dir / self.out
        try:
            LoadParams(uptime=self.uptime, year=self.year)
        except ValueError as exc:
            raise ConfigError(str(exc))

    def _path(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else self.base_dir / path

    @property
    def params(self) -> LoadParams:
        return LoadParams(uptime=self.uptime, year=self.year)

    def input_paths(self) -> list[Path]:
        paths = [p for p, _ in self.data_centers] + [self.power_plants, self.regions]
        if self.benchmarks:
            paths.append(self.benchmarks)
        if self.marginal_rates:
            paths.append(self.marginal_rates)
        return paths

    @classmethod
    def load(cls, path: str, overrides: Optional[dict] = None) -> "RunConfig":
        p = Path(path)
        if not p.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        raw = json.loads(p.read_text())
        for key, value in (overrides or {}).items():
            if value is not None:
                raw[key] = value
        return cls(raw, p.parent.resolve())


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _write_run_metadata(config: RunConfig, stage: str) -> None:
    config.out.mkdir(parents=True, exist_ok=True)
    run_path = config.out / "run.json"
    stages = []
    if run_path.exists():
        stages = json.loads(run_path.read_text()).get("stages_completed", [])
    if stage not in stages:
        stages.append(stage)
    _write_json(
        run_path,
        {
            "package_version": __version__,
            "config": config.raw,
            "input_hashes": content_hash([str(p) for p in config.input_paths()]),
            "stages_completed": stages,
        },
    )


def _parse_marginal_rates(path: Path) -> dict[str, float]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"ba_id", "rate_g_per_kwh"}.issubset(
            reader.fieldnames
        ):
            raise IngestError("marginal-rate file must have columns ba_id,rate_g_per_kwh")
        return {row["ba_id"].strip(): float(row["rate_g_per_kwh"]) for row in reader}


def _load_dataset(config: RunConfig) -> tuple[list[DataCenterRecord], list[PowerPlantRecord], dict]:
    path = config.out / "dataset.json"
    if not path.exists():
        raise FileNotFoundError(f"dataset artifact not found: {path}; run 'ingest' first")
    doc = json.loads(path.read_text())
    facilities = [DataCenterRecord.from_dict(r) for r in doc["facilities"]]
    plants = [PowerPlantRecord.from_dict(r) for r in doc["plants"]]
    return facilities, plants, doc


def cmd_ingest(config: RunConfig) -> int:
    config.out.mkdir(parents=True, exist_ok=True)
    regions = load_regions_geojson(config.regions.read_text())

    facilities: list[DataCenterRecord] = []
    reports = []
    for path, tag in config.data_centers:
        with open(path, newline="", encoding="utf-8") as fh:
            recs, rep = parse_data_centers(fh, source_tag=tag)
        facilities.extend(recs)
        reports.append({"source": str(path), "source_tag": tag, **rep.to_dict()})
    facilities, dedup_report = dedup_facilities(facilities, config.dedup_radius_m)

    with open(config.power_plants, newline="", encoding="utf-8") as fh:
        plants, plant_report = parse_power_plants(fh, config.plant_min_nameplate_mw)
    plants.sort(key=lambda p: p.plant_id)

    for f in facilities:
        assignment = assign_ba((f.longitude, f.latitude), regions)
        f.ba_id = assignment.ba_id
        f.ba_flag = assignment.flag

    marginal_rates = (
        _parse_marginal_rates(config.marginal_rates) if config.marginal_rates else {}
    )

    dataset = {
        "facilities": [f.to_dict() for f in facilities],
        "plants": [p.to_dict() for p in plants],
        "params": {"uptime": config.uptime, "hours_per_year": 8760.0, "year": config.year},
        "marginal_rates": marginal_rates,
        "package_version": __version__,
    }
    _write_json(config.out / "dataset.json", dataset)
    (config.out / "regions.geojson").write_text(config.regions.read_text())
    _write_json(
        config.out / "ingest_report.json",
        {
            "data_centers": reports,
            "dedup": dedup_report.to_dict(),
            "power_plants": {"source": str(config.power_plants), **plant_report.to_dict()},
        },
    )
    _write_run_metadata(config, "ingest")

    read_any = any(r["records_read"] > 0 for r in reports)
    if read_any and not facilities:
        logger.error("every facility row was rejected or filtered")
        return EXIT_VALIDATION
    logger.info("ingested %d facilities, %d plants", len(facilities), len(plants))
    return EXIT_OK


def cmd_impute(config: RunConfig) -> int:
    facilities, plants, doc = _load_dataset(config)
    missing = [f for f in facilities if f.power_capacity_mw is None]
    if not missing:
        _write_json(
            config.out / "impute_report.json",
            {"n_imputed": 0, "skipped": [], "eval": None,
             "hyperparameters": config.gbrt.to_dict(), "note": "no missing capacities"},
        )
        _write_run_metadata(config, "impute")
        return EXIT_OK

    result = impute_missing(
        facilities,
        hyperparameters=config.gbrt,
        test_fraction=config.test_fraction,
        floor_mw=config.capacity_floor_mw,
    )
    doc["facilities"] = [f.to_dict() for f in result.records]
    _write_json(config.out / "dataset.json", doc)
    _write_json(
        config.out / "model.json",
        {
            "model": result.model.to_dict(),
            "preprocessor": result.preprocessor.to_dict(),
            "eval": result.eval_report.to_dict(),
            "floor_mw": config.capacity_floor_mw,
            "gain_importances": result.model.gain_importances(),
        },
    )
    _write_json(
        config.out / "impute_report.json",
        {
            "n_imputed": result.n_imputed,
            "skipped": result.skipped_ids,
            "eval": result.eval_report.to_dict(),
            "hyperparameters": config.gbrt.to_dict(),
        },
    )
    _write_run_metadata(config, "impute")
    logger.info("imputed %d capacities (R^2=%s)", result.n_imputed,
                result.eval_report.r_squared)
    return EXIT_OK


def _attribution_csv(run: AttributionRun) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["dc_id", "plant_id", "ba_id", "fuel_category", "load_mwh", "emissions_g"])
    for r in sorted(run.results, key=lambda r: (r.dc_id, r.plant_id)):
        writer.writerow([r.dc_id, r.plant_id, r.ba_id, r.fuel_category,
                         repr(r.load_mwh), repr(r.emissions_g)])
    return buf.getvalue()


def cmd_attribute(config: RunConfig) -> int:
    facilities, plants, doc = _load_dataset(config)
    run = attribute_all(facilities, plants, config.params)

    (config.out / "attribution.csv").write_text(_attribution_csv(run))
    rollups = {}
    for level in LEVELS:
        report = rollup(run, facilities, level)
        rollups[level] = json.loads(export(report, "json"))
    _write_json(config.out / "rollups.json", rollups)

    summary = {
        "total_energy_twh": run.total_energy_mwh / 1e6,
        "attributed_load_twh": run.attributed_load_mwh / 1e6,
        "attributed_emissions_mt": run.attributed_emissions_g / 1e12,
        "weighted_intensity_g_per_kwh": weighted_average_intensity(run.results),
        "unattributable": run.unattributable,
        "skipped_no_capacity": run.skipped_no_capacity,
        "n_facilities": len(facilities),
        "n_plants": len(plants),
        "uptime": config.params.uptime,
        "year": config.params.year,
    }
    rates = {
        ba: MarginalRate(ba_id=ba, rate_g_per_kwh=rate)
        for ba, rate in doc.get("marginal_rates", {}).items()
    }
    if rates:
        cons = consequential_totals(run, rates, facilities)
        summary["consequential"] = {
            "emissions_mt": cons.emissions_g / 1e12,
            "covered_load_twh": cons.covered_load_mwh / 1e6,
            "facilities_covered": cons.facilities_covered,
            "facilities_missing_rate": cons.facilities_missing_rate,
        }
    _write_json(config.out / "summary.json", summary)
    _write_run_metadata(config, "attribute")
    if run.unattributable:
        for ba, dcs in sorted(run.unattributable.items()):
            logger.warning("BA %s unattributable (%d facilities affected)", ba, len(dcs))
    return EXIT_OK


def cmd_report(config: RunConfig) -> int:
    rollups_path = config.out / "rollups.json"
    if not rollups_path.exists():
        raise FileNotFoundError(f"rollups artifact not found: {rollups_path}; run 'attribute' first")
    rollups = json.loads(rollups_path.read_text())

    for level in LEVELS:
        rows = [
            RollupRow(
                key=r["key"],
                n_data_centers=r["n_data_centers"],
                total_capacity_mw=r["total_capacity_mw"],
                energy_twh=r["energy_twh"],
                emissions_mt=r["emissions_mt"],
                intensity_g_per_kwh=r["intensity_g_per_kwh"],
                fuel_mix=r["fuel_mix"],
            )
            for r in rollups[level]["rows"]
        ]
        report = RollupReport(level=level, rows=rows)
        ranked = RollupReport(level=level, rows=rank(report, "emissions", len(rows)))
        (config.out / f"report_{level}.csv").write_bytes(export(ranked, "csv"))

    if config.benchmarks:
        with open(config.benchmarks, newline="", encoding="utf-8") as fh:
            benchmarks = parse_benchmarks(fh)
        national_rows = rollups["national"]["rows"]
        subject = national_rows[0]["intensity_g_per_kwh"] if national_rows else None
        comparisons = []
        if subject is not None:
            comparisons = [
                {
                    "country": c.country,
                    "country_intensity_g_per_kwh": c.country_intensity_g_per_kwh,
                    "subject_intensity_g_per_kwh": c.subject_intensity_g_per_kwh,
                    "pct_difference": None if c.pct_difference is None else round(c.pct_difference, 1),
                }
                for c in compare_benchmarks(subject, benchmarks)
            ]
        _write_json(config.out / "benchmark_comparison.json", comparisons)
    _write_run_metadata(config, "report")
    return EXIT_OK


def cmd_serve(config: RunConfig, port: Optional[int] = None) -> int:
    import uvicorn

    from .service import ArtifactBundle, ServiceConfig, create_app

    service_config = ServiceConfig.load()
    service_config.artifact_dir = str(config.out)
    if port is not None:
        service_config.port = port
    bundle = ArtifactBundle.load(str(config.out))
    app = create_app(bundle, service_config)
    try:
        uvicorn.run(app, host="127.0.0.1", port=service_config.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        raise ConfigError(f"server failed to start: {exc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridtrace",
        description="Data-center electricity and CO2e attribution pipeline",
    )
    parser.add_argument("command", choices=["ingest", "impute", "attribute", "report", "serve"])
    parser.add_argument("--config", required=True, help="path to the run-config JSON file")
    parser.add_argument("--uptime", type=float, default=None, help="override uptime in (0,1]")
    parser.add_argument("--seed", type=int, default=None, help="override the model seed")
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument("--port", type=int, default=None, help="port for 'serve'")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig.load(
            args.config,
            overrides={"uptime": args.uptime, "seed": args.seed, "out": args.out},
        )
        missing = [str(p) for p in config.input_paths() if not p.exists()]
        if missing:
            raise FileNotFoundError(f"missing input file(s): {', '.join(missing)}")
        if args.command == "ingest":
            return cmd_ingest(config)
        if args.command == "impute":
            return cmd_impute(config)
        if args.command == "attribute":
            return cmd_attribute(config)
        if args.command == "report":
            return cmd_report(config)
        return cmd_serve(config, port=args.port)
    except (ConfigError, FileNotFoundError, IngestError, RegionConfigError,
            ValueError, json.JSONDecodeError) as exc:
        logger.error("fatal: %s", exc)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
