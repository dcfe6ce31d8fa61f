from __future__ import annotations

import io
import json
from pathlib import Path

import pytest

from gridtrace import cli
from gridtrace.synth import demo_corpus


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if "test_acceptance" not in report.nodeid or report.when != "call":
        return
    name = report.nodeid.split("::")[-1]
    outcome = "PASS" if report.passed else "FAIL"
    print(f"\n[ACCEPTANCE] {name}: {outcome}", flush=True)

DC_HEADER = (
    "id,provider,address,state,latitude,longitude,square_footage,sqft_source,"
    "dc_type,climate_type,power_capacity_mw"
)
PLANT_HEADER = (
    "plant_id,latitude,longitude,ba_id,fuel_category,annual_net_generation_mwh,"
    "emission_rate,emission_rate_unit,nameplate_capacity_mw"
)


def dc_csv(rows: list[str]) -> io.StringIO:
    return io.StringIO("\n".join([DC_HEADER, *rows]) + "\n")


def dc_row(
    id="DC1",
    provider="Acme",
    address="1 Main St",
    state="VA",
    lat=38.9,
    lon=-77.3,
    sqft="",
    sqft_source="",
    dc_type="other",
    climate="Cfa",
    capacity="",
) -> str:
    return f"{id},{provider},{address},{state},{lat},{lon},{sqft},{sqft_source},{dc_type},{climate},{capacity}"


def plant_csv(rows: list[str]) -> io.StringIO:
    return io.StringIO("\n".join([PLANT_HEADER, *rows]) + "\n")


def plant_row(
    id="P1",
    lat=38.0,
    lon=-78.0,
    ba="PJM",
    fuel="natural_gas",
    generation="100000",
    rate="450",
    unit="g_per_kwh",
    nameplate="100",
) -> str:
    return f"{id},{lat},{lon},{ba},{fuel},{generation},{rate},{unit},{nameplate}"


@pytest.fixture(scope="session")
def demo_pipeline(tmp_path_factory) -> Path:
    """Run the demo corpus through the full CLI once; yields the output dir."""
    tmp = tmp_path_factory.mktemp("demo")
    files = demo_corpus().write(tmp / "inputs")
    config = {
        "data_centers": [{"path": files["data_centers"], "source_tag": "baxtel"}],
        "power_plants": files["power_plants"],
        "regions": files["regions"],
        "benchmarks": files["benchmarks"],
        "marginal_rates": files["marginal_rates"],
        "uptime": 0.75,
        "gbrt": {"n_trees": 50, "max_depth": 2, "min_samples_leaf": 1, "seed": 11},
        "out": str(tmp / "out"),
    }
    cfg_path = tmp / "config.json"
    cfg_path.write_text(json.dumps(config))
    for cmd in ("ingest", "impute", "attribute", "report"):
        rc = cli.main([cmd, "--config", str(cfg_path)])
        assert rc == 0, f"{cmd} exited {rc}"
    return tmp / "out"
