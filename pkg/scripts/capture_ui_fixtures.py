"""Regenerate frontend test fixtures from the real service.

Runs the demo corpus through the batch pipeline, stands the API up in-process,
and saves the exact response bytes the UI tests replay through their fetch
stub. Rerun after changing the demo corpus or any /v1 payload shape:

    python3 scripts/capture_ui_fixtures.py
"""
from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from gridtrace import cli
from gridtrace.service import ArtifactBundle, ServiceConfig, create_app
from gridtrace.synth import demo_corpus

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"

CAPTURES = [
    ("rollup_ba.json", "GET", "/v1/rollup?level=ba", None),
    ("rollup_state.json", "GET", "/v1/rollup?level=state", None),
    ("rollup_national.json", "GET", "/v1/rollup?level=national", None),
    ("ba_solo.json", "GET", "/v1/ba/BA_SOLO", None),
    ("ba_mix.json", "GET", "/v1/ba/BA_MIX", None),
    ("ba_empty.json", "GET", "/v1/ba/BA_EMPTY", None),
    ("regions.json", "GET", "/v1/geo/regions", None),
    (
        "scenario_solo.json",
        "POST",
        "/v1/scenario",
        {"latitude": 32.5, "longitude": -97.6, "power_capacity_mw": 1.0, "uptime": 0.75},
    ),
    (
        "scenario_consequential.json",
        "POST",
        "/v1/scenario",
        {"latitude": 32.5, "longitude": -97.6, "power_capacity_mw": 1.0, "uptime": 0.75,
         "accounting": "consequential"},
    ),
    (
        "scenario_mix.json",
        "POST",
        "/v1/scenario",
        {"latitude": 32.4, "longitude": -93.0, "power_capacity_mw": 4.0, "uptime": 0.75},
    ),
]


def main() -> int:
    tmp = Path(tempfile.mkdtemp(prefix="gridtrace-fixtures-"))
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
    cfg = tmp / "config.json"
    cfg.write_text(json.dumps(config))
    for cmd in ("ingest", "impute", "attribute", "report"):
        rc = cli.main([cmd, "--config", str(cfg)])
        if rc != 0:
            print(f"{cmd} failed with exit code {rc}", file=sys.stderr)
            return rc

    bundle = ArtifactBundle.load(str(tmp / "out"))
    client = TestClient(create_app(bundle, ServiceConfig()))
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    for name, method, url, body in CAPTURES:
        resp = client.get(url) if method == "GET" else client.post(url, json=body)
        resp.raise_for_status()
        (FIXTURE_DIR / name).write_bytes(resp.content)
        print(f"wrote {name} ({len(resp.content)} bytes)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
