from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from gridtrace.ingest import (
    dedup_facilities,
    haversine_m,
    merge_square_footage,
    parse_data_centers,
    parse_power_plants,
)
from gridtrace.records import (
    DataCenterRecord,
    IngestError,
    g_per_kwh_to_lb_per_mwh,
    lb_per_mwh_to_g_per_kwh,
)

from conftest import dc_csv, dc_row, plant_csv, plant_row

# ~40 m of latitude on the sphere used for haversine distances
DEG_40M = 0.00035972864236749223


class TestParseDataCenters:
    def test_accepts_valid_row(self):
        records, report = parse_data_centers(
            dc_csv([dc_row(sqft="50000", sqft_source="baxtel", capacity="12.5")])
        )
        assert report.records_read == 1
        assert report.records_rejected == 0
        (rec,) = records
        assert rec.square_footage == 50000
        assert rec.power_capacity_mw == 12.5
        assert rec.capacity_provenance == "reported"

    def test_latitude_out_of_range_rejected(self):
        records, report = parse_data_centers(dc_csv([dc_row(lat=91.0)]))
        assert records == []
        assert report.records_rejected == 1
        (row, reason) = report.rejection_reasons[0]
        assert "latitude out of range" in reason

    def test_empty_capacity_cell_is_absent(self):
        records, _ = parse_data_centers(dc_csv([dc_row(capacity="")]))
        assert records[0].power_capacity_mw is None
        assert records[0].capacity_provenance is None

    def test_contiguity_filter_matches_corpus_counts(self):
        # 2,144 rows of which 12 sit outside the contiguous US
        rows = []
        for i in range(2132):
            rows.append(dc_row(id=f"DC{i:04d}", lon=-77.3 - (i % 50) * 0.01))
        for i, state in enumerate(["AK", "HI", "PR", "GU", "VI", "AK", "HI", "PR", "AK", "HI", "AK", "HI"]):
            rows.append(dc_row(id=f"XX{i:02d}", state=state, lat=61.2 if state == "AK" else 21.3,
                               lon=-149.9 if state == "AK" else -157.8))
        records, report = parse_data_centers(dc_csv(rows))
        assert report.records_read == 2144
        assert len(records) == 2132
        assert report.records_rejected == 12
        assert all("outside contiguous US" in r for _, r in report.rejection_reasons)

    def test_malformed_numeric_rejected_not_coerced(self):
        records, report = parse_data_centers(dc_csv([dc_row(lat="abc")]))
        assert records == []
        assert "malformed latitude" in report.rejection_reasons[0][1]

    def test_missing_mandatory_column_is_fatal(self):
        import io

        bad = io.StringIO("id,provider\nDC1,Acme\n")
        with pytest.raises(IngestError, match="missing mandatory column"):
            parse_data_centers(bad)

    def test_nonpositive_square_footage_rejected(self):
        _, report = parse_data_centers(dc_csv([dc_row(sqft="-5", sqft_source="osm")]))
        assert report.records_rejected == 1

    def test_coordinates_inconsistent_with_state_rejected(self):
        # claims Virginia but sits in the Caribbean
        _, report = parse_data_centers(dc_csv([dc_row(state="VA", lat=10.0, lon=-75.0)]))
        assert report.records_rejected == 1
        assert "inconsistent" in report.rejection_reasons[0][1]

    def test_report_invariant_holds(self):
        rows = [dc_row(id="A"), dc_row(id="B", lat=91.0), dc_row(id="C", state="AK", lat=61.0, lon=-150.0)]
        records, report = parse_data_centers(dc_csv(rows))
        assert report.records_read == report.accepted + report.records_rejected + report.duplicates_merged
        assert report.accepted == len(records) == 1


class TestParsePowerPlants:
    def test_lb_per_mwh_converted(self):
        records, _ = parse_power_plants(plant_csv([plant_row(rate="1000", unit="lb_per_mwh")]))
        assert records[0].emission_rate_g_per_kwh == pytest.approx(453.59237, abs=0)

    def test_negative_generation_excluded_and_counted(self):
        rows = [
            plant_row(id="P1", generation="100000"),
            plant_row(id="P2", generation="-500"),
            plant_row(id="P3", generation="0"),
        ]
        records, report = parse_power_plants(plant_csv(rows))
        assert {r.plant_id for r in records} == {"P1", "P3"}
        assert report.records_rejected == 1
        assert "negative annual net generation" in report.rejection_reasons[0][1]

    def test_ten_plant_fixture_one_missing_rate(self):
        rows = [plant_row(id=f"P{i}", rate="" if i == 7 else "450") for i in range(10)]
        records, report = parse_power_plants(plant_csv(rows))
        assert len(records) == 9
        assert report.records_read == 10
        assert report.records_rejected == 1

    def test_below_threshold_excluded(self):
        rows = [plant_row(id="BIG", nameplate="25"), plant_row(id="SMALL", nameplate="24.9")]
        records, report = parse_power_plants(plant_csv(rows))
        assert [r.plant_id for r in records] == ["BIG"]
        assert "inclusion threshold" in report.rejection_reasons[0][1]

    def test_threshold_configurable(self):
        rows = [plant_row(id="SMALL", nameplate="5")]
        records, _ = parse_power_plants(plant_csv(rows), min_nameplate_mw=1.0)
        assert len(records) == 1

    def test_unknown_fuel_maps_to_other(self, caplog):
        records, report = parse_power_plants(plant_csv([plant_row(fuel="mystery_fuel")]))
        assert records[0].fuel_category == "other"
        assert report.records_rejected == 0
        assert any("unknown fuel code" in m for m in caplog.messages)

    def test_fuel_codes_fold_to_canonical(self):
        rows = [
            plant_row(id="P1", fuel="GAS"),
            plant_row(id="P2", fuel="WAT"),
            plant_row(id="P3", fuel="SUN"),
        ]
        records, _ = parse_power_plants(plant_csv(rows))
        assert [r.fuel_category for r in records] == ["natural_gas", "hydro", "solar"]


@given(rate=st.floats(min_value=1e-6, max_value=1e5, allow_nan=False))
def test_unit_conversion_round_trip(rate):
    there_and_back = lb_per_mwh_to_g_per_kwh(g_per_kwh_to_lb_per_mwh(rate))
    assert there_and_back == pytest.approx(rate, rel=1e-9)


class TestMergeSquareFootage:
    def test_baxtel_beats_larger_osm(self):
        assert merge_square_footage([(50000, "osm"), (48000, "baxtel")]) == (48000, "baxtel")

    def test_single_candidate(self):
        assert merge_square_footage([(30000, "osm")]) == (30000, "osm")

    def test_tie_within_source_takes_largest(self):
        assert merge_square_footage([(10000, "scraped"), (12000, "scraped")]) == (12000, "scraped")

    def test_empty_means_no_footage(self):
        assert merge_square_footage([]) is None


def _dc(id, lat, lon, origin="baxtel", sqft=None, sqft_source=None, capacity=None):
    return DataCenterRecord(
        id=id, provider="p", address="a", state="VA", latitude=lat, longitude=lon,
        origin=origin, square_footage=sqft, sqft_source=sqft_source,
        power_capacity_mw=capacity,
        capacity_provenance="reported" if capacity is not None else None,
    )


def _brute_force_clusters(records, radius_m):
    """Independent oracle: BFS transitive closure over pairwise haversine."""
    n = len(records)
    adj = {i: [] for i in range(n)}
    for i in range(n):
        for j in range(i + 1, n):
            d = haversine_m(records[i].latitude, records[i].longitude,
                            records[j].latitude, records[j].longitude)
            if d <= radius_m:
                adj[i].append(j)
                adj[j].append(i)
    seen, clusters = set(), []
    for i in range(n):
        if i in seen:
            continue
        queue, cluster = [i], set()
        while queue:
            k = queue.pop()
            if k in cluster:
                continue
            cluster.add(k)
            queue.extend(adj[k])
        seen |= cluster
        clusters.append(cluster)
    return clusters


class TestDedup:
    def test_pair_within_radius_merges(self):
        records = [_dc("A", 40.0, -100.0), _dc("B", 40.0 + DEG_40M / 8, -100.0)]  # ~5 m apart
        merged, report = dedup_facilities(records, radius_m=50.0)
        assert len(merged) == 1
        assert report.duplicates_merged == 1

    def test_pair_outside_radius_kept(self):
        records = [_dc("A", 40.0, -100.0), _dc("B", 40.0 + 125 * DEG_40M, -100.0)]  # ~5 km
        merged, _ = dedup_facilities(records, radius_m=50.0)
        assert len(merged) == 2

    def test_transitive_chain_collapses(self):
        # A-B 40 m, B-C 40 m, A-C 80 m: one cluster despite A-C > radius
        records = [
            _dc("A", 40.0, -100.0),
            _dc("B", 40.0 + DEG_40M, -100.0),
            _dc("C", 40.0 + 2 * DEG_40M, -100.0),
        ]
        assert len(_brute_force_clusters(records, 50.0)) == 1  # oracle agrees
        merged, report = dedup_facilities(records, radius_m=50.0)
        assert len(merged) == 1
        assert report.duplicates_merged == 2

    def test_matches_brute_force_on_random_scatter(self):
        rng = random.Random(42)
        records = [
            _dc(f"R{i:02d}", 40.0 + rng.uniform(0, 30) * DEG_40M, -100.0 + rng.uniform(0, 30) * DEG_40M)
            for i in range(60)
        ]
        oracle = _brute_force_clusters(records, 60.0)
        merged, _ = dedup_facilities(records, radius_m=60.0)
        assert len(merged) == len(oracle)

    def test_order_independent(self):
        rng = random.Random(7)
        records = [
            _dc(f"R{i:02d}", 40.0 + rng.uniform(0, 10) * DEG_40M, -100.0)
            for i in range(25)
        ]
        merged_fwd, _ = dedup_facilities(list(records), radius_m=55.0)
        shuffled = list(records)
        rng.shuffle(shuffled)
        merged_rev, _ = dedup_facilities(shuffled, radius_m=55.0)
        assert [r.id for r in merged_fwd] == [r.id for r in merged_rev]

    def test_merged_identity_prefers_baxtel_and_merges_footage(self):
        records = [
            _dc("OSM1", 40.0, -100.0, origin="osm", sqft=50000, sqft_source="osm"),
            _dc("BAX1", 40.0 + DEG_40M / 8, -100.0, origin="baxtel", sqft=48000,
                sqft_source="baxtel", capacity=10.0),
        ]
        merged, _ = dedup_facilities(records, radius_m=50.0)
        (rec,) = merged
        assert rec.id == "BAX1"
        assert (rec.square_footage, rec.sqft_source) == (48000, "baxtel")
        assert rec.power_capacity_mw == 10.0

    def test_capacity_filled_from_cluster_when_identity_lacks_it(self):
        records = [
            _dc("BAX1", 40.0, -100.0, origin="baxtel"),
            _dc("SCR1", 40.0 + DEG_40M / 8, -100.0, origin="scraped", capacity=7.0),
        ]
        (rec,), _ = dedup_facilities(records, radius_m=50.0)
        assert rec.id == "BAX1"
        assert rec.power_capacity_mw == 7.0

    def test_radius_must_be_positive(self):
        with pytest.raises(ValueError):
            dedup_facilities([], radius_m=0.0)


_cell = st.one_of(
    st.just(""),
    st.text(alphabet="abcXYZ!-.", max_size=6),
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False).map(str),
    st.sampled_from(["91.5", "-95", "nan", "inf", "0", "VA", "osm"]),
)


@settings(max_examples=60)
@given(st.lists(st.tuples(_cell, _cell, _cell, _cell, _cell), min_size=1, max_size=8))
def test_accepted_records_always_satisfy_invariants(cells):
    rows = [
        dc_row(id=f"D{i}", state=state or "VA", lat=lat, lon=lon, sqft=sqft, capacity=cap,
               sqft_source="osm" if sqft else "")
        for i, (state, lat, lon, sqft, cap) in enumerate(cells)
    ]
    records, report = parse_data_centers(dc_csv(rows))
    assert report.records_read == len(rows)
    for rec in records:
        assert -90 <= rec.latitude <= 90
        assert -180 <= rec.longitude <= 180
        assert rec.square_footage is None or rec.square_footage > 0
        assert rec.power_capacity_mw is None or rec.power_capacity_mw > 0
        assert len(rec.state) == 2
        assert rec.dc_type in ("hyperscale", "other")


@settings(max_examples=30)
@given(
    st.lists(
        st.tuples(
            st.floats(min_value=25, max_value=49, allow_nan=False),
            st.floats(min_value=-124, max_value=-67, allow_nan=False),
        ),
        min_size=1,
        max_size=12,
    )
)
def test_parsing_is_deterministic(points):
    rows = [
        dc_row(id=f"D{i}", state="KS", lat=round(lat, 5), lon=round(lon, 5))
        for i, (lat, lon) in enumerate(points)
    ]
    first, report_a = parse_data_centers(dc_csv(rows))
    second, report_b = parse_data_centers(dc_csv(rows))
    assert [r.to_dict() for r in first] == [r.to_dict() for r in second]
    assert report_a.to_dict() == report_b.to_dict()
