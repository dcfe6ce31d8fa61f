"""Balancing-authority regions and spatial assignment.

Containment uses planar even-odd ray casting on (lon, lat) with the boundary
counting as inside; holes are excluded. Distances are haversine. Both choices
are adequate at grid-region scale.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ingest import haversine_m

Ring = Sequence[tuple[float, float]]


class RegionConfigError(Exception):
    """Raised when the region set cannot support assignment."""


@dataclass
class BARegion:
    """A balancing-authority service territory as a multipolygon.

    ``polygons`` is a list of polygon parts; each part is [outer, hole, ...]
    with rings as (lon, lat) vertex sequences, first vertex == last.
    """

    ba_id: str
    name: str
    polygons: list[list[Ring]]
    member_plant_ids: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        for part in self.polygons:
            for ring in part:
                if len(ring) < 4:
                    raise ValueError(f"region {self.ba_id}: ring with < 3 distinct vertices")
                if tuple(ring[0]) != tuple(ring[-1]):
                    raise ValueError(f"region {self.ba_id}: ring not closed")

    def area(self) -> float:
        """Planar degree² area: outer rings minus holes, summed over parts."""
        total = 0.0
        for part in self.polygons:
            total += abs(_shoelace(part[0]))
            for hole in part[1:]:
                total -= abs(_shoelace(hole))
        return total

    def bounds(self) -> tuple[float, float, float, float]:
        xs = [v[0] for part in self.polygons for ring in part for v in ring]
        ys = [v[1] for part in self.polygons for ring in part for v in ring]
        return min(xs), min(ys), max(xs), max(ys)


@dataclass
class Assignment:
    ba_id: str
    flag: Optional[str] = None  # None | "ambiguous" | "fallback"


def _shoelace(ring: Ring) -> float:
    s = 0.0
    for (x1, y1), (x2, y2) in zip(ring[:-1], ring[1:]):
        s += x1 * y2 - x2 * y1
    return s / 2.0


def _on_segment(px: float, py: float, ax: float, ay: float, bx: float, by: float) -> bool:
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    if cross != 0.0:
        return False
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def _ring_crossings(px: float, py: float, ring: Ring) -> int:
    """Count crossings of the ray {y = py, x > px} with ring edges."""
    crossings = 0
    for (ax, ay), (bx, by) in zip(ring[:-1], ring[1:]):
        if (ay > py) != (by > py):
            x_at = ax + (py - ay) * (bx - ax) / (by - ay)
            if x_at > px:
                crossings += 1
    return crossings


def point_in_region(point: tuple[float, float], region: BARegion) -> bool:
    """True iff the point is inside or on the boundary of the region.

    Even-odd semantics per polygon part: inside the outer ring an odd number
    of crossings including holes means contained. Any boundary point of any
    ring counts as inside.
    """
    px, py = point
    if not (math.isfinite(px) and math.isfinite(py)):
        raise ValueError("point coordinates must be finite")
    for part in region.polygons:
        crossings = 0
        for ring in part:
            for (ax, ay), (bx, by) in zip(ring[:-1], ring[1:]):
                if _on_segment(px, py, ax, ay, bx, by):
                    return True
            crossings += _ring_crossings(px, py, ring)
        if crossings % 2 == 1:
            return True
    return False


def boundary_distance_m(point: tuple[float, float], region: BARegion) -> float:
    """Haversine distance from a point to the nearest boundary location.

    The nearest point on each edge is found by projecting in a local
    equirectangular frame scaled by cos(latitude), then measured by haversine.
    """
    px, py = point
    coslat = math.cos(math.radians(py))
    best = math.inf
    for part in region.polygons:
        for ring in part:
            for (ax, ay), (bx, by) in zip(ring[:-1], ring[1:]):
                # Local planar frame (x scaled by cos(lat)) for the projection only.
                vx, vy = (bx - ax) * coslat, by - ay
                wx, wy = (px - ax) * coslat, py - ay
                seg2 = vx * vx + vy * vy
                t = 0.0 if seg2 == 0.0 else max(0.0, min(1.0, (wx * vx + wy * vy) / seg2))
                qx, qy = ax + t * (bx - ax), ay + t * (by - ay)
                d = haversine_m(py, px, qy, qx)
                if d < best:
                    best = d
    return best


def assign_ba(
    point: tuple[float, float],
    regions: list[BARegion],
) -> Assignment:
    """Assign a (lon, lat) point to a balancing authority.

    Containment wins; overlaps resolve to the smallest-area region and are
    flagged ``ambiguous``; points outside every region fall back to the
    nearest boundary and are flagged ``fallback``.
    """
    if not regions:
        raise RegionConfigError("no balancing-authority regions loaded")
    containing = [r for r in regions if point_in_region(point, r)]
    if len(containing) == 1:
        return Assignment(containing[0].ba_id)
    if len(containing) > 1:
        smallest = min(containing, key=lambda r: (r.area(), r.ba_id))
        return Assignment(smallest.ba_id, flag="ambiguous")
    nearest = min(regions, key=lambda r: (boundary_distance_m(point, r), r.ba_id))
    return Assignment(nearest.ba_id, flag="fallback")


def load_regions_geojson(text: str) -> list[BARegion]:
    """Parse a GeoJSON FeatureCollection of BA polygons.

    Each feature must carry ``ba_id`` and ``name`` properties and a Polygon or
    MultiPolygon geometry with (longitude, latitude) coordinates.
    """
    doc = json.loads(text)
    if doc.get("type") != "FeatureCollection":
        raise RegionConfigError("regions file is not a GeoJSON FeatureCollection")
    regions: list[BARegion] = []
    seen: set[str] = set()
    for feature in doc.get("features", []):
        props = feature.get("properties") or {}
        ba_id = props.get("ba_id")
        if not ba_id:
            raise RegionConfigError("feature missing ba_id property")
        if ba_id in seen:
            raise RegionConfigError(f"duplicate ba_id {ba_id!r} in regions file")
        seen.add(ba_id)
        geom = feature.get("geometry") or {}
        gtype = geom.get("type")
        coords = geom.get("coordinates")
        if gtype == "Polygon":
            parts = [coords]
        elif gtype == "MultiPolygon":
            parts = coords
        else:
            raise RegionConfigError(f"{ba_id}: unsupported geometry type {gtype!r}")
        polygons = [[[tuple(v) for v in ring] for ring in part] for part in parts]
        regions.append(BARegion(ba_id=ba_id, name=props.get("name", ba_id), polygons=polygons))
    if not regions:
        raise RegionConfigError("regions file contains no features")
    return regions


def regions_to_geojson(
    regions: list[BARegion],
    properties: Optional[dict[str, dict]] = None,
) -> dict:
    """Serialize regions back to a FeatureCollection, merging extra properties."""
    features = []
    for r in sorted(regions, key=lambda r: r.ba_id):
        props = {"ba_id": r.ba_id, "name": r.name}
        if properties and r.ba_id in properties:
            props.update(properties[r.ba_id])
        if len(r.polygons) == 1:
            geometry = {"type": "Polygon",
                        "coordinates": [[list(v) for v in ring] for ring in r.polygons[0]]}
        else:
            geometry = {"type": "MultiPolygon",
                        "coordinates": [[[list(v) for v in ring] for ring in part]
                                        for part in r.polygons]}
        features.append({"type": "Feature", "properties": props, "geometry": geometry})
    return {"type": "FeatureCollection", "features": features}


def contains_many(region: BARegion, lons: np.ndarray, lats: np.ndarray) -> np.ndarray:
    """Vectorized containment for probe arrays; same semantics as point_in_region."""
    inside = np.zeros(lons.shape[0], dtype=bool)
    on_edge = np.zeros(lons.shape[0], dtype=bool)
    for part in region.polygons:
        crossings = np.zeros(lons.shape[0], dtype=np.int64)
        for ring in part:
            v = np.asarray(ring, dtype=float)
            ax, ay = v[:-1, 0], v[:-1, 1]
            bx, by = v[1:, 0], v[1:, 1]
            cross = (bx - ax)[None, :] * (lats[:, None] - ay[None, :]) - (by - ay)[None, :] * (
                lons[:, None] - ax[None, :]
            )
            within_x = (lons[:, None] >= np.minimum(ax, bx)[None, :]) & (
                lons[:, None] <= np.maximum(ax, bx)[None, :]
            )
            within_y = (lats[:, None] >= np.minimum(ay, by)[None, :]) & (
                lats[:, None] <= np.maximum(ay, by)[None, :]
            )
            on_edge |= ((cross == 0.0) & within_x & within_y).any(axis=1)

            straddles = (ay[None, :] > lats[:, None]) != (by[None, :] > lats[:, None])
            with np.errstate(divide="ignore", invalid="ignore"):
                x_at = ax[None, :] + (lats[:, None] - ay[None, :]) * (bx - ax)[None, :] / (
                    by - ay
                )[None, :]
            crossings += (straddles & (x_at > lons[:, None])).sum(axis=1)
        inside |= crossings % 2 == 1
    return inside | on_edge
