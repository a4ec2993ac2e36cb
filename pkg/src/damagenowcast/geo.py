"""Spherical geometry and the point-to-region spatial join.

Distances are great-circle kilometres on a sphere of radius 6371.0088 km.
Containment is planar even-odd ray casting in the lon/lat plane, which is
accurate for small mid-latitude polygons; polygons spanning the poles or the
antimeridian are out of scope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Protocol, Sequence

from .ingest import RegionBoundary

__all__ = [
    "EARTH_RADIUS_KM",
    "GeoPoint",
    "SpatialIndex",
    "haversine_km",
    "point_to_track_km",
    "point_in_region",
    "spatial_join",
]

EARTH_RADIUS_KM = 6371.0088

_ON_EDGE_EPS = 1e-9  # degrees of perpendicular offset still counted as "on the boundary"


class _HasLatLon(Protocol):
    lat: float
    lon: float


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float


def _central_angle(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle central angle in radians (haversine form, stable for small angles)."""
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = phi2 - phi1
    dlam = math.radians(lon2 - lon1)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * math.asin(min(1.0, math.sqrt(h)))


def haversine_km(a: _HasLatLon, b: _HasLatLon) -> float:
    """Great-circle distance between two points, in kilometres."""
    return EARTH_RADIUS_KM * _central_angle(a.lat, a.lon, b.lat, b.lon)


def _initial_bearing(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dlam = math.radians(lon2 - lon1)
    y = math.sin(dlam) * math.cos(phi2)
    x = math.cos(phi1) * math.sin(phi2) - math.sin(phi1) * math.cos(phi2) * math.cos(dlam)
    return math.atan2(y, x)


def _segment_distance_rad(p: _HasLatLon, a: _HasLatLon, b: _HasLatLon) -> float:
    """Angular distance from p to the great-circle arc a-b, clamped to the endpoints.

    When the perpendicular foot lies outside the arc, the minimum over the arc
    is attained at an endpoint; both endpoints are considered because for
    distant points the circularly nearer endpoint is not the one the local
    bearing test suggests.
    """
    d13 = _central_angle(a.lat, a.lon, p.lat, p.lon)
    if d13 == 0.0:
        return 0.0
    d23 = _central_angle(b.lat, b.lon, p.lat, p.lon)
    endpoint_min = min(d13, d23)
    d12 = _central_angle(a.lat, a.lon, b.lat, b.lon)
    if d12 == 0.0:
        return endpoint_min
    theta12 = _initial_bearing(a.lat, a.lon, b.lat, b.lon)
    theta13 = _initial_bearing(a.lat, a.lon, p.lat, p.lon)
    relative = theta13 - theta12
    if math.cos(relative) < 0.0:
        # Foot falls behind the first endpoint.
        return endpoint_min
    sin_xt = math.sin(d13) * math.sin(relative)
    sin_xt = max(-1.0, min(1.0, sin_xt))
    dxt = math.asin(sin_xt)
    cos_xt = math.cos(dxt)
    if cos_xt == 0.0:
        return min(abs(dxt), endpoint_min)
    cos_at = max(-1.0, min(1.0, math.cos(d13) / cos_xt))
    dat = math.acos(cos_at)
    if dat > d12:
        # Foot falls beyond the second endpoint.
        return endpoint_min
    return abs(dxt)


def point_to_track_km(p: _HasLatLon, track: Sequence[_HasLatLon]) -> float:
    """Shortest great-circle distance from a point to a track polyline, in km.

    A single-point track degrades to plain point distance; an empty track is
    an error.
    """
    if not track:
        raise ValueError("track must contain at least one point")
    if len(track) == 1:
        return haversine_km(p, track[0])
    best = min(_segment_distance_rad(p, a, b) for a, b in zip(track, track[1:]))
    return EARTH_RADIUS_KM * best


def _on_segment(px: float, py: float, ax: float, ay: float, bx: float, by: float) -> bool:
    if not (min(ax, bx) - _ON_EDGE_EPS <= px <= max(ax, bx) + _ON_EDGE_EPS):
        return False
    if not (min(ay, by) - _ON_EDGE_EPS <= py <= max(ay, by) + _ON_EDGE_EPS):
        return False
    dx, dy = bx - ax, by - ay
    cross = dx * (py - ay) - dy * (px - ax)
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        return math.hypot(px - ax, py - ay) <= _ON_EDGE_EPS
    return abs(cross) / norm <= _ON_EDGE_EPS


def point_in_region(p: _HasLatLon, region: RegionBoundary) -> bool:
    """Even-odd containment over all rings; boundary points count as inside."""
    x, y = p.lon, p.lat
    min_lon, min_lat, max_lon, max_lat = region.bbox
    if not (min_lon - _ON_EDGE_EPS <= x <= max_lon + _ON_EDGE_EPS):
        return False
    if not (min_lat - _ON_EDGE_EPS <= y <= max_lat + _ON_EDGE_EPS):
        return False

    inside = False
    for ring in region.rings:
        for (ax, ay), (bx, by) in zip(ring, ring[1:]):
            if _on_segment(x, y, ax, ay, bx, by):
                return True
            if (ay > y) != (by > y):
                x_cross = ax + (y - ay) * (bx - ax) / (by - ay)
                if x < x_cross:
                    inside = not inside
    return inside


class SpatialIndex:
    """Uniform lon/lat grid over region bounding boxes.

    Every region is registered in every grid cell its bbox overlaps, so
    ``candidates`` is always a superset of the regions truly containing a
    point. Immutable once built.
    """

    def __init__(self, regions: Iterable[RegionBoundary], cell_deg: float = 0.25):
        if cell_deg <= 0:
            raise ValueError("cell_deg must be positive")
        self.cell_deg = cell_deg
        cells: dict[tuple[int, int], list[str]] = {}
        for region in regions:
            min_lon, min_lat, max_lon, max_lat = region.bbox
            ix0 = math.floor(min_lon / cell_deg)
            ix1 = math.floor(max_lon / cell_deg)
            iy0 = math.floor(min_lat / cell_deg)
            iy1 = math.floor(max_lat / cell_deg)
            for ix in range(ix0, ix1 + 1):
                for iy in range(iy0, iy1 + 1):
                    cells.setdefault((ix, iy), []).append(region.region_id)
        self._cells: dict[tuple[int, int], tuple[str, ...]] = {
            key: tuple(sorted(ids)) for key, ids in cells.items()
        }

    def candidates(self, p: _HasLatLon) -> tuple[str, ...]:
        """Region ids whose bbox cell covers the point, sorted; possibly empty."""
        key = (math.floor(p.lon / self.cell_deg), math.floor(p.lat / self.cell_deg))
        return self._cells.get(key, ())


def spatial_join(
    points: Iterable[tuple[str, _HasLatLon]],
    regions: Sequence[RegionBoundary],
    index: SpatialIndex | None = None,
) -> dict[str, str | None]:
    """Assign each point to the region containing it (None when uncontained).

    Overlapping boundaries are tie-broken to the lexicographically smallest
    region_id, so the result is independent of point order, region order, and
    index cell size.
    """
    if index is None:
        index = SpatialIndex(regions)
    by_id: Mapping[str, RegionBoundary] = {r.region_id: r for r in regions}
    out: dict[str, str | None] = {}
    for point_id, point in points:
        assigned: str | None = None
        for region_id in index.candidates(point):
            region = by_id.get(region_id)
            if region is not None and point_in_region(point, region):
                assigned = region_id
                break
        out[point_id] = assigned
    return out
