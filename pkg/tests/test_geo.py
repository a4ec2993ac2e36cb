import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from damagenowcast.geo import (
    EARTH_RADIUS_KM,
    GeoPoint,
    SpatialIndex,
    haversine_km,
    point_in_region,
    point_to_track_km,
    spatial_join,
)
from damagenowcast.ingest import RegionBoundary, TrackPoint

from oracles import brute_force_join, haversine_law_of_cosines, point_in_polygon_winding

coords = st.tuples(st.floats(-80, 80), st.floats(-170, 170))


def rect_region(region_id, min_lon, min_lat, max_lon, max_lat, holes=()):
    ring = (
        (min_lon, min_lat),
        (max_lon, min_lat),
        (max_lon, max_lat),
        (min_lon, max_lat),
        (min_lon, min_lat),
    )
    rings = (ring,) + tuple(holes)
    xs = [x for r in rings for x, _ in r]
    ys = [y for r in rings for _, y in r]
    return RegionBoundary(
        region_id=region_id,
        name=region_id,
        level="county",
        rings=rings,
        bbox=(min(xs), min(ys), max(xs), max(ys)),
    )


UNIT = rect_region("unit", 0.0, 0.0, 1.0, 1.0)


def _segment_gap(px, py, a, b):
    """Planar distance from (px, py) to segment a-b."""
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    length_sq = dx * dx + dy * dy
    if length_sq == 0.0:
        return math.hypot(px - ax, py - ay)
    t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / length_sq))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


class TestHaversine:
    def test_coincident_points(self):
        assert haversine_km(GeoPoint(12.3, 45.6), GeoPoint(12.3, 45.6)) == 0.0

    def test_half_circumference(self):
        d = haversine_km(GeoPoint(0, 0), GeoPoint(0, 180))
        assert d == pytest.approx(math.pi * EARTH_RADIUS_KM, abs=1e-9)
        assert d == pytest.approx(20015.1, abs=0.1)

    def test_nyc_to_brigantine(self):
        d = haversine_km(GeoPoint(40.7128, -74.0060), GeoPoint(39.4026, -74.3646))
        assert d == pytest.approx(149.0, abs=1.0)

    @given(coords, coords)
    @settings(max_examples=100, deadline=None)
    def test_matches_independent_formula(self, a, b):
        mine = haversine_km(GeoPoint(*a), GeoPoint(*b))
        ref = haversine_law_of_cosines(a[0], a[1], b[0], b[1])
        # the law-of-cosines oracle itself is only good to ~1e-3 km near zero
        assert mine == pytest.approx(ref, abs=1e-3, rel=1e-9)

    @given(coords, coords)
    @settings(max_examples=100, deadline=None)
    def test_symmetry(self, a, b):
        assert haversine_km(GeoPoint(*a), GeoPoint(*b)) == haversine_km(GeoPoint(*b), GeoPoint(*a))

    @given(coords, coords, coords)
    @settings(max_examples=200, deadline=None)
    def test_triangle_inequality(self, a, b, c):
        ab = haversine_km(GeoPoint(*a), GeoPoint(*b))
        bc = haversine_km(GeoPoint(*b), GeoPoint(*c))
        ac = haversine_km(GeoPoint(*a), GeoPoint(*c))
        assert ac <= ab + bc + 1e-9 * max(1.0, ac)


EQUATOR_TRACK = [GeoPoint(0.0, 0.0), GeoPoint(0.0, 20.0)]


class TestPointToTrack:
    def test_point_equal_to_vertex(self):
        assert point_to_track_km(GeoPoint(0.0, 0.0), EQUATOR_TRACK) == 0.0

    def test_point_on_path(self):
        assert point_to_track_km(GeoPoint(0.0, 10.0), EQUATOR_TRACK) == pytest.approx(0.0, abs=1e-6)

    def test_one_degree_off_equator(self):
        d = point_to_track_km(GeoPoint(1.0, 10.0), EQUATOR_TRACK)
        assert d == pytest.approx(EARTH_RADIUS_KM * math.pi / 180.0, abs=0.5)
        assert d == pytest.approx(111.2, abs=0.5)

    def test_clamps_to_endpoints(self):
        p = GeoPoint(0.0, -10.0)
        assert point_to_track_km(p, EQUATOR_TRACK) == pytest.approx(
            haversine_km(p, EQUATOR_TRACK[0]), abs=1e-9
        )
        q = GeoPoint(2.0, 30.0)
        assert point_to_track_km(q, EQUATOR_TRACK) == pytest.approx(
            haversine_km(q, EQUATOR_TRACK[1]), abs=1e-9
        )

    def test_single_point_track(self):
        p = GeoPoint(10.0, 10.0)
        assert point_to_track_km(p, [GeoPoint(0.0, 0.0)]) == haversine_km(p, GeoPoint(0.0, 0.0))

    def test_empty_track_is_error(self):
        with pytest.raises(ValueError):
            point_to_track_km(GeoPoint(0, 0), [])

    def test_accepts_track_points(self, utc):
        track = [
            TrackPoint(utc(2012, 10, 29, 12), 39.4, -74.4),
            TrackPoint(utc(2012, 10, 29, 18), 40.5, -75.0),
        ]
        assert point_to_track_km(GeoPoint(39.4, -74.4), track) == 0.0

    @given(st.floats(-60, 60), st.floats(-60, 60), st.integers(2, 6), st.integers(0, 2**32 - 1))
    @settings(max_examples=100, deadline=None)
    def test_never_exceeds_vertex_distance(self, lat, lon, n_points, seed):
        rng = np.random.default_rng(seed)
        track = [GeoPoint(float(a), float(b))
                 for a, b in zip(rng.uniform(-60, 60, n_points), rng.uniform(-60, 60, n_points))]
        p = GeoPoint(lat, lon)
        d = point_to_track_km(p, track)
        for vertex in track:
            assert d <= haversine_km(p, vertex) + 1e-9 * max(1.0, d)


class TestPointInRegion:
    def test_inside_unit_square(self):
        assert point_in_region(GeoPoint(0.5, 0.5), UNIT)

    def test_outside_unit_square(self):
        assert not point_in_region(GeoPoint(0.5, 1.5), UNIT)

    def test_boundary_counts_as_inside(self):
        assert point_in_region(GeoPoint(0.0, 0.5), UNIT)
        assert point_in_region(GeoPoint(0.5, 1.0), UNIT)
        assert point_in_region(GeoPoint(0.0, 0.0), UNIT)

    def test_point_inside_hole_is_outside(self):
        hole = ((0.25, 0.25), (0.75, 0.25), (0.75, 0.75), (0.25, 0.75), (0.25, 0.25))
        donut = rect_region("donut", 0.0, 0.0, 1.0, 1.0, holes=(hole,))
        assert not point_in_region(GeoPoint(0.5, 0.5), donut)
        assert point_in_region(GeoPoint(0.1, 0.1), donut)
        # hole boundary is still region boundary
        assert point_in_region(GeoPoint(0.25, 0.5), donut)

    def test_invariant_under_ring_rotation(self):
        ring = ((0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 2.0), (0.0, 1.0), (0.0, 0.0))
        probes = [GeoPoint(0.5, 0.5), GeoPoint(1.9, 1.05), GeoPoint(-0.1, 0.5), GeoPoint(1.5, 1.2)]
        open_ring = ring[:-1]
        results = []
        for shift in range(len(open_ring)):
            rotated = open_ring[shift:] + open_ring[:shift]
            closed = rotated + (rotated[0],)
            xs = [x for x, _ in closed]
            ys = [y for _, y in closed]
            region = RegionBoundary("rot", "rot", "county", (closed,), (min(xs), min(ys), max(xs), max(ys)))
            results.append([point_in_region(p, region) for p in probes])
        assert all(r == results[0] for r in results)

    @given(st.floats(-0.5, 1.5), st.floats(-0.5, 1.5))
    @settings(max_examples=200, deadline=None)
    def test_matches_winding_oracle_on_simple_polygon(self, lon, lat):
        ring = ((0.0, 0.0), (1.0, 0.2), (0.9, 1.0), (0.4, 0.8), (0.0, 1.0), (0.0, 0.0))
        # stay out of the boundary tolerance band, where on-edge snapping is by design
        assume(all(_segment_gap(lon, lat, a, b) > 1e-8 for a, b in zip(ring, ring[1:])))
        xs = [x for x, _ in ring]
        ys = [y for _, y in ring]
        region = RegionBoundary("poly", "poly", "county", (ring,), (min(xs), min(ys), max(xs), max(ys)))
        assert point_in_region(GeoPoint(lat, lon), region) == point_in_polygon_winding(lon, lat, ring)


def random_disjoint_rects(rng, count, span=40.0):
    """Rectangles on a jittered grid, guaranteed disjoint."""
    side = math.ceil(math.sqrt(count))
    cell = span / side
    regions = []
    for i in range(count):
        row, col = divmod(i, side)
        x0 = -20.0 + col * cell + rng.uniform(0.02, 0.1) * cell
        y0 = -20.0 + row * cell + rng.uniform(0.02, 0.1) * cell
        x1 = -20.0 + (col + 1) * cell - rng.uniform(0.02, 0.1) * cell
        y1 = -20.0 + (row + 1) * cell - rng.uniform(0.02, 0.1) * cell
        regions.append(rect_region(f"g{i:03d}", x0, y0, x1, y1))
    return regions


class TestSpatialJoin:
    def test_single_point_in_single_region(self):
        assert spatial_join([("p", GeoPoint(0.5, 0.5))], [UNIT]) == {"p": "unit"}

    def test_point_in_no_region(self):
        assert spatial_join([("p", GeoPoint(5.0, 5.0))], [UNIT]) == {"p": None}

    def test_overlap_tie_breaks_to_smallest_id(self):
        a = rect_region("b-region", 0.0, 0.0, 1.0, 1.0)
        b = rect_region("a-region", 0.5, 0.5, 1.5, 1.5)
        result = spatial_join([("p", GeoPoint(0.75, 0.75))], [a, b])
        assert result == {"p": "a-region"}

    def test_shared_edge_is_deterministic(self):
        left = rect_region("left", 0.0, 0.0, 1.0, 1.0)
        right = rect_region("right", 1.0, 0.0, 2.0, 1.0)
        result = spatial_join([("p", GeoPoint(0.5, 1.0))], [left, right])
        assert result == {"p": "left"}

    def test_matches_brute_force_at_scale(self):
        rng = np.random.default_rng(42)
        regions = random_disjoint_rects(rng, 100)
        points = [
            (f"p{i}", GeoPoint(float(lat), float(lon)))
            for i, (lat, lon) in enumerate(
                zip(rng.uniform(-25, 25, 2000), rng.uniform(-25, 25, 2000))
            )
        ]
        expected = brute_force_join(points, regions)
        for cell in (0.1, 0.25, 1.0):
            index = SpatialIndex(regions, cell_deg=cell)
            assert spatial_join(points, regions, index) == expected

    @given(st.integers(0, 2**32 - 1), st.sampled_from([0.07, 0.25, 0.9, 3.0]))
    @settings(max_examples=25, deadline=None)
    def test_index_equivalence_property(self, seed, cell):
        rng = np.random.default_rng(seed)
        regions = random_disjoint_rects(rng, rng.integers(3, 12))
        points = [
            (f"p{i}", GeoPoint(float(lat), float(lon)))
            for i, (lat, lon) in enumerate(
                zip(rng.uniform(-22, 22, 60), rng.uniform(-22, 22, 60))
            )
        ]
        index = SpatialIndex(regions, cell_deg=cell)
        assert spatial_join(points, regions, index) == brute_force_join(points, regions)

    def test_result_independent_of_point_order(self):
        rng = np.random.default_rng(3)
        regions = random_disjoint_rects(rng, 9)
        points = [
            (f"p{i}", GeoPoint(float(lat), float(lon)))
            for i, (lat, lon) in enumerate(zip(rng.uniform(-22, 22, 50), rng.uniform(-22, 22, 50)))
        ]
        forward = spatial_join(points, regions)
        backward = spatial_join(list(reversed(points)), regions)
        assert forward == backward

    def test_partitioned_join_merges_to_same_result(self):
        """Splitting the point set across workers and merging changes nothing."""
        rng = np.random.default_rng(17)
        regions = random_disjoint_rects(rng, 12)
        points = [
            (f"p{i}", GeoPoint(float(lat), float(lon)))
            for i, (lat, lon) in enumerate(zip(rng.uniform(-22, 22, 90), rng.uniform(-22, 22, 90)))
        ]
        index = SpatialIndex(regions)
        whole = spatial_join(points, regions, index)
        for parts in (2, 3, 7):
            merged: dict[str, str | None] = {}
            for chunk in range(parts):
                merged.update(spatial_join(points[chunk::parts], regions, index))
            assert merged == whole

    def test_index_candidates_cover_containing_regions(self):
        rng = np.random.default_rng(11)
        regions = random_disjoint_rects(rng, 16)
        index = SpatialIndex(regions, cell_deg=0.3)
        for lat, lon in zip(rng.uniform(-22, 22, 200), rng.uniform(-22, 22, 200)):
            p = GeoPoint(float(lat), float(lon))
            candidates = set(index.candidates(p))
            truly_containing = {r.region_id for r in regions if point_in_region(p, r)}
            assert truly_containing <= candidates
