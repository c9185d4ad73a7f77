import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crowdplan import geometry as g
from crowdplan.geometry import ConvexRegion, Point, Segment

S = Segment.from_coords
BOX = ConvexRegion.rectangle(0, 0, 42, 18)

coord = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


@st.composite
def segments(draw):
    a = (draw(coord), draw(coord))
    b = (draw(coord), draw(coord))
    if (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 == 0.0:
        b = (a[0] + 1.0, a[1])
    return S(*a, *b)


def test_point_construction_rejects_non_finite():
    with pytest.raises(ValueError):
        Point(float("nan"), 0)
    with pytest.raises(ValueError):
        Point(0, float("inf"))


def test_segment_rejects_degenerate():
    with pytest.raises(ValueError):
        S(1, 1, 1, 1)
    with pytest.raises(ValueError):
        S(0, 0, 0, 1e-300)


def test_region_orientation_and_convexity():
    cw = ConvexRegion((Point(0, 0), Point(0, 1), Point(1, 1), Point(1, 0)))
    assert cw.vertices[0] == Point(1, 0) and cw.vertices[1] == Point(1, 1)
    with pytest.raises(ValueError):
        ConvexRegion((Point(0, 0), Point(2, 0), Point(1, 0.2), Point(1, 2)))
    with pytest.raises(ValueError):
        ConvexRegion((Point(0, 0), Point(1, 0)))


@pytest.mark.parametrize("p,q,want", [((0, 0), (0, 0), 0), ((0, 0), (3, 4), 5), ((1, 2), (4, 6), 5)])
def test_point_distance(p, q, want):
    assert g.point_distance(Point(*p), Point(*q)) == want


@pytest.mark.parametrize("p,s,want", [
    ((0, 1), (-1, 0, 1, 0), 1),
    ((3, 0), (0, 0, 1, 0), 2),
    ((2, 2), (0, 0, 4, 0), 2),
])
def test_point_segment_distance(p, s, want):
    assert g.point_segment_distance(Point(*p), S(*s)) == want


@pytest.mark.parametrize("s,t,want", [
    ((0, -1, 0, 1), (-1, 0, 1, 0), True),
    ((0, 0, 1, 0), (3, 0, 4, 0), False),
    ((0, 0, 1, 1), (1, 1, 2, 0), True),
    ((0, 0, 2, 0), (1, 0, 3, 0), True),
    ((0, 0, 2, 0), (1, 0, 1, 5), True),
    ((0, 0, 2, 0), (1, 0.1, 1, 5), False),
])
def test_segments_intersect(s, t, want):
    assert g.segments_intersect(S(*s), S(*t)) is want
    assert g.segments_intersect(S(*t), S(*s)) is want


@pytest.mark.parametrize("s,t,want", [
    ((0, 0, 1, 0), (0, 0, 1, 0), 0),
    ((0, 0, 1, 0), (0, 1, 1, 1), 1),
    ((0, 0, 2, 0), (0, 0, 1, 0), 1),
])
def test_hausdorff_examples(s, t, want):
    assert g.hausdorff_distance(S(*s), S(*t)) == want


def test_hausdorff_ignores_endpoint_order():
    assert g.hausdorff_distance(S(0, 0, 1, 0), S(1, 0, 0, 0)) == 0


def test_directed_hausdorff_is_one_sided():
    short, long = S(0, 0, 1, 0), S(0, 0, 2, 0)
    assert g.directed_hausdorff(short, long) == 0
    assert g.directed_hausdorff(long, short) == 1


@pytest.mark.parametrize("s,t,want", [
    ((0, -1, 0, 1), (-1, 0, 1, 0), 0),
    ((0, 0, 1, 0), (3, 0, 4, 0), 2),
    ((0, 0, 1, 0), (0, 0, 1, 0), 0),
])
def test_d2_examples(s, t, want):
    assert g.clustering_distance_d2(S(*s), S(*t)) == want


@pytest.mark.parametrize("p,want", [((5, 5), True), ((50, 5), False), ((0, 0), True), ((42, 18 + 1e-12), True)])
def test_point_in_region(p, want):
    assert g.point_in_region(Point(*p), BOX) is want


@pytest.mark.parametrize("s,want", [((1, 1, 2, 2), True), ((5, 5, 50, 5), False), ((0, 0, 42, 18), True)])
def test_segment_in_region(s, want):
    assert g.segment_in_region(S(*s), BOX) is want


def test_extend_examples():
    wall = [S(0, 0, 0, 10)]
    assert g.extend_to_nearest(S(2, 5, 6, 5), 0, wall) == S(0, 5, 6, 5)
    assert g.extend_to_nearest(S(2, 5, 6, 5), 1, wall) is None


def test_extend_takes_first_hit():
    walls = [S(-5, 0, -5, 10), S(0, 0, 0, 10)]
    assert g.extend_to_nearest(S(2, 5, 6, 5), 0, walls) == S(0, 5, 6, 5)


def test_extend_along_collinear_background():
    assert g.extend_to_nearest(S(2, 0, 4, 0), 0, [S(-3, 0, 0, 0)]) == S(0, 0, 4, 0)


@settings(max_examples=200, deadline=None)
@given(segments(), segments())
def test_hausdorff_symmetric_and_nonnegative(s, t):
    assert g.hausdorff_distance(s, t) == g.hausdorff_distance(t, s) >= 0


@settings(max_examples=200, deadline=None)
@given(segments(), segments(), segments())
def test_hausdorff_triangle(s, t, u):
    assert g.hausdorff_distance(s, u) <= g.hausdorff_distance(s, t) + g.hausdorff_distance(t, u) + 1e-9


@settings(max_examples=200, deadline=None)
@given(segments(), segments())
def test_d2_symmetric_and_zero_on_intersection(s, t):
    d = g.clustering_distance_d2(s, t)
    assert d == g.clustering_distance_d2(t, s) >= 0
    if g.segments_intersect(s, t):
        assert d == 0


@st.composite
def convex_polygons(draw):
    n = draw(st.integers(3, 9))
    r = draw(st.floats(1, 50))
    cx, cy = draw(coord), draw(coord)
    angles = sorted(draw(st.lists(st.floats(0, 2 * math.pi - 1e-3), min_size=n, max_size=n, unique=True)))
    pts = [Point(cx + r * math.cos(a), cy + r * math.sin(a)) for a in angles]
    try:
        return ConvexRegion(tuple(pts))
    except ValueError:
        return ConvexRegion.rectangle(cx, cy, cx + r, cy + r)


@settings(max_examples=200, deadline=None)
@given(convex_polygons(), segments())
def test_segment_in_region_iff_both_endpoints(r, s):
    assert g.segment_in_region(s, r) == (g.point_in_region(s.a, r) and g.point_in_region(s.b, r))


@settings(max_examples=200, deadline=None)
@given(segments(), st.lists(segments(), min_size=1, max_size=4), st.integers(0, 1))
def test_extension_contains_original_and_touches(s, background, end):
    if g.touches_any(s, background):
        return
    ext = g.extend_to_nearest(s, end, background)
    if ext is None:
        return
    scale = max(1.0, *map(abs, ext.coords()))
    for p in (s.a, s.b):
        assert g.point_segment_distance(p, ext) <= 1e-9 * scale
    assert g.touches_any(ext, background, 1e-9 * scale)
    assert ext.endpoint(1 - end) == s.endpoint(1 - end)


def test_vector_forms_match_scalar_bit_for_bit():
    rng = np.random.default_rng(3)
    raw = np.round(rng.uniform(0, 20, (300, 4)), 1)
    raw[:, 2] += 0.05
    segs = [S(*r) for r in raw]
    A = g.segments_to_array(segs)
    D = g.d2_block(A, A)
    for i in range(0, 300, 7):
        for j in range(300):
            assert D[i, j] == g.clustering_distance_d2(segs[i], segs[j])
        h = g.hausdorff_one_to_many(segs[i], A)
        assert all(h[j] == g.hausdorff_distance(segs[i], segs[j]) for j in range(300))
    inside = g.points_in_region_v(A[:, 0], A[:, 1], BOX)
    assert inside.tolist() == [g.point_in_region(s.a, BOX) for s in segs]
    touch = g.touches_any_v(A, segs[:5])
    assert touch.tolist() == [g.touches_any(s, segs[:5]) for s in segs]
