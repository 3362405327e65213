import math

import numpy as np
import pytest

from farmap.errors import OutsidePolygon
from farmap.geodesics import distance
from farmap.geom import polygon_is_simple
from farmap.surface import SurfacePoint
from farmap.star_unfold import unfold


def test_octahedron_generic_source_12gon(octa, fresh_rng):
    p = octa.random_point(fresh_rng(0))
    u = unfold(octa, p)
    assert len(u.polygon) == 12
    assert polygon_is_simple(u.polygon, 1e-9 * octa.chart_scale)
    assert u.closure_error < 1e-10
    assert u.signed_area == pytest.approx(octa.area, abs=1e-9)


def test_cube_face_center_16gon(cube):
    f = 0
    c = np.mean(cube.corners[f], axis=0)
    u = unfold(cube, SurfacePoint(f, c[0], c[1]))
    assert len(u.polygon) == 16
    assert polygon_is_simple(u.polygon, 1e-9 * cube.chart_scale)


def test_cone_point_source_polygon(octa, perturbed):
    for s in (octa, perturbed):
        n = s.n_cone_points
        for vid in range(n):
            u = unfold(s, s.vertex_point(vid))
            assert len(u.polygon) == 2 * (n - 1)
            assert polygon_is_simple(u.polygon, 1e-9 * s.chart_scale)
            assert u.closure_error < 1e-10


def test_edge_length_invariants(perturbed, fresh_rng):
    r = fresh_rng(1)
    for _ in range(6):
        u = unfold(perturbed, perturbed.random_point(r))
        k = u.n_images
        for n in range(k):
            assert math.dist(u.source_images[n], u.cone_images[n]) == \
                pytest.approx(u.cuts[n].length, abs=1e-10)
            assert math.dist(u.source_images[n],
                             u.cone_images[(n + 1) % k]) == \
                pytest.approx(u.cuts[(n + 1) % k].length, abs=1e-10)


def test_source_image_angles_sum_to_cone_total(octa, fresh_rng):
    """The wedge angles at the source images add up to the total angle
    around the source."""
    p = octa.random_point(fresh_rng(2))
    u = unfold(octa, p)
    k = u.n_images
    total = 0.0
    for n in range(k):
        a = np.array(u.cone_images[n]) - np.array(u.source_images[n])
        b = np.array(u.cone_images[(n + 1) % k]) - \
            np.array(u.source_images[n])
        cosang = (a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
        total += math.acos(min(1.0, max(-1.0, cosang)))
    assert total == pytest.approx(2 * math.pi, abs=1e-9)


def test_fold_back_round_trip(octa, perturbed, fresh_rng):
    r = fresh_rng(3)
    for s in (octa, perturbed):
        u = unfold(s, s.random_point(r))
        for _ in range(6):
            q = s.random_point(r)
            dev, t_chart = u.dev_point(q)
            assert u.contains(dev)
            back = u.fold_back(dev)
            assert s.chart_gap(q, back) < 1e-10
            assert math.dist(t_chart.apply(q.uv), dev) < 1e-10


def test_fold_back_distance_consistency(octa, fresh_rng):
    r = fresh_rng(4)
    p = octa.random_point(r)
    u = unfold(octa, p)
    for _ in range(6):
        q = octa.random_point(r)
        dev, _ = u.dev_point(q)
        d_star = u.distance_from_source(dev)
        assert d_star == pytest.approx(distance(octa, p, q), abs=1e-10)
        # every visible image is at least that far
        for i, d in u.visible_images(dev):
            assert d >= d_star - 1e-12


def test_fold_back_rejects_boundary(octa, fresh_rng):
    u = unfold(octa, octa.random_point(fresh_rng(5)))
    with pytest.raises(OutsidePolygon):
        u.fold_back(u.source_images[0])
    far = (1e6, 1e6)
    with pytest.raises(OutsidePolygon):
        u.fold_back(far)


def test_is_star_path_degenerate_and_crossing(octa, fresh_rng):
    u = unfold(octa, octa.random_point(fresh_rng(6)))
    inner = np.mean(u.polygon, axis=0)
    ctr = tuple(inner)
    if u.contains(ctr):
        assert u.is_star_path(ctr, ctr)
    # a segment between two non-adjacent reflex corners leaves the polygon
    cones = u.cone_images
    a = cones[0]
    b = cones[len(cones) // 2]
    mid = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
    if not u.contains(mid):
        assert not u.is_star_path(a, b)


def test_fold_segment_is_isometric(octa, fresh_rng):
    r = fresh_rng(7)
    u = unfold(octa, octa.random_point(r))
    for _ in range(5):
        a = u.dev_point(octa.random_point(r))[0]
        b = u.dev_point(octa.random_point(r))[0]
        if not (u.is_star_path(a, b) and u.contains(a) and u.contains(b)):
            continue
        pieces = u.fold_segment(a, b)
        total = sum(math.dist(p0, p1) for _, p0, p1 in pieces)
        assert total == pytest.approx(math.dist(a, b), rel=1e-6)
