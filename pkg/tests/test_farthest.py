import math

import numpy as np
import pytest

from farmap.farthest import (evaluate_f, good_triples, radius,
                             triple_conditions, write_batch_csv)
from farmap.geodesics import distance, minimizers
from farmap.oracle import oracle_distance_field
from farmap.star_unfold import unfold
from farmap.surface import SurfacePoint


def test_good_triple_bound(octa, cube, perturbed, fresh_rng):
    r = fresh_rng(0)
    for s in (octa, cube, perturbed):
        bound = s.n_cone_points - 2
        for _ in range(8):
            u = unfold(s, s.random_point(r))
            gts = good_triples(u)
            assert len(gts) <= bound


def test_good_triple_conditions_enforced(octa, fresh_rng):
    r = fresh_rng(1)
    u = unfold(octa, octa.random_point(r))
    for g in good_triples(u):
        assert u.contains(g.center, clearance=0.5 * octa.eps_geom)
        i, j, k = g.indices
        for idx in (i, j, k):
            assert u.is_star_path(g.center, u.source_images[idx])
            assert math.dist(g.center, u.source_images[idx]) == \
                pytest.approx(g.radius, abs=1e-9)
        for n in range(u.n_images):
            if n in g.indices:
                continue
            if u.is_star_path(g.center, u.source_images[n]):
                assert math.dist(g.center, u.source_images[n]) >= \
                    g.radius - 1e-9


def test_good_triple_radius_matches_surface_distance(perturbed, fresh_rng):
    r = fresh_rng(2)
    u = unfold(perturbed, perturbed.random_point(r))
    for g in good_triples(u):
        q = u.fold_back(g.center)
        d = distance(perturbed, u.source, q)
        assert d == pytest.approx(g.radius, abs=1e-9)


def test_evaluate_f_vs_oracle(octa, perturbed, fresh_rng):
    r = fresh_rng(3)
    for s in (octa, perturbed):
        for _ in range(3):
            p = s.random_point(r)
            res = evaluate_f(s, p)
            fld = oracle_distance_field(s, res.source, 5)
            # oracle max is a lattice upper-bound field; its max cannot
            # undershoot the radius by more than one cell
            assert fld.max_value() >= res.radius - 2 * fld.mesh_edge
            assert res.radius >= fld.max_value() - 2 * fld.mesh_edge
            amax = fld.argmax_point()
            gap = min(distance(s, amax, fp.point) for fp in res.points)
            assert gap <= 2 * fld.mesh_edge


def test_radius_properties(octa, fresh_rng):
    r = fresh_rng(4)
    for _ in range(10):
        p = octa.random_point(r)
        assert radius(octa, p) == pytest.approx(
            radius(octa, octa.antipode(p)), abs=1e-9)
        res = evaluate_f(octa, p)
        assert res.radius >= max(c.length for c in res.unfolding.cuts) - 1e-12
        assert res.radius > 0


def test_vertex_source_evaluation(octa):
    for vid in range(6):
        p = octa.vertex_point(vid)
        res = evaluate_f(octa, p)
        assert res.unfolding.n_images == 5
        fld = oracle_distance_field(octa, res.source, 5)
        assert abs(res.radius - fld.max_value()) <= 2 * fld.mesh_edge


def test_farthest_points_have_three_minimizers(perturbed, fresh_rng):
    r = fresh_rng(5)
    for _ in range(5):
        p = perturbed.random_point(r)
        res = evaluate_f(perturbed, p)
        for fp in res.points:
            if fp.provenance != "triple":
                continue
            paths = minimizers(perturbed, res.source, fp.point)
            assert len(paths) >= 3


def test_farthest_point_uniqueness_consequence(perturbed, fresh_rng):
    """A non-cone point is farthest from at most one source."""
    r = fresh_rng(6)
    for _ in range(4):
        p1 = perturbed.random_point(r)
        p2 = perturbed.random_point(r)
        res1 = evaluate_f(perturbed, p1)
        res2 = evaluate_f(perturbed, p2)
        d12 = distance(perturbed, p1, p2)
        if d12 < 1e-3:
            continue
        for fp1 in res1.points:
            for fp2 in res2.points:
                if fp1.provenance == fp2.provenance == "triple":
                    gap = distance(perturbed, fp1.point, fp2.point)
                    assert gap > perturbed.eps_geom


def test_face_center_is_fixed_point(octa):
    """The face center of the regular octahedron is a generalized fixed
    point: every triple ties there and all circumcenters coincide on it."""
    f = 0
    c = np.mean(octa.corners[f], axis=0)
    p = SurfacePoint(f, c[0], c[1])
    res = evaluate_f(octa, p)
    assert len(res.points) == 1
    fp = res.points[0]
    gap = distance(octa, p, fp.point)
    assert gap < 1e-9
    # the antipodal pair is joined by many minimizers at this point
    assert len(res.active_indices(fp)) == 6


def test_multi_valued_across_branch_jump(octa):
    """Bisect onto the multi-valued curve: between the face center and a
    corner the selected farthest point jumps branches, and exactly at the
    crossing both branches tie within eps_tie."""
    f = 0
    c = np.mean(octa.corners[f], axis=0)
    a = np.array([c[0], c[1]])
    b = np.array(octa.corners[f][0]) * 0.55 + a * 0.45

    def fpt(t):
        xy = a + t * (b - a)
        res = evaluate_f(octa, SurfacePoint(f, xy[0], xy[1]))
        fp = max(res.points, key=lambda q: q.distance)
        return np.array([fp.point.u, fp.point.v]), res

    lo, hi = 0.40, 0.45
    ref_lo, _ = fpt(lo)
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        cur, _ = fpt(mid)
        if np.linalg.norm(cur - ref_lo) < 0.05:
            lo = mid
            ref_lo = cur
        else:
            hi = mid
    _, res = fpt(0.5 * (lo + hi))
    assert len(res.points) >= 2
    for fp in res.points:
        assert fp.distance == pytest.approx(res.radius, abs=octa.eps_tie)
    # distinct farthest points genuinely far apart (multi-valued, not a tie
    # of coincident circumcenters)
    pts = res.points
    assert max(distance(octa, pts[0].point, fp.point)
               for fp in pts[1:]) > 0.01


def test_triple_conditions_slack(octa, fresh_rng):
    u = unfold(octa, octa.random_point(fresh_rng(7)))
    gts = good_triples(u)
    for g in gts:
        assert triple_conditions(u, g.indices) is not None
        assert triple_conditions(u, g.indices, slack=1e-3) is not None


def test_batch_csv(tmp_path, octa, fresh_rng):
    r = fresh_rng(8)
    pts = [octa.random_point(r) for _ in range(5)]
    out = tmp_path / "batch.csv"
    write_batch_csv(octa, pts, out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "face,u,v,radius,count,provenance"
    assert len(lines) == 6
