"""Star unfolding: cut along one minimizer from the source to every cone
point and develop the complement onto the plane.

The result is a simple 4N-gon (2(2N-1)-gon for a cone-point source) whose
vertices alternate between source images phi_1..phi_K and cone-point
images Dev(C_1)..Dev(C_K), with phi_n adjacent to Dev(C_n), Dev(C_{n+1}).
The polygon is assembled wedge by wedge: in the local frame of wedge n
(between consecutive cuts) the source image sits at the origin and both
bounding cuts lie at their (unwrapped) direction-atlas angles; consecutive
frames are chained through the shared cone-point image, where the polygon
interior angle equals the full cone angle.

Index 1 is anchored at the cut to the smallest cone-point id, so the
indexing is constant on each region of the cut-locus decomposition.
"""

import math
from dataclasses import dataclass

from .errors import CutDegeneracy, OutsidePolygon
from .geom import (Iso, dist_point_polygon_boundary, dist_point_seg,
                   point_in_polygon, polygon_signed_area,
                   seg_seg_proper_cross)
from .geodesics import DirectionAtlas, paths_to_cone_points, trace_ray
from .surface import TWO_PI


@dataclass
class Cut:
    vid: int          # cone point id
    length: float     # dist(source, C)
    angle: float      # raw atlas angle of the initial direction
    unwrapped: float  # monotone angle in [a_0, a_0 + theta_source]
    path: object      # GeodesicPath


class StarUnfolding:
    def __init__(self, surface, source, *, eps_tie=None, budget=None):
        self.surface = surface
        source = surface.canonical(source)
        self.source = source
        if eps_tie is None:
            eps_tie = surface.eps_tie
        kwargs = {"eps_tie": eps_tie}
        if budget is not None:
            kwargs["budget"] = budget
        self.atlas = DirectionAtlas(surface, source)
        self.theta_source = self.atlas.total

        tied = paths_to_cone_points(surface, source, **kwargs)
        cuts = []
        for vid, paths in tied.items():
            if not paths:
                raise CutDegeneracy(f"no minimizer to cone point {vid}")
            shortest = paths[0].length
            pick = min((g for g in paths if g.length <= shortest + eps_tie),
                       key=lambda g: g.init_t)
            cuts.append(Cut(vid, pick.length, pick.init_t, 0.0, pick))
        anchor_vid = min(c.vid for c in cuts)
        a0 = next(c.angle for c in cuts if c.vid == anchor_vid)
        theta = self.theta_source
        cuts.sort(key=lambda c: (c.angle - a0) % theta)
        for c in cuts:
            c.unwrapped = a0 + (c.angle - a0) % theta
        for i in range(len(cuts) - 1):
            if cuts[i + 1].unwrapped - cuts[i].unwrapped < 1e-12:
                raise CutDegeneracy(
                    f"cuts to cone points {cuts[i].vid} and "
                    f"{cuts[i + 1].vid} share a direction")
        self.cuts = cuts
        self.n_images = len(cuts)
        self._develop()

    # -- polygon assembly --------------------------------------------------

    def _develop(self):
        surface = self.surface
        cuts = self.cuts
        k = self.n_images
        theta = self.theta_source
        cone_theta = [surface.cone_points[surface.vid_to_cone[c.vid]].theta
                      for c in cuts]

        def local_cone(i, lift=False):
            ang = cuts[i].unwrapped + (theta if lift else 0.0)
            r = cuts[i].length
            return (r * math.cos(ang), r * math.sin(ang))

        wedges = [Iso.identity()]
        for n in range(k - 1):
            g = wedges[n]
            nxt = n + 1
            local_next = local_cone(nxt)
            p_img = g.apply(local_next)
            phi_n = g.apply((0.0, 0.0))
            r = cuts[nxt].length
            ux = (phi_n[0] - p_img[0]) / r
            uy = (phi_n[1] - p_img[1]) / r
            th = cone_theta[nxt]
            c, s = math.cos(th), math.sin(th)
            wx = c * ux - s * uy
            wy = s * ux + c * uy
            phi_next = (p_img[0] + r * wx, p_img[1] + r * wy)
            wedges.append(Iso.from_two_points(local_next, (0.0, 0.0),
                                              p_img, phi_next))
        self.wedges = wedges

        # closure: the last wedge predicts cone image 0 and source image 0
        g = wedges[-1]
        p_close = g.apply(local_cone(0, lift=True))
        r0 = cuts[0].length
        phi_last = g.apply((0.0, 0.0))
        ux = (phi_last[0] - p_close[0]) / r0
        uy = (phi_last[1] - p_close[1]) / r0
        th = cone_theta[0]
        c, s = math.cos(th), math.sin(th)
        phi0_check = (p_close[0] + r0 * (c * ux - s * uy),
                      p_close[1] + r0 * (s * ux + c * uy))
        dev0 = local_cone(0)
        tol = 1e-7 * surface.chart_scale * max(1.0, k)
        closure_err = max(math.dist(p_close, dev0),
                          math.dist(phi0_check, (0.0, 0.0)))
        if closure_err > tol:
            raise CutDegeneracy(
                f"unfolding failed to close (error {closure_err:.3g})")
        self.closure_error = closure_err

        self.source_images = [tuple(w.apply((0.0, 0.0))) for w in wedges]
        self.cone_images = [tuple(wedges[n].apply(local_cone(n)))
                            for n in range(k)]
        # index order [C_1, phi_1, C_2, phi_2, ...] walks the boundary
        # clockwise; store the reversal so the polygon is CCW
        poly = []
        for n in range(k):
            poly.append(self.cone_images[n])
            poly.append(self.source_images[n])
        self.polygon = poly[::-1]
        self.signed_area = polygon_signed_area(self.polygon)

    # -- geometric predicates ----------------------------------------------

    def contains(self, a, clearance=0.0):
        if not point_in_polygon(a, self.polygon):
            return False
        if clearance > 0.0:
            return dist_point_polygon_boundary(a, self.polygon) > clearance
        return True

    def is_star_path(self, a, b, eps=None):
        """Open segment (a, b) stays strictly inside the polygon.

        Endpoints may lie on the boundary (e.g. at source images). Segments
        grazing a polygon vertex within eps are rejected.
        """
        if eps is None:
            eps = 1e-9 * self.surface.chart_scale
        d = math.dist(a, b)
        if d < eps:
            return self.contains(a, clearance=0.0)
        mid = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
        if not point_in_polygon(mid, self.polygon):
            return False
        poly = self.polygon
        n = len(poly)
        for i in range(n):
            if seg_seg_proper_cross(a, b, poly[i], poly[(i + 1) % n], eps):
                return False
        for v in poly:
            if math.dist(v, a) < eps or math.dist(v, b) < eps:
                continue
            if dist_point_seg(v, a, b) < eps:
                return False
        return True

    # -- developing map and its inverse -------------------------------------

    def _wedge_of_unwrapped(self, t_bar):
        cuts = self.cuts
        for n in range(self.n_images - 1):
            if t_bar < cuts[n + 1].unwrapped:
                return max(n, 0)
        return self.n_images - 1

    def _lift_angle(self, t_raw):
        """Raw atlas angle -> monotone angle in [a_0, a_0 + theta)."""
        a0 = self.cuts[0].unwrapped
        return a0 + (t_raw - a0) % self.theta_source

    def _chart_to_polygon(self, wedge, lifted, final_iso):
        g = self.wedges[wedge]
        if lifted:
            g = g.compose(Iso.rotation(self.theta_source))
        return g.compose(final_iso)

    def dev_point(self, q, *, path=None):
        """Developed image of q plus the q-chart -> polygon transform.

        q must avoid the cut tree; the unique shortest path from the source
        carries the development."""
        from .geodesics import minimizers
        if path is None:
            cands = minimizers(self.surface, self.source, q)
            path = min(cands, key=lambda g: (g.length, g.init_t))
        t_bar = self._lift_angle(path.init_t)
        lifted = t_bar - path.init_t > 1e-9
        n = self._wedge_of_unwrapped(t_bar)
        t_chart = self._chart_to_polygon(n, lifted, path.final_transform)
        img = path.target_img
        if lifted:
            img = Iso.rotation(self.theta_source).apply(img)
        return self.wedges[n].apply(img), t_chart

    def visible_images(self, a, eps=None):
        """Indices i with [a, phi_i] a star path, with their distances."""
        out = []
        for i, phi in enumerate(self.source_images):
            if self.is_star_path(a, phi, eps):
                out.append((i, math.dist(a, phi)))
        return out

    def fold_back(self, a, *, eps=None, with_transform=False, index=None):
        """Surface point whose developed image is a (strictly inside)."""
        if not self.contains(a) or dist_point_polygon_boundary(
                a, self.polygon) < 1e-12 * self.surface.chart_scale:
            raise OutsidePolygon(f"{a} is not strictly inside the polygon")
        if index is None:
            vis = self.visible_images(a, eps)
            if not vis:
                raise OutsidePolygon(f"no source image sees {a}")
            i, d = min(vis, key=lambda t: t[1])
        else:
            i = index
            d = math.dist(a, self.source_images[i])
        v = self.wedges[i].inverse().apply(a)
        t_bar = math.atan2(v[1], v[0])
        lo = self.cuts[i].unwrapped
        hi = (self.cuts[i + 1].unwrapped if i + 1 < self.n_images
              else self.cuts[0].unwrapped + self.theta_source)
        while t_bar < lo - 1e-9:
            t_bar += TWO_PI
        t_bar = min(max(t_bar, lo), hi)
        t_raw = t_bar % self.theta_source
        pt, t_iso = trace_ray(self.surface, self.atlas, t_raw, d)
        if not with_transform:
            return pt
        lifted = abs(t_bar - t_raw) > 1e-9
        t_chart = self._chart_to_polygon(i, lifted, t_iso)
        return pt, t_chart

    def distance_from_source(self, a):
        vis = self.visible_images(a)
        if not vis:
            raise OutsidePolygon(f"no source image sees {a}")
        return min(d for _, d in vis)

    def fold_segment(self, a, b, *, max_pieces=200):
        """Surface polyline of the straight segment [a, b].

        The open segment must lie inside the polygon; endpoints may sit on
        the boundary only at cone images (where the folded curve ends at
        the cone point). Returns [(face, uv0, uv1), ...] per face crossed.
        """
        seg_len = math.dist(a, b)
        if seg_len == 0.0:
            return []
        delta = 1e-9
        pieces = []
        t = 0.0
        for _ in range(max_pieces):
            probe = min(t + delta, 0.5 * (t + 1.0))
            pa = (a[0] + probe * (b[0] - a[0]), a[1] + probe * (b[1] - a[1]))
            sp, t_chart = self.fold_back(pa, with_transform=True)
            inv = t_chart.inverse()
            ca = inv.apply(a)
            cb = inv.apply(b)
            s0, s1 = _clip_param_to_triangle(
                ca, cb, self.surface.corners[sp.face],
                1e-9 * self.surface.chart_scale)
            s0 = max(s0, t)
            if s1 <= s0 + delta:
                s1 = min(1.0, s0 + 2 * delta)
            p0 = (ca[0] + s0 * (cb[0] - ca[0]), ca[1] + s0 * (cb[1] - ca[1]))
            p1 = (ca[0] + s1 * (cb[0] - ca[0]), ca[1] + s1 * (cb[1] - ca[1]))
            pieces.append((sp.face, p0, p1))
            t = s1
            if t >= 1.0 - delta:
                return pieces
        raise OutsidePolygon("fold_segment exceeded its piece budget")


def _clip_param_to_triangle(a, b, tri, tol):
    """Parameter interval of segment a + s(b-a) inside the CCW triangle."""
    s0, s1 = 0.0, 1.0
    for e in range(3):
        p = tri[e]
        q = tri[(e + 1) % 3]
        ex, ey = q[0] - p[0], q[1] - p[1]
        ca = ex * (a[1] - p[1]) - ey * (a[0] - p[0])
        cb = ex * (b[1] - p[1]) - ey * (b[0] - p[0])
        # keep cross >= -tol (inside is to the left of each CCW edge)
        lim = -tol * math.hypot(ex, ey)
        if ca < lim and cb < lim:
            return (0.0, 0.0)
        if abs(cb - ca) < 1e-300:
            continue
        s_hit = (lim - ca) / (cb - ca)
        if ca < lim:
            s0 = max(s0, s_hit)
        elif cb < lim:
            s1 = min(s1, s_hit)
    return (s0, max(s0, s1))


def unfold(surface, source, **kwargs):
    """Build the star unfolding around `source` (phi(p) when evaluating f)."""
    return StarUnfolding(surface, source, **kwargs)
