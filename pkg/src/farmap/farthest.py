"""Farthest-point map f(p) = F(phi(p)) evaluated on the star unfolding.

Candidates are circumcenters of good triples of source images (interior
points with at least three minimizers back to the source) and the cone
points themselves; f(p) keeps whichever family realizes the larger
distance, or both on a tie.
"""

import math
from dataclasses import dataclass
from itertools import combinations

from .geom import circumcenter
from .star_unfold import unfold


@dataclass
class GoodTriple:
    indices: tuple      # three 0-based source-image indices
    center: tuple       # circumcenter in the star-polygon plane
    radius: float


@dataclass
class FarthestPoint:
    point: object       # SurfacePoint
    provenance: str     # "triple" | "cone"
    center: tuple       # planar image (triple) or cone image (cone)
    distance: float
    indices: tuple      # triple indices, or (image index,) for a cone


@dataclass
class FarthestResult:
    source: object          # phi(p), the unfolding source
    unfolding: object
    good: list              # all good triples
    m1: float
    m2: float
    radius: float
    points: list            # FarthestPoint entries, deduplicated

    def surface_points(self):
        return [fp.point for fp in self.points]

    def active_indices(self, fp, slack=None):
        """Source-image indices whose distance to fp's planar image is
        minimal and whose segment is a star path (the minimizers)."""
        u = self.unfolding
        if slack is None:
            slack = u.surface.eps_tie
        out = []
        for n, phi in enumerate(u.source_images):
            if math.dist(phi, fp.center) <= fp.distance + slack and \
                    u.is_star_path(fp.center, phi):
                out.append(n)
        return out


def triple_conditions(u, triple, *, eps=None, slack=None):
    """Good-triple test for one index triple; None when no circumcenter.

    slack loosens the minimality condition (condition 3): a visible image
    may undercut the triple's radius by up to slack before the triple stops
    being good. The strict evaluator uses float-noise slack; the curve
    validity filter passes its landing tolerance.
    """
    if eps is None:
        eps = 1e-9 * u.surface.chart_scale
    if slack is None:
        slack = 1e-12 * u.surface.chart_scale
    imgs = u.source_images
    i, j, k = triple
    c = circumcenter(imgs[i], imgs[j], imgs[k])
    if c is None:
        return None
    if not u.contains(c, clearance=eps):
        return None
    if not (u.is_star_path(c, imgs[i], eps)
            and u.is_star_path(c, imgs[j], eps)
            and u.is_star_path(c, imgs[k], eps)):
        return None
    r = math.dist(c, imgs[i])
    for n in range(u.n_images):
        if n in (i, j, k):
            continue
        if math.dist(c, imgs[n]) < r - slack and \
                u.is_star_path(c, imgs[n], eps):
            return None
    return GoodTriple((i, j, k), c, r)


def good_triples(u, eps=None):
    """All good triples of the unfolding, in lexicographic index order.

    Collinear image triples have no circumcenter and are skipped; centers
    on the polygon boundary (within eps) fail the interior condition.
    """
    out = []
    for triple in combinations(range(u.n_images), 3):
        g = triple_conditions(u, triple, eps=eps)
        if g is not None:
            out.append(g)
    return out


def evaluate_f(surface, p, *, eps_tie=None, budget=None, unfolding=None):
    """All farthest points from phi(p), with the radius d(p).

    Ties within eps_tie emit every candidate: f is genuinely multi-valued
    on the special curves and downstream classification needs the full set.
    """
    if eps_tie is None:
        eps_tie = surface.eps_tie
    if unfolding is None:
        source = surface.antipode(p)
        u = unfold(surface, source, eps_tie=eps_tie, budget=budget)
    else:
        u = unfolding
    gts = good_triples(u)
    m1 = max((g.radius for g in gts), default=-math.inf)
    m2 = max(c.length for c in u.cuts)
    radius = max(m1, m2)

    merge_tol = max(1e-9 * surface.chart_scale, 1e-3 * eps_tie)
    points = []
    if m1 >= m2 - eps_tie:
        centers = []
        for g in sorted(gts, key=lambda g: -g.radius):
            if g.radius < m1 - eps_tie:
                break
            dup = next((c for c in centers
                        if math.dist(c[0], g.center) < merge_tol), None)
            if dup is None:
                centers.append((g.center, g))
        for c, g in centers:
            pt = u.fold_back(c)
            points.append(FarthestPoint(surface.canonical(pt), "triple",
                                        c, g.radius, g.indices))
    if m2 >= m1 - eps_tie:
        for n, cut in enumerate(u.cuts):
            if cut.length >= m2 - eps_tie:
                pt = surface.vertex_point(cut.vid)
                points.append(FarthestPoint(pt, "cone", u.cone_images[n],
                                            cut.length, (n,)))
    return FarthestResult(u.source, u, gts, m1, m2, radius, points)


def radius(surface, p, **kwargs):
    """d(p): distance from p to its farthest points."""
    return evaluate_f(surface, p, **kwargs).radius


def write_batch_csv(surface, points, path, **kwargs):
    """Batch-evaluate f over points and dump one CSV row per input."""
    with open(path, "w") as fh:
        fh.write("face,u,v,radius,count,provenance\n")
        for p in points:
            res = evaluate_f(surface, p, **kwargs)
            prov = "+".join(sorted({fp.provenance for fp in res.points}))
            fh.write(f"{p.face},{p.u:.12g},{p.v:.12g},"
                     f"{res.radius:.12g},{len(res.points)},{prov}\n")
