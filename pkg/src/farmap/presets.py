"""Built-in surface generators covering the figure families."""

import math

import numpy as np

from .surface import build_from_vertices


def regular_octahedron():
    return build_from_vertices([
        (1, 0, 0), (-1, 0, 0),
        (0, 1, 0), (0, -1, 0),
        (0, 0, 1), (0, 0, -1),
    ])


def cube():
    h = 0.5
    return build_from_vertices([
        (sx * h, sy * h, sz * h)
        for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)
    ])


def antiprism(height):
    """Triangular antiprism: regular-triangle bases of circumradius 1 at
    z = +-height/2, the bottom base rotated by 60 degrees, so the vertex
    set is centrally symmetric. height = sqrt(2) gives the regular
    octahedron shape."""
    if height <= 0:
        raise ValueError("antiprism height must be positive")
    top = [(math.cos(a), math.sin(a), height / 2.0)
           for a in (math.pi / 2 + k * 2 * math.pi / 3 for k in range(3))]
    bottom = [(-x, -y, -z) for (x, y, z) in top]
    return build_from_vertices(top + bottom)


def perturbed_octahedron(seed, amplitude=0.12):
    """Octahedron with the three positive-axis vertices jittered and the
    perturbation mirrored, keeping central symmetry."""
    rng = np.random.default_rng(seed)
    base = np.eye(3)
    delta = rng.uniform(-amplitude, amplitude, size=(3, 3))
    plus = base + delta
    verts = np.vstack([plus, -plus])
    return build_from_vertices(verts)


def make(spec):
    """Parse a preset string like 'antiprism:h=1.2' into a surface."""
    name, _, args = spec.partition(":")
    kv = {}
    if args:
        for item in args.split(","):
            k, _, v = item.partition("=")
            kv[k] = v
    if name == "regular-octahedron":
        return regular_octahedron()
    if name == "cube":
        return cube()
    if name == "antiprism":
        return antiprism(float(kv.get("h", math.sqrt(2.0))))
    if name == "perturbed-octahedron":
        return perturbed_octahedron(int(kv.get("seed", 1)))
    raise ValueError(f"unknown preset {name!r}")
