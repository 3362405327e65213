"""Brute-force distance oracle: Dijkstra on a subdivided surface graph.

Graph nodes sit at dyadic points of the original triangulation edges
(level k puts 2**k + 1 nodes per edge); within every face all boundary
nodes are joined by straight chords, so a graph path is a genuine surface
path and the reported distance is always an upper bound on the true one.
Refining the level only adds nodes, so distances never increase.

The distance field is then extended to the full face lattice by relaxing
over the face's boundary nodes, which localizes the farthest point to one
subdivision cell.
"""

import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra as _sp_dijkstra


class OracleField:
    """Distances from one source on the subdivided mesh."""

    def __init__(self, surface, level, node_pos, node_face_uv, values,
                 mesh_edge):
        self.surface = surface
        self.level = level
        self.node_pos = node_pos          # node id -> (face, (u, v)) sample
        self.node_face_uv = node_face_uv  # same, kept per lattice node
        self.values = values              # node id -> distance upper bound
        self.mesh_edge = mesh_edge        # max subdivided edge length

    def max_value(self):
        return float(np.max(self.values))

    def argmax_point(self):
        from .surface import SurfacePoint
        i = int(np.argmax(self.values))
        f, (u, v) = self.node_face_uv[i]
        return SurfacePoint(f, u, v)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("node,face,u,v,distance\n")
            for i, (f, (u, v)) in enumerate(self.node_face_uv):
                fh.write(f"{i},{f},{u:.12g},{v:.12g},"
                         f"{self.values[i]:.12g}\n")


class _SubdividedGraph:
    """Boundary-node graph shared by all queries at one level."""

    def __init__(self, surface, level):
        self.surface = surface
        self.level = level
        n_seg = 2 ** level
        self.n_seg = n_seg
        node_id = {}
        coords = {}          # (face, node) -> uv  for faces that see it
        self.mesh_edge = 0.0

        def canon_edge(f, e):
            f2, e2, _ = surface.glue[(f, e)]
            return min((f, e), (f2, e2))

        for f in range(surface.n_faces):
            cs = surface.corners[f]
            for e in range(3):
                a = np.array(cs[e])
                b = np.array(cs[(e + 1) % 3])
                self.mesh_edge = max(self.mesh_edge,
                                     float(np.linalg.norm(b - a)) / n_seg)
                ce = canon_edge(f, e)
                flip = ce != (f, e)
                for k in range(n_seg + 1):
                    t = k / n_seg
                    key = (("v", surface.face_vids[f][e]) if k == 0 else
                           ("v", surface.face_vids[f][(e + 1) % 3])
                           if k == n_seg else
                           ("e", ce, n_seg - k if flip else k))
                    if key not in node_id:
                        node_id[key] = len(node_id)
                    nid = node_id[key]
                    coords.setdefault(f, {})[nid] = tuple(a + t * (b - a))
        self.node_id = node_id
        self.face_nodes = {f: sorted(coords[f]) for f in coords}
        self.face_node_uv = {
            f: np.array([coords[f][nid] for nid in self.face_nodes[f]])
            for f in coords}
        self.n_nodes = len(node_id)

        rows, cols, vals = [], [], []
        for f in range(surface.n_faces):
            ids = self.face_nodes[f]
            uv = self.face_node_uv[f]
            d = np.sqrt(((uv[:, None, :] - uv[None, :, :]) ** 2).sum(-1))
            for i in range(len(ids)):
                for j in range(i + 1, len(ids)):
                    rows.append(ids[i])
                    cols.append(ids[j])
                    vals.append(d[i, j])
        self.matrix_parts = (rows, cols, vals)

    def distances_from(self, p):
        """Dijkstra distances from surface point p to all boundary nodes."""
        surface = self.surface
        rows, cols, vals = (list(self.matrix_parts[0]),
                            list(self.matrix_parts[1]),
                            list(self.matrix_parts[2]))
        src = self.n_nodes
        faces = {p.face}
        kind, info = surface.classify(p)
        if kind == "edge":
            f2, _ = surface.transport(*info, p.uv)
            faces.add(f2)
        elif kind == "vertex":
            faces = {f for f, _ in surface.vertex_cycles[info]}
        for f in faces:
            if f == p.face:
                uv_p = np.array(p.uv)
            elif kind == "edge":
                _, uv2 = surface.transport(*info, p.uv)
                uv_p = np.array(uv2)
            else:
                c = [c for ff, c in surface.vertex_cycles[info] if ff == f][0]
                uv_p = np.array(surface.corners[f][c])
            uv = self.face_node_uv[f]
            d = np.sqrt(((uv - uv_p) ** 2).sum(-1))
            for i, nid in enumerate(self.face_nodes[f]):
                rows.append(src)
                cols.append(nid)
                vals.append(float(d[i]))
        n = self.n_nodes + 1
        mat = coo_matrix((vals, (rows, cols)), shape=(n, n))
        dist = _sp_dijkstra(mat, directed=False, indices=src)
        return dist[:self.n_nodes]


_GRAPH_CACHE = {}


def _graph(surface, level):
    key = (id(surface), level)
    if key not in _GRAPH_CACHE:
        _GRAPH_CACHE[key] = _SubdividedGraph(surface, level)
    return _GRAPH_CACHE[key]


def oracle_distance(surface, p, q, level):
    """Graph upper bound on dist(p, q): boundary-node Dijkstra from p plus
    one straight chord to q inside q's face(s); points sharing a face also
    get the direct chord."""
    g = _graph(surface, level)
    bdist = g.distances_from(p)
    faces = {q.face}
    kind, info = surface.classify(q)
    if kind == "edge":
        f2, _ = surface.transport(*info, q.uv)
        faces.add(f2)
    elif kind == "vertex":
        faces = {f for f, _ in surface.vertex_cycles[info]}
    best = math.inf
    gap = surface.chart_gap(p, q)
    if p.face in faces and gap is not None:
        best = gap
    for f in faces:
        if f == q.face:
            uv_q = np.array(q.uv)
        elif kind == "edge":
            _, uv2 = surface.transport(*info, q.uv)
            uv_q = np.array(uv2)
        else:
            c = [c for ff, c in surface.vertex_cycles[info] if ff == f][0]
            uv_q = np.array(surface.corners[f][c])
        uv = g.face_node_uv[f]
        d = np.sqrt(((uv - uv_q) ** 2).sum(-1))
        ids = g.face_nodes[f]
        best = min(best, float((d + bdist[ids]).min()))
    return best


def oracle_distance_field(surface, p, level):
    """Upper-bound distance field from p on the level-`level` lattice.

    Lattice nodes are the barycentric points (i, j)/2**level of every face;
    each value is min over the face's boundary nodes b of d(b) + |b - x|.
    """
    if level < 0:
        raise ValueError("subdivision level must be >= 0")
    g = _graph(surface, level)
    bdist = g.distances_from(p)

    n_seg = g.n_seg
    node_face_uv = []
    values = []
    for f in range(surface.n_faces):
        cs = np.array(surface.corners[f])
        ids = g.face_nodes[f]
        buv = g.face_node_uv[f]
        bd = bdist[ids]
        lat = []
        for i in range(n_seg + 1):
            for j in range(n_seg + 1 - i):
                b0 = i / n_seg
                b1 = j / n_seg
                lat.append(b0 * cs[0] + b1 * cs[1]
                           + (1 - b0 - b1) * cs[2])
        lat = np.array(lat)
        d = np.sqrt(((lat[:, None, :] - buv[None, :, :]) ** 2).sum(-1))
        vals = (d + bd[None, :]).min(axis=1)
        for kk, uv in enumerate(lat):
            node_face_uv.append((f, (float(uv[0]), float(uv[1]))))
            values.append(float(vals[kk]))
    values = np.array(values)
    return OracleField(surface, level, node_face_uv, node_face_uv, values,
                       g.mesh_edge)
