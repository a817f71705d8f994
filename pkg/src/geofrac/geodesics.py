"""Congruence geometry for the uncracked field and separating geodesics.

The normalized conjugate (stream) function of the uncracked equilibrium
foliates the domain into congruence curves; its variation along a path
measures how many curves the path crosses, and the projection measure
collapses multiplicity.  The smallest set separating the two loaded
boundary components is computed exactly on the mesh metric as a minimum
cut on the triangle adjacency graph (separation is a cut property, which
stays correct on multiply-connected domains where path-based geodesics
fail), with the cut's primal edges forming the geodesic polyline.  Grip
boundary edges take part with their own lengths, so decohesion cracks
lying on the boundary compete on equal terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import maximum_flow
from scipy.spatial import cKDTree

from . import fem
from .errors import GeometryError, ParameterError
from .mesh import (BoundaryLabel, Mesh, boundary_chains, edge_to_triangles,
                   insert_slit, mean_edge_length, vertex_adjacency)
from .paths import CrackPath

# Quantization scale for integer max-flow capacities; selection between
# near-equal cuts is decided at this relative resolution.
_CAP_SCALE = 10 ** 6


@dataclass(frozen=True, eq=False)
class Congruence:
    """Normalized conjugate function on a (possibly cut) mesh.

    On multiply-connected domains the conjugate is multivalued; it is
    represented single-valued on a mesh cut along one ray, and ``period``
    holds the jump across the cut.  Level curves are the congruence.
    """

    mesh: Mesh
    ubar: np.ndarray
    delta: float
    period: float | None = None
    cr_residual: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def is_periodic(self) -> bool:
        return self.period is not None


def _bfs_vertex_path(mesh: Mesh, sources: np.ndarray, targets: set) -> list[int]:
    """Deterministic shortest-hop vertex path from any source to any target."""
    adj = vertex_adjacency(mesh)
    prev = {int(s): None for s in sources}
    queue = [int(s) for s in np.sort(sources)]
    while queue:
        v = queue.pop(0)
        if v in targets:
            path = []
            while v is not None:
                path.append(v)
                v = prev[v]
            return list(reversed(path))
        start, stop = adj.indptr[v], adj.indptr[v + 1]
        for w in sorted(int(x) for x in adj.indices[start:stop]):
            if w not in prev:
                prev[w] = v
                queue.append(w)
    raise GeometryError("boundary chains are not connected through the mesh")


def conjugate_field(mesh: Mesh, u: np.ndarray, delta: float) -> Congruence:
    """Least-squares conjugate of the uncracked equilibrium field.

    Fits a nodal field whose gradient matches the rotated, scaled gradient
    (1/delta) * (du/dy, -du/dx) per triangle, with one node pinned to 0.
    On a multiply-connected domain the mesh is first cut along one
    shortest vertex ray between boundary chains and the conjugate period
    is recovered from the jump across the cut.
    """
    if delta <= 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    u = fem.as_nodal_field(mesh, u)

    chains = boundary_chains(mesh)
    work = mesh
    period = None
    if len(chains) > 1:
        # cut every extra chain to the first one
        for extra in range(1, len(chains)):
            verts_extra = np.unique(mesh.boundary_edges[chains[extra]].ravel())
            verts_first = set(int(v) for v in
                              np.unique(mesh.boundary_edges[chains[0]].ravel()))
            vpath = _bfs_vertex_path(work, verts_extra, verts_first)
            coords = work.vertices[vpath]
            work = insert_slit(work, CrackPath.single(coords, closed=False))

    # extend u onto duplicated vertices (coordinates coincide)
    u_work = np.empty(work.n_vertices)
    u_work[: mesh.n_vertices] = u
    for a, b in work.slit_pairs:
        a, b = int(a), int(b)
        src, dst = (a, b) if b >= mesh.n_vertices else (b, a)
        u_work[dst] = u_work[src]

    g = fem.gradient(work, u_work)
    target = np.column_stack([g[:, 1], -g[:, 0]]) / delta

    geo = fem.tri_geometry(work)
    K = fem.stiffness_matrix(work)
    contrib = np.einsum("md,mkd->mk", target, geo.grads) * geo.areas[:, None]
    b = np.zeros(work.n_vertices)
    np.add.at(b, work.triangles, contrib)
    ubar = fem.solve_dirichlet(work, K, np.array([0]), np.array([0.0]), rhs=b)

    if work.slit_pairs.shape[0] > mesh.slit_pairs.shape[0]:
        new_pairs = work.slit_pairs[mesh.slit_pairs.shape[0]:]
        jumps = ubar[new_pairs[:, 0]] - ubar[new_pairs[:, 1]]
        period = float(abs(np.mean(jumps)))

    gbar = fem.gradient(work, ubar)
    resid = np.linalg.norm(gbar - target, axis=1)
    return Congruence(mesh=work, ubar=ubar, delta=float(delta),
                      period=period, cr_residual=resid)


# ---------------------------------------------------------------------------
# Point location and sampling
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _centroid_tree(mesh: Mesh):
    return cKDTree(fem.tri_geometry(mesh).centroids)


def _locate(mesh: Mesh, points: np.ndarray) -> np.ndarray:
    """Containing triangle per point (barycentric test with tolerance)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    tree = _centroid_tree(mesh)
    k = min(24, mesh.n_triangles)
    _, cand = tree.query(pts, k=k)
    cand = np.atleast_2d(cand)
    p = mesh.vertices
    t = mesh.triangles
    out = np.full(pts.shape[0], -1, dtype=int)
    # slightly negative tolerance: points on a curved analytic boundary may
    # fall just outside the polygonal mesh by the chord sagitta
    tol = -0.05
    for i, pt in enumerate(pts):
        for ti in cand[i]:
            tri = t[int(ti)]
            a, b, c = p[tri[0]], p[tri[1]], p[tri[2]]
            det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
            l1 = ((b[0] - pt[0]) * (c[1] - pt[1]) - (c[0] - pt[0]) * (b[1] - pt[1])) / det
            l2 = ((c[0] - pt[0]) * (a[1] - pt[1]) - (a[0] - pt[0]) * (c[1] - pt[1])) / det
            l3 = 1.0 - l1 - l2
            if l1 >= tol and l2 >= tol and l3 >= tol:
                out[i] = int(ti)
                break
        if out[i] < 0:
            raise GeometryError(f"point {pt} lies outside the meshed domain")
    return out


def _interpolate(mesh: Mesh, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    tids = _locate(mesh, pts)
    p = mesh.vertices
    t = mesh.triangles[tids]
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1])
    l1 = ((b[:, 0] - pts[:, 0]) * (c[:, 1] - pts[:, 1])
          - (c[:, 0] - pts[:, 0]) * (b[:, 1] - pts[:, 1])) / det
    l2 = ((c[:, 0] - pts[:, 0]) * (a[:, 1] - pts[:, 1])
          - (a[:, 0] - pts[:, 0]) * (c[:, 1] - pts[:, 1])) / det
    l3 = 1.0 - l1 - l2
    return l1 * values[t[:, 0]] + l2 * values[t[:, 1]] + l3 * values[t[:, 2]]


def _sampled_differences(congruence: Congruence, path: CrackPath):
    """Per micro-segment conjugate differences, branch-reduced when periodic."""
    h = mean_edge_length(congruence.mesh)
    diffs = []
    starts = []
    for p, q in path.segments():
        seg_len = float(np.linalg.norm(q - p))
        n = max(1, int(np.ceil(seg_len / (0.5 * h))))
        ts = np.linspace(0.0, 1.0, n + 1)
        pts = p[None, :] + ts[:, None] * (q - p)[None, :]
        vals = _interpolate(congruence.mesh, congruence.ubar, pts)
        d = np.diff(vals)
        if congruence.is_periodic and congruence.period > 0:
            d = d - congruence.period * np.round(d / congruence.period)
        diffs.append(d)
        starts.append(vals[:-1])
    if diffs:
        return np.concatenate(diffs), np.concatenate(starts)
    return np.empty(0), np.empty(0)


def variation_over(congruence: Congruence, path: CrackPath) -> float:
    """Total variation of the conjugate along a path (congruence curves crossed)."""
    if path.is_empty:
        return 0.0
    d, _ = _sampled_differences(congruence, path)
    return float(np.sum(np.abs(d)))


def project_onto(congruence: Congruence, path: CrackPath,
                 target: BoundaryLabel = BoundaryLabel.GAMMA_U2) -> float:
    """Conjugate measure of the projection of ``path`` along the congruence.

    The projection onto the target grip collapses multiplicity, so the
    result is the measure of the union of conjugate values covered; it
    never exceeds the variation along the path itself.
    """
    if congruence.mesh.edges_with_label(target).shape[0] == 0:
        raise ParameterError(f"mesh has no boundary labeled {target.name}")
    if path.is_empty:
        return 0.0
    d, starts = _sampled_differences(congruence, path)
    if d.size == 0:
        return 0.0
    lo = np.minimum(starts, starts + d)
    hi = np.maximum(starts, starts + d)
    if not congruence.is_periodic:
        return _union_measure(np.column_stack([lo, hi]))
    P = congruence.period
    if P <= 0:
        return 0.0
    arcs = []
    for a, b in zip(lo % P, (hi - lo)):
        if b >= P:
            return P
        end = a + b
        if end <= P:
            arcs.append((a, end))
        else:
            arcs.append((a, P))
            arcs.append((0.0, end - P))
    return min(P, _union_measure(np.array(arcs)))


def _union_measure(intervals: np.ndarray) -> float:
    if intervals.size == 0:
        return 0.0
    order = np.argsort(intervals[:, 0])
    total = 0.0
    cur_lo, cur_hi = intervals[order[0]]
    for lo, hi in intervals[order[1:]]:
        if lo > cur_hi:
            total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    total += cur_hi - cur_lo
    return float(total)


# ---------------------------------------------------------------------------
# Separating geodesic by minimum cut
# ---------------------------------------------------------------------------

def separating_geodesic(mesh: Mesh, edge_weights: np.ndarray | None = None) -> CrackPath:
    """Minimum-length discrete set separating GAMMA_U1 from GAMMA_U2.

    Runs a max-flow/min-cut on the triangle adjacency graph; interior dual
    arcs carry the primal edge length, terminal arcs carry the grip edge
    lengths (so boundary decohesion competes).  Ties resolve toward the
    GAMMA_U1 side (the residual-BFS minimal source set), which makes the
    rectangle degeneracy pick the lowest horizontal line deterministically.

    ``edge_weights`` optionally multiplies interior edge lengths (used by
    the phase-field crack extractor to bias the cut through low-z bands).
    """
    gu1 = mesh.edges_with_label(BoundaryLabel.GAMMA_U1)
    gu2 = mesh.edges_with_label(BoundaryLabel.GAMMA_U2)
    if gu1.shape[0] == 0 or gu2.shape[0] == 0:
        raise ParameterError("separating geodesic needs both GAMMA_U1 and GAMMA_U2 labels")

    e2t = edge_to_triangles(mesh)
    p = mesh.vertices
    m = mesh.n_triangles
    source, sink = m, m + 1

    interior = [(key, tris) for key, tris in e2t.items() if len(tris) == 2]
    keys = np.array([k for k, _ in interior], dtype=np.int64)
    pairs = np.array([t for _, t in interior], dtype=np.int64)
    lengths = np.linalg.norm(p[keys[:, 0]] - p[keys[:, 1]], axis=1)
    weights = dict(edge_weights) if edge_weights is not None else {}
    if weights:
        lengths = lengths * np.array([weights.get((int(a), int(b)), 1.0) for a, b in keys])

    rows, cols, caps = [], [], []
    wall_of_arc = {}

    def add_arc(u, v, cap, wall):
        rows.append(u)
        cols.append(v)
        caps.append(cap)
        wall_of_arc.setdefault((u, v), []).append(wall)

    scale = _CAP_SCALE / max(lengths.max(initial=1.0), 1e-30)
    for (a, b), (t1, t2), ln in zip(keys, pairs, lengths):
        cap = max(1, int(round(ln * scale)))
        add_arc(int(t1), int(t2), cap, (int(a), int(b)))
        add_arc(int(t2), int(t1), cap, (int(a), int(b)))

    def terminal(edges, from_source):
        for i, j in edges:
            key = (int(i), int(j)) if i < j else (int(j), int(i))
            owners = e2t.get(key, [])
            if not owners:
                continue  # already-detached grip edges cannot be cut again
            ln = float(np.linalg.norm(p[key[0]] - p[key[1]])) * weights.get(key, 1.0)
            cap = max(1, int(round(ln * scale)))
            t = owners[0]
            if from_source:
                add_arc(source, int(t), cap, key)
            else:
                add_arc(int(t), sink, cap, key)

    terminal(gu1, from_source=True)
    terminal(gu2, from_source=False)

    graph = coo_matrix((np.array(caps, dtype=np.int32),
                        (np.array(rows), np.array(cols))),
                       shape=(m + 2, m + 2)).tocsr()
    result = maximum_flow(graph, source, sink)
    residual = graph - result.flow

    # minimal source side: BFS over positive residual capacities
    reachable = np.zeros(m + 2, dtype=bool)
    reachable[source] = True
    stack = [source]
    indptr, indices, data = residual.indptr, residual.indices, residual.data
    while stack:
        v = stack.pop()
        for idx in range(indptr[v], indptr[v + 1]):
            w = indices[idx]
            if data[idx] > 0 and not reachable[w]:
                reachable[w] = True
                stack.append(w)

    walls = set()
    coo = graph.tocoo()
    for u, v in zip(coo.row, coo.col):
        if reachable[u] and not reachable[v]:
            for wall in wall_of_arc.get((int(u), int(v)), []):
                walls.add(wall)

    return _edges_to_path(mesh, sorted(walls))


def _edges_to_path(mesh: Mesh, edges) -> CrackPath:
    """Chain a set of primal mesh edges into polylines."""
    if not edges:
        return CrackPath.empty()
    p = mesh.vertices
    incident: dict = {}
    for e in edges:
        for v in e:
            incident.setdefault(v, []).append(e)
    remaining = set(edges)
    chains, closed_flags = [], []

    def walk(start_v, first_edge):
        seq = [start_v]
        v, e = start_v, first_edge
        while True:
            remaining.discard(e)
            v = e[1] if e[0] == v else e[0]
            seq.append(v)
            nxt = [x for x in incident[v] if x in remaining]
            if not nxt:
                return seq
            e = nxt[0]

    # open chains first (endpoints have odd degree)
    endpoints = sorted(v for v, es in incident.items() if len(es) % 2 == 1)
    for v in endpoints:
        starts = [e for e in incident[v] if e in remaining]
        for e in starts:
            if e not in remaining:
                continue
            seq = walk(v, e)
            chains.append(p[np.array(seq)])
            closed_flags.append(False)
    while remaining:
        e = min(remaining)
        seq = walk(e[0], e)
        closed = seq[0] == seq[-1]
        chains.append(p[np.array(seq)])
        closed_flags.append(closed)

    return CrackPath(tuple(chains), tuple(closed_flags))


def geodesic_summary(mesh: Mesh, path: CrackPath) -> dict:
    """Length and endpoint labels, for the JSON export."""
    labels = []
    p = mesh.vertices
    tol = 1e-8 * max(1.0, mean_edge_length(mesh))
    for chain, closed in zip(path.chains, path.closed):
        if closed:
            labels.append(["closed", "closed"])
            continue
        ends = []
        for pt in (chain[0], chain[-1]):
            found = "interior"
            for (i, j), lab in zip(mesh.boundary_edges, mesh.boundary_labels):
                a, b = p[int(i)], p[int(j)]
                d = b - a
                t = np.clip(np.dot(pt - a, d) / np.dot(d, d), 0.0, 1.0)
                if np.linalg.norm(pt - (a + t * d)) <= tol:
                    found = BoundaryLabel(int(lab)).name.lower()
                    break
            ends.append(found)
        labels.append(ends)
    return {
        "length": path.length(),
        "n_chains": path.n_chains,
        "closed": list(path.closed),
        "endpoint_labels": labels,
    }
