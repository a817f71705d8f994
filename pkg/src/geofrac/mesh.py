"""Triangulated 2D domains with labeled boundaries and internal slits.

Meshes are immutable; construction functions are pure, so meshes can be
shared freely between threads.  Two structured generators are provided
(annulus and rectangle, both mapped grids split into triangles, which keeps
every example bit-reproducible) plus slit insertion by node duplication:
the two faces of a crack become topologically disconnected while vertex
coordinates and triangle areas are untouched.  A plain-text export/import
format covers generic polygons with holes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from functools import lru_cache

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import GeometryError, ParameterError

# Snap tolerance for slit insertion, relative to the domain diameter:
# below discretization error, above floating-point noise.
SNAP_REL_TOL = 1.0e-8


class BoundaryLabel(IntEnum):
    GAMMA_U1 = 1
    GAMMA_U2 = 2
    GAMMA_F = 3
    CRACK_FACE = 4


_LABEL_NAMES = {
    BoundaryLabel.GAMMA_U1: "gamma_u1",
    BoundaryLabel.GAMMA_U2: "gamma_u2",
    BoundaryLabel.GAMMA_F: "gamma_f",
    BoundaryLabel.CRACK_FACE: "crack_face",
}
_LABEL_FROM_NAME = {v: k for k, v in _LABEL_NAMES.items()}


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable triangulated domain.

    Attributes
    ----------
    vertices : (n, 2) float array
    triangles : (m, 3) int array, counter-clockwise (positive signed area)
    boundary_edges : (k, 2) int array
        Oriented so the adjacent triangle lies on the left.  Slit insertion
        may leave "detached" boundary edges that bound no triangle (the
        grip side of a decohesion crack); these keep their original label.
    boundary_labels : (k,) int array of BoundaryLabel values
    slit_pairs : (s, 2) int array
        Pairs of duplicated vertex indices; both share coordinates exactly.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_labels: np.ndarray
    slit_pairs: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.ascontiguousarray(self.vertices, dtype=float))
        object.__setattr__(self, "triangles", np.ascontiguousarray(self.triangles, dtype=np.int64))
        object.__setattr__(self, "boundary_edges", np.ascontiguousarray(self.boundary_edges, dtype=np.int64).reshape(-1, 2))
        object.__setattr__(self, "boundary_labels", np.ascontiguousarray(self.boundary_labels, dtype=np.int64))
        object.__setattr__(self, "slit_pairs", np.ascontiguousarray(self.slit_pairs, dtype=np.int64).reshape(-1, 2))
        for arr in (self.vertices, self.triangles, self.boundary_edges, self.boundary_labels, self.slit_pairs):
            arr.flags.writeable = False

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def edges_with_label(self, label: BoundaryLabel) -> np.ndarray:
        return self.boundary_edges[self.boundary_labels == int(label)]

    def vertices_with_label(self, label: BoundaryLabel) -> np.ndarray:
        edges = self.edges_with_label(label)
        return np.unique(edges.ravel())


# ---------------------------------------------------------------------------
# Derived geometry (cached per mesh object; meshes are immutable)
# ---------------------------------------------------------------------------

def signed_areas(mesh: Mesh) -> np.ndarray:
    p = mesh.vertices
    t = mesh.triangles
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                  - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))


@lru_cache(maxsize=256)
def edge_to_triangles(mesh: Mesh) -> dict:
    """Map frozen (i, j) vertex pairs (i < j) to the list of adjacent triangles."""
    out: dict = {}
    for ti, tri in enumerate(mesh.triangles):
        for k in range(3):
            a, b = int(tri[k]), int(tri[(k + 1) % 3])
            key = (a, b) if a < b else (b, a)
            out.setdefault(key, []).append(ti)
    return out


@lru_cache(maxsize=256)
def vertex_adjacency(mesh: Mesh):
    """Sparse symmetric vertex adjacency built from triangle edges."""
    t = mesh.triangles
    i = np.concatenate([t[:, 0], t[:, 1], t[:, 2]])
    j = np.concatenate([t[:, 1], t[:, 2], t[:, 0]])
    n = mesh.n_vertices
    data = np.ones(i.shape[0])
    adj = coo_matrix((data, (i, j)), shape=(n, n))
    return (adj + adj.T).tocsr()


def vertex_components(mesh: Mesh) -> np.ndarray:
    """Connected-component id per vertex (isolated vertices get their own)."""
    _, labels = connected_components(vertex_adjacency(mesh), directed=False)
    return labels


@lru_cache(maxsize=256)
def mean_edge_length(mesh: Mesh) -> float:
    keys = np.array(list(edge_to_triangles(mesh).keys()), dtype=np.int64)
    p = mesh.vertices
    return float(np.mean(np.linalg.norm(p[keys[:, 0]] - p[keys[:, 1]], axis=1)))


def domain_diameter(mesh: Mesh) -> float:
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    return float(np.linalg.norm(hi - lo))


def boundary_chains(mesh: Mesh) -> list[np.ndarray]:
    """Group boundary edges into chains; returns lists of boundary-edge indices.

    Chains are maximal edge runs connected through shared endpoints.  Closed
    chains (loops) and open runs (between crack tips) are both returned.
    """
    edges = mesh.boundary_edges
    n_edges = edges.shape[0]
    by_vertex: dict = {}
    for ei in range(n_edges):
        for v in edges[ei]:
            by_vertex.setdefault(int(v), []).append(ei)
    seen = np.zeros(n_edges, dtype=bool)
    chains = []
    for start in range(n_edges):
        if seen[start]:
            continue
        # flood the whole connected run of edges
        stack = [start]
        members = []
        seen[start] = True
        while stack:
            ei = stack.pop()
            members.append(ei)
            for v in edges[ei]:
                for other in by_vertex[int(v)]:
                    if not seen[other]:
                        seen[other] = True
                        stack.append(other)
        chains.append(np.array(sorted(members), dtype=np.int64))
    return chains


def labeled_chains(mesh: Mesh) -> list[tuple[BoundaryLabel, np.ndarray]]:
    """Boundary chains split by label: maximal connected same-label edge runs."""
    out = []
    for label in np.unique(mesh.boundary_labels):
        sub_idx = np.flatnonzero(mesh.boundary_labels == label)
        sub = Mesh(mesh.vertices, mesh.triangles,
                   mesh.boundary_edges[sub_idx], mesh.boundary_labels[sub_idx])
        for chain in boundary_chains(sub):
            out.append((BoundaryLabel(int(label)), sub_idx[chain]))
    return out


def chain_length(mesh: Mesh, edge_indices: np.ndarray) -> float:
    e = mesh.boundary_edges[edge_indices]
    p = mesh.vertices
    return float(np.sum(np.linalg.norm(p[e[:, 0]] - p[e[:, 1]], axis=1)))


def validate_mesh(mesh: Mesh) -> None:
    """Raise GeometryError if any Mesh invariant is violated."""
    if np.any(signed_areas(mesh) <= 0):
        raise GeometryError("mesh has non-positive triangle areas")
    e2t = edge_to_triangles(mesh)
    listed = {(int(a), int(b)) if a < b else (int(b), int(a))
              for a, b in mesh.boundary_edges}
    for key, tris in e2t.items():
        if len(tris) == 1 and key not in listed:
            raise GeometryError(f"boundary edge {key} has no label")
        if len(tris) > 2:
            raise GeometryError(f"edge {key} shared by {len(tris)} triangles")
    if mesh.boundary_labels.shape[0] != mesh.boundary_edges.shape[0]:
        raise GeometryError("boundary labels do not match boundary edges")
    if mesh.slit_pairs.size:
        pa = mesh.vertices[mesh.slit_pairs[:, 0]]
        pb = mesh.vertices[mesh.slit_pairs[:, 1]]
        if not np.array_equal(pa, pb):
            raise GeometryError("slit pair vertices do not share coordinates")


# ---------------------------------------------------------------------------
# Structured generators
# ---------------------------------------------------------------------------

def build_annulus(r: float, R: float, n_radial: int, n_angular: int) -> Mesh:
    """Structured polar-grid annulus B(0,R) \\ B(0,r).

    The outer circle is labeled GAMMA_U1, the inner circle GAMMA_U2; there
    are no free (GAMMA_F) edges.  Each of the ``n_radial`` ring layers holds
    ``2 * n_angular`` triangles.
    """
    if not (0 < r < R):
        raise ParameterError(f"annulus radii must satisfy 0 < r < R, got r={r}, R={R}")
    if n_radial < 2 or n_angular < 8:
        raise ParameterError(
            f"annulus resolution must satisfy n_radial >= 2 and n_angular >= 8, "
            f"got {n_radial}, {n_angular}")

    radii = np.linspace(r, R, n_radial + 1)
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    rho, th = np.meshgrid(radii, theta, indexing="ij")
    verts = np.column_stack([(rho * np.cos(th)).ravel(), (rho * np.sin(th)).ravel()])

    def vid(i, j):
        return i * n_angular + (j % n_angular)

    tris = []
    for i in range(n_radial):
        for j in range(n_angular):
            a = vid(i, j)
            b = vid(i + 1, j)
            c = vid(i + 1, j + 1)
            d = vid(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))

    edges = []
    labels = []
    for j in range(n_angular):  # inner circle, GAMMA_U2
        edges.append((vid(0, j), vid(0, j + 1)))
        labels.append(int(BoundaryLabel.GAMMA_U2))
    for j in range(n_angular):  # outer circle, GAMMA_U1
        edges.append((vid(n_radial, j), vid(n_radial, j + 1)))
        labels.append(int(BoundaryLabel.GAMMA_U1))

    return Mesh(verts, np.array(tris), np.array(edges), np.array(labels))


def build_rectangle(a: float, L: float, nx: int, ny: int) -> Mesh:
    """Structured grid on (0,a) x (0,L), each cell split along one diagonal.

    Bottom edge GAMMA_U1, top edge GAMMA_U2, left and right edges GAMMA_F.
    """
    if a <= 0 or L <= 0:
        raise ParameterError(f"rectangle dimensions must be positive, got a={a}, L={L}")
    if nx < 2 or ny < 2:
        raise ParameterError(f"rectangle resolution must satisfy nx, ny >= 2, got {nx}, {ny}")

    xs = np.linspace(0.0, a, nx + 1)
    ys = np.linspace(0.0, L, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            p00 = vid(i, j)
            p10 = vid(i + 1, j)
            p11 = vid(i + 1, j + 1)
            p01 = vid(i, j + 1)
            tris.append((p00, p10, p11))
            tris.append((p00, p11, p01))

    edges = []
    labels = []
    for i in range(nx):  # bottom, GAMMA_U1
        edges.append((vid(i, 0), vid(i + 1, 0)))
        labels.append(int(BoundaryLabel.GAMMA_U1))
    for j in range(ny):  # right, GAMMA_F
        edges.append((vid(nx, j), vid(nx, j + 1)))
        labels.append(int(BoundaryLabel.GAMMA_F))
    for i in range(nx):  # top, GAMMA_U2
        edges.append((vid(nx - i, ny), vid(nx - i - 1, ny)))
        labels.append(int(BoundaryLabel.GAMMA_U2))
    for j in range(ny):  # left, GAMMA_F
        edges.append((vid(0, ny - j), vid(0, ny - j - 1)))
        labels.append(int(BoundaryLabel.GAMMA_F))

    return Mesh(verts, np.array(tris), np.array(edges), np.array(labels))


# ---------------------------------------------------------------------------
# Slit insertion
# ---------------------------------------------------------------------------

def _snap_chain(mesh: Mesh, points: np.ndarray, closed: bool, tol: float) -> list[int]:
    """Snap a polyline onto a run of mesh vertices connected by mesh edges."""
    kd = cKDTree(mesh.vertices)
    dist, idx = kd.query(points)
    if np.any(dist > tol):
        worst = int(np.argmax(dist))
        raise GeometryError(
            f"slit path point {points[worst]} is {dist[worst]:.3e} away from the "
            f"nearest mesh vertex (tolerance {tol:.3e}); path not alignable")
    snapped = [int(v) for v in idx]
    # collapse consecutive duplicates
    chain = [snapped[0]]
    for v in snapped[1:]:
        if v != chain[-1]:
            chain.append(v)
    if closed and chain[0] != chain[-1]:
        chain.append(chain[0])

    e2t = edge_to_triangles(mesh)
    adj = vertex_adjacency(mesh)
    full: list[int] = [chain[0]]
    p = mesh.vertices
    for va, vb in zip(chain[:-1], chain[1:]):
        key = (va, vb) if va < vb else (vb, va)
        if key in e2t:
            full.append(vb)
            continue
        # straight run of collinear edges between va and vb
        pa, pb = p[va], p[vb]
        seg = pb - pa
        seg_len = np.linalg.norm(seg)
        d = p - pa
        t = np.clip((d @ seg) / (seg_len ** 2), 0.0, 1.0)
        perp = np.linalg.norm(d - t[:, None] * seg, axis=1)
        on_seg = np.flatnonzero(perp <= tol)
        allowed = set(int(v) for v in on_seg)
        if va not in allowed or vb not in allowed:
            raise GeometryError("slit path segment endpoints not on the mesh")
        # breadth-first walk restricted to vertices on the segment
        order = {va: None}
        queue = [va]
        found = False
        while queue and not found:
            v = queue.pop(0)
            start, stop = adj.indptr[v], adj.indptr[v + 1]
            for w in adj.indices[start:stop]:
                w = int(w)
                if w in allowed and w not in order:
                    order[w] = v
                    if w == vb:
                        found = True
                        break
                    queue.append(w)
        if not found:
            raise GeometryError(
                f"slit path segment from {pa} to {pb} cannot be traced along mesh edges")
        run = []
        v = vb
        while v != va:
            run.append(v)
            v = order[v]
        full.extend(reversed(run))
    return full


def _chain_edges(chain: list[int], closed: bool) -> list[tuple[int, int]]:
    pairs = list(zip(chain[:-1], chain[1:]))
    return pairs


def insert_slit(mesh: Mesh, path) -> Mesh:
    """Duplicate nodes along ``path`` so the two crack faces disconnect.

    The path must follow mesh edges (vertices snap within
    ``SNAP_REL_TOL * diameter``).  Interior paths produce a standard slit
    with two CRACK_FACE boundary runs; paths along existing boundary edges
    model decohesion: the body side gets a free CRACK_FACE boundary while
    the original (grip-side) edges keep their label and detach from the
    triangulation.  Coordinates and triangle areas never change.
    """
    from .paths import CrackPath  # local import to avoid a cycle

    if path is None or (isinstance(path, CrackPath) and path.is_empty):
        return mesh

    tol = SNAP_REL_TOL * domain_diameter(mesh)
    existing_slit_verts = set(int(v) for v in mesh.slit_pairs.ravel())

    chains = []
    for coords, closed in zip(path.chains, path.closed):
        chain = _snap_chain(mesh, np.asarray(coords, dtype=float), closed, tol)
        if len(set(chain)) < 2:
            raise GeometryError("slit chain has fewer than two distinct vertices")
        if existing_slit_verts.intersection(chain):
            raise GeometryError("slit path crosses an existing slit")
        chains.append((chain, closed))

    used = set()
    for chain, _ in chains:
        body = set(chain)
        if used & body:
            raise GeometryError("slit chains share vertices; insert them separately")
        used |= body

    verts = [tuple(v) for v in mesh.vertices]
    tris = mesh.triangles.copy()
    slit_pairs = [tuple(sp) for sp in mesh.slit_pairs]

    # track labeled boundary edges through the surgery via (triangle, slot);
    # edges bounding no triangle are carried over verbatim.
    e2t = edge_to_triangles(mesh)
    tracked = []     # (tri, slot, label)
    detached = []    # (i, j, label)
    for (i, j), label in zip(mesh.boundary_edges, mesh.boundary_labels):
        key = (int(i), int(j)) if i < j else (int(j), int(i))
        owners = e2t.get(key, [])
        if not owners:
            detached.append((int(i), int(j), int(label)))
            continue
        t = owners[0]
        slot = next(k for k in range(3)
                    if {int(tris[t, k]), int(tris[t, (k + 1) % 3])} == set(key))
        tracked.append([t, slot, int(label)])

    boundary_keys = {(int(i), int(j)) if i < j else (int(j), int(i))
                     for i, j in mesh.boundary_edges}
    new_crack_edges = []  # (i, j) oriented like the owning triangle

    def tris_at(v):
        return np.flatnonzero(np.any(tris == v, axis=1))

    for chain, closed in chains:
        edge_keys = [((a, b) if a < b else (b, a)) for a, b in _chain_edges(chain, closed)]
        kinds = {key: (key in boundary_keys) for key in edge_keys}
        if all(kinds.values()):
            _apply_ghost_slit(tris, verts, tracked, detached, slit_pairs,
                              new_crack_edges, chain, closed, edge_keys,
                              mesh, tris_at)
        elif not any(kinds.values()):
            _apply_interior_slit(tris, verts, slit_pairs, new_crack_edges,
                                 chain, closed, edge_keys, tris_at)
        else:
            raise GeometryError("slit path mixes interior and boundary edges")

    out_edges = []
    out_labels = []
    for t, slot, label in tracked:
        out_edges.append((int(tris[t, slot]), int(tris[t, (slot + 1) % 3])))
        out_labels.append(label)
    for i, j, label in detached:
        out_edges.append((i, j))
        out_labels.append(label)
    for i, j in new_crack_edges:
        out_edges.append((i, j))
        out_labels.append(int(BoundaryLabel.CRACK_FACE))

    return Mesh(np.array(verts, dtype=float), tris,
                np.array(out_edges), np.array(out_labels),
                np.array(slit_pairs, dtype=np.int64).reshape(-1, 2))


def _apply_interior_slit(tris, verts, slit_pairs, new_crack_edges,
                         chain, closed, edge_keys, tris_at):
    slit_set = set(edge_keys)
    # adjacent triangles per slit edge, captured before any retargeting
    edge_owner_tris = {}
    for key in edge_keys:
        a, b = key
        rows = np.flatnonzero(np.any(tris == a, axis=1) & np.any(tris == b, axis=1))
        if rows.size != 2:
            raise GeometryError(f"slit edge {key} is not an interior mesh edge")
        edge_owner_tris[key] = [int(r) for r in rows]

    dup_of: dict = {}  # original id -> duplicate id, this chain only
    targets = chain[:-1] if closed else chain
    for v in dict.fromkeys(targets):  # preserve order, drop duplicates
        fan = [int(t) for t in tris_at(v)]
        if not fan:
            raise GeometryError(f"slit vertex {v} bounds no triangle")
        # union-find over the fan; adjacency through non-slit edges at v
        parent = {t: t for t in fan}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        by_edge: dict = {}
        for t in fan:
            tri = tris[t]
            for k in range(3):
                a, b = int(tri[k]), int(tri[(k + 1) % 3])
                if v in (a, b):
                    w = b if a == v else a
                    w0 = _chain_original(w, dup_of)
                    key = (v, w0) if v < w0 else (w0, v)
                    if key in slit_set:
                        continue
                    ekey = (min(a, b), max(a, b))
                    by_edge.setdefault(ekey, []).append(t)
        for ts in by_edge.values():
            for t in ts[1:]:
                parent[find(ts[0])] = find(t)

        groups: dict = {}
        for t in fan:
            groups.setdefault(find(t), []).append(t)
        if len(groups) == 1:
            continue  # crack tip: fan stays connected
        if len(groups) > 2:
            raise GeometryError(f"slit path self-intersects at vertex {v}")
        keep_root = min(groups, key=lambda rt: min(groups[rt]))
        other = [t for rt, ts in groups.items() if rt != keep_root for t in ts]
        v_new = len(verts)
        verts.append(verts[v])
        for t in other:
            row = tris[t]
            tris[t] = [v_new if int(x) == v else int(x) for x in row]
        slit_pairs.append((v, v_new))
        dup_of[v] = v_new

    # each slit edge now bounds two faces; emit both as CRACK_FACE edges
    for key in edge_keys:
        for t in edge_owner_tris[key]:
            tri = [int(x) for x in tris[t]]
            emitted = False
            for k in range(3):
                p, q = tri[k], tri[(k + 1) % 3]
                if {_chain_original(p, dup_of), _chain_original(q, dup_of)} == set(key):
                    new_crack_edges.append((p, q))
                    emitted = True
                    break
            if not emitted:
                raise GeometryError(f"internal error: lost slit edge {key}")


def _apply_ghost_slit(tris, verts, tracked, detached, slit_pairs,
                      new_crack_edges, chain, closed, edge_keys, mesh, tris_at):
    """Decohesion slit along existing boundary edges.

    The whole triangle fan at each duplicated vertex retargets to the copy;
    the original vertices keep the grip-side boundary edges (now bounding no
    triangle) so the Dirichlet data still applies to them.  Open-arc
    endpoints are crack tips and stay shared.
    """
    targets = chain[:-1] if closed else chain[1:-1]
    dup_of: dict = {}
    for v in dict.fromkeys(targets):
        v_new = len(verts)
        verts.append(verts[v])
        for t in tris_at(v):
            row = tris[t]
            tris[t] = [v_new if int(x) == v else int(x) for x in row]
        slit_pairs.append((v, v_new))
        dup_of[v] = v_new

    key_set = set(edge_keys)
    still_tracked = []
    for t, slot, label in tracked:
        i, j = int(tris[t, slot]), int(tris[t, (slot + 1) % 3])
        orig = (_chain_original(i, dup_of), _chain_original(j, dup_of))
        orig = (min(orig), max(orig))
        if orig in key_set:
            detached.append((orig[0], orig[1], label))
            new_crack_edges.append((i, j))
        else:
            still_tracked.append([t, slot, label])
    tracked[:] = still_tracked


def _chain_original(v, dup_of):
    for old, new in dup_of.items():
        if new == v:
            return old
    return v


# ---------------------------------------------------------------------------
# Plain-text export / import
# ---------------------------------------------------------------------------

def save_mesh(mesh: Mesh, path) -> None:
    """Write the whitespace-separated text format (v/t/b/s records)."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"mesh {mesh.n_vertices} {mesh.n_triangles} "
                f"{mesh.boundary_edges.shape[0]} {mesh.slit_pairs.shape[0]}\n")
        for x, y in mesh.vertices:
            f.write(f"v {float(x)!r} {float(y)!r}\n")
        for i, j, k in mesh.triangles:
            f.write(f"t {i} {j} {k}\n")
        for (i, j), label in zip(mesh.boundary_edges, mesh.boundary_labels):
            f.write(f"b {i} {j} {_LABEL_NAMES[BoundaryLabel(int(label))]}\n")
        for i, j in mesh.slit_pairs:
            f.write(f"s {i} {j}\n")


def load_mesh(path) -> Mesh:
    verts, tris, edges, labels, slits = [], [], [], [], []
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().split()
        if not header or header[0] != "mesh":
            raise GeometryError(f"{path}: not a mesh file (bad header)")
        for lineno, line in enumerate(f, start=2):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            try:
                if tag == "v":
                    verts.append((float(parts[1]), float(parts[2])))
                elif tag == "t":
                    tris.append(tuple(int(x) for x in parts[1:4]))
                elif tag == "b":
                    edges.append((int(parts[1]), int(parts[2])))
                    labels.append(int(_LABEL_FROM_NAME[parts[3]]))
                elif tag == "s":
                    slits.append((int(parts[1]), int(parts[2])))
                else:
                    raise GeometryError(f"{path}:{lineno}: unknown record '{tag}'")
            except (IndexError, ValueError, KeyError) as exc:
                raise GeometryError(f"{path}:{lineno}: malformed record: {line.strip()}") from exc
    mesh = Mesh(np.array(verts), np.array(tris, dtype=np.int64).reshape(-1, 3),
                np.array(edges, dtype=np.int64).reshape(-1, 2),
                np.array(labels, dtype=np.int64),
                np.array(slits, dtype=np.int64).reshape(-1, 2))
    validate_mesh(mesh)
    return mesh
