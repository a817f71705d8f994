"""Antiplane equilibrium on possibly slit meshes.

Solves the scalar Dirichlet problem (shear modulus 1, so the elastic energy
is one half the squared gradient integral) with traction-free natural
conditions on crack faces and free boundary parts, and evaluates the bulk
and total energies of cracked configurations.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import fem
from .errors import ParameterError
from .mesh import BoundaryLabel, Mesh, edge_to_triangles, mean_edge_length
from .paths import CrackPath


@dataclass(frozen=True)
class DirichletData:
    """Imposed boundary displacement, normalized so GAMMA_U1 carries 0."""

    on_gamma_u1: float = 0.0
    on_gamma_u2: float = 0.0

    @property
    def delta(self) -> float:
        """Load magnitude: the sup-norm of the imposed displacement."""
        return abs(self.on_gamma_u2 - self.on_gamma_u1)


@dataclass
class EnergyReport:
    """Observable contract of every minimization: bulk + surface = total."""

    bulk: float
    surface: float
    total: float = field(init=False)
    dual_bound: float | None = None
    gap: float | None = None

    def __post_init__(self):
        self.total = self.bulk + self.surface
        if self.dual_bound is not None and self.gap is None:
            self.gap = self.bulk - self.dual_bound

    def with_dual(self, dual_bound: float) -> "EnergyReport":
        report = EnergyReport(self.bulk, self.surface, dual_bound=dual_bound)
        return report

    def as_dict(self) -> dict:
        out = {"bulk": self.bulk, "surface": self.surface, "total": self.total}
        if self.dual_bound is not None:
            out["dual_bound"] = self.dual_bound
            out["gap"] = self.gap
        return out


@dataclass(frozen=True)
class StressField:
    """Per-triangle antiplane stress (= gradient, C is the identity).

    ``div_residual`` holds the weak divergence residual per vertex; at
    equilibrium it vanishes at every unconstrained vertex up to solver
    tolerance.  ``jump_edges``/``jump_values`` carry traction-jump
    diagnostics across a piecewise interface when one exists.
    """

    sigma: np.ndarray
    div_residual: np.ndarray
    jump_edges: np.ndarray | None = None
    jump_values: np.ndarray | None = None


def solve_equilibrium(mesh: Mesh, data: DirichletData) -> np.ndarray:
    """Minimize the bulk energy subject to the imposed boundary displacement.

    Crack faces and GAMMA_F edges carry the natural (traction-free)
    condition.  Components fully detached by a slit have no Dirichlet
    vertex; each one is pinned to the average displacement of its
    crack-face partners (falling back to 0), which selects one
    representative of the rigid-motion class without changing the energy.
    """
    fixed, vals = fem.dirichlet_values(mesh, data.on_gamma_u1, data.on_gamma_u2)
    if fixed.size == 0:
        raise ParameterError("mesh has no GAMMA_U boundary to impose data on")
    K = fem.stiffness_matrix(mesh)
    u = fem.solve_dirichlet(mesh, K, fixed, vals)

    # floating components: constant fields, pinned to the slit-partner average
    from .mesh import vertex_components
    comp = vertex_components(mesh)
    constrained = set(int(c) for c in comp[fixed])
    floating = [int(c) for c in np.unique(comp) if int(c) not in constrained]
    for cid in floating:
        members = comp == cid
        partner_vals = []
        for a, b in mesh.slit_pairs:
            a, b = int(a), int(b)
            if comp[a] == cid and int(comp[b]) not in (cid,):
                partner_vals.append(u[b])
            elif comp[b] == cid and int(comp[a]) not in (cid,):
                partner_vals.append(u[a])
        u[members] = float(np.mean(partner_vals)) if partner_vals else 0.0
    return u


def bulk_energy(mesh: Mesh, u: np.ndarray) -> float:
    """One half the integral of the squared gradient."""
    g = fem.gradient(mesh, u)
    areas = fem.tri_geometry(mesh).areas
    return float(0.5 * np.sum(areas * np.sum(g * g, axis=1)))


def _length_off_gamma_f(mesh: Mesh, crack: CrackPath) -> float:
    """Crack length excluding the portion lying on GAMMA_F edges."""
    gf = mesh.edges_with_label(BoundaryLabel.GAMMA_F)
    if gf.shape[0] == 0:
        return crack.length()
    p = mesh.vertices
    segs_a = p[gf[:, 0]]
    segs_b = p[gf[:, 1]]
    tol = 1e-8 * max(1.0, mean_edge_length(mesh))

    def on_gamma_f(point):
        d = segs_b - segs_a
        w = point[None, :] - segs_a
        denom = np.sum(d * d, axis=1)
        t = np.clip(np.sum(w * d, axis=1) / denom, 0.0, 1.0)
        dist = np.linalg.norm(w - t[:, None] * d, axis=1)
        return bool(np.any(dist <= tol))

    total = 0.0
    for a, b in crack.segments():
        mid = 0.5 * (a + b)
        if on_gamma_f(a) and on_gamma_f(b) and on_gamma_f(mid):
            continue
        total += float(np.linalg.norm(b - a))
    return total


def total_energy(mesh: Mesh, u: np.ndarray, crack: CrackPath | None,
                 gc: float) -> EnergyReport:
    """Bulk energy plus gc times the crack length off the free boundary."""
    if gc < 0:
        raise ParameterError(f"surface energy density must be >= 0, got {gc}")
    crack = crack if crack is not None else CrackPath.empty()
    surface = gc * _length_off_gamma_f(mesh, crack)
    return EnergyReport(bulk=bulk_energy(mesh, u), surface=surface)


def _boundary_edge_normals(mesh: Mesh):
    """Outward unit normal and owning triangle for each boundary edge.

    Detached edges (bounding no triangle) are skipped.
    """
    e2t = edge_to_triangles(mesh)
    p = mesh.vertices
    edges, normals, owners = [], [], []
    for ei, (i, j) in enumerate(mesh.boundary_edges):
        key = (int(i), int(j)) if i < j else (int(j), int(i))
        owner = e2t.get(key, [])
        if len(owner) != 1:
            continue
        t = owner[0]
        tri = mesh.triangles[t]
        other = next(int(v) for v in tri if int(v) not in (int(i), int(j)))
        tangent = p[int(j)] - p[int(i)]
        n = np.array([tangent[1], -tangent[0]])
        n /= np.linalg.norm(n)
        if np.dot(n, p[other] - p[int(i)]) > 0:
            n = -n
        edges.append(ei)
        normals.append(n)
        owners.append(t)
    return np.array(edges, dtype=int), np.array(normals).reshape(-1, 2), np.array(owners, dtype=int)


def traction_residual(mesh: Mesh, u: np.ndarray,
                      exclude_tips=(), exclude_radius: float = 0.0) -> float:
    """Max recovered normal derivative over traction-free (GAMMA_F, crack) edges.

    A discretization diagnostic: the exact solution satisfies grad(u).n = 0
    there, so the value tends to 0 under refinement on smooth boundary
    runs.  Near a crack tip the exact gradient is unbounded and the
    recovered max grows like h^(-1/2); pass the tip coordinates in
    ``exclude_tips`` with a fixed physical ``exclude_radius`` to measure
    the converging part.  Returns 0 with a warning when the mesh has no
    traction-free edges.
    """
    free_labels = (int(BoundaryLabel.GAMMA_F), int(BoundaryLabel.CRACK_FACE))
    mask = np.isin(mesh.boundary_labels, free_labels)
    if not np.any(mask):
        warnings.warn("mesh has no traction-free edges; traction residual is trivially 0",
                      stacklevel=2)
        return 0.0
    g = fem.gradient(mesh, u)
    edge_ids, normals, owners = _boundary_edge_normals(mesh)
    sel = mask[edge_ids]
    if exclude_tips is not None and len(exclude_tips) and exclude_radius > 0:
        p = mesh.vertices
        e = mesh.boundary_edges[edge_ids]
        mids = 0.5 * (p[e[:, 0]] + p[e[:, 1]])
        for tip in exclude_tips:
            sel &= np.linalg.norm(mids - np.asarray(tip, dtype=float), axis=1) > exclude_radius
    if not np.any(sel):
        warnings.warn("all traction-free edges are detached or excluded; "
                      "traction residual is trivially 0", stacklevel=2)
        return 0.0
    fluxes = np.abs(np.sum(g[owners[sel]] * normals[sel], axis=1))
    return float(fluxes.max())


def stress_field(mesh: Mesh, u: np.ndarray) -> StressField:
    """Per-triangle stress with the weak divergence residual per vertex."""
    g = fem.gradient(mesh, u)
    return StressField(sigma=g, div_residual=divergence_residual(mesh, g))


def divergence_residual(mesh: Mesh, sigma: np.ndarray) -> np.ndarray:
    """Weak-form divergence residual r_i = sum_T area_T sigma_T . grad(phi_i)."""
    geo = fem.tri_geometry(mesh)
    contrib = np.einsum("md,mkd->mk", sigma, geo.grads) * geo.areas[:, None]
    r = np.zeros(mesh.n_vertices)
    np.add.at(r, mesh.triangles, contrib)
    return r


def field_to_csv(mesh: Mesh, u: np.ndarray, path) -> None:
    u = fem.as_nodal_field(mesh, u)
    with open(path, "w", encoding="utf-8") as f:
        f.write("x,y,u\n")
        for (x, y), v in zip(mesh.vertices, u):
            f.write(f"{float(x)!r},{float(y)!r},{float(v)!r}\n")


def stress_to_csv(mesh: Mesh, stress: StressField, path) -> None:
    centroids = fem.tri_geometry(mesh).centroids
    with open(path, "w", encoding="utf-8") as f:
        f.write("cx,cy,sx,sy\n")
        for (cx, cy), (sx, sy) in zip(centroids, stress.sigma):
            f.write(f"{float(cx)!r},{float(cy)!r},{float(sx)!r},{float(sy)!r}\n")
