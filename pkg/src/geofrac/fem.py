"""Piecewise-linear (P1) finite-element kernels shared by the solvers.

Assembly is vectorized over triangles and produces scipy CSR matrices.
All public solvers go through :func:`solve_dirichlet`, which partitions the
system, solves the free block with a sparse direct factorization and checks
the residual against the solver tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.linalg import spsolve

from .errors import ParameterError, SolverError
from .mesh import BoundaryLabel, Mesh, signed_areas, vertex_components

# Relative residual accepted from the linear solver; energies are compared
# at percent-level tolerances, so solver error must stay negligible.
SOLVER_RTOL = 1.0e-10


@dataclass(frozen=True)
class TriGeometry:
    areas: np.ndarray      # (m,)
    grads: np.ndarray      # (m, 3, 2): gradient of each nodal basis function
    centroids: np.ndarray  # (m, 2)


@lru_cache(maxsize=256)
def tri_geometry(mesh: Mesh) -> TriGeometry:
    p = mesh.vertices
    t = mesh.triangles
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    areas = signed_areas(mesh)
    if np.any(areas <= 0):
        raise ParameterError("mesh has non-positive triangle areas")
    grads = np.empty((t.shape[0], 3, 2))
    # grad phi_i = rot90(opposite edge) / (2A)
    for k, (pj, pk) in enumerate(((b, c), (c, a), (a, b))):
        grads[:, k, 0] = (pj[:, 1] - pk[:, 1]) / (2.0 * areas)
        grads[:, k, 1] = (pk[:, 0] - pj[:, 0]) / (2.0 * areas)
    centroids = (a + b + c) / 3.0
    for arr in (areas, grads, centroids):
        arr.flags.writeable = False
    return TriGeometry(areas, grads, centroids)


def gradient(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    """Per-triangle constant gradient of a nodal field, shape (m, 2)."""
    values = as_nodal_field(mesh, values)
    geo = tri_geometry(mesh)
    vt = values[mesh.triangles]  # (m, 3)
    return np.einsum("mk,mkd->md", vt, geo.grads)


def as_nodal_field(mesh: Mesh, values) -> np.ndarray:
    values = np.asarray(values, dtype=float).ravel()
    if values.shape[0] != mesh.n_vertices:
        raise ParameterError(
            f"field length {values.shape[0]} does not match vertex count {mesh.n_vertices}")
    if not np.all(np.isfinite(values)):
        raise ParameterError("field contains non-finite values")
    return values


def stiffness_matrix(mesh: Mesh, coeff: np.ndarray | None = None) -> csr_matrix:
    """Assemble sum_T coeff_T * area_T * grad(phi_i).grad(phi_j)."""
    geo = tri_geometry(mesh)
    m = mesh.n_triangles
    w = geo.areas if coeff is None else geo.areas * np.asarray(coeff, dtype=float)
    local = np.einsum("mid,mjd->mij", geo.grads, geo.grads) * w[:, None, None]
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_vertices
    return coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def mass_matrix(mesh: Mesh, coeff: np.ndarray | None = None) -> csr_matrix:
    """Consistent P1 mass matrix, optionally weighted per triangle."""
    geo = tri_geometry(mesh)
    w = geo.areas if coeff is None else geo.areas * np.asarray(coeff, dtype=float)
    template = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    local = template[None, :, :] * w[:, None, None]
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_vertices
    return coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def boundary_mass_matrix(mesh: Mesh, labels) -> csr_matrix:
    """1D consistent mass matrix along boundary edges carrying the given labels."""
    wanted = {int(l) for l in labels}
    rows, cols, data = [], [], []
    p = mesh.vertices
    for (i, j), label in zip(mesh.boundary_edges, mesh.boundary_labels):
        if int(label) not in wanted:
            continue
        i, j = int(i), int(j)
        ln = float(np.linalg.norm(p[i] - p[j]))
        rows.extend([i, i, j, j])
        cols.extend([i, j, i, j])
        data.extend([ln / 3.0, ln / 6.0, ln / 6.0, ln / 3.0])
    n = mesh.n_vertices
    return coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def integrate_p1_squared(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    """Exact per-triangle integral of the square of a P1 field."""
    geo = tri_geometry(mesh)
    v = values[mesh.triangles]
    return geo.areas / 6.0 * (np.sum(v * v, axis=1)
                              + v[:, 0] * v[:, 1] + v[:, 1] * v[:, 2] + v[:, 0] * v[:, 2])


def dirichlet_values(mesh: Mesh, on_gamma_u1: float, on_gamma_u2: float):
    """Constrained vertex indices and values from the GAMMA_U labels."""
    idx1 = mesh.vertices_with_label(BoundaryLabel.GAMMA_U1)
    idx2 = mesh.vertices_with_label(BoundaryLabel.GAMMA_U2)
    fixed = np.concatenate([idx1, idx2])
    vals = np.concatenate([np.full(idx1.shape[0], float(on_gamma_u1)),
                           np.full(idx2.shape[0], float(on_gamma_u2))])
    # a vertex carrying both labels would be ill-posed
    if np.unique(fixed).shape[0] != fixed.shape[0]:
        both = np.intersect1d(idx1, idx2)
        raise ParameterError(f"vertices {both} carry both GAMMA_U labels")
    return fixed, vals


def solve_dirichlet(mesh: Mesh, K: csr_matrix, fixed: np.ndarray, fixed_vals: np.ndarray,
                    rhs: np.ndarray | None = None,
                    floating_values: dict | None = None) -> np.ndarray:
    """Solve K u = rhs with prescribed values on ``fixed``.

    Connected components without any constrained vertex are assigned the
    constant from ``floating_values`` (component id -> value, default 0);
    for a pure Neumann component the constant is the energy minimizer, so
    no solve is needed there.
    """
    n = mesh.n_vertices
    u = np.zeros(n)
    u[fixed] = fixed_vals

    comp = vertex_components(mesh)
    constrained_comps = set(int(c) for c in comp[fixed])
    free_mask = np.ones(n, dtype=bool)
    free_mask[fixed] = False
    for cid in np.unique(comp):
        if int(cid) not in constrained_comps:
            members = comp == cid
            value = 0.0 if floating_values is None else float(floating_values.get(int(cid), 0.0))
            u[members] = value
            free_mask[members] = False

    free = np.flatnonzero(free_mask)
    if free.size:
        Kff = K[free][:, free].tocsc()
        b = np.zeros(n) if rhs is None else np.asarray(rhs, dtype=float)
        rhs_free = b[free] - K[free] @ u
        sol = spsolve(Kff, rhs_free)
        if not np.all(np.isfinite(sol)):
            raise SolverError(_singular_diagnostics(mesh, comp, constrained_comps))
        u[free] = sol
        scale = max(np.abs(rhs_free).max(initial=0.0), np.abs(Kff.data).max(initial=0.0) * max(1.0, np.abs(sol).max(initial=0.0)))
        resid = np.abs(Kff @ sol - rhs_free).max(initial=0.0)
        if scale > 0 and resid > 1e3 * SOLVER_RTOL * scale:
            raise SolverError(f"linear solve residual {resid:.3e} exceeds tolerance "
                              f"(scale {scale:.3e}); " + _singular_diagnostics(mesh, comp, constrained_comps))
    return u


def _singular_diagnostics(mesh, comp, constrained_comps) -> str:
    sizes = {int(c): int(np.sum(comp == c)) for c in np.unique(comp)}
    uncon = {c: s for c, s in sizes.items() if c not in constrained_comps}
    return (f"system singular or ill-conditioned: {len(sizes)} components "
            f"(sizes {sizes}), unconstrained components {uncon or 'none'}")
