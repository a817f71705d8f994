"""Mumford-Shah minimization via the elliptic phase-field approximation.

The crack set is smeared into a field z (1 = sound, 0 = fully cracked)
whose surface term ``gc * integral(eps |grad z|^2 + (1 - z)^2 / (4 eps))``
approximates gc times the crack length as eps shrinks.  Both substeps of
the alternating scheme are exact convex minimizations, so the energy trace
is non-increasing by construction.

Alternating minimization only finds local minima; the global-minimizer
statements behind the critical-load predictions therefore use multi-start:
a plain run from the sound state competes against runs seeded with a
candidate crack band (by default along the separating geodesic, which is
the predicted crack shape), and the lowest converged energy wins.

The phase field is deliberately not pinned to 1 on the grips, so cracks
may form touching the boundary (decohesion).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.sparse.linalg import spsolve

from . import fem
from .equilibrium import DirichletData, EnergyReport
from .errors import ParameterError, SolverError
from .geodesics import separating_geodesic
from .mesh import BoundaryLabel, Mesh, mean_edge_length
from .paths import CrackPath

DEFAULT_ETA = 1.0e-6
DEFAULT_THRESHOLD = 0.5


@lru_cache(maxsize=64)
def _grip_mass(mesh: Mesh):
    return fem.boundary_mass_matrix(
        mesh, (BoundaryLabel.GAMMA_U1, BoundaryLabel.GAMMA_U2))


@dataclass(frozen=True)
class ATState:
    """Phase-field state: displacement, damage-like field and parameters.

    ``grip_term`` keeps the boundary compensation on: a crack lying on a
    grip (decohesion) only develops half the regularization profile inside
    the domain, so without compensation it would cost half the Griffith
    price; the extra ``gc/2 * integral_(Gamma_u) (1-z)^2 ds`` restores the
    full geometric length count of the sharp functional.
    """

    u: np.ndarray
    z: np.ndarray
    epsilon: float
    eta: float
    gc: float
    grip_term: bool = True
    converged: bool = True
    iterations: int = 0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        if not (0 < self.eta < 1):
            raise ParameterError(f"eta must lie in (0, 1), got {self.eta}")
        if self.gc < 0:
            raise ParameterError(f"gc must be >= 0, got {self.gc}")


def _check_state(state: ATState, mesh: Mesh):
    u = fem.as_nodal_field(mesh, state.u)
    z = fem.as_nodal_field(mesh, state.z)
    if z.min() < -1e-12 or z.max() > 1 + 1e-12:
        raise ParameterError("phase field out of [0, 1]")
    return u, z


def at_energy(state: ATState, mesh: Mesh) -> EnergyReport:
    """Regularized energy: bulk 0.5*(z^2+eta)|grad u|^2 plus the profile term."""
    u, z = _check_state(state, mesh)
    geo = fem.tri_geometry(mesh)
    gu = fem.gradient(mesh, u)
    gu2 = np.sum(gu * gu, axis=1)
    int_z2 = fem.integrate_p1_squared(mesh, z)
    bulk = 0.5 * float(np.sum(gu2 * (int_z2 + state.eta * geo.areas)))

    gz = fem.gradient(mesh, z)
    int_gz2 = geo.areas * np.sum(gz * gz, axis=1)
    int_w2 = fem.integrate_p1_squared(mesh, 1.0 - z)
    surface = state.gc * float(state.epsilon * np.sum(int_gz2)
                               + np.sum(int_w2) / (4.0 * state.epsilon))
    if state.grip_term:
        Mb = _grip_mass(mesh)
        w = 1.0 - z
        surface += 0.5 * state.gc * float(w @ (Mb @ w))
    return EnergyReport(bulk=bulk, surface=surface)


def minimize_u_step(state: ATState, mesh: Mesh, data: DirichletData) -> np.ndarray:
    """Exact minimizer over u at fixed z: a linear solve with coefficient z^2+eta."""
    _, z = _check_state(state, mesh)
    geo = fem.tri_geometry(mesh)
    coeff = fem.integrate_p1_squared(mesh, z) / geo.areas + state.eta
    K = fem.stiffness_matrix(mesh, coeff)
    fixed, vals = fem.dirichlet_values(mesh, data.on_gamma_u1, data.on_gamma_u2)
    if fixed.size == 0:
        raise ParameterError("mesh has no GAMMA_U boundary to impose data on")
    return fem.solve_dirichlet(mesh, K, fixed, vals)


def minimize_z_step(state: ATState, mesh: Mesh) -> np.ndarray:
    """Exact minimizer over z at fixed u, projected onto [0, 1].

    The system depends on u only, so the step is idempotent.  On meshes
    whose stiffness is an M-matrix the solution already lies in [0, 1] and
    the projection is a no-op safeguard.
    """
    u, _ = _check_state(state, mesh)
    gu = fem.gradient(mesh, u)
    q = 0.5 * np.sum(gu * gu, axis=1)  # elastic density per triangle

    K = fem.stiffness_matrix(mesh)
    Mq = fem.mass_matrix(mesh, coeff=q)
    M = fem.mass_matrix(mesh)
    gc, eps = state.gc, state.epsilon
    A = Mq + gc * eps * K + (gc / (4.0 * eps)) * M
    rhs = (gc / (4.0 * eps)) * np.asarray(M.sum(axis=1)).ravel()
    if state.grip_term:
        Mb = _grip_mass(mesh)
        A = A + 0.5 * gc * Mb
        rhs = rhs + 0.5 * gc * np.asarray(Mb.sum(axis=1)).ravel()
    z = spsolve(A.tocsc(), rhs)
    if not np.all(np.isfinite(z)):
        raise SolverError("phase-field substep produced non-finite values")
    return np.clip(z, 0.0, 1.0)


def alternate_minimize(mesh: Mesh, data: DirichletData, gc: float,
                       epsilon: float | None = None, eta: float = DEFAULT_ETA,
                       max_iters: int = 200, tol: float = 1e-6,
                       z0: np.ndarray | None = None,
                       grip_term: bool = True) -> tuple[ATState, np.ndarray]:
    """Alternate the two exact substeps until the energy stalls.

    Returns the final state and the per-iteration energy trace with columns
    (bulk, surface, total); the trace is non-increasing.  When ``max_iters``
    is hit before the relative decrease drops below ``tol`` the state comes
    back flagged non-converged.
    """
    if tol <= 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    if max_iters < 1:
        raise ParameterError(f"max_iters must be >= 1, got {max_iters}")
    if epsilon is None:
        epsilon = 4.0 * mean_edge_length(mesh)
    z = np.ones(mesh.n_vertices) if z0 is None else np.clip(
        fem.as_nodal_field(mesh, z0), 0.0, 1.0)
    state = ATState(u=np.zeros(mesh.n_vertices), z=z,
                    epsilon=float(epsilon), eta=float(eta), gc=float(gc),
                    grip_term=grip_term)

    rows = []
    prev_total = None
    converged = False
    for it in range(1, max_iters + 1):
        u = minimize_u_step(state, mesh, data)
        state = replace(state, u=u)
        z = minimize_z_step(state, mesh)
        state = replace(state, z=z)
        report = at_energy(state, mesh)
        rows.append((report.bulk, report.surface, report.total))
        if prev_total is not None:
            scale = max(abs(prev_total), 1e-14)
            if prev_total - report.total < tol * scale:
                converged = True
                break
        prev_total = report.total
    state = replace(state, converged=converged, iterations=len(rows))
    return state, np.array(rows).reshape(-1, 3)


def band_seed(mesh: Mesh, path: CrackPath, epsilon: float) -> np.ndarray:
    """Phase-field profile seeded along a candidate crack path."""
    if path.is_empty:
        return np.ones(mesh.n_vertices)
    p = mesh.vertices
    dist = np.full(mesh.n_vertices, np.inf)
    for a, b in path.segments():
        d = b - a
        denom = float(np.dot(d, d))
        t = np.clip(((p - a) @ d) / denom, 0.0, 1.0)
        dist = np.minimum(dist, np.linalg.norm(p - (a + t[:, None] * d), axis=1))
    return 1.0 - np.exp(-dist / (2.0 * epsilon))


def multistart_minimize(mesh: Mesh, data: DirichletData, gc: float,
                        epsilon: float | None = None, eta: float = DEFAULT_ETA,
                        max_iters: int = 200, tol: float = 1e-6,
                        seed_paths: list | None = None,
                        rng: np.random.Generator | None = None,
                        grip_term: bool = True):
    """Best-of runs: plain start, optional random perturbation, optional band seeds.

    Returns (state, trace) of the run with the lowest converged energy.
    """
    if epsilon is None:
        epsilon = 4.0 * mean_edge_length(mesh)
    starts: list[np.ndarray | None] = [None]
    if rng is not None:
        starts.append(1.0 - 0.05 * rng.random(mesh.n_vertices))
    for path in seed_paths or []:
        starts.append(band_seed(mesh, path, epsilon))
    best = None
    for z0 in starts:
        state, trace = alternate_minimize(mesh, data, gc, epsilon=epsilon, eta=eta,
                                          max_iters=max_iters, tol=tol, z0=z0,
                                          grip_term=grip_term)
        total = trace[-1, 2] if trace.size else np.inf
        if best is None or total < best[0]:
            best = (total, state, trace)
    return best[1], best[2]


def extract_crack(z: np.ndarray, mesh: Mesh, threshold: float = DEFAULT_THRESHOLD) -> CrackPath:
    """Polyline chains tracing the ridge of the sublevel set {z < threshold}.

    When the sublevel set separates the two grips the ridge is recovered as
    a minimum cut biased through low-z edges (exact on the mesh metric and
    correct for closed annular bands); otherwise each connected component
    contributes the weighted farthest-pair path through its interior.
    Returns an empty path when no vertex is below threshold.
    """
    if not (0.0 < threshold < 1.0):
        raise ParameterError(f"threshold must lie in (0, 1), got {threshold}")
    z = fem.as_nodal_field(mesh, z)
    below = z < threshold
    if not np.any(below):
        return CrackPath.empty()

    from .mesh import BoundaryLabel, edge_to_triangles, vertex_adjacency
    from scipy.sparse.csgraph import connected_components

    adj = vertex_adjacency(mesh)
    # does removing the sublevel set disconnect the grips?
    keep = ~below
    sub = adj[keep][:, keep]
    n_comp, labels = connected_components(sub, directed=False)
    kept_ids = np.flatnonzero(keep)
    pos = {int(v): i for i, v in enumerate(kept_ids)}
    gu1 = [pos[int(v)] for v in mesh.vertices_with_label(BoundaryLabel.GAMMA_U1) if keep[int(v)]]
    gu2 = [pos[int(v)] for v in mesh.vertices_with_label(BoundaryLabel.GAMMA_U2) if keep[int(v)]]
    separated = (not gu1) or (not gu2) or set(labels[gu1]).isdisjoint(labels[gu2])

    if separated:
        weights = {}
        zmid = 0.01
        for (a, b) in edge_to_triangles(mesh):
            zm = 0.5 * (z[a] + z[b])
            weights[(a, b)] = zmid + zm * zm
        return separating_geodesic(mesh, edge_weights=weights)

    # non-separating bands: farthest-pair path per component of {z < threshold}
    from scipy.sparse.csgraph import dijkstra

    sub_ids = np.flatnonzero(below)
    sub_adj = adj[sub_ids][:, sub_ids].tocoo()
    p = mesh.vertices
    lengths = np.linalg.norm(p[sub_ids[sub_adj.row]] - p[sub_ids[sub_adj.col]], axis=1)
    zc = 0.01 + 0.5 * (z[sub_ids[sub_adj.row]] + z[sub_ids[sub_adj.col]])
    from scipy.sparse import coo_matrix
    w = coo_matrix((lengths * zc, (sub_adj.row, sub_adj.col)),
                   shape=sub_adj.shape).tocsr()
    n_comp, labels = connected_components(w, directed=False)
    chains, closed = [], []
    for comp in range(n_comp):
        members = np.flatnonzero(labels == comp)
        if members.size < 2:
            continue
        start = members[int(np.argmin(z[sub_ids[members]]))]
        d0 = dijkstra(w, indices=start, directed=False)
        d0[labels != comp] = -np.inf
        e0 = int(np.argmax(d0))
        d1, pred = dijkstra(w, indices=e0, directed=False, return_predecessors=True)
        d1[labels != comp] = -np.inf
        e1 = int(np.argmax(d1))
        seq = []
        v = e1
        while v != e0 and v >= 0:
            seq.append(v)
            v = int(pred[v])
        seq.append(e0)
        if len(seq) < 2:
            continue
        chains.append(p[sub_ids[np.array(seq)]])
        closed.append(False)
    if not chains:
        return CrackPath.empty()
    return CrackPath(tuple(chains), tuple(closed))


def critical_delta_bracket(mesh: Mesh, gc: float, lo: float, hi: float,
                           epsilon: float | None = None, eta: float = DEFAULT_ETA,
                           max_iters: int = 150, tol: float = 1e-5,
                           n_steps: int = 6, z_threshold: float = DEFAULT_THRESHOLD,
                           rng: np.random.Generator | None = None) -> dict:
    """Bisection on the load over converged multi-start states.

    A probe at load delta is classified cracked when the minimum of the
    winning state's phase field drops below ``z_threshold``.  Returns the
    final bracket plus the probe log (delta, total energy, min z).
    """
    if not (0 < lo < hi):
        raise ParameterError("bisection needs 0 < lo < hi")
    geodesic = separating_geodesic(mesh)
    probes = []

    def classify(delta: float) -> bool:
        state, trace = multistart_minimize(
            mesh, DirichletData(0.0, delta), gc, epsilon=epsilon, eta=eta,
            max_iters=max_iters, tol=tol, seed_paths=[geodesic], rng=rng)
        min_z = float(state.z.min())
        probes.append({"delta": delta, "total": float(trace[-1, 2]),
                       "min_z": min_z, "cracked": min_z < z_threshold})
        return min_z < z_threshold

    if classify(lo):
        raise ParameterError(f"lower bracket delta={lo} already cracks; widen the bracket")
    if not classify(hi):
        raise ParameterError(f"upper bracket delta={hi} does not crack; widen the bracket")
    for _ in range(n_steps):
        mid = 0.5 * (lo + hi)
        if classify(mid):
            hi = mid
        else:
            lo = mid
    return {"delta_lo": lo, "delta_hi": hi, "probes": probes,
            "geodesic_length": geodesic.length()}


def trace_to_csv(trace: np.ndarray, path) -> None:
    """Energy trace export: ``iter,bulk,surface,total`` per row."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("iter,bulk,surface,total\n")
        for i, (bulk, surface, total) in enumerate(np.asarray(trace).reshape(-1, 3)):
            f.write(f"{i},{float(bulk)!r},{float(surface)!r},{float(total)!r}\n")
