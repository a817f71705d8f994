"""Brittle damage coupled with fracture: sharp and relaxed descent models.

Two variants share the cut/balance machinery.  The sharp model tracks a
0/1 sound indicator per triangle and charges the damage interface
perimeter together with the crack length (shared segments counted once).
The relaxed model lets the indicator mix into a density theta in [0, 1]
acting as a stiffness multiplier, drops perimeter control (fine mixtures
are allowed) and keeps curvature diagnostics on the crack instead: at a
minimizer the crack curvature is bounded by twice the volumetric damage
threshold over the Griffith constant.

The descent alternates two exact substeps: "balance" re-solves the
variable-stiffness equilibrium, "cut" removes overloaded material.  Both
substeps are non-increasing for the floored-coefficient energy that the
driver traces, and the damaged set never shrinks within a run (stiffness
removal is irreversible here, which is what makes the trace a descent).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from . import fem
from .equilibrium import DirichletData, EnergyReport
from .errors import ParameterError
from .mesh import Mesh, edge_to_triangles, mean_edge_length
from .paths import CrackPath

STIFFNESS_FLOOR = 1.0e-6

SHARP = "sharp"
RELAXED = "relaxed"


@dataclass(frozen=True)
class DamageState:
    """Per-triangle damage density plus the displacement and crack geometry.

    In sharp mode ``theta`` takes values in {0, 1} (the sound indicator);
    in relaxed mode any value in [0, 1].
    """

    theta: np.ndarray
    u: np.ndarray
    crack: CrackPath | None
    gamma: float
    gc: float
    mode: str = SHARP
    converged: bool = True

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).ravel()
        if self.mode not in (SHARP, RELAXED):
            raise ParameterError(f"mode must be '{SHARP}' or '{RELAXED}', got {self.mode!r}")
        if self.gamma <= 0 or self.gc <= 0:
            raise ParameterError("gamma and gc must be positive")
        if theta.min(initial=0.0) < 0 or theta.max(initial=0.0) > 1:
            raise ParameterError("theta must lie in [0, 1]")
        if self.mode == SHARP and np.any((theta != 0.0) & (theta != 1.0)):
            raise ParameterError("sharp mode requires theta in {0, 1}")
        object.__setattr__(self, "theta", theta)

    @property
    def sound(self) -> np.ndarray:
        return self.theta >= 0.5


def _energy_density(mesh: Mesh, u: np.ndarray) -> np.ndarray:
    g = fem.gradient(mesh, u)
    return 0.5 * np.sum(g * g, axis=1)


def _interface_edges(mesh: Mesh, sound: np.ndarray):
    """Interior edges separating sound from damaged triangles."""
    edges = []
    for key, tris in edge_to_triangles(mesh).items():
        if len(tris) == 2 and sound[tris[0]] != sound[tris[1]]:
            edges.append(key)
    return edges


def _crack_length_outside(mesh: Mesh, crack: CrackPath | None,
                          interface_edges, sound: np.ndarray | None) -> float:
    """Crack length, skipping runs already on the interface or in damaged zones.

    Crack segments are subdivided at mesh scale; a piece is dropped when it
    lies on an interface edge (counted once there) or sits inside a
    damaged triangle (the model keeps the crack inside the sound region).
    """
    if crack is None or crack.is_empty:
        return 0.0
    from .geodesics import _locate
    p = mesh.vertices
    h = mean_edge_length(mesh)
    tol = 1e-8 * max(1.0, h)
    if interface_edges:
        seg_a = np.array([p[a] for a, _ in interface_edges])
        seg_b = np.array([p[b] for _, b in interface_edges])

    def on_interface(point):
        if not interface_edges:
            return False
        d = seg_b - seg_a
        w = point[None, :] - seg_a
        t = np.clip(np.sum(w * d, axis=1) / np.sum(d * d, axis=1), 0.0, 1.0)
        dist = np.linalg.norm(w - t[:, None] * d, axis=1)
        return bool(np.any(dist <= tol))

    total = 0.0
    for a, b in crack.segments():
        seg_len = float(np.linalg.norm(b - a))
        n = max(1, int(np.ceil(seg_len / (0.5 * h))))
        for k in range(n):
            lo = a + (b - a) * (k / n)
            hi = a + (b - a) * ((k + 1) / n)
            mid = 0.5 * (lo + hi)
            if on_interface(mid):
                continue
            if sound is not None:
                try:
                    tid = int(_locate(mesh, mid[None, :])[0])
                    if not sound[tid]:
                        continue
                except Exception:
                    pass
            total += seg_len / n
    return total


def sharp_energy(state: DamageState, mesh: Mesh) -> EnergyReport:
    """Sound-region energy with perimeter control.

    bulk integrates (density - gamma) over the sound region only; surface
    charges gc times the union of the crack and the sound/damaged
    interface (shared segments once, crack clipped to the sound region).
    """
    if state.mode != SHARP:
        raise ParameterError("sharp_energy requires a sharp-mode state")
    u = fem.as_nodal_field(mesh, state.u)
    geo = fem.tri_geometry(mesh)
    dens = _energy_density(mesh, u)
    sound = state.sound
    bulk = float(np.sum((dens[sound] - state.gamma) * geo.areas[sound]))

    interface = _interface_edges(mesh, sound)
    p = mesh.vertices
    interface_len = float(sum(np.linalg.norm(p[a] - p[b]) for a, b in interface))
    crack_len = _crack_length_outside(mesh, state.crack, interface, sound)
    return EnergyReport(bulk=bulk, surface=state.gc * (interface_len + crack_len))


def relaxed_energy(state: DamageState, mesh: Mesh) -> EnergyReport:
    """Mixture energy: theta-weighted (density - gamma), no perimeter term."""
    u = fem.as_nodal_field(mesh, state.u)
    geo = fem.tri_geometry(mesh)
    dens = _energy_density(mesh, u)
    bulk = float(np.sum(state.theta * (dens - state.gamma) * geo.areas))
    crack_len = state.crack.length() if state.crack is not None else 0.0
    return EnergyReport(bulk=bulk, surface=state.gc * crack_len)


def _floored_total(state: DamageState, mesh: Mesh) -> float:
    """Lyapunov function of the descent: stiffness floored at the solver floor.

    Using max(theta, floor) in the elastic term makes both substeps exact
    minimizers of the same functional, so the trace is provably
    non-increasing; it differs from the reported energies by at most
    floor * bulk.
    """
    u = fem.as_nodal_field(mesh, state.u)
    geo = fem.tri_geometry(mesh)
    dens = _energy_density(mesh, u)
    coeff = np.maximum(state.theta, STIFFNESS_FLOOR)
    bulk = float(np.sum((coeff * dens - state.gamma * state.theta) * geo.areas))
    crack_len = state.crack.length() if state.crack is not None else 0.0
    return bulk + state.gc * crack_len


def balance_step(mesh: Mesh, state: DamageState, data: DirichletData) -> np.ndarray:
    """Re-solve equilibrium with the damaged stiffness (floored for solvability)."""
    coeff = np.maximum(state.theta, STIFFNESS_FLOOR)
    K = fem.stiffness_matrix(mesh, coeff)
    fixed, vals = fem.dirichlet_values(mesh, data.on_gamma_u1, data.on_gamma_u2)
    if fixed.size == 0:
        raise ParameterError("mesh has no GAMMA_U boundary to impose data on")
    return fem.solve_dirichlet(mesh, K, fixed, vals)


def cut_step(mesh: Mesh, state: DamageState, ball_radius: float | None = None) -> DamageState:
    """Damage every triangle whose ball-averaged energy density exceeds gamma.

    The ball average mollifies the pointwise criterion; radius defaults to
    twice the mean edge length (the smallest mesh-resolvable ball).  If the
    ball-marked set would raise the energy (possible when cold triangles
    ride along with hot neighbours), it shrinks to the pointwise-overloaded
    subset, which is non-increasing triangle by triangle.  Damage is
    irreversible: already-removed stiffness stays removed.  Re-balancing is
    the driver's job.
    """
    if ball_radius is None:
        ball_radius = 2.0 * mean_edge_length(mesh)
    if ball_radius <= 0:
        raise ParameterError("ball_radius must be positive")
    geo = fem.tri_geometry(mesh)
    dens = _energy_density(mesh, state.u)
    tree = cKDTree(geo.centroids)
    groups = tree.query_ball_point(geo.centroids, ball_radius)
    avg = np.empty(mesh.n_triangles)
    for i, grp in enumerate(groups):
        idx = np.asarray(grp, dtype=int)
        w = geo.areas[idx]
        avg[i] = float(np.dot(dens[idx], w) / np.sum(w))
    marked = avg > state.gamma

    newly = marked & (state.theta > 0.0)
    if np.any(newly):
        removed_integral = float(np.sum((dens[newly] - state.gamma) * geo.areas[newly]))
        if removed_integral < 0.0:
            # keep only strict pointwise overloads; each lowers the energy
            newly = newly & (dens * (1.0 - STIFFNESS_FLOOR) > state.gamma)
    theta = state.theta.copy()
    theta[newly] = 0.0
    return replace(state, theta=theta)


def _pointwise_update(mesh: Mesh, state: DamageState) -> DamageState:
    """Relaxed-mode density update at fixed displacement.

    theta -> 0 where the density exceeds gamma (strictly, beyond the
    stiffness-floor margin), theta -> 1 where it falls below, unchanged at
    equality; triangles already at theta = 0 stay damaged.
    """
    dens = _energy_density(mesh, state.u)
    theta = state.theta.copy()
    damage = dens * (1.0 - STIFFNESS_FLOOR) > state.gamma
    heal = (dens < state.gamma) & (theta > 0.0)
    theta[heal] = 1.0
    theta[damage] = 0.0
    return replace(state, theta=theta)


def minimize_damage(mesh: Mesh, data: DirichletData, gamma: float, gc: float,
                    mode: str = SHARP, max_iters: int = 50, tol: float = 1e-10,
                    crack: CrackPath | None = None,
                    theta0: np.ndarray | None = None,
                    ball_radius: float | None = None) -> tuple[DamageState, np.ndarray]:
    """Alternate cut and balance until the damage pattern stabilizes.

    Returns the final state and the energy trace (one entry after every
    substep, non-increasing).  The trace records the floored-coefficient
    total actually minimized by the substeps.
    """
    if max_iters < 1:
        raise ParameterError(f"max_iters must be >= 1, got {max_iters}")
    if tol < 0:
        raise ParameterError(f"tol must be >= 0, got {tol}")
    n = mesh.n_triangles
    theta = np.ones(n) if theta0 is None else np.asarray(theta0, dtype=float).ravel()
    state = DamageState(theta=theta, u=np.zeros(mesh.n_vertices), crack=crack,
                        gamma=gamma, gc=gc, mode=mode)

    trace = []
    converged = False
    for _ in range(max_iters):
        u = balance_step(mesh, state, data)
        state = replace(state, u=u)
        trace.append(_floored_total(state, mesh))

        prev_theta = state.theta
        if mode == SHARP:
            state = cut_step(mesh, state, ball_radius)
        else:
            state = _pointwise_update(mesh, state)
        trace.append(_floored_total(state, mesh))

        stable = np.array_equal(prev_theta, state.theta)
        small = len(trace) >= 4 and (trace[-3] - trace[-1]) <= tol * max(1.0, abs(trace[-3]))
        if stable and small:
            converged = True
            break
    state = replace(state, converged=converged)
    return state, np.array(trace)


# ---------------------------------------------------------------------------
# Curvature diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurvatureReport:
    max_discrete_curvature: float
    bound: float
    per_vertex: tuple = ()
    violation: bool = False
    too_short: bool = False
    allowance: float = 0.25

    def as_dict(self) -> dict:
        return {"max_discrete_curvature": self.max_discrete_curvature,
                "bound": self.bound, "violation": self.violation,
                "too_short": self.too_short, "allowance": self.allowance}


def _chain_curvatures(chain: np.ndarray, closed: bool) -> np.ndarray:
    """Discrete curvature per interior vertex: turning angle / mean segment."""
    pts = np.asarray(chain, dtype=float)
    if closed and np.allclose(pts[0], pts[-1]):
        pts = pts[:-1]
    npts = pts.shape[0]
    out = []
    rng = range(npts) if closed else range(1, npts - 1)
    for i in rng:
        prev_pt = pts[(i - 1) % npts]
        next_pt = pts[(i + 1) % npts]
        e1 = pts[i] - prev_pt
        e2 = next_pt - pts[i]
        l1, l2 = np.linalg.norm(e1), np.linalg.norm(e2)
        if l1 == 0 or l2 == 0:
            out.append(0.0)
            continue
        cross = e1[0] * e2[1] - e1[1] * e2[0]
        dot = float(np.dot(e1, e2))
        angle = np.arctan2(cross, dot)
        out.append(angle / (0.5 * (l1 + l2)))
    return np.array(out)


def curvature_check(crack: CrackPath, gamma: float, gc: float,
                    allowance: float = 0.25) -> CurvatureReport:
    """Check the discrete crack curvature against the minimizer bound 2*gamma/gc."""
    if gamma <= 0 or gc <= 0:
        raise ParameterError("gamma and gc must be positive")
    bound = 2.0 * gamma / gc
    per_vertex = []
    too_short = False
    for chain, closed in zip(crack.chains, crack.closed):
        if chain.shape[0] < 3:
            too_short = True
            per_vertex.append(np.zeros(0))
            continue
        per_vertex.append(_chain_curvatures(chain, closed))
    max_curv = max((float(np.abs(k).max()) for k in per_vertex if k.size), default=0.0)
    violation = max_curv > bound * (1.0 + allowance)
    return CurvatureReport(max_discrete_curvature=max_curv, bound=bound,
                           per_vertex=tuple(per_vertex), violation=violation,
                           too_short=too_short, allowance=allowance)


def curvature_balance_residual(mesh: Mesh, state: DamageState,
                               patch_radius: float | None = None):
    """Per-crack-vertex residual of [density jump] = gc * curvature.

    One-sided patch recovery of the energy density on each side of the
    crack; a diagnostic only, since the relation holds just formally for
    non-smooth cracks.  Returns a list of (points, residuals) per chain,
    empty when there is no crack.
    """
    if state.crack is None or state.crack.is_empty:
        return []
    if patch_radius is None:
        patch_radius = 3.0 * mean_edge_length(mesh)
    geo = fem.tri_geometry(mesh)
    dens = _energy_density(mesh, state.u)
    tree = cKDTree(geo.centroids)
    out = []
    for chain, closed in zip(state.crack.chains, state.crack.closed):
        pts = np.asarray(chain, dtype=float)
        wrap = closed and np.allclose(pts[0], pts[-1])
        core = pts[:-1] if wrap else pts
        npts = core.shape[0]
        curvs = _chain_curvatures(chain, closed)
        if npts < 3:
            out.append((core, np.zeros(0)))
            continue
        idx_range = range(npts) if closed else range(1, npts - 1)
        residuals = []
        locs = []
        for j, i in enumerate(idx_range):
            p = core[i]
            tangent = core[(i + 1) % npts] - core[(i - 1) % npts]
            nt = np.linalg.norm(tangent)
            if nt == 0:
                continue
            tangent /= nt
            normal = np.array([-tangent[1], tangent[0]])
            near = np.asarray(tree.query_ball_point(p, patch_radius), dtype=int)
            if near.size == 0:
                continue
            side = (geo.centroids[near] - p) @ normal
            left = near[side > 1e-12]
            right = near[side < -1e-12]
            if left.size == 0 and right.size == 0:
                continue
            # a side with no material (hole, detached grip) counts as vacuum
            w_left = (float(np.dot(dens[left], geo.areas[left]) / np.sum(geo.areas[left]))
                      if left.size else 0.0)
            w_right = (float(np.dot(dens[right], geo.areas[right]) / np.sum(geo.areas[right]))
                       if right.size else 0.0)
            residuals.append(abs((w_left - w_right) - state.gc * curvs[j]))
            locs.append(p)
        out.append((np.array(locs).reshape(-1, 2), np.array(residuals)))
    return out


def state_to_csv(mesh: Mesh, state: DamageState, path) -> None:
    """Per-triangle export: ``tri_id,theta,sound,energy_density``."""
    dens = _energy_density(mesh, state.u)
    with open(path, "w", encoding="utf-8") as f:
        f.write("tri_id,theta,sound,energy_density\n")
        for i, (th, s, d) in enumerate(zip(state.theta, state.sound, dens)):
            f.write(f"{i},{float(th)!r},{int(s)},{float(d)!r}\n")
