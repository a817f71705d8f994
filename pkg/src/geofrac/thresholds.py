"""Critical-load thresholds and convex-duality certificates.

The no-crack and must-crack load thresholds come from the gradient bounds
of the unit-data equilibrium field; the sharp threshold is the load at
which the uncracked energy equals the cost of the shortest separating
set.  Admissible piecewise stresses (the exact field outside a
congruence-aligned region, zero inside) produce certified lower bounds on
the elastic energy of any cracked configuration.

Classical statements of these constants set 2G = 1; this module keeps the
Griffith factor explicit, i.e. thresholds are the squared load levels
``2*gc/C`` and ``2*gc/c`` with c, C the unit-data gradient bounds, and the
worked ring/rectangle values are recovered at gc = 0.5.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import fem
from .equilibrium import (DirichletData, EnergyReport, StressField, bulk_energy,
                          divergence_residual, solve_equilibrium)
from .errors import AdmissibilityError, ConsistencyError, ParameterError
from .geodesics import separating_geodesic
from .mesh import Mesh, edge_to_triangles

NORMALIZATION_NOTE = (
    "thresholds are squared-load levels computed from unit-data gradient "
    "bounds; the classical ring/rectangle constants correspond to 2*gc = 1")

# Admissibility tolerances: divergence residual away from the piecewise
# interface, and traction jump across it (mesh-limited on curved interfaces).
DIV_RTOL = 1.0e-6
JUMP_RTOL = 0.05


@dataclass(frozen=True)
class ThresholdReport:
    m: float
    M: float
    c: float
    C: float
    exact_threshold: float
    geodesic_length: float
    degenerate: bool = False
    note: str = NORMALIZATION_NOTE

    def as_dict(self) -> dict:
        return {"m": self.m, "M": self.M, "c": self.c, "C": self.C,
                "exact_threshold": self.exact_threshold,
                "geodesic_length": self.geodesic_length,
                "degenerate": self.degenerate, "note": self.note}


@dataclass(frozen=True)
class GapReport:
    gap: float
    relative_gap: float
    certified: bool

    def as_dict(self) -> dict:
        return {"gap": self.gap, "relative_gap": self.relative_gap,
                "certified": self.certified}


def gradient_bounds(mesh: Mesh, u_hat: np.ndarray) -> tuple[float, float]:
    """Min and max of the per-triangle gradient magnitude of the unit-data field."""
    g = fem.gradient(mesh, u_hat)
    mags = np.linalg.norm(g, axis=1)
    c, C = float(mags.min()), float(mags.max())
    if c <= 1e-12 * max(C, 1.0):
        warnings.warn("gradient bound c vanishes: threshold hypotheses violated "
                      "(degenerate field)", stacklevel=2)
    return c, C


def critical_thresholds(mesh: Mesh, gc: float) -> ThresholdReport:
    """Thresholds m <= M plus the sharp energy-balance threshold.

    ``exact_threshold`` is the squared load at which the uncracked energy
    equals the cost of the shortest separating set, i.e.
    gc * length(geodesic) / unit-data bulk energy.
    """
    if gc <= 0:
        raise ParameterError(f"surface energy density must be positive, got {gc}")
    u_hat = solve_equilibrium(mesh, DirichletData(0.0, 1.0))
    c, C = gradient_bounds(mesh, u_hat)
    degenerate = c <= 1e-12 * max(C, 1.0)
    geodesic = separating_geodesic(mesh)
    length = geodesic.length()
    unit_bulk = bulk_energy(mesh, u_hat)
    if unit_bulk <= 0:
        raise ParameterError("unit-data field has no elastic energy; thresholds undefined")
    exact = gc * length / unit_bulk
    m = 2.0 * gc / C if C > 0 else np.inf
    M = 2.0 * gc / c if c > 0 else np.inf
    return ThresholdReport(m=m, M=M, c=c, C=C, exact_threshold=exact,
                           geodesic_length=length, degenerate=degenerate)


def cut_stress_field(mesh: Mesh, u_gf: np.ndarray, omega_prime: np.ndarray) -> StressField:
    """Admissible stress: the uncracked gradient off ``omega_prime``, zero inside.

    ``omega_prime`` is a per-triangle indicator whose non-grip boundary
    must follow congruence curves, i.e. the interface tangent must align
    with the uncracked gradient; otherwise the normal traction would jump
    and the field would not be admissible.
    """
    omega = np.asarray(omega_prime, dtype=bool).ravel()
    if omega.shape[0] != mesh.n_triangles:
        raise ParameterError("omega_prime must be a per-triangle indicator")
    g = fem.gradient(mesh, u_gf)
    sigma = np.where(omega[:, None], 0.0, g)

    # traction continuity across the interface
    p = mesh.vertices
    jump_edges, jump_values = [], []
    worst = (0.0, None)
    for (a, b), tris in edge_to_triangles(mesh).items():
        if len(tris) != 2:
            continue
        t1, t2 = tris
        if omega[t1] == omega[t2]:
            continue
        outside = t2 if omega[t1] else t1
        tangent = p[b] - p[a]
        n = np.array([tangent[1], -tangent[0]])
        n /= np.linalg.norm(n)
        flux = abs(float(np.dot(g[outside], n)))
        mag = float(np.linalg.norm(g[outside]))
        jump_edges.append((a, b))
        jump_values.append(flux)
        ratio = flux / max(mag, 1e-30)
        if ratio > worst[0]:
            worst = (ratio, (a, b, flux, mag))
    if worst[1] is not None and worst[0] > JUMP_RTOL:
        a, b, flux, mag = worst[1]
        raise AdmissibilityError(
            f"omega_prime boundary is not congruence-aligned: edge ({a},{b}) at "
            f"{0.5 * (p[a] + p[b])} carries normal traction {flux:.3e} "
            f"({100 * worst[0]:.1f}% of |sigma|={mag:.3e}, tolerance {100 * JUMP_RTOL:.0f}%)")

    return StressField(
        sigma=sigma,
        div_residual=divergence_residual(mesh, sigma),
        jump_edges=np.array(jump_edges, dtype=np.int64).reshape(-1, 2),
        jump_values=np.array(jump_values, dtype=float),
    )


def dual_bound(mesh: Mesh, data: DirichletData, sigma: StressField) -> float:
    """Lower bound on the elastic energy from an admissible stress field.

    Evaluates boundary work minus the complementary energy,
    ``integral (sigma.n) u0 - 0.5 integral |sigma|^2``, with the boundary
    term computed through the consistent weak flux so the exact-solution
    pair certifies with machine-precision gap.  Raises when the stress
    fails the weak admissibility checks (the bound would be invalid).
    """
    fixed, vals = fem.dirichlet_values(mesh, data.on_gamma_u1, data.on_gamma_u2)
    if fixed.size == 0:
        raise ParameterError("mesh has no GAMMA_U boundary")
    sig = np.asarray(sigma.sigma, dtype=float)
    if sig.shape != (mesh.n_triangles, 2):
        raise ParameterError("stress field shape does not match the mesh")

    residual = divergence_residual(mesh, sig)
    exempt = np.zeros(mesh.n_vertices, dtype=bool)
    exempt[fixed] = True
    if sigma.jump_edges is not None and sigma.jump_edges.size:
        exempt[sigma.jump_edges.ravel()] = True
    from .mesh import mean_edge_length
    scale = max(float(np.abs(sig).max(initial=0.0)), 1e-30) * mean_edge_length(mesh)
    bad = np.flatnonzero(~exempt & (np.abs(residual) > DIV_RTOL * scale))
    if bad.size:
        worst = bad[np.argmax(np.abs(residual[bad]))]
        raise AdmissibilityError(
            f"stress field is not weakly divergence-free: residual "
            f"{residual[worst]:.3e} at vertex {worst} {mesh.vertices[worst]} "
            f"(tolerance {DIV_RTOL * scale:.3e})")

    boundary_work = float(np.dot(vals, residual[fixed]))
    areas = fem.tri_geometry(mesh).areas
    complementary = 0.5 * float(np.sum(areas * np.sum(sig * sig, axis=1)))
    return boundary_work - complementary


def certify_gap(primal: EnergyReport, dual: float,
                rel_tol: float = 0.01, allowance: float = 0.02) -> GapReport:
    """Optimality-gap certificate: gap = primal bulk - dual bound.

    A negative gap beyond the discretization allowance signals a bug or an
    inadmissible stress and raises ConsistencyError.
    """
    gap = primal.bulk - dual
    scale = max(abs(primal.bulk), 1e-12)
    if gap < -allowance * scale - 1e-12:
        raise ConsistencyError(
            f"dual bound {dual!r} exceeds primal bulk {primal.bulk!r} by more than "
            f"the {100 * allowance:.0f}% allowance; certificate invalid")
    relative = gap / scale
    return GapReport(gap=gap, relative_gap=relative, certified=relative < rel_tol)
