"""Shared fixtures; the expensive phase-field runs are session-scoped."""

import time

import numpy as np
import pytest

from geofrac.equilibrium import DirichletData, solve_equilibrium
from geofrac.geodesics import separating_geodesic
from geofrac.mesh import build_annulus, build_rectangle
from geofrac.mumford_shah import (alternate_minimize, band_seed, critical_delta_bracket,
                                  multistart_minimize)

RING_R = 1.0
RING_OUTER = float(np.e)
GC = 0.5

# phase-field configuration for the ring studies: the regularization length
# must keep the finite-eps strength above the critical load (strength scales
# like sqrt(gc/eps)), and the radial spacing must resolve the profile
AT_RING = dict(n_radial=160, n_angular=96, epsilon=0.035, eta=1e-6,
               tol=1e-5, max_iters=200)


@pytest.fixture(scope="session")
def annulus16():
    return build_annulus(RING_R, RING_OUTER, 16, 64)


@pytest.fixture(scope="session")
def annulus32():
    return build_annulus(RING_R, RING_OUTER, 32, 128)


@pytest.fixture(scope="session")
def rect_small():
    return build_rectangle(1.0, 2.0, 8, 16)


@pytest.fixture(scope="session")
def rect_medium():
    return build_rectangle(1.0, 2.0, 32, 64)


@pytest.fixture(scope="session")
def annulus16_field(annulus16):
    return solve_equilibrium(annulus16, DirichletData(0.0, 1.0))


@pytest.fixture(scope="session")
def at_ring_mesh():
    return build_annulus(RING_R, RING_OUTER, AT_RING["n_radial"], AT_RING["n_angular"])


@pytest.fixture(scope="session")
def at_ring_low(at_ring_mesh):
    """Converged phase-field state well below the critical load."""
    state, trace = alternate_minimize(
        at_ring_mesh, DirichletData(0.0, 0.8), GC, epsilon=AT_RING["epsilon"],
        eta=AT_RING["eta"], max_iters=AT_RING["max_iters"], tol=AT_RING["tol"])
    return state, trace


@pytest.fixture(scope="session")
def at_ring_high(at_ring_mesh):
    """Best-of-starts converged state above the critical load (cracked)."""
    state, trace = multistart_minimize(
        at_ring_mesh, DirichletData(0.0, 1.3), GC, epsilon=AT_RING["epsilon"],
        eta=AT_RING["eta"], max_iters=AT_RING["max_iters"], tol=AT_RING["tol"],
        seed_paths=[separating_geodesic(at_ring_mesh)])
    return state, trace


@pytest.fixture(scope="session")
def ring_bisection(at_ring_mesh):
    """Critical-load bisection on the ring, with wall-clock timing."""
    t0 = time.perf_counter()
    result = critical_delta_bracket(
        at_ring_mesh, GC, 0.7, 1.4, epsilon=AT_RING["epsilon"],
        eta=AT_RING["eta"], max_iters=150, tol=AT_RING["tol"], n_steps=6)
    result["elapsed_s"] = time.perf_counter() - t0
    return result


@pytest.fixture(scope="session")
def rect_band_states(rect_medium):
    """Converged phase-field states seeded with bands at three heights."""
    from geofrac.paths import path_from_segment

    eps = 0.14
    delta = 1.8
    out = {}
    for y in (0.5, 1.0, 1.5):
        seed = band_seed(rect_medium, path_from_segment((0.0, y), (1.0, y)), eps)
        state, trace = alternate_minimize(
            rect_medium, DirichletData(0.0, delta), GC, epsilon=eps,
            max_iters=200, tol=1e-6, z0=seed)
        out[y] = (state, trace)
    return out
