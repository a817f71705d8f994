"""Cut/balance damage descent, mixture energies, curvature diagnostics.

Ring oracle: with load Delta and threshold gamma between the extreme
elastic densities, the overloaded zone is the inner band rho < rho* with
0.5*(Delta/(rho* log(R/r)))^2 = gamma, i.e. rho* = Delta/sqrt(2*gamma).
"""

import numpy as np
import pytest

import geofrac.fem as fem
from geofrac.damage import (RELAXED, SHARP, DamageState, balance_step,
                            curvature_balance_residual, curvature_check, cut_step,
                            minimize_damage, relaxed_energy, sharp_energy, state_to_csv,
                            _pointwise_update)
from geofrac.equilibrium import DirichletData, bulk_energy, solve_equilibrium
from geofrac.errors import ParameterError
from geofrac.mesh import build_annulus, build_rectangle, insert_slit
from geofrac.paths import CrackPath, path_from_circle, path_from_segment

E = float(np.e)
UNIT = DirichletData(0.0, 1.0)


def sound_state(mesh, u, gamma=0.2, gc=0.5, mode=SHARP, theta=None, crack=None):
    theta = np.ones(mesh.n_triangles) if theta is None else theta
    return DamageState(theta=theta, u=u, crack=crack, gamma=gamma, gc=gc, mode=mode)


class TestSharpEnergy:
    def test_all_sound(self, rect_small):
        u = solve_equilibrium(rect_small, UNIT)
        state = sound_state(rect_small, u, gamma=0.1)
        report = sharp_energy(state, rect_small)
        area = fem.tri_geometry(rect_small).areas.sum()
        assert report.surface == 0.0
        assert report.bulk == pytest.approx(bulk_energy(rect_small, u) - 0.1 * area, rel=1e-12)

    def test_all_damaged(self, rect_small):
        state = sound_state(rect_small, np.zeros(rect_small.n_vertices),
                            theta=np.zeros(rect_small.n_triangles))
        report = sharp_energy(state, rect_small)
        assert report.bulk == 0.0
        assert report.surface == 0.0  # no interior interface when nothing is sound

    def test_half_sound_interface(self, rect_small):
        centroids = fem.tri_geometry(rect_small).centroids
        theta = (centroids[:, 1] < 1.0).astype(float)
        u = solve_equilibrium(rect_small, UNIT)
        state = sound_state(rect_small, u, gc=0.5, theta=theta)
        report = sharp_energy(state, rect_small)
        assert report.surface == pytest.approx(0.5 * 1.0, abs=1e-12)

    def test_crack_and_interface_counted_once(self, rect_small):
        centroids = fem.tri_geometry(rect_small).centroids
        theta = (centroids[:, 1] < 1.0).astype(float)
        u = solve_equilibrium(rect_small, UNIT)
        crack = path_from_segment((0.0, 1.0), (1.0, 1.0))  # lies on the interface
        state = sound_state(rect_small, u, gc=0.5, theta=theta, crack=crack)
        report = sharp_energy(state, rect_small)
        assert report.surface == pytest.approx(0.5 * 1.0, abs=1e-9)

    def test_mode_guard(self, rect_small):
        u = solve_equilibrium(rect_small, UNIT)
        state = sound_state(rect_small, u, mode=RELAXED,
                            theta=np.full(rect_small.n_triangles, 0.5))
        with pytest.raises(ParameterError):
            sharp_energy(state, rect_small)


class TestRelaxedEnergy:
    def test_matches_sharp_when_binary(self, rect_small):
        u = solve_equilibrium(rect_small, UNIT)
        sharp = sound_state(rect_small, u, gamma=0.3)
        relaxed = sound_state(rect_small, u, gamma=0.3, mode=RELAXED)
        assert relaxed_energy(relaxed, rect_small).total == pytest.approx(
            sharp_energy(sharp, rect_small).total, rel=1e-12)

    def test_binary_mixture_differs_by_interface(self, rect_small):
        centroids = fem.tri_geometry(rect_small).centroids
        theta = (centroids[:, 1] < 1.0).astype(float)
        u = solve_equilibrium(rect_small, UNIT)
        gc = 0.5
        sharp = sound_state(rect_small, u, gc=gc, theta=theta)
        relaxed = sound_state(rect_small, u, gc=gc, theta=theta, mode=RELAXED)
        diff = sharp_energy(sharp, rect_small).total - relaxed_energy(relaxed, rect_small).total
        assert diff == pytest.approx(gc * 1.0, abs=1e-9)  # the interface term

    def test_zero_density(self, rect_small):
        state = sound_state(rect_small, np.zeros(rect_small.n_vertices),
                            theta=np.zeros(rect_small.n_triangles), mode=RELAXED)
        assert relaxed_energy(state, rect_small).bulk == 0.0

    def test_uniform_half_mixture_hand_integral(self, rect_small):
        # constant theta keeps the balanced field linear: bulk =
        # theta * (integral of density - gamma * area)
        gamma = 0.05
        theta = np.full(rect_small.n_triangles, 0.5)
        state = sound_state(rect_small, np.zeros(rect_small.n_vertices),
                            gamma=gamma, theta=theta, mode=RELAXED)
        u = balance_step(rect_small, state, UNIT)
        assert np.abs(u - rect_small.vertices[:, 1] / 2.0).max() < 1e-9
        from dataclasses import replace
        report = relaxed_energy(replace(state, u=u), rect_small)
        assert report.bulk == pytest.approx(0.5 * (0.25 - gamma * 2.0), rel=1e-9)


class TestBalanceStep:
    def test_sound_matches_equilibrium(self, rect_small):
        state = sound_state(rect_small, np.zeros(rect_small.n_vertices))
        u = balance_step(rect_small, state, UNIT)
        assert np.abs(u - solve_equilibrium(rect_small, UNIT)).max() < 1e-10

    def test_soft_band_series_oracle(self):
        # 1D springs in series: a soft horizontal band of height b and
        # stiffness eta concentrates almost the whole jump
        mesh = build_rectangle(1.0, 2.0, 8, 32)
        centroids = fem.tri_geometry(mesh).centroids
        band = (centroids[:, 1] > 0.9375) & (centroids[:, 1] < 1.0625)
        theta = np.where(band, 0.0, 1.0)
        state = sound_state(mesh, np.zeros(mesh.n_vertices), theta=theta)
        u = balance_step(mesh, state, UNIT)
        eta, b, L = 1e-6, 0.125, 2.0
        g_band = 1.0 / (b + eta * (L - b))  # flux balance, unit jump
        y = mesh.vertices[:, 1]
        jump = u[y >= 1.0625].min() - u[y <= 0.9375].max()
        assert jump == pytest.approx(g_band * b, rel=1e-3)
        # the damage-weighted elastic energy drops below the sound one
        geo = fem.tri_geometry(mesh)
        g = fem.gradient(mesh, u)
        weighted = 0.5 * float(np.sum(np.maximum(theta, eta)
                                      * np.sum(g * g, axis=1) * geo.areas))
        assert weighted <= bulk_energy(mesh, solve_equilibrium(mesh, UNIT)) + 1e-12

    def test_zero_data(self, rect_small):
        state = sound_state(rect_small, np.zeros(rect_small.n_vertices))
        u = balance_step(rect_small, state, DirichletData(0.0, 0.0))
        assert np.abs(u).max() == 0.0


class TestCutStep:
    def test_below_threshold_unchanged(self, rect_small):
        u = solve_equilibrium(rect_small, UNIT)  # density 1/8 everywhere
        state = sound_state(rect_small, u, gamma=0.5)
        out = cut_step(rect_small, state)
        assert np.array_equal(out.theta, state.theta)

    def test_above_threshold_all_damaged(self, rect_small):
        u = solve_equilibrium(rect_small, DirichletData(0.0, 4.0))  # density 2
        state = sound_state(rect_small, u, gamma=0.5)
        out = cut_step(rect_small, state)
        assert np.all(out.theta == 0.0)

    def test_ring_band_matches_oracle(self, annulus32):
        delta, gamma = 1.0, 0.18
        rho_star = delta / np.sqrt(2 * gamma)
        u = solve_equilibrium(annulus32, DirichletData(0.0, delta))
        state = sound_state(annulus32, u, gamma=gamma)
        out = cut_step(annulus32, state)
        centroids = fem.tri_geometry(annulus32).centroids
        rho = np.linalg.norm(centroids, axis=1)
        damaged = out.theta == 0.0
        h = (E - 1.0) / 32
        assert abs(rho[damaged].max() - rho_star) <= 2 * h
        assert rho[~damaged].min() >= rho_star - 2 * h


class TestMinimizeDamage:
    def test_below_onset_stays_sound(self, rect_small):
        state, trace = minimize_damage(rect_small, UNIT, gamma=0.5, gc=0.5, mode=SHARP)
        assert state.converged
        assert np.all(state.sound)
        assert len(trace) <= 4  # settles immediately

    def test_ring_band_converges_to_oracle(self, annulus32):
        delta, gamma = 1.0, 0.18
        rho_star = delta / np.sqrt(2 * gamma)
        state, trace = minimize_damage(annulus32, DirichletData(0.0, delta),
                                       gamma=gamma, gc=0.5, mode=SHARP, max_iters=30)
        assert state.converged
        centroids = fem.tri_geometry(annulus32).centroids
        rho = np.linalg.norm(centroids, axis=1)
        damaged = ~state.sound
        h = (E - 1.0) / 32
        assert abs(rho[damaged].max() - rho_star) <= 2 * h
        diffs = np.diff(trace)
        assert np.all(diffs <= 1e-12)
        assert diffs[0] < 0  # strictly decreasing until the fixed point

    def test_huge_gamma_plain_equilibrium(self, rect_small):
        state, _ = minimize_damage(rect_small, UNIT, gamma=1e6, gc=0.5, mode=SHARP)
        assert np.all(state.sound)
        assert np.abs(state.u - solve_equilibrium(rect_small, UNIT)).max() < 1e-10

    def test_relaxed_mode_monotone_damage(self, annulus32):
        # the damaged set never shrinks across iterations
        delta, gamma = 1.0, 0.18
        state = DamageState(theta=np.ones(annulus32.n_triangles),
                            u=np.zeros(annulus32.n_vertices), crack=None,
                            gamma=gamma, gc=0.5, mode=RELAXED)
        from dataclasses import replace
        damaged_prev = np.zeros(annulus32.n_triangles, dtype=bool)
        for _ in range(6):
            u = balance_step(annulus32, state, DirichletData(0.0, delta))
            state = replace(state, u=u)
            state = _pointwise_update(annulus32, state)
            damaged_now = state.theta == 0.0
            assert np.all(damaged_now | ~damaged_prev)  # no healing
            damaged_prev = damaged_now

    def test_theta_stays_in_box(self, annulus32):
        state, _ = minimize_damage(annulus32, DirichletData(0.0, 1.2), gamma=0.3,
                                   gc=0.5, mode=RELAXED, max_iters=20)
        assert state.theta.min() >= 0.0 and state.theta.max() <= 1.0

    def test_descent_randomized(self, rng_cases=12):
        rng = np.random.default_rng(42)
        for _ in range(rng_cases):
            if rng.random() < 0.5:
                mesh = build_annulus(1.0, float(rng.uniform(1.8, 3.0)),
                                     int(rng.integers(8, 16)), int(rng.integers(24, 48)))
            else:
                mesh = build_rectangle(float(rng.uniform(0.5, 2.0)),
                                       float(rng.uniform(1.0, 3.0)),
                                       int(rng.integers(6, 14)), int(rng.integers(8, 20)))
            delta = float(rng.uniform(0.3, 2.5))
            gamma = float(rng.uniform(0.05, 1.0))
            mode = SHARP if rng.random() < 0.5 else RELAXED
            _, trace = minimize_damage(mesh, DirichletData(0.0, delta), gamma=gamma,
                                       gc=0.5, mode=mode, max_iters=12)
            assert np.all(np.diff(trace) <= 1e-12 * np.maximum(1.0, np.abs(trace[:-1])))


class TestCurvature:
    def test_straight_chain(self):
        chain = CrackPath.single(np.column_stack([np.linspace(0, 1, 9), np.zeros(9)]))
        report = curvature_check(chain, gamma=0.5, gc=0.5)
        assert report.max_discrete_curvature == 0.0
        assert not report.violation

    def test_polygon_circle(self):
        report = curvature_check(path_from_circle(2.0, 64), gamma=2.0, gc=0.5)
        assert report.max_discrete_curvature == pytest.approx(0.5, rel=0.10)

    def test_violating_circle_flagged(self):
        # curvature 1/rho = 2 exceeds bound 1.2 even with the 25% allowance
        report = curvature_check(path_from_circle(0.5, 64), gamma=0.3, gc=0.5)
        assert report.violation

    def test_short_chain_flagged(self):
        chain = path_from_segment((0.0, 0.0), (1.0, 0.0))
        report = curvature_check(chain, gamma=0.5, gc=0.5)
        assert report.too_short
        assert report.max_discrete_curvature == 0.0

    def test_parameter_guard(self):
        with pytest.raises(ParameterError):
            curvature_check(path_from_circle(1.0, 16), gamma=0.0, gc=0.5)


class TestCurvatureBalance:
    def test_symmetric_slit_residual_small(self):
        mesh = build_rectangle(1.0, 2.0, 32, 64)
        xs = np.linspace(0.25, 0.75, 17)
        slit_path = CrackPath.single(np.column_stack([xs, np.full_like(xs, 1.0)]))
        slit = insert_slit(mesh, slit_path)
        u = solve_equilibrium(slit, UNIT)
        gamma = 1.0
        state = DamageState(theta=np.ones(slit.n_triangles), u=u, crack=slit_path,
                            gamma=gamma, gc=0.5, mode=RELAXED)
        chunks = curvature_balance_residual(slit, state)
        residuals = np.concatenate([r for _, r in chunks])
        assert residuals.size > 0
        assert residuals.max() <= 0.1 * gamma

    def test_detached_ring_reports_curvature_term(self, annulus16):
        circle = path_from_circle(1.0, 64)
        slit = insert_slit(annulus16, circle)
        u = solve_equilibrium(slit, UNIT)
        state = DamageState(theta=np.ones(slit.n_triangles), u=u, crack=circle,
                            gamma=1.0, gc=0.5, mode=RELAXED)
        chunks = curvature_balance_residual(slit, state)
        residuals = np.concatenate([r for _, r in chunks])
        # both sides unloaded: the residual reduces to gc * curvature = 0.5
        assert residuals.mean() == pytest.approx(0.5, rel=0.05)

    def test_no_crack_empty(self, rect_small):
        u = solve_equilibrium(rect_small, UNIT)
        state = sound_state(rect_small, u, mode=RELAXED)
        assert curvature_balance_residual(rect_small, state) == []


class TestExport:
    def test_state_csv(self, tmp_path, rect_small):
        u = solve_equilibrium(rect_small, UNIT)
        state = sound_state(rect_small, u)
        out = tmp_path / "state.csv"
        state_to_csv(rect_small, state, out)
        rows = out.read_text().strip().splitlines()
        assert rows[0] == "tri_id,theta,sound,energy_density"
        assert len(rows) == rect_small.n_triangles + 1
