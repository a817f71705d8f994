"""Conjugate congruence, variation/projection measures, separating geodesics.

Oracles: the ring's conjugate is the polar angle over log(R/r) (period
2*pi/log(R/r)); the rectangle's is x/L.  Geodesic lengths come from the
geometry: 2*pi*r for the ring, the width a for the rectangle.
"""

import numpy as np
import pytest

import geofrac.fem as fem
from geofrac.equilibrium import DirichletData, solve_equilibrium
from geofrac.errors import GeometryError, ParameterError
from geofrac.geodesics import (conjugate_field, geodesic_summary, project_onto,
                               separating_geodesic, variation_over)
from geofrac.mesh import BoundaryLabel, Mesh, build_annulus, build_rectangle
from geofrac.paths import CrackPath, path_from_circle, path_from_segment

E = float(np.e)
UNIT = DirichletData(0.0, 1.0)


@pytest.fixture(scope="module")
def ring_congruence(annulus16, annulus16_field):
    return conjugate_field(annulus16, annulus16_field, 1.0)


@pytest.fixture(scope="module")
def rect_congruence(rect_small):
    u = solve_equilibrium(rect_small, UNIT)
    return conjugate_field(rect_small, u, 1.0)


class TestConjugate:
    def test_rectangle_gradient(self, rect_small, rect_congruence):
        # d(ubar)/dx = (1/delta) du/dy = 1/L, d(ubar)/dy = -(1/delta) du/dx = 0
        g = fem.gradient(rect_congruence.mesh, rect_congruence.ubar)
        assert np.abs(g[:, 0] - 0.5).max() < 1e-8
        assert np.abs(g[:, 1]).max() < 1e-8
        assert not rect_congruence.is_periodic

    def test_ring_period(self, ring_congruence):
        assert ring_congruence.is_periodic
        assert ring_congruence.period == pytest.approx(2.0 * np.pi, rel=0.02)

    def test_constant_field(self, rect_small):
        cong = conjugate_field(rect_small, np.full(rect_small.n_vertices, 2.0), 1.0)
        g = fem.gradient(cong.mesh, cong.ubar)
        assert np.abs(g).max() < 1e-10

    def test_nonpositive_delta_rejected(self, rect_small):
        u = solve_equilibrium(rect_small, UNIT)
        with pytest.raises(ParameterError):
            conjugate_field(rect_small, u, 0.0)

    def test_cauchy_riemann_residual_refines(self):
        residuals = []
        for n in (8, 16, 32):
            mesh = build_annulus(1.0, E, n, 4 * n)
            u = solve_equilibrium(mesh, UNIT)
            cong = conjugate_field(mesh, u, 1.0)
            geo = fem.tri_geometry(cong.mesh)
            rms = float(np.sqrt(np.sum(geo.areas * cong.cr_residual ** 2)
                                / np.sum(geo.areas)))
            residuals.append(rms)
        orders = [np.log2(residuals[k] / residuals[k + 1]) for k in range(2)]
        assert min(orders) >= 0.9


class TestVariation:
    def test_full_inner_circle(self, ring_congruence):
        circle = path_from_circle(1.0, 64)
        assert variation_over(ring_congruence, circle) == pytest.approx(2.0 * np.pi, rel=0.02)

    def test_radial_ray_zero(self, ring_congruence):
        th = np.pi / 3.0
        ray = path_from_segment((np.cos(th), np.sin(th)), (E * np.cos(th), E * np.sin(th)))
        assert variation_over(ring_congruence, ray) <= 0.05

    def test_rectangle_horizontal_line(self, rect_congruence):
        line = path_from_segment((0.0, 1.0), (1.0, 1.0))
        assert variation_over(rect_congruence, line) == pytest.approx(0.5, abs=1e-6)

    def test_empty_path(self, ring_congruence):
        assert variation_over(ring_congruence, CrackPath.empty()) == 0.0

    def test_path_outside_domain(self, rect_congruence):
        with pytest.raises(GeometryError):
            variation_over(rect_congruence, path_from_segment((5.0, 5.0), (6.0, 6.0)))


class TestProjection:
    def test_full_circle_covers_grip(self, ring_congruence):
        circle = path_from_circle(1.0, 64)
        assert project_onto(ring_congruence, circle) == pytest.approx(2.0 * np.pi, rel=0.02)

    def test_half_circle(self, ring_congruence):
        th = np.linspace(0.0, np.pi, 33)
        half = CrackPath.single(np.column_stack([np.cos(th), np.sin(th)]))
        assert project_onto(ring_congruence, half) == pytest.approx(np.pi, rel=0.02)

    def test_empty(self, ring_congruence):
        assert project_onto(ring_congruence, CrackPath.empty()) == 0.0

    def test_missing_target_label(self, rect_small, rect_congruence):
        with pytest.raises(ParameterError):
            project_onto(rect_congruence, CrackPath.empty(), BoundaryLabel.CRACK_FACE)

    def test_contraction_on_random_paths(self, annulus16, ring_congruence):
        # projection collapses multiplicity: measure <= variation
        rng = np.random.default_rng(3)
        from geofrac.mesh import vertex_adjacency
        adj = vertex_adjacency(annulus16)
        for _ in range(10):
            v = int(rng.integers(annulus16.n_vertices))
            walk = [v]
            for _ in range(15):
                nbrs = adj.indices[adj.indptr[walk[-1]]:adj.indptr[walk[-1] + 1]]
                walk.append(int(rng.choice(nbrs)))
            pts = annulus16.vertices[walk]
            keep = np.ones(len(walk), dtype=bool)
            keep[1:] = np.linalg.norm(np.diff(pts, axis=0), axis=1) > 0
            path = CrackPath.single(pts[keep])
            proj = project_onto(ring_congruence, path)
            vari = variation_over(ring_congruence, path)
            assert proj <= vari + 1e-9


class TestSeparatingGeodesic:
    def test_ring(self, annulus16):
        path = separating_geodesic(annulus16)
        summary = geodesic_summary(annulus16, path)
        assert summary["n_chains"] == 1
        assert summary["closed"] == [True]
        assert summary["length"] == pytest.approx(2.0 * np.pi, rel=0.02)
        rho = np.linalg.norm(np.vstack(path.chains), axis=1)
        assert np.abs(rho - 1.0).max() < 0.2

    def test_rectangle_lowest_line(self, rect_small):
        path = separating_geodesic(rect_small)
        assert path.length() == pytest.approx(1.0, rel=0.01)
        ys = np.vstack(path.chains)[:, 1]
        assert np.allclose(ys, ys[0])  # horizontal
        assert ys[0] == min(ys)  # deterministic tie-break at the lowest level

    def test_wide_rectangle(self):
        mesh = build_rectangle(2.0, 1.0, 16, 8)
        assert separating_geodesic(mesh).length() == pytest.approx(2.0, abs=1e-9)

    def test_missing_labels(self, rect_small):
        labels = np.full_like(rect_small.boundary_labels, int(BoundaryLabel.GAMMA_F))
        free = Mesh(rect_small.vertices, rect_small.triangles,
                    rect_small.boundary_edges, labels)
        with pytest.raises(ParameterError):
            separating_geodesic(free)

    def test_minimality_against_separating_cuts(self, annulus16, rect_small):
        geodesic_len = separating_geodesic(annulus16).length()
        # every concentric vertex ring in the polar grid separates the grips
        n_ang = 64
        radii = np.unique(np.round(np.linalg.norm(annulus16.vertices, axis=1), 10))
        for rho in radii:
            assert geodesic_len <= 2.0 * rho * n_ang * np.sin(np.pi / n_ang) + 1e-9

        geodesic_len = separating_geodesic(rect_small).length()
        ys = np.unique(rect_small.vertices[:, 1])
        for y in ys:
            assert geodesic_len <= 1.0 + 1e-12  # every horizontal grid line has length a

    def test_variation_dominance(self, annulus16, ring_congruence):
        # the geodesic crosses every congruence curve, so its variation
        # dominates any projected measure
        geod = separating_geodesic(annulus16)
        v_geod = variation_over(ring_congruence, geod)
        rng = np.random.default_rng(5)
        from geofrac.mesh import vertex_adjacency
        adj = vertex_adjacency(annulus16)
        for _ in range(6):
            v = int(rng.integers(annulus16.n_vertices))
            walk = [v]
            for _ in range(12):
                nbrs = adj.indices[adj.indptr[walk[-1]]:adj.indptr[walk[-1] + 1]]
                walk.append(int(rng.choice(nbrs)))
            pts = annulus16.vertices[walk]
            keep = np.ones(len(walk), dtype=bool)
            keep[1:] = np.linalg.norm(np.diff(pts, axis=0), axis=1) > 0
            path = CrackPath.single(pts[keep])
            assert project_onto(ring_congruence, path) <= v_geod + 1e-6
