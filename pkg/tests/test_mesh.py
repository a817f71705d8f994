"""Mesh construction, labeling, slit insertion and the text format."""

import numpy as np
import pytest
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from geofrac.errors import GeometryError, ParameterError
from geofrac.mesh import (BoundaryLabel, boundary_chains, build_annulus,
                          build_rectangle, chain_length, insert_slit, labeled_chains,
                          load_mesh, save_mesh, validate_mesh)
from geofrac.paths import CrackPath, path_from_circle, path_from_segment

E = float(np.e)


def shoelace_areas(mesh):
    # independent area oracle straight from coordinates
    p = mesh.vertices
    t = mesh.triangles
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                  - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))


def components_of(mesh):
    # independent connectivity oracle on the triangle-edge graph
    t = mesh.triangles
    i = np.concatenate([t[:, 0], t[:, 1], t[:, 2]])
    j = np.concatenate([t[:, 1], t[:, 2], t[:, 0]])
    n = mesh.n_vertices
    adj = coo_matrix((np.ones(i.size), (i, j)), shape=(n, n))
    return connected_components(adj + adj.T, directed=False)[1]


class TestAnnulus:
    def test_two_chains_and_inner_length(self, annulus16):
        chains = boundary_chains(annulus16)
        assert len(chains) == 2
        lengths = sorted(chain_length(annulus16, c) for c in chains)
        assert lengths[0] == pytest.approx(2.0 * np.pi, rel=0.01)
        assert lengths[1] == pytest.approx(2.0 * np.pi * E, rel=0.01)

    def test_labels(self, annulus16):
        inner = annulus16.vertices_with_label(BoundaryLabel.GAMMA_U2)
        outer = annulus16.vertices_with_label(BoundaryLabel.GAMMA_U1)
        rho_in = np.linalg.norm(annulus16.vertices[inner], axis=1)
        rho_out = np.linalg.norm(annulus16.vertices[outer], axis=1)
        assert np.allclose(rho_in, 1.0)
        assert np.allclose(rho_out, E)
        assert annulus16.edges_with_label(BoundaryLabel.GAMMA_F).shape[0] == 0

    def test_degenerate_radii(self):
        with pytest.raises(ParameterError):
            build_annulus(1.0, 1.0, 16, 64)
        with pytest.raises(ParameterError):
            build_annulus(-1.0, 2.0, 16, 64)

    def test_minimum_resolution_counts(self):
        mesh = build_annulus(1.0, 2.0, 2, 8)
        assert mesh.n_triangles == 2 * 2 * 8  # 16 per ring layer
        assert np.all(shoelace_areas(mesh) > 0)
        with pytest.raises(ParameterError):
            build_annulus(1.0, 2.0, 1, 8)
        with pytest.raises(ParameterError):
            build_annulus(1.0, 2.0, 2, 7)

    def test_area_within_one_percent_and_refining(self):
        exact = np.pi * (E ** 2 - 1.0)
        errs = []
        for n in (16, 32):
            mesh = build_annulus(1.0, E, n, 4 * n)
            errs.append(abs(shoelace_areas(mesh).sum() - exact) / exact)
        assert errs[0] < 0.01
        assert errs[1] < errs[0]


class TestRectangle:
    def test_labeled_chains_and_lengths(self, rect_small):
        chains = labeled_chains(rect_small)
        assert len(chains) == 4
        gamma_f_total = sum(chain_length(rect_small, idx)
                            for label, idx in chains if label == BoundaryLabel.GAMMA_F)
        assert gamma_f_total == pytest.approx(4.0)

    def test_gamma_u1_length_exact(self):
        mesh = build_rectangle(2.0, 1.0, 16, 8)
        chains = labeled_chains(mesh)
        (length,) = [chain_length(mesh, idx) for label, idx in chains
                     if label == BoundaryLabel.GAMMA_U1]
        assert length == 2.0

    def test_parameter_errors(self):
        with pytest.raises(ParameterError):
            build_rectangle(1.0, 2.0, 1, 16)
        with pytest.raises(ParameterError):
            build_rectangle(0.0, 2.0, 8, 16)
        with pytest.raises(ParameterError):
            build_rectangle(1.0, -2.0, 8, 16)

    def test_area_exact(self, rect_small):
        assert shoelace_areas(rect_small).sum() == pytest.approx(2.0, abs=1e-12)


class TestInsertSlit:
    def test_annulus_full_circle_detaches_grip(self, annulus16):
        slit = insert_slit(annulus16, path_from_circle(1.0, 64))
        validate_mesh(slit)
        comp = components_of(slit)
        grip = slit.vertices_with_label(BoundaryLabel.GAMMA_U2)
        boundary_verts = np.unique(slit.boundary_edges.ravel())
        interior = np.setdiff1d(np.arange(slit.n_vertices), boundary_verts)
        assert set(comp[grip]).isdisjoint(set(comp[interior]))

    def test_rectangle_full_width_two_components(self, rect_small):
        slit = insert_slit(rect_small, path_from_segment((0.0, 1.0), (1.0, 1.0)))
        validate_mesh(slit)
        comp = components_of(slit)
        assert len(set(comp.tolist())) == 2

    def test_half_width_keeps_one_component(self, rect_small):
        slit = insert_slit(rect_small, path_from_segment((0.0, 1.0), (0.5, 1.0)))
        validate_mesh(slit)
        comp = components_of(slit)
        assert len(set(comp.tolist())) == 1
        assert slit.n_vertices > rect_small.n_vertices

    def test_empty_path_identity(self, rect_small):
        assert insert_slit(rect_small, CrackPath.empty()) is rect_small

    def test_coordinates_and_areas_unchanged(self, rect_small):
        slit = insert_slit(rect_small, path_from_segment((0.0, 1.0), (1.0, 1.0)))
        n = rect_small.n_vertices
        assert np.array_equal(slit.vertices[:n], rect_small.vertices)
        assert np.allclose(np.sort(shoelace_areas(slit)),
                           np.sort(shoelace_areas(rect_small)))
        for a, b in slit.slit_pairs:
            assert np.array_equal(slit.vertices[a], slit.vertices[b])

    def test_unalignable_path_rejected(self, rect_small):
        with pytest.raises(GeometryError):
            insert_slit(rect_small, path_from_segment((0.033, 0.97), (1.0, 1.02)))

    def test_crossing_existing_slit_rejected(self, rect_small):
        once = insert_slit(rect_small, path_from_segment((0.0, 1.0), (0.5, 1.0)))
        with pytest.raises(GeometryError):
            insert_slit(once, path_from_segment((0.25, 1.0), (0.75, 1.0)))

    def test_every_boundary_edge_labeled_once(self, rect_small):
        slit = insert_slit(rect_small, path_from_segment((0.0, 1.0), (1.0, 1.0)))
        validate_mesh(slit)
        seen = set()
        for i, j in slit.boundary_edges:
            key = (min(int(i), int(j)), max(int(i), int(j)))
            assert key not in seen
            seen.add(key)


class TestTextFormat:
    def test_round_trip(self, tmp_path, annulus16):
        slit = insert_slit(annulus16, path_from_circle(1.0, 64))
        path = tmp_path / "ring.txt"
        save_mesh(slit, path)
        back = load_mesh(path)
        assert np.array_equal(back.vertices, slit.vertices)
        assert np.array_equal(back.triangles, slit.triangles)
        assert np.array_equal(back.boundary_edges, slit.boundary_edges)
        assert np.array_equal(back.boundary_labels, slit.boundary_labels)
        assert np.array_equal(back.slit_pairs, slit.slit_pairs)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("nonsense 1 2 3\n")
        with pytest.raises(GeometryError):
            load_mesh(path)

    def test_malformed_record(self, tmp_path):
        path = tmp_path / "bad2.txt"
        path.write_text("mesh 1 0 0 0\nv 0.0\n")
        with pytest.raises(GeometryError):
            load_mesh(path)
