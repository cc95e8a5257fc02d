"""Closest point functions checked against dense brute-force sampling."""

import numpy as np
import pytest

import surfdiff as sd
from surfdiff.errors import DegenerateQuery, IllConditioned, NotUnit
from surfdiff.geometry import (
    tangent_basis_from_cp_jacobian,
    tangent_basis_householder,
    vase_profile,
    make_surface,
)

from conftest import on_surface_samples


def _random_queries(n, seed=3, lo=-2.0, hi=2.0):
    u = sd.rng.random_uniform(seed, 55, np.arange(3 * n)).reshape(n, 3)
    return lo + (hi - lo) * u


def _brute_force_check(surface, dense_surface_pts, queries, slack):
    """cp distance must beat every sampled surface point up to sampling slack."""
    res = surface.closest_point(queries)
    # projected points lie on the surface: re-projecting moves them nowhere
    again = surface.closest_point(res.points)
    assert np.max(again.dist) < 1e-9
    assert np.max(np.linalg.norm(again.points - res.points, axis=1)) < 1e-9
    # no sampled point is closer than the claimed minimum
    for q, d in zip(queries, res.dist):
        best = np.min(np.linalg.norm(dense_surface_pts - q, axis=1))
        assert d <= best + 1e-12
        assert best <= d + slack  # sampling resolution bound
    # normals are unit and point along (query - projection) for off-surface queries
    assert np.allclose(np.linalg.norm(res.normals, axis=1), 1.0, atol=1e-12)


class TestSphere:
    def test_analytic_projection(self):
        s = sd.Sphere(0.7, center=(0.1, -0.2, 0.3))
        q = _random_queries(200)
        res = s.closest_point(q)
        d = q - s.center
        r = np.linalg.norm(d, axis=1)
        np.testing.assert_allclose(res.points, s.center + 0.7 * d / r[:, None], atol=1e-14)
        np.testing.assert_allclose(res.dist, np.abs(r - 0.7), atol=1e-14)

    def test_center_query_raises(self):
        with pytest.raises(DegenerateQuery):
            sd.Sphere(1.0).closest_point(np.zeros((1, 3)))

    def test_texture_corners(self):
        s = sd.Sphere(1.0)
        uv = s.texture_coords(np.array([[1.0, 0, 0], [0, 0, 1.0], [0, 0, -1.0]]))
        np.testing.assert_allclose(uv[0], [0.0, 0.5], atol=1e-14)
        assert abs(uv[1, 1] - 1.0) < 1e-12 and abs(uv[2, 1]) < 1e-12


class TestTorus:
    def test_against_dense_sampling(self):
        t = sd.Torus(1.0, 0.4)
        theta = np.linspace(0, 2 * np.pi, 600, endpoint=False)
        phi = np.linspace(0, 2 * np.pi, 240, endpoint=False)
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        ring = 1.0 + 0.4 * np.cos(pp)
        dense = np.stack(
            [ring * np.cos(tt), ring * np.sin(tt), 0.4 * np.sin(pp)], axis=-1
        ).reshape(-1, 3)
        # max parameter cell diagonal ~ sqrt((1.4*2pi/600)^2 + (0.4*2pi/240)^2)
        _brute_force_check(t, dense, _random_queries(60, seed=4), slack=0.02)

    def test_known_projections(self):
        t = sd.Torus(1.0, 0.4)
        res = t.closest_point(np.array([[2.0, 0.0, 0.0], [1.0, 0.0, 1.0]]))
        np.testing.assert_allclose(res.points[0], [1.4, 0.0, 0.0], atol=1e-14)
        np.testing.assert_allclose(res.points[1], [1.0, 0.0, 0.4], atol=1e-14)
        np.testing.assert_allclose(res.dist, [0.6, 0.6], atol=1e-14)

    def test_axis_and_center_circle_raise(self):
        t = sd.Torus(1.0, 0.4)
        with pytest.raises(DegenerateQuery):
            t.closest_point(np.array([[0.0, 0.0, 0.5]]))
        with pytest.raises(DegenerateQuery):
            t.closest_point(np.array([[1.0, 0.0, 0.0]]))


class TestSurfaceOfRevolution:
    def test_cylinder_section_exact(self):
        # straight profile at s=0.5 from z=-1 to z=1: a cylinder
        prof = np.stack([np.full(41, 0.5), np.linspace(-1, 1, 41)], axis=1)
        surf = sd.SurfaceOfRevolution(prof)
        q = np.array([[1.0, 0.0, 0.2], [0.2, 0.2, -0.3]])
        res = surf.closest_point(q)
        s = np.hypot(q[:, 0], q[:, 1])
        np.testing.assert_allclose(res.dist, np.abs(s - 0.5), atol=1e-12)
        np.testing.assert_allclose(np.hypot(res.points[:, 0], res.points[:, 1]), 0.5, atol=1e-12)
        np.testing.assert_allclose(res.points[:, 2], q[:, 2], atol=1e-12)

    def test_vase_against_dense_sampling(self):
        surf = sd.SurfaceOfRevolution(vase_profile())
        pts = surf.sample_points(0.02)
        qs = _random_queries(40, seed=9, lo=-1.2, hi=1.2)
        _brute_force_check(surf, pts, qs, slack=0.03)

    def test_profile_validation(self):
        with pytest.raises(ValueError):
            sd.SurfaceOfRevolution(np.array([[0.5, 0.0]]))  # single vertex
        with pytest.raises(ValueError):
            sd.SurfaceOfRevolution(np.array([[-0.1, 0.0], [0.5, 1.0]]))  # s < 0


class TestPlanePatch:
    def test_projection_clamps(self):
        p = sd.PlanePatch(half_extent=1.0, z0=0.25)
        res = p.closest_point(np.array([[0.3, -0.4, 1.0], [5.0, 0.0, 0.25]]))
        np.testing.assert_allclose(res.points[0], [0.3, -0.4, 0.25], atol=1e-14)
        np.testing.assert_allclose(res.points[1], [1.0, 0.0, 0.25], atol=1e-14)
        np.testing.assert_allclose(res.normals[:, 2], 1.0)


class TestTangentBases:
    def test_householder_orthonormal(self):
        n = on_surface_samples(sd.Torus(1.0, 0.4), 500)
        normals = sd.Torus(1.0, 0.4).closest_point(n).normals
        q1, q2 = tangent_basis_householder(normals)
        for q in (q1, q2):
            np.testing.assert_allclose(np.linalg.norm(q, axis=1), 1.0, atol=1e-12)
            assert np.max(np.abs(np.sum(q * normals, axis=1))) < 1e-12
        assert np.max(np.abs(np.sum(q1 * q2, axis=1))) < 1e-12

    def test_householder_rejects_non_unit(self):
        with pytest.raises(NotUnit):
            tangent_basis_householder(np.array([[0.0, 0.0, 0.5]]))

    def test_jacobian_basis_spans_same_plane(self):
        surf = sd.Sphere(1.0)
        pts = on_surface_samples(surf, 50, seed=2)
        normals = surf.closest_point(pts).normals
        hq1, hq2 = tangent_basis_householder(normals)
        q1, q2, n = tangent_basis_from_cp_jacobian(surf, pts, step=1e-4)
        # normals agree up to sign, tangent projectors agree exactly
        assert np.max(1.0 - np.abs(np.sum(n * normals, axis=1))) < 1e-6
        ph = np.einsum("ni,nj->nij", hq1, hq1) + np.einsum("ni,nj->nij", hq2, hq2)
        pj = np.einsum("ni,nj->nij", q1, q1) + np.einsum("ni,nj->nij", q2, q2)
        assert np.max(np.abs(ph - pj)) < 1e-5

    def test_jacobian_basis_rejects_ambiguous_point(self):
        # at the sphere center the cp Jacobian has no isolated zero eigenvalue
        with pytest.raises((IllConditioned, DegenerateQuery)):
            tangent_basis_from_cp_jacobian(sd.Sphere(1.0), np.zeros((1, 3)), step=1e-4)


def test_make_surface_factory():
    assert isinstance(make_surface("sphere", radius=2.0), sd.Sphere)
    assert isinstance(make_surface("torus"), sd.Torus)
    assert isinstance(make_surface("plane_patch"), sd.PlanePatch)
    with pytest.raises(ValueError):
        make_surface("klein_bottle")


def test_sample_points_density():
    for surf in (sd.Sphere(1.0), sd.Torus(1.0, 0.4)):
        pts = surf.sample_points(0.05)
        # every sample is on the surface
        assert np.max(surf.closest_point(pts).dist) < 1e-9
        # spacing promise: a random on-surface point has a sample nearby
        probes = on_surface_samples(surf, 100, seed=8)
        for p in probes:
            assert np.min(np.linalg.norm(pts - p, axis=1)) < 0.05
