"""Colored geometry export: quantization, deduplication, round trips."""

import numpy as np
import pytest

import surfdiff as sd
from surfdiff import export
from surfdiff.imaging import mesh_colors_to_band


def test_quantize_scalar_and_rgb():
    q = export._quantize(np.array([0.0, 0.5, 1.0, -0.2, 1.7]))
    assert q.shape == (5, 3)
    assert q.dtype == np.uint8
    np.testing.assert_array_equal(q[:, 0], [0, 128, 255, 0, 255])
    np.testing.assert_array_equal(q[:, 0], q[:, 1])
    rgb = export._quantize(np.array([[0.25, 0.5, 0.75]]))
    np.testing.assert_array_equal(rgb[0], [64, 128, 191])


def test_point_cloud_round_trip(tmp_path, sphere_ws):
    u = sphere_ws.cp_points[:, 2] * 0.4 + 0.5
    path = tmp_path / "cloud.ply"
    n = export.export_point_cloud(path, sphere_ws, u)
    pts, col = export.read_point_cloud(path)
    assert pts.shape == (n, 3)
    # every written point lies on the unit sphere
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-6)
    # gray encodes the field, quantized to 8 bits
    want = np.clip(pts[:, 2] * 0.4 + 0.5, 0.0, 1.0)
    assert np.max(np.abs(col[:, 0] - want)) < 1.5 / 255.0 + 1e-6


def test_point_cloud_dedupes_projections(tmp_path, sphere_ws):
    n = export.export_point_cloud(
        tmp_path / "c.ply", sphere_ws, np.zeros(sphere_ws.n_points)
    )
    # many band points share a projection cell, so the cloud is smaller
    assert n < sphere_ws.n_points
    assert n > sphere_ws.n_points / 30


def test_export_deterministic_bytes(tmp_path, sphere_ws):
    u = np.linspace(0.0, 1.0, sphere_ws.n_points)
    a = tmp_path / "a.ply"
    b = tmp_path / "b.ply"
    export.export_point_cloud(a, sphere_ws, u)
    export.export_point_cloud(b, sphere_ws, u)
    assert a.read_bytes() == b.read_bytes()


def test_recolored_mesh_round_trip(tmp_path, mesh_ws):
    u = np.clip(0.5 + 0.5 * mesh_ws.cp_points[:, 0], 0.0, 1.0)
    path = tmp_path / "mesh.ply"
    n = export.export_recolored_mesh(path, mesh_ws, u)
    assert n == len(mesh_ws.surface.vertices)
    pts, col = export.read_point_cloud(path)
    np.testing.assert_allclose(pts, mesh_ws.surface.vertices, atol=1e-6)
    # vertex colors follow the field at the vertices
    want = np.clip(0.5 + 0.5 * pts[:, 0], 0.0, 1.0)
    assert np.mean(np.abs(col[:, 0] - want)) < 0.02


def test_recolored_mesh_rejects_analytic_surface(tmp_path, sphere_ws):
    with pytest.raises(ValueError, match="not a mesh"):
        export.export_recolored_mesh(
            tmp_path / "x.ply", sphere_ws, np.zeros(sphere_ws.n_points)
        )


def test_read_point_cloud_rejects_non_ply(tmp_path):
    bad = tmp_path / "bad.ply"
    bad.write_text("off\n3 1 0\n")
    with pytest.raises(ValueError, match="not a PLY"):
        export.read_point_cloud(bad)


def test_mesh_colors_reach_band(mesh_ws):
    col = mesh_colors_to_band(mesh_ws)
    assert col.shape == (mesh_ws.n_points, 3)
    assert col.min() >= -1e-9 and col.max() <= 1.0 + 1e-9


def test_mesh_colors_requires_mesh(sphere_ws):
    with pytest.raises(ValueError, match="not a mesh"):
        mesh_colors_to_band(sphere_ws)
