"""Export of band fields as colored geometry for inspection.

Filtered images live on band points; for viewing they are written as an
ASCII PLY point cloud with one vertex per surface sample (the closest
point of each band point, deduplicated by grid cell) or, for meshes, as
the original mesh with vertex colors sampled from the filtered field.
Writers are deterministic: the same field produces identical bytes.
"""
from __future__ import annotations

import numpy as np

from .operators import interpolate_at


def _quantize(values):
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == 1:
        v = np.repeat(v[:, None], 3, axis=1)
    return np.round(np.clip(v, 0.0, 1.0) * 255.0).astype(np.uint8)


def _write_ply(path, xyz, rgb, faces=None):
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(xyz)}",
        "property float x",
        "property float y",
        "property float z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
    ]
    if faces is not None:
        lines += [f"element face {len(faces)}", "property list uchar int vertex_indices"]
    lines.append("end_header")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
        for p, c in zip(xyz, rgb):
            fh.write("%.8g %.8g %.8g %d %d %d\n" % (p[0], p[1], p[2], c[0], c[1], c[2]))
        if faces is not None:
            for f in faces:
                fh.write("3 %d %d %d\n" % (f[0], f[1], f[2]))


def export_point_cloud(path, ws, values):
    """Write the field as a colored on-surface point cloud.

    Band points projecting into the same grid cell share (nearly) the same
    surface point; only the first of each such group is written, keyed by
    the rounded grid cell of the projection.
    """
    cell = np.round(
        (ws.cp_points - np.asarray(ws.grid.origin)) / ws.grid.h
    ).astype(np.int64)
    key = ws.grid.code(cell)
    _, first = np.unique(key, return_index=True)
    first.sort()
    _write_ply(path, ws.cp_points[first], _quantize(np.asarray(values)[first]))
    return len(first)


def export_recolored_mesh(path, ws, values):
    """Write the workspace mesh with vertex colors sampled from the field."""
    mesh = ws.surface
    if getattr(mesh, "kind", None) != "mesh":
        raise ValueError("workspace surface is not a mesh")
    col = interpolate_at(ws.band, np.asarray(values), mesh.vertices)
    _write_ply(path, mesh.vertices, _quantize(col), faces=mesh.faces)
    return len(mesh.vertices)


def read_point_cloud(path):
    """Read back an exported point cloud: (points, colors in [0, 1])."""
    with open(path, "r") as fh:
        line = fh.readline().strip()
        if line != "ply":
            raise ValueError(f"{path} is not a PLY file")
        n_vertex = 0
        while True:
            line = fh.readline()
            if not line:
                raise ValueError("truncated PLY header")
            tok = line.split()
            if tok[:2] == ["element", "vertex"]:
                n_vertex = int(tok[2])
            if tok[:1] == ["end_header"]:
                break
        rows = np.loadtxt(fh, max_rows=n_vertex).reshape(n_vertex, -1)
    return rows[:, :3], rows[:, 3:6] / 255.0
