"""Triangle mesh surfaces: file IO, closest point queries, vertex colors.

Closest point queries walk a bounding volume hierarchy in batches, with
exact point-triangle projection at the leaves, so meshes plug into the
same banded-grid machinery as the analytic surfaces. Vertex colors (when
present) can be pulled onto a band through barycentric interpolation at
the projected points.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import MissingColors
from .geometry import ClosestPointResult, _as_points

_LEAF_SIZE = 8


def closest_point_on_triangles(p, a, b, c):
    """Exact nearest points on triangles (a, b, c) for queries p.

    All inputs broadcast against each other with trailing shape (..., 3).
    Returns (points, bary) where bary holds barycentric coordinates of the
    nearest point. Region classification follows the standard Voronoi-region
    case split, so edge and vertex cases are exact, not clamped afterwards.
    """
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = (ab * ap).sum(-1)
    d2 = (ac * ap).sum(-1)
    bp = p - b
    d3 = (ab * bp).sum(-1)
    d4 = (ac * bp).sum(-1)
    cp = p - c
    d5 = (ab * cp).sum(-1)
    d6 = (ac * cp).sum(-1)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    shape = np.broadcast_shapes(d1.shape, d2.shape)
    v = np.zeros(shape)
    w = np.zeros(shape)
    done = np.zeros(shape, dtype=bool)

    # vertex regions
    reg = (d1 <= 0) & (d2 <= 0)
    done |= reg
    reg = (~done) & (d3 >= 0) & (d4 <= d3)
    v[reg] = 1.0
    done |= reg
    reg = (~done) & (d6 >= 0) & (d5 <= d6)
    w[reg] = 1.0
    done |= reg
    # edge ab
    reg = (~done) & (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        t_ab = d1 / (d1 - d3)
    v[reg] = t_ab[reg]
    done |= reg
    # edge ac
    reg = (~done) & (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        t_ac = d2 / (d2 - d6)
    w[reg] = t_ac[reg]
    done |= reg
    # edge bc
    reg = (~done) & (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        t_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
    v[reg] = 1.0 - t_bc[reg]
    w[reg] = t_bc[reg]
    done |= reg
    # interior
    reg = ~done
    with np.errstate(invalid="ignore", divide="ignore"):
        denom = 1.0 / (va + vb + vc)
    v[reg] = (vb * denom)[reg]
    w[reg] = (vc * denom)[reg]

    point = a + v[..., None] * ab + w[..., None] * ac
    bary = np.stack([1.0 - v - w, v, w], axis=-1)
    return point, bary


class _BVH:
    """Median-split hierarchy over triangle bounding boxes, stored flat."""

    def __init__(self, tri_min, tri_max, centroids):
        n = tri_min.shape[0]
        self.order = np.arange(n)
        max_nodes = max(1, 2 * ((n + _LEAF_SIZE - 1) // _LEAF_SIZE) * 2)
        self.bb_min = np.empty((max_nodes, 3))
        self.bb_max = np.empty((max_nodes, 3))
        self.left = np.full(max_nodes, -1, dtype=np.int64)
        self.right = np.full(max_nodes, -1, dtype=np.int64)
        self.start = np.zeros(max_nodes, dtype=np.int64)
        self.count = np.zeros(max_nodes, dtype=np.int64)
        self.n_nodes = 0
        self._build(tri_min, tri_max, centroids, 0, n)

    def _alloc(self):
        i = self.n_nodes
        self.n_nodes += 1
        return i

    def _build(self, tri_min, tri_max, centroids, lo, hi):
        node = self._alloc()
        idx = self.order[lo:hi]
        self.bb_min[node] = tri_min[idx].min(axis=0)
        self.bb_max[node] = tri_max[idx].max(axis=0)
        if hi - lo <= _LEAF_SIZE:
            self.start[node] = lo
            self.count[node] = hi - lo
            return node
        cen = centroids[idx]
        axis = int(np.argmax(cen.max(axis=0) - cen.min(axis=0)))
        mid = (hi - lo) // 2
        part = np.argpartition(cen[:, axis], mid)
        self.order[lo:hi] = idx[part]
        self.left[node] = self._build(tri_min, tri_max, centroids, lo, lo + mid)
        self.right[node] = self._build(tri_min, tri_max, centroids, lo + mid, hi)
        return node

    def _box_dist2(self, node, p):
        d = np.maximum(self.bb_min[node] - p, 0.0) + np.maximum(p - self.bb_max[node], 0.0)
        return (d * d).sum(axis=1)


class TriangleMesh:
    """Closed or open triangle mesh acting as a surface.

    Parameters
    ----------
    vertices : (V, 3) float array
    faces : (F, 3) int array
    vertex_colors : (V, 3) float array in [0, 1], optional
    """

    kind = "mesh"

    def __init__(self, vertices, faces, vertex_colors=None, chunk=32768):
        self.vertices = np.asarray(vertices, dtype=np.float64)
        self.faces = np.asarray(faces, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValueError("vertices must be (V, 3)")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise ValueError("faces must be (F, 3)")
        if self.faces.size and self.faces.max() >= len(self.vertices):
            raise ValueError("face index out of range")
        self.vertex_colors = None
        if vertex_colors is not None:
            self.vertex_colors = np.asarray(vertex_colors, dtype=np.float64)
            if self.vertex_colors.shape != self.vertices.shape:
                raise ValueError("vertex_colors must match vertices")
        self.chunk = int(chunk)
        tri = self.vertices[self.faces]
        self._tri = tri
        self._bvh = _BVH(tri.min(axis=1), tri.max(axis=1), tri.mean(axis=1))
        self.vertex_normals = self._angle_weighted_normals()

    def _angle_weighted_normals(self):
        tri = self._tri
        vn = np.zeros_like(self.vertices)
        fn = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        for k in range(3):
            e1 = tri[:, (k + 1) % 3] - tri[:, k]
            e2 = tri[:, (k + 2) % 3] - tri[:, k]
            cosang = (e1 * e2).sum(1) / np.maximum(
                np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1), 1e-300
            )
            ang = np.arccos(np.clip(cosang, -1.0, 1.0))
            np.add.at(vn, self.faces[:, k], fn * ang[:, None])
        norms = np.linalg.norm(vn, axis=1)
        norms[norms < 1e-300] = 1.0
        return vn / norms[:, None]

    def closest_point(self, x, brute_force=False):
        pts = _as_points(x)
        m = pts.shape[0]
        best_d2 = np.full(m, np.inf)
        best_tri = np.zeros(m, dtype=np.int64)
        best_pt = np.zeros((m, 3))
        best_bary = np.zeros((m, 3))
        for lo in range(0, m, self.chunk):
            hi = min(lo + self.chunk, m)
            if brute_force:
                self._query_brute(pts[lo:hi], best_d2[lo:hi], best_tri[lo:hi],
                                  best_pt[lo:hi], best_bary[lo:hi])
            else:
                self._query_bvh(pts[lo:hi], best_d2[lo:hi], best_tri[lo:hi],
                                best_pt[lo:hi], best_bary[lo:hi])
        normals = self._normals_at(best_tri, best_bary)
        return ClosestPointResult(
            best_pt, np.sqrt(best_d2), normals, triangle=best_tri, bary=best_bary
        )

    def _leaf_update(self, node, rows, pts, best_d2, best_tri, best_pt, best_bary):
        bvh = self._bvh
        s, c = bvh.start[node], bvh.count[node]
        tri_ids = bvh.order[s:s + c]
        tri = self._tri[tri_ids]
        q = pts[rows][:, None, :]
        point, bary = closest_point_on_triangles(
            q, tri[None, :, 0], tri[None, :, 1], tri[None, :, 2]
        )
        d2 = ((q - point) ** 2).sum(-1)
        j = np.argmin(d2, axis=1)
        rr = np.arange(len(rows))
        dbest = d2[rr, j]
        upd = dbest < best_d2[rows]
        ru = rows[upd]
        best_d2[ru] = dbest[upd]
        best_tri[ru] = tri_ids[j[upd]]
        best_pt[ru] = point[rr[upd], j[upd]]
        best_bary[ru] = bary[rr[upd], j[upd]]

    def _query_bvh(self, pts, best_d2, best_tri, best_pt, best_bary):
        bvh = self._bvh
        stack = [(0, np.arange(pts.shape[0]))]
        while stack:
            node, rows = stack.pop()
            # re-check: best may have improved since this entry was pushed
            lb = bvh._box_dist2(node, pts[rows])
            keep = lb < best_d2[rows]
            if not np.any(keep):
                continue
            rows = rows[keep]
            if bvh.count[node] > 0:
                self._leaf_update(node, rows, pts, best_d2, best_tri, best_pt, best_bary)
                continue
            left, right = bvh.left[node], bvh.right[node]
            dl = bvh._box_dist2(left, pts[rows])
            dr = bvh._box_dist2(right, pts[rows])
            # push the on-average farther child first so the nearer is popped first
            first, second = (left, right) if np.mean(dl) <= np.mean(dr) else (right, left)
            stack.append((second, rows))
            stack.append((first, rows))

    def _query_brute(self, pts, best_d2, best_tri, best_pt, best_bary):
        tri = self._tri
        q = pts[:, None, :]
        point, bary = closest_point_on_triangles(
            q, tri[None, :, 0], tri[None, :, 1], tri[None, :, 2]
        )
        d2 = ((q - point) ** 2).sum(-1)
        j = np.argmin(d2, axis=1)
        rr = np.arange(pts.shape[0])
        best_d2[:] = d2[rr, j]
        best_tri[:] = j
        best_pt[:] = point[rr, j]
        best_bary[:] = bary[rr, j]

    def _normals_at(self, tri_ids, bary):
        vn = self.vertex_normals[self.faces[tri_ids]]
        n = (vn * bary[:, :, None]).sum(axis=1)
        norms = np.linalg.norm(n, axis=1)
        norms[norms < 1e-300] = 1.0
        return n / norms[:, None]

    def colors_at(self, tri_ids, bary):
        """Barycentric interpolation of per-vertex colors."""
        if self.vertex_colors is None:
            raise MissingColors("mesh carries no per-vertex colors")
        col = self.vertex_colors[self.faces[tri_ids]]
        return (col * bary[:, :, None]).sum(axis=1)

    def sample_points(self, spacing):
        tri = self._tri
        edge = np.maximum(
            np.linalg.norm(tri[:, 1] - tri[:, 0], axis=1),
            np.maximum(
                np.linalg.norm(tri[:, 2] - tri[:, 1], axis=1),
                np.linalg.norm(tri[:, 0] - tri[:, 2], axis=1),
            ),
        )
        levels = np.maximum(1, np.ceil(3.0 * edge / spacing).astype(np.int64))
        out = [self.vertices]
        for k in np.unique(levels):
            sel = tri[levels == k]
            ii, jj = np.meshgrid(np.arange(k + 1), np.arange(k + 1), indexing="ij")
            keep = (ii + jj) <= k
            u = (ii[keep] / k).ravel()
            v = (jj[keep] / k).ravel()
            w = 1.0 - u - v
            pts = (
                w[None, :, None] * sel[:, None, 0]
                + u[None, :, None] * sel[:, None, 1]
                + v[None, :, None] * sel[:, None, 2]
            )
            out.append(pts.reshape(-1, 3))
        return np.concatenate(out, axis=0)

    def texture_coords(self, p):
        raise ValueError(
            "mesh surfaces carry no global parameterization; "
            "use per-vertex colors instead of texture mapping"
        )


def load_obj(path):
    """Read an OBJ file (v/f records; vertex colors as extra v floats)."""
    verts = []
    colors = []
    faces = []
    with open(path, "r") as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                vals = [float(t) for t in parts[1:]]
                verts.append(vals[:3])
                if len(vals) >= 6:
                    colors.append(vals[3:6])
            elif parts[0] == "f":
                idx = [int(t.split("/")[0]) for t in parts[1:]]
                idx = [i - 1 if i > 0 else len(verts) + i for i in idx]
                for k in range(1, len(idx) - 1):  # fan-triangulate polygons
                    faces.append([idx[0], idx[k], idx[k + 1]])
    if not verts:
        raise ValueError(f"no vertices found in {path}")
    vc = np.asarray(colors) if len(colors) == len(verts) and colors else None
    return TriangleMesh(np.asarray(verts), np.asarray(faces, dtype=np.int64), vc)


_PLY_TYPES = {
    "char": "i1", "uchar": "u1", "int8": "i1", "uint8": "u1",
    "short": "i2", "ushort": "u2", "int16": "i2", "uint16": "u2",
    "int": "i4", "uint": "u4", "int32": "i4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


def load_ply(path):
    """Read a PLY mesh, ASCII or binary little-endian, with optional colors."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"ply":
            raise ValueError(f"{path} is not a PLY file")
        fmt = None
        elements = []  # (name, count, [(prop_name, dtype, is_list, count_type)])
        while True:
            line = fh.readline()
            if not line:
                raise ValueError("unexpected end of PLY header")
            tok = line.decode("ascii").split()
            if not tok:
                continue
            if tok[0] == "format":
                fmt = tok[1]
            elif tok[0] == "element":
                elements.append((tok[1], int(tok[2]), []))
            elif tok[0] == "property":
                if tok[1] == "list":
                    elements[-1][2].append((tok[4], _PLY_TYPES[tok[3]], True, _PLY_TYPES[tok[2]]))
                else:
                    elements[-1][2].append((tok[2], _PLY_TYPES[tok[1]], False, None))
            elif tok[0] == "end_header":
                break
        if fmt not in ("ascii", "binary_little_endian"):
            raise ValueError(f"unsupported PLY format {fmt!r}")
        data = {}
        for name, count, props in elements:
            if fmt == "ascii":
                data[name] = _read_ply_ascii(fh, count, props)
            else:
                data[name] = _read_ply_binary(fh, count, props)
    if "vertex" not in data or "face" not in data:
        raise ValueError("PLY file must contain vertex and face elements")
    vd = data["vertex"]
    verts = np.stack([vd["x"], vd["y"], vd["z"]], axis=1)
    colors = None
    if all(k in vd for k in ("red", "green", "blue")):
        colors = np.stack([vd["red"], vd["green"], vd["blue"]], axis=1) / 255.0
    face_lists = data["face"].get("vertex_indices", data["face"].get("vertex_index"))
    if face_lists is None:
        raise ValueError("PLY face element lacks vertex indices")
    faces = []
    for poly in face_lists:
        for k in range(1, len(poly) - 1):
            faces.append([poly[0], poly[k], poly[k + 1]])
    return TriangleMesh(verts, np.asarray(faces, dtype=np.int64), colors)


def _read_ply_ascii(fh, count, props):
    out = {name: [] for name, _, _, _ in props}
    for _ in range(count):
        tok = fh.readline().decode("ascii").split()
        pos = 0
        for name, dtype, is_list, _ in props:
            if is_list:
                n = int(tok[pos]); pos += 1
                vals = [float(t) if "f" in dtype else int(t) for t in tok[pos:pos + n]]
                pos += n
                out[name].append(vals)
            else:
                out[name].append(float(tok[pos]) if "f" in dtype else int(tok[pos]))
                pos += 1
    return {
        k: (v if isinstance(v[0], list) else np.asarray(v))
        for k, v in out.items()
    }


def _read_ply_binary(fh, count, props):
    if all(not is_list for _, _, is_list, _ in props):
        dt = np.dtype([(name, "<" + dtype) for name, dtype, _, _ in props])
        raw = np.frombuffer(fh.read(dt.itemsize * count), dtype=dt, count=count)
        return {name: raw[name].astype(np.float64) for name, _, _, _ in props}
    out = {name: [] for name, _, _, _ in props}
    for _ in range(count):
        for name, dtype, is_list, count_type in props:
            if is_list:
                n = int(np.frombuffer(fh.read(np.dtype(count_type).itemsize),
                                      dtype="<" + count_type)[0])
                vals = np.frombuffer(fh.read(np.dtype(dtype).itemsize * n),
                                     dtype="<" + dtype)
                out[name].append(vals.tolist())
            else:
                out[name].append(
                    np.frombuffer(fh.read(np.dtype(dtype).itemsize), dtype="<" + dtype)[0]
                )
    return out


def load_mesh(path):
    p = str(path)
    if p.lower().endswith(".obj"):
        return load_obj(p)
    if p.lower().endswith(".ply"):
        return load_ply(p)
    raise ValueError(f"unsupported mesh format: {p}")


def icosphere(subdivisions=2, radius=1.0):
    """Icosahedron refined by edge midpoint subdivision, projected to a sphere."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=np.float64,
    )
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    for _ in range(subdivisions):
        cache = {}
        new_faces = []
        verts_list = [v for v in verts]

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                cache[key] = len(verts_list)
                verts_list.append(0.5 * (verts_list[i] + verts_list[j]))
            return cache[key]

        for f in faces:
            a, b, c = (int(v) for v in f)
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        verts = np.asarray(verts_list)
        faces = np.asarray(new_faces, dtype=np.int64)
    verts = radius * verts / np.linalg.norm(verts, axis=1)[:, None]
    return TriangleMesh(verts, faces)
