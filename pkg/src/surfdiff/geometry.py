"""Analytic surfaces and their closest point functions.

Every surface exposes the same small interface:

``closest_point(x)``
    Vectorized nearest-point projection for query points ``x`` of shape
    (M, 3), returning on-surface points, distances and outward unit
    normals at the projected points.
``sample_points(spacing)``
    A dense set of on-surface points with neighbor spacing below
    ``spacing``, used to seed band construction.
``texture_coords(p)``
    Parameterization of on-surface points into the unit square, used
    for texture lookup.

Queries exactly equidistant from several surface points (sphere center,
torus axis, ...) raise ``DegenerateQuery``; band radii are always far
smaller than the reach of the surfaces used here, so a degenerate query
inside a filtering run indicates a bug and is never resolved silently.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateQuery, IllConditioned, NotUnit

_DEGENERATE_TOL = 1e-12


@dataclass
class ClosestPointResult:
    """Result of a batched closest point query.

    Attributes
    ----------
    points : (M, 3) ndarray
        The projected on-surface points.
    dist : (M,) ndarray
        Euclidean distance from each query to its projection.
    normals : (M, 3) ndarray
        Unit surface normals at the projected points.
    triangle : (M,) int ndarray, optional
        For mesh surfaces, index of the triangle containing each point.
    bary : (M, 3) ndarray, optional
        For mesh surfaces, barycentric coordinates within that triangle.
    """

    points: np.ndarray
    dist: np.ndarray
    normals: np.ndarray
    triangle: np.ndarray | None = None
    bary: np.ndarray | None = None


def _as_points(x):
    pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected query points of shape (M, 3), got {pts.shape}")
    return pts


def _raise_degenerate(mask, what):
    if np.any(mask):
        idx = int(np.argmax(mask))
        raise DegenerateQuery(
            f"{int(mask.sum())} queries have no unique closest point on {what} "
            f"(first at row {idx})"
        )


class Sphere:
    kind = "sphere"

    def __init__(self, radius=1.0, center=(0.0, 0.0, 0.0)):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=np.float64)

    def closest_point(self, x):
        pts = _as_points(x)
        d = pts - self.center
        r = np.linalg.norm(d, axis=1)
        _raise_degenerate(r < _DEGENERATE_TOL, "the sphere (center query)")
        n = d / r[:, None]
        cp = self.center + self.radius * n
        return ClosestPointResult(cp, np.abs(r - self.radius), n)

    def sample_points(self, spacing):
        # Fibonacci lattice; oversample so nearest-neighbor gaps stay under spacing
        area = 4.0 * np.pi * self.radius**2
        n = max(32, int(np.ceil(4.0 * area / spacing**2)))
        i = np.arange(n, dtype=np.float64)
        phi = np.pi * (3.0 - np.sqrt(5.0)) * i
        z = 1.0 - 2.0 * (i + 0.5) / n
        s = np.sqrt(1.0 - z * z)
        pts = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
        return self.center + self.radius * pts

    def texture_coords(self, p):
        pts = _as_points(p)
        d = (pts - self.center) / self.radius
        u = np.mod(np.arctan2(d[:, 1], d[:, 0]) / (2.0 * np.pi), 1.0)
        v = np.arcsin(np.clip(d[:, 2], -1.0, 1.0)) / np.pi + 0.5
        return np.stack([u, v], axis=1)


class Torus:
    """Torus around the z axis: center circle radius R, tube radius r."""

    kind = "torus"

    def __init__(self, major_radius=1.0, minor_radius=0.4, center=(0.0, 0.0, 0.0)):
        if not 0 < minor_radius < major_radius:
            raise ValueError("need 0 < minor_radius < major_radius")
        self.major_radius = float(major_radius)
        self.minor_radius = float(minor_radius)
        self.center = np.asarray(center, dtype=np.float64)

    def closest_point(self, x):
        pts = _as_points(x) - self.center
        s = np.hypot(pts[:, 0], pts[:, 1])
        _raise_degenerate(s < _DEGENERATE_TOL, "the torus (axis query)")
        ring = np.zeros_like(pts)
        ring[:, 0] = self.major_radius * pts[:, 0] / s
        ring[:, 1] = self.major_radius * pts[:, 1] / s
        d = pts - ring
        dn = np.linalg.norm(d, axis=1)
        _raise_degenerate(dn < _DEGENERATE_TOL, "the torus (center-circle query)")
        n = d / dn[:, None]
        cp = ring + self.minor_radius * n + self.center
        return ClosestPointResult(cp, np.abs(dn - self.minor_radius), n)

    def sample_points(self, spacing):
        R, r = self.major_radius, self.minor_radius
        n_major = max(8, int(np.ceil(3.0 * np.pi * (R + r) / spacing)))
        n_minor = max(8, int(np.ceil(3.0 * np.pi * r / spacing)))
        theta = 2.0 * np.pi * np.arange(n_major) / n_major
        phi = 2.0 * np.pi * np.arange(n_minor) / n_minor
        th, ph = np.meshgrid(theta, phi, indexing="ij")
        w = (R + r * np.cos(ph)).ravel()
        pts = np.stack(
            [w * np.cos(th.ravel()), w * np.sin(th.ravel()), r * np.sin(ph).ravel()],
            axis=1,
        )
        return pts + self.center

    def texture_coords(self, p):
        pts = _as_points(p) - self.center
        s = np.hypot(pts[:, 0], pts[:, 1])
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        phi = np.arctan2(pts[:, 2], s - self.major_radius)
        return np.stack(
            [np.mod(theta / (2.0 * np.pi), 1.0), np.mod(phi / (2.0 * np.pi), 1.0)],
            axis=1,
        )


class PlanePatch:
    """Square patch of the plane z = z0, |x|, |y| <= half_extent.

    An open surface whose closest point map clamps to the patch edges;
    mainly used to test intrinsic operators against flat 2d references.
    """

    kind = "plane_patch"

    def __init__(self, half_extent=1.0, z0=0.0):
        if half_extent <= 0:
            raise ValueError("half_extent must be positive")
        self.half_extent = float(half_extent)
        self.z0 = float(z0)

    def closest_point(self, x):
        pts = _as_points(x)
        a = self.half_extent
        cp = np.empty_like(pts)
        cp[:, 0] = np.clip(pts[:, 0], -a, a)
        cp[:, 1] = np.clip(pts[:, 1], -a, a)
        cp[:, 2] = self.z0
        dist = np.linalg.norm(pts - cp, axis=1)
        normals = np.zeros_like(pts)
        normals[:, 2] = 1.0
        return ClosestPointResult(cp, dist, normals)

    def sample_points(self, spacing):
        a = self.half_extent
        n = max(2, int(np.ceil(3.0 * a / spacing)))
        g = np.linspace(-a, a, n)
        gx, gy = np.meshgrid(g, g, indexing="ij")
        pts = np.stack([gx.ravel(), gy.ravel(), np.full(gx.size, self.z0)], axis=1)
        return pts

    def texture_coords(self, p):
        pts = _as_points(p)
        a = self.half_extent
        u = np.clip((pts[:, 0] + a) / (2.0 * a), 0.0, 1.0)
        v = np.clip((pts[:, 1] + a) / (2.0 * a), 0.0, 1.0)
        return np.stack([u, v], axis=1)


class SurfaceOfRevolution:
    """Surface obtained by rotating a polyline profile around the z axis.

    The profile is a sequence of (s, z) vertices with s >= 0, interpreted
    in the half-plane spanned by the radial direction and z. Open ends of
    the profile become boundary circles; the closest point map clamps to
    them, which realizes zero-flux boundary behavior in the solvers.
    """

    kind = "revolution"

    def __init__(self, profile, chunk=65536):
        prof = np.asarray(profile, dtype=np.float64)
        if prof.ndim != 2 or prof.shape[1] != 2 or prof.shape[0] < 2:
            raise ValueError("profile must be a (K, 2) array with K >= 2")
        if np.any(prof[:, 0] < 0):
            raise ValueError("profile radii must be non-negative")
        seg = np.diff(prof, axis=0)
        seg_len = np.linalg.norm(seg, axis=1)
        if np.any(seg_len < 1e-14):
            raise ValueError("profile contains zero-length segments")
        self.profile = prof
        self.chunk = int(chunk)
        self._seg = seg
        self._seg_len = seg_len
        self._cum_len = np.concatenate([[0.0], np.cumsum(seg_len)])
        # outward-pointing segment normals in the (s, z) half-plane
        self._seg_normal = np.stack([seg[:, 1], -seg[:, 0]], axis=1) / seg_len[:, None]
        vert = np.zeros_like(prof)
        vert[:-1] += self._seg_normal
        vert[1:] += self._seg_normal
        vn = np.linalg.norm(vert, axis=1)
        vn[vn < 1e-14] = 1.0
        self._vertex_normal = vert / vn[:, None]

    @property
    def total_length(self):
        return float(self._cum_len[-1])

    def _project_half_plane(self, q):
        """Nearest point on the profile polyline for half-plane queries q (M, 2).

        Returns (point (M, 2), normal (M, 2), arclength (M,)).
        Ties pick the earliest segment, so results are deterministic.
        """
        p0 = self.profile[:-1]
        d = self._seg
        ll = self._seg_len**2
        t = ((q[:, None, :] - p0[None, :, :]) * d[None, :, :]).sum(axis=2) / ll
        t = np.clip(t, 0.0, 1.0)
        cand = p0[None, :, :] + t[:, :, None] * d[None, :, :]
        dist2 = ((q[:, None, :] - cand) ** 2).sum(axis=2)
        j = np.argmin(dist2, axis=1)
        rows = np.arange(q.shape[0])
        tj = t[rows, j]
        point = cand[rows, j]
        arclen = self._cum_len[j] + tj * self._seg_len[j]
        normal = self._seg_normal[j].copy()
        at_start = tj < 1e-9
        at_end = tj > 1.0 - 1e-9
        normal[at_start] = self._vertex_normal[j[at_start]]
        normal[at_end] = self._vertex_normal[j[at_end] + 1]
        return point, normal, arclen

    def closest_point(self, x):
        pts = _as_points(x)
        m = pts.shape[0]
        cp = np.empty_like(pts)
        dist = np.empty(m)
        normals = np.empty_like(pts)
        for lo in range(0, m, self.chunk):
            hi = min(lo + self.chunk, m)
            sub = pts[lo:hi]
            s = np.hypot(sub[:, 0], sub[:, 1])
            q = np.stack([s, sub[:, 2]], axis=1)
            hp, hn, _ = self._project_half_plane(q)
            # off-axis queries rotate the half-plane result into 3d; on-axis
            # queries are only valid when the profile reaches the axis there
            on_axis = s < _DEGENERATE_TOL
            _raise_degenerate(
                on_axis & (hp[:, 0] > _DEGENERATE_TOL),
                "the surface of revolution (axis query)",
            )
            rx = np.where(on_axis, 1.0, sub[:, 0] / np.where(on_axis, 1.0, s))
            ry = np.where(on_axis, 0.0, sub[:, 1] / np.where(on_axis, 1.0, s))
            cp[lo:hi, 0] = hp[:, 0] * rx
            cp[lo:hi, 1] = hp[:, 0] * ry
            cp[lo:hi, 2] = hp[:, 1]
            normals[lo:hi, 0] = hn[:, 0] * rx
            normals[lo:hi, 1] = hn[:, 0] * ry
            normals[lo:hi, 2] = hn[:, 1]
            dist[lo:hi] = np.linalg.norm(sub - cp[lo:hi], axis=1)
        nn = np.linalg.norm(normals, axis=1)
        _raise_degenerate(nn < 1e-9, "the surface of revolution (normal)")
        normals /= nn[:, None]
        return ClosestPointResult(cp, dist, normals)

    def sample_points(self, spacing):
        out = []
        for k in range(len(self._seg)):
            n_ax = max(2, int(np.ceil(3.0 * self._seg_len[k] / spacing)) + 1)
            t = np.linspace(0.0, 1.0, n_ax)
            sp = self.profile[k] + t[:, None] * self._seg[k]
            for srad, z in sp:
                if srad < spacing * 1e-3:
                    out.append(np.array([[0.0, 0.0, z]]))
                    continue
                n_th = max(4, int(np.ceil(3.0 * 2.0 * np.pi * srad / spacing)))
                th = 2.0 * np.pi * np.arange(n_th) / n_th
                out.append(
                    np.stack(
                        [srad * np.cos(th), srad * np.sin(th), np.full(n_th, z)], axis=1
                    )
                )
        return np.concatenate(out, axis=0)

    def texture_coords(self, p):
        pts = _as_points(p)
        s = np.hypot(pts[:, 0], pts[:, 1])
        q = np.stack([s, pts[:, 2]], axis=1)
        _, _, arclen = self._project_half_plane(q)
        u = np.mod(np.arctan2(pts[:, 1], pts[:, 0]) / (2.0 * np.pi), 1.0)
        v = np.clip(arclen / self.total_length, 0.0, 1.0)
        return np.stack([u, v], axis=1)


def tangent_basis_householder(normals):
    """Orthonormal tangent pairs from unit normals via one Householder reflector.

    For each normal n, reflect e1 onto -sign(n1) n; the reflector's other
    two columns are then an orthonormal basis of the tangent plane. The
    construction is branch-free and never degenerates for unit n.

    Returns (q1, q2), each of shape (M, 3).
    """
    n = np.atleast_2d(np.asarray(normals, dtype=np.float64))
    norms = np.linalg.norm(n, axis=1)
    bad = np.abs(norms - 1.0) > 1e-8
    if np.any(bad):
        raise NotUnit(
            f"{int(bad.sum())} normals are not unit length "
            f"(worst deviation {np.abs(norms - 1.0).max():.3e})"
        )
    sign = np.where(n[:, 0] >= 0.0, 1.0, -1.0)
    v = n.copy()
    v[:, 0] += sign
    beta = 2.0 / (v * v).sum(axis=1)
    q1 = -beta[:, None] * v[:, 1:2] * v
    q1[:, 1] += 1.0
    q2 = -beta[:, None] * v[:, 2:3] * v
    q2[:, 2] += 1.0
    return q1, q2


def tangent_basis_from_cp_jacobian(surface, points, step):
    """Tangent pairs from the Jacobian of the closest point map.

    Central differences of cp around each (on-surface) point give a matrix
    whose symmetrized eigenvectors split into the normal (eigenvalue near 0)
    and the tangent plane (two eigenvalues near 1). Raises IllConditioned
    when the eigenvalues do not cluster that way, e.g. at boundary edges of
    open surfaces or for points too far off the surface.

    Returns (q1, q2, n), each of shape (M, 3).
    """
    pts = _as_points(points)
    m = pts.shape[0]
    jac = np.empty((m, 3, 3))
    for k in range(3):
        e = np.zeros(3)
        e[k] = step
        fwd = surface.closest_point(pts + e).points
        bwd = surface.closest_point(pts - e).points
        jac[:, :, k] = (fwd - bwd) / (2.0 * step)
    sym = 0.5 * (jac + np.transpose(jac, (0, 2, 1)))
    w, v = np.linalg.eigh(sym)
    off = np.maximum(np.abs(w[:, 0]), np.abs(w[:, 1:] - 1.0).max(axis=1))
    if np.any(off > 0.2):
        idx = int(np.argmax(off))
        raise IllConditioned(
            "closest point Jacobian eigenvalues do not cluster at {0, 1, 1}: "
            f"got {w[idx]} at row {idx}"
        )
    return v[:, :, 1], v[:, :, 2], v[:, :, 0]


def vase_profile(n=80):
    """A smooth open vase profile in the (s, z) half-plane.

    Radius varies along the height to give a neck and a belly; the top and
    bottom circles are open boundaries. Returned as a (n, 2) polyline.
    """
    z = np.linspace(-0.9, 0.9, n)
    t = (z + 0.9) / 1.8
    s = 0.45 + 0.25 * np.sin(np.pi * t) - 0.18 * np.exp(-((t - 0.82) ** 2) / 0.012)
    s = np.maximum(s, 0.12)
    return np.stack([s, z], axis=1)


def make_surface(kind, **kw):
    """Construct a surface by kind name; used by config loading."""
    kinds = {
        "sphere": Sphere,
        "torus": Torus,
        "plane_patch": PlanePatch,
        "revolution": SurfaceOfRevolution,
    }
    if kind not in kinds:
        raise ValueError(f"unknown surface kind {kind!r}")
    return kinds[kind](**kw)
