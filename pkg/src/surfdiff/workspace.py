"""Assembly of everything a filtering run needs for one surface and grid.

A workspace bundles the band, the closest point data of all band points,
an orthonormal tangent frame per point, and the discrete operators. It is
built once and then shared by smoothing, structure tensor and filtering
passes; all of those are pure functions of the workspace plus a field.
"""
from __future__ import annotations

import logging
import time

import numpy as np

from .band import BandedGrid, GridSpec, build_band, compute_band_radius
from .geometry import tangent_basis_from_cp_jacobian, tangent_basis_householder
from .operators import BandOperators

logger = logging.getLogger(__name__)

DEFAULT_BOX = ((-1.5, -1.5, -1.5), (1.5, 1.5, 1.5))
INTERP_DEGREE = 3
STENCIL_REACH = 1


class Workspace:
    """Band, geometry samples and operators for one (surface, h) pair.

    Attributes
    ----------
    surface, grid, band
    cp_points : (N, 3) closest surface point of each band point
    cp_dist : (N,) distances to the surface
    normals : (N, 3) unit normals at the projected points
    q1, q2 : (N, 3) orthonormal tangent frame at the projected points
    ops : BandOperators
    tau_nominal : reference explicit time step, tau_factor * h**2
    """

    def __init__(self, surface, h, box=None, tau_factor=0.15,
                 tangent_basis="householder", band=None, cp_chunk=262144):
        if not 0.0 < tau_factor <= 0.5:
            raise ValueError("tau_factor must lie in (0, 0.5]")
        t0 = time.perf_counter()
        self.surface = surface
        if band is None:
            box = DEFAULT_BOX if box is None else box
            grid = GridSpec.from_box(box[0], box[1], h)
            radius = compute_band_radius(INTERP_DEGREE, STENCIL_REACH, h)
            band = build_band(surface, grid, radius, cp_chunk=cp_chunk)
        elif abs(band.spec.h - h) > 1e-12:
            raise ValueError("supplied band was built for a different h")
        self.band = band
        self.grid = band.spec
        self.h = float(h)
        self.tau_factor = float(tau_factor)
        self.tau_nominal = tau_factor * h * h

        pts = band.points()
        n = band.n_points
        self.cp_points = np.empty((n, 3))
        self.cp_dist = np.empty(n)
        self.normals = np.empty((n, 3))
        for lo in range(0, n, cp_chunk):
            hi = min(lo + cp_chunk, n)
            res = surface.closest_point(pts[lo:hi])
            self.cp_points[lo:hi] = res.points
            self.cp_dist[lo:hi] = res.dist
            self.normals[lo:hi] = res.normals
        self.cp_result_extra = None
        if getattr(surface, "kind", None) == "mesh":
            # meshes need triangle ids and barycentric weights for colors
            res = surface.closest_point(self.cp_points)
            self.cp_result_extra = (res.triangle, res.bary)

        if tangent_basis == "householder":
            self.q1, self.q2 = tangent_basis_householder(self.normals)
        elif tangent_basis == "cp_jacobian":
            self.q1, self.q2, jn = tangent_basis_from_cp_jacobian(
                surface, self.cp_points, step=0.5 * h
            )
            # keep the query normals; the Jacobian normal is sign-ambiguous
        else:
            raise ValueError(f"unknown tangent basis {tangent_basis!r}")

        self.ops = BandOperators(band, self.cp_points)
        logger.info(
            "workspace (%s, h=%g): %d points, built in %.1fs",
            getattr(surface, "kind", "?"), h, n, time.perf_counter() - t0,
        )

    @property
    def n_points(self):
        return self.band.n_points

    def extend(self, v):
        return self.ops.apply_extension(v)

    def band_mean(self, v):
        v = np.asarray(v)
        return v.mean(axis=0)
