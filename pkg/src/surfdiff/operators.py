"""Discrete operators on a banded grid.

Three ingredients drive every solver in the package:

* a closest point extension operator E (tri-cubic Lagrange interpolation
  at the projected points, one sparse row of 64 weights per band point),
* the standard 7-point Laplacian,
* a conservative second-order stencil for Div(G grad v) with a symmetric
  per-point tensor G: one-sided fluxes with arithmetically averaged
  diagonal coefficients plus central differences for the mixed terms.

Difference stencils are only evaluated on the interior mask, the band
points whose entire composite stencil (axis plus diagonal neighbors) is
in the band; rows outside the mask are zero. The band radius guarantees
every interpolation footprint consists of masked points, so the
evolve-extend iteration never consumes a rim value.
"""
from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp

from .errors import FootprintEscapesBand

logger = logging.getLogger(__name__)

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional speedup
    _HAVE_NUMBA = False

    def njit(*a, **k):
        def wrap(f):
            return f

        return wrap

AXIS_OFFSETS = (
    (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1),
)
DIAG_OFFSETS = (
    (1, 1, 0), (1, -1, 0), (-1, 1, 0), (-1, -1, 0),
    (1, 0, 1), (1, 0, -1), (-1, 0, 1), (-1, 0, -1),
    (0, 1, 1), (0, 1, -1), (0, -1, 1), (0, -1, -1),
)
STENCIL_OFFSETS = AXIS_OFFSETS + DIAG_OFFSETS

# symmetric tensor component layout used throughout
XX, XY, XZ, YY, YZ, ZZ = range(6)


def tricubic_axis_weights(t):
    """Cubic Lagrange weights on nodes {-1, 0, 1, 2} at parameter t in [0, 1)."""
    t = np.asarray(t, dtype=np.float64)
    w = np.empty(t.shape + (4,))
    w[..., 0] = -t * (t - 1.0) * (t - 2.0) / 6.0
    w[..., 1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
    w[..., 2] = -(t + 1.0) * t * (t - 2.0) / 2.0
    w[..., 3] = (t + 1.0) * t * (t - 1.0) / 6.0
    return w


def _footprint_fill(band, pts, indices_out, data_out, chunk=131072):
    """Fill 64 interpolation columns and weights per query point.

    Column indices come out strictly increasing within each row because
    footprint codes are enumerated in lexicographic order, so the CSR
    built on top is canonical without a sort pass.
    """
    grid = band.spec
    _, ny, nz = grid.shape
    origin = np.asarray(grid.origin)
    n = len(pts)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        s = (pts[lo:hi] - origin) / grid.h
        base = np.floor(s).astype(np.int64)
        t = s - base
        off = np.arange(-1, 3, dtype=np.int64)
        cx = base[:, 0:1] + off
        cy = base[:, 1:2] + off
        cz = base[:, 2:3] + off
        codes = (
            (cx[:, :, None, None] * ny + cy[:, None, :, None]) * nz
            + cz[:, None, None, :]
        )
        cols = band.find(codes.reshape(-1, 64).ravel())
        if np.any(cols < 0):
            missing = int((cols < 0).sum())
            raise FootprintEscapesBand(
                f"{missing} interpolation footprint nodes fall outside the band; "
                "the band radius is too small for the interpolation degree"
            )
        indices_out[lo * 64:hi * 64] = cols
        wx = tricubic_axis_weights(t[:, 0])
        wy = tricubic_axis_weights(t[:, 1])
        wz = tricubic_axis_weights(t[:, 2])
        w = np.einsum("ni,nj,nk->nijk", wx, wy, wz)
        data_out[lo * 64:hi * 64] = w.reshape(-1)


def build_extension_matrix(band, cp_points):
    """Closest point extension as a sparse matrix: row i interpolates at cp(x_i).

    Each row holds the 64 tri-cubic weights of the footprint around the
    projected point; rows sum to one exactly up to round-off.
    """
    pts = np.asarray(cp_points, dtype=np.float64)
    n = band.n_points
    if pts.shape != (n, 3):
        raise ValueError("cp_points must be one 3-vector per band point")
    indices = np.empty(n * 64, dtype=np.int32)
    data = np.empty(n * 64, dtype=np.float64)
    _footprint_fill(band, pts, indices, data)
    indptr = np.arange(0, 64 * n + 1, 64, dtype=np.int64)
    mat = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    mat.has_sorted_indices = True
    return mat


def interpolate_at(band, values, points):
    """Tri-cubic interpolation of a band field at arbitrary points."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    m = len(pts)
    indices = np.empty(m * 64, dtype=np.int32)
    data = np.empty(m * 64, dtype=np.float64)
    _footprint_fill(band, pts, indices, data)
    vals = np.asarray(values)
    gathered = vals[indices.reshape(m, 64)]
    if vals.ndim == 1:
        return (data.reshape(m, 64) * gathered).sum(axis=1)
    return (data.reshape(m, 64)[:, :, None] * gathered).sum(axis=1)


class BandOperators:
    """Precomputed stencil topology and operators for one band.

    Attributes
    ----------
    band : BandedGrid
    extension : scipy CSR matrix, the closest point extension
    laplacian : scipy CSR matrix, 7-point Laplacian on masked rows
    mask : (N,) bool, points whose full composite stencil is in the band
    """

    def __init__(self, band, cp_points):
        self.band = band
        self.h = band.spec.h
        n = band.n_points
        grid = band.spec
        _, ny, nz = grid.shape

        # neighbor band indices per stencil offset; band never touches the
        # box boundary, so code arithmetic cannot wrap across grid rows
        neigh_all = np.empty((n, len(STENCIL_OFFSETS)), dtype=np.int64)
        for k, (dx, dy, dz) in enumerate(STENCIL_OFFSETS):
            delta = (dx * ny + dy) * nz + dz
            neigh_all[:, k] = band.find(band.codes + delta)
        self.mask = (neigh_all >= 0).all(axis=1)
        self.rows = np.flatnonzero(self.mask)
        self.neigh = {
            off: neigh_all[self.rows, k].astype(np.int32)
            for k, off in enumerate(STENCIL_OFFSETS)
        }
        del neigh_all

        self.extension = build_extension_matrix(band, cp_points)
        self._ext_data = self.extension.data.reshape(n, 64)
        self._ext_idx = self.extension.indices.reshape(n, 64)
        # interpolation may only read masked points (structural guarantee)
        if not np.all(self.mask[self._ext_idx.ravel()]):
            raise FootprintEscapesBand(
                "an interpolation footprint touches a rim point whose stencil "
                "leaves the band; the band radius is inconsistent"
            )
        self.laplacian = self._build_laplacian()
        logger.info(
            "operators: %d band points, %d masked, %.1fM extension weights",
            n, len(self.rows), self.extension.nnz / 1e6,
        )

    def _build_laplacian(self):
        n = self.band.n_points
        m = len(self.rows)
        h2 = self.h * self.h
        # columns sorted ascending: -x, -y, -z, center, +z, +y, +x
        order = [(-1, 0, 0), (0, -1, 0), (0, 0, -1), None,
                 (0, 0, 1), (0, 1, 0), (1, 0, 0)]
        cols = np.empty((m, 7), dtype=np.int32)
        vals = np.empty((m, 7), dtype=np.float64)
        for j, off in enumerate(order):
            if off is None:
                cols[:, j] = self.rows
                vals[:, j] = -6.0 / h2
            else:
                cols[:, j] = self.neigh[off]
                vals[:, j] = 1.0 / h2
        self._lap_cols = cols
        counts = np.zeros(n, dtype=np.int64)
        counts[self.rows] = 7
        indptr = np.concatenate([[0], np.cumsum(counts)])
        mat = sp.csr_matrix((vals.reshape(-1), cols.reshape(-1), indptr), shape=(n, n))
        mat.has_sorted_indices = True
        return mat

    # -- fast applications ------------------------------------------------

    def apply_extension(self, v):
        """E v for one or several columns; never mixes channels."""
        v = np.asarray(v, dtype=np.float64)
        squeeze = v.ndim == 1
        x = np.ascontiguousarray(v[:, None] if squeeze else v)
        out = np.empty(x.shape)
        if _HAVE_NUMBA:
            _fixed_row_apply(self._ext_data, self._ext_idx, x, out)
        else:
            _fixed_row_apply_numpy(self._ext_data, self._ext_idx, x, out)
        return out[:, 0] if squeeze else out

    def apply_laplacian(self, v):
        """7-point Laplacian; zero on rows outside the interior mask."""
        v = np.asarray(v, dtype=np.float64)
        squeeze = v.ndim == 1
        x = np.ascontiguousarray(v[:, None] if squeeze else v)
        out = np.zeros(x.shape)
        if _HAVE_NUMBA:
            _lap7_apply(self._lap_cols, x, out, 1.0 / (self.h * self.h))
        else:
            acc = -6.0 * x[self.rows]
            for off in AXIS_OFFSETS:
                acc += x[self.neigh[off]]
            out[self.rows] = acc / (self.h * self.h)
        return out[:, 0] if squeeze else out

    def heat_steps(self, v, n_steps, tau):
        """Explicit evolve-extend iterations of the surface heat equation."""
        v = np.asarray(v, dtype=np.float64)
        for _ in range(n_steps):
            v = self.apply_extension(v + tau * self.apply_laplacian(v))
        return v


def _fixed_row_apply_numpy(data, idx, x, out, chunk=32768):
    for lo in range(0, data.shape[0], chunk):
        hi = min(lo + chunk, data.shape[0])
        out[lo:hi] = np.einsum(
            "rf,rfc->rc", data[lo:hi], x[idx[lo:hi]], optimize=True
        )


@njit(cache=True, fastmath=True)
def _fixed_row_apply(data, idx, x, out):  # pragma: no cover - exercised via wrapper
    n, f = data.shape
    c = x.shape[1]
    for i in range(n):
        for ch in range(c):
            out[i, ch] = 0.0
        for k in range(f):
            w = data[i, k]
            j = idx[i, k]
            for ch in range(c):
                out[i, ch] += w * x[j, ch]


@njit(cache=True, fastmath=True)
def _lap7_apply(cols, x, out, inv_h2):  # pragma: no cover - exercised via wrapper
    m = cols.shape[0]
    c = x.shape[1]
    for r in range(m):
        i = cols[r, 3]
        for ch in range(c):
            acc = (x[cols[r, 0], ch] + x[cols[r, 1], ch] + x[cols[r, 2], ch]
                   - 6.0 * x[i, ch]
                   + x[cols[r, 4], ch] + x[cols[r, 5], ch] + x[cols[r, 6], ch])
            out[i, ch] = acc * inv_h2


def _gather(ops, arr, off):
    """Values of arr at the neighbor in direction off, masked rows only."""
    return arr[ops.neigh[off]]


def isotropic_divergence(g, v, ops):
    """Div(g grad v) with scalar diffusivity g, flux form with averaged g.

    Zero outside the interior mask. Used by the scalar nonlinear filter and
    as the reference the tensor stencil must collapse to for G = g I.
    """
    v = np.asarray(v, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    squeeze = v.ndim == 1
    x = v[:, None] if squeeze else v
    out = np.zeros_like(x)
    rows = ops.rows
    gc = g[rows][:, None]
    xc = x[rows]
    acc = np.zeros_like(xc)
    for plus, minus in (((1, 0, 0), (-1, 0, 0)),
                        ((0, 1, 0), (0, -1, 0)),
                        ((0, 0, 1), (0, 0, -1))):
        gp = g[ops.neigh[plus]][:, None]
        gm = g[ops.neigh[minus]][:, None]
        acc += (gc + gp) * (x[ops.neigh[plus]] - xc) \
            - (gm + gc) * (xc - x[ops.neigh[minus]])
    out[rows] = acc / (2.0 * ops.h * ops.h)
    return out[:, 0] if squeeze else out


def anisotropic_divergence(G, v, ops):
    """Div(G grad v) for a symmetric per-point tensor G, components (N, 6).

    Diagonal terms use one-sided differences with arithmetic averaging of
    the coefficient at the half points; mixed terms use nested central
    differences. The same off-diagonal component feeds both mixed terms of
    a pair, matching the symmetry of G. Reduces exactly to the 7-point
    Laplacian for G = I and to the scalar flux form for G = g I.
    """
    v = np.asarray(v, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2 or G.shape[1] != 6:
        raise ValueError("G must have shape (N, 6)")
    squeeze = v.ndim == 1
    x = v[:, None] if squeeze else v
    out = np.zeros_like(x)
    rows = ops.rows
    h2 = ops.h * ops.h
    xc = x[rows]

    def g_at(comp, off=None):
        col = G[:, comp] if off is None else G[ops.neigh[off], comp]
        return (col[rows] if off is None else col)[:, None]

    acc = np.zeros_like(xc)
    for comp, plus, minus in ((XX, (1, 0, 0), (-1, 0, 0)),
                              (YY, (0, 1, 0), (0, -1, 0)),
                              (ZZ, (0, 0, 1), (0, 0, -1))):
        gp = g_at(comp, plus)
        gm = g_at(comp, minus)
        gc = g_at(comp)
        acc += ((gc + gp) * (x[ops.neigh[plus]] - xc)
                - (gm + gc) * (xc - x[ops.neigh[minus]])) / (2.0 * h2)

    def mixed(comp, a_plus, a_minus, b_plus, b_minus, pp, pm, mp, mm):
        # D_a( comp * D_b v ) + D_b( comp * D_a v ), both central
        vpp, vpm = x[ops.neigh[pp]], x[ops.neigh[pm]]
        vmp, vmm = x[ops.neigh[mp]], x[ops.neigh[mm]]
        ga_p, ga_m = g_at(comp, a_plus), g_at(comp, a_minus)
        gb_p, gb_m = g_at(comp, b_plus), g_at(comp, b_minus)
        return (ga_p * (vpp - vpm) - ga_m * (vmp - vmm)
                + gb_p * (vpp - vmp) - gb_m * (vpm - vmm)) / (4.0 * h2)

    acc += mixed(XY, (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0),
                 (1, 1, 0), (1, -1, 0), (-1, 1, 0), (-1, -1, 0))
    acc += mixed(XZ, (1, 0, 0), (-1, 0, 0), (0, 0, 1), (0, 0, -1),
                 (1, 0, 1), (1, 0, -1), (-1, 0, 1), (-1, 0, -1))
    acc += mixed(YZ, (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1),
                 (0, 1, 1), (0, 1, -1), (0, -1, 1), (0, -1, -1))
    out[rows] = acc
    return out[:, 0] if squeeze else out


def axis_central_differences(v, ops):
    """Central differences along the three axes; zero outside the mask.

    Returns shape (N, 3) for scalar input, (N, 3, C) for multi-channel.
    """
    v = np.asarray(v, dtype=np.float64)
    squeeze = v.ndim == 1
    x = v[:, None] if squeeze else v
    out = np.zeros((x.shape[0], 3, x.shape[1]))
    inv = 1.0 / (2.0 * ops.h)
    for k, (plus, minus) in enumerate((((1, 0, 0), (-1, 0, 0)),
                                       ((0, 1, 0), (0, -1, 0)),
                                       ((0, 0, 1), (0, 0, -1)))):
        out[ops.rows, k] = (x[ops.neigh[plus]] - x[ops.neigh[minus]]) * inv
    return out[:, :, 0] if squeeze else out
