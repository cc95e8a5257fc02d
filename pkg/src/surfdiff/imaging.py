"""Images on surfaces: synthetic textures, texture mapping, noise, metrics.

Textures are float arrays in [0, 1], either (H, W) or (H, W, 3). Mapping
onto a surface samples the texture at the parameterization of each band
point's closest surface point, so the mapped field is a closest point
extension by construction. Synthetic patterns default to the value range
[0.15, 0.85]: cubic interpolation of hard edges overshoots by a bounded
fraction of the jump, and this range keeps all intermediate fields well
inside [0, 1] even for replacement noise.
"""
from __future__ import annotations

import numpy as np

from . import rng

DEFAULT_LOW = 0.15
DEFAULT_HIGH = 0.85


# -- synthetic patterns ----------------------------------------------------

def stripes(shape, count=8, axis=0, low=DEFAULT_LOW, high=DEFAULT_HIGH):
    """Hard-edged periodic stripes across the given texture axis."""
    h, w = shape
    u = (np.arange(h if axis == 0 else w) + 0.5) / (h if axis == 0 else w)
    band_id = np.floor(u * count).astype(np.int64) % 2
    line = np.where(band_id == 0, low, high)
    return np.tile(line[:, None], (1, w)) if axis == 0 else np.tile(line[None, :], (h, 1))


def checkerboard(shape, count=8, low=DEFAULT_LOW, high=DEFAULT_HIGH):
    h, w = shape
    iu = np.floor((np.arange(h) + 0.5) / h * count).astype(np.int64)
    iv = np.floor((np.arange(w) + 0.5) / w * count).astype(np.int64)
    cell = (iu[:, None] + iv[None, :]) % 2
    return np.where(cell == 0, low, high)


def _value_noise(shape, cells, seed, stream):
    """Bilinear interpolation of lattice random values, periodic in both axes."""
    h, w = shape
    gy = (np.arange(h) + 0.5) / h * cells
    gx = (np.arange(w) + 0.5) / w * cells
    y0 = np.floor(gy).astype(np.int64)
    x0 = np.floor(gx).astype(np.int64)
    ty = (gy - y0)[:, None]
    tx = (gx - x0)[None, :]

    def lattice(iy, ix):
        key = (iy[:, None] % cells) * np.int64(1 << 20) + (ix[None, :] % cells)
        return rng.random_uniform(seed, stream, key.astype(np.uint64))

    v00 = lattice(y0, x0)
    v01 = lattice(y0, x0 + 1)
    v10 = lattice(y0 + 1, x0)
    v11 = lattice(y0 + 1, x0 + 1)
    return (v00 * (1 - ty) * (1 - tx) + v01 * (1 - ty) * tx
            + v10 * ty * (1 - tx) + v11 * ty * tx)


def turbulence(shape, cells=8, octaves=4, seed=0, stream=7):
    """Multi-octave value noise in [0, 1], periodic across both axes."""
    acc = np.zeros(shape)
    amp = 1.0
    total = 0.0
    for k in range(octaves):
        acc += amp * _value_noise(shape, cells * (2**k), seed, stream + k)
        total += amp
        amp *= 0.5
    return acc / total


def wood_rings(shape, rings=6, warp=0.35, seed=0, low=DEFAULT_LOW, high=DEFAULT_HIGH):
    """Concentric rings warped by turbulence, a wood-grain-like pattern."""
    h, w = shape
    v = (np.arange(h) + 0.5) / h - 0.5
    u = (np.arange(w) + 0.5) / w - 0.5
    r = np.hypot(v[:, None], u[None, :])
    t = turbulence(shape, cells=4, octaves=4, seed=seed)
    phase = np.sin(2.0 * np.pi * (rings * r + warp * t))
    return low + (high - low) * (0.5 + 0.5 * phase)


def interrupted_stripes(shape, count=24, gap_density=0.45, gap_cells=6,
                        seed=0, waviness=0.0, wave_cells=24, hard=False,
                        cross=0.0, cross_count=0,
                        low=DEFAULT_LOW, high=DEFAULT_HIGH):
    """Oriented stripes broken by noise gaps, a fingerprint-like test chart.

    The stripe field is strongly oriented; the gaps destroy it locally.
    `waviness` adds phase jitter (in stripe periods) at the `wave_cells`
    noise scale, wiggling the ridges the way real fingerprint ridges
    wiggle. `cross` overlays a faint perpendicular weave of `cross_count`
    periods, like scanner grain running across the ridges; flow directed
    smoothing wipes the weave while leaving the ridges. `gap_cells` sets
    the gap blob scale (higher = smaller breaks) and `hard` switches from
    a sine profile to saturated ridges with sharp flanks.
    """
    h, w = shape
    v = (np.arange(h) + 0.5) / h
    u = (np.arange(w) + 0.5) / w
    uu, vv = np.meshgrid(u, v, indexing="xy")
    # gently curving stripe phase, mostly along one direction
    phase = count * (vv + 0.18 * np.sin(2.0 * np.pi * uu))
    if waviness > 0:
        jitter = turbulence(shape, cells=wave_cells, octaves=1, seed=seed,
                            stream=13)
        phase = phase + waviness * (2.0 * jitter - 1.0)
    wave = np.sin(2.0 * np.pi * phase)
    if hard:
        # ridge-like profile: sharp flanks that across-edge diffusivity
        # protects, unlike a sine whose gradients blur everywhere
        wave = np.tanh(4.0 * wave)
    if cross > 0:
        weave = np.sin(2.0 * np.pi * cross_count * uu)
        wave = (wave + cross * weave) / (1.0 + cross)
    base = 0.5 + 0.5 * wave
    gaps = turbulence(shape, cells=gap_cells, octaves=3, seed=seed, stream=11)
    out = np.where(gaps < gap_density, 0.5, base)
    return low + (high - low) * out


# -- texture sampling ------------------------------------------------------

def sample_texture(img, uv, wrap_u=True, wrap_v=False):
    """Bilinear texture lookup at points uv in [0, 1]^2.

    wrap_u / wrap_v select periodic or clamped behavior per axis; u indexes
    texture columns, v rows. Returns (M,) or (M, C) matching the texture.
    """
    img = np.asarray(img, dtype=np.float64)
    uv = np.asarray(uv, dtype=np.float64)
    h, w = img.shape[:2]

    def locate(coord, n, wrap):
        x = coord * n - 0.5
        x0 = np.floor(x).astype(np.int64)
        t = x - x0
        if wrap:
            i0, i1 = x0 % n, (x0 + 1) % n
        else:
            i0 = np.clip(x0, 0, n - 1)
            i1 = np.clip(x0 + 1, 0, n - 1)
        return i0, i1, t

    j0, j1, tu = locate(uv[:, 0], w, wrap_u)
    i0, i1, tv = locate(uv[:, 1], h, wrap_v)
    if img.ndim == 3:
        tu = tu[:, None]
        tv = tv[:, None]
    return (img[i0, j0] * (1 - tv) * (1 - tu) + img[i0, j1] * (1 - tv) * tu
            + img[i1, j0] * tv * (1 - tu) + img[i1, j1] * tv * tu)


_WRAP_BY_KIND = {
    "sphere": (True, False),
    "torus": (True, True),
    "revolution": (True, False),
    "plane_patch": (False, False),
}


def map_texture(ws, img):
    """Sample a texture over the band via the surface parameterization.

    The value at a band point is the texture at its closest surface point,
    which makes the result an exact closest point extension.
    """
    kind = getattr(ws.surface, "kind", None)
    if kind not in _WRAP_BY_KIND:
        raise ValueError(
            f"surface kind {kind!r} has no texture parameterization"
        )
    uv = ws.surface.texture_coords(ws.cp_points)
    wu, wv = _WRAP_BY_KIND[kind]
    return sample_texture(img, uv, wrap_u=wu, wrap_v=wv)


def mesh_colors_to_band(ws):
    """Pull per-vertex mesh colors onto the band by barycentric interpolation."""
    if ws.cp_result_extra is None:
        raise ValueError("workspace surface is not a mesh")
    tri, bary = ws.cp_result_extra
    return ws.surface.colors_at(tri, bary)


def load_texture(path):
    """Read an image file into a float texture in [0, 1]."""
    from PIL import Image

    img = np.asarray(Image.open(path).convert("RGB"), dtype=np.float64) / 255.0
    if np.allclose(img[:, :, 0], img[:, :, 1]) and np.allclose(img[:, :, 1], img[:, :, 2]):
        return img[:, :, 0]
    return img


# -- noise models ----------------------------------------------------------

def add_gaussian_noise(values, std, seed):
    """Additive Gaussian noise, independent per point and channel."""
    v = np.array(values, dtype=np.float64, copy=True)
    idx = np.arange(v.shape[0], dtype=np.uint64)
    if v.ndim == 1:
        return v + std * rng.random_normal(seed, 0, idx)
    for c in range(v.shape[1]):
        v[:, c] += std * rng.random_normal(seed, c, idx)
    return v


def add_salt_pepper(values, fraction, seed, low=0.0, high=1.0):
    """Replace a fraction of points by the two extreme values, half each."""
    v = np.array(values, dtype=np.float64, copy=True)
    idx = np.arange(v.shape[0], dtype=np.uint64)
    u = rng.random_uniform(seed, 0, idx)
    salt = u < fraction / 2.0
    pepper = (u >= fraction / 2.0) & (u < fraction)
    v[salt] = high
    v[pepper] = low
    return v


def add_replacement_noise(values, fraction, palette, seed):
    """Replace a fraction of points by colors drawn from a palette.

    The palette is (K,) for scalar fields or (K, C) for channel fields;
    draws are uniform over palette entries.
    """
    v = np.array(values, dtype=np.float64, copy=True)
    palette = np.asarray(palette, dtype=np.float64)
    if palette.ndim != v.ndim:
        raise ValueError("palette dimensionality must match the field")
    idx = np.arange(v.shape[0], dtype=np.uint64)
    hit = rng.random_uniform(seed, 0, idx) < fraction
    pick = rng.random_choice(seed, 1, idx, len(palette))
    v[hit] = palette[pick[hit]]
    return v


def apply_noise(values, model, seed, fraction=0.0, std=0.0, palette=None,
                low=0.0, high=1.0):
    """Dispatch over the supported noise models by name."""
    if model in (None, "", "none"):
        return np.array(values, dtype=np.float64, copy=True)
    if model == "gaussian":
        return add_gaussian_noise(values, std, seed)
    if model == "salt_pepper":
        return add_salt_pepper(values, fraction, seed, low=low, high=high)
    if model == "replacement":
        if palette is None:
            raise ValueError("replacement noise needs a palette")
        return add_replacement_noise(values, fraction, palette, seed)
    raise ValueError(f"unknown noise model {model!r}")


# -- metrics ---------------------------------------------------------------

def psnr(values, reference):
    """Peak signal-to-noise ratio over the band, in dB.

    Both fields are clamped to [0, 1] first (display range); identical
    fields give +inf.
    """
    a = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    b = np.clip(np.asarray(reference, dtype=np.float64), 0.0, 1.0)
    if a.shape != b.shape:
        raise ValueError("fields must have the same shape")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(1.0 / mse)
