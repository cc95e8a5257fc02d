"""Denoising a striped torus: edge-enhancing flow against two baselines.

A stripe pattern is wrapped around a torus and 30% of the points are
replaced by random flat-color splotches. Three filters then run for the
same stop time: plain surface Gaussian smoothing, scalar Perona-Malik,
and tensor-driven edge-enhancing diffusion. PSNR against the clean
stripes shows why the tensor version is worth the extra machinery: it
smooths along the stripe edges instead of across them.

Uses h=0.025 so the whole comparison finishes in about two minutes.
"""
import time

import numpy as np

import surfdiff as sd
from surfdiff.filters import FilterConfig
from surfdiff.imaging import add_replacement_noise, stripes

H = 0.025
BOX = ((-1.6, -1.6, -1.6), (1.6, 1.6, 1.6))  # torus needs a little more room
PALETTE = np.array([0.15, 0.85, 0.3, 0.5, 0.7])

t0 = time.perf_counter()
ws = sd.Workspace(sd.Torus(1.0, 0.4), H, box=BOX)
print(f"band: {ws.band.n_points} points ({time.perf_counter() - t0:.1f}s)")

img = stripes((512, 512), count=16, axis=1)
clean = sd.map_texture(ws, img)
noisy = add_replacement_noise(clean, 0.3, PALETTE, seed=42)
print(f"noisy PSNR: {sd.psnr(noisy, clean):.2f} dB")

configs = {
    "gaussian": FilterConfig(kind="gaussian", stop_time=1.2e-3),
    "perona_malik": FilterConfig(kind="perona_malik", stop_time=1.2e-3,
                                 sigma=1.0e-4, lambda_rel=0.2),
    "edge_enhancing": FilterConfig(kind="edge", stop_time=1.2e-3,
                                   sigma=1.0e-4, rho=4.0e-4,
                                   lambda_rel=4.0e-2),
}

for name, cfg in configs.items():
    t0 = time.perf_counter()
    res = sd.run_filter(noisy, cfg, ws)
    p = sd.psnr(res.values, clean)
    print(f"{name:<16s} steps={res.steps:<3d} PSNR={p:6.2f} dB  "
          f"({time.perf_counter() - t0:.0f}s)")
