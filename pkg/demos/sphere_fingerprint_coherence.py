"""Coherence-enhancing flow closing gaps in an interrupted line pattern.

A fingerprint-like chart (curved parallel ridges, noise-driven gaps, a
faint cross-grain weave) is mapped onto the unit sphere and evolved with
coherence-enhancing diffusion. The flow smooths along the local ridge
direction, so it bridges the gaps and wipes the cross-grain while barely
touching the ridges themselves. The band mean of the structure tensor
coherence mu1 - mu2 goes UP even though diffusion removes energy, which
is the whole point of steering the tensor.

Note on resolution: this effect needs the fine grid. The weave sits a
couple of grid cells wide at h=0.0125; a coarser grid blurs it away by
interpolation before the flow can take credit. Expect roughly 8 minutes.
"""
import time

import surfdiff as sd
from surfdiff.filters import FilterConfig, run_anisotropic
from surfdiff.imaging import interrupted_stripes
from surfdiff.structure import structure_eigen

H = 0.0125
CFG = FilterConfig(kind="coherence", stop_time=1.2e-3, sigma=1.0e-4,
                   rho=4.0e-4, alpha=1.0e-3, b_rel=1.0e-3)

t0 = time.perf_counter()
ws = sd.Workspace(sd.Sphere(1.0), H)
print(f"band: {ws.band.n_points} points ({time.perf_counter() - t0:.0f}s)",
      flush=True)

img = interrupted_stripes((1024, 1024), count=10, gap_density=0.25,
                          gap_cells=13, waviness=0.15, wave_cells=17,
                          cross=0.40, cross_count=25, seed=0)
u0 = sd.map_texture(ws, img)


def mean_coherence(u):
    eig = structure_eigen(u, CFG.sigma, CFG.rho, ws)
    return ws.band_mean(eig.coherence)


c0 = mean_coherence(u0)
print(f"initial mean coherence: {c0:.4f}", flush=True)

t0 = time.perf_counter()
res = run_anisotropic(u0, CFG, ws)
c1 = mean_coherence(res.values)
print(f"after {res.steps} steps:  {c1:.4f}  "
      f"(ratio {c1 / c0:.4f}, {time.perf_counter() - t0:.0f}s)")
print("coherence increased" if c1 > c0 else "coherence decreased")
