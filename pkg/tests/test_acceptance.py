"""End-to-end acceptance checks, one per shipped guarantee.

Every test prints a single PASS/FAIL line with the measured numbers, so
a full run doubles as a report. Tolerances are pinned here and are
deliberately not shared with the unit tests. Checks 3, 7 and 10 do real
filtering work; the whole file takes roughly a quarter of an hour, most
of it in the fine-grid coherence run of check 10.
"""
import time

import numpy as np
import pytest

import surfdiff as sd
from surfdiff.filters import (
    FilterConfig,
    filter_step_count,
    pixel_to_surface_parameters,
    run_anisotropic,
    run_perona_malik,
)
from surfdiff.imaging import add_replacement_noise, interrupted_stripes, stripes
from surfdiff.operators import anisotropic_divergence, interpolate_at, isotropic_divergence
from surfdiff.structure import eigen_sym2, structure_eigen, tensor_from_eigen

from conftest import on_surface_samples

H_FINE = 0.0125
TAU_FACTOR = 0.15

EE_CFG = FilterConfig(kind="edge", stop_time=1.2e-3, sigma=1.0e-4,
                      rho=4.0e-4, lambda_rel=4.0e-2)
PM_CFG = FilterConfig(kind="perona_malik", stop_time=1.2e-3, sigma=1.0e-4,
                      lambda_rel=0.2)
CE_CFG = FilterConfig(kind="coherence", stop_time=1.2e-3, sigma=1.0e-4,
                      rho=4.0e-4, alpha=1.0e-3, b_rel=1.0e-3)


def _report(capsys, label, ok, detail):
    with capsys.disabled():
        print(f"\nacceptance {label}: {'PASS' if ok else 'FAIL'} ({detail})",
              flush=True)


def _tensor_dot_normal(G, n):
    """Rows of the symmetric (N, 6) tensor applied to unit vectors n."""
    xx, xy, xz, yy, yz, zz = (G[:, i] for i in range(6))
    out = np.stack([
        xx * n[:, 0] + xy * n[:, 1] + xz * n[:, 2],
        xy * n[:, 0] + yy * n[:, 1] + yz * n[:, 2],
        xz * n[:, 0] + yz * n[:, 1] + zz * n[:, 2],
    ], axis=1)
    return np.linalg.norm(out, axis=1)


@pytest.fixture(scope="module")
def tiny_fine_ws():
    """Small sphere banded at the fine production spacing.

    Step counts depend only on (stop_time, tau_factor, h), so a small
    surface exercises the real filter loop at h=0.0125 in seconds where
    the full-size surfaces would take minutes.
    """
    box = ((-0.4, -0.4, -0.4), (0.4, 0.4, 0.4))
    return sd.Workspace(sd.Sphere(0.15), H_FINE, box=box)


@pytest.fixture(scope="module")
def denoise_run():
    """Shared torus denoising run for checks 7 and 8.

    h=0.025 keeps the run near a minute; the fine-grid variant of the
    same setup passes with a wider margin but takes about ten minutes.
    """
    box = ((-1.6, -1.6, -1.6), (1.6, 1.6, 1.6))
    ws = sd.Workspace(sd.Torus(1.0, 0.4), 0.025, box=box)
    clean = sd.map_texture(ws, stripes((512, 512), count=16, axis=1))
    palette = np.array([0.15, 0.85, 0.3, 0.5, 0.7])
    noisy = add_replacement_noise(clean, 0.3, palette, seed=42)
    t0 = time.perf_counter()
    ee = run_anisotropic(noisy, EE_CFG, ws, collect_diagnostics=True)
    pm = run_perona_malik(noisy, PM_CFG, ws)
    return {
        "clean": clean, "noisy": noisy, "ee": ee, "pm": pm,
        "seconds": time.perf_counter() - t0,
    }


def test_01_iteration_counts(tiny_fine_ws, capsys):
    ws = tiny_fine_ws
    u0 = sd.map_texture(ws, stripes((256, 256), count=8))
    res_a = run_anisotropic(u0, EE_CFG, ws)
    cfg_b = FilterConfig(kind="edge", stop_time=5.9e-4, sigma=1.0e-4,
                         rho=4.0e-4, lambda_rel=4.0e-2)
    res_b = run_anisotropic(u0, cfg_b, ws)
    tau_nom = TAU_FACTOR * H_FINE**2
    n_a, _ = filter_step_count(1.2e-3, tau_nom, H_FINE)
    n_b, _ = filter_step_count(5.9e-4, tau_nom, H_FINE)
    ok = (res_a.steps, res_b.steps, n_a, n_b) == (52, 25, 52, 25)
    _report(capsys, "1 iteration counts", ok,
            f"T=1.2e-3 ran {res_a.steps} steps, T=5.9e-4 ran {res_b.steps}; "
            f"expected exactly 52 and 25 at h={H_FINE}")
    assert res_a.steps == 52 and n_a == 52
    assert res_b.steps == 25 and n_b == 25


def test_02_parameter_transfer(capsys):
    L = 255.0 / np.sqrt(2.0 * np.pi)
    sig, rho, stop = pixel_to_surface_parameters(0.5, 4.0, 20.0, L)
    ok = (1.1e-5 <= sig <= 1.3e-5 and 7.5e-4 <= rho <= 7.9e-4
          and 1.8e-3 <= stop <= 2.0e-3)
    _report(capsys, "2 parameter transfer", ok,
            f"sigma={sig:.3e} in [1.1e-5, 1.3e-5], rho={rho:.3e} in "
            f"[7.5e-4, 7.9e-4], T={stop:.3e} in [1.8e-3, 2.0e-3]")
    assert 1.1e-5 <= sig <= 1.3e-5
    assert 7.5e-4 <= rho <= 7.9e-4
    assert 1.8e-3 <= stop <= 2.0e-3


def test_03_heat_solve_oracle(capsys):
    stop = 0.05
    sphere = sd.Sphere(1.0)
    samples = on_surface_samples(sphere, 4000, seed=5)
    exact = np.exp(-2.0 * stop) * samples[:, 2]
    t0 = time.perf_counter()
    errs = {}
    for h in (0.05, 0.025):
        ws = sd.Workspace(sphere, h)
        res = sd.run_gaussian(ws.cp_points[:, 2], stop, ws)
        got = interpolate_at(ws.band, res.values, samples)
        errs[h] = np.max(np.abs(got - exact)) / np.max(np.abs(exact))
    order = np.log2(errs[0.05] / errs[0.025])
    elapsed = time.perf_counter() - t0
    ok = errs[0.05] < 0.02 and order >= 1.5
    _report(capsys, "3 heat solve oracle", ok,
            f"rel err {errs[0.05]:.2e} at h=0.05 (tol 2e-2), order "
            f"{order:.2f} (tol >= 1.5), {elapsed:.0f}s")
    assert errs[0.05] < 0.02
    assert order >= 1.5


def test_04_tensor_tangentiality(sphere_ws, torus_ws, capsys):
    worst = 0.0
    for ws in (sphere_ws, torus_ws):
        u = sd.map_texture(ws, stripes((256, 256), count=10))
        eig = structure_eigen(u, 2.0e-4, 8.0e-4, ws)
        cmax = float(eig.coherence.max())
        for mode, kw in (("edge", {"lam": 0.04 * cmax}),
                         ("coherence", {"alpha": 1e-3, "B": 1e-3 * cmax})):
            G = tensor_from_eigen(eig, mode, ws, **kw)
            worst = max(worst, float(_tensor_dot_normal(G, ws.normals).max()))
    ok = worst < 1e-8
    _report(capsys, "4 tensor tangentiality", ok,
            f"max |G n| = {worst:.2e} over sphere and torus, both modes "
            f"(tol 1e-8)")
    assert worst < 1e-8


def test_05_stencil_identities(sphere_ws, capsys):
    ops = sphere_ws.ops
    rng = np.random.default_rng(12345)
    n = sphere_ws.band.n_points
    v = rng.uniform(-1.0, 1.0, n)
    eye = np.zeros((n, 6))
    eye[:, 0] = eye[:, 3] = eye[:, 5] = 1.0  # xx, yy, zz
    lap = ops.apply_laplacian(v)
    d1 = np.max(np.abs(anisotropic_divergence(eye, v, ops) - lap))
    r1 = d1 / max(1.0, np.max(np.abs(lap)))
    g = rng.uniform(0.2, 1.2, n)
    iso = isotropic_divergence(g, v, ops)
    d2 = np.max(np.abs(anisotropic_divergence(eye * g[:, None], v, ops) - iso))
    r2 = d2 / max(1.0, np.max(np.abs(iso)))
    ok = r1 < 1e-12 and r2 < 1e-12
    _report(capsys, "5 stencil identities", ok,
            f"G=I vs Laplacian {r1:.2e}, G=gI vs isotropic {r2:.2e} "
            f"(tol 1e-12 relative)")
    assert r1 < 1e-12
    assert r2 < 1e-12


def test_06_eigen_oracle(plane_ws, capsys):
    rng = np.random.default_rng(999)
    a, b, c = rng.normal(0.0, 2.0, (3, 10_000))
    eig = eigen_sym2(a, b, c)
    w = eig.w
    wp = np.stack([-w[:, 1], w[:, 0]], axis=1)
    ra = eig.mu2 * w[:, 0] ** 2 + eig.mu1 * wp[:, 0] ** 2
    rb = eig.mu2 * w[:, 0] * w[:, 1] + eig.mu1 * wp[:, 0] * wp[:, 1]
    rc = eig.mu2 * w[:, 1] ** 2 + eig.mu1 * wp[:, 1] ** 2
    recon = max(np.max(np.abs(ra - a)), np.max(np.abs(rb - b)),
                np.max(np.abs(rc - c)))
    ordered = bool(np.all(eig.mu1 >= eig.mu2))

    # stripes sin(kx) on the plane: the edge vector must run along y
    ws = plane_ws
    u = np.sin(2.0 * np.pi * ws.cp_points[:, 0])
    seig = structure_eigen(u, 1.0e-4, 4.0e-4, ws)
    w3 = seig.w[:, 0:1] * ws.q1 + seig.w[:, 1:2] * ws.q2
    interior = (np.abs(ws.cp_points[:, 0]) < 0.5) & (np.abs(ws.cp_points[:, 1]) < 0.5)
    cosang = np.clip(np.abs(w3[interior, 1]), 0.0, 1.0)
    angle = float(np.degrees(np.arccos(cosang)).max())
    ok = recon < 1e-12 and ordered and angle < 1.0
    _report(capsys, "6 eigen oracle", ok,
            f"recon err {recon:.2e} on 10^4 matrices (tol 1e-12), mu1>=mu2 "
            f"{ordered}, stripe angle {angle:.3f} deg (tol 1 deg)")
    assert recon < 1e-12
    assert ordered
    assert angle < 1.0


def test_07_denoising_property(denoise_run, capsys):
    r = denoise_run
    p_noisy = sd.psnr(r["noisy"], r["clean"])
    p_ee = sd.psnr(r["ee"].values, r["clean"])
    p_pm = sd.psnr(r["pm"].values, r["clean"])
    ok = p_ee > p_noisy + 3.0 and p_ee > p_pm
    _report(capsys, "7 denoising property", ok,
            f"PSNR noisy {p_noisy:.2f} dB, edge-enhancing {p_ee:.2f} dB "
            f"(needs > noisy+3), Perona-Malik {p_pm:.2f} dB (needs < EE); "
            f"{r['ee'].steps} steps, {r['seconds']:.0f}s")
    assert p_ee > p_noisy + 3.0
    assert p_ee > p_pm


def test_08_conservation_and_bounds(denoise_run, capsys):
    diag = denoise_run["ee"].diagnostics
    means = np.array([row["band_mean"] for row in diag])
    drift = float(np.max(np.abs(means - means[0])) / abs(means[0]))
    lo = min(row["min"] for row in diag)
    hi = max(row["max"] for row in diag)
    ok = drift < 0.02 and lo >= -0.02 and hi <= 1.02
    _report(capsys, "8 conservation and bounds", ok,
            f"band-mean drift {drift:.2%} (tol 2%), value range "
            f"[{lo:.4f}, {hi:.4f}] within [-0.02, 1.02]")
    assert drift < 0.02
    assert lo >= -0.02
    assert hi <= 1.02


def _step0_kappas(u, cfg, ws):
    from surfdiff.filters import adapt_parameters

    eig = structure_eigen(u, cfg.sigma, cfg.rho, ws)
    ad = adapt_parameters(u, cfg, ws, eig=eig)
    mode = "edge" if cfg.kind == "edge" else "coherence"
    _, info = tensor_from_eigen(eig, mode, ws, lam=ad.lam, alpha=ad.alpha,
                                B=ad.B, coherence_floor=ad.coherence_floor,
                                return_info=True)
    return np.stack([info.k1, info.k2])


def test_09_affine_invariance(torus_ws, capsys):
    ws = torus_ws
    u0 = sd.map_texture(ws, stripes((256, 256), count=12, axis=1))
    a, b = 0.2, 0.5
    v0 = a + b * u0
    worst_kappa = 0.0
    worst_update = 0.0
    for base in (EE_CFG, CE_CFG):
        # one nominal step; relative parameters re-adapt per field
        cfg = FilterConfig(kind=base.kind, stop_time=ws.tau_nominal,
                           sigma=base.sigma, rho=base.rho,
                           lambda_rel=base.lambda_rel, alpha=base.alpha,
                           b_rel=base.b_rel)
        ru = run_anisotropic(u0, cfg, ws)
        rv = run_anisotropic(v0, cfg, ws)
        ku = _step0_kappas(u0, cfg, ws)
        kv = _step0_kappas(v0, cfg, ws)
        worst_kappa = max(worst_kappa, float(np.max(np.abs(ku - kv))))
        du = ru.values - u0
        dv = rv.values - v0
        worst_update = max(worst_update, float(np.max(np.abs(dv - b * du))))
    ok = worst_kappa < 1e-10 and worst_update < 1e-10
    _report(capsys, "9 affine invariance", ok,
            f"u -> {a} + {b} u: kappa mismatch {worst_kappa:.2e}, first-step "
            f"update off by {worst_update:.2e} (tol 1e-10, both modes)")
    assert worst_kappa < 1e-10
    assert worst_update < 1e-10


def test_10_coherence_enhancement(capsys):
    t0 = time.perf_counter()
    ws = sd.Workspace(sd.Sphere(1.0), H_FINE)
    img = interrupted_stripes((1024, 1024), count=10, gap_density=0.25,
                              gap_cells=13, waviness=0.15, wave_cells=17,
                              cross=0.40, cross_count=25, seed=0)
    u0 = sd.map_texture(ws, img)

    def mean_coherence(u):
        eig = structure_eigen(u, CE_CFG.sigma, CE_CFG.rho, ws)
        return float(ws.band_mean(eig.coherence))

    c0 = mean_coherence(u0)
    res = run_anisotropic(u0, CE_CFG, ws)
    c1 = mean_coherence(res.values)
    elapsed = time.perf_counter() - t0
    ok = c1 > c0 and res.steps == 52
    _report(capsys, "10 coherence enhancement", ok,
            f"band-mean coherence {c0:.4f} -> {c1:.4f} after {res.steps} "
            f"steps (needs increase), {elapsed:.0f}s")
    assert res.steps == 52
    assert c1 > c0
