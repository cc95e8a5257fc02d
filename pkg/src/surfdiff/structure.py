"""Structure tensors and diffusion tensors on banded grids.

The pipeline follows the usual image-analysis recipe, with every Gaussian
convolution replaced by a short run of the intrinsic heat equation:

1. pre-smooth the image to scale sigma,
2. form the outer product of the intrinsic gradient (averaged over color
   channels, which commutes with the linear smoothing),
3. smooth the six tensor components to scale rho,
4. express the tensor in the tangent frame, eigendecompose the resulting
   symmetric 2x2 matrix in closed form,
5. map eigenvalues through a mode-dependent diffusivity profile and
   rebuild a tangential 3x3 tensor from the frame vectors.

All fields handled here are closest point extensions; pointwise functions
of extensions are again extensions, so only the gradient components need
an explicit extension pass.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import XX, XY, XZ, YY, YZ, ZZ, axis_central_differences


def heat_step_count(t, tau_nominal):
    """Steps for an internal smoothing solve: round up, stretch none.

    The step is shortened to t/n so the solve ends exactly at t.
    """
    if t < 0:
        raise ValueError("diffusion time must be non-negative")
    if t == 0.0:
        return 0
    return int(np.ceil(t / tau_nominal - 1e-12))


def heat_smooth(v, t, ws):
    """Diffuse v on the surface for time t (heat-kernel smoothing).

    Equivalent to convolving with a Gaussian of standard deviation
    sqrt(2 t) in flat geometry. t = 0 returns the input unchanged.
    """
    n = heat_step_count(t, ws.tau_nominal)
    if n == 0:
        return np.asarray(v, dtype=np.float64)
    return ws.ops.heat_steps(v, n, t / n)


def surface_gradient(v, ws):
    """Intrinsic gradient of an extended field.

    Central differences of the extension equal the full spatial gradient,
    which for an extension is automatically tangential on the surface;
    each component is then extended once so the result is usable off the
    surface as well. Shape (N, 3) for scalar v, (N, 3, C) for channels.
    """
    g = axis_central_differences(v, ws.ops)
    if g.ndim == 2:
        return ws.ops.apply_extension(g)
    n, _, c = g.shape
    flat = ws.ops.apply_extension(g.reshape(n, 3 * c))
    return flat.reshape(n, 3, c)


def structure_tensor(v, sigma, rho, ws):
    """Smoothed gradient outer product, shape (N, 6).

    Multi-channel inputs average the per-channel tensors before the rho
    smoothing; by linearity this equals smoothing each channel's tensor
    and averaging afterwards.
    """
    v = np.asarray(v, dtype=np.float64)
    us = heat_smooth(v, sigma, ws)
    g = surface_gradient(us, ws)
    if g.ndim == 2:
        g = g[:, :, None]
    n = g.shape[0]
    J = np.empty((n, 6))
    pairs = ((XX, 0, 0), (XY, 0, 1), (XZ, 0, 2), (YY, 1, 1), (YZ, 1, 2), (ZZ, 2, 2))
    for comp, i, j in pairs:
        J[:, comp] = (g[:, i, :] * g[:, j, :]).mean(axis=1)
    if rho > 0:
        J = heat_smooth(J, rho, ws)
    return J


def contract_to_tangent(J, q1, q2):
    """Coefficients (a, b, c) of the tensor restricted to the tangent frame."""
    def matvec(q):
        return np.stack(
            [
                J[:, XX] * q[:, 0] + J[:, XY] * q[:, 1] + J[:, XZ] * q[:, 2],
                J[:, XY] * q[:, 0] + J[:, YY] * q[:, 1] + J[:, YZ] * q[:, 2],
                J[:, XZ] * q[:, 0] + J[:, YZ] * q[:, 1] + J[:, ZZ] * q[:, 2],
            ],
            axis=1,
        )
    Jq1 = matvec(q1)
    Jq2 = matvec(q2)
    a = (q1 * Jq1).sum(axis=1)
    b = (q2 * Jq1).sum(axis=1)
    c = (q2 * Jq2).sum(axis=1)
    return a, b, c


@dataclass
class Eigen2:
    """Closed-form spectral data of symmetric 2x2 matrices [[a, b], [b, c]].

    mu1 >= mu2 always; w is the unit eigenvector of mu2 (the coherence
    direction for structure tensors) and coherence = mu1 - mu2.
    """

    mu1: np.ndarray
    mu2: np.ndarray
    w: np.ndarray
    coherence: np.ndarray

    @property
    def w_perp(self):
        return np.stack([-self.w[:, 1], self.w[:, 0]], axis=1)


def eigen_sym2(a, b, c):
    """Eigen decomposition of [[a, b], [b, c]] per point, branch-stable.

    The eigenvector of the smaller eigenvalue is taken from whichever of
    the two analytic candidates has the larger norm, which avoids
    cancellation when b -> 0; exactly isotropic points fall back to (1, 0).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    half_tr = 0.5 * (a + c)
    d = 0.5 * np.sqrt((a - c) ** 2 + 4.0 * b * b)
    mu1 = half_tr + d
    mu2 = half_tr - d
    cand1 = np.stack([b, mu2 - a], axis=1)
    cand2 = np.stack([mu2 - c, b], axis=1)
    n1 = (cand1 * cand1).sum(axis=1)
    n2 = (cand2 * cand2).sum(axis=1)
    w = np.where((n1 >= n2)[:, None], cand1, cand2)
    norm = np.sqrt(np.maximum(n1, n2))
    iso = norm < 1e-300
    w[iso, 0] = 1.0
    w[iso, 1] = 0.0
    norm = np.where(iso, 1.0, norm)
    w = w / norm[:, None]
    return Eigen2(mu1=mu1, mu2=mu2, w=w, coherence=mu1 - mu2)


# -- diffusivity profiles -------------------------------------------------

def diffusivity(s2, lam):
    """Rational edge-stopping function 1 / (1 + s2 / lam**2)."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    return 1.0 / (1.0 + s2 / (lam * lam))


def kappa_edge_enhancing(mu1, mu2, lam, coherence_floor=0.0):
    """Edge-enhancing eigenvalue map: damp across edges, keep along them.

    Below the coherence floor the tensor is forced isotropic (kappa1 = 1),
    which makes the arbitrary eigenvector at such points irrelevant.
    """
    coh = mu1 - mu2
    k1 = diffusivity(coh * coh, lam)
    k1 = np.where(coh <= coherence_floor, 1.0, k1)
    return k1, np.ones_like(k1)


def kappa_coherence_enhancing(mu1, mu2, alpha, B):
    """Coherence-enhancing eigenvalue map.

    kappa1 stays at the small baseline alpha; kappa2 rises from alpha to 1
    as the coherence grows past B. Zero coherence yields exactly alpha.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if B <= 0:
        raise ValueError("B must be positive")
    coh = mu1 - mu2
    boost = np.zeros_like(coh)
    pos = coh > 0
    with np.errstate(divide="ignore", over="ignore"):
        boost[pos] = np.exp(-(B * B) / (coh[pos] * coh[pos]))
    k1 = np.full_like(coh, alpha)
    return k1, alpha + (1.0 - alpha) * boost


def assemble_tangential_tensor(k1, k2, w, q1, q2):
    """3d tensor kappa1 * e1 e1^T + kappa2 * e2 e2^T from frame coordinates.

    e2 = w[0] q1 + w[1] q2 (coherence direction), e1 its in-plane normal.
    Both directions are tangent, so the tensor annihilates the normal by
    construction. Returns components (N, 6).
    """
    e2 = w[:, 0:1] * q1 + w[:, 1:2] * q2
    e1 = -w[:, 1:2] * q1 + w[:, 0:1] * q2
    G = np.empty((len(k1), 6))
    pairs = ((XX, 0, 0), (XY, 0, 1), (XZ, 0, 2), (YY, 1, 1), (YZ, 1, 2), (ZZ, 2, 2))
    for comp, i, j in pairs:
        G[:, comp] = k1 * e1[:, i] * e1[:, j] + k2 * e2[:, i] * e2[:, j]
    return G


@dataclass
class TensorInfo:
    """Diagnostics from one diffusion tensor build."""

    coherence: np.ndarray
    mu1: np.ndarray
    mu2: np.ndarray
    k1: np.ndarray
    k2: np.ndarray


def structure_eigen(v, sigma, rho, ws):
    """Spectral data of the structure tensor field in the tangent frame.

    Eigenvalues are clamped to be non-negative, discarding the tiny
    negatives that round-off can produce.
    """
    J = structure_tensor(v, sigma, rho, ws)
    a, b, c = contract_to_tangent(J, ws.q1, ws.q2)
    eig = eigen_sym2(a, b, c)
    mu1 = np.maximum(eig.mu1, 0.0)
    mu2 = np.clip(eig.mu2, 0.0, mu1)
    return Eigen2(mu1=mu1, mu2=mu2, w=eig.w, coherence=mu1 - mu2)


def tensor_from_eigen(eig, mode, ws, lam=None, alpha=None, B=None,
                      coherence_floor=0.0, return_info=False):
    """Diffusion tensor from precomputed structure tensor eigendata."""
    if mode == "edge":
        if lam is None:
            raise ValueError("edge mode needs lam")
        k1, k2 = kappa_edge_enhancing(eig.mu1, eig.mu2, lam, coherence_floor)
    elif mode == "coherence":
        if alpha is None or B is None:
            raise ValueError("coherence mode needs alpha and B")
        k1, k2 = kappa_coherence_enhancing(eig.mu1, eig.mu2, alpha, B)
    else:
        raise ValueError(f"unknown tensor mode {mode!r}")
    G = assemble_tangential_tensor(k1, k2, eig.w, ws.q1, ws.q2)
    if return_info:
        return G, TensorInfo(coherence=eig.coherence, mu1=eig.mu1, mu2=eig.mu2,
                             k1=k1, k2=k2)
    return G


def build_diffusion_tensor(v, mode, sigma, rho, ws, lam=None, alpha=None,
                           B=None, coherence_floor=0.0, return_info=False):
    """Diffusion tensor field G[v] for the anisotropic filters.

    mode is 'edge' or 'coherence'; lam / (alpha, B) are the absolute
    diffusivity parameters (see filters.adapt_parameters for the relative
    forms).
    """
    eig = structure_eigen(v, sigma, rho, ws)
    return tensor_from_eigen(eig, mode, ws, lam=lam, alpha=alpha, B=B,
                             coherence_floor=coherence_floor,
                             return_info=return_info)
