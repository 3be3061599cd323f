"""Closed-form gSQG Biot-Savart kernels and their smooth truncations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import (
    GridSpec,
    SpectralField,
    VectorField,
    besov_norm,
    bump_profile,
    from_physical,
    radial_taper,
)


def c_s_constant(s: float) -> float:
    """Normalisation c_s = (1-s) Gamma(1-s) / (2^(2s-1) pi Gamma(s)).

    At s = 1 the continuous limit 1/(2 pi) is returned; (1-s)Gamma(1-s) is
    evaluated as Gamma(2-s) so the formula stays finite as s -> 1.
    """
    if not 0 < s <= 1:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    return math.gamma(2.0 - s) / (2.0 ** (2 * s - 1) * math.pi * math.gamma(s))


@dataclass(frozen=True)
class KernelParams:
    s: float
    eps: float = 0.0

    def __post_init__(self):
        if not 0 < self.s <= 1:
            raise ValueError(f"s must lie in (0, 1], got {self.s}")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")

    @property
    def c_s(self) -> float:
        return c_s_constant(self.s)


def cutoff(x, eps: float = 1.0):
    """chi_eps(x) = chi(x / eps); ``x`` has trailing axis of length 2."""
    x = np.asarray(x, dtype=float)
    return bump_profile(np.hypot(x[..., 0], x[..., 1]) / eps)


def eval_K_s(x, params: KernelParams) -> np.ndarray:
    """K_s(x) = c_s x^perp / |x|^(4-2s); rejects x = 0."""
    x = np.asarray(x, dtype=float)
    r = np.hypot(x[..., 0], x[..., 1])
    if np.any(r == 0):
        raise ValueError("K_s is singular at x = 0")
    scale = params.c_s / r ** (4.0 - 2.0 * params.s)
    return np.stack([-x[..., 1] * scale, x[..., 0] * scale], axis=-1)


def eval_K_s_eps(x, params: KernelParams) -> np.ndarray:
    """(1 - chi_eps) K_s, returning 0 wherever chi_eps = 1 (including x = 0)."""
    if params.eps <= 0:
        raise ValueError("eval_K_s_eps needs eps > 0")
    x = np.asarray(x, dtype=float)
    r = np.hypot(x[..., 0], x[..., 1])
    outside = r >= params.eps
    core = r <= params.eps / 2
    safe = np.where(core, 1.0, r)
    scale = params.c_s / safe ** (4.0 - 2.0 * params.s)
    # no multiplication by (1 - chi) where it is exactly 1: keeps |x| >= eps bit-exact
    weight = np.where(outside, 1.0, np.where(core, 0.0, 1.0 - bump_profile(r / params.eps)))
    scale = np.where(outside, scale, scale * weight)
    return np.stack([-x[..., 1] * scale, x[..., 0] * scale], axis=-1)


def ball_mean_zero_check(params: KernelParams, r: float, order: int = 32,
                         center=(0.0, 0.0)) -> np.ndarray:
    """Integrate K_{s,eps} over B(center, r) with polar Gauss-Legendre quadrature.

    Angular nodes come in antipodal pairs, so for a centred ball the
    contributions cancel term by term.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    rad = 0.5 * r * (nodes + 1.0)
    wr = 0.5 * r * weights * rad
    nphi = 2 * order
    phi = np.pi * np.arange(nphi) / nphi  # half circle; the other half is -x
    wphi = np.pi / nphi
    R, P = np.meshgrid(rad, phi, indexing="ij")
    W = wr[:, None] * wphi
    pts = np.stack([R * np.cos(P), R * np.sin(P)], axis=-1)
    c = np.asarray(center, dtype=float)
    pair = eval_K_s_eps(c + pts, params) + eval_K_s_eps(c - pts, params)
    return np.einsum("ij,ijk->k", W, pair)


def rasterize_kernel(grid: GridSpec, params: KernelParams, center=(0.0, 0.0),
                     taper: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Sample K_{s,eps}(x - center) (or K_s with 0 at the origin if eps = 0).

    Uses the nearest periodic image only.  With ``taper`` the kernel is
    rolled off radially between 3L/8 and L/2; the taper is radial, so the
    divergence-free structure survives.
    """
    dx, dy = grid.displacement(center)
    x = np.stack([dx, dy], axis=-1)
    if params.eps > 0:
        k = eval_K_s_eps(x, params)
    else:
        r = np.hypot(dx, dy)
        k = np.zeros_like(x)
        nz = r > 0
        k[nz] = eval_K_s(x[nz], params)
    if taper:
        L = grid.side_length
        w = radial_taper(np.hypot(dx, dy), 3 * L / 8, L / 2)
        k = k * w[..., None]
    return k[..., 0], k[..., 1]


def convolve_kernel(theta: SpectralField, params: KernelParams) -> VectorField:
    """Velocity K_{s,eps} * theta by FFT convolution with the rasterized kernel."""
    if params.eps <= 0 and params.s <= 0.5:
        raise ValueError("direct convolution needs eps > 0 or s > 1/2")
    g = theta.grid
    kx, ky = rasterize_kernel(g, params)
    area = g.side_length**2
    cx = from_physical(kx, g).coefficients * theta.coefficients * area
    cy = from_physical(ky, g).coefficients * theta.coefficients * area
    return VectorField(theta.with_coefficients(cx), theta.with_coefficients(cy))


def kernel_difference_field(grid: GridSpec, params: KernelParams) -> tuple[np.ndarray, np.ndarray]:
    """chi_eps K_s = K_s - K_{s,eps} on the grid, 0 at the origin."""
    dx, dy = grid.displacement((0.0, 0.0))
    x = np.stack([dx, dy], axis=-1)
    r = np.hypot(dx, dy)
    out = np.zeros_like(x)
    inside = (r > 0) & (r < params.eps)
    full = KernelParams(params.s, 0.0)
    out[inside] = eval_K_s(x[inside], full) * bump_profile(r[inside] / params.eps)[:, None]
    return out[..., 0], out[..., 1]


def kernel_convergence_rate(s: float, sigma: float, eps_ladder, grid: GridSpec):
    """Fit the log-log slope of ||K_s - K_{s,eps}||_{hom. B^sigma_{1,inf}} vs eps.

    Returns ``(slope, norms)``.  The expected slope is (2s - 1) - sigma.
    """
    eps_ladder = np.asarray(sorted(eps_ladder), dtype=float)
    if eps_ladder.size < 3:
        raise ValueError("convergence ladder needs at least 3 points")
    norms = []
    for eps in eps_ladder:
        dx, dy = kernel_difference_field(grid, KernelParams(s, float(eps)))
        nx = besov_norm(from_physical(dx, grid), sigma, 1, math.inf, homogeneous=True)
        ny = besov_norm(from_physical(dy, grid), sigma, 1, math.inf, homogeneous=True)
        norms.append(max(nx, ny))
    norms = np.array(norms)
    slope = float(np.polyfit(np.log(eps_ladder), np.log(norms), 1)[0])
    return slope, norms
