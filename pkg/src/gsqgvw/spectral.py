"""Fourier infrastructure on the periodic square [0, L)^2.

Fields are stored as Fourier-series coefficients ``c_k`` such that

    f(x) = sum_k c_k exp(i xi_k . x),    xi_k = 2 pi k / L,

i.e. ``c = fft2(f_grid) / n**2``.  Arrays are indexed ``[ix, iy]``.
All operations are pure; fields are immutable once built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator

import numpy as np


def smoothstep(t):
    """C-infinity monotone ramp: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def bump_profile(r):
    """Radial profile: 1 on r <= 1/2, 0 on r >= 1, C-infinity in between.

    Shared by the Littlewood-Paley cut-off and the kernel cut-off.
    """
    r = np.asarray(r, dtype=float)
    return 1.0 - smoothstep(2.0 * r - 1.0)


def radial_taper(r, inner, outer):
    """1 for r <= inner, 0 for r >= outer, smooth ramp between."""
    return 1.0 - smoothstep((np.asarray(r, dtype=float) - inner) / (outer - inner))


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid.

    Parameters
    ----------
    side_length : float
        Period L of the torus.
    n : int
        Points per axis (power of two).
    dealias_fraction : float
        Fraction of the index range kept by the dealiasing rule.
    """

    side_length: float
    n: int
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.n <= 0 or self.n & (self.n - 1):
            raise ValueError(f"n must be a positive power of two, got {self.n}")
        if not self.side_length > 0:
            raise ValueError(f"side_length must be positive, got {self.side_length}")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @property
    def h(self) -> float:
        return self.side_length / self.n

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @cached_property
    def index(self) -> np.ndarray:
        """Integer wavenumbers k in [-n/2, n/2) in FFT order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)

    @cached_property
    def k1d(self) -> np.ndarray:
        return 2.0 * np.pi / self.side_length * self.index

    @cached_property
    def kx(self) -> np.ndarray:
        return np.broadcast_to(self.k1d[:, None], (self.n, self.n))

    @cached_property
    def ky(self) -> np.ndarray:
        return np.broadcast_to(self.k1d[None, :], (self.n, self.n))

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.hypot(self.kx, self.ky)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """False on the unpaired Nyquist row/column (no Hermitian partner)."""
        ok = self.index != -self.n // 2
        return ok[:, None] & ok[None, :]

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        kmax = self.dealias_fraction * self.n / 2.0
        ok = np.abs(self.index) < kmax
        return ok[:, None] & ok[None, :]

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.n) * self.h
        return np.meshgrid(x, x, indexing="ij")

    def displacement(self, center) -> tuple[np.ndarray, np.ndarray]:
        """Minimal-image displacement x - center, components in [-L/2, L/2)."""
        X, Y = self.coords
        L = self.side_length
        dx = (X - center[0] + L / 2) % L - L / 2
        dy = (Y - center[1] + L / 2) % L - L / 2
        return dx, dy

    def check_array(self, a: np.ndarray) -> None:
        if a.shape != (self.n, self.n):
            raise ValueError(f"array shape {a.shape} does not match grid ({self.n}, {self.n})")


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Real scalar field held as Fourier coefficients on ``grid``."""

    grid: GridSpec
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        self.grid.check_array(c)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralField":
        return cls(grid, np.zeros((grid.n, grid.n), dtype=complex))

    def with_coefficients(self, c: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, c)

    @property
    def mean(self) -> float:
        return float(self.coefficients[0, 0].real)

    def __add__(self, other):
        if isinstance(other, SpectralField):
            return self.with_coefficients(self.coefficients + other.coefficients)
        c = self.coefficients.copy()
        c[0, 0] += other
        return self.with_coefficients(c)

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            return self.with_coefficients(self.coefficients - other.coefficients)
        return self + (-other)

    def __mul__(self, scalar):
        return self.with_coefficients(self.coefficients * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def hermitian_defect(self) -> float:
        """Max |c(-k) - conj(c(k))| over all modes."""
        c = self.coefficients
        flipped = np.roll(np.flip(c, axis=(0, 1)), shift=1, axis=(0, 1))
        return float(np.max(np.abs(flipped - np.conj(c))))


@dataclass(frozen=True, eq=False)
class VectorField:
    x: SpectralField
    y: SpectralField

    @property
    def grid(self) -> GridSpec:
        return self.x.grid

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.x - other.x, self.y - other.y)

    def __mul__(self, scalar):
        return VectorField(self.x * scalar, self.y * scalar)

    __rmul__ = __mul__

    def divergence_coefficients(self) -> np.ndarray:
        g = self.grid
        return 1j * (g.kx * self.x.coefficients + g.ky * self.y.coefficients)

    def to_physical(self) -> tuple[np.ndarray, np.ndarray]:
        return to_physical(self.x), to_physical(self.y)


@dataclass(frozen=True)
class DyadicBlockSet:
    """Littlewood-Paley blocks; index -1 is the low-frequency block."""

    blocks: list[tuple[int, SpectralField]] = field(default_factory=list)

    def __iter__(self) -> Iterator[tuple[int, SpectralField]]:
        return iter(self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def block(self, j: int) -> SpectralField:
        for jj, f in self.blocks:
            if jj == j:
                return f
        raise KeyError(j)

    def reconstruct(self) -> SpectralField:
        total = sum(f.coefficients for _, f in self.blocks)
        return self.blocks[0][1].with_coefficients(total)


# ----------------------------------------------------------------------------
# transforms


def from_physical(array: np.ndarray, grid: GridSpec) -> SpectralField:
    a = np.asarray(array)
    grid.check_array(a)
    if np.iscomplexobj(a):
        raise ValueError("physical array must be real")
    return SpectralField(grid, np.fft.fft2(a) / grid.n**2)


def to_physical(f: SpectralField) -> np.ndarray:
    return np.fft.ifft2(f.coefficients * f.grid.n**2).real


def refine(f: SpectralField, factor: int) -> SpectralField:
    """The same trigonometric polynomial on a grid ``factor`` times finer.

    The unpaired Nyquist modes are dropped so the result stays real.
    """
    if factor < 1 or factor & (factor - 1):
        raise ValueError("refinement factor must be a power of two")
    g = f.grid
    fine = GridSpec(g.side_length, g.n * factor, g.dealias_fraction)
    c = np.zeros((fine.n, fine.n), dtype=complex)
    idx = np.where(g.index < 0, g.index + fine.n, g.index)
    c[np.ix_(idx, idx)] = f.coefficients * g.nyquist_mask
    return SpectralField(fine, c)


def dealias(f: SpectralField) -> SpectralField:
    return f.with_coefficients(f.coefficients * f.grid.dealias_mask)


def product(*fields: SpectralField) -> SpectralField:
    """Pointwise product evaluated on the grid, then dealiased."""
    out = to_physical(fields[0])
    for f in fields[1:]:
        out = out * to_physical(f)
    return dealias(from_physical(out, fields[0].grid))


def evaluate_at(f: SpectralField, points) -> np.ndarray:
    """Exact trigonometric (Fourier-sum) evaluation at arbitrary points.

    Only the index window containing nonzero coefficients is summed.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    g = f.grid
    c = f.coefficients
    nz = np.nonzero(np.abs(c) > 0)
    if nz[0].size == 0:
        return np.zeros(len(pts))
    kmax = int(max(np.max(np.abs(g.index[nz[0]])), np.max(np.abs(g.index[nz[1]]))))
    sel = np.abs(g.index) <= kmax
    k = g.k1d[sel]
    sub = c[np.ix_(sel, sel)]
    ex = np.exp(1j * np.outer(k, pts[:, 0]))
    ey = np.exp(1j * np.outer(k, pts[:, 1]))
    return np.einsum("kp,kp->p", ex, sub @ ey).real


def gradient(f: SpectralField) -> VectorField:
    g = f.grid
    c = f.coefficients * g.nyquist_mask
    return VectorField(f.with_coefficients(1j * g.kx * c), f.with_coefficients(1j * g.ky * c))


def perp_gradient(f: SpectralField) -> VectorField:
    """grad-perp = (-d_y, d_x)."""
    gr = gradient(f)
    return VectorField(-gr.y, gr.x)


def divergence(u: VectorField) -> SpectralField:
    g = u.grid
    return u.x.with_coefficients(u.divergence_coefficients() * g.nyquist_mask)


# ----------------------------------------------------------------------------
# multipliers


def fractional_laplacian(f: SpectralField, power: float) -> SpectralField:
    """Apply (-Delta)^power, symbol |xi|^(2 power); zero mode -> 0 if power < 0."""
    if power == 0:
        return f
    return f.with_coefficients(f.coefficients * _kpow(f.grid, power))


def _kpow(grid: GridSpec, power: float) -> np.ndarray:
    """|xi|^(2 power) with the zero mode mapped to 0."""
    k2 = grid.kmag**2
    return np.where(k2 > 0, np.where(k2 > 0, k2, 1.0) ** power, 0.0)


def biot_savart(theta: SpectralField, s: float) -> VectorField:
    """Velocity v = -grad-perp (-Delta)^(-s) theta, exactly divergence-free.

    Symbol: v_hat = -i xi^perp |xi|^(-2s) theta_hat with xi^perp = (-xi_y, xi_x).
    """
    if not 0 < s < 1:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    g = theta.grid
    w = _kpow(g, -s) * g.nyquist_mask
    c = theta.coefficients * w
    return VectorField(
        theta.with_coefficients(-1j * (-g.ky) * c),
        theta.with_coefficients(-1j * g.kx * c),
    )


def spectral_cutoff(f: SpectralField, N: float) -> SpectralField:
    """E_N: zero every mode with |xi| > N."""
    if not N > 0:
        raise ValueError("cutoff N must be positive")
    if math.isinf(N):
        return f
    return f.with_coefficients(f.coefficients * (f.grid.kmag <= N))


# ----------------------------------------------------------------------------
# Littlewood-Paley


def lp_phi(xi):
    return bump_profile(xi)


def lp_psi(xi):
    return lp_phi(np.asarray(xi) / 2.0) - lp_phi(xi)


def block_range(grid: GridSpec, homogeneous: bool = False) -> range:
    """Block indices needed to reconstruct any field on ``grid``.

    Top: smallest J with phi(|xi|/2^(J+1)) = 1 on every lattice point.
    Bottom (homogeneous): largest j with psi(xi/2^j) = 0 below the gravest mode.
    """
    kmax = float(np.max(grid.kmag))
    jtop = max(0, math.ceil(math.log2(2.0 * kmax)) - 1)
    if not homogeneous:
        return range(-1, jtop + 1)
    kmin = 2.0 * np.pi / grid.side_length
    jlow = math.floor(math.log2(kmin))
    return range(jlow, jtop + 1)


def dyadic_decompose(f: SpectralField, homogeneous: bool = False) -> DyadicBlockSet:
    g = f.grid
    blocks = []
    for j in block_range(g, homogeneous):
        if j == -1 and not homogeneous:
            sym = lp_phi(g.kmag)
        else:
            sym = lp_psi(g.kmag / 2.0**j)
        blocks.append((j, f.with_coefficients(f.coefficients * sym)))
    return DyadicBlockSet(blocks)


def low_pass(f: SpectralField, j: int) -> SpectralField:
    """S_j f: symbol phi(xi / 2^j)."""
    return f.with_coefficients(f.coefficients * lp_phi(f.grid.kmag / 2.0**j))


def high_pass(f: SpectralField, j: int) -> SpectralField:
    """H_j f = (1 - S_j) f."""
    return f.with_coefficients(f.coefficients * (1.0 - lp_phi(f.grid.kmag / 2.0**j)))


# ----------------------------------------------------------------------------
# norms


def lp_norm(array: np.ndarray, p: float, grid: GridSpec) -> float:
    """Grid-quadrature L^p norm of a physical-space array."""
    a = np.abs(array)
    if math.isinf(p):
        return float(a.max())
    return float((np.sum(a**p) * grid.cell_area) ** (1.0 / p))


def sobolev_norm(f: SpectralField, k: float) -> float:
    """Inhomogeneous H^k norm; equals the grid L^2 norm at k = 0."""
    g = f.grid
    w = (1.0 + g.kmag**2) ** k
    return float(g.side_length * np.sqrt(np.sum(w * np.abs(f.coefficients) ** 2)))


def homogeneous_sobolev_norm(f: SpectralField, k: float) -> float:
    g = f.grid
    if k < 0 and abs(f.coefficients[0, 0]) > 1e-12 * max(np.max(np.abs(f.coefficients)), 1e-300):
        raise ValueError("negative-order homogeneous norm needs a zero-mean field")
    w = _kpow(g, k)
    return float(g.side_length * np.sqrt(np.sum(w * np.abs(f.coefficients) ** 2)))


def besov_norm(f: SpectralField, s: float, p: float, q: float, homogeneous: bool = False) -> float:
    """Besov norm with blocks truncated to those representable on the grid."""
    if p < 1 or q < 1:
        raise ValueError("Besov exponents p, q must be >= 1")
    blocks = dyadic_decompose(f, homogeneous=homogeneous)
    low = 0.0
    terms = []
    for j, b in blocks:
        val = lp_norm(to_physical(b), p, f.grid)
        if j == -1 and not homogeneous:
            low = val
        else:
            terms.append(2.0 ** (j * s) * val)
    terms = np.array(terms)
    if math.isinf(q):
        tail = float(terms.max()) if terms.size else 0.0
    else:
        tail = float(np.sum(terms**q) ** (1.0 / q))
    return low + tail


@dataclass(frozen=True)
class BernsteinReport:
    j: int
    p: float
    q: float
    ratio: float
    empty: bool = False


def bernstein_check(f: SpectralField, j: int, p: float, q: float) -> BernsteinReport:
    """Ratio ||D_j f||_q / (2^(2j(1/p - 1/q)) ||D_j f||_p) for a homogeneous block."""
    if q < p:
        raise ValueError("Bernstein check needs q >= p")
    b = to_physical(f.with_coefficients(f.coefficients * lp_psi(f.grid.kmag / 2.0**j)))
    num_p = lp_norm(b, p, f.grid)
    if num_p == 0.0:
        return BernsteinReport(j, p, q, float("nan"), empty=True)
    expo = (1.0 / p) - (0.0 if math.isinf(q) else 1.0 / q)
    ratio = lp_norm(b, q, f.grid) / (2.0 ** (2 * j * expo) * num_p)
    return BernsteinReport(j, p, q, float(ratio))
