"""Fast invariant suite behind ``gsqgvw check``.

Each check takes a numpy Generator and returns ``(passed, detail)``.
Grids are kept small so the whole suite runs in well under a minute.
"""

from __future__ import annotations

import math

import numpy as np

from . import diagnostics as dg
from .coupled import SimConfig, simulate
from .kernels import KernelParams, c_s_constant, eval_K_s, eval_K_s_eps
from .pointvortex import VortexEnsemble, conservation_audit, integrate
from .spectral import (
    GridSpec,
    SpectralField,
    bernstein_check,
    biot_savart,
    dealias,
    divergence,
    dyadic_decompose,
    evaluate_at,
    from_physical,
    to_physical,
)


def random_band_limited(grid: GridSpec, rng, kmax: int, zero_mean: bool = False) -> SpectralField:
    """Real field with i.i.d. Gaussian coefficients on |k_x|, |k_y| <= kmax."""
    keep = np.abs(grid.index) <= kmax
    box = keep[:, None] & keep[None, :]
    c = np.zeros((grid.n, grid.n), dtype=complex)
    c[box] = rng.normal(size=box.sum()) + 1j * rng.normal(size=box.sum())
    f = from_physical(to_physical(SpectralField(grid, c)), grid)
    if zero_mean:
        c = f.coefficients.copy()
        c[0, 0] = 0.0
        f = f.with_coefficients(c)
    return f


def check_kernel_exactness(rng):
    p = KernelParams(0.75, 0.1)
    x = rng.uniform(-1, 1, size=(10_000, 2))
    far = np.hypot(x[:, 0], x[:, 1]) >= p.eps
    exact = np.array_equal(eval_K_s_eps(x[far], p), eval_K_s(x[far], KernelParams(0.75)))
    odd = np.array_equal(eval_K_s_eps(-x, p), -eval_K_s_eps(x, p))
    return exact and odd, f"bit-exact={exact}, odd={odd}"


def check_constant(rng):
    """c_s -> 1/(2 pi) linearly, with slope c_1 (2 gamma - 2 ln 2) at s = 1."""
    c1 = 1 / (2 * math.pi)
    slope = c1 * (2 * 0.5772156649015329 - 2 * math.log(2))
    worst = 0.0
    for d in (1e-3, 1e-4, 1e-5):
        worst = max(worst, abs((c_s_constant(1 - d) - c1) / d + slope) / abs(slope))
    exact = abs(c_s_constant(1.0) - c1)
    return worst < 2e-3 and exact < 1e-15, f"slope mismatch {worst:.1e}, |c_1 - 1/2pi| {exact:.1e}"


def check_two_vortex_period(rng):
    s, d, a = 0.75, 1.0, 1.0
    T = 2 * math.pi * d ** (4 - 2 * s) / (2 * c_s_constant(s) * a)
    ens = VortexEnsemble([[-d / 2, 0], [d / 2, 0]], [a, a])
    traj = integrate(ens, s, T, T / 2000)
    err = float(np.max(np.abs(traj.ensembles[-1].positions - ens.positions)))
    return err < 1e-8 * d, f"return error {err:.2e}"


def check_vortex_conservation(rng):
    ens = VortexEnsemble(rng.uniform(-1, 1, size=(5, 2)), rng.uniform(0.5, 1.5, size=5))
    rep = conservation_audit(integrate(ens, 0.75, 0.2, 0.01, "adaptive-rk45", 1e-10))
    ok = rep.hamiltonian_drift < 1e-7 and rep.moment_drift < 1e-7
    return ok, f"H drift {rep.hamiltonian_drift:.1e}, I drift {rep.moment_drift:.1e}"


def check_lp_reconstruction(rng):
    g = GridSpec(2 * math.pi, 64)
    f = random_band_limited(g, rng, 31)
    err = float(np.max(np.abs(dyadic_decompose(f).reconstruct().coefficients - f.coefficients)))
    return err < 1e-12, f"max coefficient error {err:.1e}"


def check_bernstein(rng):
    g = GridSpec(2 * math.pi, 64)
    ratios = []
    for _ in range(10):
        f = random_band_limited(g, rng, 31)
        for j in (1, 2, 3, 4):
            rep = bernstein_check(f, j, 2, math.inf)
            if not rep.empty:
                ratios.append(rep.ratio)
    worst = max(ratios)
    return worst < 10, f"max ratio {worst:.3f}"


def check_divergence_free(rng):
    g = GridSpec(2 * math.pi, 64)
    v = biot_savart(random_band_limited(g, rng, 31), 0.6)
    err = float(np.max(np.abs(divergence(v).coefficients)))
    return err < 1e-14, f"max |div v_hat| {err:.1e}"


def check_commutator(rng):
    g = GridSpec(2 * math.pi, 64)
    worst = 0.0
    for s in (0.5, 0.6, 0.75, 0.9):
        theta = random_band_limited(g, rng, 15, zero_mean=True)
        phi = random_band_limited(g, rng, 15)
        worst = max(worst, dg.commutator_residual(theta, phi, s))
    return worst < 1e-8, f"max residual {worst:.1e}"


def check_blowup_closed_forms(rng):
    z = np.array([0.3, -0.2])
    lam, R = 0.8, 0.25
    radial = dg.blowup_functional(lambda p: -lam * (p - z), z, R)
    rot = dg.blowup_functional(lambda p: np.stack([-(p[:, 1] - z[1]), p[:, 0] - z[0]], axis=1), z, R)
    const = dg.blowup_functional(lambda p: np.ones_like(p), z, R)
    err = max(abs(radial - lam / (1 - math.log(R))), abs(rot), abs(const))
    return err < 1e-10, f"max deviation {err:.1e}"


def check_ll_domination(rng):
    g = GridSpec(2 * math.pi, 32)
    v = biot_savart(random_band_limited(g, rng, 6, zero_mean=True), 0.75)
    centers = [(rng.uniform(0, g.side_length, 2), rng.uniform(0.05, 0.9)) for _ in range(3)]
    pairs = rng.uniform(0, g.side_length, size=(200, 2, 2))
    d = np.hypot(*(pairs[:, 0] - pairs[:, 1]).T)
    rep = dg.log_lipschitz_bound_check(v, pairs[(d > 0) & (d < 1)], centers)
    return rep.holds, f"LL sup {rep.ll_sup:.3g}, max N {rep.n_values.max():.3g}"


def check_plateau_monotone(rng):
    g = GridSpec(2 * math.pi, 64)
    X, Y = g.coords
    theta = dealias(from_physical(np.exp(-((X - 3.0) ** 2 + (Y - 3.0) ** 2) / 0.5), g))
    z = (4.2, 3.0)
    beta = float(evaluate_at(theta, [z])[0])
    radii = [dg.plateau_radius(theta, z, beta, tol) for tol in (1e-6, 1e-4, 1e-2)]
    return bool(radii[0] <= radii[1] <= radii[2]), "radii " + ", ".join(f"{r:.4f}" for r in radii)


def _small_run(theta0, ens):
    g = theta0.grid
    cfg = SimConfig(s=0.75, eps=4 * g.h, grid=g, t_end=0.05, dt=0.01, diag_every=1)
    return simulate(cfg, theta0, ens, diagnose=False)


def check_identical_runs(rng):
    g = GridSpec(2 * math.pi, 64)
    X, Y = g.coords
    theta0 = dealias(from_physical(np.exp(-((X - 3.0) ** 2 + (Y - 3.0) ** 2) / 0.1), g))
    ens = VortexEnsemble([[4.2, 3.0]], [0.1])
    rep = dg.stability_gap(_small_run(theta0, ens), _small_run(theta0, ens), 2)
    return bool(np.all(rep.gap == 0)), f"max gap {rep.gap.max():.1e}"


def check_scalar_conservation(rng):
    g = GridSpec(2 * math.pi, 64)
    X, Y = g.coords
    theta0 = dealias(from_physical(np.exp(-((X - 3.0) ** 2 + (Y - 3.0) ** 2) / 0.1), g))
    res = _small_run(theta0, VortexEnsemble([[4.2, 3.0]], [0.1]))
    a, b = res.states[0].theta, res.final.theta
    dmean = abs(b.mean - a.mean)
    dl2 = abs(np.sum(np.abs(b.coefficients) ** 2) / np.sum(np.abs(a.coefficients) ** 2) - 1)
    return dmean < 1e-13 and dl2 < 1e-6, f"mean drift {dmean:.1e}, relative L2^2 drift {dl2:.1e}"


CHECKS = [
    ("kernel exactness and oddness", check_kernel_exactness),
    ("c_s limit at s -> 1", check_constant),
    ("co-rotating pair period", check_two_vortex_period),
    ("point-vortex H and I conservation", check_vortex_conservation),
    ("Littlewood-Paley reconstruction", check_lp_reconstruction),
    ("Bernstein ratios bounded", check_bernstein),
    ("velocity divergence-free", check_divergence_free),
    ("commutator identity", check_commutator),
    ("blow-up functional closed forms", check_blowup_closed_forms),
    ("N dominated by log-Lipschitz quotient", check_ll_domination),
    ("plateau radius monotone in tolerance", check_plateau_monotone),
    ("identical runs have zero gap", check_identical_runs),
    ("scalar mean and L2 conservation", check_scalar_conservation),
]
