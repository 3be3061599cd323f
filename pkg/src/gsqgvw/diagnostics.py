"""Analytical diagnostics of a vortex-wave run.

Plateau radius around each vortex, the directional log-Lipschitz blow-up
functional, energy and existence-time scale, the two radius lower bounds,
the stability gap between paired runs, the commutator identity and the
vortex-speed bound used in the collapse argument.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from .kernels import c_s_constant
from .pointvortex import VortexEnsemble, hamiltonian, min_pairwise_distance, moment_of_inertia
from .spectral import (
    SpectralField,
    VectorField,
    evaluate_at,
    fractional_laplacian,
    from_physical,
    gradient,
    lp_norm,
    refine,
    sobolev_norm,
    to_physical,
)

LP_EXPONENTS = (1.0, 2.0, 4.0, math.inf)


# ----------------------------------------------------------------------------
# plateau radius


class _Interpolant:
    """Cubic-spline interpolant of a band-limited field on a refined grid.

    The field is first refined exactly (``factor`` x) in Fourier space, so
    the spline error is that of a heavily oversampled smooth function.
    """

    def __init__(self, f: SpectralField, factor: int = 4):
        fine = refine(f, factor)
        self.h = fine.grid.h
        self.n = fine.grid.n
        self.coeffs = ndimage.spline_filter(to_physical(fine), order=3, mode="grid-wrap")

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        coords = (pts / self.h).T
        return ndimage.map_coordinates(self.coeffs, coords, order=3, mode="grid-wrap",
                                       prefilter=False)


def _radius_search(deviation: Callable, z, tol: float, step: float, cap: float,
                   bisections: int = 20) -> float:
    """Largest r <= cap with deviation <= tol on every sampled point of B(z, r).

    Concentric circles at spacing ``step`` locate the first failing shell;
    bisection on circles then refines inside that shell.
    """
    z = np.asarray(z, dtype=float)
    if deviation(z[None, :])[0] > tol:
        return 0.0
    n_rays = max(256, 8 * math.ceil(2 * math.pi * cap / step / 8))
    ang = 2 * np.pi * np.arange(n_rays) / n_rays
    ring = np.stack([np.cos(ang), np.sin(ang)], axis=1)

    def circle_ok(r):
        return bool(np.max(deviation(z + r * ring)) <= tol)

    radii = np.append(np.arange(1, math.ceil(cap / step)) * step, cap)
    pts = z + radii[:, None, None] * ring[None, :, :]
    dev = deviation(pts.reshape(-1, 2)).reshape(len(radii), n_rays).max(axis=1)
    bad = np.nonzero(dev > tol)[0]
    if bad.size == 0:
        return float(cap)
    m = int(bad[0])
    lo = 0.0 if m == 0 else float(radii[m - 1])
    hi = float(radii[m])
    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        if circle_ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def plateau_radius(theta: SpectralField, z, beta: float, tol_plateau: float,
                   interpolant: _Interpolant | None = None) -> float:
    """Largest r with |theta - beta| <= tol_plateau on B(z, r), capped at L/4.

    Resolution: shells every h/2, then bisection on the failing shell.
    Returns 0 when theta(z) itself is off the plateau value.
    """
    if not tol_plateau > 0:
        raise ValueError("tol_plateau must be positive")
    f = interpolant or _Interpolant(theta)
    g = theta.grid
    return _radius_search(lambda p: np.abs(f(p) - beta), z, tol_plateau, g.h / 2,
                          g.side_length / 4)


def plateau_radius_gradient(theta: SpectralField, z, tol_gradient: float,
                            interpolants: tuple | None = None) -> float:
    """Variant of :func:`plateau_radius` testing |grad theta| <= tol_gradient."""
    if not tol_gradient > 0:
        raise ValueError("tol_gradient must be positive")
    if interpolants is None:
        gr = gradient(theta)
        interpolants = (_Interpolant(gr.x), _Interpolant(gr.y))
    fx, fy = interpolants
    g = theta.grid
    return _radius_search(lambda p: np.hypot(fx(p), fy(p)), z, tol_gradient, g.h / 2,
                          g.side_length / 4)


# ----------------------------------------------------------------------------
# blow-up functional and log-Lipschitz quotient


def _sampler(v) -> Callable:
    """Point sampler (M, 2) -> (M, 2) for a VectorField or a callable."""
    if isinstance(v, VectorField):
        return lambda p: np.stack([evaluate_at(v.x, p), evaluate_at(v.y, p)], axis=1)
    return lambda p: np.asarray(v(np.atleast_2d(p)), dtype=float).reshape(-1, 2)


def blowup_functional(v, z, R: float, n_samples: int = 256) -> float:
    """max over |x - z| = R of -(x - z).(v(x) - v(z)) / (R^2 (1 - ln R)).

    ``v`` is a VectorField (evaluated by exact Fourier summation) or a
    callable mapping points (M, 2) to velocities (M, 2).  The circle is
    sampled at ``n_samples`` and ``2 n_samples`` points; the larger value
    is returned.  The value is signed.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    if R >= math.e:
        raise ValueError("R must be below e so that 1 - ln R > 0")
    f = _sampler(v)
    z = np.asarray(z, dtype=float)
    vz = f(z[None, :])[0]
    best = -math.inf
    for m in (n_samples, 2 * n_samples):
        ang = 2 * np.pi * np.arange(m) / m
        d = R * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        q = -np.sum(d * (f(z + d) - vz), axis=1) / (R * R * (1.0 - math.log(R)))
        best = max(best, float(q.max()))
    return best


@dataclass(frozen=True)
class LogLipschitzReport:
    ll_sup: float
    n_values: np.ndarray
    holds: bool


def _ll_quotient(f: Callable, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    d = np.hypot(*(x - y).T)
    if np.any(d <= 0) or np.any(d >= 1):
        raise ValueError("pairs must satisfy 0 < |x - y| < 1")
    return np.hypot(*(f(x) - f(y)).T) / (d * (1.0 - np.log(d)))


def log_lipschitz_bound_check(v, pairs, centers=(), n_samples: int = 256) -> LogLipschitzReport:
    """Sampled log-Lipschitz seminorm and the domination N(v, z, R) <= ||v||_LL.

    ``pairs`` is an array (M, 2, 2) of point pairs.  ``centers`` lists
    (z, R) at which N is evaluated; the matching circle pairs (x, z) are
    added to the sample so the comparison uses the same points.
    """
    f = _sampler(v)
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2, 2)
    quotients = [_ll_quotient(f, pairs[:, 0], pairs[:, 1])] if len(pairs) else []
    n_vals = []
    for z, R in centers:
        z = np.asarray(z, dtype=float)
        n_vals.append(blowup_functional(v, z, R, n_samples))
        m = 2 * n_samples
        ang = 2 * np.pi * np.arange(m) / m
        x = z + R * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        quotients.append(_ll_quotient(f, x, np.broadcast_to(z, x.shape)))
    ll = float(max((q.max() for q in quotients), default=0.0))
    n_vals = np.array(n_vals)
    holds = bool(np.all(n_vals <= ll * (1 + 1e-12) + 1e-14))
    return LogLipschitzReport(ll, n_vals, holds)


# ----------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class DiagnosticContext:
    """Quantities fixed at t = 0: plateau values, tolerances, initial radii."""

    s: float
    betas: np.ndarray
    tol_plateau: float
    tol_gradient: float
    R0: np.ndarray

    @classmethod
    def from_initial(cls, theta0: SpectralField, vortices: VortexEnsemble, cfg) -> "DiagnosticContext":
        """Plateau value of each vortex is theta0(z_i); the default tolerance
        is 1e-6 max|theta0| and the gradient tolerance is tol / h."""
        from .coupled import initial_state

        theta = initial_state(cfg, theta0, vortices).theta
        sup = float(np.max(np.abs(to_physical(theta))))
        tol = cfg.tol_plateau or 1e-6 * sup
        if not tol > 0:
            tol = 1e-12
        betas = evaluate_at(theta, vortices.positions)
        interp = _Interpolant(theta)
        R0 = np.array([plateau_radius(theta, z, b, tol, interp)
                       for z, b in zip(vortices.positions, betas)])
        return cls(cfg.s, betas, tol, tol / theta.grid.h, R0)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    lp_norms: dict
    sobolev_norms: dict
    plateau_radii: np.ndarray
    plateau_radii_gradient: np.ndarray
    N_blowup: np.ndarray
    E_energy: float
    H_vortex: float
    I_vortex: float
    min_dist: float
    grad_v_sup: float
    vortex_speed: np.ndarray
    positions: np.ndarray
    stability_gap: float | None = None


def velocity_gradient_sup(v: VectorField) -> float:
    """Grid max of the pointwise operator 2-norm of grad v."""
    gx, gy = gradient(v.x), gradient(v.y)
    a, b = to_physical(gx.x), to_physical(gx.y)
    c, d = to_physical(gy.x), to_physical(gy.y)
    # largest singular value of [[a, b], [c, d]]
    p = a * a + b * b + c * c + d * d
    q = np.abs(a * d - b * c)
    return float(np.max(np.sqrt(0.5 * (p + np.sqrt(np.maximum(p * p - 4 * q * q, 0.0))))))


def compute_record(state, cfg, context: DiagnosticContext) -> DiagnosticsRecord:
    from .coupled import scalar_velocity

    theta = state.theta
    g = theta.grid
    ens = state.vortices
    phys = to_physical(theta)
    lp = {p: lp_norm(phys, p, g) for p in LP_EXPONENTS}
    ks = tuple(cfg.sobolev_ks) + (3.0 - 2.0 * cfg.s,)
    sob = {k: sobolev_norm(theta, k) for k in ks}
    if cfg.energy_k not in sob:
        sob[cfg.energy_k] = sobolev_norm(theta, cfg.energy_k)

    interp = _Interpolant(theta)
    gr = gradient(theta)
    ginterp = (_Interpolant(gr.x), _Interpolant(gr.y))
    radii = np.array([plateau_radius(theta, z, b, context.tol_plateau, interp)
                      for z, b in zip(ens.positions, context.betas)])
    radii_g = np.array([plateau_radius_gradient(theta, z, context.tol_gradient, ginterp)
                        for z in ens.positions])

    v = scalar_velocity(theta, cfg)
    n_vals = np.array([blowup_functional(v, z, R) if 0 < R < 1 else math.nan
                       for z, R in zip(ens.positions, radii)])
    vz = np.stack([evaluate_at(v.x, ens.positions), evaluate_at(v.y, ens.positions)], axis=1)
    rmin = float(radii.min())
    energy = sob[cfg.energy_k] ** 2 + (1.0 / rmin if rmin > 0 else math.inf)
    return DiagnosticsRecord(
        t=float(state.t),
        lp_norms=lp,
        sobolev_norms=sob,
        plateau_radii=radii,
        plateau_radii_gradient=radii_g,
        N_blowup=n_vals,
        E_energy=float(energy),
        H_vortex=hamiltonian(ens, cfg.s),
        I_vortex=moment_of_inertia(ens),
        min_dist=min_pairwise_distance(ens),
        grad_v_sup=velocity_gradient_sup(v),
        vortex_speed=np.hypot(vz[:, 0], vz[:, 1]),
        positions=np.array(ens.positions),
    )


# ----------------------------------------------------------------------------
# audits over a record stream


def _times(records: Sequence[DiagnosticsRecord]) -> np.ndarray:
    t = np.array([r.t for r in records])
    if np.any(np.diff(t) <= 0):
        raise ValueError("record times must be strictly increasing")
    return t


def _cumtrapz(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y, dtype=float)
    if len(t) > 1:
        inc = 0.5 * (y[1:] + y[:-1]) * np.diff(t)[:, None] if y.ndim == 2 else \
            0.5 * (y[1:] + y[:-1]) * np.diff(t)
        out[1:] = np.cumsum(inc, axis=0)
    return out


def radius_lower_bound_audit(records: Sequence[DiagnosticsRecord]) -> np.ndarray:
    """R_i(t) - R_i(0) exp(-int_0^t ||grad v||_inf), shape (samples, vortices)."""
    t = _times(records)
    R = np.array([r.plateau_radii for r in records])
    grad = np.array([r.grad_v_sup for r in records])
    bound = R[0][None, :] * np.exp(-_cumtrapz(grad, t))[:, None]
    return R - bound


def osgood_bound_audit(records: Sequence[DiagnosticsRecord]) -> np.ndarray:
    """R_i(t) - exp(1 - exp(int_0^t N_i + ln(1 - ln R_i(0)))), shape (samples, vortices)."""
    t = _times(records)
    R = np.array([r.plateau_radii for r in records])
    N = np.array([r.N_blowup for r in records])
    if not np.all(np.isfinite(N)):
        raise ValueError("Osgood audit needs finite N, i.e. 0 < R < 1 at every sample")
    expo = _cumtrapz(N, t) + np.log(1.0 - np.log(R[0]))[None, :]
    return R - np.exp(1.0 - np.exp(expo))


def collapse_velocity_bound_audit(record: DiagnosticsRecord, s: float) -> np.ndarray:
    """c_s ||theta||_1 / R_i^(3-2s) - |v(z_i)| per vortex (nonnegative when the bound holds)."""
    R = record.plateau_radii
    l1 = record.lp_norms[1.0]
    with np.errstate(divide="ignore"):
        bound = np.where(R > 0, c_s_constant(s) * l1 / R ** (3.0 - 2.0 * s), math.inf)
    return bound - record.vortex_speed


@dataclass(frozen=True)
class EnergyReport:
    times: np.ndarray
    energy: np.ndarray
    growth: np.ndarray
    growth_constant: float
    time_scale: float


def energy_and_time_bound(records: Sequence[DiagnosticsRecord], k: float, s: float) -> EnergyReport:
    """E(t) = ||theta||_{H^k}^2 + 1/R(t) with R the smallest plateau radius.

    ``growth[m]`` is sup_{t <= t_m} E(t)/E(0); the stream stops at the first
    R = 0 sample (E infinite).  ``time_scale`` is the reference scale
    1/(E0^(5+3k-6s) + E0^(1/2)); the constant in front is not known.
    """
    t = _times(records)
    E = []
    for r in records:
        rmin = float(np.min(r.plateau_radii))
        if rmin <= 0:
            E.append(math.inf)
            break
        E.append(r.sobolev_norms[k] ** 2 + 1.0 / rmin)
    E = np.array(E)
    t = t[: len(E)]
    growth = np.maximum.accumulate(E / E[0])
    scale = 1.0 / (E[0] ** (5 + 3 * k - 6 * s) + math.sqrt(E[0]))
    return EnergyReport(t, E, growth, float(growth[-1]), float(scale))


def running_integral(records: Sequence[DiagnosticsRecord], k: float) -> np.ndarray:
    """int_0^t ||theta||_{H^k} dt along the stream (trapezoidal)."""
    t = _times(records)
    return _cumtrapz(np.array([r.sobolev_norms[k] for r in records]), t)


# ----------------------------------------------------------------------------
# stability gap


@dataclass(frozen=True)
class StabilityReport:
    times: np.ndarray
    gap: np.ndarray
    rate: float
    r_squared: float


def stability_gap(run_a, run_b, ell: float) -> StabilityReport:
    """gap(t) = ||theta_b - theta_a||_{H^ell} + sum_i |z_b,i - z_a,i| and a fit
    of ln gap = ln gap(0) + rate t.

    Both runs must share the grid and the sample times (use a fixed dt).
    An identically zero gap has rate 0 and an undefined (NaN) R^2.
    """
    sa, sb = run_a.states, run_b.states
    if len(sa) != len(sb):
        raise ValueError("runs have different sample counts")
    if sa[0].theta.grid != sb[0].theta.grid:
        raise ValueError("grids differ")
    t = np.array([x.t for x in sa])
    if not np.array_equal(t, [x.t for x in sb]):
        raise ValueError("runs are sampled at different times")
    gap = np.array([
        sobolev_norm(b.theta - a.theta, ell)
        + float(np.sum(np.hypot(*(b.vortices.positions - a.vortices.positions).T)))
        for a, b in zip(sa, sb)
    ])
    if np.all(gap == 0):
        return StabilityReport(t, gap, 0.0, math.nan)
    if np.any(gap <= 0):
        raise ValueError("gap vanishes at some samples but not all")
    y = np.log(gap)
    A = np.stack([np.ones_like(t), t], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / sst if sst > 0 else 1.0
    return StabilityReport(t, gap, float(coef[1]), r2)


# ----------------------------------------------------------------------------
# commutator identity


def commutator_residual(theta: SpectralField, phi: SpectralField, s: float) -> float:
    """|LHS - RHS| / (1 + |LHS|) for the commutator form of the nonlinear term.

    LHS = int theta v . grad phi,  v = -grad-perp (-Delta)^(-s) theta.
    RHS = -1/2 int v . [(-Delta)^s, grad phi] (-Delta)^(-s) theta
        = -1/2 int v . ((-Delta)^s(grad phi w) - grad phi theta),  w = (-Delta)^(-s) theta.

    Products are formed on a grid refined twice, so band-limited inputs give
    aliasing-free quadrature.
    """
    from .spectral import biot_savart

    if abs(theta.mean) > 1e-12 * max(1.0, float(np.max(np.abs(theta.coefficients)))):
        raise ValueError("theta must have zero mean")
    v = biot_savart(theta, s)
    w = fractional_laplacian(theta, -s)
    gp = gradient(phi)
    fine = refine(theta, 2).grid
    F = {name: to_physical(refine(f, 2)) for name, f in
         (("theta", theta), ("vx", v.x), ("vy", v.y), ("w", w), ("px", gp.x), ("py", gp.y))}
    area = fine.cell_area
    lhs = float(np.sum(F["theta"] * (F["vx"] * F["px"] + F["vy"] * F["py"])) * area)
    comm = []
    for pc in ("px", "py"):
        lifted = fractional_laplacian(from_physical(F[pc] * F["w"], fine), s)
        comm.append(to_physical(lifted) - F[pc] * F["theta"])
    rhs = -0.5 * float(np.sum(F["vx"] * comm[0] + F["vy"] * comm[1]) * area)
    return abs(lhs - rhs) / (1.0 + abs(lhs))


# ----------------------------------------------------------------------------
# CSV output


def _fmt(x) -> str:
    return repr(float(x))


def _lp_name(p: float) -> str:
    return "Linf" if math.isinf(p) else f"L{p:g}"


def _sob_name(k: float, s: float) -> str:
    return "H3-2s" if k == 3.0 - 2.0 * s else f"H{k:g}"


def write_diagnostics_csv(records: Sequence[DiagnosticsRecord], path, s: float) -> None:
    """One row per record; header names carry units in brackets.

    ``[sim]`` marks mixed simulation units; floats are written with repr so
    the file is a deterministic function of the records.
    """
    if not records:
        raise ValueError("no samples")
    first = records[0]
    nv = len(first.plateau_radii)
    lp_keys = list(first.lp_norms)
    sob_keys = list(first.sobolev_norms)
    lp_units = {1.0: "theta*length^2", 2.0: "theta*length", 4.0: "theta*length^0.5"}
    header = ["t [time]"]
    header += [f"{_lp_name(p)} [{lp_units.get(p, 'theta')}]" for p in lp_keys]
    header += [f"{_sob_name(k, s)} [sim]" for k in sob_keys]
    header += ["int_H3-2s [sim*time]"]
    for i in range(1, nv + 1):
        header += [f"z{i}x [length]", f"z{i}y [length]", f"R{i} [length]",
                   f"Rgrad{i} [length]", f"N{i} [1/time]", f"speed{i} [length/time]"]
    header += ["E [sim]", "H_vortex [sim]", "I_vortex [length^2]", "min_dist [length]",
               "grad_v_sup [1/time]", "stability_gap [sim]"]
    k3 = 3.0 - 2.0 * s
    integral = running_integral(records, k3) if k3 in first.sobolev_norms else \
        np.full(len(records), math.nan)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r, acc in zip(records, integral):
            row = [_fmt(r.t)] + [_fmt(r.lp_norms[p]) for p in lp_keys]
            row += [_fmt(r.sobolev_norms[k]) for k in sob_keys] + [_fmt(acc)]
            for i in range(nv):
                row += [_fmt(r.positions[i, 0]), _fmt(r.positions[i, 1]), _fmt(r.plateau_radii[i]),
                        _fmt(r.plateau_radii_gradient[i]), _fmt(r.N_blowup[i]),
                        _fmt(r.vortex_speed[i])]
            row += [_fmt(r.E_energy), _fmt(r.H_vortex), _fmt(r.I_vortex), _fmt(r.min_dist),
                    _fmt(r.grad_v_sup),
                    "" if r.stability_gap is None else _fmt(r.stability_gap)]
            w.writerow(row)


def read_diagnostics_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and numeric table (blank cells become NaN)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError("no samples")
    data = np.array([[float(x) if x != "" else math.nan for x in row] for row in rows[1:]])
    return rows[0], data
