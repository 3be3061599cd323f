"""Regularised vortex-wave stepper for a smooth active scalar plus point vortices.

The scalar obeys

    d_t theta + E_N div((v + sum_i a_i H_i) theta) = 0,

with ``v`` the gSQG velocity of ``theta`` and ``H_i = K_{s,eps}(x - z_i)``.
Each vortex moves with ``v(z_i)`` (or a mollified average of ``v``) plus the
regularised field of the other vortices.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .kernels import KernelParams, convolve_kernel, eval_K_s_eps, rasterize_kernel
from .pointvortex import VortexEnsemble, min_pairwise_distance
from .spectral import (
    GridSpec,
    SpectralField,
    VectorField,
    biot_savart,
    bump_profile,
    dealias,
    evaluate_at,
    from_physical,
    low_pass,
    spectral_cutoff,
    to_physical,
)

log = logging.getLogger(__name__)

TERMINATION_REASONS = ("completed", "plateau-collapse", "vortex-collapse", "cfl-collapse", "nan")


class SafeRegionError(ValueError):
    """A vortex sees theta through the periodic wrap."""


class CFLViolationError(RuntimeError):
    pass


class _CFLCollapse(Exception):
    pass


class NumericalBlowupError(RuntimeError):
    def __init__(self, message: str, last_valid_state: "CoupledState", partial=None):
        super().__init__(message)
        self.last_valid_state = last_valid_state
        self.partial = partial


@dataclass(frozen=True)
class SimConfig:
    """Run parameters.

    ``dt=None`` selects the CFL policy (``dt = cfl * h / max|u|`` each step);
    otherwise ``dt`` is fixed and must respect the same bound.
    ``mollifier`` is ``"dirac"`` (point evaluation of v) or ``"bump"`` (average
    against the cut-off profile of width ``delta_q``).
    """

    s: float
    eps: float
    grid: GridSpec
    t_end: float = 1.0
    galerkin_N: float = math.inf
    dt: float | None = None
    cfl: float = 0.5
    mollifier: str = "dirac"
    delta_q: float = 0.0
    velocity_path: str = "multiplier"
    diag_every: int = 10
    tol_plateau: float | None = None
    tol_ode: float = 1e-10
    energy_k: float = 4.0
    sobolev_ks: tuple = (1.0, 2.0, 3.0, 4.0)

    def __post_init__(self):
        if not 0 < self.s < 1:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if self.eps < 2 * self.grid.h:
            raise ValueError(
                f"kernel unresolvable: eps={self.eps:g} < 2h={2 * self.grid.h:g}")
        if not self.galerkin_N > 0:
            raise ValueError("galerkin_N must be positive")
        if self.mollifier not in ("dirac", "bump"):
            raise ValueError(f"unknown mollifier {self.mollifier!r}")
        if self.mollifier == "bump" and self.delta_q < self.grid.h:
            raise ValueError("mollifier width delta_q must be >= h")
        if self.velocity_path not in ("multiplier", "convolution"):
            raise ValueError(f"unknown velocity path {self.velocity_path!r}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end > 0 or self.diag_every < 1:
            raise ValueError("t_end must be positive and diag_every >= 1")

    @property
    def kernel(self) -> KernelParams:
        return KernelParams(self.s, self.eps)


@dataclass(frozen=True, eq=False)
class CoupledState:
    t: float
    theta: SpectralField
    vortices: VortexEnsemble


# ----------------------------------------------------------------------------
# initial data


def regularize_initial_datum(theta0: SpectralField, eps: float, center=None) -> SpectralField:
    """chi_{1/eps} . (S_{j_eps} theta0), dealiased.

    ``j_eps = ceil(log2(1/eps))``; the cut-off radius 1/eps is capped at L/4
    and centred on the domain centre unless ``center`` is given.
    """
    g = theta0.grid
    j_eps = math.ceil(math.log2(1.0 / eps))
    smooth = to_physical(low_pass(theta0, j_eps))
    if center is None:
        center = (g.side_length / 2, g.side_length / 2)
    radius = min(1.0 / eps, g.side_length / 4)
    dx, dy = g.displacement(center)
    window = bump_profile(np.hypot(dx, dy) / radius)
    return dealias(from_physical(smooth * window, g))


def validate_safe_region(theta: SpectralField, vortices: VortexEnsemble, tol: float | None = None) -> None:
    """Reject configurations where theta lives within L/8 of a vortex's wrap boundary."""
    g = theta.grid
    a = np.abs(to_physical(theta))
    if tol is None:
        # support threshold: dealiased compact data rings at ~1e-5 relative
        tol = 1e-3 * max(a.max(), 1e-300)
    L = g.side_length
    for i, z in enumerate(vortices.positions):
        dx, dy = g.displacement(z)
        band = np.maximum(np.abs(dx), np.abs(dy)) >= 3 * L / 8
        if np.any(a[band] > tol):
            raise SafeRegionError(f"vortex {i} at {tuple(z.tolist())} sees theta within L/8 of the periodic wrap")


# ----------------------------------------------------------------------------
# velocity fields


def vortex_field(grid: GridSpec, z, params: KernelParams) -> VectorField:
    """H = K_{s,eps}(x - z) rasterized, dealiased and made discretely divergence-free.

    The continuum field is divergence-free; the projection only strips the
    discretisation residue of the sampled cut-off.
    """
    hx, hy = rasterize_kernel(grid, params, center=z)
    cx = from_physical(hx, grid).coefficients * grid.dealias_mask
    cy = from_physical(hy, grid).coefficients * grid.dealias_mask
    k2 = grid.kmag**2
    inv = np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)
    div = grid.kx * cx + grid.ky * cy
    cx = cx - grid.kx * div * inv
    cy = cy - grid.ky * div * inv
    return VectorField(SpectralField(grid, cx), SpectralField(grid, cy))


def scalar_velocity(theta: SpectralField, cfg: SimConfig) -> VectorField:
    theta = spectral_cutoff(theta, cfg.galerkin_N)
    if cfg.velocity_path == "multiplier":
        return biot_savart(theta, cfg.s)
    v = convolve_kernel(theta, cfg.kernel)
    return VectorField(dealias(v.x), dealias(v.y))


def total_velocity(theta: SpectralField, vortices: VortexEnsemble, cfg: SimConfig,
                   v: VectorField | None = None) -> VectorField:
    u = scalar_velocity(theta, cfg) if v is None else v
    for z, a in zip(vortices.positions, vortices.intensities):
        u = u + vortex_field(theta.grid, z, cfg.kernel) * a
    return u


def vortex_velocity(state: CoupledState, cfg: SimConfig, v: VectorField | None = None) -> np.ndarray:
    """Velocity of each vortex: background v at z_i plus the other vortices."""
    if v is None:
        v = scalar_velocity(state.theta, cfg)
    ens = state.vortices
    if cfg.mollifier == "dirac":
        out = np.stack([evaluate_at(v.x, ens.positions), evaluate_at(v.y, ens.positions)], axis=1)
    else:
        out = mollified_velocity(v, ens.positions, cfg.delta_q)
    if ens.count > 1:
        params = cfg.kernel
        for i in range(ens.count):
            others = [j for j in range(ens.count) if j != i]
            d = ens.positions[i] - ens.positions[others]
            out[i] += np.sum(ens.intensities[others, None] * eval_K_s_eps(d, params), axis=0)
    return out


def mollified_velocity(v: VectorField, points, delta: float) -> np.ndarray:
    """Grid quadrature of v against chi((x - z)/delta), renormalised to unit mass."""
    g = v.grid
    vx, vy = v.to_physical()
    out = []
    for z in np.atleast_2d(points):
        dx, dy = g.displacement(z)
        m = bump_profile(np.hypot(dx, dy) / delta)
        mass = m.sum()
        out.append([np.sum(vx * m) / mass, np.sum(vy * m) / mass])
    return np.array(out)


# ----------------------------------------------------------------------------
# time stepping


def rhs(state: CoupledState, cfg: SimConfig, check_region: bool = False):
    """Return (dtheta/dt, dz/dt, max|u|) for the coupled system."""
    if check_region:
        validate_safe_region(state.theta, state.vortices)
    theta = state.theta
    g = theta.grid
    v = scalar_velocity(theta, cfg)
    u = total_velocity(theta, state.vortices, cfg, v=v)
    ux, uy = u.to_physical()
    th = to_physical(theta)
    fx = from_physical(ux * th, g).coefficients
    fy = from_physical(uy * th, g).coefficients
    div = 1j * (g.kx * fx + g.ky * fy) * g.dealias_mask * g.nyquist_mask
    dtheta = spectral_cutoff(SpectralField(g, -div), cfg.galerkin_N)
    dz = vortex_velocity(state, cfg, v=v)
    umax = float(np.max(np.hypot(ux, uy)))
    return dtheta, dz, umax


def _combine(state: CoupledState, dtheta, dz, h: float) -> CoupledState:
    return CoupledState(
        state.t + h,
        state.theta.with_coefficients(state.theta.coefficients + h * dtheta.coefficients),
        state.vortices.moved(state.vortices.positions + h * dz),
    )


def advance(state: CoupledState, cfg: SimConfig, dt: float | None = None,
            max_dt: float = math.inf) -> tuple[CoupledState, float]:
    """One RK4 step on the joint (theta, z) state; returns (new_state, dt_used).

    Without ``dt`` the step follows the config: fixed ``cfg.dt`` or the CFL
    limit, clipped to ``max_dt``.
    """
    k1 = rhs(state, cfg)
    umax = k1[2]
    limit = cfg.cfl * cfg.grid.h / umax if umax > 0 else math.inf
    if dt is None:
        if cfg.dt is not None:
            dt = cfg.dt
        else:
            dt = limit
            if dt < 1e-9 * cfg.t_end:
                raise _CFLCollapse(dt)
        dt = min(dt, max_dt, cfg.t_end)
    if cfg.dt is not None and dt > limit * (1 + 1e-12):
        raise CFLViolationError(f"dt={dt:g} exceeds CFL limit {limit:g}")
    s2 = _combine(state, k1[0], k1[1], dt / 2)
    k2 = rhs(s2, cfg)
    s3 = _combine(state, k2[0], k2[1], dt / 2)
    k3 = rhs(s3, cfg)
    s4 = _combine(state, k3[0], k3[1], dt)
    k4 = rhs(s4, cfg)
    c = state.theta.coefficients + dt / 6 * (
        k1[0].coefficients + 2 * k2[0].coefficients + 2 * k3[0].coefficients + k4[0].coefficients)
    z = state.vortices.positions + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    theta = dealias(state.theta.with_coefficients(c))
    new = CoupledState(state.t + dt, theta, state.vortices.moved(z))
    return new, dt


@dataclass
class SimulationResult:
    states: list[CoupledState]
    records: list = field(default_factory=list)
    reason: str = "completed"
    steps: int = 0

    @property
    def final(self) -> CoupledState:
        return self.states[-1]


def initial_state(cfg: SimConfig, theta0: SpectralField, vortices: VortexEnsemble) -> CoupledState:
    theta = dealias(spectral_cutoff(theta0, cfg.galerkin_N))
    state = CoupledState(0.0, theta, vortices)
    validate_safe_region(theta, vortices)
    return state


def simulate(cfg: SimConfig, theta0: SpectralField, vortices: VortexEnsemble,
             diagnose: Callable | None = None, keep_states: bool = True) -> SimulationResult:
    """Integrate to ``cfg.t_end`` emitting a diagnostics record every ``diag_every`` steps.

    ``diagnose(state, cfg, context)`` builds a record; by default the full
    :func:`gsqgvw.diagnostics.compute_record`.  Pass ``diagnose=False`` to skip
    diagnostics.  Blow-up triggers end the run with a reason instead of raising.
    """
    if diagnose is None:
        from .diagnostics import DiagnosticContext, compute_record

        context = DiagnosticContext.from_initial(theta0, vortices, cfg)
        diagnose = lambda st: compute_record(st, cfg, context)  # noqa: E731
    state = initial_state(cfg, theta0, vortices)
    result = SimulationResult(states=[state])
    d_min = 1e-6 * min_pairwise_distance(vortices) if vortices.count > 1 else 0.0

    def emit(st):
        if not diagnose:
            return None
        rec = diagnose(st)
        result.records.append(rec)
        return rec

    rec = emit(state)
    if rec is not None and _plateau_collapsed(rec, cfg):
        result.reason = "plateau-collapse"
        return result

    nstep = 0
    while state.t < cfg.t_end * (1 - 1e-12):
        try:
            new, _ = advance(state, cfg, max_dt=cfg.t_end - state.t)
        except _CFLCollapse:
            result.reason = "cfl-collapse"
            break
        if not (np.all(np.isfinite(new.theta.coefficients)) and np.all(np.isfinite(new.vortices.positions))):
            result.reason = "nan"
            result.steps = nstep
            raise NumericalBlowupError(f"non-finite state at t={new.t:g}", state, result)
        nstep += 1
        state = new
        if cfg.dt is not None and abs(state.t - cfg.t_end) < 1e-12 * cfg.t_end:
            state = replace(state, t=cfg.t_end)
        if vortices.count > 1 and min_pairwise_distance(state.vortices) < d_min:
            result.reason = "vortex-collapse"
            result.states.append(state)
            emit(state)
            break
        last = state.t >= cfg.t_end * (1 - 1e-12)
        if nstep % cfg.diag_every == 0 or last:
            if keep_states or last:
                result.states.append(state)
            rec = emit(state)
            if rec is not None and _plateau_collapsed(rec, cfg):
                result.reason = "plateau-collapse"
                break
    result.steps = nstep
    log.info("simulation finished: %s after %d steps (t=%g)", result.reason, nstep, state.t)
    return result


def _plateau_collapsed(record, cfg: SimConfig) -> bool:
    radii = getattr(record, "plateau_radii", None)
    if radii is None or len(radii) == 0:
        return False
    return bool(np.min(radii) < 2 * cfg.grid.h)
