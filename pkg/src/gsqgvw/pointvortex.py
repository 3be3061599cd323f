"""Generalised N-point-vortex dynamics for the gSQG kernel."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .kernels import c_s_constant


class SingularConfigurationError(ValueError):
    """Two vortices coincide."""


class NearCollapseError(RuntimeError):
    """Adaptive stepping could not keep vortices apart."""

    def __init__(self, message: str, min_distance: float):
        super().__init__(message)
        self.min_distance = min_distance


@dataclass(frozen=True, eq=False)
class VortexEnsemble:
    """Point vortices: positions (N, 2), intensities a_i, plateau values beta_i."""

    positions: np.ndarray
    intensities: np.ndarray
    betas: np.ndarray = field(default=None)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 2)
        a = np.array(self.intensities, dtype=float).reshape(-1)
        b = np.zeros_like(a) if self.betas is None else np.array(self.betas, dtype=float).reshape(-1)
        if len(pos) < 1 or len(a) != len(pos) or len(b) != len(pos):
            raise ValueError("positions, intensities and betas must have matching length >= 1")
        if np.any(a == 0):
            raise ValueError("vortex intensities must be nonzero")
        for arr in (pos, a, b):
            arr.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "intensities", a)
        object.__setattr__(self, "betas", b)
        if len(pos) > 1 and min_pairwise_distance(self) == 0:
            raise SingularConfigurationError("coincident vortices")

    @property
    def count(self) -> int:
        return len(self.positions)

    def moved(self, positions) -> "VortexEnsemble":
        return replace(self, positions=positions)

    def _moved_unchecked(self, positions: np.ndarray) -> "VortexEnsemble":
        # caller has already verified the vortices stay apart
        out = object.__new__(VortexEnsemble)
        positions.setflags(write=False)
        for name, val in (("positions", positions), ("intensities", self.intensities),
                          ("betas", self.betas)):
            object.__setattr__(out, name, val)
        return out


def _pair_geometry(pos):
    d = pos[:, None, :] - pos[None, :, :]
    r = np.hypot(d[..., 0], d[..., 1])
    return d, r


def vortex_rhs(ens: VortexEnsemble, s: float) -> np.ndarray:
    """dz_i/dt = c_s sum_{j != i} a_j (z_i - z_j)^perp / |z_i - z_j|^(4-2s)."""
    return _rhs_array(ens.positions, ens.intensities, s, c_s_constant(s))


def _rhs_array(pos, a, s, cs):
    if len(pos) == 1:
        return np.zeros_like(pos)
    dx = pos[:, 0, None] - pos[None, :, 0]
    dy = pos[:, 1, None] - pos[None, :, 1]
    r2 = dx * dx + dy * dy
    r2.flat[:: len(pos) + 1] = np.inf
    if not r2.all():
        raise SingularConfigurationError("coincident vortices")
    w = (cs * a) / r2 ** (2.0 - s)
    out = np.empty_like(pos)
    out[:, 0] = -(w * dy).sum(axis=1)
    out[:, 1] = (w * dx).sum(axis=1)
    return out


def hamiltonian(ens: VortexEnsemble, s: float) -> float:
    """H = sum over ordered pairs i != j of a_i a_j / |z_i - z_j|^(2-2s)."""
    if ens.count == 1:
        return 0.0
    _, r = _pair_geometry(ens.positions)
    np.fill_diagonal(r, np.inf)
    if np.any(r == 0):
        raise SingularConfigurationError("coincident vortices")
    a = ens.intensities
    return float(np.sum(np.outer(a, a) / r ** (2.0 - 2.0 * s)))


def moment_of_inertia(ens: VortexEnsemble) -> float:
    return float(np.sum(ens.intensities * np.sum(ens.positions**2, axis=1)))


def min_pairwise_distance(ens: VortexEnsemble) -> float:
    if ens.count == 1:
        return float("inf")
    _, r = _pair_geometry(ens.positions)
    iu = np.triu_indices(ens.count, 1)
    return float(r[iu].min())


# ----------------------------------------------------------------------------
# integrators

# Dormand-Prince 5(4)
_DP_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_DP_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _rk4(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _dp45(f, y, dt):
    ks = []
    for i in range(7):
        yi = y + dt * sum(a * k for a, k in zip(_DP_A[i], ks)) if i else y
        ks.append(f(yi))
    y5 = y + dt * sum(b * k for b, k in zip(_DP_B5, ks))
    y4 = y + dt * sum(b * k for b, k in zip(_DP_B4, ks))
    return y5, float(np.max(np.abs(y5 - y4)))


@dataclass
class AdaptiveResult:
    ensemble: VortexEnsemble
    dt_used: float
    dt_next: float


def step(ens: VortexEnsemble, s: float, dt: float, method: str = "rk4",
         tol_ode: float = 1e-10, d_min: float | None = None,
         max_rejections: int = 50):
    """Advance the point-vortex system by one step.

    ``rk4`` returns the new ensemble.  ``adaptive-rk45`` returns an
    :class:`AdaptiveResult`; the accepted step may be shorter than ``dt``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")

    cs = c_s_constant(s)

    def f(y):
        return _rhs_array(y, ens.intensities, s, cs)

    if method == "rk4":
        return ens.moved(_rk4(f, ens.positions, dt))
    if method != "adaptive-rk45":
        raise ValueError(f"unknown method {method!r}")

    if d_min is None:
        d_min = 1e-6 * min_pairwise_distance(ens)
    h = dt
    for _ in range(max_rejections + 1):
        try:
            y, err = _dp45(f, ens.positions, h)
            new = ens.moved(y)
            ok_dist = new.count == 1 or min_pairwise_distance(new) >= d_min
        except SingularConfigurationError:
            err, ok_dist = np.inf, False
        if err <= tol_ode and ok_dist:
            grow = 5.0 if err == 0 else min(5.0, 0.9 * (tol_ode / err) ** 0.2)
            return AdaptiveResult(new, h, h * max(grow, 0.2))
        if err <= tol_ode or not np.isfinite(err):
            h *= 0.25
        else:
            h *= max(0.1, 0.9 * (tol_ode / err) ** 0.2)
    raise NearCollapseError("step-rejection cascade near collapse", min_pairwise_distance(ens))


@dataclass
class Trajectory:
    times: np.ndarray
    ensembles: list[VortexEnsemble]
    s: float

    def __len__(self):
        return len(self.times)


def integrate(ens: VortexEnsemble, s: float, t_end: float, dt: float,
              method: str = "rk4", tol_ode: float = 1e-10) -> Trajectory:
    """Integrate to ``t_end``; rk4 uses fixed ``dt``, adaptive uses it as the first guess."""
    times = [0.0]
    states = [ens]
    t = 0.0
    d_min = 1e-6 * min_pairwise_distance(ens)
    if method == "rk4":
        nsteps = int(round(t_end / dt))
        if abs(nsteps * dt - t_end) > 1e-12 * max(1.0, t_end):
            nsteps = int(np.ceil(t_end / dt))
        h = t_end / nsteps
        cs = c_s_constant(s)
        a = ens.intensities
        iu = np.triu_indices(ens.count, 1)
        y = ens.positions
        for i in range(nsteps):
            y = _rk4(lambda p: _rhs_array(p, a, s, cs), y, h)
            if ens.count > 1:
                d = np.hypot(*(y[iu[0]] - y[iu[1]]).T).min()
                if d < d_min:
                    raise NearCollapseError("vortices below d_min", float(d))
            times.append((i + 1) * h)
            states.append(ens._moved_unchecked(y))
        return Trajectory(np.array(times), states, s)

    h = dt
    while t < t_end * (1 - 1e-14):
        h = min(h, t_end - t)
        res = step(ens, s, h, method, tol_ode=tol_ode, d_min=d_min)
        ens = res.ensemble
        t += res.dt_used
        h = res.dt_next
        times.append(t)
        states.append(ens)
    return Trajectory(np.array(times), states, s)


@dataclass(frozen=True)
class DriftReport:
    hamiltonian_drift: float
    moment_drift: float


def conservation_audit(traj: Trajectory) -> DriftReport:
    """Max relative drift of H and I along a trajectory."""
    if len(traj) < 2:
        raise ValueError("need at least two samples")
    H = np.array([hamiltonian(e, traj.s) for e in traj.ensembles])
    I = np.array([moment_of_inertia(e) for e in traj.ensembles])

    def rel(x):
        d = np.max(np.abs(x - x[0]))
        return float(d / abs(x[0])) if x[0] != 0 else float(d)

    return DriftReport(rel(H), rel(I))


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Columns: t, z1x, z1y, ..., H, I, min_dist."""
    n = traj.ensembles[0].count
    header = ["t"] + [f"z{i + 1}{c}" for i in range(n) for c in "xy"] + ["H", "I", "min_dist"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t, e in zip(traj.times, traj.ensembles):
            row = [repr(float(t))] + [repr(float(v)) for v in e.positions.ravel()]
            row += [repr(hamiltonian(e, traj.s)), repr(moment_of_inertia(e)),
                    repr(min_pairwise_distance(e))]
            w.writerow(row)
