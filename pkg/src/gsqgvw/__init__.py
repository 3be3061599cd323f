"""Vortex-wave solver for generalised surface quasi-geostrophic active scalars.

Modules
-------
spectral     Fourier fields, multipliers, Littlewood-Paley blocks and norms.
kernels      Biot-Savart kernel K_s and its smooth truncation K_{s,eps}.
pointvortex  N-point-vortex dynamics, integrators and conserved quantities.
coupled      Joint stepper for a smooth scalar plus point vortices.
diagnostics  Plateau radius, blow-up functional, bounds and audits.
cli          Config parsing, run drivers, persistence and plots.
"""

__version__ = "0.1.0"

from .coupled import CoupledState, SimConfig, simulate  # noqa: E402
from .kernels import KernelParams, c_s_constant, eval_K_s, eval_K_s_eps  # noqa: E402
from .pointvortex import VortexEnsemble, integrate  # noqa: E402
from .spectral import GridSpec, SpectralField, VectorField  # noqa: E402

__all__ = [
    "CoupledState",
    "GridSpec",
    "KernelParams",
    "SimConfig",
    "SpectralField",
    "VectorField",
    "VortexEnsemble",
    "c_s_constant",
    "eval_K_s",
    "eval_K_s_eps",
    "integrate",
    "simulate",
]
