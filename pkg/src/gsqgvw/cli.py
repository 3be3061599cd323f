"""Command-line front end: config parsing, run drivers, persistence and plots.

Subcommands: simulate, vortex-only, convergence, check, plot.
Every flag can also be set through an environment variable with the
``GSQGVW_`` prefix (``GSQGVW_CONFIG``, ``GSQGVW_OUT``, ``GSQGVW_SEED``,
``GSQGVW_THREADS``); explicit flags win.

Exit codes: 0 success, 2 validation error, 3 numerical failure,
4 check-suite failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import datetime
import hashlib
import json
import logging
import math
import os
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml
from scipy.special import erfc

from . import __version__
from .coupled import (
    CFLViolationError,
    NumericalBlowupError,
    SafeRegionError,
    SimConfig,
    initial_state,
    simulate,
)
from .diagnostics import DiagnosticContext, read_diagnostics_csv, write_diagnostics_csv
from .pointvortex import NearCollapseError, VortexEnsemble, integrate, write_trajectory_csv
from .spectral import GridSpec, SpectralField, dealias, from_physical, lp_norm, to_physical

log = logging.getLogger(__name__)

ENV_PREFIX = "GSQGVW_"
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_CHECK = 0, 2, 3, 4


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key path."""


# ----------------------------------------------------------------------------
# initial-data generators


def gaussian_blob(grid: GridSpec, center, width: float, amplitude: float = 1.0) -> np.ndarray:
    dx, dy = grid.displacement(center)
    return amplitude * np.exp(-(dx * dx + dy * dy) / (2.0 * width * width))


def annulus(grid: GridSpec, center, radius: float, width: float, amplitude: float = 1.0) -> np.ndarray:
    dx, dy = grid.displacement(center)
    r = np.hypot(dx, dy)
    return amplitude * np.exp(-((r - radius) ** 2) / (2.0 * width * width))


def plateau_patch(grid: GridSpec, center, beta: float, radius: float, width: float) -> np.ndarray:
    """Equal to beta (to ~1e-8 relative) on B(center, radius), with an erfc skirt.

    The skirt is analytic, so its spectrum decays like a Gaussian and the
    plateau survives dealiasing.
    """
    dx, dy = grid.displacement(center)
    r = np.hypot(dx, dy)
    return beta * 0.5 * erfc((r - radius) / width - 4.0)


def read_snapshot(path) -> tuple[np.ndarray, dict]:
    """Load a snapshot written by :func:`write_snapshot` and its sidecar."""
    path = Path(path)
    meta = {}
    for line in path.with_suffix(".txt").read_text().splitlines():
        key, _, val = line.partition("=")
        meta[key.strip()] = val.strip()
    n = int(meta["n"])
    data = np.fromfile(path, dtype="<f8")
    if data.size != n * n:
        raise ConfigError(f"snapshot {path} holds {data.size} values, expected {n * n}")
    return data.reshape(n, n), meta


def write_snapshot(path, theta: SpectralField, t: float, vortices: VortexEnsemble,
                   config_hash: str) -> None:
    """Physical values as little-endian float64, row-major over [ix, iy], plus a text sidecar."""
    path = Path(path)
    g = theta.grid
    to_physical(theta).astype("<f8").tofile(path)
    pos = ";".join(f"{x!r} {y!r}" for x, y in vortices.positions.tolist())
    lines = [
        "format=float64-le row-major [ix, iy]",
        f"n={g.n}",
        f"L={g.side_length!r}",
        f"t={float(t)!r}",
        f"config_hash={config_hash}",
        f"vortices={pos}",
        "intensities=" + " ".join(repr(a) for a in vortices.intensities.tolist()),
    ]
    path.with_suffix(".txt").write_text("\n".join(lines) + "\n")


# ----------------------------------------------------------------------------
# config schema

_REQUIRED = object()

_GENERATORS = {
    "gaussian-blob": {"center": _REQUIRED, "width": _REQUIRED, "amplitude": 1.0},
    "annulus": {"center": _REQUIRED, "radius": _REQUIRED, "width": _REQUIRED, "amplitude": 1.0},
    "plateau-patch": {"center": _REQUIRED, "beta": _REQUIRED, "radius": _REQUIRED, "width": 0.1},
    "file": {"path": _REQUIRED},
}

_SCHEMA = {
    "s": _REQUIRED,
    "eps": None,
    "grid": {"L": 2 * math.pi, "n": 128},
    "t_end": 1.0,
    "dt": None,
    "cfl": 0.5,
    "galerkin_N": None,
    "mollifier": "dirac",
    "delta_q": 0.0,
    "velocity_path": "multiplier",
    "diag_every": 10,
    "tol_plateau": None,
    "energy_k": 4.0,
    "sobolev_ks": [1.0, 2.0, 3.0, 4.0],
    "snapshot_every": 0,
    "initial": [],
    "vortices": {"positions": _REQUIRED, "intensities": _REQUIRED, "betas": None},
    "vortex_only": {"t_end": None, "dt": 1e-3, "method": "rk4", "tol_ode": 1e-10},
    "convergence": None,
}

_CONVERGENCE = {"parameter": _REQUIRED, "values": _REQUIRED, "reference": None}


def _fill(data, schema: dict, path: str) -> dict:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping")
    for key in data:
        if key not in schema:
            raise ConfigError(f"unknown key '{path}{key}'")
    out = {}
    for key, default in schema.items():
        if key in data:
            val = data[key]
            if isinstance(default, dict):
                val = _fill(val, default, f"{path}{key}.")
            out[key] = val
        elif default is _REQUIRED:
            raise ConfigError(f"missing required key '{path}{key}'")
        elif isinstance(default, dict):
            out[key] = _fill({}, default, f"{path}{key}.")
        else:
            out[key] = default
    return out


def _number(cfg: dict, key: str, path: str, kind=float, optional=False):
    val = cfg[key]
    if val is None and optional:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"'{path}{key}' must be a number, got {val!r}")
    if kind is int and int(val) != val:
        raise ConfigError(f"'{path}{key}' must be an integer, got {val!r}")
    return kind(val)


def _point(val, path: str) -> list[float]:
    arr = np.asarray(val, dtype=float) if isinstance(val, (list, tuple)) else None
    if arr is None or arr.shape != (2,):
        raise ConfigError(f"'{path}' must be a pair [x, y], got {val!r}")
    return arr.tolist()


def normalize_config(raw: dict) -> dict:
    """Validate keys and types and fill defaults; returns a plain dict."""
    cfg = _fill(raw, _SCHEMA, "")
    for key in ("s", "t_end", "cfl", "delta_q", "energy_k"):
        cfg[key] = _number(cfg, key, "")
    for key in ("eps", "dt", "galerkin_N", "tol_plateau"):
        cfg[key] = _number(cfg, key, "", optional=True)
    for key in ("diag_every", "snapshot_every"):
        cfg[key] = _number(cfg, key, "", int)
    cfg["grid"]["L"] = _number(cfg["grid"], "L", "grid.")
    cfg["grid"]["n"] = _number(cfg["grid"], "n", "grid.", int)
    for key in ("mollifier", "velocity_path"):
        if not isinstance(cfg[key], str):
            raise ConfigError(f"'{key}' must be a string")
    if not isinstance(cfg["sobolev_ks"], list):
        raise ConfigError("'sobolev_ks' must be a list of numbers")
    cfg["sobolev_ks"] = [float(k) for k in cfg["sobolev_ks"]]

    initial = cfg["initial"]
    if isinstance(initial, dict):
        initial = [initial]
    if not isinstance(initial, list):
        raise ConfigError("'initial' must be a generator mapping or a list of them")
    terms = []
    for i, term in enumerate(initial):
        path = f"initial[{i}]."
        if not isinstance(term, dict) or "generator" not in term:
            raise ConfigError(f"missing required key '{path}generator'")
        name = term["generator"]
        if name not in _GENERATORS:
            raise ConfigError(f"'{path}generator': unknown generator {name!r}")
        body = _fill({k: v for k, v in term.items() if k != "generator"}, _GENERATORS[name], path)
        for key, val in body.items():
            if key == "center":
                body[key] = _point(val, path + key)
            elif key != "path":
                body[key] = _number(body, key, path)
        terms.append({"generator": name, **body})
    cfg["initial"] = terms

    vort = cfg["vortices"]
    pos = np.asarray(vort["positions"], dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 2 or len(pos) == 0:
        raise ConfigError("'vortices.positions' must be a non-empty list of [x, y] pairs")
    a = np.asarray(vort["intensities"], dtype=float).reshape(-1)
    if len(a) != len(pos):
        raise ConfigError("'vortices.intensities' must match 'vortices.positions' in length")
    vort["positions"] = pos.tolist()
    vort["intensities"] = a.tolist()
    if vort["betas"] is not None:
        vort["betas"] = np.asarray(vort["betas"], dtype=float).reshape(-1).tolist()

    vo = cfg["vortex_only"]
    vo["t_end"] = _number(vo, "t_end", "vortex_only.", optional=True)
    vo["dt"] = _number(vo, "dt", "vortex_only.")
    vo["tol_ode"] = _number(vo, "tol_ode", "vortex_only.")
    if vo["method"] not in ("rk4", "adaptive-rk45"):
        raise ConfigError(f"'vortex_only.method': unknown method {vo['method']!r}")

    if cfg["convergence"] is not None:
        conv = _fill(cfg["convergence"], _CONVERGENCE, "convergence.")
        if conv["parameter"] not in ("eps", "galerkin_N", "delta_q"):
            raise ConfigError(f"'convergence.parameter': unsupported {conv['parameter']!r}")
        vals = conv["values"]
        if not isinstance(vals, list) or len(vals) < 2:
            raise ConfigError("'convergence.values' must list at least two values")
        conv["values"] = [float(v) for v in vals]
        conv["reference"] = _number(conv, "reference", "convergence.", optional=True)
        cfg["convergence"] = conv
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


@dataclass
class ParsedConfig:
    """Validated run description."""

    raw: dict
    vortices: VortexEnsemble
    sim: SimConfig | None = None
    theta0: SpectralField | None = None
    context: DiagnosticContext | None = None
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)


def build_initial(cfg: dict, grid: GridSpec, base_dir: Path) -> SpectralField:
    total = np.zeros((grid.n, grid.n))
    for i, term in enumerate(cfg["initial"]):
        params = {k: v for k, v in term.items() if k != "generator"}
        name = term["generator"]
        if name == "gaussian-blob":
            total += gaussian_blob(grid, **params)
        elif name == "annulus":
            total += annulus(grid, **params)
        elif name == "plateau-patch":
            total += plateau_patch(grid, **params)
        else:
            path = Path(params["path"])
            if not path.is_absolute():
                path = base_dir / path
            try:
                arr, _ = read_snapshot(path)
            except FileNotFoundError as exc:
                raise ConfigError(f"'initial[{i}].path': {exc}") from exc
            if arr.shape != (grid.n, grid.n):
                raise ConfigError(f"'initial[{i}].path': snapshot grid {arr.shape} does not match n={grid.n}")
            total += arr
    return dealias(from_physical(total, grid))


def _sim_config(cfg: dict) -> SimConfig:
    if cfg["eps"] is None:
        raise ConfigError("missing required key 'eps'")
    try:
        grid = GridSpec(cfg["grid"]["L"], cfg["grid"]["n"])
        return SimConfig(
            s=cfg["s"], eps=cfg["eps"], grid=grid, t_end=cfg["t_end"],
            galerkin_N=math.inf if cfg["galerkin_N"] is None else cfg["galerkin_N"],
            dt=cfg["dt"], cfl=cfg["cfl"], mollifier=cfg["mollifier"], delta_q=cfg["delta_q"],
            velocity_path=cfg["velocity_path"], diag_every=cfg["diag_every"],
            tol_plateau=cfg["tol_plateau"], tol_ode=cfg["vortex_only"]["tol_ode"],
            energy_k=cfg["energy_k"], sobolev_ks=tuple(cfg["sobolev_ks"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config_dict(raw: dict, base_dir=None, mode: str = "simulate") -> ParsedConfig:
    """Validate a config mapping.

    ``mode="vortex-only"`` checks only the point-vortex part; otherwise the
    scalar field is built and the physics rules are enforced: resolvable
    kernel, vortices clear of the periodic wrap, and R(0) < 1 for every
    vortex (rescale lengths otherwise).
    """
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    cfg = normalize_config(raw)
    v = cfg["vortices"]
    try:
        vortices = VortexEnsemble(v["positions"], v["intensities"], v["betas"])
    except ValueError as exc:
        raise ConfigError(f"'vortices': {exc}") from exc
    parsed = ParsedConfig(cfg, vortices, base_dir=base_dir)
    if mode == "vortex-only":
        if not 0 < cfg["s"] < 1:
            raise ConfigError(f"'s' must lie in (0, 1), got {cfg['s']}")
        return parsed
    sim = _sim_config(cfg)
    theta0 = build_initial(cfg, sim.grid, base_dir)
    try:
        theta = initial_state(sim, theta0, vortices).theta
    except SafeRegionError as exc:
        raise ConfigError(f"'vortices.positions': {exc}") from exc
    context = DiagnosticContext.from_initial(theta, vortices, sim)
    for i, R in enumerate(context.R0):
        if R >= 1:
            raise ConfigError(
                f"'vortices.positions[{i}]': plateau radius R(0)={R:.4g} >= 1; "
                "rescale lengths so every plateau radius is below one unit")
    parsed.sim, parsed.theta0, parsed.context = sim, theta0, context
    return parsed


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot (``1e-10``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"),
)


def load_config_file(path) -> tuple[dict, Path]:
    """Read a YAML config, or the ``config`` block of a run manifest (JSON)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        data = yaml.load(path.read_text(), Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from exc
    if isinstance(data, dict) and "manifest_version" in data:
        data = data["config"]
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data, path.parent


def parse_config(path, mode: str = "simulate") -> ParsedConfig:
    raw, base = load_config_file(path)
    return parse_config_dict(raw, base, mode)


# ----------------------------------------------------------------------------
# manifest


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    start_time: str
    version: str = __version__
    outputs: list = field(default_factory=list)
    reason: str = "completed"

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        body = {
            "manifest_version": 1,
            "command": self.command,
            "config_hash": self.config_hash,
            "code_version": self.version,
            "start_time": self.start_time,
            "seed": self.seed,
            "outputs": sorted(self.outputs),
            "termination_reason": self.reason,
            "config": self.config,
        }
        path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
        return path


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


# ----------------------------------------------------------------------------
# drivers


def run_simulate(parsed: ParsedConfig, out_dir, seed: int = 0) -> int:
    """Run the coupled solver; write diagnostics CSV, snapshots and manifest."""
    out = Path(out_dir)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("simulate", parsed.raw, seed, _now())
    code = EXIT_OK
    try:
        res = simulate(parsed.sim, parsed.theta0, parsed.vortices)
    except NumericalBlowupError as exc:
        log.error("%s", exc)
        res = exc.partial
        res.states.append(exc.last_valid_state)
        code = EXIT_NUMERICAL
    manifest.reason = res.reason

    if res.records:
        write_diagnostics_csv(res.records, out / "diagnostics.csv", parsed.sim.s)
        manifest.outputs.append("diagnostics.csv")
    every = parsed.raw["snapshot_every"]
    keep = [res.states[0]] + (res.states[every::every] if every > 0 else [])
    if res.states[-1] is not keep[-1]:
        keep.append(res.states[-1])
    for m, st in enumerate(keep):
        name = f"snapshots/theta_{m:04d}.bin"
        write_snapshot(out / name, st.theta, st.t, st.vortices, manifest.config_hash)
        manifest.outputs += [name, name[:-4] + ".txt"]
    manifest.outputs.append("manifest.json")
    manifest.write(out)
    log.info("simulate: %s after %d steps", res.reason, res.steps)
    return code


def run_vortex_only(parsed: ParsedConfig, out_dir, seed: int = 0) -> int:
    """Integrate the point vortices alone; writes trajectory.csv and manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("vortex-only", parsed.raw, seed, _now())
    vo = parsed.raw["vortex_only"]
    t_end = vo["t_end"] if vo["t_end"] is not None else parsed.raw["t_end"]
    code = EXIT_OK
    try:
        traj = integrate(parsed.vortices, parsed.raw["s"], t_end, vo["dt"], vo["method"], vo["tol_ode"])
        write_trajectory_csv(traj, out / "trajectory.csv")
        manifest.outputs.append("trajectory.csv")
    except NearCollapseError as exc:
        log.error("%s (min distance %g)", exc, exc.min_distance)
        manifest.reason = "vortex-collapse"
        code = EXIT_NUMERICAL
    manifest.outputs.append("manifest.json")
    manifest.write(out)
    return code


def _final_state(sim: SimConfig, theta0, vortices):
    return simulate(sim, theta0, vortices, diagnose=False, keep_states=False).final


def run_convergence(parsed: ParsedConfig, out_dir, seed: int = 0, threads: int = 1) -> int:
    """Parameter ladder against a reference run; writes rates.csv.

    error = ||theta_p - theta_ref||_L2 + sum_i |z_p,i - z_ref,i| at t_end;
    the slope is the least-squares fit of log(error) against log(value).
    """
    conv = parsed.raw.get("convergence")
    if conv is None:
        raise ConfigError("missing required key 'convergence'")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("convergence", parsed.raw, seed, _now())
    param = conv["parameter"]
    values = conv["values"]
    ref = conv["reference"]
    if ref is None:
        ref = max(values) if param == "galerkin_N" else min(values)
    ladder = sorted(set(values) | {ref})
    try:
        sims = [replace(parsed.sim, **{param: v}) for v in ladder]
    except ValueError as exc:
        raise ConfigError(f"'convergence.values': {exc}") from exc
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        finals = list(pool.map(lambda c: _final_state(c, parsed.theta0, parsed.vortices), sims))
    by_value = dict(zip(ladder, finals))
    ref_state = by_value[ref]
    grid = parsed.sim.grid
    rows = []
    for v in ladder:
        if v == ref:
            continue
        st = by_value[v]
        err = lp_norm(to_physical(st.theta - ref_state.theta), 2, grid)
        err += float(np.sum(np.hypot(*(st.vortices.positions - ref_state.vortices.positions).T)))
        rows.append((v, err))
    usable = [(v, e) for v, e in rows if e > 0]
    slope = math.nan
    if len(usable) >= 2:
        slope = float(np.polyfit(np.log([v for v, _ in usable]), np.log([e for _, e in usable]), 1)[0])
    with open(out / "rates.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["parameter", "value", "error", "fitted_slope"])
        for v, e in rows:
            w.writerow([param, repr(v), repr(e), repr(slope)])
    manifest.outputs += ["rates.csv", "manifest.json"]
    manifest.write(out)
    return EXIT_OK


# ----------------------------------------------------------------------------
# plots


def emit_plots(run_dir) -> list[Path]:
    """Heatmap per snapshot (vortices marked) and one sheet of diagnostic time series.

    Uses the Agg backend with fixed size and no software metadata, so
    repeated calls write byte-identical PNGs.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    run = Path(run_dir)
    csv_path = run / "diagnostics.csv"
    if not csv_path.exists():
        raise FileNotFoundError(f"missing artifact {csv_path}")
    header, data = read_diagnostics_csv(csv_path)
    snaps = sorted((run / "snapshots").glob("theta_*.bin"))
    if not snaps:
        raise FileNotFoundError(f"missing artifact {run / 'snapshots'}")
    plots = run / "plots"
    plots.mkdir(exist_ok=True)
    meta = {"Software": None}
    written = []
    for snap in snaps:
        arr, info = read_snapshot(snap)
        L = float(info["L"])
        fig, ax = plt.subplots(figsize=(5, 4), dpi=100)
        im = ax.imshow(arr.T, origin="lower", extent=(0, L, 0, L), cmap="RdBu_r")
        fig.colorbar(im, ax=ax)
        if info.get("vortices"):
            pts = np.array([[float(c) for c in p.split()] for p in info["vortices"].split(";")])
            ax.plot(pts[:, 0], pts[:, 1], "k+", ms=10)
        ax.set_title(f"theta, t = {float(info['t']):.4g}")
        path = plots / (snap.stem + ".png")
        fig.savefig(path, metadata=meta)
        plt.close(fig)
        written.append(path)

    cols = header[1:]
    ncol = 4
    nrow = math.ceil(len(cols) / ncol)
    fig, axes = plt.subplots(nrow, ncol, figsize=(4 * ncol, 2.6 * nrow), dpi=80, squeeze=False)
    for ax, (j, name) in zip(axes.ravel(), enumerate(cols, start=1)):
        ax.plot(data[:, 0], data[:, j], ".-")
        ax.set_title(name, fontsize=8)
        ax.tick_params(labelsize=6)
    for ax in axes.ravel()[len(cols):]:
        ax.axis("off")
    fig.tight_layout()
    path = plots / "diagnostics.png"
    fig.savefig(path, metadata=meta)
    plt.close(fig)
    written.append(path)
    return written


# ----------------------------------------------------------------------------
# invariant suite


def run_check(seed: int = 0, stream=None) -> bool:
    """Fast versions of the library invariants; prints one PASS/FAIL line each."""
    from .checks import CHECKS

    stream = stream or sys.stdout
    ok_all = True
    for name, fn in CHECKS:
        try:
            ok, detail = fn(np.random.default_rng(seed))
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        ok_all &= ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}", file=stream)
    return ok_all


# ----------------------------------------------------------------------------
# entry point


def _env(name: str, default=None):
    return os.environ.get(ENV_PREFIX + name, default)


def _u64(text: str) -> int:
    val = int(text)
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return val


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gsqgvw", description="Vortex-wave solver for gSQG active scalars")
    p.add_argument("--log-level", default=_env("LOG_LEVEL", "WARNING"))
    sub = p.add_subparsers(dest="command", required=True)
    for name, needs_config in (("simulate", True), ("vortex-only", True), ("convergence", True),
                               ("check", False), ("plot", False)):
        sp = sub.add_parser(name)
        if needs_config:
            sp.add_argument("--config", default=_env("CONFIG"), help="YAML config or run manifest")
        sp.add_argument("--out", default=_env("OUT", "run"), help="output / run directory")
        sp.add_argument("--seed", type=_u64, default=_u64(_env("SEED", "0")))
        sp.add_argument("--threads", type=int, default=int(_env("THREADS", "1")),
                        help="concurrent independent runs (0 = auto)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "check":
            return EXIT_OK if run_check(args.seed) else EXIT_CHECK
        if args.command == "plot":
            for path in emit_plots(args.out):
                print(path)
            return EXIT_OK
        if not args.config:
            raise ConfigError("no config given (use --config or GSQGVW_CONFIG)")
        mode = "vortex-only" if args.command == "vortex-only" else "simulate"
        parsed = parse_config(args.config, mode)
        if args.command == "simulate":
            return run_simulate(parsed, args.out, args.seed)
        if args.command == "vortex-only":
            return run_vortex_only(parsed, args.out, args.seed)
        return run_convergence(parsed, args.out, args.seed, args.threads)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        if str(exc) == "no samples":
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        raise
    except (NumericalBlowupError, NearCollapseError, CFLViolationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
