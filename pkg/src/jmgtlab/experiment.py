"""
Simulation configs, presets, single runs, tau sweeps and CSV output.

Config files are INI files; section names are only for grouping, every key
is unique across sections (see README for the schema)::

    [simulation]
    preset = paper-fig1
    model = jmgt-westervelt
    tau = 1e-7

    [initial]
    amplitude = 1.2e5
"""
from __future__ import annotations

import configparser
import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .diagnostics import (DegeneracyReport, EnergyReport, ErrorPair, degeneracy_report,
                          energy_history, limit_errors)
from .errors import ConfigError, NumericalFailure
from .integrators import (FixedPointSettings, SemiDiscreteSystem, TimeGrid, Trajectory,
                          initialize_state, march)
from .models import (WATER, InitialData, MediumParams, ModelKind, derive_coefficients,
                     project_initial_data)
from .splines import assemble, build_basis, evaluate_field

log = logging.getLogger(__name__)

OUTPUT_ENV = "JMGTLAB_OUTPUT_DIR"

# Nominal amplitude of the Gaussian initial rate, and the amplitude at which the
# reference figure curves are reproduced (see README, "Presets").
NOMINAL_AMPLITUDE = 8e4
FIGURE_AMPLITUDE = 1.2e5

# tau_m = 1e-10 + m * 2e-8 s, m = 0..49; contains every plotted point.
FIG2_TAU_GRID = tuple(1e-10 + m * 2e-8 for m in range(49, -1, -1))

# Quarter points of the 800-step grid (steps 0, 200, 400, 600, 800).
FIG1_SNAPSHOTS = (0.0, 11.25e-6, 22.5e-6, 33.75e-6, 45e-6)

SNAPSHOT_HEADER = ("x", "pressure_pa")
ENERGY_HEADER = ("t", "E", "e_psit", "e_gradpsi", "e_psitt", "e_gradpsit", "e_lappsi")
SWEEP_HEADER = ("tau_s", "error_ch1", "error_xbarw")


@dataclass(frozen=True)
class InitialSpec:
    """
    ``gaussian``: psi1 = amplitude exp(-(x - center)^2 / (2 width^2)), psi0 = psi2 = 0.
    ``mode``: psi0 = amplitude sin(mode pi x / l), psi1 = 0, psi2 = -c^2 (mode pi / l)^2 psi0.
    ``zero``: all zero.
    """
    kind: str = "gaussian"
    amplitude: float = FIGURE_AMPLITUDE
    center: float = 0.1
    width: float = 0.01
    mode: int = 1

    def build(self, length: float, c: float) -> InitialData:
        if self.kind == "gaussian":
            return InitialData.gaussian_pressure(self.amplitude, self.center, self.width)
        if self.kind == "mode":
            kx = self.mode * math.pi / length
            A = self.amplitude
            return InitialData(psi0=lambda x: A * np.sin(kx * np.asarray(x)),
                               psi2=lambda x: -(c * kx) ** 2 * A * np.sin(kx * np.asarray(x)))
        if self.kind == "zero":
            return InitialData()
        raise ConfigError(f"unknown initial data preset {self.kind!r}")


@dataclass(frozen=True)
class SimConfig:
    model: ModelKind = ModelKind.JMGT_WESTERVELT
    medium: MediumParams = WATER
    tau: float = 1e-7
    nonlinear: bool = True
    n_elements: int = 249
    degree: int = 2
    length: float = 0.2
    n_steps: int = 800
    final_time: float = 45e-6
    initial: InitialSpec = InitialSpec()
    fixed_point: FixedPointSettings = FixedPointSettings()
    stride: int = 1
    snapshot_times: tuple = (45e-6,)
    n_samples: int = 252
    taus: tuple = ()

    def validate(self) -> "SimConfig":
        derive_coefficients(self.medium, self.model, self.tau, self.nonlinear)
        if self.n_steps < 1 or self.n_elements < 1 or self.degree < 1:
            raise ConfigError("n_steps, n_elements and degree must be positive")
        if not self.final_time > 0 or not self.length > 0:
            raise ConfigError("final_time and length must be positive")
        if self.stride < 1 or self.n_steps % self.stride:
            raise ConfigError(f"stride {self.stride} must divide n_steps {self.n_steps}")
        for t in self.snapshot_times:
            self.snapshot_index(t)
        if self.n_samples < 2:
            raise ConfigError("n_samples must be at least 2")
        return self

    @property
    def time_grid(self) -> TimeGrid:
        return TimeGrid.from_final_time(self.final_time, self.n_steps)

    def snapshot_index(self, t: float) -> int:
        """Index into the stored snapshots for time t (must fall on a stored step)."""
        dt = self.final_time / self.n_steps
        step = int(round(t / dt))
        if not 0 <= step <= self.n_steps or abs(step * dt - t) > 1e-9 * self.final_time:
            raise ConfigError(f"snapshot time {t} is not on the time grid")
        if step % self.stride:
            raise ConfigError(f"snapshot time {t} is not a stored step (stride {self.stride})")
        return step // self.stride

    def with_tau(self, tau: float) -> "SimConfig":
        model = self.model
        if tau == 0 and model.third_order:
            model = model.limit
        return replace(self, tau=tau, model=model)


PRESETS = {
    "paper-fig1": dict(model="jmgt-westervelt", tau=1e-7, amplitude=FIGURE_AMPLITUDE,
                       snapshot_times=FIG1_SNAPSHOTS),
    "paper-fig2": dict(model="jmgt-westervelt", tau=FIG2_TAU_GRID[0],
                       amplitude=FIGURE_AMPLITUDE, taus=FIG2_TAU_GRID),
    "nominal": dict(model="jmgt-westervelt", tau=1e-7, amplitude=NOMINAL_AMPLITUDE,
                    snapshot_times=FIG1_SNAPSHOTS),
}

_FLOAT_KEYS = {"tau", "length", "final_time", "c", "delta", "rho0", "B_over_A",
               "amplitude", "center", "width", "tol"}
_INT_KEYS = {"n_elements", "degree", "n_steps", "stride", "n_samples", "mode", "max_iter"}
_LIST_KEYS = {"snapshot_times", "taus"}
_KNOWN = _FLOAT_KEYS | _INT_KEYS | _LIST_KEYS | {"model", "nonlinear", "initial", "preset"}


def _coerce(key, value):
    if not isinstance(value, str):
        return value
    try:
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _INT_KEYS:
            return int(value)
        if key in _LIST_KEYS:
            return tuple(float(v) for v in value.replace(";", ",").split(",") if v.strip())
        if key == "nonlinear":
            return value.strip().lower() in ("1", "true", "yes", "on")
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return value.strip()


def build_config(settings: dict) -> SimConfig:
    """SimConfig from a flat key/value mapping; a ``preset`` key is applied first."""
    settings = dict(settings)
    unknown = set(settings) - _KNOWN
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    merged = {}
    preset = settings.pop("preset", None)
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; known: {', '.join(PRESETS)}")
        merged.update(PRESETS[preset])
    merged.update(settings)
    s = {k: _coerce(k, v) for k, v in merged.items()}

    medium = MediumParams(
        c=s.get("c", WATER.c), delta=s.get("delta", WATER.delta),
        rho0=s.get("rho0", WATER.rho0), B_over_A=s.get("B_over_A", WATER.B_over_A))
    initial = InitialSpec(
        kind=s.get("initial", "gaussian"), amplitude=s.get("amplitude", FIGURE_AMPLITUDE),
        center=s.get("center", 0.1), width=s.get("width", 0.01), mode=s.get("mode", 1))
    fp = FixedPointSettings(tol=s.get("tol", 1e-8), max_iter=s.get("max_iter", 50))
    final_time = s.get("final_time", 45e-6)
    cfg = SimConfig(
        model=ModelKind.parse(s.get("model", "jmgt-westervelt")),
        medium=medium,
        tau=s.get("tau", 1e-7),
        nonlinear=s.get("nonlinear", True),
        n_elements=s.get("n_elements", 249),
        degree=s.get("degree", 2),
        length=s.get("length", 0.2),
        n_steps=s.get("n_steps", 800),
        final_time=final_time,
        initial=initial,
        fixed_point=fp,
        stride=s.get("stride", 1),
        snapshot_times=s.get("snapshot_times", (final_time,)),
        n_samples=s.get("n_samples", 252),
        taus=s.get("taus", ()),
    )
    return cfg.validate()


def read_config_file(path) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    flat = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            if key in flat:
                raise ConfigError(f"key {key!r} given twice in {path}")
            flat[key] = value
    return flat


def load_config(path=None, preset=None, overrides: Optional[dict] = None) -> SimConfig:
    settings = {}
    if preset:
        settings["preset"] = preset
    if path:
        settings.update(read_config_file(path))
    settings.update(overrides or {})
    return build_config(settings)


# -- runs ---------------------------------------------------------------------

@dataclass
class SimulationResult:
    config: SimConfig
    basis: object
    operators: object
    coeffs: object
    trajectory: Trajectory
    energies: list[EnergyReport]
    degeneracy: DegeneracyReport

    def sample_points(self) -> np.ndarray:
        return np.linspace(0.0, self.config.length, self.config.n_samples)

    def pressure(self, t: float):
        """(x, pressure in Pa) at a stored time, pressure = rho0 psi_t."""
        i = self.config.snapshot_index(t)
        x = self.sample_points()
        u = self.operators.extend(self.trajectory.psi_t[i])
        return x, self.config.medium.rho0 * evaluate_field(self.basis, u, x)

    def peak_pressure(self, t: Optional[float] = None, resolution: int = 20001):
        """Location and value of the maximum pressure on a fine sampling."""
        t = self.config.final_time if t is None else t
        i = self.config.snapshot_index(t)
        x = np.linspace(0.0, self.config.length, resolution)
        p = self.config.medium.rho0 * evaluate_field(
            self.basis, self.operators.extend(self.trajectory.psi_t[i]), x)
        j = int(np.argmax(p))
        return float(x[j]), float(p[j])


def _discretization(cfg: SimConfig):
    basis = build_basis(cfg.degree, cfg.n_elements, (0.0, cfg.length))
    return basis, assemble(basis)


def run_simulation(cfg: SimConfig, discretization=None) -> SimulationResult:
    """Assemble, initialize and march one configuration."""
    cfg.validate()
    basis, ops = discretization or _discretization(cfg)
    coeffs = derive_coefficients(cfg.medium, cfg.model, cfg.tau, cfg.nonlinear)
    system = SemiDiscreteSystem(ops, coeffs, third_order=cfg.model.third_order)
    data = cfg.initial.build(cfg.length, cfg.medium.c)
    psi0, psi1, psi2 = project_initial_data(basis, data)
    state0 = initialize_state(system, psi0, psi1, psi2)
    traj = march(system, state0, cfg.time_grid, fp=cfg.fixed_point, stride=cfg.stride)
    log.info("%s tau=%.4g: mean %.2f fixed-point iterations, min alpha %.4f, min gamma %.4g",
             cfg.model.value, cfg.tau, traj.iterations.mean(), traj.min_alpha.min(),
             traj.min_gamma.min())
    return SimulationResult(cfg, basis, ops, coeffs, traj, energy_history(traj, ops),
                            degeneracy_report(traj))


# -- tau sweep ----------------------------------------------------------------

class SweepError(NumericalFailure):
    def __init__(self, tau, cause):
        super().__init__(f"sweep member tau={tau:.6g} failed: {cause}")
        self.tau = tau
        self.cause = cause


@dataclass(frozen=True)
class SweepConfig:
    base: SimConfig
    taus: tuple

    @property
    def baseline_model(self) -> ModelKind:
        return self.base.model.limit

    def validate(self) -> "SweepConfig":
        if not self.base.model.third_order:
            raise ConfigError("sweep base model must be a JMGT model")
        if not self.taus:
            raise ConfigError("nothing to sweep: empty tau list")
        if any(not t > 0 for t in self.taus):
            raise ConfigError("sweep taus must be positive")
        return self


@dataclass(frozen=True)
class SweepRow:
    tau: float
    errors: ErrorPair


_WORKER_BASELINE = {}


def _init_worker(baseline: Trajectory):
    _WORKER_BASELINE["traj"] = baseline


def _sweep_member(cfg: SimConfig, baseline: Optional[Trajectory] = None, discretization=None):
    baseline = baseline if baseline is not None else _WORKER_BASELINE["traj"]
    try:
        res = run_simulation(cfg, discretization)
    except NumericalFailure as exc:
        raise SweepError(cfg.tau, exc) from exc
    return limit_errors(res.trajectory, baseline, res.operators, res.coeffs)


def sweep_tau(sweep: SweepConfig, jobs: int = 1) -> list[SweepRow]:
    """
    One baseline (tau = 0) solve and one JMGT solve per tau.

    Rows come back in the configured tau order regardless of ``jobs``.
    """
    sweep.validate()
    base_cfg = replace(sweep.base, model=sweep.baseline_model, tau=0.0)
    disc = _discretization(sweep.base)
    baseline = run_simulation(base_cfg, disc).trajectory
    taus = list(sweep.taus)
    members = [replace(sweep.base, tau=t) for t in taus]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                                 initargs=(baseline,)) as pool:
            errors = list(pool.map(_sweep_member, members))
    else:
        errors = [_sweep_member(m, baseline, disc) for m in members]
    return [SweepRow(t, e) for t, e in zip(taus, errors)]


# -- CSV ----------------------------------------------------------------------

def _fmt(v) -> str:
    return f"{float(v):.17g}"


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "output"))


def write_simulation(result: SimulationResult, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    cfg = result.config
    written = []
    for t in cfg.snapshot_times:
        step = cfg.snapshot_index(t) * cfg.stride
        x, p = result.pressure(t)
        written.append(write_csv(out_dir / f"snapshot_step{step:06d}.csv", SNAPSHOT_HEADER,
                                 zip(x, p)))
    written.append(write_csv(out_dir / "energy.csv", ENERGY_HEADER,
                             ((e.t, e.E, e.e_psit, e.e_gradpsi, e.e_psitt, e.e_gradpsit,
                               e.e_lappsi) for e in result.energies)))
    d = result.degeneracy
    written.append(write_csv(out_dir / "degeneracy.csv", ("t", "min_alpha", "min_gamma"),
                             zip(d.times, d.min_alpha, d.min_gamma)))
    return written


def write_sweep(rows: Sequence[SweepRow], out_dir) -> Path:
    return write_csv(Path(out_dir) / "sweep.csv", SWEEP_HEADER,
                     ((r.tau, r.errors.error_ch1, r.errors.error_xbarw) for r in rows))
