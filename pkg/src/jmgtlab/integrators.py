"""
Newmark time stepping for the semidiscrete models.

Second-order models use the classical Newmark relations with the highest
derivative ``psi_tt`` as unknown; the third-order (JMGT) models use the
three-relation extension with the jerk ``psi_ttt`` as unknown. The
quasilinear coefficient and the gradient nonlinearity are resolved by a
fixed-point (Picard) corrector loop around a predictor built from the
step-n Taylor terms.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import banded
from .banded import BandedMatrix, combine
from .errors import ConfigError, ConvergenceError, DegeneracyError
from .models import (EffectiveCoefficients, ForcingSpec, alpha_field,
                     forcing_load, nonlinear_rhs)
from .splines import AssembledOperators, assemble_weighted_mass

log = logging.getLogger(__name__)

ABS_INCREMENT_FLOOR = 1e-14


@dataclass(frozen=True)
class NewmarkParams:
    beta: float
    gamma_nm: float
    eta: Optional[float] = None


AVERAGE_ACCELERATION_2 = NewmarkParams(0.25, 0.5)
AVERAGE_ACCELERATION_3 = NewmarkParams(1.0 / 12.0, 0.25, 0.5)


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    n_steps: int

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"time step must be positive, got {self.dt}")
        if self.n_steps < 0:
            raise ConfigError("n_steps must be nonnegative")

    @classmethod
    def from_final_time(cls, final_time: float, n_steps: int) -> "TimeGrid":
        return cls(final_time / n_steps, int(n_steps))

    @property
    def T(self) -> float:
        return self.dt * self.n_steps


@dataclass(frozen=True)
class FixedPointSettings:
    tol: float = 1e-8
    max_iter: int = 50

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError("fixed-point tolerance must be positive")


@dataclass(frozen=True)
class State:
    t: float
    psi: np.ndarray
    psi_t: np.ndarray
    psi_tt: np.ndarray
    psi_ttt: Optional[np.ndarray] = None

    @property
    def third_order(self) -> bool:
        return self.psi_ttt is not None


@dataclass(frozen=True)
class StepInfo:
    iterations: int
    min_alpha: float
    min_gamma: float


class SemiDiscreteSystem:
    """
    Galerkin system on the free DOFs for fixed model coefficients.

    Holds the assembled operators and evaluates the solution-dependent
    pieces (weighted mass, nonlinear and source loads) at quadrature points.
    """

    def __init__(self, operators: AssembledOperators, coeffs: EffectiveCoefficients,
                 forcing: ForcingSpec = ForcingSpec(), third_order: Optional[bool] = None):
        self.ops = operators
        self.coeffs = coeffs
        self.forcing = forcing
        self.third_order = coeffs.tau > 0 if third_order is None else third_order
        if self.third_order and not coeffs.tau > 0:
            raise ConfigError("third-order model requires tau > 0")
        self.grid = operators.grid
        self.M = operators.M_free
        self.K = operators.K_free
        self._lo, self._hi = 1, operators.basis.n_dof - 1
        self._cache = {}

    @property
    def n(self) -> int:
        return self.ops.n_free

    @property
    def affine(self) -> bool:
        return self.coeffs.linear

    def weighted_mass(self, psi_t, t=None):
        """Free-DOF matrix of alpha(psi_t) phi_i phi_j and the (alpha, gamma) fields."""
        if self.coeffs.k == 0.0:
            alpha, gamma = alpha_field(self.coeffs, np.zeros(self.grid.shape))
            return self.M, alpha, gamma
        psi_t_q = self.grid.at_points(self.ops.extend(psi_t))
        alpha, gamma = alpha_field(self.coeffs, psi_t_q)
        min_alpha = float(alpha.min())
        if not min_alpha > 0.0:
            raise DegeneracyError(min_alpha, t)
        Ma = assemble_weighted_mass(self.grid, alpha).restrict(self._lo, self._hi)
        return Ma, alpha, gamma

    def load(self, psi, psi_t, t) -> np.ndarray:
        """Right-hand side 2 sigma psi_x psi_tx + f on the free DOFs."""
        out = np.zeros(self.n)
        if self.coeffs.sigma:
            psi_x = self.grid.at_points(self.ops.extend(psi), 1)
            psi_tx = self.grid.at_points(self.ops.extend(psi_t), 1)
            out += nonlinear_rhs(self.coeffs, psi_x, psi_tx, self.grid)[self._lo:self._hi]
        if self.forcing.active:
            out += forcing_load(self.forcing, t, self.grid)[self._lo:self._hi]
        return out

    def factor_cached(self, key, build: Callable[[], BandedMatrix]):
        """Factorization reused across steps; only valid for affine systems."""
        F = self._cache.get(key)
        if F is None:
            F = banded.factor(build())
            self._cache[key] = F
        return F

    def degeneracy(self, psi_t):
        alpha, gamma = alpha_field(self.coeffs, self.grid.at_points(self.ops.extend(psi_t)))
        return float(alpha.min()), float(gamma.min())


def fixed_point_solve(update: Callable[[np.ndarray], np.ndarray], x0, fp: FixedPointSettings,
                      affine: bool = False, t=None):
    """
    Iterate ``x <- update(x)`` until the relative l2 increment drops below ``fp.tol``.

    An affine ``update`` is exact after one application and is not iterated.

    Returns
    -------
    x : ndarray
        Converged iterate.
    iterations : int
        Number of applications of ``update``.
    """
    if fp.max_iter < 1:
        raise ConvergenceError(float("inf"), 0, t)
    x = np.asarray(x0, dtype=float)
    rel = float("inf")
    for it in range(1, fp.max_iter + 1):
        x_new = update(x)
        if affine:
            return x_new, 1
        inc = float(np.linalg.norm(x_new - x))
        scale = float(np.linalg.norm(x_new))
        x = x_new
        rel = inc / scale if scale > 0 else (0.0 if inc == 0 else float("inf"))
        if inc <= fp.tol * scale or inc <= ABS_INCREMENT_FLOOR:
            return x, it
    raise ConvergenceError(rel, fp.max_iter, t)


def initialize_state(system: SemiDiscreteSystem, psi0, psi1, psi2=None, t0: float = 0.0) -> State:
    """
    Complete the initial state from the equation at t = t0.

    Second-order models solve for psi_tt(0) (``psi2`` is ignored); third-order
    models take psi_tt(0) = psi2 and solve for psi_ttt(0).
    """
    co = system.coeffs
    n = system.n
    psi0 = np.asarray(psi0, dtype=float)
    psi1 = np.asarray(psi1, dtype=float)
    psi2 = np.zeros(n) if psi2 is None else np.asarray(psi2, dtype=float)
    Ma, _, _ = system.weighted_mass(psi1, t0)
    rhs = system.load(psi0, psi1, t0) - co.c2 * system.K.matvec(psi0) - co.b * system.K.matvec(psi1)
    if not system.third_order:
        a0 = banded.solve(banded.factor(Ma), rhs)
        return State(t0, psi0.copy(), psi1.copy(), a0)
    rhs = rhs - Ma.matvec(psi2)
    j0 = banded.solve(banded.factor(co.tau * system.M), rhs)
    return State(t0, psi0.copy(), psi1.copy(), psi2.copy(), j0)


def newmark2_step(system: SemiDiscreteSystem, state: State, dt: float,
                  params: NewmarkParams = AVERAGE_ACCELERATION_2,
                  fp: FixedPointSettings = FixedPointSettings()):
    """
    One Newmark step for ``alpha psi_tt + c^2 K psi + b K psi_t = load``.

    Returns the new state and a :class:`StepInfo`.
    """
    if system.third_order:
        raise ConfigError("newmark2_step applies to second-order models")
    co = system.coeffs
    beta, gam = params.beta, params.gamma_nm
    t1 = state.t + dt
    a_n = state.psi_tt
    psi_pred = state.psi + dt * state.psi_t + 0.5 * dt * dt * (1.0 - 2.0 * beta) * a_n
    v_pred = state.psi_t + dt * (1.0 - gam) * a_n
    lin = co.c2 * system.K.matvec(psi_pred) + co.b * system.K.matvec(v_pred)
    stiff = combine((beta * dt * dt * co.c2 + gam * dt * co.b, system.K))

    if system.affine:
        F = system.factor_cached(("nm2", dt, beta, gam), lambda: system.M + stiff)
        rhs_fixed = -lin
        if system.forcing.active:
            rhs_fixed = rhs_fixed + system.load(psi_pred, v_pred, t1)

        def update(a):
            return banded.solve(F, rhs_fixed)
    else:
        def update(a):
            psi = psi_pred + beta * dt * dt * a
            v = v_pred + gam * dt * a
            Ma, _, _ = system.weighted_mass(v, t1)
            rhs = system.load(psi, v, t1) - lin
            return banded.solve(banded.factor(Ma + stiff), rhs)

    a1, iters = fixed_point_solve(update, a_n, fp, affine=system.affine, t=t1)
    psi1 = psi_pred + beta * dt * dt * a1
    v1 = v_pred + gam * dt * a1
    min_alpha, min_gamma = system.degeneracy(v1)
    if not min_alpha > 0.0:
        raise DegeneracyError(min_alpha, t1)
    return State(t1, psi1, v1, a1), StepInfo(iters, min_alpha, min_gamma)


def newmark3_step(system: SemiDiscreteSystem, state: State, dt: float,
                  params: NewmarkParams = AVERAGE_ACCELERATION_3,
                  fp: FixedPointSettings = FixedPointSettings()):
    """
    One step of the third-order Newmark extension for
    ``tau M psi_ttt + M(alpha) psi_tt + c^2 K psi + b K psi_t = load``.

    The effective matrix is tau M + eta dt M(alpha) + gamma dt^2 b K + beta dt^3 c^2 K.
    """
    if not system.third_order:
        raise ConfigError("newmark3_step applies to third-order models")
    co = system.coeffs
    if not co.tau > 0:
        raise ConfigError("newmark3_step requires tau > 0")
    beta, gam, eta = params.beta, params.gamma_nm, params.eta
    t1 = state.t + dt
    j_n = state.psi_ttt
    dt2, dt3 = dt * dt, dt * dt * dt
    psi_pred = (state.psi + dt * state.psi_t + 0.5 * dt2 * state.psi_tt
                + dt3 / 6.0 * (1.0 - 6.0 * beta) * j_n)
    v_pred = state.psi_t + dt * state.psi_tt + 0.5 * dt2 * (1.0 - 2.0 * gam) * j_n
    a_pred = state.psi_tt + dt * (1.0 - eta) * j_n
    lin = co.c2 * system.K.matvec(psi_pred) + co.b * system.K.matvec(v_pred)
    stiff = combine((gam * dt2 * co.b + beta * dt3 * co.c2, system.K))

    if system.affine:
        F = system.factor_cached(("nm3", dt, beta, gam, eta),
                                 lambda: combine((co.tau + eta * dt, system.M), (1.0, stiff)))
        rhs_fixed = -lin - system.M.matvec(a_pred)
        if system.forcing.active:
            rhs_fixed = rhs_fixed + system.load(psi_pred, v_pred, t1)

        def update(j):
            return banded.solve(F, rhs_fixed)
    else:
        def update(j):
            psi = psi_pred + beta * dt3 * j
            v = v_pred + gam * dt2 * j
            Ma, _, _ = system.weighted_mass(v, t1)
            A = combine((co.tau, system.M), (eta * dt, Ma), (1.0, stiff))
            rhs = system.load(psi, v, t1) - lin - Ma.matvec(a_pred)
            return banded.solve(banded.factor(A), rhs)

    j1, iters = fixed_point_solve(update, j_n, fp, affine=system.affine, t=t1)
    psi1 = psi_pred + beta * dt3 * j1
    v1 = v_pred + gam * dt2 * j1
    a1 = a_pred + eta * dt * j1
    min_alpha, min_gamma = system.degeneracy(v1)
    if not min_alpha > 0.0:
        raise DegeneracyError(min_alpha, t1)
    return State(t1, psi1, v1, a1, j1), StepInfo(iters, min_alpha, min_gamma)


@dataclass
class Trajectory:
    """Stored snapshots (every ``stride`` steps) of a time march on the free DOFs."""
    dt: float
    stride: int
    times: np.ndarray
    psi: np.ndarray
    psi_t: np.ndarray
    psi_tt: np.ndarray
    psi_ttt: Optional[np.ndarray]
    iterations: np.ndarray
    min_alpha: np.ndarray
    min_gamma: np.ndarray

    @property
    def n_snapshots(self) -> int:
        return len(self.times)

    @property
    def snapshot_dt(self) -> float:
        return self.dt * self.stride

    def state(self, i: int) -> State:
        jerk = None if self.psi_ttt is None else self.psi_ttt[i]
        return State(float(self.times[i]), self.psi[i], self.psi_t[i], self.psi_tt[i], jerk)

    @property
    def final(self) -> State:
        return self.state(-1)


def march(system: SemiDiscreteSystem, state0: State, grid: TimeGrid,
          params: Optional[NewmarkParams] = None, fp: FixedPointSettings = FixedPointSettings(),
          stride: int = 1, on_step: Optional[Callable[[int, State, StepInfo], None]] = None) -> Trajectory:
    """Advance ``state0`` over ``grid`` with the integrator matching the model order."""
    if stride < 1 or grid.n_steps % stride:
        raise ConfigError(f"stride {stride} must divide n_steps {grid.n_steps}")
    if system.third_order:
        step, params = newmark3_step, params or AVERAGE_ACCELERATION_3
    else:
        step, params = newmark2_step, params or AVERAGE_ACCELERATION_2
    n_snap = grid.n_steps // stride + 1
    n = system.n
    store = {name: np.zeros((n_snap, n)) for name in ("psi", "psi_t", "psi_tt")}
    jerk = np.zeros((n_snap, n)) if system.third_order else None
    times = np.zeros(n_snap)
    iterations = np.zeros(grid.n_steps, dtype=int)
    min_alpha = np.zeros(grid.n_steps + 1)
    min_gamma = np.zeros(grid.n_steps + 1)

    def record(slot, s):
        times[slot] = s.t
        store["psi"][slot] = s.psi
        store["psi_t"][slot] = s.psi_t
        store["psi_tt"][slot] = s.psi_tt
        if jerk is not None:
            jerk[slot] = s.psi_ttt

    state = state0
    min_alpha[0], min_gamma[0] = system.degeneracy(state.psi_t)
    record(0, state)
    for n_step in range(1, grid.n_steps + 1):
        state, info = step(system, state, grid.dt, params, fp)
        # re-anchor the clock to avoid drift from repeated addition
        state = replace(state, t=state0.t + n_step * grid.dt)
        iterations[n_step - 1] = info.iterations
        min_alpha[n_step] = info.min_alpha
        min_gamma[n_step] = info.min_gamma
        if n_step % stride == 0:
            record(n_step // stride, state)
        if on_step is not None:
            on_step(n_step, state, info)
    log.debug("march done: %d steps, mean %.2f fixed-point iterations",
              grid.n_steps, iterations.mean() if len(iterations) else 0.0)
    return Trajectory(grid.dt, stride, times, store["psi"], store["psi_t"], store["psi_tt"],
                      jerk, iterations, min_alpha, min_gamma)
