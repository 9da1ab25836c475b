"""
Energy, norm and singular-limit diagnostics on discrete trajectories.

Spatial norms come from the Galerkin quadratic forms: ``|v|^2 = v.Mv``,
``|v_x|^2 = v.Kv``, ``|v_xx|^2 = v.D2v`` and ``|v_xxx|^2 = v.D3v`` (broken
derivatives, so D3 vanishes for quadratic splines).
Time norms use the stored snapshots: L-infinity is the maximum over
snapshots, L2 is the trapezoidal rule.
"""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .integrators import State, Trajectory
from .models import EffectiveCoefficients
from .splines import AssembledOperators

__all__ = (
    "EnergyReport",
    "AuxiliaryState",
    "NormReport",
    "ErrorPair",
    "DegeneracyReport",
    "energy",
    "energy_history",
    "auxiliary",
    "trajectory_norms",
    "limit_errors",
    "degeneracy_report",
)


@dataclass(frozen=True)
class EnergyReport:
    t: float
    e_psit: float
    e_gradpsi: float
    e_psitt: float
    e_gradpsit: float
    e_lappsi: float

    @property
    def E(self) -> float:
        return 0.5 * (self.e_psit + self.e_gradpsi + self.e_psitt + self.e_gradpsit + self.e_lappsi)


class _Forms:
    """Batched quadratic forms over rows of a snapshot array."""

    def __init__(self, ops: AssembledOperators):
        self.M = ops.M_free
        self.K = ops.K_free
        self.D2 = ops.D2_free
        self.D3 = ops.D3_free

    @staticmethod
    def _rows(A, V):
        V = np.atleast_2d(V)
        return np.einsum("ij,ij->i", V, np.vstack([A.matvec(v) for v in V]))

    def l2(self, V):
        return self._rows(self.M, V)

    def grad(self, V):
        return self._rows(self.K, V)

    def hess(self, V):
        return self._rows(self.D2, V)

    def third(self, V):
        return self._rows(self.D3, V)

    def h1(self, V):
        return self.l2(V) + self.grad(V)

    def h2(self, V):
        return self.h1(V) + self.hess(V)

    def h3(self, V):
        return self.h2(V) + self.third(V)


def energy(state: State, ops: AssembledOperators) -> EnergyReport:
    """Addends |psi_t|^2, |psi_x|^2, |psi_tt|^2, |psi_tx|^2, |psi_xx|^2 of the energy."""
    M, K, D2 = ops.M_free, ops.K_free, ops.D2_free
    return EnergyReport(
        state.t,
        M.quadratic_form(state.psi_t),
        K.quadratic_form(state.psi),
        M.quadratic_form(state.psi_tt),
        K.quadratic_form(state.psi_t),
        D2.quadratic_form(state.psi),
    )


def energy_history(traj: Trajectory, ops: AssembledOperators) -> list[EnergyReport]:
    f = _Forms(ops)
    cols = (f.l2(traj.psi_t), f.grad(traj.psi), f.l2(traj.psi_tt), f.grad(traj.psi_t), f.hess(traj.psi))
    return [EnergyReport(float(t), *(float(c[i]) for c in cols)) for i, t in enumerate(traj.times)]


@dataclass(frozen=True)
class AuxiliaryState:
    z: np.ndarray
    z_t: np.ndarray


def auxiliary(state: State, coeffs: EffectiveCoefficients) -> AuxiliaryState:
    """z = psi_t + (c^2/b) psi and its time derivative."""
    if not coeffs.b > 0:
        raise ValueError("auxiliary state needs b = delta + tau c^2 > 0")
    r = coeffs.c2 / coeffs.b
    return AuxiliaryState(state.psi_t + r * state.psi, state.psi_tt + r * state.psi_t)


def _trapezoid(values, dt):
    values = np.asarray(values)
    if len(values) < 2:
        return 0.0
    return float(dt * (values.sum() - 0.5 * (values[0] + values[-1])))


@dataclass(frozen=True)
class NormReport:
    """
    Discrete trajectory norms (squared where the name ends in ``2``).

    ``degree_limited`` is set when the splines cannot represent third
    derivatives (degree < 3); the H^3 addend of the Kuznetsov-type norms then
    reduces to an H^2 norm.
    """
    CH1: float
    XbarW2: float
    XbarK2: float
    XW2: float
    XK2: float
    degree_limited: bool

    @property
    def XbarW(self) -> float:
        return float(np.sqrt(self.XbarW2))

    @property
    def XbarK(self) -> float:
        return float(np.sqrt(self.XbarK2))


def _norms(psi, psi_t, psi_tt, psi_ttt, dt, ops, coeffs, f=None):
    f = f or _Forms(ops)
    degree_limited = ops.basis.degree < 3
    # the auxiliary z needs b > 0; without damping the K-type norms are undefined
    r = coeffs.c2 / coeffs.b if coeffs.b > 0 else float("nan")
    tau = coeffs.tau
    ch1 = float(np.sqrt(f.h1(psi).max()))
    w1inf_h2 = float(f.h2(psi).max() + f.h2(psi_t).max())
    h1_tt = f.h1(psi_tt)
    l2h1_tt = _trapezoid(h1_tt, dt)
    xbar_w2 = l2h1_tt + w1inf_h2
    z, z_t = psi_t + r * psi, psi_tt + r * psi_t
    h1_zt = f.h1(z_t)
    xbar_k2 = _trapezoid(h1_zt, dt) + float(f.h2(z).max()) + float(f.h3(psi).max())
    xw2 = xbar_w2 + tau * float(h1_tt.max())
    xk2 = xbar_k2 + tau * float(h1_zt.max())
    if psi_ttt is not None:
        xw2 += tau * tau * _trapezoid(f.l2(psi_ttt), dt)
    return NormReport(ch1, xbar_w2, xbar_k2, xw2, xk2, degree_limited)


def trajectory_norms(traj: Trajectory, ops: AssembledOperators,
                     coeffs: EffectiveCoefficients) -> NormReport:
    """C([0,T];H^1), X-bar and tau-weighted X norms of a trajectory."""
    return _norms(traj.psi, traj.psi_t, traj.psi_tt, traj.psi_ttt, traj.snapshot_dt, ops, coeffs)


@dataclass(frozen=True)
class ErrorPair:
    error_ch1: float
    error_xbarw: float
    error_xbark: float


def _check_compatible(a: Trajectory, b: Trajectory):
    if a.psi.shape != b.psi.shape:
        raise ValueError(f"trajectory shapes differ: {a.psi.shape} vs {b.psi.shape}")
    if a.stride != b.stride or not np.allclose(a.times, b.times, rtol=1e-12, atol=0.0):
        raise ValueError("trajectories are stored on different time grids")


def limit_errors(traj_tau: Trajectory, traj_baseline: Trajectory, ops: AssembledOperators,
                 coeffs: EffectiveCoefficients) -> ErrorPair:
    """
    Relative distance of a tau > 0 trajectory to the tau = 0 baseline.

    The X-bar-K error uses ``c^2/b`` from ``coeffs`` (the tau > 0 run) for
    both the difference and the baseline norm.
    """
    _check_compatible(traj_tau, traj_baseline)
    f = _Forms(ops)
    dt = traj_tau.snapshot_dt
    diff = _norms(traj_tau.psi - traj_baseline.psi, traj_tau.psi_t - traj_baseline.psi_t,
                  traj_tau.psi_tt - traj_baseline.psi_tt, None, dt, ops, coeffs, f)
    base = _norms(traj_baseline.psi, traj_baseline.psi_t, traj_baseline.psi_tt, None, dt,
                  ops, coeffs, f)

    def rel(num, den):
        return num / den if den > 0 else (0.0 if num == 0 else float("inf"))

    return ErrorPair(rel(diff.CH1, base.CH1), rel(diff.XbarW, base.XbarW),
                     rel(diff.XbarK, base.XbarK))


@dataclass(frozen=True)
class DegeneracyReport:
    times: np.ndarray
    min_alpha: np.ndarray
    min_gamma: np.ndarray

    @property
    def global_min_alpha(self) -> float:
        return float(self.min_alpha.min())

    @property
    def global_min_gamma(self) -> float:
        return float(self.min_gamma.min())


def degeneracy_report(traj: Trajectory) -> DegeneracyReport:
    times = traj.times[0] + traj.dt * np.arange(len(traj.min_alpha))
    return DegeneracyReport(times, traj.min_alpha.copy(), traj.min_gamma.copy())


def field_names(cls) -> list[str]:
    return [f.name for f in fields(cls)]
