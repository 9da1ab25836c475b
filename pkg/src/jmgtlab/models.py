"""
Model equations in acoustic velocity potential form.

All four models are advanced in the common quasilinear form::

    tau psi_ttt + (1 - k psi_t) psi_tt - c^2 psi_xx - b psi_txx
        = 2 sigma psi_x psi_tx + f

with ``b = delta + tau c^2``. Westervelt-type models have ``sigma = 0`` and
``k = 2 beta_a / c^2``; Kuznetsov-type models have ``sigma = 1`` and
``k = (2 / c^2) B/(2A)``. The classical equations are the ``tau = 0`` members.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError
from .splines import QuadratureGrid, SplineBasis, assemble_load, interpolate


class ModelKind(enum.Enum):
    WESTERVELT = "westervelt"
    KUZNETSOV = "kuznetsov"
    JMGT_WESTERVELT = "jmgt-westervelt"
    JMGT_KUZNETSOV = "jmgt-kuznetsov"

    @property
    def third_order(self) -> bool:
        return self in (ModelKind.JMGT_WESTERVELT, ModelKind.JMGT_KUZNETSOV)

    @property
    def kuznetsov_type(self) -> bool:
        return self in (ModelKind.KUZNETSOV, ModelKind.JMGT_KUZNETSOV)

    @property
    def limit(self) -> "ModelKind":
        """The classical equation recovered as tau -> 0."""
        return ModelKind.KUZNETSOV if self.kuznetsov_type else ModelKind.WESTERVELT

    @classmethod
    def parse(cls, name: str) -> "ModelKind":
        key = name.strip().lower().replace("_", "-")
        for kind in cls:
            if kind.value == key:
                return kind
        raise ConfigError(f"unknown model {name!r}; expected one of "
                          + ", ".join(k.value for k in cls))


@dataclass(frozen=True)
class MediumParams:
    c: float
    delta: float
    rho0: float
    B_over_A: float

    def __post_init__(self):
        for name in ("c", "rho0"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"medium parameter {name} must be positive")
        if not self.delta >= 0:
            raise ConfigError("sound diffusivity delta must be nonnegative")


WATER = MediumParams(c=1500.0, delta=6e-9, rho0=1000.0, B_over_A=5.0)


@dataclass(frozen=True)
class EffectiveCoefficients:
    c: float
    delta: float
    tau: float
    b: float
    k: float
    beta_a: float
    sigma: int

    @property
    def c2(self) -> float:
        return self.c * self.c

    @property
    def linear(self) -> bool:
        return self.k == 0.0 and self.sigma == 0


def derive_coefficients(medium: MediumParams, kind: ModelKind, tau: float = 0.0,
                        nonlinear: bool = True) -> EffectiveCoefficients:
    """
    Effective coefficients of ``kind`` in the quasilinear form.

    ``nonlinear=False`` zeroes ``k`` and ``sigma`` (the linearized equation).
    """
    tau = float(tau)
    if kind.third_order and not tau > 0:
        raise ConfigError(f"{kind.value} requires tau > 0, got {tau}")
    if not kind.third_order and tau != 0.0:
        raise ConfigError(f"{kind.value} requires tau = 0, got {tau}")
    c2 = medium.c * medium.c
    b = medium.delta + tau * c2
    beta_a = 1.0 + 0.5 * medium.B_over_A
    if kind.kuznetsov_type:
        k = 2.0 / c2 * (0.5 * medium.B_over_A)
        sigma = 1
    else:
        k = 2.0 * beta_a / c2
        sigma = 0
    coeffs = EffectiveCoefficients(medium.c, medium.delta, tau, b, k, beta_a, sigma)
    return coeffs if nonlinear else linearize(coeffs)


def linearize(coeffs: EffectiveCoefficients) -> EffectiveCoefficients:
    return replace(coeffs, k=0.0, sigma=0)


def alpha_field(coeffs: EffectiveCoefficients, psi_t):
    """Quasilinear coefficient alpha = 1 - k psi_t and critical parameter gamma = alpha - tau c^2 / b."""
    alpha = 1.0 - coeffs.k * np.asarray(psi_t, dtype=float)
    shift = coeffs.tau * coeffs.c2 / coeffs.b if coeffs.tau > 0 else 0.0
    gamma = alpha - shift
    return alpha, gamma


def nonlinear_rhs(coeffs: EffectiveCoefficients, psi_x, psi_tx, grid: QuadratureGrid) -> np.ndarray:
    """Load vector of 2 sigma psi_x psi_tx tested against every basis function (full DOFs)."""
    if coeffs.sigma == 0:
        return np.zeros(grid.basis.n_dof)
    return assemble_load(grid, 2.0 * coeffs.sigma * np.asarray(psi_x) * np.asarray(psi_tx))


@dataclass(frozen=True)
class ForcingSpec:
    """Space-time source f(x, t); ``None`` means no forcing."""
    fun: Optional[Callable[[np.ndarray, float], np.ndarray]] = None

    @property
    def active(self) -> bool:
        return self.fun is not None


def forcing_load(spec: ForcingSpec, t: float, grid: QuadratureGrid) -> np.ndarray:
    if not spec.active:
        return np.zeros(grid.basis.n_dof)
    values = np.broadcast_to(spec.fun(grid.x, t), grid.shape)
    return assemble_load(grid, values)


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class InitialData:
    """Initial potential, its rate, and its second rate as functions of x."""
    psi0: Callable = _zero
    psi1: Callable = _zero
    psi2: Callable = _zero

    @classmethod
    def gaussian_pressure(cls, amplitude=8e4, center=0.1, width=0.01) -> "InitialData":
        """Zero potential driven by a Gaussian initial rate (pressure / rho0)."""
        def psi1(x):
            x = np.asarray(x, dtype=float)
            return amplitude * np.exp(-(x - center) ** 2 / (2.0 * width ** 2))
        return cls(psi1=psi1)


def project_initial_data(basis: SplineBasis, data: InitialData):
    """
    Spline coefficients of (psi0, psi1, psi2) on the free DOFs.

    Each function is interpolated at the Greville abscissae and the two
    Dirichlet coefficients are dropped.
    """
    return tuple(interpolate(basis, f)[1:-1] for f in (data.psi0, data.psi1, data.psi2))
