"""
Reference solutions that do not go through the time integrators.

* Single Dirichlet modes of the linear equations, solved exactly from the
  roots of the characteristic polynomial
  ``tau s^3 + s^2 + b lam s + c^2 lam`` (or ``s^2 + delta lam s + c^2 lam``).
* Manufactured solutions ``psi = A sin(pi x / l) T(t)`` with forcing derived
  by hand for the full quasilinear equation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .models import EffectiveCoefficients
from .splines import AssembledOperators

CONFLUENCE_RTOL = 1e-6


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class ModalProblem:
    """
    Mode ``m`` of the Dirichlet Laplacian on [0, length] with modal data (a0, a1, a2).

    For ``tau == 0`` the equation is second order, ``b`` plays the role of the
    diffusivity delta, and ``a2`` is ignored. ``lam`` overrides the exact
    eigenvalue (m pi / length)^2, e.g. with a Galerkin eigenvalue.
    """
    m: int
    length: float
    c: float
    b: float
    tau: float = 0.0
    a0: float = 1.0
    a1: float = 0.0
    a2: float = 0.0
    lam: float | None = None

    @property
    def eigenvalue(self) -> float:
        if self.lam is not None:
            return self.lam
        return (self.m * math.pi / self.length) ** 2

    @property
    def order(self) -> int:
        return 3 if self.tau > 0 else 2

    def polynomial(self) -> np.ndarray:
        """Characteristic polynomial coefficients, highest degree first."""
        lam = self.eigenvalue
        if self.order == 3:
            return np.array([self.tau, 1.0, self.b * lam, self.c ** 2 * lam])
        return np.array([1.0, self.b * lam, self.c ** 2 * lam])


def _quadratic_roots(a, b, c):
    """Roots of a s^2 + b s + c without cancellation."""
    disc = complex(b * b - 4.0 * a * c)
    sq = np.sqrt(disc)
    if b.real * sq.real + b.imag * sq.imag < 0:
        sq = -sq
    q = -0.5 * (b + sq)
    if q == 0:
        return np.array([0j, 0j])
    return np.array([q / a, c / q])


def _polish(coeffs, s, iterations=4):
    dp = np.polyder(coeffs)
    for _ in range(iterations):
        d = np.polyval(dp, s)
        if d == 0:
            break
        step = np.polyval(coeffs, s) / d
        s = s - step
        if abs(step) <= 1e-16 * abs(s):
            break
    return s


def _real_root(coeffs):
    """Real root of a cubic with positive coefficients, by bisection then Newton."""
    a3 = coeffs[0]
    bound = 1.0 + max(abs(c / a3) for c in coeffs[1:])
    lo, hi = -bound, 0.0
    # p(0) > 0, p(-bound) < 0
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if np.polyval(coeffs, mid) > 0:
            hi = mid
        else:
            lo = mid
    return float(_polish(coeffs, 0.5 * (lo + hi)).real)


def characteristic_roots(problem: ModalProblem) -> np.ndarray:
    """All roots (complex) of the modal characteristic polynomial."""
    coeffs = problem.polynomial()
    if problem.order == 2:
        roots = _quadratic_roots(*[complex(c) for c in coeffs])
    else:
        r = _real_root(coeffs)
        # deflate: p(s) = (s - r)(q2 s^2 + q1 s + q0)
        q2 = coeffs[0]
        q1 = coeffs[1] + r * q2
        q0 = coeffs[2] + r * q1
        pair = _quadratic_roots(complex(q2), complex(q1), complex(q0))
        roots = np.array([complex(r), *pair])
    ccoeffs = coeffs.astype(complex)
    return np.array([_polish(ccoeffs, s) for s in roots])


def check_vieta(problem: ModalProblem, roots=None, rtol=1e-10) -> tuple[float, float]:
    """Relative defects of the root sum and root product identities."""
    roots = characteristic_roots(problem) if roots is None else roots
    coeffs = problem.polynomial()
    n = len(coeffs) - 1
    exp_sum = -coeffs[1] / coeffs[0]
    exp_prod = (-1) ** n * coeffs[-1] / coeffs[0]
    d_sum = abs(roots.sum() - exp_sum) / abs(exp_sum)
    d_prod = abs(np.prod(roots) - exp_prod) / abs(exp_prod)
    return float(d_sum), float(d_prod)


class ModalSolution:
    """Exact time history a(t) = sum_i c_i exp(s_i t) of one mode."""

    def __init__(self, problem: ModalProblem):
        self.problem = problem
        s = characteristic_roots(problem)
        scale = np.abs(s).max()
        for i in range(len(s)):
            for j in range(i + 1, len(s)):
                if abs(s[i] - s[j]) < CONFLUENCE_RTOL * scale:
                    raise OracleError(f"near-confluent roots {s[i]} and {s[j]}")
        n = len(s)
        data = np.array([problem.a0, problem.a1, problem.a2][:n], dtype=complex)
        # scaled Vandermonde system for the amplitudes
        V = np.array([(s / scale) ** k for k in range(n)])
        rhs = data / scale ** np.arange(n)
        self.roots = s
        self.amplitudes = np.linalg.solve(V, rhs)

    def derivative(self, t, k: int = 0):
        t = np.asarray(t, dtype=float)
        e = np.exp(np.multiply.outer(t, self.roots))
        return np.real(e @ (self.amplitudes * self.roots ** k))

    def __call__(self, t):
        """(a, a', a'') at t."""
        return tuple(self.derivative(t, k) for k in range(3))

    def residual(self, t) -> np.ndarray:
        """Modal ODE residual divided by the magnitude of its largest term."""
        p = self.problem
        lam = p.eigenvalue
        terms = [p.c ** 2 * lam * self.derivative(t, 0), p.b * lam * self.derivative(t, 1),
                 self.derivative(t, 2)]
        if p.order == 3:
            terms.append(p.tau * self.derivative(t, 3))
        terms = np.array(terms)
        return np.abs(terms.sum(axis=0)) / np.abs(terms).max(axis=0)


def modal_solution(problem: ModalProblem, t):
    return ModalSolution(problem)(t)


def galerkin_mode(ops: AssembledOperators, m: int = 1):
    """
    m-th generalized eigenpair of (K, M) on the free DOFs.

    The eigenvector is M-normalized and signed to have a positive mean.
    """
    K = ops.K_free.to_dense()
    M = ops.M_free.to_dense()
    w, V = scipy.linalg.eigh(K, M, subset_by_index=[m - 1, m - 1])
    v = V[:, 0]
    if v.sum() < 0:
        v = -v
    return float(w[0]), v


# -- manufactured solutions ---------------------------------------------------

@dataclass(frozen=True)
class ManufacturedCase:
    name: str
    psi: Callable
    psi_t: Callable
    psi_tt: Callable
    psi_ttt: Callable
    forcing: Callable


def _time_profile(name, rate):
    if name == "sine-t2":
        return (lambda t: t ** 2, lambda t: 2 * t, lambda t: 2.0 + 0 * t, lambda t: 0.0 * t)
    if name == "sine-t3":
        return (lambda t: t ** 3, lambda t: 3 * t ** 2, lambda t: 6 * t, lambda t: 6.0 + 0 * t)
    if name == "sine-exp":
        r = rate
        return (lambda t: np.exp(-r * t), lambda t: -r * np.exp(-r * t),
                lambda t: r ** 2 * np.exp(-r * t), lambda t: -r ** 3 * np.exp(-r * t))
    if name == "zero":
        z = lambda t: 0.0 * t  # noqa: E731
        return (z, z, z, z)
    raise OracleError(f"unknown manufactured case {name!r}")


CATALOG = ("zero", "sine-t2", "sine-t3", "sine-exp")


def manufactured_case(name: str, coeffs: EffectiveCoefficients, length: float,
                      amplitude: float = 1.0, rate: float = 1.0) -> ManufacturedCase:
    """
    Exact solution ``amplitude * sin(pi x / l) * T(t)`` and its forcing.

    With X = amplitude sin(kx), X'' = -k^2 X, substituting into the quasilinear
    equation gives::

        f = tau X T''' + (1 - k_nl X T') X T'' + c^2 k^2 X T + b k^2 X T'
            - 2 sigma X'^2 T T'
    """
    T, Tt, Ttt, Tttt = _time_profile(name, rate)
    kx = math.pi / length
    tau, c2, b, knl, sigma = coeffs.tau, coeffs.c2, coeffs.b, coeffs.k, coeffs.sigma

    def X(x):
        return amplitude * np.sin(kx * np.asarray(x, dtype=float))

    def Xx(x):
        return amplitude * kx * np.cos(kx * np.asarray(x, dtype=float))

    def forcing(x, t):
        xv = X(x)
        return (tau * xv * Tttt(t) + (1.0 - knl * xv * Tt(t)) * xv * Ttt(t)
                + c2 * kx ** 2 * xv * T(t) + b * kx ** 2 * xv * Tt(t)
                - 2.0 * sigma * Xx(x) ** 2 * T(t) * Tt(t))

    return ManufacturedCase(
        name,
        psi=lambda x, t: X(x) * T(t),
        psi_t=lambda x, t: X(x) * Tt(t),
        psi_tt=lambda x, t: X(x) * Ttt(t),
        psi_ttt=lambda x, t: X(x) * Tttt(t),
        forcing=forcing,
    )
