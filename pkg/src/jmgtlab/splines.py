"""
Uniform clamped B-spline spaces on an interval and Galerkin assembly.

Basis evaluation follows the Cox-de Boor recursion with derivatives
(Algorithms A2.2/A2.3 in Piegl & Tiller, *The NURBS Book*). Operators are
stored in symmetric upper-banded form, see :mod:`jmgtlab.banded`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .banded import BandedMatrix

__all__ = (
    "SplineBasis",
    "QuadratureRule",
    "QuadratureGrid",
    "AssembledOperators",
    "build_basis",
    "find_span",
    "basis_funs_ders",
    "evaluate_basis",
    "gauss_legendre",
    "tabulate",
    "assemble",
    "assemble_weighted_mass",
    "assemble_load",
    "interpolate",
    "evaluate_field",
)


@dataclass(frozen=True)
class SplineBasis:
    degree: int
    knots: np.ndarray
    n_elements: int
    domain: tuple[float, float]

    @property
    def n_dof(self) -> int:
        return len(self.knots) - self.degree - 1

    @property
    def length(self) -> float:
        return self.domain[1] - self.domain[0]

    @property
    def h(self) -> float:
        return self.length / self.n_elements

    @property
    def breakpoints(self) -> np.ndarray:
        return self.knots[self.degree:len(self.knots) - self.degree]

    def greville(self) -> np.ndarray:
        """Greville abscissae (knot averages), one per basis function."""
        p = self.degree
        t = self.knots
        g = np.array([t[i + 1:i + p + 1].mean() for i in range(self.n_dof)])
        # averaging repeated end knots can overshoot the domain by one ulp
        return np.clip(g, *self.domain)


def build_basis(degree: int, n_elements: int, domain=(0.0, 1.0)) -> SplineBasis:
    """
    Uniform open (clamped) knot vector of maximal smoothness C^{p-1}.

    Parameters
    ----------
    degree : int
        Polynomial degree p >= 1.
    n_elements : int
        Number of knot spans.
    domain : (float, float)
        Interval [a, b] with a < b.

    Returns
    -------
    SplineBasis
        Space with ``n_elements + degree`` basis functions.
    """
    degree = int(degree)
    n_elements = int(n_elements)
    a, b = float(domain[0]), float(domain[1])
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")
    if n_elements < 1:
        raise ValueError(f"n_elements must be >= 1, got {n_elements}")
    if not (np.isfinite(a) and np.isfinite(b)) or not b > a:
        raise ValueError(f"degenerate domain [{a}, {b}]")
    inner = np.linspace(a, b, n_elements + 1)
    knots = np.concatenate([np.full(degree, a), inner, np.full(degree, b)])
    return SplineBasis(degree, knots, n_elements, (a, b))


def find_span(basis: SplineBasis, x: float) -> int:
    """Element index e such that x lies in [x_e, x_{e+1}] (right end maps to last)."""
    a, b = basis.domain
    if not a <= x <= b:
        raise ValueError(f"x={x} outside domain [{a}, {b}]")
    e = int(np.floor((x - a) / basis.h))
    return min(max(e, 0), basis.n_elements - 1)


def basis_funs_ders(knots, degree, span, x, n):
    """
    Nonzero basis functions and their derivatives up to order n at x.

    ``span`` is the knot index i with knots[i] <= x < knots[i+1]. Returns an
    array of shape (n+1, degree+1); row k holds the k-th derivatives of the
    functions N_{span-p}, ..., N_{span}.
    """
    p = degree
    n_req, n = n, min(n, degree)
    ndu = np.zeros((p + 1, p + 1))
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = x - knots[span + 1 - j]
        right[j] = knots[span + j] - x
        saved = 0.0
        for r in range(j):
            # lower triangle holds knot differences
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((n + 1, p + 1))
    ders[0] = ndu[:, p]
    a = np.zeros((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, n + 1):
            d = 0.0
            rk = r - k
            pk = p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    fac = p
    for k in range(1, n + 1):
        ders[k] *= fac
        fac *= p - k
    if n_req > n:
        ders = np.vstack([ders, np.zeros((n_req - n, p + 1))])
    return ders


def evaluate_basis(basis: SplineBasis, x: float, n_derivs: int = 2):
    """
    Active basis functions at x.

    Returns
    -------
    indices : ndarray of int, shape (p+1,)
        Global indices of the active functions.
    values, first, second : ndarray, shape (p+1,)
        Values and first/second derivatives with respect to x. Derivatives
        above the degree are identically zero.
    """
    x = float(x)
    e = find_span(basis, x)
    p = basis.degree
    ders = basis_funs_ders(basis.knots, p, e + p, x, max(n_derivs, 2))
    indices = np.arange(e, e + p + 1)
    return indices, ders[0], ders[1], ders[2]


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray

    @property
    def exactness(self) -> int:
        return 2 * len(self.points) - 1


def gauss_legendre(n_points: int) -> QuadratureRule:
    """Gauss-Legendre rule mapped to the reference element [0, 1]."""
    xi, w = np.polynomial.legendre.leggauss(n_points)
    return QuadratureRule(0.5 * (xi + 1.0), 0.5 * w)


@dataclass(frozen=True)
class QuadratureGrid:
    """
    Basis functions tabulated at all quadrature points.

    Arrays are indexed (element, point, local function). Element e touches
    the global functions e, ..., e+p.
    """
    basis: SplineBasis
    rule: QuadratureRule
    x: np.ndarray
    w: np.ndarray
    B0: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    B3: np.ndarray
    connectivity: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return self.x.shape

    def at_points(self, coeffs, order=0):
        """Values (order 0..3) of the spline with full coefficients ``coeffs`` at the points."""
        B = (self.B0, self.B1, self.B2, self.B3)[order]
        return np.einsum("eqa,ea->eq", B, np.asarray(coeffs)[self.connectivity])


def tabulate(basis: SplineBasis, rule: QuadratureRule) -> QuadratureGrid:
    p = basis.degree
    n_el = basis.n_elements
    nq = len(rule.points)
    h = basis.h
    a = basis.domain[0]
    x = a + h * (np.arange(n_el)[:, None] + rule.points[None, :])
    w = np.broadcast_to(h * rule.weights, (n_el, nq)).copy()
    B = np.zeros((4, n_el, nq, p + 1))
    for e in range(n_el):
        for q in range(nq):
            B[:, e, q, :] = basis_funs_ders(basis.knots, p, e + p, x[e, q], 3)
    conn = np.arange(n_el)[:, None] + np.arange(p + 1)[None, :]
    return QuadratureGrid(basis, rule, x, w, B[0], B[1], B[2], B[3], conn)


def _scatter_matrix(grid: QuadratureGrid, local: np.ndarray) -> BandedMatrix:
    p = grid.basis.degree
    n = grid.basis.n_dof
    n_el = grid.basis.n_elements
    ab = np.zeros((p + 1, n))
    for i in range(p + 1):
        for j in range(i, p + 1):
            # entry (e+i, e+j) sits at row p+i-j, column e+j
            ab[p + i - j, j:j + n_el] += local[:, i, j]
    return BandedMatrix(ab)


def assemble_weighted_mass(grid: QuadratureGrid, weight) -> BandedMatrix:
    """Banded matrix of integrals of weight * phi_i * phi_j over the domain."""
    weight = np.asarray(weight, dtype=float)
    if weight.shape != grid.shape:
        raise ValueError(
            f"weight field has shape {weight.shape}, expected {grid.shape}")
    local = np.einsum("eq,eqa,eqb->eab", weight * grid.w, grid.B0, grid.B0)
    return _scatter_matrix(grid, local)


def assemble_load(grid: QuadratureGrid, values) -> np.ndarray:
    """Load vector of integrals of values * phi_i (values given at quadrature points)."""
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise ValueError(f"field has shape {values.shape}, expected {grid.shape}")
    local = np.einsum("eq,eqa->ea", values * grid.w, grid.B0)
    out = np.zeros(grid.basis.n_dof)
    p = grid.basis.degree
    n_el = grid.basis.n_elements
    for a in range(p + 1):
        out[a:a + n_el] += local[:, a]
    return out


@dataclass(frozen=True)
class AssembledOperators:
    """
    Mass, stiffness and broken second- and third-derivative Gram matrices.

    ``D3`` vanishes for degree < 3. ``M``, ``K``, ``D2`` and ``D3`` act on the full coefficient vector; the
    ``*_free`` variants have the two Dirichlet DOFs removed.
    """
    grid: QuadratureGrid
    M: BandedMatrix
    K: BandedMatrix
    D2: BandedMatrix
    D3: BandedMatrix
    free: np.ndarray

    @property
    def basis(self) -> SplineBasis:
        return self.grid.basis

    @property
    def n_free(self) -> int:
        return len(self.free)

    @property
    def M_free(self) -> BandedMatrix:
        return self.M.restrict(1, self.basis.n_dof - 1)

    @property
    def K_free(self) -> BandedMatrix:
        return self.K.restrict(1, self.basis.n_dof - 1)

    @property
    def D2_free(self) -> BandedMatrix:
        return self.D2.restrict(1, self.basis.n_dof - 1)

    @property
    def D3_free(self) -> BandedMatrix:
        return self.D3.restrict(1, self.basis.n_dof - 1)

    def extend(self, u_free) -> np.ndarray:
        """Full coefficient vector with zero Dirichlet values."""
        u = np.zeros(self.basis.n_dof)
        u[self.free] = u_free
        return u


def assemble(basis: SplineBasis, rule: QuadratureRule | None = None) -> AssembledOperators:
    """Assemble M, K, D2 and D3 element by element; the default rule has p+1 points."""
    if rule is None:
        rule = gauss_legendre(basis.degree + 1)
    if rule.exactness < 2 * basis.degree:
        raise ValueError(
            f"quadrature exact to degree {rule.exactness}, need {2 * basis.degree}")
    grid = tabulate(basis, rule)
    M = _scatter_matrix(grid, np.einsum("eq,eqa,eqb->eab", grid.w, grid.B0, grid.B0))
    K = _scatter_matrix(grid, np.einsum("eq,eqa,eqb->eab", grid.w, grid.B1, grid.B1))
    D2 = _scatter_matrix(grid, np.einsum("eq,eqa,eqb->eab", grid.w, grid.B2, grid.B2))
    D3 = _scatter_matrix(grid, np.einsum("eq,eqa,eqb->eab", grid.w, grid.B3, grid.B3))
    free = np.arange(1, basis.n_dof - 1)
    return AssembledOperators(grid, M, K, D2, D3, free)


def evaluate_field(basis: SplineBasis, coeffs, x, order=0) -> np.ndarray:
    """Evaluate the spline (or a derivative of it) at the points x."""
    coeffs = np.asarray(coeffs, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(len(x))
    for i, xi in enumerate(x):
        idx, *ders = evaluate_basis(basis, xi)
        out[i] = ders[order] @ coeffs[idx]
    return out


def interpolate(basis: SplineBasis, fun) -> np.ndarray:
    """Coefficients of the spline interpolating ``fun`` at the Greville abscissae."""
    xg = basis.greville()
    C = np.zeros((basis.n_dof, basis.n_dof))
    for r, xr in enumerate(xg):
        idx, vals, _, _ = evaluate_basis(basis, xr)
        C[r, idx] = vals
    return np.linalg.solve(C, np.asarray(fun(xg), dtype=float))
