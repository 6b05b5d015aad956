"""Univariate cubic B-spline fitting: the classical baseline for the
parameter-efficiency comparison.

Knots are clamped and uniform over the sampled range.  Fitting solves a
penalized least-squares problem in one shot:

    min_c  (1/N) ||y - B c||^2  +  S * mean(d_i^2)

where d_i are the second divided differences of the coefficients taken at
the Greville abscissae.  Divided (not plain) differences make the penalty's
null space exactly the straight lines, so S -> infinity recovers the
ordinary linear fit; S is the "smoothness" knob quoted in comparisons.
Parameter count is the number of coefficients; knots are not counted.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

DEFAULT_DEGREE = 3


def clamped_uniform_knots(lo: float, hi: float, n_coeffs: int,
                          degree: int = DEFAULT_DEGREE) -> np.ndarray:
    """Knot vector with (degree+1)-fold endpoints and uniform interior;
    length = n_coeffs + degree + 1."""
    if not lo < hi:
        raise ValueError(f"empty span [{lo}, {hi}]")
    n_interior = n_coeffs - degree - 1
    if n_interior < 0:
        raise ValueError(f"n_coeffs={n_coeffs} needs at least degree+1={degree + 1}")
    interior = np.linspace(lo, hi, n_interior + 2)[1:-1]
    return np.concatenate([np.full(degree + 1, lo), interior, np.full(degree + 1, hi)])


def basis_eval(knots, degree: int, i: int, x: float) -> float:
    """Cox-de Boor value of basis function ``i`` at scalar ``x``.

    Zero outside the knot span by convention; the right endpoint belongs to
    the last interval so the basis sums to one on the closed domain.
    """
    knots = np.asarray(knots, dtype=np.float64)
    if not 0 <= i < len(knots) - degree - 1:
        raise IndexError(f"basis index {i} out of range")
    return float(_basis_matrix(knots, degree, np.array([float(x)]))[0, i])


def _basis_matrix(knots: np.ndarray, degree: int, xs: np.ndarray) -> np.ndarray:
    """(len(xs), n_basis) Cox-de Boor design matrix, vectorized over xs."""
    n_basis = len(knots) - degree - 1
    xs = np.asarray(xs, dtype=np.float64)
    # degree 0: half-open interval indicators, closed at the global right end
    B = np.zeros((xs.size, len(knots) - 1))
    for j in range(len(knots) - 1):
        left, right = knots[j], knots[j + 1]
        hit = (xs >= left) & (xs < right)
        if right == knots[-1]:
            hit |= (xs == right) & (left < right)
        B[:, j] = hit
    for d in range(1, degree + 1):
        nb = len(knots) - d - 1
        nxt = np.zeros((xs.size, nb))
        for j in range(nb):
            den1 = knots[j + d] - knots[j]
            den2 = knots[j + d + 1] - knots[j + 1]
            term = 0.0
            if den1 > 0:
                term = (xs - knots[j]) / den1 * B[:, j]
            if den2 > 0:
                term = term + (knots[j + d + 1] - xs) / den2 * B[:, j + 1]
            nxt[:, j] = term
        B = nxt
    return B[:, :n_basis]


def greville_abscissae(knots: np.ndarray, degree: int) -> np.ndarray:
    n_basis = len(knots) - degree - 1
    return np.array([knots[i + 1:i + 1 + degree].mean() for i in range(n_basis)])


def _second_divdiff_matrix(xi: np.ndarray) -> np.ndarray:
    """Rows map coefficients to second divided differences over sites xi."""
    n = xi.size
    D = np.zeros((max(n - 2, 0), n))
    for r in range(n - 2):
        h1 = xi[r + 1] - xi[r]
        h2 = xi[r + 2] - xi[r + 1]
        span = xi[r + 2] - xi[r]
        D[r, r] = 1.0 / (h1 * span)
        D[r, r + 1] = -(1.0 / h1 + 1.0 / h2) / span
        D[r, r + 2] = 1.0 / (h2 * span)
    return D


@dataclass
class BSplineModel:
    degree: int
    knots: np.ndarray
    coeffs: np.ndarray
    smoothness: float

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=np.float64)
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if np.any(np.diff(self.knots) < 0):
            raise ValueError("knot vector must be non-decreasing")
        want = len(self.knots) - self.degree - 1
        if self.coeffs.size != want:
            raise ValueError(
                f"{self.coeffs.size} coefficients for {len(self.knots)} knots; "
                f"expected {want}")

    @property
    def param_count(self) -> int:
        return self.coeffs.size

    def predict(self, xs) -> np.ndarray:
        """Spline value; zero outside the knot span (basis convention)."""
        xs = np.asarray(xs, dtype=np.float64)
        return _basis_matrix(self.knots, self.degree, np.atleast_1d(xs)) @ self.coeffs


def fit(samples, n_coeffs: int, S: float,
        degree: int = DEFAULT_DEGREE) -> BSplineModel:
    """Penalized least-squares spline through ``samples`` = (x, y).

    Solved by normal equations; a singular system falls back to a tiny ridge
    with a warning.  ``S`` is the smoothness weight described in the module
    docstring; 0 disables the penalty.
    """
    x, y = samples
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.size != y.size:
        raise ValueError(f"{x.size} x values vs {y.size} y values")
    if n_coeffs < degree + 1:
        raise ValueError(f"n_coeffs must be >= degree+1 = {degree + 1}")
    if x.size < n_coeffs:
        raise ValueError(f"{x.size} samples cannot determine {n_coeffs} coefficients")
    if S < 0:
        raise ValueError("smoothness weight must be >= 0")
    knots = clamped_uniform_knots(x.min(), x.max(), n_coeffs, degree)
    B = _basis_matrix(knots, degree, x)
    N = x.size
    A = B.T @ B / N
    rhs = B.T @ y / N
    if S > 0 and n_coeffs > 2:
        D = _second_divdiff_matrix(greville_abscissae(knots, degree))
        A = A + (S / D.shape[0]) * (D.T @ D)
    try:
        coeffs = np.linalg.solve(A, rhs)
        ok = np.all(np.isfinite(coeffs))
    except np.linalg.LinAlgError:
        ok = False
    if not ok:
        warnings.warn("normal equations are singular; adding a small ridge",
                      RuntimeWarning, stacklevel=2)
        ridge = 1e-10 * max(np.trace(A) / n_coeffs, 1.0)
        coeffs = np.linalg.solve(A + ridge * np.eye(n_coeffs), rhs)
    return BSplineModel(degree=degree, knots=knots, coeffs=coeffs, smoothness=S)
