"""Small shared numerical helpers: branch-safe square roots, guarded solves,
Gauss-Legendre panels."""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg
from scipy.linalg import LinAlgWarning


def principal_sqrt(values) -> np.ndarray:
    """Principal complex square root with a guard against negative-zero
    imaginary parts.

    For values on the negative real axis this returns +i*sqrt(|v|) even when
    floating-point cancellation produced -0.0j, so propagating modes always
    land on the upper imaginary axis.
    """
    v = np.asarray(values, dtype=complex)
    v = np.where(v.imag == 0.0, v.real + 0.0j, v)
    return np.sqrt(v)


def solve_with_cond(matrix: np.ndarray, rhs: np.ndarray, cond_limit: float,
                    context: str) -> np.ndarray:
    """Solve ``matrix @ x = rhs`` and raise ``ArithmeticError`` if the 1-norm
    condition estimate exceeds ``cond_limit``."""
    with warnings.catch_warnings():
        # exact singularity is reported through the condition check below
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(matrix)
    cond = cond_estimate_from_lu(matrix, lu)
    if cond > cond_limit:
        raise ArithmeticError(
            f"{context}: condition estimate {cond:.3e} exceeds {cond_limit:.1e}")
    return scipy.linalg.lu_solve((lu, piv), rhs)


def cond_estimate_from_lu(matrix: np.ndarray, lu: np.ndarray) -> float:
    """Cheap 1-norm condition estimate from an existing LU factorization."""
    gecon = scipy.linalg.get_lapack_funcs("gecon", (lu,))
    anorm = np.linalg.norm(matrix, 1)
    rcond, _ = gecon(lu, anorm, norm="1")
    if rcond <= 0.0:
        return np.inf
    return 1.0 / rcond


class LUSolver:
    """Reusable LU factorization with a lazily computed condition estimate."""

    def __init__(self, matrix: np.ndarray):
        self.matrix = matrix
        self._factors = scipy.linalg.lu_factor(matrix)
        self._cond: float | None = None

    @property
    def cond(self) -> float:
        if self._cond is None:
            self._cond = cond_estimate_from_lu(self.matrix, self._factors[0])
        return self._cond

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return scipy.linalg.lu_solve(self._factors, rhs)


def gauss_panels(breakpoints: np.ndarray, order: int = 8):
    """Gauss-Legendre nodes and weights on each interval of ``breakpoints``.

    Returns ``(nodes, weights)`` flattened over panels; zero-width panels
    contribute nothing.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    a = np.asarray(breakpoints[:-1], dtype=float)
    b = np.asarray(breakpoints[1:], dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def merge_breakpoints(*arrays, tol: float) -> np.ndarray:
    """Sorted union of breakpoint arrays, collapsing points closer than tol."""
    pts = np.sort(np.concatenate([np.asarray(a, dtype=float) for a in arrays]))
    keep = [pts[0]]
    for p in pts[1:]:
        if p - keep[-1] > tol:
            keep.append(p)
    return np.asarray(keep)
