"""Per-slice modal operator: coupling matrix of the second-order ODE system
and its eigendecomposition, plus evaluation of the general solution inside a
slice.

Within a slice of thickness t the truncated Fourier coefficient vector u(z)
of the field satisfies u'' = A u with

    A = E^{-1} (K_x E K_x - kappa^2 I),

E the Toeplitz factor built from the coefficients of 1/eps_h and
K_x = diag(alpha_n). Writing A = W diag(gamma^2) W^{-1} with Re(gamma) >= 0,
the general solution splits into an ascending family exp(+gamma z) and a
descending family exp(-gamma z).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._linalg import LUSolver, principal_sqrt
from .fourier import ToeplitzFactor, inv_eps_fourier, toeplitz_assemble, toeplitz_factor
from .problem import CrossSection, ModeBasis

EINV_COND_WARN = 1e12
EIGVEC_COND_WARN = 1e8


class SliceSolverError(RuntimeError):
    pass


def build_A(e_inv: ToeplitzFactor, basis: ModeBasis, kappa: float,
            label: object = None) -> np.ndarray:
    """Coupling matrix A = E^{-1} (K_x E K_x - kappa^2 I) of the modal ODE."""
    n = e_inv.shape[0]
    kx = basis.alpha
    rhs = (kx[:, None] * e_inv) * kx[None, :] - kappa**2 * np.eye(n)
    try:
        solver = LUSolver(e_inv)
        if solver.cond > EINV_COND_WARN:
            warnings.warn(
                f"Toeplitz factor nearly singular in slice {label!r} "
                f"(cond ~ {solver.cond:.2e})", RuntimeWarning, stacklevel=2)
        return solver.solve(rhs)
    except np.linalg.LinAlgError as exc:
        raise SliceSolverError(f"singular Toeplitz factor in slice {label!r}") from exc


def eigensolve(A: np.ndarray, label: object = None) -> tuple[np.ndarray, np.ndarray]:
    """Dense non-Hermitian eigendecomposition of A, deterministic layout.

    Returns (W, gamma) with gamma_i = sqrt(lambda_i) on the branch
    Re(gamma) >= 0, ties broken toward Im(gamma) >= 0. Eigenpairs are sorted
    lexicographically by (Re gamma, Im gamma) and each eigenvector is scaled
    by its largest-modulus entry, so results do not depend on LAPACK ordering
    or thread count.
    """
    try:
        lam, vecs = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise SliceSolverError(f"eigensolver failed to converge in slice {label!r}") from exc
    gamma = principal_sqrt(lam)
    order = np.lexsort((gamma.imag, gamma.real))
    gamma = gamma[order]
    vecs = vecs[:, order]
    pivots = np.argmax(np.abs(vecs), axis=0)
    vecs = vecs / vecs[pivots, np.arange(vecs.shape[1])]
    cond = np.linalg.cond(vecs)
    if cond > EIGVEC_COND_WARN:
        warnings.warn(
            f"nearly defective coupling matrix in slice {label!r} "
            f"(eigenvector cond ~ {cond:.2e}); proceeding",
            RuntimeWarning, stacklevel=2)
    return vecs, gamma


@dataclass(frozen=True)
class SliceOperator:
    """Everything needed to evaluate fields in one slice.

    ``v = e_inv @ w @ diag(gamma)`` maps modal amplitudes to the conormal
    quantity E u' whose continuity is matched across slice boundaries.
    """

    e_inv: ToeplitzFactor
    w: np.ndarray
    gamma: np.ndarray
    v: np.ndarray
    thickness: float
    label: object = None

    @cached_property
    def w_solver(self) -> LUSolver:
        return LUSolver(self.w)

    @cached_property
    def v_solver(self) -> LUSolver:
        return LUSolver(self.v)

    @property
    def decay(self) -> np.ndarray:
        """Face-to-face factors exp(-gamma * thickness), all of modulus <= 1."""
        return np.exp(-self.gamma * self.thickness)


def make_slice_operator(cross: CrossSection, basis: ModeBasis, thickness: float,
                        rule: str = "laurent", label: object = None) -> SliceOperator:
    """Factor one slice: Fourier coefficients, coupling matrix, eigenpairs."""
    if thickness < 0:
        raise SliceSolverError("slice thickness must be non-negative")
    e_inv = toeplitz_factor(cross, basis.order, rule=rule)
    A = build_A(e_inv, basis, basis.kappa, label=label)
    w, gamma = eigensolve(A, label=label)
    v = e_inv @ (w * gamma[None, :])
    return SliceOperator(e_inv=e_inv, w=w, gamma=gamma, v=v,
                         thickness=thickness, label=label)


def uniform_slice_operator(eps: complex, basis: ModeBasis, thickness: float,
                           label: object = None) -> SliceOperator:
    """Analytic operator for a laterally uniform slice (diagonal A).

    gamma matches the eigensolve branch exactly; no eigensolver involved.
    """
    n = basis.size
    e_inv = np.eye(n, dtype=complex) / eps
    gamma = principal_sqrt(basis.alpha**2 - basis.kappa**2 * complex(eps))
    w = np.eye(n, dtype=complex)
    v = e_inv @ (w * gamma[None, :])
    return SliceOperator(e_inv=e_inv, w=w, gamma=gamma, v=v,
                         thickness=thickness, label=label)


@dataclass(frozen=True)
class ModalAmplitudes:
    """Overflow-safe amplitudes of the two exponential families in a slice.

    ``a`` multiplies the ascending family exp(+gamma z) and is stored as its
    coefficient at the TOP face; ``b`` multiplies the descending family
    exp(-gamma z), stored at the BOTTOM face. Every exponential evaluated
    inside the slice then has a non-positive real exponent, so evanescent
    factors never overflow regardless of slice thickness.
    """

    a: np.ndarray
    b: np.ndarray


def slice_field(op: SliceOperator, amps: ModalAmplitudes,
                x2_local: float) -> tuple[np.ndarray, np.ndarray]:
    """Modal field vector u and conormal vector E u' at height x2_local.

    x2_local is measured from the bottom face; 0 <= x2_local <= thickness.
    """
    t = op.thickness
    if not (-1e-12 <= x2_local <= t + 1e-12):
        raise SliceSolverError(
            f"x2_local={x2_local} outside slice of thickness {t}")
    ea = np.exp(-op.gamma * (t - x2_local)) * amps.a
    eb = np.exp(-op.gamma * x2_local) * amps.b
    u = op.w @ (ea + eb)
    conormal = op.v @ (ea - eb)
    return u, conormal


def slice_field_batch(op: SliceOperator, amps: ModalAmplitudes,
                      x2_local: np.ndarray,
                      derivative: bool = False) -> np.ndarray:
    """Vectorized slice_field over many heights.

    Returns an array of shape (len(x2_local), 2M+1) holding u, or du/dx2
    when ``derivative`` is set.
    """
    z = np.asarray(x2_local, dtype=float)
    ea = np.exp(-np.outer(op.thickness - z, op.gamma)) * amps.a[None, :]
    eb = np.exp(-np.outer(z, op.gamma)) * amps.b[None, :]
    if derivative:
        return (ea * op.gamma[None, :] - eb * op.gamma[None, :]) @ op.w.T
    return (ea + eb) @ op.w.T
