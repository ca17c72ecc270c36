"""Post-processing and verification: field reconstruction, diffraction
efficiencies, relative L2 errors over the cell, Dirichlet-to-Neumann
application, and the variational (Galerkin) residual check."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._linalg import gauss_panels, merge_breakpoints
from .stitcher import ScatterSolution

QUAD_ORDER_DEFAULT = 8
EFFICIENCY_IM_TOL = 1e-6


class AnalysisError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Field reconstruction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FieldGrid:
    """Complex field samples u(x1, x2); values[i, j] = u(x1[j], x2[i])."""

    x1: np.ndarray
    x2: np.ndarray
    values: np.ndarray
    field: str


def reconstruct_field(sol: ScatterSolution, x1_count: int, x2,
                      field: str = "total") -> FieldGrid:
    """Evaluate the solved field on a grid.

    Inside the cell the per-slice modal solution is summed; above/below the
    Rayleigh expansions with the solved r, t are used. ``field`` selects the
    total or the scattered wave (total minus incident plane wave).
    """
    x2 = np.asarray(x2, dtype=float)
    x1 = np.arange(x1_count) * sol.problem.domain.period / x1_count
    coeffs = sol.modal_values(x2, field=field)
    phases = np.exp(1j * np.outer(sol.basis.alpha, x1))
    return FieldGrid(x1=x1, x2=x2, values=coeffs @ phases, field=field)


# ---------------------------------------------------------------------------
# Efficiencies and DtN
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EfficiencyTable:
    """Per-order diffraction efficiencies; evanescent orders carry none."""

    orders: np.ndarray
    reflected: np.ndarray
    transmitted: np.ndarray
    reliable: bool

    @property
    def total_reflected(self) -> float:
        return float(np.sum(self.reflected))

    @property
    def total_transmitted(self) -> float:
        return float(np.sum(self.transmitted))

    @property
    def absorption(self) -> float:
        return 1.0 - self.total_reflected - self.total_transmitted


def efficiencies(sol: ScatterSolution) -> EfficiencyTable:
    """Power balance from the modal fluxes of the two half-spaces.

    Requires (nearly) real half-space permittivities; otherwise the power
    split is not meaningful and the table is flagged unreliable.
    """
    basis = sol.basis
    reliable = (abs(complex(basis.eps_plus).imag) <= EFFICIENCY_IM_TOL
                and abs(complex(basis.eps_minus).imag) <= EFFICIENCY_IM_TOL)
    if not reliable:
        warnings.warn("half-space permittivities are complex beyond tolerance; "
                      "efficiencies flagged unreliable", RuntimeWarning, stacklevel=2)
    denom = np.real(basis.beta_plus[basis.order] / basis.eps_plus)
    refl = np.abs(sol.r) ** 2 * np.real(basis.beta_plus / basis.eps_plus) / denom
    trans = np.abs(sol.t) ** 2 * np.real(basis.beta_minus / basis.eps_minus) / denom
    return EfficiencyTable(orders=basis.indices, reflected=refl,
                           transmitted=trans, reliable=reliable)


def dtn_apply(coeffs: np.ndarray, side: str, basis) -> np.ndarray:
    """Apply the half-space Dirichlet-to-Neumann map to trace coefficients:
    output_n = (i beta_n / eps) coeffs_n for the chosen side."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != (basis.size,):
        raise AnalysisError(f"expected {basis.size} coefficients")
    if side == "top":
        return 1j * basis.beta_plus / basis.eps_plus * coeffs
    if side == "bottom":
        return 1j * basis.beta_minus / basis.eps_minus * coeffs
    raise AnalysisError(f"side must be 'top' or 'bottom', got {side!r}")


# ---------------------------------------------------------------------------
# Relative L2 error
# ---------------------------------------------------------------------------

def _padded_modal(sol: ScatterSolution, x2: np.ndarray, target_order: int,
                  field: str, derivative: bool) -> np.ndarray:
    vals = sol.modal_values(x2, field=field, derivative=derivative)
    pad = target_order - sol.order
    if pad:
        vals = np.pad(vals, ((0, 0), (pad, pad)))
    return vals


def rel_l2_error(sol_a: ScatterSolution, sol_b: ScatterSolution,
                 quad_order: int = QUAD_ORDER_DEFAULT,
                 norm: str = "l2", field: str = "scattered") -> float:
    """Relative L2(cell) distance ||u_a - u_b|| / ||u_b|| of scattered fields.

    Computed via Parseval in x1 and Gauss-Legendre panels on the union of
    both slice meshes in x2, so solutions with different truncation orders
    (zero-padded by mode index) and different meshes compare directly. The
    second argument is the reference (denominator). ``norm='h1'`` switches
    to the gradient seminorm with analytically differentiated exponentials.
    When the scattered reference vanishes identically (no scatterer), the
    total-field norm takes over as the scale.
    """
    sig_a = np.asarray(sol_a.problem.geometry_signature(), dtype=complex)
    sig_b = np.asarray(sol_b.problem.geometry_signature(), dtype=complex)
    if not np.allclose(sig_a, sig_b, rtol=1e-12, atol=0):
        raise AnalysisError("solutions describe different physical problems")
    if norm not in ("l2", "h1"):
        raise AnalysisError(f"unknown norm {norm!r}")

    H = sol_a.problem.domain.half_height
    L = sol_a.problem.domain.period
    bp = merge_breakpoints(sol_a.mesh.breakpoints, sol_b.mesh.breakpoints,
                           tol=1e-9 * H)
    nodes, weights = gauss_panels(bp, quad_order)
    mc = max(sol_a.order, sol_b.order)

    ua = _padded_modal(sol_a, nodes, mc, field, derivative=False)
    ub = _padded_modal(sol_b, nodes, mc, field, derivative=False)
    if norm == "l2":
        num = float(np.sum(weights[:, None] * np.abs(ua - ub) ** 2))
        den = float(np.sum(weights[:, None] * np.abs(ub) ** 2))
    else:
        n_idx = np.arange(-mc, mc + 1)
        alpha = sol_a.basis.alpha0 + 2.0 * np.pi * n_idx / L
        dua = _padded_modal(sol_a, nodes, mc, field, derivative=True)
        dub = _padded_modal(sol_b, nodes, mc, field, derivative=True)
        num = float(np.sum(weights[:, None] * (np.abs(dua - dub) ** 2
                                               + alpha[None, :] ** 2 * np.abs(ua - ub) ** 2)))
        den = float(np.sum(weights[:, None] * (np.abs(dub) ** 2
                                               + alpha[None, :] ** 2 * np.abs(ub) ** 2)))
    if field == "scattered":
        ut = _padded_modal(sol_b, nodes, mc, "total", derivative=False)
        total_sq = float(np.sum(weights[:, None] * np.abs(ut) ** 2))
        if den <= 1e-28 * total_sq:
            den = total_sq
    return float(np.sqrt(num / den))


def h1_norm(sol: ScatterSolution, quad_order: int = QUAD_ORDER_DEFAULT,
            field: str = "scattered") -> float:
    """Full H1(cell) norm of the solution via modal Parseval."""
    L = sol.problem.domain.period
    nodes, weights = gauss_panels(sol.mesh.breakpoints, quad_order)
    u = sol.modal_values(nodes, field=field)
    du = sol.modal_values(nodes, field=field, derivative=True)
    w = np.abs(du) ** 2 + (1.0 + sol.basis.alpha[None, :] ** 2) * np.abs(u) ** 2
    return float(np.sqrt(L * np.sum(weights[:, None] * w)))


# ---------------------------------------------------------------------------
# Galerkin residual
# ---------------------------------------------------------------------------

def galerkin_residual(sol: ScatterSolution, problem=None, mesh=None,
                      n_test: int = 400,
                      quad_order: int | None = None) -> float:
    """Residual of the variational problem tested against hat x Fourier modes.

    Assembles B(u, v) - f(v) for v = xi_j(x2) exp(i alpha_n x1), with xi_j
    piecewise-linear hats on an n_test-node grid and the boundary terms
    applied through the Dirichlet-to-Neumann weights; volume integrals are
    Gauss panels split at slice boundaries. Returns the maximum residual
    over all test functions, normalized by ||u||_H1 ||v||_H1 (solution norm
    taken on the total field so the homogeneous problem stays well scaled).
    A solved solution drives the residual to zero as the test grid refines;
    a perturbed one leaves an O(1) floor.
    """
    from ._galerkin import GALERKIN_QUAD_ORDER, galerkin_residual_impl
    problem = sol.problem if problem is None else problem
    mesh = sol.mesh if mesh is None else mesh
    if problem is not sol.problem and problem.geometry_signature() != sol.problem.geometry_signature():
        raise AnalysisError("solution was not computed on this problem")
    if n_test < 2:
        raise AnalysisError("need at least 2 test-grid nodes")
    order = GALERKIN_QUAD_ORDER if quad_order is None else quad_order
    return galerkin_residual_impl(sol, problem, mesh, n_test, order, dtn_apply)
