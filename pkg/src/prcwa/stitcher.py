"""Global assembly: match field and conormal derivative across all slice
boundaries and the two half-space interfaces.

Two independent routes produce the same outputs:

* ``solve_grating`` - numerically stable scattering-matrix recursion
  (Redheffer star products, bottom-to-top fold),
* ``dense_solve`` - one global dense linear system over all per-slice
  amplitudes, used as an oracle on small instances.

Amplitude bookkeeping. Every slice boundary carries a pair of coordinates
(D, U) in a fixed reference basis ("gap" basis): the trivial basis W = I of
the upper half-space medium with gamma_n = -i beta_n^+. In that basis the
descending family exp(-gamma z) is the physically up-going / up-decaying
wave, so D holds down-moving content and U up-moving content. The incident
wave enters as D at the top boundary with unit amplitude at x2 = H; the
reflected and transmitted coefficient vectors r, t are referenced at
x2 = +H and x2 = -H respectively. (The absolute-phase plane-wave convention
differs from this one by the global factor exp(-i beta_0^+ H).)

Interior slices keep the principal branch Re(gamma) >= 0 from the
eigensolve, which labels lossless propagating modes opposite to the gap
basis. A per-interface scattering split would be singular exactly at zero
contrast for those modes, so each slice is eliminated against its two gap
boundaries in one block solve; only exp(-gamma * thickness) factors appear.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._linalg import solve_with_cond
from .problem import (GratingProblem, ModeBasis, SliceMesh, check_wood_anomaly,
                      make_mode_basis, staircase_cross_section)
from .slicesolver import (ModalAmplitudes, SliceOperator, make_slice_operator,
                          slice_field, slice_field_batch)

STAR_COND_LIMIT = 1e12
LAYER_COND_LIMIT = 1e12
DENSE_MAX_UNKNOWNS = 4000
DENSE_COND_LIMIT = 1e10


class StitcherError(RuntimeError):
    pass


class OracleError(RuntimeError):
    """Raised when the dense oracle refuses or fails an instance."""


@dataclass(frozen=True)
class SMatrix:
    """Scattering matrix of a (partial) stack.

    Maps incoming amplitudes (down-going at the top face, up-going at the
    bottom face) to outgoing ones (up-going at top, down-going at bottom):

        [u_top_out; d_bot_out] = [[s11, s12], [s21, s22]] @ [d_top_in; u_bot_in]
    """

    s11: np.ndarray
    s12: np.ndarray
    s21: np.ndarray
    s22: np.ndarray

    @property
    def n(self) -> int:
        return self.s11.shape[0]


def identity_smatrix(n: int) -> SMatrix:
    eye = np.eye(n, dtype=complex)
    zero = np.zeros((n, n), dtype=complex)
    return SMatrix(s11=zero, s12=eye, s21=eye.copy(), s22=zero.copy())


def star(s_lower: SMatrix, s_upper: SMatrix) -> SMatrix:
    """Redheffer star product: compose ``s_lower`` (below) with ``s_upper``.

    The only inversions are of the round-trip blocks I - R_down R_up, which
    are contractive for passive media; a near-singular round trip signals a
    resonance beyond float precision and raises.
    """
    a, b = s_lower, s_upper
    n = a.n
    eye = np.eye(n, dtype=complex)
    try:
        ya = solve_with_cond(eye - a.s11 @ b.s22, np.hstack([a.s11 @ b.s21, a.s12]),
                             STAR_COND_LIMIT, "star round-trip block")
        yb = solve_with_cond(eye - b.s22 @ a.s11, np.hstack([b.s21, b.s22 @ a.s12]),
                             STAR_COND_LIMIT, "star round-trip block")
    except ArithmeticError as exc:
        raise StitcherError(str(exc)) from None
    return SMatrix(
        s11=b.s11 + b.s12 @ ya[:, :n],
        s12=b.s12 @ ya[:, n:],
        s21=a.s21 @ yb[:, :n],
        s22=a.s22 + a.s21 @ yb[:, n:],
    )


@dataclass(frozen=True)
class GapBasis:
    """Reference coordinates at slice boundaries: W = I, gamma = -i beta^+."""

    gamma: np.ndarray
    v: np.ndarray  # gamma / eps_plus, the conormal weight per mode


def gap_basis(basis: ModeBasis) -> GapBasis:
    gamma = -1j * basis.beta_plus
    return GapBasis(gamma=gamma, v=gamma / basis.eps_plus)


def layer_smatrix(op: SliceOperator, gap: GapBasis) -> SMatrix:
    """S-matrix of one slice relative to the gap basis on both faces.

    Eliminates the slice's interior amplitudes (ascending family referenced
    at the top face, descending at the bottom face) against field and
    conormal continuity at both faces in a single block solve, so the result
    stays finite at zero contrast and for arbitrarily thick slices.
    """
    n = op.gamma.size
    eye = np.eye(n, dtype=complex)
    zero = np.zeros((n, n), dtype=complex)
    vg = np.diag(gap.v)
    x = op.decay
    wx = op.w * x[None, :]
    vx = op.v * x[None, :]
    k = np.block([
        [zero, eye, -wx, -op.w],
        [zero, vg, -vx, op.v],
        [eye, zero, -op.w, -wx],
        [-vg, zero, -op.v, vx],
    ])
    rhs = np.zeros((4 * n, 2 * n), dtype=complex)
    rhs[2 * n:3 * n, :n] = -eye
    rhs[3 * n:, :n] = -vg
    rhs[:n, n:] = -eye
    rhs[n:2 * n, n:] = vg
    try:
        y = solve_with_cond(k, rhs, LAYER_COND_LIMIT,
                            f"interface system of slice {op.label!r}")
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        raise StitcherError(
            f"singular interface matrix for slice {op.label!r}: {exc}") from None
    return SMatrix(s11=y[:n, :n], s12=y[:n, n:],
                   s21=y[n:2 * n, :n], s22=y[n:2 * n, n:])


def _bottom_closure(basis: ModeBasis, gap: GapBasis) -> SMatrix:
    """Interface between the lower half-space and the gap basis.

    The lower half-space uses its own physical coordinates (transmitted
    wave down-going, referenced at x2 = -H), so this is a diagonal Fresnel
    pair; it degenerates to the identity when the two half-spaces match.
    """
    vh = -1j * basis.beta_minus / basis.eps_minus
    vg = gap.v
    denom = vg + vh
    if np.any(denom == 0):
        raise StitcherError("degenerate half-space closure (Wood anomaly?)")
    s11 = np.diag((vg - vh) / denom)
    s12 = np.diag(2 * vh / denom)
    s21 = np.eye(basis.size, dtype=complex) + s11
    s22 = s12 - np.eye(basis.size, dtype=complex)
    return SMatrix(s11=s11, s12=s12, s21=s21, s22=s22)


@dataclass(frozen=True)
class ScatterSolution:
    """Solved scattering problem: outer coefficients plus interior amplitudes.

    ``r[n+M]`` and ``t[n+M]`` are the reflected/transmitted modal
    coefficients referenced at x2 = +H / -H; ``amplitudes[j]`` holds the
    interior two-family amplitudes of slice j.
    """

    problem: GratingProblem
    mesh: SliceMesh
    basis: ModeBasis
    r: np.ndarray
    t: np.ndarray
    amplitudes: tuple[ModalAmplitudes, ...]
    operators: tuple[SliceOperator, ...]
    method: str = "smatrix"
    incident: np.ndarray | None = None  # modal amplitudes at x2 = H; None = unit order 0

    @property
    def order(self) -> int:
        return self.basis.order

    def incident_vector(self) -> np.ndarray:
        if self.incident is not None:
            return self.incident
        d = np.zeros(self.basis.size, dtype=complex)
        d[self.basis.order] = 1.0
        return d

    def incident_coefficient(self, x2) -> np.ndarray:
        """Incident plane-wave coefficient, unit amplitude at x2 = H."""
        beta0 = self.basis.beta_plus[self.basis.order]
        return np.exp(-1j * beta0 * (np.asarray(x2, dtype=float) - self.problem.domain.half_height))

    def modal_values(self, x2, field: str = "scattered",
                     derivative: bool = False) -> np.ndarray:
        """Modal coefficient vectors u_n(x2) on an array of heights.

        Returns shape (len(x2), 2M+1). ``field`` selects the total field or
        the scattered field (total minus the incident expansion).
        """
        if field not in ("scattered", "total"):
            raise ValueError(f"unknown field selector {field!r}")
        x2 = np.atleast_1d(np.asarray(x2, dtype=float))
        H = self.problem.domain.half_height
        n = self.basis.size
        mid = self.basis.order
        out = np.zeros((x2.size, n), dtype=complex)

        above = x2 > H
        below = x2 < -H
        inside = ~(above | below)

        if np.any(above):
            z = x2[above] - H
            phases = np.exp(1j * np.outer(z, self.basis.beta_plus))
            vals = phases * self.r[None, :]
            if derivative:
                vals = vals * (1j * self.basis.beta_plus)[None, :]
            out[above] = vals
        if np.any(below):
            z = x2[below] + H
            phases = np.exp(-1j * np.outer(z, self.basis.beta_minus))
            vals = phases * self.t[None, :]
            if derivative:
                vals = vals * (-1j * self.basis.beta_minus)[None, :]
            out[below] = vals
        if np.any(inside):
            idx = np.flatnonzero(inside)
            xin = x2[idx]
            bp = self.mesh.breakpoints
            js = np.clip(np.searchsorted(bp, xin, side="right") - 1, 0, self.mesh.nslices - 1)
            for j in np.unique(js):
                sel = js == j
                zloc = xin[sel] - bp[j]
                vals = slice_field_batch(self.operators[j], self.amplitudes[j],
                                         zloc, derivative=derivative)
                out[idx[sel]] = vals

        if field == "scattered":
            # subtract the incident expansion (total field above and inside;
            # below -H the transmitted expansion already is the total field,
            # and above +H the reflected expansion alone is the scattered one)
            d = self.incident_vector()
            affected = ~above
            phases = np.exp(-1j * np.outer(x2[affected] - H, self.basis.beta_plus))
            inc = phases * d[None, :]
            if derivative:
                inc = inc * (-1j * self.basis.beta_plus)[None, :]
            out[affected] -= inc
        return out

    def face_values(self, j: int, where: str) -> tuple[np.ndarray, np.ndarray]:
        """Total-field (u, conormal) vectors on a face of slice j."""
        z = 0.0 if where == "bottom" else self.operators[j].thickness
        return slice_field(self.operators[j], self.amplitudes[j], z)


class _OperatorCache:
    """Per-solve cache: identical cross-sections share one factorization."""

    def __init__(self, basis: ModeBasis, rule: str):
        self.basis = basis
        self.rule = rule
        self._ops: dict = {}
        self._smats: dict[int, SMatrix] = {}

    def operator(self, cross, thickness: float, label) -> SliceOperator:
        key = (cross.cache_key(), thickness)
        op = self._ops.get(key)
        if op is None:
            op = make_slice_operator(cross, self.basis, thickness,
                                     rule=self.rule, label=label)
            self._ops[key] = op
        return op

    def smatrix(self, op: SliceOperator, gap: GapBasis) -> SMatrix:
        s = self._smats.get(id(op))
        if s is None:
            s = layer_smatrix(op, gap)
            self._smats[id(op)] = s
        return s


def _slice_operators(problem: GratingProblem, mesh: SliceMesh, basis: ModeBasis,
                     rule: str) -> list[SliceOperator]:
    cache = _OperatorCache(basis, rule)
    ops = []
    for j, (y, t) in enumerate(zip(mesh.midpoints, mesh.thicknesses), start=1):
        cross = staircase_cross_section(problem.profile, y)
        ops.append(cache.operator(cross, float(t), label=j))
    return ops


def _reflection_update(r_below: np.ndarray, layer: SMatrix) -> np.ndarray:
    """Down-looking reflection after adding one layer on top."""
    n = r_below.shape[0]
    y = solve_with_cond(np.eye(n, dtype=complex) - r_below @ layer.s22,
                        r_below @ layer.s21, STAR_COND_LIMIT,
                        "reflection round-trip block")
    return layer.s11 + layer.s12 @ y


def solve_grating(problem: GratingProblem, M: int, mesh: SliceMesh,
                  rule: str = "laurent", warn_wood: bool = True,
                  incident=None) -> ScatterSolution:
    """Solve the truncated scattering problem by the S-matrix recursion.

    Folds all slice S-matrices bottom-to-top in a fixed order, applies the
    incident vector (unit amplitude in the fundamental order by default),
    then back-substitutes boundary amplitudes into every slice for field
    reconstruction. Stable for thick evanescent sections: no exponential
    with positive real exponent is ever formed.
    """
    basis = make_mode_basis(problem.incident, problem.domain, M)
    if warn_wood:
        wood = check_wood_anomaly(basis, problem.domain)
        if not wood.clear:
            warnings.warn(f"Wood-anomaly proximity for orders {wood.flagged}; "
                          "results may be ill-conditioned", RuntimeWarning,
                          stacklevel=2)
    gap = gap_basis(basis)
    cache = _OperatorCache(basis, rule)
    nsl = mesh.nslices
    ops: list[SliceOperator] = []
    layers: list[SMatrix] = []
    for j, (y, t) in enumerate(zip(mesh.midpoints, mesh.thicknesses), start=1):
        cross = staircase_cross_section(problem.profile, y)
        op = cache.operator(cross, float(t), label=j)
        ops.append(op)
        layers.append(cache.smatrix(op, gap))

    if incident is None:
        d = np.zeros(basis.size, dtype=complex)
        d[basis.order] = 1.0
    else:
        d = np.asarray(incident, dtype=complex)

    # Bottom-to-top fold; checkpoint the down-looking reflection so the
    # back-substitution pass can replay it without storing one matrix per slice.
    chunk = max(1, math.isqrt(nsl))
    running = _bottom_closure(basis, gap)
    checkpoints = {0: running.s11}
    for j in range(1, nsl + 1):
        running = star(running, layers[j - 1])
        if j % chunk == 0 or j == nsl:
            checkpoints[j] = running.s11
    s_total = running
    r = s_total.s11 @ d
    t_vec = s_total.s21 @ d

    # Top-down pass: suffix folds give the up-looking response at each gap;
    # combined with the replayed down-looking reflection they determine the
    # boundary coordinates (D_j, U_j) at every slice boundary.
    amplitudes: list[ModalAmplitudes | None] = [None] * nsl
    eye = np.eye(basis.size, dtype=complex)
    suffix = identity_smatrix(basis.size)
    replay: dict[int, np.ndarray] = {}
    prev_du = None  # (D, U) at gap j+1 while processing gap j

    def reflection_at(j: int) -> np.ndarray:
        if j in checkpoints:
            return checkpoints[j]
        if j not in replay:
            base = (j // chunk) * chunk
            rmat = checkpoints[base]
            for i in range(base + 1, min(base + chunk, nsl) + 1):
                rmat = _reflection_update(rmat, layers[i - 1])
                replay[i] = rmat
        return replay[j]

    for j in range(nsl, -1, -1):
        r_down = reflection_at(j)
        d_j = solve_with_cond(eye - suffix.s22 @ r_down, suffix.s21 @ d,
                              STAR_COND_LIMIT, "gap closure")
        u_j = r_down @ d_j
        if prev_du is not None:
            _extract_amplitudes(amplitudes, ops, gap, j + 1, bottom=(d_j, u_j),
                                top=prev_du)
        prev_du = (d_j, u_j)
        if j > 0:
            suffix = star(layers[j - 1], suffix)
        replay.pop(j, None)

    return ScatterSolution(problem=problem, mesh=mesh, basis=basis, r=r, t=t_vec,
                           amplitudes=tuple(amplitudes), operators=tuple(ops),
                           method="smatrix",
                           incident=None if incident is None else d)


def _extract_amplitudes(amplitudes, ops, gap: GapBasis, slice_index: int,
                        bottom, top) -> None:
    """Interior amplitudes of one slice from its two boundary coordinates.

    The ascending coefficient comes from the top face and the descending one
    from the bottom face, each at its own reference face, so no growing
    exponential is applied.
    """
    op = ops[slice_index - 1]
    d_top, u_top = top
    d_bot, u_bot = bottom
    u_face_top = d_top + u_top
    c_face_top = gap.v * (d_top - u_top)
    u_face_bot = d_bot + u_bot
    c_face_bot = gap.v * (d_bot - u_bot)
    a = 0.5 * (op.w_solver.solve(u_face_top) + op.v_solver.solve(c_face_top))
    b = 0.5 * (op.w_solver.solve(u_face_bot) - op.v_solver.solve(c_face_bot))
    amplitudes[slice_index - 1] = ModalAmplitudes(a=a, b=b)


def dense_solve(problem: GratingProblem, M: int, mesh: SliceMesh,
                rule: str = "laurent", incident=None) -> ScatterSolution:
    """Independent oracle: one dense linear system over all amplitudes.

    Enforces continuity of u and of the conormal E u' at every breakpoint
    plus the radiating half-space closures at +-H, then factorizes the whole
    system at once. Refuses instances that are too large or too poorly
    conditioned for the oracle to be trustworthy.
    """
    basis = make_mode_basis(problem.incident, problem.domain, M)
    n = basis.size
    nsl = mesh.nslices
    unknowns = (2 * nsl + 2) * n
    if unknowns > DENSE_MAX_UNKNOWNS:
        raise OracleError(
            f"dense oracle limited to {DENSE_MAX_UNKNOWNS} unknowns, got {unknowns}")
    ops = _slice_operators(problem, mesh, basis, rule)

    # unknown layout: [a_1, b_1, ..., a_S, b_S, r, t]
    def a_slot(j):  # 1-based slice index
        return slice((2 * (j - 1)) * n, (2 * (j - 1) + 1) * n)

    def b_slot(j):
        return slice((2 * (j - 1) + 1) * n, (2 * (j - 1) + 2) * n)

    r_slot = slice(2 * nsl * n, (2 * nsl + 1) * n)
    t_slot = slice((2 * nsl + 1) * n, (2 * nsl + 2) * n)

    mat = np.zeros((unknowns, unknowns), dtype=complex)
    rhs = np.zeros(unknowns, dtype=complex)
    v_minus = -1j * basis.beta_minus / basis.eps_minus
    v_plus = -1j * basis.beta_plus / basis.eps_plus
    if incident is None:
        d = np.zeros(n, dtype=complex)
        d[basis.order] = 1.0
    else:
        d = np.asarray(incident, dtype=complex)

    row = 0
    op1 = ops[0]
    x1 = op1.decay
    mat[row:row + n, a_slot(1)] = op1.w * x1[None, :]
    mat[row:row + n, b_slot(1)] = op1.w
    mat[row:row + n, t_slot] = -np.eye(n)
    row += n
    mat[row:row + n, a_slot(1)] = op1.v * x1[None, :]
    mat[row:row + n, b_slot(1)] = -op1.v
    mat[row:row + n, t_slot] = -np.diag(v_minus)
    row += n

    for j in range(1, nsl):
        lo, hi = ops[j - 1], ops[j]
        xlo, xhi = lo.decay, hi.decay
        mat[row:row + n, a_slot(j)] = lo.w
        mat[row:row + n, b_slot(j)] = lo.w * xlo[None, :]
        mat[row:row + n, a_slot(j + 1)] = -hi.w * xhi[None, :]
        mat[row:row + n, b_slot(j + 1)] = -hi.w
        row += n
        mat[row:row + n, a_slot(j)] = lo.v
        mat[row:row + n, b_slot(j)] = -lo.v * xlo[None, :]
        mat[row:row + n, a_slot(j + 1)] = -hi.v * xhi[None, :]
        mat[row:row + n, b_slot(j + 1)] = hi.v
        row += n

    opS = ops[-1]
    xS = opS.decay
    mat[row:row + n, a_slot(nsl)] = opS.w
    mat[row:row + n, b_slot(nsl)] = opS.w * xS[None, :]
    mat[row:row + n, r_slot] = -np.eye(n)
    rhs[row:row + n] = d
    row += n
    mat[row:row + n, a_slot(nsl)] = opS.v
    mat[row:row + n, b_slot(nsl)] = -opS.v * xS[None, :]
    mat[row:row + n, r_slot] = np.diag(v_plus)
    rhs[row:row + n] = v_plus * d
    row += n
    assert row == unknowns

    cond = np.linalg.cond(mat, 1)
    if not np.isfinite(cond) or cond > DENSE_COND_LIMIT:
        raise OracleError(
            f"dense oracle condition estimate {cond:.3e} exceeds {DENSE_COND_LIMIT:.1e}")
    sol = np.linalg.solve(mat, rhs)

    amplitudes = tuple(ModalAmplitudes(a=sol[a_slot(j)], b=sol[b_slot(j)])
                       for j in range(1, nsl + 1))
    return ScatterSolution(problem=problem, mesh=mesh, basis=basis,
                           r=sol[r_slot], t=sol[t_slot], amplitudes=amplitudes,
                           operators=tuple(ops), method="dense",
                           incident=None if incident is None else d)
