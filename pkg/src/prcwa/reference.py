"""Independent analytic oracle for laterally invariant problems: p-polarized
transfer-matrix method for planar multilayers.

Field convention matches the grating solver so results compare directly:
the scalar unknown is the H-field, interfaces match u and (1/eps) u', the
incident wave has unit amplitude at the top of the stack, r is referenced
there and t at the bottom of the stack. The recursion is logarithm-free and
interface-referenced, so thick evanescent layers cannot overflow; any
disagreement with the grating solver therefore isolates a solver bug rather
than a scaling artifact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .problem import IncidentWave


@dataclass(frozen=True)
class PlanarLayer:
    eps: complex
    thickness: float

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValueError("layer thickness must be positive")


@dataclass(frozen=True)
class PlanarStack:
    """Ordered layers, listed top to bottom, between two half-spaces."""

    layers: tuple[PlanarLayer, ...]
    eps_plus: complex = 1.0
    eps_minus: complex = 1.0


class PlanarResult(NamedTuple):
    r: complex
    t: complex
    R: float
    T: float


def _kz(kappa: float, eps: complex, alpha0: float) -> complex:
    # vertical wavenumber, branch with Re >= 0 / Im >= 0 (radiating or decaying)
    val = complex(kappa**2 * complex(eps) - alpha0**2)
    if val.imag == 0.0:
        val = complex(val.real)
    return complex(np.sqrt(val))


def planar_tmm(stack: PlanarStack, incident: IncidentWave) -> PlanarResult:
    """Reflection/transmission of a planar multilayer for the H-field.

    Airy-type recursion: interface reflection coefficients are combined
    bottom-up, then amplitudes are pushed down once to accumulate t.
    """
    kappa = incident.kappa
    alpha0 = incident.alpha0(stack.eps_plus)
    eps_seq = [complex(stack.eps_plus)] + [complex(l.eps) for l in stack.layers] \
        + [complex(stack.eps_minus)]
    kz = [_kz(kappa, e, alpha0) for e in eps_seq]
    v = [kz_i / e for kz_i, e in zip(kz, eps_seq)]
    nifc = len(eps_seq) - 1
    rho = [(v[i] - v[i + 1]) / (v[i] + v[i + 1]) for i in range(nifc)]
    phase = [np.exp(1j * kz[i + 1] * stack.layers[i].thickness)
             for i in range(len(stack.layers))]

    # total reflection just above each interface, accumulated bottom-up
    rhat = [0j] * nifc
    rhat[-1] = rho[-1]
    for i in range(nifc - 2, -1, -1):
        g = phase[i] ** 2 * rhat[i + 1]
        rhat[i] = (rho[i] + g) / (1.0 + rho[i] * g)

    # push the unit incident amplitude down through the layers
    amp = 1.0 + 0j
    for i in range(len(stack.layers)):
        g = phase[i] ** 2 * rhat[i + 1]
        amp = amp * (1.0 + rhat[i]) / (1.0 + g) * phase[i]
    t = amp * (1.0 + rhat[-1])
    r = rhat[0]

    flux_in = np.real(v[0])
    R = float(abs(r) ** 2)
    T = float(abs(t) ** 2 * np.real(v[-1]) / flux_in)
    return PlanarResult(r=complex(r), t=complex(t), R=R, T=T)


def planar_reference_solution(problem, M: int):
    """Full-field oracle solution for a laterally uniform problem.

    Builds a ScatterSolution (layer mesh, per-layer amplitudes) purely from
    the transfer-matrix recursion, with analytic per-layer mode data; no
    eigensolve or scattering-matrix machinery is involved. The profile must
    be a Stack spanning the whole cell.
    """
    from .problem import Stack, make_mode_basis
    from .slicesolver import ModalAmplitudes, SliceOperator
    from .stitcher import ScatterSolution

    profile = problem.profile
    H = problem.domain.half_height
    if not isinstance(profile, Stack):
        raise ValueError("planar reference needs a laterally uniform Stack profile")
    if abs(profile.base + H) > 1e-9 * H or abs(profile.top - H) > 1e-9 * H:
        raise ValueError("planar reference needs the stack to span [-H, H]")

    stack = PlanarStack(
        layers=tuple(PlanarLayer(eps, th) for eps, th in reversed(profile.layers)),
        eps_plus=problem.domain.eps_plus, eps_minus=problem.domain.eps_minus)
    res = planar_tmm(stack, problem.incident)

    kappa = problem.incident.kappa
    alpha0 = problem.incident.alpha0(problem.domain.eps_plus)
    basis = make_mode_basis(problem.incident, problem.domain, M)
    n = basis.size
    mid = basis.order

    # redo the downward push, keeping per-layer amplitudes this time
    eps_seq = [complex(stack.eps_plus)] + [complex(l.eps) for l in stack.layers] \
        + [complex(stack.eps_minus)]
    kz = [_kz(kappa, e, alpha0) for e in eps_seq]
    v = [kz_i / e for kz_i, e in zip(kz, eps_seq)]
    nifc = len(eps_seq) - 1
    rho = [(v[i] - v[i + 1]) / (v[i] + v[i + 1]) for i in range(nifc)]
    phase = [np.exp(1j * kz[i + 1] * stack.layers[i].thickness)
             for i in range(len(stack.layers))]
    rhat = [0j] * nifc
    rhat[-1] = rho[-1]
    for i in range(nifc - 2, -1, -1):
        g = phase[i] ** 2 * rhat[i + 1]
        rhat[i] = (rho[i] + g) / (1.0 + rho[i] * g)

    down_at_top = []  # down-going amplitude at the top of each layer
    amp = 1.0 + 0j
    for i in range(len(stack.layers)):
        g = phase[i] ** 2 * rhat[i + 1]
        p = amp * (1.0 + rhat[i]) / (1.0 + g)
        down_at_top.append(p)
        amp = p * phase[i]

    from .problem import SliceMesh
    # stack layers are listed top to bottom; the mesh runs bottom to top
    thicknesses = [l.thickness for l in stack.layers]
    bp = np.concatenate(([-H], -H + np.cumsum(thicknesses[::-1])))
    bp[-1] = H
    mesh = SliceMesh(bp)

    operators = []
    amplitudes = []
    for j in range(len(stack.layers)):  # bottom to top
        i = len(stack.layers) - 1 - j   # index in top-to-bottom lists
        eps = eps_seq[i + 1]
        kz_modes = np.array([_kz(kappa, eps, a) for a in basis.alpha])
        gamma = -1j * kz_modes
        e_inv = np.eye(n, dtype=complex) / eps
        w = np.eye(n, dtype=complex)
        vmat = e_inv @ (w * gamma[None, :])
        operators.append(SliceOperator(e_inv=e_inv, w=w, gamma=gamma, v=vmat,
                                       thickness=float(thicknesses[i]),
                                       label=f"planar-{j + 1}"))
        a_vec = np.zeros(n, dtype=complex)
        b_vec = np.zeros(n, dtype=complex)
        a_vec[mid] = down_at_top[i]
        b_vec[mid] = down_at_top[i] * phase[i] * rhat[i + 1]
        amplitudes.append(ModalAmplitudes(a=a_vec, b=b_vec))

    r_vec = np.zeros(n, dtype=complex)
    t_vec = np.zeros(n, dtype=complex)
    r_vec[mid] = res.r
    t_vec[mid] = res.t
    return ScatterSolution(problem=problem, mesh=mesh, basis=basis, r=r_vec,
                           t=t_vec, amplitudes=tuple(amplitudes),
                           operators=tuple(operators), method="planar")
