"""Scattering-problem definition: incident wave, domain, permittivity
profiles, slice mesh, truncated mode basis, and structural diagnostics.

Conventions used throughout the package:

* lengths in nanometers, wavenumbers in 1/nm, angles in radians,
* time dependence exp(-i omega t),
* x1 is the direction of periodicity (period ``L_x``), x2 is vertical,
* the computational cell spans one period and ``-H <= x2 <= H``; the
  half-spaces above (+) and below (-) are homogeneous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._linalg import principal_sqrt

WOOD_TOL_DEFAULT = 1e-8
ALPHA0_IMAG_TOL = 1e-12


class ProblemError(ValueError):
    """Invalid problem definition."""


@dataclass(frozen=True)
class IncidentWave:
    """Monochromatic p-polarized plane wave incident from the upper half-space.

    ``theta`` is measured from the x2 axis; the wave propagates downward.
    """

    wavelength: float  # free-space wavelength, nm
    theta: float = 0.0  # radians, |theta| < pi/2

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ProblemError("wavelength must be positive")
        if not abs(self.theta) < math.pi / 2:
            raise ProblemError("incidence angle must satisfy |theta| < pi/2")

    @property
    def kappa(self) -> float:
        """Free-space wavenumber 2*pi/wavelength (1/nm)."""
        return 2.0 * math.pi / self.wavelength

    def alpha0(self, eps_plus: complex) -> float:
        """Transverse Bloch wavenumber kappa*sqrt(eps_plus)*sin(theta).

        The quasi-periodicity constant must be real for the Fourier basis.
        A tiny imaginary part inherited from a nearly real eps_plus is
        projected away; anything larger is rejected.
        """
        a0 = self.kappa * complex(np.sqrt(complex(eps_plus))) * math.sin(self.theta)
        if a0 == 0:
            return 0.0
        if abs(a0.imag) >= ALPHA0_IMAG_TOL * abs(a0.real):
            raise ProblemError(
                "alpha0 has a non-negligible imaginary part "
                f"({a0:.3e}); eps_plus must be (nearly) real for oblique incidence")
        return a0.real


@dataclass(frozen=True)
class GratingDomain:
    """One-period computational cell with homogeneous half-spaces outside.

    The permittivity profile must equal ``eps_plus`` above x2 = H and
    ``eps_minus`` below x2 = -H; the cell must be tall enough for that.
    """

    period: float       # L_x, nm
    half_height: float  # H, nm
    eps_plus: complex = 1.0
    eps_minus: complex = 1.0

    def __post_init__(self):
        if not self.period > 0:
            raise ProblemError("period must be positive")
        if not self.half_height > 0:
            raise ProblemError("half_height must be positive")


# ---------------------------------------------------------------------------
# Permittivity profiles and their one-dimensional cross-sections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntervalCrossSection:
    """Piecewise-constant permittivity along x1 over one period.

    ``intervals`` is a tuple of (start, end, eps) covering [0, period).
    """

    period: float
    intervals: tuple[tuple[float, float, complex], ...]

    def __post_init__(self):
        pos = 0.0
        for a, b, _ in self.intervals:
            if not (abs(a - pos) <= 1e-9 * self.period and b > a - 1e-12):
                raise ProblemError("cross-section intervals must tile one period")
            pos = b
        if abs(pos - self.period) > 1e-9 * self.period:
            raise ProblemError("cross-section intervals must cover the full period")

    def eps_at(self, x1):
        x = np.mod(np.asarray(x1, dtype=float), self.period)
        out = np.empty(x.shape, dtype=complex)
        for a, b, eps in self.intervals:
            mask = (x >= a) & (x < b)
            out[mask] = eps
        out[x >= self.intervals[-1][0]] = self.intervals[-1][2]
        return out

    def cache_key(self):
        return ("intervals", self.period, self.intervals)


@dataclass(frozen=True)
class SampledCrossSection:
    """Cross-section defined by a callable eps(x1), sampled when needed."""

    period: float
    fn: Callable[[np.ndarray], np.ndarray]

    def eps_at(self, x1):
        return np.asarray(self.fn(np.asarray(x1, dtype=float)), dtype=complex)

    def cache_key(self):
        return ("sampled", self.period, id(self.fn))


CrossSection = IntervalCrossSection | SampledCrossSection


def _merge_intervals(intervals):
    """Merge adjacent intervals with identical permittivity."""
    merged = [list(intervals[0])]
    for a, b, eps in intervals[1:]:
        if eps == merged[-1][2]:
            merged[-1][1] = b
        else:
            merged.append([a, b, eps])
    return tuple((a, b, eps) for a, b, eps in merged)


@dataclass(frozen=True)
class Stack:
    """Horizontally uniform layers stacked bottom-up from ``base``.

    ``layers`` holds (eps, thickness) pairs. ``fill`` is used for heights
    outside the covered range; leaving it None makes out-of-range queries an
    error, which catches meshes taller than the stack.
    """

    period: float
    base: float
    layers: tuple[tuple[complex, float], ...]
    fill: complex | None = None
    case: str | None = None  # user-declared analysis regime, not inferred

    @property
    def top(self) -> float:
        return self.base + sum(t for _, t in self.layers)

    def horizontal_interfaces(self) -> tuple[float, ...]:
        edges = [self.base]
        for _, t in self.layers:
            edges.append(edges[-1] + t)
        return tuple(edges)

    def _eps_scalar(self, y: float) -> complex:
        z = self.base
        for eps, t in self.layers:
            if z <= y < z + t:
                return eps
            z += t
        if self.fill is None:
            raise ProblemError(f"height {y} is outside the stack and no fill is set")
        return self.fill

    def eps_at(self, x1, y):
        e = self._eps_scalar(float(y))
        return np.full(np.shape(np.asarray(x1)), e, dtype=complex)

    def cross_section(self, y: float) -> IntervalCrossSection:
        eps = self._eps_scalar(float(y))
        return IntervalCrossSection(self.period, ((0.0, self.period, eps),))


@dataclass(frozen=True)
class LamellarLayer:
    """One lamellar layer: constant eps on each x1 interval, fixed thickness."""

    thickness: float
    intervals: tuple[tuple[float, float, complex], ...]


@dataclass(frozen=True)
class LamellarStack:
    """Stack of lamellar layers (binary/multilevel gratings)."""

    period: float
    base: float
    layers: tuple[LamellarLayer, ...]
    fill: complex | None = None
    case: str | None = None

    @property
    def top(self) -> float:
        return self.base + sum(l.thickness for l in self.layers)

    def horizontal_interfaces(self) -> tuple[float, ...]:
        edges = [self.base]
        for l in self.layers:
            edges.append(edges[-1] + l.thickness)
        return tuple(edges)

    def _layer_at(self, y: float) -> LamellarLayer | None:
        z = self.base
        for l in self.layers:
            if z <= y < z + l.thickness:
                return l
            z += l.thickness
        return None

    def eps_at(self, x1, y):
        cs = self.cross_section(float(y))
        return cs.eps_at(x1)

    def cross_section(self, y: float) -> IntervalCrossSection:
        layer = self._layer_at(float(y))
        if layer is None:
            if self.fill is None:
                raise ProblemError(f"height {y} is outside the lamellar stack")
            return IntervalCrossSection(self.period, ((0.0, self.period, self.fill),))
        return IntervalCrossSection(self.period, layer.intervals)


@dataclass(frozen=True)
class TriangleOnStrip:
    """Triangular inclusion sitting on a full-width strip, ambient elsewhere.

    The triangle base is centered at x1 = period/2 and its apex is shifted
    horizontally by ``apex_offset``. The strip bottom defaults to a vertical
    placement that centers strip+triangle about x2 = 0.
    """

    period: float
    base_width: float
    height: float
    strip_thickness: float
    eps_inclusion: complex
    eps_ambient: complex
    apex_offset: float = 0.0
    bottom: float | None = None
    case: str | None = None

    def _bottom(self) -> float:
        if self.bottom is not None:
            return self.bottom
        return -(self.strip_thickness + self.height) / 2.0

    def horizontal_interfaces(self) -> tuple[float, ...]:
        b = self._bottom()
        return (b, b + self.strip_thickness, b + self.strip_thickness + self.height)

    def _triangle_edges(self, y_above_base: float) -> tuple[float, float]:
        c = self.period / 2.0
        frac = y_above_base / self.height
        apex_x = c + self.apex_offset
        left = (c - self.base_width / 2.0) * (1 - frac) + apex_x * frac
        right = (c + self.base_width / 2.0) * (1 - frac) + apex_x * frac
        return left, right

    def cross_section(self, y: float) -> IntervalCrossSection:
        b = self._bottom()
        strip_top = b + self.strip_thickness
        apex_y = strip_top + self.height
        if b <= y < strip_top:
            return IntervalCrossSection(
                self.period, ((0.0, self.period, self.eps_inclusion),))
        if strip_top <= y < apex_y:
            left, right = self._triangle_edges(y - strip_top)
            intervals = []
            if left > 0:
                intervals.append((0.0, left, self.eps_ambient))
            intervals.append((max(left, 0.0), min(right, self.period), self.eps_inclusion))
            if right < self.period:
                intervals.append((right, self.period, self.eps_ambient))
            return IntervalCrossSection(self.period, _merge_intervals(tuple(intervals)))
        return IntervalCrossSection(self.period, ((0.0, self.period, self.eps_ambient),))

    def eps_at(self, x1, y):
        return self.cross_section(float(y)).eps_at(x1)


@dataclass(frozen=True)
class SampledProfile:
    """Profile given by a callable eps(x1, x2) with declared interface heights.

    The callable must be vectorized over x1 and L_x-periodic in it.
    """

    period: float
    fn: Callable[[np.ndarray, float], np.ndarray]
    interfaces: tuple[float, ...] = ()
    case: str | None = None

    def horizontal_interfaces(self) -> tuple[float, ...]:
        return self.interfaces

    def cross_section(self, y: float) -> SampledCrossSection:
        yy = float(y)
        return SampledCrossSection(self.period, lambda x1, _f=self.fn, _y=yy: _f(x1, _y))

    def eps_at(self, x1, y):
        return np.asarray(self.fn(np.asarray(x1, dtype=float), float(y)), dtype=complex)


PermittivityProfile = Stack | LamellarStack | TriangleOnStrip | SampledProfile


def uniform_profile(period: float, eps: complex, half_height: float) -> Stack:
    """Whole-cell constant permittivity (homogeneous problem)."""
    return Stack(period=period, base=-half_height,
                 layers=((eps, 2 * half_height),), fill=eps)


def staircase_cross_section(profile: PermittivityProfile, y: float) -> CrossSection:
    """Permittivity along x1 at height y, the slice-midline sample that
    defines the staircase approximation."""
    return profile.cross_section(y)


# ---------------------------------------------------------------------------
# Slice mesh
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SliceMesh:
    """Strictly increasing breakpoints -H = h_0 < ... < h_S = H."""

    breakpoints: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise ProblemError("mesh needs at least two breakpoints")
        if not np.all(np.diff(bp) > 0):
            raise ProblemError("mesh breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)

    @property
    def nslices(self) -> int:
        return self.breakpoints.size - 1

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.breakpoints[:-1] + self.breakpoints[1:])

    @property
    def thicknesses(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def h(self) -> float:
        """Largest slice thickness."""
        return float(np.max(self.thicknesses))


def build_slice_mesh(domain: GratingDomain,
                     target_h: float | None = None,
                     breakpoints: Sequence[float] | None = None,
                     align_interfaces: bool = False,
                     profile: PermittivityProfile | None = None) -> SliceMesh:
    """Build the slicing of [-H, H].

    Either pass explicit ``breakpoints`` (honored verbatim) or a ``target_h``
    producing a uniform mesh of ceil(2H/target_h) slices. With
    ``align_interfaces`` the profile's declared horizontal interfaces become
    breakpoints and each span between them is subdivided to meet target_h.
    """
    H = domain.half_height
    if breakpoints is not None:
        bp = np.asarray(list(breakpoints), dtype=float)
        if abs(bp[0] + H) > 1e-9 * H or abs(bp[-1] - H) > 1e-9 * H:
            raise ProblemError("explicit breakpoints must span [-H, H]")
        return SliceMesh(bp)
    if target_h is None or not target_h > 0:
        raise ProblemError("target_h must be positive (or pass explicit breakpoints)")
    if align_interfaces:
        if profile is None:
            raise ProblemError("align_interfaces requires the profile")
        cuts = [-H, H]
        for y in profile.horizontal_interfaces():
            if -H < y < H:
                cuts.append(float(y))
        cuts = sorted(set(cuts))
    else:
        cuts = [-H, H]
    pieces = [np.array([cuts[0]])]
    for a, b in zip(cuts[:-1], cuts[1:]):
        n = max(1, math.ceil((b - a) / target_h - 1e-12))
        pieces.append(np.linspace(a, b, n + 1)[1:])
    return SliceMesh(np.concatenate(pieces))


# ---------------------------------------------------------------------------
# Mode basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeBasis:
    """Truncated quasi-periodic Fourier basis and half-space wavenumbers.

    ``alpha[n+M] = alpha0 + 2*pi*n/L_x`` for n = -M..M. ``beta_plus`` /
    ``beta_minus`` are the vertical wavenumbers in the upper/lower half-space
    on the branch with Re >= 0 and Im >= 0, so propagating orders carry
    energy away from the cell and evanescent orders decay away from it.
    """

    order: int
    alpha0: float
    kappa: float
    alpha: np.ndarray
    beta_plus: np.ndarray
    beta_minus: np.ndarray
    eps_plus: complex
    eps_minus: complex

    @property
    def size(self) -> int:
        return 2 * self.order + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.order, self.order + 1)


def make_mode_basis(incident: IncidentWave, domain: GratingDomain, M: int) -> ModeBasis:
    """Assemble alpha_n and the two-branch beta_n for truncation order M."""
    if M < 0:
        raise ProblemError("truncation order must be >= 0")
    kappa = incident.kappa
    alpha0 = incident.alpha0(domain.eps_plus)
    n = np.arange(-M, M + 1)
    alpha = alpha0 + 2.0 * math.pi * n / domain.period
    beta_plus = principal_sqrt(kappa**2 * complex(domain.eps_plus) - alpha**2)
    beta_minus = principal_sqrt(kappa**2 * complex(domain.eps_minus) - alpha**2)
    return ModeBasis(order=M, alpha0=alpha0, kappa=kappa, alpha=alpha,
                     beta_plus=beta_plus, beta_minus=beta_minus,
                     eps_plus=complex(domain.eps_plus),
                     eps_minus=complex(domain.eps_minus))


@dataclass(frozen=True)
class GratingProblem:
    """Domain + incidence + permittivity profile."""

    domain: GratingDomain
    incident: IncidentWave
    profile: PermittivityProfile

    def __post_init__(self):
        if abs(self.profile.period - self.domain.period) > 1e-9 * self.domain.period:
            raise ProblemError("profile period must match the domain period")

    def geometry_signature(self) -> tuple:
        """Identifies the physical setup for compatibility checks."""
        return (self.domain.period, self.domain.half_height,
                complex(self.domain.eps_plus), complex(self.domain.eps_minus),
                self.incident.wavelength, self.incident.theta)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WoodAnomalyReport:
    """Orders whose alpha_n grazes a half-space cutoff."""

    flagged: tuple[tuple[int, str, float], ...]  # (order, side, relative margin)
    tol: float

    @property
    def clear(self) -> bool:
        return not self.flagged


def check_wood_anomaly(basis: ModeBasis, domain: GratingDomain,
                       tol: float = WOOD_TOL_DEFAULT) -> WoodAnomalyReport:
    """Flag every order n with |alpha_n^2 - kappa^2 eps| < tol * kappa^2 |eps|.

    Advisory only: the formulation assumes such anomalies are avoided, and a
    finite tolerance is needed in floating point.
    """
    flagged = []
    k2 = basis.kappa**2
    for side, eps in (("+", complex(domain.eps_plus)), ("-", complex(domain.eps_minus))):
        gap = np.abs(basis.alpha**2 - k2 * eps)
        rel = gap / (k2 * abs(eps))
        for i in np.nonzero(rel < tol)[0]:
            flagged.append((int(i - basis.order), side, float(rel[i])))
    return WoodAnomalyReport(flagged=tuple(flagged), tol=tol)


@dataclass(frozen=True)
class NonTrappingReport:
    """Result of the sampled vertical-monotonicity check on Re(eps)."""

    monotone_increasing: bool
    monotone_decreasing: bool
    worst_column_x1: float
    worst_violation: float

    @property
    def passed(self) -> bool:
        return self.monotone_increasing or self.monotone_decreasing


def check_nontrapping(profile: PermittivityProfile, mesh: SliceMesh,
                      n_x1: int = 64, samples_per_slice: int = 4) -> NonTrappingReport:
    """Sample Re(eps) on an x1 x x2 grid and test vertical monotonicity.

    The non-trapping sufficient condition wants eps monotone in x2 (either
    direction, the same for every column). Sampling, not symbolic; this is a
    diagnostic, not a gate.
    """
    if samples_per_slice < 2:
        raise ProblemError("need at least 2 samples per slice")
    x1 = (np.arange(n_x1) + 0.5) * profile.period / n_x1
    ys = []
    for a, b in zip(mesh.breakpoints[:-1], mesh.breakpoints[1:]):
        ys.extend(a + (b - a) * (np.arange(samples_per_slice) + 0.5) / samples_per_slice)
    grid = np.empty((len(ys), n_x1))
    for i, y in enumerate(ys):
        grid[i] = np.real(profile.eps_at(x1, y))
    diffs = np.diff(grid, axis=0)
    up_violation = np.maximum(0.0, -diffs).sum(axis=0)   # how far from non-decreasing
    down_violation = np.maximum(0.0, diffs).sum(axis=0)  # how far from non-increasing
    inc_ok = bool(np.all(up_violation <= 0.0))
    dec_ok = bool(np.all(down_violation <= 0.0))
    per_column = np.minimum(up_violation, down_violation)
    worst = int(np.argmax(per_column))
    return NonTrappingReport(monotone_increasing=inc_ok,
                             monotone_decreasing=dec_ok,
                             worst_column_x1=float(x1[worst]),
                             worst_violation=float(per_column[worst]))
