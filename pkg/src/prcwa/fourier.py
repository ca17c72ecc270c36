"""Fourier coefficients of 1/eps per slice and the Toeplitz multiplication
operator used by the modal ODE system."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .problem import CrossSection, IntervalCrossSection, SampledCrossSection

# Dense (2M+1)^2 complex matrix with entry (n, m) = c_{n-m}.
ToeplitzFactor = np.ndarray

OVERSAMPLE_DEFAULT = 8


class FourierError(ValueError):
    pass


@dataclass(frozen=True)
class FourierCoeffs:
    """Coefficients c_k, k = -2M..2M, of an L_x-periodic function.

    c_k = (1/L) * integral over one period of f(x1) exp(-2i pi k x1 / L).
    """

    order: int  # M; coefficients cover -2M..2M
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (4 * self.order + 1,):
            raise FourierError("coefficient vector must have length 4M+1")

    def coeff(self, k: int) -> complex:
        return complex(self.values[k + 2 * self.order])


def _interval_coeffs(cross: IntervalCrossSection, M: int, reciprocal: bool) -> np.ndarray:
    ks = np.arange(-2 * M, 2 * M + 1)
    L = cross.period
    out = np.zeros(ks.size, dtype=complex)
    for a, b, eps in cross.intervals:
        if reciprocal and eps == 0:
            raise FourierError("permittivity vanishes on a cross-section interval")
        w = 1.0 / eps if reciprocal else eps
        q = 2.0 * np.pi * ks / L
        with np.errstate(divide="ignore", invalid="ignore"):
            seg = (np.exp(-1j * q * a) - np.exp(-1j * q * b)) / (1j * q * L)
        seg[ks == 0] = (b - a) / L
        out += w * seg
    return out


def _sampled_coeffs(cross: SampledCrossSection, M: int, reciprocal: bool,
                    oversample: int) -> np.ndarray:
    n = max(oversample, OVERSAMPLE_DEFAULT) * (4 * M + 1)
    x = (np.arange(n) + 0.5) * cross.period / n
    f = cross.eps_at(x)
    if reciprocal:
        if np.any(f == 0):
            raise FourierError("permittivity vanishes at a sample point")
        f = 1.0 / f
    ks = np.arange(-2 * M, 2 * M + 1)
    phases = np.exp(-2j * np.pi * np.outer(ks, x) / cross.period)
    return phases @ f / n


def inv_eps_fourier(cross: CrossSection, M: int,
                    oversample: int = OVERSAMPLE_DEFAULT) -> FourierCoeffs:
    """Fourier coefficients of 1/eps over one period, k = -2M..2M.

    Interval cross-sections use exact step-function integrals; sampled ones
    use a midpoint rule with at least 8x oversampling.
    """
    if isinstance(cross, IntervalCrossSection):
        values = _interval_coeffs(cross, M, reciprocal=True)
    else:
        values = _sampled_coeffs(cross, M, reciprocal=True, oversample=oversample)
    return FourierCoeffs(order=M, values=values)


def eps_fourier(cross: CrossSection, M: int,
                oversample: int = OVERSAMPLE_DEFAULT) -> FourierCoeffs:
    """Fourier coefficients of eps itself (used by the inverse-rule variant)."""
    if isinstance(cross, IntervalCrossSection):
        values = _interval_coeffs(cross, M, reciprocal=False)
    else:
        values = _sampled_coeffs(cross, M, reciprocal=False, oversample=oversample)
    return FourierCoeffs(order=M, values=values)


def toeplitz_assemble(coeffs: FourierCoeffs, M: int) -> ToeplitzFactor:
    """Toeplitz matrix with entry (n, m) = c_{n-m} for n, m = -M..M."""
    if coeffs.order < M:
        raise FourierError(
            f"need coefficients up to +-2M={2*M}, have +-{2*coeffs.order}")
    mid = 2 * coeffs.order
    col = coeffs.values[mid:mid + 2 * M + 1]       # c_0 .. c_{2M}
    row = coeffs.values[mid::-1][:2 * M + 1]       # c_0 .. c_{-2M}
    return scipy.linalg.toeplitz(col, row)


def toeplitz_factor(cross: CrossSection, M: int, rule: str = "laurent",
                    oversample: int = OVERSAMPLE_DEFAULT) -> ToeplitzFactor:
    """Multiplication operator representing 1/eps_h in truncated Fourier space.

    ``laurent`` (default) is the Toeplitz matrix of the coefficients of
    1/eps, the formulation equivalent to the variational problem and the one
    every acceptance target uses. ``li`` exposes the inverse rule
    (inverse of the Toeplitz matrix of eps) for experimentation.
    """
    if rule == "laurent":
        return toeplitz_assemble(inv_eps_fourier(cross, M, oversample), M)
    if rule == "li":
        t = toeplitz_assemble(eps_fourier(cross, M, oversample), M)
        return np.linalg.inv(t)
    raise FourierError(f"unknown factorization rule {rule!r}")
