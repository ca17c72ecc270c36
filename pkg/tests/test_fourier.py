import math

import numpy as np
import pytest
import scipy.integrate

from prcwa import (eps_fourier, inv_eps_fourier, toeplitz_assemble,
                   toeplitz_factor)
from prcwa.fourier import FourierError
from prcwa.problem import IntervalCrossSection, SampledCrossSection

L = 500.0


def lamellar_cross():
    # 1/eps = 1 on [0, L/2), 1/4 on [L/2, L)
    return IntervalCrossSection(L, ((0.0, L / 2, 1.0 + 0j), (L / 2, L, 4.0 + 0j)))


def quad_coeff_oracle(fn, k, breakpoints):
    """Independent quadrature of the k-th Fourier coefficient."""
    def integrand(x, part):
        v = fn(x) * np.exp(-2j * np.pi * k * x / L)
        return v.real if part == "re" else v.imag
    re = scipy.integrate.quad(integrand, 0, L, args=("re",),
                              points=breakpoints, limit=200)[0]
    im = scipy.integrate.quad(integrand, 0, L, args=("im",),
                              points=breakpoints, limit=200)[0]
    return (re + 1j * im) / L


class TestInvEpsFourier:
    def test_constant(self):
        cross = IntervalCrossSection(L, ((0.0, L, 4.0 + 0j),))
        c = inv_eps_fourier(cross, 3)
        assert c.coeff(0) == pytest.approx(0.25)
        for k in range(1, 7):
            assert abs(c.coeff(k)) < 1e-15
            assert abs(c.coeff(-k)) < 1e-15

    def test_lamellar_exact_values(self):
        c = inv_eps_fourier(lamellar_cross(), 2)
        assert c.coeff(0) == pytest.approx(0.625, abs=1e-15)
        assert c.coeff(1) == pytest.approx(-0.75j / math.pi, abs=1e-15)
        assert abs(c.coeff(1) + 0.23873j) < 1e-4

    def test_lamellar_vs_quadrature_oracle(self):
        c = inv_eps_fourier(lamellar_cross(), 2)
        fn = lamellar_cross().eps_at
        for k in range(-4, 5):
            oracle = quad_coeff_oracle(lambda x: 1.0 / fn(x), k, [L / 2])
            assert c.coeff(k) == pytest.approx(oracle, abs=1e-10)

    def test_conjugate_symmetry_real_eps(self):
        c = inv_eps_fourier(lamellar_cross(), 3)
        for k in range(1, 7):
            assert c.coeff(-k) == pytest.approx(np.conj(c.coeff(k)), abs=1e-15)

    def test_sampled_band_limited_exact(self):
        # 1/eps a trig polynomial: sampled path must be exact to rounding
        fn = lambda x: 1.0 / (0.5 + 0.2 * np.cos(2 * np.pi * x / L))
        cross = SampledCrossSection(L, fn)
        c = inv_eps_fourier(cross, 3)
        assert c.coeff(0) == pytest.approx(0.5, abs=1e-13)
        assert c.coeff(1) == pytest.approx(0.1, abs=1e-13)
        assert c.coeff(-1) == pytest.approx(0.1, abs=1e-13)
        assert abs(c.coeff(2)) < 1e-13

    def test_sampled_oversampling_stability(self):
        # smooth profile: doubling the oversampling changes nothing measurable
        fn = lambda x: 2.0 + np.exp(np.cos(2 * np.pi * x / L))
        cross = SampledCrossSection(L, fn)
        a = inv_eps_fourier(cross, 4, oversample=8).values
        b = inv_eps_fourier(cross, 4, oversample=16).values
        assert np.max(np.abs(a - b)) <= 1e-13 * np.max(np.abs(a))

    def test_sampled_vs_quadrature(self):
        fn = lambda x: 2.0 + np.exp(np.cos(2 * np.pi * x / L))
        cross = SampledCrossSection(L, fn)
        c = inv_eps_fourier(cross, 2, oversample=32)
        for k in (0, 1, 2):
            oracle = quad_coeff_oracle(lambda x: 1.0 / fn(x), k, [])
            assert c.coeff(k) == pytest.approx(oracle, abs=1e-12)

    def test_zero_eps_rejected(self):
        cross = IntervalCrossSection(L, ((0.0, L / 2, 0.0 + 0j), (L / 2, L, 1.0 + 0j)))
        with pytest.raises(FourierError):
            inv_eps_fourier(cross, 1)

    def test_parseval_monotone_in_m(self):
        cross = lamellar_cross()
        fn = cross.eps_at
        exact = scipy.integrate.quad(
            lambda x: float(np.abs(1.0 / fn(x))**2), 0, L, points=[L / 2])[0] / L
        prev = 0.0
        for M in (1, 2, 4, 8, 16):
            c = inv_eps_fourier(cross, M)
            total = float(np.sum(np.abs(c.values)**2))
            assert total >= prev - 1e-15
            assert total <= exact + 1e-12
            prev = total


class TestToeplitz:
    def test_constant_is_scaled_identity(self):
        cross = IntervalCrossSection(L, ((0.0, L, 4.0 + 0j),))
        t = toeplitz_assemble(inv_eps_fourier(cross, 2), 2)
        assert np.allclose(t, 0.25 * np.eye(5), atol=1e-15)

    def test_lamellar_entries(self):
        c = inv_eps_fourier(lamellar_cross(), 1)
        t = toeplitz_assemble(c, 1)
        assert np.allclose(np.diag(t), 0.625)
        # first superdiagonal c_{-1}, first subdiagonal c_{+1}
        assert t[0, 1] == pytest.approx(0.75j / math.pi, abs=1e-15)
        assert t[1, 0] == pytest.approx(-0.75j / math.pi, abs=1e-15)
        for i in range(3):
            for j in range(3):
                assert t[i, j] == pytest.approx(c.coeff(i - j), abs=1e-15)

    def test_hermitian_for_real_eps(self):
        t = toeplitz_assemble(inv_eps_fourier(lamellar_cross(), 3), 3)
        assert np.allclose(t, t.conj().T, atol=1e-15)

    def test_constant_commutes_with_diagonal(self):
        cross = IntervalCrossSection(L, ((0.0, L, 2.25 + 0j),))
        t = toeplitz_assemble(inv_eps_fourier(cross, 3), 3)
        kx = np.diag(np.linspace(-0.1, 0.1, 7))
        assert np.allclose(t @ kx, kx @ t, atol=1e-16)

    def test_insufficient_range_rejected(self):
        c = inv_eps_fourier(lamellar_cross(), 1)
        with pytest.raises(FourierError):
            toeplitz_assemble(c, 2)

    def test_li_rule_matches_laurent_for_constant(self):
        cross = IntervalCrossSection(L, ((0.0, L, 4.0 + 0j),))
        laurent = toeplitz_factor(cross, 2, rule="laurent")
        li = toeplitz_factor(cross, 2, rule="li")
        assert np.allclose(laurent, li, atol=1e-14)

    def test_li_rule_is_inverse_of_eps_toeplitz(self):
        cross = lamellar_cross()
        li = toeplitz_factor(cross, 2, rule="li")
        t_eps = toeplitz_assemble(eps_fourier(cross, 2), 2)
        assert np.allclose(li @ t_eps, np.eye(5), atol=1e-12)

    def test_unknown_rule_rejected(self):
        with pytest.raises(FourierError):
            toeplitz_factor(lamellar_cross(), 2, rule="other")
