import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prcwa import (GratingDomain, GratingProblem, IncidentWave, Stack,
                   TriangleOnStrip, build_slice_mesh, check_nontrapping,
                   check_wood_anomaly, make_mode_basis, staircase_cross_section,
                   uniform_profile)
from prcwa.problem import ProblemError


def basis_for(wavelength=600.0, theta=0.0, period=500.0, eps_plus=1.0,
              eps_minus=1.0, M=1):
    inc = IncidentWave(wavelength, theta)
    dom = GratingDomain(period=period, half_height=100.0,
                        eps_plus=eps_plus, eps_minus=eps_minus)
    return make_mode_basis(inc, dom, M), inc, dom


class TestIncidentWave:
    def test_kappa(self):
        assert IncidentWave(600.0).kappa == pytest.approx(2 * math.pi / 600.0)

    def test_validation(self):
        with pytest.raises(ProblemError):
            IncidentWave(-1.0)
        with pytest.raises(ProblemError):
            IncidentWave(600.0, math.pi / 2)

    def test_alpha0_normal_incidence(self):
        assert IncidentWave(600.0, 0.0).alpha0(1.0) == 0.0

    def test_alpha0_30_degrees(self):
        # sin(pi/6) = 1/2
        inc = IncidentWave(600.0, math.pi / 6)
        assert inc.alpha0(1.0) == pytest.approx(inc.kappa / 2, rel=1e-14)

    def test_alpha0_rejects_complex_ambient_oblique(self):
        with pytest.raises(ProblemError):
            IncidentWave(600.0, 0.3).alpha0(1.0 + 1e-6j)

    def test_alpha0_projects_negligible_imaginary(self):
        a0 = IncidentWave(600.0, 0.3).alpha0(1.0 + 1e-16j)
        assert isinstance(a0, float)


class TestModeBasis:
    def test_normal_incidence_m0(self):
        basis, inc, _ = basis_for(M=0)
        assert basis.alpha == pytest.approx([0.0])
        assert basis.beta_plus[0] == pytest.approx(inc.kappa, rel=1e-12)
        assert basis.beta_plus[0] == pytest.approx(1.04720e-2, rel=1e-5)

    def test_evanescent_order(self):
        # beta_1^+ = i sqrt(alpha_1^2 - kappa^2), evaluated directly
        basis, inc, _ = basis_for(M=1)
        alpha1 = 2 * math.pi / 500.0
        expect = 1j * math.sqrt(alpha1**2 - inc.kappa**2)
        assert basis.beta_plus[2] == pytest.approx(expect, rel=1e-12)
        assert basis.beta_plus[2].imag == pytest.approx(6.946e-3, rel=1e-3)

    def test_alpha_symmetry(self):
        basis, _, _ = basis_for(theta=0.22, M=4)
        n = basis.order
        for k in range(1, n + 1):
            assert basis.alpha[n - k] == pytest.approx(
                -basis.alpha[n + k] + 2 * basis.alpha0, rel=1e-12)
        basis0, _, _ = basis_for(theta=0.0, M=4)
        assert np.allclose(basis0.alpha[::-1], -basis0.alpha, atol=1e-18)

    @settings(max_examples=40, deadline=None)
    @given(wavelength=st.floats(200.0, 2000.0),
           theta=st.floats(-1.4, 1.4),
           period=st.floats(100.0, 2000.0),
           eps=st.floats(1.0, 16.0),
           M=st.integers(0, 8))
    def test_branch_invariants(self, wavelength, theta, period, eps, M):
        inc = IncidentWave(wavelength, theta)
        dom = GratingDomain(period=period, half_height=50.0, eps_plus=eps,
                            eps_minus=eps)
        basis = make_mode_basis(inc, dom, M)
        for beta in (basis.beta_plus, basis.beta_minus):
            assert beta.shape == (2 * M + 1,)
            assert np.all(beta.real >= 0)
            assert np.all(beta.imag >= 0)
            # real eps away from cutoff: exactly one of Re/Im is nonzero
            gap = np.abs(basis.alpha**2 - inc.kappa**2 * eps)
            away = gap > 1e-12 * inc.kappa**2 * eps
            one_sided = (beta.real == 0) ^ (beta.imag == 0)
            assert np.all(one_sided[away])

    def test_negative_order_rejected(self):
        _, inc, dom = basis_for()
        with pytest.raises(ProblemError):
            make_mode_basis(inc, dom, -1)


class TestSliceMesh:
    def test_uniform(self):
        dom = GratingDomain(period=500.0, half_height=50.0)
        mesh = build_slice_mesh(dom, target_h=10.0)
        assert mesh.nslices == 10
        # midpoints at 5, 15, ..., 95 in local coordinates
        local = mesh.midpoints - mesh.breakpoints[0]
        assert np.allclose(local, np.arange(5.0, 100.0, 10.0))

    def test_tall_cell_ceil_rounding(self):
        dom = GratingDomain(period=500.0, half_height=850.0)
        assert build_slice_mesh(dom, target_h=50.0).nslices == 34

    def test_explicit(self):
        dom = GratingDomain(period=500.0, half_height=75.0)
        mesh = build_slice_mesh(dom, breakpoints=[-75.0, 0.0, 75.0])
        assert mesh.nslices == 2
        assert np.array_equal(mesh.breakpoints, [-75.0, 0.0, 75.0])

    def test_non_monotone_rejected(self):
        dom = GratingDomain(period=500.0, half_height=75.0)
        with pytest.raises(ProblemError):
            build_slice_mesh(dom, breakpoints=[-75.0, 10.0, 5.0, 75.0])

    def test_alignment_flag(self):
        dom = GratingDomain(period=500.0, half_height=150.0)
        tri = TriangleOnStrip(period=500.0, base_width=250.0, height=100.0,
                              strip_thickness=100.0, eps_inclusion=4.0,
                              eps_ambient=1.0)
        mesh = build_slice_mesh(dom, target_h=37.0, align_interfaces=True,
                                profile=tri)
        for y in tri.horizontal_interfaces():
            assert np.min(np.abs(mesh.breakpoints - y)) < 1e-9
        assert mesh.h <= 37.0 + 1e-12

    @settings(max_examples=30, deadline=None)
    @given(half_height=st.floats(10.0, 1000.0), target=st.floats(0.3, 80.0))
    def test_h_bounded_by_target(self, half_height, target):
        dom = GratingDomain(period=500.0, half_height=half_height)
        mesh = build_slice_mesh(dom, target_h=target)
        assert mesh.h <= target * (1 + 1e-12)


class TestStaircase:
    def test_triangle_width(self):
        # similar triangles: width 250*(1 - y/100) at height y above the base
        tri = TriangleOnStrip(period=500.0, base_width=250.0, height=100.0,
                              strip_thickness=100.0, eps_inclusion=15 + 4j,
                              eps_ambient=1.0, bottom=-100.0)
        cross = staircase_cross_section(tri, 5.0)  # 5 nm above the base at 0
        inclusion = [iv for iv in cross.intervals if iv[2] == 15 + 4j]
        assert len(inclusion) == 1
        a, b, _ = inclusion[0]
        assert (a, b) == pytest.approx((131.25, 368.75))
        assert b - a == pytest.approx(250.0 * (1 - 5.0 / 100.0))

    def test_above_apex_is_ambient(self):
        tri = TriangleOnStrip(period=500.0, base_width=250.0, height=100.0,
                              strip_thickness=100.0, eps_inclusion=15 + 4j,
                              eps_ambient=1.0, bottom=-100.0)
        cross = staircase_cross_section(tri, 120.0)
        assert cross.intervals == ((0.0, 500.0, 1.0),)

    def test_stack_layer_full_period(self):
        stack = Stack(period=500.0, base=-50.0, layers=((2.25, 100.0),))
        cross = staircase_cross_section(stack, 0.0)
        assert cross.intervals == ((0.0, 500.0, 2.25),)

    def test_midline_sampling_matches_profile(self):
        # the staircase value anywhere in a slice is the profile at the midline
        tri = TriangleOnStrip(period=500.0, base_width=250.0, height=100.0,
                              strip_thickness=100.0, eps_inclusion=15 + 4j,
                              eps_ambient=1.0)
        dom = GratingDomain(period=500.0, half_height=150.0)
        mesh = build_slice_mesh(dom, target_h=13.0)
        x1 = np.linspace(0.0, 500.0, 41, endpoint=False)
        for y in mesh.midpoints:
            cross = staircase_cross_section(tri, y)
            assert np.allclose(cross.eps_at(x1), tri.eps_at(x1, y))


class TestWoodAnomaly:
    def test_exact_grazing_flagged(self):
        # L = lambda at normal incidence puts orders +-1 exactly at cutoff
        basis, _, dom = basis_for(wavelength=600.0, period=600.0, M=2)
        report = check_wood_anomaly(basis, dom)
        flagged_orders = sorted({n for n, _, _ in report.flagged})
        assert flagged_orders == [-1, 1]

    def test_clear_configuration(self):
        basis, inc, dom = basis_for(wavelength=600.0, period=500.0, M=5)
        # oracle: smallest relative gap over both half-spaces
        gap = np.min(np.abs(basis.alpha**2 - inc.kappa**2)) / inc.kappa**2
        assert gap > 1e-6
        assert check_wood_anomaly(basis, dom, tol=1e-6).clear

    def test_complex_ambient_never_exact(self):
        basis, _, dom = basis_for(wavelength=600.0, period=600.0,
                                  eps_plus=1 + 1e-6j, eps_minus=1 + 1e-6j, M=2)
        report = check_wood_anomaly(basis, dom, tol=1e-9)
        assert report.clear


class TestNonTrapping:
    def _mesh(self, H=150.0):
        return build_slice_mesh(GratingDomain(period=500.0, half_height=H),
                                target_h=10.0)

    def test_increasing_stack_passes(self):
        stack = Stack(period=500.0, base=-150.0,
                      layers=((1.0, 150.0), (2.25, 150.0)))
        report = check_nontrapping(stack, self._mesh())
        assert report.monotone_increasing and report.passed

    def test_constant_passes_both_ways(self):
        prof = uniform_profile(500.0, 2.25, 150.0)
        report = check_nontrapping(prof, self._mesh())
        assert report.monotone_increasing and report.monotone_decreasing

    def test_triangle_on_strip_fails(self):
        tri = TriangleOnStrip(period=500.0, base_width=250.0, height=100.0,
                              strip_thickness=100.0, eps_inclusion=15 + 4j,
                              eps_ambient=1 + 1e-6j)
        report = check_nontrapping(tri, self._mesh())
        assert not report.passed
        assert report.worst_violation > 0


class TestGratingProblem:
    def test_period_mismatch_rejected(self):
        dom = GratingDomain(period=500.0, half_height=100.0)
        with pytest.raises(ProblemError):
            GratingProblem(domain=dom, incident=IncidentWave(600.0),
                           profile=uniform_profile(400.0, 1.0, 100.0))
