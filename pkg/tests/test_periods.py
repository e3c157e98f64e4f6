import math

import numpy as np
import pytest
from scipy.integrate import quad

from hypercanon.curve import Contour, CurveModel, point_x
from hypercanon.homology import homology_basis
from hypercanon.periods import (
    QuadratureConfig,
    agm,
    agm_period_oracle,
    complete_k,
    compute_riemann_matrix,
    integrate_contour,
    integrate_over_cycle,
)

from conftest import GENUS2_ROOTS, GENUS3_ROOTS, roots_of_unity


def legendre_roots(k):
    return [-1 / k, -1, 1, 1 / k]


class TestQuadratureConfig:
    @pytest.mark.parametrize("kw", [{"gl_order": 2}, {"rel_tol": 0.0}, {"rel_tol": 1e-2}, {"max_depth": 1}])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            QuadratureConfig(**kw)


class TestCycleIntegrals:
    def test_real_interval_oracle(self):
        # independent oracle: Gauss-Jacobi type quadrature of the real integrals
        c = CurveModel.from_roots([-3, -2, -1, 1.5, 2, 3])
        basis = homology_basis(c)
        cyc = next(cy for cy in basis.candidates if cy.link == 2)  # loop around [-1, 1.5]
        got = integrate_over_cycle(c, cyc)
        ref = []
        for k in range(c.genus):
            val, _ = quad(
                lambda x: x**k / math.sqrt(abs((x + 3) * (x + 2) * (x - 2) * (x - 3))),
                -1,
                1.5,
                weight="alg",
                wvar=(-0.5, -0.5),
                epsabs=1e-14,
                epsrel=1e-13,
            )
            ref.append(2 * val)
        ref = np.array(ref)
        phase = got[0] / ref[0]
        # the lift fixes the sheet and the sqrt(-1) phase of sqrt(f) on the interval
        assert abs(phase**4 - 1) < 1e-10
        assert np.allclose(got, phase * ref, rtol=1e-10, atol=0)

    def test_quartic_a_cycle(self):
        c = CurveModel.from_roots(roots_of_unity(4))
        basis = homology_basis(c)
        cyc = next(cy for cy in basis.candidates if cy.link == 1)  # loop around [-i, i]
        got = integrate_over_cycle(c, cyc)[0]
        val, _ = quad(lambda t: 1 / math.sqrt(1 + t * t), -1, 1, weight="alg", wvar=(-0.5, -0.5), epsrel=1e-13)
        assert abs(got) == pytest.approx(2 * val, rel=1e-10)
        assert abs(got**4 - (2 * val) ** 4) <= 1e-9 * (2 * val) ** 4

    def test_contractible_loop_vanishes(self):
        c = CurveModel.from_roots(GENUS3_ROOTS)
        loop = Contour.polygon([2.5 + 2.5j, 3.5 + 2.5j, 3.5 + 3.5j, 2.5 + 3.5j])
        y0 = point_x(c, loop.start, 1).y
        v = integrate_contour(c, loop, y0)
        assert np.abs(v).max() <= 1e-12

    def test_reversal_negates(self):
        c = CurveModel.from_roots(GENUS2_ROOTS)
        basis = homology_basis(c)
        cyc = basis.candidates[1]
        fwd = integrate_contour(c, cyc.contour, cyc.y_seed)
        back = integrate_contour(c, cyc.contour.reversed(), cyc.y_seed)
        assert np.allclose(back, -fwd, rtol=1e-11, atol=1e-13)

    def test_order_independence(self):
        c = CurveModel.from_roots(GENUS3_ROOTS)
        cyc = homology_basis(c).candidates[3]
        a = integrate_over_cycle(c, cyc, QuadratureConfig(gl_order=16))
        b = integrate_over_cycle(c, cyc, QuadratureConfig(gl_order=32))
        assert np.allclose(a, b, rtol=1e-10)


class TestRiemannMatrix:
    @pytest.mark.parametrize("roots", [roots_of_unity(6), GENUS2_ROOTS, GENUS3_ROOTS, roots_of_unity(10)])
    def test_riemann_relations(self, roots):
        rm = compute_riemann_matrix(CurveModel.from_roots(roots))
        assert rm.symmetry_residual <= 1e-8
        assert rm.min_eig_im > 0
        np.linalg.cholesky(rm.omega.imag)

    def test_a_normalization_recomputed(self):
        c = CurveModel.from_roots(GENUS3_ROOTS)
        rm = compute_riemann_matrix(c)
        rm2 = compute_riemann_matrix(c, QuadratureConfig(gl_order=20, rel_tol=1e-11))
        assert np.allclose(rm2.P @ rm.C, np.eye(3), atol=1e-9)

    def test_scaling_invariance(self):
        a = compute_riemann_matrix(CurveModel.from_roots(GENUS3_ROOTS)).omega
        b = compute_riemann_matrix(CurveModel.from_roots([2 * z for z in GENUS3_ROOTS])).omega
        assert np.abs(a - b).max() <= 1e-8

    def test_translation_invariance(self):
        a = compute_riemann_matrix(CurveModel.from_roots(GENUS2_ROOTS)).omega
        b = compute_riemann_matrix(CurveModel.from_roots([z + 0.25 for z in GENUS2_ROOTS])).omega
        assert np.abs(a - b).max() <= 1e-8

    def test_sextic_symmetry(self):
        # x -> e^{i pi/3} x is an automorphism of order 6: the Jacobian has complex multiplication
        # and Omega has the hexagonal entries seen in every reduced basis for this curve
        om = compute_riemann_matrix(CurveModel.from_roots(roots_of_unity(6))).omega
        assert np.allclose(np.abs(om.imag.flatten()) / (math.sqrt(3) / 2) % 1, 0, atol=1e-9)


class TestGenusOne:
    @pytest.mark.parametrize("k", [0.3, 0.5, 0.9])
    def test_half_oracle(self, k):
        # the lattice of dx/y on (1-x^2)(1-k^2 x^2) is {4K, 2iK'}: tau = iK'/(2K)
        rm = compute_riemann_matrix(CurveModel.from_roots(legendre_roots(k)), first_link=1)
        assert abs(rm.omega[0, 0] - agm_period_oracle(k) / 2) <= 1e-10

    def test_j_invariant_oracle(self):
        # independent check of tau via the j-invariant of the quartic model (k = 1/sqrt2)
        k = 1 / math.sqrt(2)
        tau = compute_riemann_matrix(CurveModel.from_roots(legendre_roots(k)), first_link=1).omega[0, 0]
        q = np.exp(2j * np.pi * tau)
        n = np.arange(1, 200)
        e4 = 1 + 240 * np.sum(n**3 * q**n / (1 - q**n))
        e6 = 1 - 504 * np.sum(n**5 * q**n / (1 - q**n))
        j = 1728 * e4**3 / (e4**3 - e6**2)
        # quartic y^2 = (1-x^2)(1-x^2/2): invariants give j = 287496
        assert j.real == pytest.approx(287496, rel=1e-9)
        assert abs(j.imag) < 1e-6 * 287496


class TestAgm:
    def test_limit_zero(self):
        assert complete_k(1e-9) == pytest.approx(math.pi / 2, rel=1e-12)

    def test_self_dual(self):
        assert agm_period_oracle(1 / math.sqrt(2)) == pytest.approx(1j, rel=1e-14)

    def test_direct_quadrature(self):
        k = 0.5
        kp = math.sqrt(1 - k * k)

        # K(k) = int_0^1 dx / sqrt((1-x^2)(1-k^2 x^2)); (1-x^2)^(-1/2) = (1-x)^(-1/2)(1+x)^(-1/2)
        def K_direct(m):
            v, _ = quad(lambda x: 1 / math.sqrt((1 + x) * (1 - m * m * x * x)), 0, 1, weight="alg", wvar=(0, -0.5), epsrel=1e-14)
            return v

        assert complete_k(k) == pytest.approx(K_direct(k), rel=1e-12)
        assert agm_period_oracle(k) == pytest.approx(1j * K_direct(kp) / K_direct(k), rel=1e-12)

    def test_agm_value(self):
        # Gauss's constant
        assert agm(1.0, math.sqrt(2.0)) == pytest.approx(1.1981402347355922, rel=1e-15)

    def test_range(self):
        with pytest.raises(ValueError):
            agm_period_oracle(1.0)
