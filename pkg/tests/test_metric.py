import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypercanon.curve import CurveModel, point_branch, point_inf, point_x
from hypercanon.errors import ChartViolation
from hypercanon.metric import (
    CurvatureSample,
    MetricEvaluator,
    SurfaceQuadConfig,
    curvature,
    curvature_fd,
    curvature_gram,
    curvature_inf,
    curvature_x,
    density_branch,
    density_inf,
    density_x,
    gram_matrix,
    gram_pairing,
    rho,
    rho_extended,
    smooth_step,
    surface_area,
    total_curvature,
)
from hypercanon.periods import compute_riemann_matrix

from conftest import GENUS2_ROOTS, generic_points, random_curve, roots_of_unity


class TestEvaluator:
    def test_genus_mismatch(self, sextic):
        other = compute_riemann_matrix(CurveModel.from_roots(roots_of_unity(8)))
        with pytest.raises(ValueError):
            MetricEvaluator(sextic.curve, other)

    def test_cholesky_factor(self, genus3):
        rm = genus3.rm
        MtM = genus3.M.T @ genus3.M
        assert np.allclose(MtM, rm.C @ rm.A_inv_im @ rm.C.T, rtol=1e-12, atol=1e-14 * np.abs(MtM).max())


class TestDensity:
    def test_positive(self, genus3):
        for x in generic_points(genus3.curve, 20, seed=5):
            assert rho(genus3, point_x(genus3.curve, x, 1)) > 0

    def test_sheet_independent(self, genus3):
        x = 1.1 - 0.9j
        assert rho(genus3, point_x(genus3.curve, x, 1)) == pytest.approx(rho(genus3, point_x(genus3.curve, x, 2)), rel=1e-14)

    def test_chart_overlap_factor(self, genus3):
        c = genus3.curve
        j = 4
        s = cmath.sqrt(1.2 * c.r_chart) * cmath.exp(0.4j)
        pb = point_branch(c, j, s)
        px = point_x(c, pb.x, 1)
        # |dx/ds|^2 = |2s|^2
        assert rho(genus3, pb) == pytest.approx(rho(genus3, px) * abs(2 * s) ** 2, rel=1e-8)

    def test_vectorized_agrees(self, genus3):
        c = genus3.curve
        xs = generic_points(c, 5, seed=9)
        assert np.allclose(density_x(genus3, xs), [rho(genus3, point_x(c, x)) for x in xs], rtol=1e-12)
        s = np.array([0.02 + 0.01j, -0.03j])
        assert np.allclose(density_branch(genus3, 2, s), [rho(genus3, point_branch(c, 2, v)) for v in s], rtol=1e-12)
        xi = np.array([0.05, 0.02 - 0.08j])
        assert np.allclose(density_inf(genus3, xi), [rho(genus3, point_inf(c, v)) for v in xi], rtol=1e-12)

    def test_extended_density(self, genus3):
        p = point_x(genus3.curve, 0.3 + 1.7j, 2)
        assert float(rho_extended(genus3, p.chart, p.index, p.coord)) == pytest.approx(rho(genus3, p), rel=1e-12)

    def test_genus_one_density_is_flat(self, quartic):
        # rho = |w|^2 / Im tau, and in the flat coordinate of the torus this is constant
        c = quartic.curve
        x = 0.4 + 0.5j
        p = point_x(c, x, 1)
        assert rho(quartic, p) == pytest.approx(float(density_x(quartic, [x])[0]), rel=1e-12)


class TestCurvature:
    def test_genus_one_flat(self, quartic):
        for x in generic_points(quartic.curve, 10, seed=2):
            assert abs(curvature(quartic, point_x(quartic.curve, x)).K) <= 1e-8

    def test_branch_points_vanish(self, sextic):
        for j in range(6):
            s = curvature(sextic, point_branch(sextic.curve, j, 0))
            assert isinstance(s, CurvatureSample)
            assert abs(s.K) <= 1e-6 and s.rho > 0

    def test_generic_negative(self, sextic):
        for x in generic_points(sextic.curve, 10, seed=4):
            assert curvature(sextic, point_x(sextic.curve, x)).K < 0

    def test_gram_form_agrees(self, genus3):
        c = genus3.curve
        pts = [point_x(c, 0.2 + 1.9j), point_branch(c, 1, 0.02 + 0.01j), point_inf(c, 0.07j, 2)]
        for p in pts:
            assert curvature_gram(genus3, p) == pytest.approx(curvature(genus3, p).K, rel=1e-10)

    def test_chart_invariance(self, genus3):
        c = genus3.curve
        s = cmath.sqrt(1.3 * c.r_chart) * cmath.exp(2.1j)
        pb = point_branch(c, 5, s)
        px = point_x(c, pb.x, 2)
        assert curvature(genus3, pb).K == pytest.approx(curvature(genus3, px).K, rel=1e-8)
        x = 1 / (0.9 * c.inf_radius) * cmath.exp(0.7j)
        pi = point_inf(c, 1 / x, 1)
        assert curvature(genus3, pi).K == pytest.approx(curvature(genus3, point_x(c, x)).K, rel=1e-8)

    def test_vectorized_agrees(self, genus3):
        c = genus3.curve
        xs = generic_points(c, 5, seed=11)
        assert np.allclose(curvature_x(genus3, xs), [curvature(genus3, point_x(c, x)).K for x in xs], rtol=1e-12)
        xi = np.array([0.03 + 0.01j])
        assert curvature_inf(genus3, xi)[0] == pytest.approx(curvature(genus3, point_inf(c, xi[0])).K, rel=1e-12)


class TestFiniteDifferences:
    def test_genus_one(self, quartic):
        p = point_x(quartic.curve, 0.3 + 0.6j)
        assert abs(curvature_fd(quartic, p)) < 1e-5

    @pytest.mark.parametrize("chart", ["x", "branch", "inf"])
    def test_agreement(self, genus2, chart):
        c = genus2.curve
        p = {
            "x": point_x(c, 0.5 + 1.6j),
            "branch": point_branch(c, 0, 0.1 * cmath.sqrt(c.branch_radius)),
            "inf": point_inf(c, 0.3 * c.inf_radius),
        }[chart]
        k = curvature(genus2, p).K
        assert curvature_fd(genus2, p) == pytest.approx(k, rel=1e-5)
        assert curvature_fd(genus2, p, richardson=True) == pytest.approx(k, rel=1e-5)

    def test_stencil_leaves_chart(self, genus2):
        c = genus2.curve
        x = c.lam[0] + 1.01 * c.r_chart
        p = point_x(c, x)
        with pytest.raises(ChartViolation):
            curvature_fd(genus2, p, h=0.05 * c.r_chart)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), g=st.integers(2, 4))
def test_nonpositive_random(seed, g):
    rng = np.random.default_rng(seed)
    ev = MetricEvaluator.from_curve(random_curve(rng, g))
    x = rng.uniform(-3, 3, 200) + 1j * rng.uniform(-3, 3, 200)
    K = curvature_x(ev, x)
    assert np.all(K <= 1e-9 * (1 + np.abs(K)))


class TestGlobal:
    def test_smooth_step(self):
        t = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
        assert np.allclose(smooth_step(t), [0, 0, 0.5, 1, 1])

    @pytest.mark.parametrize("name", ["quartic", "sextic"])
    def test_area(self, name, request):
        ev = request.getfixturevalue(name)
        assert surface_area(ev) == pytest.approx(ev.genus, rel=1e-6)

    def test_area_genus3(self, genus3):
        assert surface_area(genus3) == pytest.approx(3, rel=1e-6)

    def test_gauss_bonnet(self, sextic):
        assert total_curvature(sextic) == pytest.approx(-4 * math.pi, rel=1e-6)

    def test_flat_total_curvature(self, quartic):
        assert abs(total_curvature(quartic)) < 0.05

    def test_gram(self, genus2):
        G = gram_matrix(genus2)
        assert np.allclose(G, G.conj().T, atol=1e-8)
        assert np.all(np.diag(G).real > 0)
        assert np.allclose(G.real, genus2.rm.omega.imag, rtol=1e-6)
        assert gram_pairing(genus2, 1, 2) == pytest.approx(G[0, 1])

    def test_gram_index(self, genus2):
        with pytest.raises(IndexError):
            gram_pairing(genus2, 0, 1)

    def test_coarse_tolerance_still_close(self, sextic):
        assert surface_area(sextic, SurfaceQuadConfig(rel_tol=1e-3)) == pytest.approx(2, rel=1e-3)
