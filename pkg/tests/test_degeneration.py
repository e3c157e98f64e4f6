import math

import numpy as np
import pytest

from hypercanon.curve import Chart, eval_poly
from hypercanon.degeneration import (
    NONSEP_BETA,
    CollarChart,
    CollarQuadConfig,
    PinchFamily,
    PinchKind,
    band,
    collar_integral,
    collar_metric_check,
    collar_outer_bounds,
    collar_to_surface,
    curvature_profile,
    decade_differences,
    gram_asymptotics,
    nonsep_row,
    nonsep_sweep,
    sep_probes,
    sep_sweep,
    strictly_increasing,
)
from hypercanon.errors import OutOfCollar
from hypercanon.metric import curvature, rho


@pytest.fixture(scope="module")
def fam3():
    return PinchFamily(PinchKind.NONSEP, 1e-3)


@pytest.fixture(scope="module")
def sweep():
    return nonsep_sweep()


class TestFamily:
    def test_defaults(self):
        f = PinchFamily("nonsep", 1e-2)
        assert f.kind is PinchKind.NONSEP
        assert f.roots[:2] == [1e-2, -1e-2]
        assert f.curve.genus == 3
        assert f.L == pytest.approx(2 * math.log(100))
        assert f.t_p == pytest.approx(1e-4)

    def test_sep_defaults(self):
        f = PinchFamily(PinchKind.SEP, 1e-3)
        assert f.curve.genus == 4
        assert f.vanishing_link is None
        assert max(abs(r) for r in f.roots[:5]) == pytest.approx(0.8e-3)

    @pytest.mark.parametrize(
        "kw",
        [
            {"kind": "nonsep", "t": 1e-7},
            {"kind": "nonsep", "t": 1.0},
            {"kind": "nonsep", "t": 1e-3, "fixed_roots": (1.5, -2, 3, -3, 2j, -2j)},
            {"kind": "nonsep", "t": 1e-3, "fixed_roots": (2, -2, 3, -3)},
            {"kind": "sep", "t": 1e-3, "cluster": (1.2, 0.5, -0.5, 0.5j, -0.5j)},
            {"kind": "bogus", "t": 1e-3},
        ],
    )
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            PinchFamily(**kw)

    def test_vanishing_link_joins_pair(self, fam3):
        from hypercanon.homology import chain_order

        chain = [complex(fam3.curve.lam[i]) for i in chain_order(fam3.curve)]
        k = fam3.vanishing_link
        assert {chain[k], chain[k + 1]} == {fam3.t, -fam3.t}

    def test_only_first_period_diverges(self):
        # Omega_11 grows like log|t|^-2; every other entry converges as t -> 0
        a = PinchFamily("nonsep", 1e-2).evaluator.rm.omega
        b = PinchFamily("nonsep", 1e-4).evaluator.rm.omega
        d = np.abs(a - b)
        assert d[0, 0] > 1 and d[0, 1:].max() < 1e-4 and d[1:, 1:].max() < 1e-4


class TestCollar:
    def test_inner_circle_is_branch_point(self, fam3):
        p = collar_to_surface(fam3, fam3.t)
        assert p.chart is Chart.BRANCH and p.coord == 0
        assert p.x == pytest.approx(fam3.t)

    def test_far_field_is_half_u(self, fam3):
        chart = CollarChart(fam3)
        u = 0.3 * np.exp(1j * np.linspace(0, 6, 7))
        err = np.abs(chart.to_x(u) - u / 2)
        assert np.all(err <= np.abs(fam3.t_p / u))

    def test_round_trip(self, fam3):
        chart = CollarChart(fam3)
        r = np.exp(np.linspace(math.log(1.01e-3), math.log(0.49), 9))
        u = r * np.exp(0.37j * np.arange(9))
        assert np.allclose(chart.from_x(chart.to_x(u)), u, rtol=1e-10, atol=0)

    @pytest.mark.parametrize("r", [0.5e-3, 0.5, 0.7])
    def test_out_of_collar(self, fam3, r):
        with pytest.raises(OutOfCollar):
            collar_to_surface(fam3, r)

    def test_sep_has_no_collar(self):
        with pytest.raises(ValueError):
            CollarChart(PinchFamily("sep", 1e-3))

    def test_point_on_curve(self, fam3):
        for u in (0.2 + 0.1j, 0.004j, -0.03):
            p = collar_to_surface(fam3, u)
            f, _ = eval_poly(fam3.curve, p.x)
            assert abs(p.y**2 - f) <= 1e-10 * (1 + abs(f))

    def test_density_matches_x_chart(self, fam3):
        chart = CollarChart(fam3)
        u = 0.05 * np.exp(0.8j)
        p = collar_to_surface(fam3, u)
        dxdu = 0.5 * (1 - fam3.t_p / u**2)
        assert float(chart.density(u)) == pytest.approx(rho(fam3.evaluator, p) * abs(dxdu) ** 2, rel=1e-10)

    def test_curvature_chart_invariant(self, fam3):
        chart = CollarChart(fam3)
        for u in (0.05 * np.exp(0.8j), 0.0011 * np.exp(2.0j)):
            assert float(chart.curvature(u)) == pytest.approx(curvature(fam3.evaluator, collar_to_surface(fam3, u)).K, rel=1e-8)


class TestProfiles:
    def test_half_step_rotation(self, fam3):
        radii = (0.45, CollarChart(fam3).r_mid, 2e-3)
        a = curvature_profile(fam3, radii)
        b = curvature_profile(fam3, radii, phase=math.pi / 64)
        for sa, sb in zip(a, b):
            assert sb.max_abs_K == pytest.approx(sa.max_abs_K, rel=0.05)

    def test_row_radii_ordered(self, fam3):
        row = nonsep_row(fam3)
        assert row.max_K < 0
        assert row.M_inner < row.M_mid

    def test_sweep_monotone(self, sweep):
        assert strictly_increasing(sweep.column("M_mid"))
        assert strictly_increasing(-sweep.column("M_inner"))
        assert sweep.checks()["nonpositive"]

    def test_report_dict(self, sweep):
        d = sweep.as_dict()
        assert len(d["rows"]) == 5 and set(d["checks"]) == set(sweep.checks())
        assert d["envelope_constant"] == pytest.approx(sweep.column("inner_ratio").max())

    @pytest.mark.parametrize("grid", [[1e-3, 1e-2], [1e-2], [0.1, 0.01], [1e-3, 1e-7]])
    def test_grid_rejected(self, grid):
        with pytest.raises(ValueError):
            nonsep_sweep(grid)

    def test_helpers(self):
        assert band([2.0, 4.0, 3.0]) == 2.0
        assert strictly_increasing([1, 2, 3]) and not strictly_increasing([1, 1, 2])


class TestCollarRegions:
    def test_inner_bounds_stable(self):
        rows = [collar_metric_check(PinchFamily("nonsep", t)) for t in (1e-3, 1e-4)]
        assert all(ok for _, _, ok in rows)
        assert band([r[0] for r in rows]) <= 2 and band([r[1] for r in rows]) <= 2

    def test_outer_bounds(self):
        for t in (1e-2, 1e-3, 1e-4):
            lo, hi = collar_outer_bounds(PinchFamily("nonsep", t))
            assert 0 < lo < hi < 1

    def test_integral_refinement(self, fam3):
        coarse = collar_integral(fam3, CollarQuadConfig(rel_tol=1e-3, n_radial=8, n_angles=16))
        assert coarse == pytest.approx(collar_integral(fam3), rel=0.01)

    def test_integral_grows_like_L(self):
        vals = [collar_integral(PinchFamily("nonsep", t)) for t in (1e-2, 1e-3, 1e-4)]
        assert strictly_increasing(vals)


@pytest.fixture(scope="module")
def gram_rows():
    return gram_asymptotics()


@pytest.fixture(scope="module")
def sep_rows():
    return sep_sweep()


class TestGram:
    def test_im_omega_increasing(self, gram_rows):
        assert strictly_increasing([r.im_omega_11 for r in gram_rows])

    def test_decade_difference_oracle(self, gram_rows):
        # the B_1 period of the normalized differential grows like (1/2 pi) log |t|^-2
        for d in decade_differences(gram_rows):
            assert d == pytest.approx(math.log(10) / math.pi, rel=1e-3)

    def test_a11_decays(self, gram_rows):
        a = [r.a11 for r in gram_rows]
        assert strictly_increasing([-v for v in a])
        assert band([r.a11 * r.L for r in gram_rows]) <= 2

    def test_custom_roots(self):
        beta = tuple(1.5 * b for b in NONSEP_BETA)
        rows = gram_asymptotics([1e-2, 1e-3], beta)
        assert len(decade_differences(rows)) == 1


class TestSeparating:
    def test_probes(self):
        g, n = sep_probes(1e-4, 8, 16)
        assert np.allclose(np.abs(g), 1.5) and np.allclose(np.abs(n), 1e-2)

    def test_nonpositive(self, sep_rows):
        assert all(r.max_K < 0 for r in sep_rows)

    def test_density_bounded(self, sep_rows):
        assert band([r.max_rho for r in sep_rows]) <= 1.1

    def test_generic_curvature_stable(self, sep_rows):
        assert band([r.max_abs_K_generic for r in sep_rows]) <= 1.1
