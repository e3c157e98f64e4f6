"""Pinching families obtained by colliding branch points, and their curvature statistics.

A nonseparating node is produced by two branch points ``+-t`` colliding (genus 3);
a separating node by an odd cluster ``eps * alpha_i`` of five points shrinking to 0
(genus 4 splitting into 2 + 2).  Near the colliding pair the exact local model
``y**2 = (x**2 - t**2) P(x)`` is opened by the collar coordinate ``u``:

    x = (u + t**2/u) / 2,   w = (u - t**2/u) / 2,   y = w * sqrt(P(x)),

so that ``u * v = t**2`` with ``v = t**2/u``.  The plumbing parameter is ``t_p = t**2``
and ``L = |log|t_p||``.  In the ``u`` chart ``omega_k = x**(k-1) du / (u sqrt(P))``.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .curve import Chart, CurveModel, SurfacePoint, point_branch, point_x, sqrt_product
from .errors import OutOfCollar
from .homology import chain_order
from .metric import MetricEvaluator, curvature_from_parts, x_parts
from .periods import QuadratureConfig, compute_riemann_matrix

NONSEP_BETA = (2.0, -2.0, 3.0, -3.0, 2.0 + 2.0j, 2.0 - 2.0j)
SEP_ALPHA = tuple(0.8 * cmath.exp(2j * math.pi * k / 5) for k in range(5))
SEP_BETA = (2.0, 3.0, -2.0, -3.0, 4.0)
T_GRID = (1e-2, 10**-2.5, 1e-3, 10**-3.5, 1e-4)
EPS_GRID = (1e-2, 1e-3, 1e-4)
T_FLOOR = 1e-6
U_MAX = 0.5
N_ANGLES = 64


class PinchKind(enum.Enum):
    NONSEP = "nonsep"
    SEP = "sep"


@dataclass(frozen=True)
class PinchFamily:
    """One member of a pinching family.

    ``fixed_roots`` are the frozen far branch points (``beta``); for ``SEP`` the
    shrinking cluster is ``t * cluster``.
    """

    kind: PinchKind
    t: complex
    fixed_roots: tuple = ()
    cluster: tuple = ()
    quad: QuadratureConfig = field(default=QuadratureConfig(), compare=False)

    def __post_init__(self):
        kind = PinchKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "t", complex(self.t))
        if not T_FLOOR <= abs(self.t) < 1.0:
            raise ValueError(f"|t| must lie in [{T_FLOOR}, 1)")
        if not self.fixed_roots:
            object.__setattr__(self, "fixed_roots", NONSEP_BETA if kind is PinchKind.NONSEP else SEP_BETA)
        if kind is PinchKind.SEP and not self.cluster:
            object.__setattr__(self, "cluster", SEP_ALPHA)
        beta = np.asarray(self.fixed_roots, dtype=complex)
        if np.min(np.abs(beta)) < 2.0:
            raise ValueError("fixed roots must satisfy |beta| >= 2")
        if kind is PinchKind.NONSEP and len(beta) != 6:
            raise ValueError("nonseparating families use six fixed roots (genus 3)")
        if kind is PinchKind.SEP:
            if len(beta) != 5 or len(self.cluster) != 5:
                raise ValueError("separating families use five cluster and five fixed roots (genus 4)")
            if np.max(np.abs(np.asarray(self.cluster))) > 1.0:
                raise ValueError("cluster points must satisfy |alpha| <= 1")

    @property
    def roots(self) -> list[complex]:
        beta = [complex(b) for b in self.fixed_roots]
        if self.kind is PinchKind.NONSEP:
            return [self.t, -self.t] + beta
        return [self.t * complex(a) for a in self.cluster] + beta

    @property
    def L(self) -> float:
        return 2.0 * abs(math.log(abs(self.t)))

    @property
    def t_p(self) -> complex:
        return self.t * self.t

    @cached_property
    def curve(self) -> CurveModel:
        return CurveModel.from_roots(self.roots)

    @cached_property
    def vanishing_link(self) -> int | None:
        """Chain link joining ``+-t`` (its loop is the vanishing cycle)."""
        if self.kind is not PinchKind.NONSEP:
            return None
        lam = self.curve.lam
        chain = [complex(lam[i]) for i in chain_order(self.curve)]
        ends = {self.t, -self.t}
        for k in range(len(chain) - 1):
            if {chain[k], chain[k + 1]} == ends:
                return k
        raise ValueError("the colliding pair is not adjacent in the cycle chain")

    @cached_property
    def evaluator(self) -> MetricEvaluator:
        rm = compute_riemann_matrix(self.curve, self.quad, first_link=self.vanishing_link)
        return MetricEvaluator(self.curve, rm)


# --------------------------------------------------------------------------
# Collar chart
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CollarChart:
    family: PinchFamily
    u_max: float = U_MAX

    def __post_init__(self):
        if self.family.kind is not PinchKind.NONSEP:
            raise ValueError("the collar chart exists for nonseparating families only")
        if not abs(self.family.t) < self.u_max <= 1.0:
            raise ValueError("collar annulus is empty")

    @property
    def L(self) -> float:
        return self.family.L

    @property
    def r_inner(self) -> float:
        return abs(self.family.t)

    @property
    def r_mid(self) -> float:
        """Boundary ``|log|t_p||**-1/2`` between the inner region B' and the outer region B''."""
        return self.L**-0.5

    def check(self, u) -> None:
        r = np.abs(np.asarray(u))
        # the inner circle itself is admitted: u = +-t are the branch points
        if np.any(r < self.r_inner * (1.0 - 1e-12)) or np.any(r >= self.u_max):
            raise OutOfCollar(f"|u| must lie in ({self.r_inner:.3g}, {self.u_max:.3g})")

    def to_x(self, u):
        u = np.asarray(u, dtype=complex)
        t2 = self.family.t_p
        return 0.5 * (u + t2 / u)

    def from_x(self, x):
        """Inverse map ``u = x + sqrt(x**2 - t**2)``, branch continuous from the outer circle."""
        x = np.asarray(x, dtype=complex)
        t = self.family.t
        # the two roots are u and t**2/u; keep the one outside |u| = |t|
        w = np.sqrt(x - t) * np.sqrt(x + t)
        u = x + w
        return np.where(np.abs(u) >= abs(t), u, x - w)

    @cached_property
    def _sqrt_p_ref(self) -> tuple[complex, complex]:
        """``sqrt(P)`` at a reference point, fixed so that ``y = w sqrt(P)`` is on sheet 1."""
        curve = self.family.curve
        x_ref = complex(0.5 * self.u_max)
        p = point_x(curve, x_ref, 1)
        w_ref = complex(self.from_x(x_ref)) - x_ref
        return x_ref, p.y / w_ref

    def sqrt_p(self, x):
        x_ref, s_ref = self._sqrt_p_ref
        beta = np.asarray(self.family.fixed_roots, dtype=complex)
        return sqrt_product(np.asarray(x, dtype=complex), x_ref, s_ref, beta)

    def abs_p(self, x):
        x = np.asarray(x, dtype=complex)
        beta = np.asarray(self.family.fixed_roots, dtype=complex)
        return np.abs(np.prod(x[..., None] - beta, axis=-1))

    def density(self, u):
        """``rho`` in the ``u`` chart: ``|M m(x)|^2 / (|u|^2 |P(x)|)``."""
        u = np.asarray(u, dtype=complex)
        x = self.to_x(u)
        n2, _, _ = x_parts(self.family.evaluator, x)
        return n2 / (np.abs(u) ** 2 * self.abs_p(x))

    def curvature(self, u):
        x = self.to_x(np.asarray(u, dtype=complex))
        return curvature_from_parts(*x_parts(self.family.evaluator, x))


def collar_to_surface(family: PinchFamily, u: complex, u_max: float = U_MAX) -> SurfacePoint:
    """Surface point with collar coordinate ``u`` (an ``X`` point, or ``BRANCH`` near ``+-t``)."""
    chart = CollarChart(family, u_max)
    u = complex(u)
    chart.check(u)
    curve = family.curve
    t2 = family.t_p
    x = 0.5 * (u + t2 / u)
    w = 0.5 * (u - t2 / u)
    y = complex(w * chart.sqrt_p(x))
    dist = curve.distance_to_branch(x)
    if float(dist) > curve.r_chart:
        return SurfacePoint(Chart.X, 1, x, x, y, y)
    j = int(np.argmin(np.abs(curve.lam - x)))
    s = cmath.sqrt(x - complex(curve.lam[j]))
    if s == 0:
        return point_branch(curve, j, 0j)
    return SurfacePoint(Chart.BRANCH, j, s, x, y, y / s)


def angular_grid(n: int, phase: float = 0.0) -> np.ndarray:
    return np.exp(1j * (phase + 2.0 * math.pi * np.arange(n) / n))


@dataclass(frozen=True)
class RadiusStats:
    radius: float
    max_abs_K: float
    median_abs_K: float
    max_K: float


def curvature_profile(family: PinchFamily, radii: Sequence[float], n_angles: int = N_ANGLES, phase: float = 0.0) -> list[RadiusStats]:
    """``|K|`` statistics on circles ``|u| = r`` of the collar."""
    chart = CollarChart(family)
    out = []
    for r in radii:
        u = r * angular_grid(n_angles, phase)
        chart.check(u)
        K = chart.curvature(u)
        a = np.abs(K)
        out.append(RadiusStats(float(r), float(a.max()), float(np.median(a)), float(K.max())))
    return out


# --------------------------------------------------------------------------
# Sweeps and reports
# --------------------------------------------------------------------------


def band(values) -> float:
    """Ratio of the largest to the smallest value."""
    v = np.asarray(values, dtype=float)
    return float(v.max() / v.min())


def strictly_increasing(values) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) > 0))


@dataclass(frozen=True)
class ScalingRow:
    t: float
    L: float
    M_outer: float
    M_mid: float
    M_inner: float
    max_K: float

    @property
    def mid_ratio(self) -> float:
        return self.M_mid / self.L

    @property
    def inner_ratio(self) -> float:
        return self.M_inner / (self.t**2 * self.L**2)


@dataclass(frozen=True)
class ScalingReport:
    rows: tuple[ScalingRow, ...]
    n_angles: int

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    @property
    def envelope_constant(self) -> float:
        return float(self.column("inner_ratio").max())

    def checks(self) -> dict[str, bool]:
        return {
            "M_mid_increasing": strictly_increasing(self.column("M_mid")),
            "M_mid_over_L_band": band(self.column("mid_ratio")) <= 1.3,
            "M_outer_band": band(self.column("M_outer")) <= 2.0,
            "M_inner_decreasing": strictly_increasing(-self.column("M_inner")),
            "M_inner_envelope_band": band(self.column("inner_ratio")) <= 3.0,
            "nonpositive": bool(np.all(self.column("max_K") <= 1e-9)),
        }

    def as_dict(self) -> dict:
        rows = []
        for r in self.rows:
            rows.append(
                {
                    "t": r.t,
                    "L": r.L,
                    "M_outer": r.M_outer,
                    "M_mid": r.M_mid,
                    "M_inner": r.M_inner,
                    "M_mid_over_L": r.mid_ratio,
                    "M_inner_over_tp_L2": r.inner_ratio,
                }
            )
        return {"rows": rows, "n_angles": self.n_angles, "envelope_constant": self.envelope_constant, "checks": self.checks()}


def _check_grid(grid: Sequence[float]) -> list[float]:
    grid = [float(abs(t)) for t in grid]
    if len(grid) < 2 or any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValueError("parameter grid must be strictly descending with at least two values")
    if grid[0] >= 0.02 + 1e-12 or grid[-1] < T_FLOOR:
        raise ValueError(f"grid values must lie in [{T_FLOOR}, 0.02]")
    return grid


def nonsep_row(family: PinchFamily, n_angles: int = N_ANGLES) -> ScalingRow:
    chart = CollarChart(family)
    radii = (0.9 * chart.u_max, chart.r_mid, 2.0 * chart.r_inner)
    stats = curvature_profile(family, radii, n_angles)
    return ScalingRow(
        abs(family.t), family.L, stats[0].max_abs_K, stats[1].max_abs_K, stats[2].max_abs_K, max(s.max_K for s in stats)
    )


def nonsep_sweep(
    t_grid: Sequence[float] = T_GRID,
    n_angles: int = N_ANGLES,
    fixed_roots: Sequence[complex] = NONSEP_BETA,
    quad: QuadratureConfig = QuadratureConfig(),
) -> ScalingReport:
    grid = _check_grid(t_grid)
    rows = [nonsep_row(PinchFamily(PinchKind.NONSEP, t, tuple(fixed_roots), quad=quad), n_angles) for t in grid]
    return ScalingReport(tuple(rows), n_angles)


def collar_metric_check(
    family: PinchFamily, n_radii: int = 24, n_angles: int = N_ANGLES, c_star: float = 20.0
) -> tuple[float, float, bool]:
    """Extremes of ``rho_u |u|^2 L`` over the inner region ``|t| < |u| < L**-1/2``."""
    chart = CollarChart(family)
    s = np.linspace(math.log(chart.r_inner), math.log(chart.r_mid), n_radii + 2)[1:-1]
    u = (np.exp(s)[:, None] * angular_grid(n_angles)[None, :]).ravel()
    vals = chart.density(u) * np.abs(u) ** 2 * chart.L
    lo, hi = float(vals.min()), float(vals.max())
    return lo, hi, bool(1.0 / c_star <= lo and hi <= c_star)


def collar_outer_bounds(family: PinchFamily, n_radii: int = 24, n_angles: int = N_ANGLES) -> tuple[float, float]:
    """Extremes of ``rho_u`` over the outer region ``L**-1/2 < |u| < u_max``."""
    chart = CollarChart(family)
    s = np.linspace(math.log(chart.r_mid), math.log(chart.u_max), n_radii + 2)[1:-1]
    u = (np.exp(s)[:, None] * angular_grid(n_angles)[None, :]).ravel()
    vals = chart.density(u)
    return float(vals.min()), float(vals.max())


@dataclass(frozen=True)
class CollarQuadConfig:
    rel_tol: float = 1e-8
    n_radial: int = 16
    n_angles: int = 32
    max_doublings: int = 8


def collar_integral(family: PinchFamily, config: CollarQuadConfig = CollarQuadConfig()) -> float:
    """``I(t) = L * integral of rho_u over the inner region`` (polar, log-radial Gauss-Legendre).

    With ``u = exp(s + i theta)`` the area element is ``|u|^2 ds dtheta`` and
    ``rho_u |u|^2 = |M m(x)|^2 / |P(x)|`` is smooth, so a tensor Gauss-Legendre /
    trapezoid rule converges quickly; both orders are doubled until the value
    settles to ``rel_tol``.
    """
    from .errors import QuadratureDivergence
    from .periods import gauss_legendre

    chart = CollarChart(family)
    s0, s1 = math.log(chart.r_inner), math.log(chart.r_mid)
    ev = family.evaluator

    def estimate(nr: int, na: int) -> float:
        nodes, weights = gauss_legendre(nr)
        s = s0 + (s1 - s0) * nodes
        u = (np.exp(s)[:, None] * angular_grid(na)[None, :])
        x = chart.to_x(u)
        n2, _, _ = x_parts(ev, x)
        f = n2 / chart.abs_p(x)
        radial = f.mean(axis=1) * 2.0 * math.pi
        return float(chart.L * (s1 - s0) * np.dot(weights, radial))

    nr, na = config.n_radial, config.n_angles
    prev = estimate(nr, na)
    for _ in range(config.max_doublings):
        nr, na = 2 * nr, 2 * na
        cur = estimate(nr, na)
        if abs(cur - prev) <= config.rel_tol * abs(cur):
            return cur
        prev = cur
    raise QuadratureDivergence("collar integral did not converge")


@dataclass(frozen=True)
class GramRow:
    t: float
    L: float
    im_omega_11: float
    a11: float
    max_offdiag: float
    max_first_row: float

    @property
    def im11_over_L(self) -> float:
        return self.im_omega_11 / self.L


def gram_asymptotics(
    t_grid: Sequence[float] = T_GRID,
    fixed_roots: Sequence[complex] = NONSEP_BETA,
    quad: QuadratureConfig = QuadratureConfig(),
) -> list[GramRow]:
    """``Im Omega_11``, ``a^11`` and the largest off-diagonal ``|a^jk|`` along the family.

    Index 1 is the differential normalized on the vanishing cycle.
    """
    grid = _check_grid(t_grid)
    rows = []
    for t in grid:
        fam = PinchFamily(PinchKind.NONSEP, t, tuple(fixed_roots), quad=quad)
        rm = fam.evaluator.rm
        a = rm.A_inv_im
        off = np.abs(a - np.diag(np.diag(a))).max()
        first = np.abs(a[0, 1:]).max()
        rows.append(GramRow(t, fam.L, float(rm.omega[0, 0].imag), float(a[0, 0]), float(off), float(first)))
    return rows


def decade_differences(rows: Sequence[GramRow]) -> list[float]:
    """``Im Omega_11(t/10) - Im Omega_11(t)`` for every grid pair one decade apart."""
    by_t = {round(math.log10(r.t), 6): r for r in rows}
    out = []
    for key, r in sorted(by_t.items(), reverse=True):
        other = by_t.get(round(key - 1.0, 6))
        if other is not None:
            out.append(other.im_omega_11 - r.im_omega_11)
    return out


@dataclass(frozen=True)
class SepRow:
    eps: float
    max_abs_K: float
    max_rho: float
    max_K: float
    max_abs_K_neck: float
    max_rho_neck: float
    max_abs_K_generic: float


def sep_probes(eps: float, n_generic: int = 16, n_neck: int = N_ANGLES) -> tuple[np.ndarray, np.ndarray]:
    """Generic probes on ``|x| = 1.5`` and neck samples on ``|x| = sqrt(eps)`` (phase offset half a step)."""
    generic = 1.5 * angular_grid(n_generic, math.pi / n_generic)
    neck = math.sqrt(eps) * angular_grid(n_neck, math.pi / n_neck)
    return generic, neck


def sep_row(family: PinchFamily, n_generic: int = 16, n_neck: int = N_ANGLES) -> SepRow:
    """Curvature and density at the probes.

    Around the odd cluster the surface is branched over ``x``, so the neck is
    parametrized by ``z = sqrt(x)`` and its density is ``rho_z = 4 |x| rho_x``.
    """
    ev = family.evaluator
    generic, neck = sep_probes(abs(family.t), n_generic, n_neck)
    n2g, b2g, afg = x_parts(ev, generic)
    n2n, b2n, afn = x_parts(ev, neck)
    Kg = curvature_from_parts(n2g, b2g, afg)
    Kn = curvature_from_parts(n2n, b2n, afn)
    rho_g = n2g / afg
    rho_n = 4.0 * np.abs(neck) * n2n / afn
    K = np.concatenate([Kg, Kn])
    return SepRow(
        abs(family.t),
        float(np.abs(K).max()),
        float(max(rho_g.max(), rho_n.max())),
        float(K.max()),
        float(np.abs(Kn).max()),
        float(rho_n.max()),
        float(np.abs(Kg).max()),
    )


def sep_sweep(
    eps_grid: Sequence[float] = EPS_GRID,
    fixed_roots: Sequence[complex] = SEP_BETA,
    cluster: Sequence[complex] = SEP_ALPHA,
    quad: QuadratureConfig = QuadratureConfig(),
) -> list[SepRow]:
    grid = _check_grid(eps_grid)
    return [sep_row(PinchFamily(PinchKind.SEP, e, tuple(fixed_roots), tuple(cluster), quad=quad)) for e in grid]
