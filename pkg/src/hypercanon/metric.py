"""Canonical (Bergman) metric density, its Gaussian curvature, and global integrals.

With ``A = (Im Omega)^-1`` and the A-normalized frame ``w = C^T h0`` the density
is ``rho = sum_ij A_ij w_i conj(w_j)``.  Writing ``A = L L^T`` and ``M = L^T C^T``
gives ``rho = |M h0|^2`` and the curvature bracket

    rho * <w', w'> - |<w', w>|^2 = 1/2 * || M W M^T ||_F^2,

where ``W = h0 h1^T - h1 h0^T`` is the Wronskian matrix of the monomial frame.
In the ``x`` chart ``W[a, b] = (b - a) x**(a+b-3) / f(x)`` exactly, so

    K(x) = -|f(x)| * || M V(x) M^T ||_F^2 / |M m(x)|^6,

with ``m_k = x**(k-1)`` and ``V[a, b] = (b - a) x**(a+b-3)``.  The expression is
free of cancellation, nonpositive by construction, and vanishes exactly at the
branch points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curve import Chart, CurveModel, SurfacePoint, chart_wronskian, check_chart, differential_frame, eval_poly
from .errors import ChartViolation, DegenerateDensity
from .periods import QuadratureConfig, RiemannMatrix, compute_riemann_matrix

RHO_FLOOR = 1e-14
IMAG_RESIDUAL = 1e-10


@dataclass(frozen=True)
class MetricEvaluator:
    curve: CurveModel
    rm: RiemannMatrix
    M: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.rm.genus != self.curve.genus:
            raise ValueError("Riemann matrix genus does not match the curve")
        L = np.linalg.cholesky(self.rm.A_inv_im)
        object.__setattr__(self, "M", L.T @ self.rm.C.T)

    @classmethod
    def from_curve(cls, curve: CurveModel, config: QuadratureConfig = QuadratureConfig()) -> "MetricEvaluator":
        return cls(curve, compute_riemann_matrix(curve, config))

    @property
    def genus(self) -> int:
        return self.curve.genus


@dataclass(frozen=True)
class CurvatureSample:
    point: SurfacePoint
    rho: float
    K: float


# --------------------------------------------------------------------------
# Pointwise evaluation on SurfacePoints
# --------------------------------------------------------------------------


def rho(ev: MetricEvaluator, p: SurfacePoint) -> float:
    """Density of the canonical metric in ``p``'s chart."""
    h0, _ = differential_frame(ev.curve, p)
    w = ev.rm.C.T @ h0
    val = complex(w @ ev.rm.A_inv_im @ np.conj(w))
    if abs(val.imag) > IMAG_RESIDUAL * max(abs(val.real), 1e-300):
        raise ArithmeticError(f"density has imaginary residual {val.imag:.3g}")
    return val.real


def curvature(ev: MetricEvaluator, p: SurfacePoint) -> CurvatureSample:
    """Gaussian curvature at ``p`` (chart invariant) together with the chart density."""
    h0, _ = differential_frame(ev.curve, p)
    ph = ev.M @ h0
    r = float(np.vdot(ph, ph).real)
    if r < RHO_FLOOR:
        raise DegenerateDensity(f"density {r:.3g} below floor")
    W = chart_wronskian(ev.curve, p)
    mw = ev.M @ W @ ev.M.T
    K = -float(np.sum(np.abs(mw) ** 2)) / r**3
    return CurvatureSample(p, r, K)


def curvature_gram(ev: MetricEvaluator, p: SurfacePoint) -> float:
    """Curvature from the two A-weighted inner products minus the cross term."""
    h0, h1 = differential_frame(ev.curve, p)
    A = ev.rm.A_inv_im
    w = ev.rm.C.T @ h0
    wp = ev.rm.C.T @ h1

    def inner(u, v):
        return complex(u @ A @ np.conj(v))

    r = inner(w, w).real
    bracket = r * inner(wp, wp).real - abs(inner(wp, w)) ** 2
    return -2.0 * bracket / r**3


def rho_extended(ev: MetricEvaluator, chart: Chart, index: int, coord) -> np.longdouble:
    """Chart density in extended precision.

    ``rho`` depends on ``y`` only through ``|y|^2 = |f(x)|``, so it is evaluated
    from the coordinate alone; the fixed matrix ``M`` is promoted as is.
    """
    z = np.clongdouble(coord)
    lam = ev.curve.lam.astype(np.clongdouble)
    M = ev.M.astype(np.clongdouble)
    g = ev.genus
    if chart is Chart.INF:
        basis = np.array([z ** (g - 1 - k) for k in range(g)], dtype=np.clongdouble)
        denom = np.abs(np.prod(1 - lam * z))
        scale = 1
    else:
        x = z if chart is Chart.X else lam[index] + z * z
        basis = np.array([x**k for k in range(g)], dtype=np.clongdouble)
        if chart is Chart.X:
            denom, scale = np.abs(np.prod(x - lam)), 1
        else:
            denom, scale = np.abs(np.prod(np.delete(x - lam, index))), 4
    v = M @ basis
    return scale * np.sum(np.abs(v) ** 2) / denom


def curvature_fd(ev: MetricEvaluator, p: SurfacePoint, h: float | None = None, richardson: bool = False) -> float:
    """Five-point finite-difference curvature ``-(2/rho) d^2 log(rho) / dz dzbar``.

    The default step is ``1e-4 * r_chart``.  Densities at the stencil are taken
    in extended precision: at such small steps double-precision rounding in
    ``log(rho)`` would otherwise dominate the second difference.  With
    ``richardson`` the results at ``h`` and ``h/2`` are combined to cancel the
    O(h^2) term.
    """
    if h is None:
        h = 1e-4 * ev.curve.r_chart
    check_chart(ev.curve, p.chart, p.coord)
    c0 = np.clongdouble(p.coord)

    def at_step(step: float) -> float:
        logs = np.longdouble(0)
        for d in (step, -step, 1j * step, -1j * step):
            try:
                check_chart(ev.curve, p.chart, p.coord + d)
            except ChartViolation as exc:
                raise ChartViolation(f"finite-difference stencil leaves the chart: {exc}") from exc
            logs += np.log(rho_extended(ev, p.chart, p.index, c0 + np.clongdouble(d)))
        r0 = rho_extended(ev, p.chart, p.index, c0)
        lap = (logs - 4 * np.log(r0)) / (4 * np.longdouble(step) ** 2)
        return float(-2 * lap / r0)

    k1 = at_step(h)
    if not richardson:
        return k1
    k2 = at_step(h / 2.0)
    return (4.0 * k2 - k1) / 3.0


# --------------------------------------------------------------------------
# Vectorized chart evaluations (x, branch, infinity)
# --------------------------------------------------------------------------


def _powers(z: np.ndarray, exps: np.ndarray) -> np.ndarray:
    return z[..., None] ** exps


def _vander_wronskian(z: np.ndarray, g: int, top: int) -> np.ndarray:
    """``V[a, b] = (b - a) z**(e_ab)`` with ``e_ab = a+b-3`` (top=0) or ``2g-1-a-b`` (top=1)."""
    a = np.arange(1, g + 1)
    diff = (a[None, :] - a[:, None]).astype(float)
    expo = a[:, None] + a[None, :] - 3 if top == 0 else 2 * g - 1 - a[:, None] - a[None, :]
    expo = np.where(diff != 0, np.maximum(expo, 0), 0)
    return diff * z[..., None, None] ** expo


def x_parts(ev: MetricEvaluator, x: np.ndarray):
    """``(|M m|^2, ||M V M^T||^2, |f|)`` at points ``x``."""
    x = np.asarray(x, dtype=complex)
    g = ev.genus
    m = _powers(x, np.arange(g))
    pm = m @ ev.M.T
    n2 = np.sum(np.abs(pm) ** 2, axis=-1)
    V = _vander_wronskian(x, g, 0)
    mvm = ev.M @ V @ ev.M.T
    b2 = np.sum(np.abs(mvm) ** 2, axis=(-2, -1))
    f, _ = eval_poly(ev.curve, x)
    return n2, b2, np.abs(f)


def inf_parts(ev: MetricEvaluator, xi: np.ndarray):
    """``(|M n|^2, ||M U M^T||^2, |F|)`` in the infinity chart ``x = 1/xi``."""
    xi = np.asarray(xi, dtype=complex)
    g = ev.genus
    n = _powers(xi, np.arange(g - 1, -1, -1))
    pn = n @ ev.M.T
    n2 = np.sum(np.abs(pn) ** 2, axis=-1)
    U = _vander_wronskian(xi, g, 1)
    mum = ev.M @ U @ ev.M.T
    b2 = np.sum(np.abs(mum) ** 2, axis=(-2, -1))
    F = np.prod(1.0 - xi[..., None] * ev.curve.lam, axis=-1)
    return n2, b2, np.abs(F)


def curvature_from_parts(n2, b2, absf):
    with np.errstate(divide="ignore", invalid="ignore"):
        return -absf * b2 / n2**3


def density_x(ev: MetricEvaluator, x) -> np.ndarray:
    n2, _, af = x_parts(ev, x)
    return n2 / af


def curvature_x(ev: MetricEvaluator, x) -> np.ndarray:
    """Gaussian curvature at the points over ``x`` (the same on both sheets)."""
    return curvature_from_parts(*x_parts(ev, x))


def density_branch(ev: MetricEvaluator, j: int, s) -> np.ndarray:
    s = np.asarray(s, dtype=complex)
    x = ev.curve.lam[j] + s * s
    n2, _, _ = x_parts(ev, x)
    others = np.delete(ev.curve.lam, j)
    G = np.prod(x[..., None] - others, axis=-1)
    return 4.0 * n2 / np.abs(G)


def density_inf(ev: MetricEvaluator, xi) -> np.ndarray:
    n2, _, aF = inf_parts(ev, xi)
    return n2 / aF


def curvature_inf(ev: MetricEvaluator, xi) -> np.ndarray:
    return curvature_from_parts(*inf_parts(ev, xi))


# --------------------------------------------------------------------------
# Global integrals
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SurfaceQuadConfig:
    """Uniform-grid (trapezoid) integration of smooth, compactly supported pieces.

    The surface is split by a smooth partition of unity into disks around each
    branch point (integrated in ``s``), a bulk piece (in ``x``, both sheets) and a
    cap around the two points at infinity (in ``xi``).  Each piece is refined by
    halving the grid step until successive values agree to ``rel_tol``.
    """

    rel_tol: float = 1e-7
    max_levels: int = 6
    chunk: int = 100_000


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class _Partition:
    lam: np.ndarray
    r0: np.ndarray
    r1: np.ndarray
    R1: float
    R2: float

    @classmethod
    def for_curve(cls, curve: CurveModel) -> "_Partition":
        r1 = 0.45 * curve.gaps()
        r0 = 0.5 * r1
        R1 = float(np.max(np.abs(curve.lam) + r1))
        return cls(curve.lam, r0, r1, R1, 2.0 * R1)

    def branch_weight(self, j: int, x):
        d = np.abs(np.asarray(x) - self.lam[j])
        return 1.0 - smooth_step((d - self.r0[j]) / (self.r1[j] - self.r0[j]))

    def inf_weight(self, x):
        return smooth_step((np.abs(x) - self.R1) / (self.R2 - self.R1))

    def bulk_weight(self, x):
        w = 1.0 - self.inf_weight(x)
        for j in range(len(self.lam)):
            w = w - (1.0 - self.inf_weight(x)) * self.branch_weight(j, x)
        return w


def _lattice(half: float, h: float):
    n = max(4, math.ceil(2.0 * half / h))
    step = 2.0 * half / n
    t = -half + step * (np.arange(n) + 0.5)
    return t, step


def _grid_sum(fn, center: complex, half: float, h: float, m: int, chunk: int):
    """Trapezoid sum of ``fn`` (returning (N, m) values) over a square lattice.

    Returns the sum and the sum of absolute values.
    """
    t, step = _lattice(half, h)
    total = np.zeros(m, dtype=complex)
    mag = 0.0
    rows_per_chunk = max(1, chunk // len(t))
    for i in range(0, len(t), rows_per_chunk):
        z = center + (t[None, :] + 1j * t[i : i + rows_per_chunk, None]).ravel()
        vals = fn(z)
        total += vals.sum(axis=0) * step * step
        mag += float(np.abs(vals).sum()) * step * step
    return total, mag


def _refine(fn, center, half, h0, m, config: SurfaceQuadConfig, label: str):
    from .errors import QuadratureDivergence

    prev, _ = _grid_sum(fn, center, half, h0, m, config.chunk)
    h = h0
    for _ in range(config.max_levels):
        h *= 0.5
        cur, mag = _grid_sum(fn, center, half, h, m, config.chunk)
        if np.abs(cur - prev).max() <= config.rel_tol * max(mag, 1e-300):
            return cur
        prev = cur
    raise QuadratureDivergence(f"surface integral over the {label} piece did not converge")


def _surface_integral(ev: MetricEvaluator, kind: str, config: SurfaceQuadConfig):
    curve = ev.curve
    part = _Partition.for_curve(curve)
    g = ev.genus
    m = g * g if kind == "gram" else 1
    CT = ev.rm.C.T

    def x_values(x, w):
        out = np.zeros((x.size, m), dtype=complex)
        live = w > 0
        xl = x[live]
        if kind == "gram":
            f, _ = eval_poly(curve, xl)
            u = _powers(xl, np.arange(g)) @ CT.T
            prod = u[:, :, None] * np.conj(u[:, None, :]) / np.abs(f)[:, None, None]
            out[live] = prod.reshape(len(xl), m)
        else:
            n2, b2, af = x_parts(ev, xl)
            dens = n2 / af
            if kind == "curvature":
                dens = dens * curvature_from_parts(n2, b2, af)
            out[live, 0] = dens
        return out * w[:, None]

    def bulk(x):
        return 2.0 * x_values(x, part.bulk_weight(x))

    def disk(j):
        others = np.delete(curve.lam, j)

        def fn(s):
            x = curve.lam[j] + s * s
            w = part.branch_weight(j, x)
            w = np.where(np.abs(s) ** 2 < part.r1[j], w, 0.0)
            out = np.zeros((s.size, m), dtype=complex)
            live = w > 0
            xl = x[live]
            G = np.abs(np.prod(xl[:, None] - others, axis=-1))
            if kind == "gram":
                u = _powers(xl, np.arange(g)) @ CT.T
                prod = 4.0 * u[:, :, None] * np.conj(u[:, None, :]) / G[:, None, None]
                out[live] = prod.reshape(len(xl), m)
            else:
                n2, b2, af = x_parts(ev, xl)
                dens = 4.0 * n2 / G
                if kind == "curvature":
                    dens = dens * curvature_from_parts(n2, b2, af)
                out[live, 0] = dens
            return out * w[:, None]

        return fn

    def cap(xi):
        with np.errstate(divide="ignore"):
            xabs = np.where(xi == 0, np.inf, 1.0 / np.abs(np.where(xi == 0, 1.0, xi)))
        w = np.where(np.isinf(xabs), 1.0, smooth_step((xabs - part.R1) / (part.R2 - part.R1)))
        w = np.where(np.abs(xi) < 1.0 / part.R1, w, 0.0)
        out = np.zeros((xi.size, m), dtype=complex)
        live = w > 0
        zl = xi[live]
        if kind == "gram":
            F = np.abs(np.prod(1.0 - zl[:, None] * curve.lam, axis=-1))
            u = _powers(zl, np.arange(g - 1, -1, -1)) @ CT.T
            prod = u[:, :, None] * np.conj(u[:, None, :]) / F[:, None, None]
            out[live] = prod.reshape(len(zl), m)
        else:
            n2, b2, aF = inf_parts(ev, zl)
            dens = n2 / aF
            if kind == "curvature":
                dens = dens * curvature_from_parts(n2, b2, aF)
            out[live, 0] = dens
        return 2.0 * out * w[:, None]

    pieces = []
    width = float(np.min(part.r1 - part.r0))
    pieces.append(_refine(bulk, 0j, part.R2, width / 2.0, m, config, "bulk"))
    for j in range(len(curve.lam)):
        rs1, rs0 = math.sqrt(part.r1[j]), math.sqrt(part.r0[j])
        pieces.append(_refine(disk(j), 0j, rs1, (rs1 - rs0) / 2.0, m, config, f"branch {j}"))
    pieces.append(_refine(cap, 0j, 1.0 / part.R1, (1.0 / part.R1 - 1.0 / part.R2) / 4.0, m, config, "infinity"))
    return np.sum(np.array(pieces), axis=0)


def surface_area(ev: MetricEvaluator, config: SurfaceQuadConfig = SurfaceQuadConfig()) -> float:
    """Total area of the surface in the canonical metric (equals the genus)."""
    return float(_surface_integral(ev, "area", config)[0].real)


def total_curvature(ev: MetricEvaluator, config: SurfaceQuadConfig = SurfaceQuadConfig()) -> float:
    """Integral of ``K`` against the canonical area form."""
    return float(_surface_integral(ev, "curvature", config)[0].real)


def gram_matrix(ev: MetricEvaluator, config: SurfaceQuadConfig = SurfaceQuadConfig()) -> np.ndarray:
    """All pairings ``(i/2) * integral of w_i ^ conj(w_j)`` of the normalized differentials."""
    g = ev.genus
    return _surface_integral(ev, "gram", config).reshape(g, g)


def gram_pairing(ev: MetricEvaluator, i: int, j: int, config: SurfaceQuadConfig = SurfaceQuadConfig()) -> complex:
    """Pairing of normalized differentials ``i`` and ``j`` (1-based)."""
    g = ev.genus
    if not (1 <= i <= g and 1 <= j <= g):
        raise IndexError("differential indices run from 1 to g")
    return complex(gram_matrix(ev, config)[i - 1, j - 1])
