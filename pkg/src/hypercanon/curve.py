"""Hyperelliptic curves ``y**2 = f(x)`` with an even number of finite branch points.

The curve is stored through its branch points.  Square roots of ``f`` are tracked
by analytic continuation along contours built from straight lines and circular
arcs, and the monomial holomorphic differentials ``x**(k-1) dx / y`` are
evaluated in three kinds of local charts:

* ``X``      -- the coordinate ``x`` itself, away from the branch points;
* ``BRANCH`` -- ``x = lambda_j + s**2`` around branch point ``j``;
* ``INF``    -- ``x = 1/xi`` around one of the two points over infinity.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ChartViolation, ContinuationStall, InvalidBranchSet

# Largest accepted sum of per-factor argument increments in one continuation step.
_ARG_BOUND = 0.5 * math.pi
_MAX_SUBDIV = 60
_TIE_TOL = 1e-12


# --------------------------------------------------------------------------
# Branch data
# --------------------------------------------------------------------------


def canonical_order(points: Sequence[complex]) -> list[complex]:
    return sorted((complex(p) for p in points), key=lambda z: (z.real, z.imag))


@dataclass(frozen=True)
class BranchSet:
    """Branch points in canonical (real part, then imaginary part) order."""

    points: tuple[complex, ...]
    min_gap: float

    @classmethod
    def from_points(cls, points: Sequence[complex]) -> "BranchSet":
        pts = canonical_order(points)
        n = len(pts)
        if n < 4 or n % 2:
            raise InvalidBranchSet(f"need an even number >= 4 of branch points, got {n}")
        if not all(math.isfinite(p.real) and math.isfinite(p.imag) for p in pts):
            raise InvalidBranchSet("branch points must be finite")
        arr = np.array(pts)
        d = np.abs(arr[:, None] - arr[None, :])
        d[np.diag_indices(n)] = np.inf
        gap = float(d.min())
        if not gap > 0.0:
            raise InvalidBranchSet("branch points must be distinct")
        return cls(tuple(pts), gap)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.points, dtype=complex)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class CurveModel:
    branch: BranchSet
    genus: int
    anchor_x: complex
    anchor_y: complex
    lam: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def from_roots(cls, roots: Sequence[complex]) -> "CurveModel":
        branch = BranchSet.from_points(roots)
        lam = branch.array
        genus = (len(lam) - 2) // 2
        # Anchor on a ray that clears every branch point; the ray beyond the anchor
        # runs to infinity without meeting the branch set.
        radius = float(np.abs(lam).max()) + 2.0 * branch.min_gap
        anchor_x = radius * cmath.exp(1j * math.pi / 5.0)
        f_anchor = complex(np.prod(anchor_x - lam))
        anchor_y = cmath.sqrt(f_anchor)
        lam.setflags(write=False)
        return cls(branch, genus, anchor_x, anchor_y, lam)

    @property
    def r_chart(self) -> float:
        return self.branch.min_gap / 3.0

    @property
    def d_safe(self) -> float:
        return self.branch.min_gap / 10.0

    @property
    def branch_radius(self) -> float:
        """Radius in ``x`` of the disk covered by each branch chart."""
        return 1.5 * self.r_chart

    @property
    def inf_radius(self) -> float:
        """Radius in ``xi = 1/x`` of the disk covered by each infinity chart."""
        return 1.0 / (float(np.abs(self.lam).max()) + self.r_chart)

    def gaps(self) -> np.ndarray:
        """Distance from each branch point to its nearest neighbour."""
        d = np.abs(self.lam[:, None] - self.lam[None, :])
        d[np.diag_indices(len(self.lam))] = np.inf
        return d.min(axis=1)

    def distance_to_branch(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return np.abs(x[..., None] - self.lam).min(axis=-1)


def eval_poly(curve: CurveModel, x):
    """Return ``f(x)`` and ``f'(x)`` from a single pass over the branch points.

    Works elementwise on arrays.
    """
    x = np.asarray(x, dtype=complex)
    f = np.ones_like(x)
    fp = np.zeros_like(x)
    for lam in curve.lam:
        fp = fp * (x - lam) + f
        f = f * (x - lam)
    if f.ndim == 0:
        return complex(f), complex(fp)
    return f, fp


# --------------------------------------------------------------------------
# Contours
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Line:
    start: complex
    end: complex

    def at(self, s):
        return self.start + np.asarray(s) * (self.end - self.start)

    def velocity(self, s):
        return np.full(np.shape(s), self.end - self.start, dtype=complex)

    @property
    def length(self) -> float:
        return abs(self.end - self.start)

    def reversed(self) -> "Line":
        return Line(self.end, self.start)

    def distance(self, pts: np.ndarray) -> np.ndarray:
        d = self.end - self.start
        if d == 0:
            return np.abs(pts - self.start)
        s = np.clip(((pts - self.start) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
        return np.abs(pts - (self.start + s * d))


@dataclass(frozen=True)
class Arc:
    """Circular arc ``center + radius*exp(i*(theta0 + s*span))``, ``s`` in [0, 1].

    A positive ``span`` is counter-clockwise.
    """

    center: complex
    radius: float
    theta0: float
    span: float

    def at(self, s):
        return self.center + self.radius * np.exp(1j * (self.theta0 + np.asarray(s) * self.span))

    def velocity(self, s):
        return 1j * self.span * self.radius * np.exp(1j * (self.theta0 + np.asarray(s) * self.span))

    @property
    def start(self) -> complex:
        return complex(self.at(0.0))

    @property
    def end(self) -> complex:
        return complex(self.at(1.0))

    @property
    def length(self) -> float:
        return abs(self.span) * self.radius

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.theta0 + self.span, -self.span)

    def distance(self, pts: np.ndarray) -> np.ndarray:
        rel = pts - self.center
        ang = np.angle(rel)
        lo = min(self.theta0, self.theta0 + self.span)
        # angular offset of each point into the arc's span, modulo 2*pi
        off = np.mod(ang - lo, 2.0 * math.pi)
        inside = off <= abs(self.span)
        radial = np.abs(np.abs(rel) - self.radius)
        ends = np.minimum(np.abs(pts - self.start), np.abs(pts - self.end))
        return np.where(inside, radial, ends)


Segment = Line | Arc


@dataclass(frozen=True)
class Contour:
    segments: tuple[Segment, ...]

    def __post_init__(self):
        for a, b in zip(self.segments, self.segments[1:]):
            if abs(a.end - b.start) > 1e-12 * (1.0 + abs(a.end)):
                raise ValueError("consecutive contour segments must share endpoints")

    @classmethod
    def polygon(cls, vertices: Sequence[complex], closed: bool = True) -> "Contour":
        v = [complex(z) for z in vertices]
        if closed:
            v = v + [v[0]]
        return cls(tuple(Line(a, b) for a, b in zip(v, v[1:])))

    @property
    def start(self) -> complex:
        return self.segments[0].start

    @property
    def end(self) -> complex:
        return self.segments[-1].end

    @property
    def is_closed(self) -> bool:
        return abs(self.end - self.start) <= 1e-12 * (1.0 + abs(self.start))

    def reversed(self) -> "Contour":
        return Contour(tuple(s.reversed() for s in reversed(self.segments)))

    def clearance(self, pts: np.ndarray) -> float:
        pts = np.asarray(pts, dtype=complex)
        return float(min(seg.distance(pts).min() for seg in self.segments))


# --------------------------------------------------------------------------
# Square-root continuation
# --------------------------------------------------------------------------


def _march(point: Callable[[float], complex], roots: np.ndarray, scale: complex, w0: complex) -> complex:
    """Continue a square root of ``scale * prod(z - roots)`` along ``point(s)``, s: 0 -> 1.

    Steps are halved until the summed per-factor argument change is below
    ``_ARG_BOUND``; the new value is the square root closest to the previous one.
    """
    s = 0.0
    z = complex(point(0.0))
    w = complex(w0)
    h = 1.0
    while s < 1.0:
        h = min(h, 1.0 - s)
        for _ in range(_MAX_SUBDIV):
            zn = complex(point(s + h))
            if roots.size == 0:
                break
            turn = np.abs(np.angle((zn - roots) / (z - roots))).sum()
            if turn < _ARG_BOUND:
                break
            h *= 0.5
        else:
            raise ContinuationStall(f"step control failed near z = {z:.6g}")
        if roots.size and np.abs(zn - roots).min() == 0.0:
            raise ContinuationStall(f"contour passes through a branch point at {zn:.6g}")
        r = cmath.sqrt(scale * complex(np.prod(zn - roots)))
        w = r if abs(r - w) <= abs(r + w) else -r
        s += h
        z = zn
        h *= 2.0
    return w


def continue_y(curve: CurveModel, contour: Contour, y_seed: complex) -> complex:
    """Analytically continue ``y = sqrt(f)`` from the start of ``contour`` to its end."""
    y = complex(y_seed)
    for seg in contour.segments:
        y = _march(seg.at, curve.lam, 1.0, y)
    return y


def continue_y_to(curve: CurveModel, contour: Contour, y_seed: complex) -> list[complex]:
    """Values of ``y`` at the start of every segment, plus the end value."""
    out = [complex(y_seed)]
    for seg in contour.segments:
        out.append(_march(seg.at, curve.lam, 1.0, out[-1]))
    return out


def sqrt_product(x, x0: complex, y0: complex, lam: np.ndarray):
    """``y(x)`` continued along the straight segment from ``x0`` (where ``y = y0``).

    Each factor ``sqrt((x - l)/(x0 - l))`` subtends less than pi along a line
    missing ``l``, so principal roots give the exact continuation.
    """
    x = np.asarray(x, dtype=complex)
    ratio = (x[..., None] - lam) / (x0 - lam)
    return y0 * np.prod(np.sqrt(ratio), axis=-1)


# --------------------------------------------------------------------------
# Paths from the anchor (sheet labels)
# --------------------------------------------------------------------------


def _detour_path(curve: CurveModel, a: complex, b: complex) -> Contour:
    """Straight path ``a -> b`` with minor-arc detours of radius d_safe around branch points."""
    r = curve.d_safe
    d = b - a
    length = abs(d)
    if length == 0.0:
        raise ValueError("degenerate path")
    u = d / length
    hits = []
    for lam in curve.lam:
        rel = (lam - a) * np.conj(u)
        along, across = rel.real, rel.imag
        if abs(across) >= r:
            continue
        half = math.sqrt(r * r - across * across)
        t0, t1 = along - half, along + half
        if t1 <= 0.0 or t0 >= length:
            continue
        if t0 <= 0.0 or t1 >= length:
            raise ChartViolation("path endpoint lies within d_safe of a branch point")
        hits.append((t0, t1, complex(lam)))
    hits.sort(key=lambda h: h[0])
    segs: list[Segment] = []
    cur = a
    for t0, t1, lam in hits:
        p, q = a + t0 * u, a + t1 * u
        th_p = cmath.phase(p - lam)
        th_q = cmath.phase(q - lam)
        ccw = math.remainder(th_q - th_p, 2.0 * math.pi)
        if abs(abs(ccw) - math.pi) <= _TIE_TOL:
            ccw = math.pi
        arc = Arc(lam, r, th_p, ccw)
        segs.append(Line(cur, arc.start))
        segs.append(arc)
        cur = arc.end
    segs.append(Line(cur, b))
    return Contour(tuple(segs))


def anchor_path(curve: CurveModel, x: complex) -> Contour:
    return _detour_path(curve, curve.anchor_x, complex(x))


# --------------------------------------------------------------------------
# Surface points and charts
# --------------------------------------------------------------------------


class Chart(enum.Enum):
    X = "x"
    BRANCH = "branch"
    INF = "inf"


@dataclass(frozen=True)
class SurfacePoint:
    """A point of the curve in a chart.

    ``index`` is the sheet (1 or 2) for ``X``/``INF`` and the branch index for
    ``BRANCH``.  ``root`` is the chart's own square root: ``y`` in ``X``, ``q``
    with ``y = s*q`` in ``BRANCH``, ``eta`` with ``y = eta * xi**-(g+1)`` in ``INF``.
    """

    chart: Chart
    index: int
    coord: complex
    x: complex
    y: complex
    root: complex


def _branch_roots(curve: CurveModel, j: int) -> np.ndarray:
    """Zeros in ``s`` of ``q(s)**2 = prod_{i != j}(lambda_j + s**2 - lambda_i)``."""
    others = np.delete(curve.lam, j)
    a = np.sqrt(others - curve.lam[j])
    return np.concatenate([a, -a])


def _inf_roots(curve: CurveModel) -> tuple[np.ndarray, complex]:
    lam = curve.lam[curve.lam != 0]
    return 1.0 / lam, complex(np.prod(-lam))


def check_chart(curve: CurveModel, chart: Chart, coord: complex) -> None:
    if chart is Chart.X:
        if float(curve.distance_to_branch(coord)) <= curve.r_chart:
            raise ChartViolation(f"x = {coord:.6g} is within r_chart of a branch point")
    elif chart is Chart.BRANCH:
        if abs(coord) ** 2 >= curve.branch_radius:
            raise ChartViolation(f"s = {coord:.6g} outside the branch chart")
    else:
        if abs(coord) >= curve.inf_radius:
            raise ChartViolation(f"xi = {coord:.6g} outside the infinity chart")


def point_x(curve: CurveModel, x: complex, sheet: int = 1) -> SurfacePoint:
    """Point over ``x`` on the given sheet; sheet 1 continues the anchor's principal root."""
    x = complex(x)
    check_chart(curve, Chart.X, x)
    y = continue_y(curve, anchor_path(curve, x), curve.anchor_y)
    if sheet == 2:
        y = -y
    elif sheet != 1:
        raise ValueError("sheet must be 1 or 2")
    return SurfacePoint(Chart.X, sheet, x, x, y, y)


def point_branch(curve: CurveModel, j: int, s: complex = 0.0) -> SurfacePoint:
    """Point with branch-chart coordinate ``s`` near branch point ``j``."""
    s = complex(s)
    check_chart(curve, Chart.BRANCH, s)
    lam_j = complex(curve.lam[j])
    roots = _branch_roots(curve, j)
    q0 = cmath.sqrt(complex(np.prod(lam_j - np.delete(curve.lam, j))))
    q = q0 if s == 0 else _march(Line(0j, s).at, roots, 1.0, q0)
    return SurfacePoint(Chart.BRANCH, j, s, lam_j + s * s, s * q, q)


def _inf_seed(curve: CurveModel) -> complex:
    """``eta(0)`` on sheet 1, continued outward along the anchor ray."""
    g = curve.genus
    xi_a = 1.0 / curve.anchor_x
    roots, scale = _inf_roots(curve)
    eta_a = curve.anchor_y * xi_a ** (g + 1)
    return _march(Line(xi_a, 0j).at, roots, scale, eta_a)


def point_inf(curve: CurveModel, xi: complex, sheet: int = 1) -> SurfacePoint:
    xi = complex(xi)
    check_chart(curve, Chart.INF, xi)
    roots, scale = _inf_roots(curve)
    eta = _inf_seed(curve)
    if xi != 0:
        eta = _march(Line(0j, xi).at, roots, scale, eta)
    if sheet == 2:
        eta = -eta
    x = np.inf if xi == 0 else 1.0 / xi
    y = np.inf if xi == 0 else eta * xi ** (-(curve.genus + 1))
    return SurfacePoint(Chart.INF, sheet, xi, complex(x), complex(y), eta)


def move_point(curve: CurveModel, p: SurfacePoint, coord: complex) -> SurfacePoint:
    """Same chart, new coordinate; the chart root is continued locally from ``p``."""
    coord = complex(coord)
    check_chart(curve, p.chart, coord)
    path = Line(p.coord, coord).at
    if p.chart is Chart.X:
        y = _march(path, curve.lam, 1.0, p.root)
        return SurfacePoint(Chart.X, p.index, coord, coord, y, y)
    if p.chart is Chart.BRANCH:
        q = _march(path, _branch_roots(curve, p.index), 1.0, p.root)
        return SurfacePoint(Chart.BRANCH, p.index, coord, complex(curve.lam[p.index]) + coord**2, coord * q, q)
    roots, scale = _inf_roots(curve)
    eta = _march(path, roots, scale, p.root)
    x = np.inf if coord == 0 else 1.0 / coord
    y = np.inf if coord == 0 else eta * coord ** (-(curve.genus + 1))
    return SurfacePoint(Chart.INF, p.index, coord, complex(x), complex(y), eta)


# --------------------------------------------------------------------------
# Differential frame
# --------------------------------------------------------------------------


def differential_frame(curve: CurveModel, p: SurfacePoint) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients ``h0`` of ``omega_k = x**(k-1) dx / y`` in ``p``'s chart and their derivatives ``h1``."""
    check_chart(curve, p.chart, p.coord)
    g = curve.genus
    k = np.arange(g)  # exponent k-1 of the k-th differential
    if p.chart is Chart.X:
        x, y = p.x, p.root
        dlog = complex(np.sum(1.0 / (x - curve.lam)))
        xp = x ** k
        xpm = np.where(k > 0, k * x ** np.maximum(k - 1, 0), 0.0)
        h0 = xp / y
        h1 = (xpm - xp * dlog / 2.0) / y
    elif p.chart is Chart.BRANCH:
        s, q, x = p.coord, p.root, p.x
        dlog = complex(np.sum(1.0 / (x - np.delete(curve.lam, p.index))))
        xp = x ** k
        xpm = np.where(k > 0, k * x ** np.maximum(k - 1, 0), 0.0)
        h0 = 2.0 * xp / q
        h1 = (2.0 / q) * (2.0 * s * xpm - xp * s * dlog)
    else:
        xi, eta = p.coord, p.root
        n = g - 1 - k  # exponent g - k of xi
        dlog = complex(np.sum(curve.lam / (1.0 - curve.lam * xi)))
        xin = xi ** n
        xinm = np.where(n > 0, n * xi ** np.maximum(n - 1, 0), 0.0)
        h0 = -xin / eta
        h1 = -(xinm + 0.5 * xin * dlog) / eta
    h0 = np.asarray(h0, dtype=complex)
    h1 = np.asarray(h1, dtype=complex)
    return h0, h1


def chart_wronskian(curve: CurveModel, p: SurfacePoint) -> np.ndarray:
    """``W[a, b] = h0_a h1_b - h0_b h1_a`` in closed form (no cancellation)."""
    g = curve.genus
    a = np.arange(1, g + 1)
    diff = a[None, :] - a[:, None]  # (b - a)
    if p.chart is Chart.INF:
        xi = p.coord
        expo = 2 * g - 1 - a[:, None] - a[None, :]
        pw = np.where(diff != 0, xi ** np.maximum(expo, 0), 0.0)
        return -diff * pw / p.root**2
    x = p.x
    expo = a[:, None] + a[None, :] - 3
    pw = np.where(diff != 0, x ** np.maximum(expo, 0), 0.0)
    if p.chart is Chart.X:
        return diff * pw / p.root**2
    return 8.0 * p.coord * diff * pw / p.root**2
