"""Periods of the monomial differentials and the normalized Riemann matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .curve import Arc, CurveModel, Line, _march, sqrt_product
from .errors import QuadratureDivergence, RiemannRelationViolation, SingularAperiod
from .homology import Cycle, CycleBasis, homology_basis

COND_LIMIT = 1e12
SYMMETRY_LIMIT = 1e-6


@dataclass(frozen=True)
class QuadratureConfig:
    gl_order: int = 24
    rel_tol: float = 1e-10
    max_depth: int = 12

    def __post_init__(self):
        if self.gl_order < 4:
            raise ValueError("gl_order must be >= 4")
        if not 0.0 < self.rel_tol <= 1e-4:
            raise ValueError("rel_tol must lie in (0, 1e-4]")
        if self.max_depth < 4:
            raise ValueError("max_depth must be >= 4")


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


# --------------------------------------------------------------------------
# Path quadrature
# --------------------------------------------------------------------------


def _graded_panels(seg, lam: np.ndarray, kappa: float = 1.0) -> np.ndarray:
    """Split [0, 1] until every panel is no longer than ``kappa`` times its distance
    to the branch set.  Returns panel edges."""
    todo = [(0.0, 1.0)]
    done = []
    total = seg.length
    while todo:
        a, b = todo.pop()
        piece = Line(complex(seg.at(a)), complex(seg.at(b))) if isinstance(seg, Line) else None
        dist = piece.distance(lam).min() if piece is not None else _arc_piece_distance(seg, a, b, lam)
        if (b - a) * total > kappa * dist and (b - a) > 1e-14:
            m = 0.5 * (a + b)
            todo.extend(((m, b), (a, m)))
        else:
            done.append((a, b))
    done.sort()
    return np.array([d[0] for d in done] + [1.0])


def _arc_piece_distance(arc: Arc, a: float, b: float, lam: np.ndarray) -> float:
    sub = Arc(arc.center, arc.radius, arc.theta0 + a * arc.span, (b - a) * arc.span)
    return float(sub.distance(lam).min())


def _segment_pieces(seg, lam: np.ndarray):
    """Pieces of a segment on which ``y`` follows the product formula from the piece start."""
    if isinstance(seg, Line):
        return [(0.0, 1.0)]
    # chord/arc lens must be free of branch points
    clear = float(seg.distance(lam).min())
    n = max(1, math.ceil(abs(seg.span) / (math.pi / 8.0)))
    while seg.radius * (1.0 - math.cos(abs(seg.span) / n / 2.0)) > 0.25 * clear:
        n *= 2
    edges = np.linspace(0.0, 1.0, n + 1)
    return list(zip(edges[:-1], edges[1:]))


def _panel_integrand(curve: CurveModel, seg, s: np.ndarray, x0: complex, y0: complex) -> np.ndarray:
    x = seg.at(s)
    y = sqrt_product(x, x0, y0, curve.lam)
    dx = seg.velocity(s)
    k = np.arange(curve.genus)
    return (x[..., None] ** k) * (dx / y)[..., None]


def _integrate_piece(curve, seg, a, b, x0, y0, config, scale_hint=None):
    """Adaptive Gauss-Legendre over parameter interval [a, b] of ``seg``."""
    nodes, weights = gauss_legendre(config.gl_order)
    edges = _graded_panels(_sub_segment(seg, a, b), curve.lam)
    lo = a + (b - a) * edges[:-1]
    hi = a + (b - a) * edges[1:]

    def gl(lo, hi):
        h = (hi - lo)[:, None]
        s = lo[:, None] + h * nodes[None, :]
        vals = _panel_integrand(curve, seg, s, x0, y0)
        return np.einsum("pn,pnk->pk", h * weights[None, :], vals)

    whole = gl(lo, hi)
    scale = np.abs(whole).sum() if scale_hint is None else scale_hint
    accepted = []
    depth = 0
    while lo.size:
        mid = 0.5 * (lo + hi)
        left, right = gl(lo, mid), gl(mid, hi)
        halves = left + right
        err = np.abs(halves - whole).max(axis=1)
        ref = np.maximum(np.abs(halves).max(axis=1), scale / max(len(edges) - 1, 1))
        ok = err <= config.rel_tol * ref
        accepted.append(halves[ok])
        if ok.all():
            break
        depth += 1
        if depth >= config.max_depth:
            bad = lo[~ok][0]
            raise QuadratureDivergence(f"max_depth reached on segment {seg} near parameter {bad:.6g}")
        keep = ~ok
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        whole = np.concatenate([left[keep], right[keep]])
    return np.concatenate(accepted, axis=0)


def _sub_segment(seg, a: float, b: float):
    if isinstance(seg, Line):
        return Line(complex(seg.at(a)), complex(seg.at(b)))
    return Arc(seg.center, seg.radius, seg.theta0 + a * seg.span, (b - a) * seg.span)


def integrate_over_cycle(curve: CurveModel, cycle: Cycle, config: QuadratureConfig = QuadratureConfig()) -> np.ndarray:
    """``[integral of x**(k-1) dx / y over the cycle for k = 1..g]``."""
    parts = []
    for seg, y_start in zip(cycle.contour.segments, cycle.y_vertices):
        y = y_start
        for a, b in _segment_pieces(seg, curve.lam):
            x0 = complex(seg.at(a))
            if a > 0.0:
                y = _march(lambda s: seg.at(a_prev + s * (a - a_prev)), curve.lam, 1.0, y)
            parts.append(_integrate_piece(curve, seg, a, b, x0, y, config))
            a_prev = a
    # numpy's sum is pairwise: deterministic and well conditioned
    return np.concatenate(parts, axis=0).sum(axis=0)


def integrate_contour(curve: CurveModel, contour, y_seed: complex, config: QuadratureConfig = QuadratureConfig()) -> np.ndarray:
    """Integrals of the monomial differentials along any contour from a seed value of ``y``."""
    from .curve import continue_y_to

    ys = continue_y_to(curve, contour, y_seed)
    cyc = Cycle(contour, (), tuple(ys), -1)
    return integrate_over_cycle(curve, cyc, config)


# --------------------------------------------------------------------------
# Riemann matrix
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RiemannMatrix:
    P: np.ndarray
    Q: np.ndarray
    omega: np.ndarray
    A_inv_im: np.ndarray
    C: np.ndarray
    symmetry_residual: float
    min_eig_im: float
    basis: CycleBasis | None = field(default=None, repr=False, compare=False)

    @property
    def genus(self) -> int:
        return self.omega.shape[0]


def riemann_matrix(curve: CurveModel, basis: CycleBasis, config: QuadratureConfig = QuadratureConfig()) -> RiemannMatrix:
    cand = np.array([integrate_over_cycle(curve, c, config) for c in basis.candidates])
    periods = basis.transform.astype(float) @ cand
    g = curve.genus
    P, Q = periods[:g], periods[g:]
    if np.linalg.cond(P) > COND_LIMIT:
        raise SingularAperiod(f"A-period matrix condition number {np.linalg.cond(P):.3g}")
    C = np.linalg.inv(P)
    omega = Q @ C
    resid = float(np.linalg.norm(omega - omega.T) / np.linalg.norm(omega))
    if resid > SYMMETRY_LIMIT:
        raise RiemannRelationViolation(f"period matrix symmetry residual {resid:.3g}")
    im = 0.5 * (omega.imag + omega.imag.T)
    try:
        np.linalg.cholesky(im)
    except np.linalg.LinAlgError as exc:
        raise RiemannRelationViolation("imaginary part of the period matrix is not positive definite") from exc
    a_inv = np.linalg.inv(im)
    a_inv = 0.5 * (a_inv + a_inv.T)
    return RiemannMatrix(P, Q, omega, a_inv, C, resid, float(np.linalg.eigvalsh(im).min()), basis)


def compute_riemann_matrix(
    curve: CurveModel, config: QuadratureConfig = QuadratureConfig(), first_link: int | None = None
) -> RiemannMatrix:
    return riemann_matrix(curve, homology_basis(curve, first_link=first_link), config)


# --------------------------------------------------------------------------
# Genus-one oracle
# --------------------------------------------------------------------------


def agm(a: float, b: float) -> float:
    for _ in range(100):
        if abs(a - b) <= 1e-16 * abs(a):
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return a


def complete_k(k: float) -> float:
    return math.pi / (2.0 * agm(1.0, math.sqrt(1.0 - k * k)))


def agm_period_oracle(k: float) -> complex:
    """``tau = i K(k') / K(k)`` for the curve ``y**2 = (1 - x**2)(1 - k**2 x**2)``."""
    if not 0.0 < k < 1.0:
        raise ValueError("k must lie in (0, 1)")
    kp = math.sqrt(1.0 - k * k)
    return 1j * complete_k(kp) / complete_k(k)
