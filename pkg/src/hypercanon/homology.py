"""Cycles on the hyperelliptic surface and their reduction to a symplectic basis.

Branch points are joined into an x-monotone chain ``l_1 -> l_2 -> ... -> l_{2g+2}``
(monotone along a sort direction, canonical direction first).  Cuts pair
consecutive points ``(l_1 l_2), (l_3 l_4), ...``.  Candidates are polygonal
"stadium" loops around each chain link: odd links are loops around a cut, even
links are dumbbells that cross two neighbouring cuts and change sheet twice.
Consecutive candidates meet once, so the 2g+1 candidates carry a tridiagonal
intersection form of rank 2g.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .curve import BranchSet, Contour, CurveModel, Line, continue_y, continue_y_to, sqrt_product
from .errors import CutCollision, DegenerateCrossing, RankDeficient

# Stadium radius as a fraction of the smaller nearest-neighbour gap of the link's endpoints.
LOOP_FRACTION = 0.2
CAP_PIECES = 8
_INT64 = 2**63 - 1
_SORT_DIRECTIONS = 12


@dataclass(frozen=True)
class Cut:
    index: int
    start: complex
    end: complex


@dataclass(frozen=True)
class Cycle:
    """A closed lift of a planar loop.

    ``y_vertices[k]`` is the continued square root at the start of segment ``k``
    (the last entry repeats the seed after one full turn).
    """

    contour: Contour
    sheet_pattern: tuple[int, ...]
    y_vertices: tuple[complex, ...]
    link: int

    @property
    def y_seed(self) -> complex:
        return self.y_vertices[0]


@dataclass(frozen=True)
class CycleBasis:
    """Symplectic basis expressed as integer combinations of candidate cycles.

    Row ``i`` of ``transform`` gives ``A_{i+1}`` for ``i < g`` and ``B_{i-g+1}``
    otherwise.
    """

    candidates: tuple[Cycle, ...]
    candidate_intersection: np.ndarray
    transform: np.ndarray
    intersection: np.ndarray

    @property
    def genus(self) -> int:
        return self.transform.shape[0] // 2

    @property
    def a_cycles(self) -> np.ndarray:
        return self.transform[: self.genus]

    @property
    def b_cycles(self) -> np.ndarray:
        return self.transform[self.genus :]


def standard_form(g: int) -> np.ndarray:
    j = np.zeros((2 * g, 2 * g), dtype=np.int64)
    j[:g, g:] = np.eye(g, dtype=np.int64)
    j[g:, :g] = -np.eye(g, dtype=np.int64)
    return j


# --------------------------------------------------------------------------
# Cuts
# --------------------------------------------------------------------------


def _segments_intersect(p1: complex, p2: complex, q1: complex, q2: complex) -> bool:
    def cross(a: complex, b: complex) -> float:
        return a.real * b.imag - a.imag * b.real

    d1 = cross(q2 - q1, p1 - q1)
    d2 = cross(q2 - q1, p2 - q1)
    d3 = cross(p2 - p1, q1 - p1)
    d4 = cross(p2 - p1, q2 - p1)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 * d2 != 0 and d3 * d4 != 0:
        return True
    # collinear touching
    for d, a, b, c in ((d1, q1, q2, p1), (d2, q1, q2, p2), (d3, p1, p2, q1), (d4, p1, p2, q2)):
        if d == 0 and min(a.real, b.real) <= c.real <= max(a.real, b.real) and min(a.imag, b.imag) <= c.imag <= max(a.imag, b.imag):
            return True
    return False


def build_cuts(branch: BranchSet, order: Sequence[int] | None = None) -> list[Cut]:
    """Pair consecutive points of ``order`` (canonical order by default) into g+1 cuts."""
    pts = branch.points
    idx = list(range(len(pts))) if order is None else list(order)
    if sorted(idx) != list(range(len(pts))):
        raise ValueError("order must be a permutation of the branch indices")
    cuts = [Cut(i, pts[idx[2 * i]], pts[idx[2 * i + 1]]) for i in range(len(pts) // 2)]
    for i, a in enumerate(cuts):
        for b in cuts[i + 1 :]:
            if _segments_intersect(a.start, a.end, b.start, b.end):
                raise CutCollision(f"cuts {a.index} and {b.index} intersect")
    return cuts


def chain_points(cuts: Sequence[Cut]) -> list[complex]:
    out: list[complex] = []
    for c in cuts:
        out.extend((c.start, c.end))
    return out


def sheet_function(curve: CurveModel, cuts: Sequence[Cut]):
    """Single-valued branch of ``sqrt(f)`` on the plane minus the cuts, equal to
    the anchor's principal root at the anchor."""
    a = np.array([c.start for c in cuts])
    b = np.array([c.end for c in cuts])

    def raw(x):
        x = np.asarray(x, dtype=complex)[..., None]
        # sqrt((x-a)/(x-b)) has its cut exactly on the segment [a, b]
        return np.prod((x - b) * np.sqrt((x - a) / (x - b)), axis=-1)

    sign = 1.0 if abs(raw(curve.anchor_x) - curve.anchor_y) <= abs(raw(curve.anchor_x) + curve.anchor_y) else -1.0
    return lambda x: sign * raw(x)


# --------------------------------------------------------------------------
# Candidate cycles
# --------------------------------------------------------------------------


def _stadium(a: complex, b: complex, radius: float) -> list[complex]:
    """Counter-clockwise polygon around the segment [a, b] at distance ``radius``."""
    d = (b - a) / abs(b - a)
    n = 1j * d
    step = math.pi / CAP_PIECES
    verts = [a - radius * n, b - radius * n]
    base = cmath.phase(-n)
    verts += [b + radius * cmath.exp(1j * (base + k * step)) for k in range(1, CAP_PIECES)]
    verts += [b + radius * n, a + radius * n]
    base = cmath.phase(n)
    verts += [a + radius * cmath.exp(1j * (base + k * step)) for k in range(1, CAP_PIECES)]
    return verts


def _link_radii(curve: CurveModel, chain: Sequence[complex], jitter: bool) -> list[float]:
    lam = curve.lam
    gap = curve.gaps()
    where = {complex(z): i for i, z in enumerate(lam)}
    radii = []
    for k in range(len(chain) - 1):
        r = LOOP_FRACTION * min(gap[where[chain[k]]], gap[where[chain[k + 1]]])
        if jitter and k % 2 == 1:
            r += r / 7.0
        radii.append(r)
    return radii


def chain_is_valid(curve: CurveModel, chain: Sequence[complex]) -> bool:
    """Every stadium must stay ``d_safe`` clear of foreign branch points (with jitter headroom)."""
    radii = _link_radii(curve, chain, jitter=False)
    lam = curve.lam
    for k, r in enumerate(radii):
        seg = Line(chain[k], chain[k + 1])
        foreign = np.array([z for z in lam if z != chain[k] and z != chain[k + 1]])
        if foreign.size and seg.distance(foreign).min() <= r * 8.0 / 7.0 + curve.d_safe:
            return False
    return True


def chain_order(curve: CurveModel) -> list[int]:
    """Branch indices in a monotone order whose stadium loops are valid.

    The canonical order is tried first, then orders monotone along rotated
    directions, then angular orders about the centroid (which suit nearly
    cocircular branch sets), opened at each gap in turn.
    """
    lam = curve.lam
    for m in range(_SORT_DIRECTIONS):
        rot = np.exp(-1j * math.pi * m / _SORT_DIRECTIONS) * lam
        order = sorted(range(len(lam)), key=lambda i: (rot[i].real, rot[i].imag))
        if chain_is_valid(curve, [complex(lam[i]) for i in order]):
            return order
    angles = np.angle(lam - lam.mean())
    ring = sorted(range(len(lam)), key=lambda i: (angles[i], abs(lam[i])))
    for start in range(len(ring)):
        order = ring[start:] + ring[:start]
        if chain_is_valid(curve, [complex(lam[i]) for i in order]):
            try:
                build_cuts(curve.branch, order)
            except CutCollision:
                continue
            return order
    raise CutCollision("no monotone chain keeps the cycle loops clear of the branch points")


def candidate_cycles(curve: CurveModel, cuts: Sequence[Cut], jitter: bool = False) -> list[Cycle]:
    """Stadium loops around the 2g+1 links of the chain defined by ``cuts``."""
    chain = chain_points(cuts)
    if not chain_is_valid(curve, chain):
        raise CutCollision("stadium loops would come within d_safe of a foreign branch point")
    radii = _link_radii(curve, chain, jitter)
    ysheet = sheet_function(curve, cuts)
    out = []
    for k, r in enumerate(radii):
        contour = Contour.polygon(_stadium(chain[k], chain[k + 1], r))
        y0 = complex(ysheet(contour.start))
        ys = continue_y_to(curve, contour, y0)
        end = ys[-1]
        if abs(end - y0) > 1e-8 * abs(y0):
            raise CutCollision(f"loop around link {k} does not close on the surface")
        pattern = []
        for seg, yv in zip(contour.segments, ys):
            mid = complex(seg.at(0.5))
            ym = complex(sqrt_product(mid, seg.start, yv, curve.lam))
            ref = complex(ysheet(mid))
            pattern.append(1 if abs(ym - ref) <= abs(ym + ref) else 2)
        out.append(Cycle(contour, tuple(pattern), tuple(ys), k))
    return out


# --------------------------------------------------------------------------
# Intersections
# --------------------------------------------------------------------------


def _segment_arrays(cycle: Cycle):
    segs = cycle.contour.segments
    p = np.array([s.start for s in segs])
    d = np.array([s.end - s.start for s in segs])
    y = np.array(cycle.y_vertices[:-1])
    return p, d, y


def _pair_intersection(curve: CurveModel, c1: Cycle, c2: Cycle, tol: float = 1e-9) -> int:
    p, dp, yp = _segment_arrays(c1)
    q, dq, yq = _segment_arrays(c2)
    P, DP = p[:, None], dp[:, None]
    Q, DQ = q[None, :], dq[None, :]
    den = (np.conj(DP) * DQ).imag  # cross(dp, dq)
    rel = Q - P
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (np.conj(rel) * DQ).imag / den
        u = (np.conj(rel) * DP).imag / den
    parallel = np.abs(den) <= tol * np.abs(DP) * np.abs(DQ)
    if np.any(parallel):
        # collinear overlap is non-transversal
        ii, jj = np.nonzero(parallel)
        for i, j in zip(ii, jj):
            off = abs((np.conj(dp[i]) * (q[j] - p[i])).imag) / abs(dp[i])
            if off <= tol * (abs(dp[i]) + abs(dq[j])):
                t0 = ((q[j] - p[i]) * np.conj(dp[i])).real / abs(dp[i]) ** 2
                t1 = ((q[j] + dq[j] - p[i]) * np.conj(dp[i])).real / abs(dp[i]) ** 2
                if max(t0, t1) >= -tol and min(t0, t1) <= 1 + tol:
                    raise DegenerateCrossing("collinear overlapping contour pieces")
    ok = ~parallel
    near_end = ok & (
        ((np.abs(s) <= tol) | (np.abs(s - 1) <= tol)) & (u >= -tol) & (u <= 1 + tol)
        | ((np.abs(u) <= tol) | (np.abs(u - 1) <= tol)) & (s >= -tol) & (s <= 1 + tol)
    )
    if np.any(near_end):
        raise DegenerateCrossing("contours cross at a vertex")
    hit = ok & (s > 0) & (s < 1) & (u > 0) & (u < 1)
    total = 0
    for i, j in zip(*np.nonzero(hit)):
        x = p[i] + s[i, j] * dp[i]
        y1 = complex(sqrt_product(x, p[i], yp[i], curve.lam))
        y2 = complex(sqrt_product(x, q[j], yq[j], curve.lam))
        if abs(y1 - y2) < abs(y1 + y2):
            total += 1 if den[i, j] > 0 else -1
    return total


def intersection_numbers(curve: CurveModel, cycles: Sequence[Cycle]) -> np.ndarray:
    """Algebraic intersection matrix: planar crossings counted when both strands share a sheet."""
    n = len(cycles)
    m = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            v = _pair_intersection(curve, cycles[i], cycles[j])
            m[i, j], m[j, i] = v, -v
    return m


# --------------------------------------------------------------------------
# Integer symplectic reduction
# --------------------------------------------------------------------------


def integer_det(m: np.ndarray) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    a = [[int(v) for v in row] for row in m]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def _check_int64(vectors) -> None:
    for v in vectors:
        if any(abs(c) > _INT64 for c in v):
            raise OverflowError("symplectic reduction coefficients exceed 64-bit range")


def symplectic_reduce(cycles: Sequence[Cycle], m: np.ndarray, first: int | None = None) -> CycleBasis:
    """Integer symplectic Gram-Schmidt on the candidate intersection form.

    One dependent candidate is dropped first (smallest index whose removal leaves a
    unimodular form).  ``first`` pins a candidate to become ``A_1``.
    """
    m = np.asarray(m, dtype=np.int64)
    n = m.shape[0]
    if not np.array_equal(m, -m.T):
        raise ValueError("intersection matrix must be antisymmetric")
    keep = list(range(n))
    if n % 2 == 0:
        if abs(integer_det(m)) != 1:
            raise RankDeficient("even candidate set is not unimodular")
    else:
        for j in range(n):
            rest = [i for i in range(n) if i != j]
            if abs(integer_det(m[np.ix_(rest, rest)])) == 1:
                keep = rest
                break
        else:
            raise RankDeficient("candidates span less than a unimodular rank-2g lattice")
    if first is not None:
        if first not in keep:
            raise RankDeficient("pinned candidate was dropped as dependent")
        keep.remove(first)
        keep.insert(0, first)

    mm = [[int(v) for v in row] for row in m]

    def form(u, v):
        return sum(u[i] * mm[i][j] * v[j] for i in range(n) if u[i] for j in range(n) if v[j])

    def unit(i):
        v = [0] * n
        v[i] = 1
        return v

    basis = [unit(i) for i in keep]
    a_list, b_list = [], []
    pinned = first is not None
    while basis:
        e = basis.pop(0)
        while True:
            vals = [form(e, b) for b in basis]
            nz = [k for k, v in enumerate(vals) if v != 0]
            if not nz:
                raise RankDeficient("isotropic vector in a supposedly unimodular form")
            kmin = min(nz, key=lambda k: abs(vals[k]))
            if len(nz) == 1:
                break
            for k in nz:
                if k != kmin:
                    q = round(vals[k] / vals[kmin])
                    basis[k] = [x - q * y for x, y in zip(basis[k], basis[kmin])]
            _check_int64(basis)
        f = basis.pop(kmin)
        v = vals[kmin]
        if abs(v) != 1:
            raise RankDeficient("form is not unimodular on the kept candidates")
        if v == -1:
            if pinned:
                f = [-x for x in f]
            else:
                e, f = f, e
        pinned = False
        basis = [
            [x - form(b, f) * ei + form(b, e) * fi for x, ei, fi in zip(b, e, f)] for b in basis
        ]
        _check_int64(basis)
        a_list.append(e)
        b_list.append(f)
    t = np.array(a_list + b_list, dtype=np.int64)
    inter = t @ m @ t.T
    g = len(a_list)
    if not np.array_equal(inter, standard_form(g)):
        raise RankDeficient("reduction did not reach the standard symplectic form")
    return CycleBasis(tuple(cycles), m, t, inter)


def homology_basis(curve: CurveModel, first_link: int | None = None) -> CycleBasis:
    """Cuts, candidates, intersections and reduction in one call.

    ``first_link`` pins the loop around that chain link as ``A_1``.
    """
    order = chain_order(curve)
    cuts = build_cuts(curve.branch, _canonical_indices(curve, order))
    try:
        cycles = candidate_cycles(curve, cuts)
        m = intersection_numbers(curve, cycles)
    except DegenerateCrossing:
        cycles = candidate_cycles(curve, cuts, jitter=True)
        m = intersection_numbers(curve, cycles)
    return symplectic_reduce(cycles, m, first=first_link)


def _canonical_indices(curve: CurveModel, order: Sequence[int]) -> list[int]:
    # curve.lam is already in canonical order, so indices coincide
    return list(order)
