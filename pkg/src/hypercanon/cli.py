"""Command-line front end.

    hypercanon periods     --curve "x^6-1"
    hypercanon curvature   --roots "1,-1,1j,-1j" --grid=-2,2,-2,2,41 --csv
    hypercanon area        --curve "x^4-1"
    hypercanon pinch       --kind nonsep --t-grid "1e-2,1e-3,1e-4"
    hypercanon weierstrass --curve "x^8-1"

Exit status: 0 when every enabled check passes, 2 when a check fails, 1 on
any input or computational error.  Data files are named ``<cmd>-<runid>.json``
(or ``.csv``) and each run writes ``<runid>.manifest.json``.  The run id hashes
the parameters only, so data files are byte-identical across repeated runs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import sympy
from sympy.parsing.sympy_parser import convert_xor, implicit_multiplication_application, parse_expr, standard_transformations
from threadpoolctl import threadpool_limits

from . import __version__
from .curve import CurveModel, point_branch, point_x
from .degeneration import (
    EPS_GRID,
    N_ANGLES,
    NONSEP_BETA,
    SEP_ALPHA,
    SEP_BETA,
    T_GRID,
    CollarChart,
    PinchFamily,
    PinchKind,
    angular_grid,
    band,
    collar_integral,
    collar_metric_check,
    decade_differences,
    gram_asymptotics,
    nonsep_row,
    sep_row,
    ScalingReport,
    strictly_increasing,
)
from .errors import HyperCanonError
from .metric import MetricEvaluator, curvature, curvature_x, density_x, gram_matrix, surface_area, total_curvature
from .periods import QuadratureConfig, compute_riemann_matrix

NEWTON_TOL = 1e-13
GENERIC_POINTS = 50
GENERIC_SEED = 20260


class InputError(Exception):
    """Malformed command-line input."""


# --------------------------------------------------------------------------
# Curve specifications
# --------------------------------------------------------------------------


def parse_polynomial(text: str) -> list[complex]:
    """Coefficients (highest degree first, monic) of a polynomial in ``x``."""
    x = sympy.Symbol("x")
    try:
        expr = parse_expr(
            text,
            local_dict={"x": x, "I": sympy.I, "i": sympy.I},
            transformations=standard_transformations + (convert_xor, implicit_multiplication_application),
            evaluate=True,
        )
        poly = sympy.Poly(sympy.nsimplify(expr, rational=True), x)
    except Exception as exc:  # sympy raises a zoo of exception types
        raise InputError(f"cannot parse polynomial {text!r}: {exc}") from exc
    if poly.free_symbols - {x}:
        raise InputError(f"polynomial {text!r} has symbols other than x")
    coeffs = [complex(sympy.N(c, 30)) for c in poly.all_coeffs()]
    if len(coeffs) < 2:
        raise InputError(f"polynomial {text!r} is constant")
    lead = coeffs[0]
    return [c / lead for c in coeffs]


def polished_roots(coeffs: list[complex]) -> list[complex]:
    """Companion-matrix roots refined by Newton's method."""
    c = np.asarray(coeffs, dtype=complex)
    dc = np.polyder(c)
    roots = []
    for z in np.roots(c):
        for _ in range(50):
            step = np.polyval(c, z) / np.polyval(dc, z)
            z = z - step
            if abs(step) <= NEWTON_TOL * max(1.0, abs(z)):
                break
        roots.append(complex(z))
    # snap rounding noise in real or imaginary parts to zero
    floor = 1e-14 * max(abs(z) for z in roots)

    def snap(v: float) -> float:
        return 0.0 if abs(v) <= floor else v

    return [complex(snap(z.real), snap(z.imag)) for z in roots]


def parse_roots(text: str) -> list[complex]:
    try:
        return [complex(item.strip().replace(" ", "").replace("i", "j")) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse roots {text!r}: {exc}") from exc


def curve_from_args(args) -> tuple[CurveModel, dict]:
    if bool(args.curve) == bool(args.roots):
        raise InputError("give exactly one of --curve or --roots")
    if args.curve:
        roots = polished_roots(parse_polynomial(args.curve))
        info = {"source": "polynomial", "root_finder": "numpy.roots + Newton polish", "newton_tol": NEWTON_TOL}
    else:
        roots = parse_roots(args.roots)
        info = {"source": "roots"}
    return CurveModel.from_roots(roots), info


def parse_grid_values(text: str) -> list[float]:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            out.append(10.0 ** float(item[3:]) if item.startswith("10^") else float(item))
        except ValueError as exc:
            raise InputError(f"cannot parse grid value {item!r}") from exc
    return out


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------


def _num(v: float) -> str:
    if math.isnan(v) or math.isinf(v):
        return "null"
    return format(v, ".17g")


def to_json(obj, indent: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist(), indent)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray, complex, np.complexfloating)) for v in obj):
            return "[" + ", ".join(to_json(v, indent + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return "{" + f'"re": {_num(obj.real)}, "im": {_num(obj.imag)}' + "}"
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def to_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def run_id(command: str, params: dict) -> str:
    blob = json.dumps({"command": command, "params": params}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# --------------------------------------------------------------------------
# Commands.  Each returns (report dict, checks dict, optional csv text).
# --------------------------------------------------------------------------


def quad_config(args) -> QuadratureConfig:
    return QuadratureConfig(gl_order=args.gl_order, rel_tol=args.tol)


def cmd_periods(args):
    curve, info = curve_from_args(args)
    rm = compute_riemann_matrix(curve, quad_config(args))
    report = {
        "genus": curve.genus,
        "branch_points": [complex(z) for z in curve.lam],
        "P": rm.P,
        "Q": rm.Q,
        "omega": rm.omega,
        "symmetry_residual": rm.symmetry_residual,
        "min_eig_im": rm.min_eig_im,
    }
    checks = {"symmetry": rm.symmetry_residual < 1e-8, "im_positive_definite": rm.min_eig_im > 0}
    return report, checks, None, info


def _sample_grid(curve: CurveModel, spec: str | None) -> np.ndarray:
    if spec:
        vals = parse_grid_values(spec)
        if len(vals) != 5:
            raise InputError("--grid takes xmin,xmax,ymin,ymax,n")
        x0, x1, y0, y1, n = vals
        n = int(n)
    else:
        R = float(np.max(np.abs(curve.lam))) + 1.0
        x0, x1, y0, y1, n = -R, R, -R, R, 41
    if n < 2:
        raise InputError("grid needs n >= 2")
    xs = np.linspace(x0, x1, n)
    ys = np.linspace(y0, y1, n)
    pts = (xs[None, :] + 1j * ys[:, None]).ravel()
    keep = curve.distance_to_branch(pts) > curve.r_chart
    return pts[keep]


def cmd_curvature(args):
    curve, info = curve_from_args(args)
    ev = MetricEvaluator(curve, compute_riemann_matrix(curve, quad_config(args)))
    pts = _sample_grid(curve, args.grid)
    rho = density_x(ev, pts)
    K = curvature_x(ev, pts)
    rows = []
    for sheet in (1, 2):
        rows += [(float(z.real), float(z.imag), sheet, float(r), float(k)) for z, r, k in zip(pts, rho, K)]
    text = to_csv(["re_x", "im_x", "sheet", "rho", "K"], rows)
    report = {"genus": curve.genus, "n_points": len(pts), "max_K": float(K.max()), "min_K": float(K.min())}
    checks = {"nonpositive": bool(K.max() <= 1e-9), "rho_positive": bool(rho.min() > 0)}
    return report, checks, text, info


def cmd_area(args):
    curve, info = curve_from_args(args)
    ev = MetricEvaluator(curve, compute_riemann_matrix(curve, quad_config(args)))
    g = curve.genus
    area = surface_area(ev)
    tc = total_curvature(ev)
    gb = 2.0 * math.pi * (2 - 2 * g)
    gram = gram_matrix(ev)
    im = ev.rm.omega.imag
    gram_err = float(np.abs(gram - im).max() / np.abs(im).max())
    report = {
        "genus": g,
        "area": area,
        "expected_g": g,
        "total_curvature": tc,
        "expected_gauss_bonnet": gb,
        "gram_vs_imomega_maxerr": gram_err,
    }
    checks = {
        "area": abs(area - g) <= 0.01 * g,
        "gauss_bonnet": abs(tc) <= 0.05 if g == 1 else abs(tc - gb) <= 0.02 * abs(gb),
        "gram": gram_err <= 0.01,
    }
    return report, checks, None, info


def cmd_weierstrass(args):
    curve, info = curve_from_args(args)
    ev = MetricEvaluator(curve, compute_riemann_matrix(curve, quad_config(args)))
    branch = [abs(curvature(ev, point_branch(curve, j, 0j)).K) for j in range(len(curve.lam))]
    rng = np.random.default_rng(GENERIC_SEED)
    R = float(np.max(np.abs(curve.lam))) + 1.0
    generic = []
    while len(generic) < GENERIC_POINTS:
        z = complex(rng.uniform(-R, R), rng.uniform(-R, R))
        if curve.distance_to_branch(z) > curve.r_chart:
            generic.append(curvature(ev, point_x(curve, z, 1 + len(generic) % 2)).K)
    generic = np.array(generic)
    report = {
        "genus": curve.genus,
        "branch_points": [complex(z) for z in curve.lam],
        "branch_abs_K": branch,
        "generic_K_max": float(generic.max()),
        "generic_K_min": float(generic.min()),
        "generic_K_median": float(np.median(generic)),
    }
    checks = {"branch_vanishing": max(branch) <= 1e-6, "generic_negative": bool(generic.max() < 0)}
    return report, checks, None, info


def cmd_pinch(args):
    kind = PinchKind(args.kind)
    quad = quad_config(args)
    grid = parse_grid_values(args.t_grid) if args.t_grid else list(T_GRID if kind is PinchKind.NONSEP else EPS_GRID)
    fixed = tuple(parse_roots(args.roots)) if args.roots else (NONSEP_BETA if kind is PinchKind.NONSEP else SEP_BETA)
    if args.curve:
        raise InputError("pinch takes --roots (fixed far roots) but not --curve")
    if len(grid) < 2 or any(b >= a for a, b in zip(grid, grid[1:])):
        raise InputError("--t-grid must be strictly descending with at least two values")
    info = {"source": "family", "kind": kind.value, "fixed_roots": [complex(b) for b in fixed]}
    if kind is PinchKind.NONSEP:
        return _pinch_nonsep(grid, fixed, quad, args.angles, info)
    return _pinch_sep(grid, fixed, quad, info)


def _pinch_nonsep(grid, fixed, quad, n_angles, info):
    rows, profiles, collar, integrals = [], [], [], []
    for t in grid:
        fam = PinchFamily(PinchKind.NONSEP, t, fixed, quad=quad)
        rows.append(nonsep_row(fam, n_angles))
        chart = CollarChart(fam)
        for label, r in (("outer", 0.9 * chart.u_max), ("mid", chart.r_mid), ("inner", 2.0 * chart.r_inner)):
            u = r * angular_grid(n_angles)
            K = chart.curvature(u)
            profiles += [(float(t), label, float(r), k, float(v)) for k, v in enumerate(K)]
        lo, hi, ok = collar_metric_check(fam)
        collar.append({"t": float(t), "c_low": lo, "c_high": hi, "within_c_star": ok})
        I = collar_integral(fam)
        integrals.append({"t": float(t), "I": I, "ratio": I / (fam.L - math.log(fam.L))})
    rep = ScalingReport(tuple(rows), n_angles)
    gram = gram_asymptotics(grid, fixed, quad)
    diffs = decade_differences(gram)
    report = rep.as_dict()
    report["collar_metric"] = collar
    report["collar_integral"] = integrals
    report["gram"] = [
        {"t": r.t, "L": r.L, "im_omega_11": r.im_omega_11, "a11_L": r.a11 * r.L, "max_offdiag_L": r.max_offdiag * r.L, "max_first_row_L": r.max_first_row * r.L}
        for r in gram
    ]
    report["decade_differences"] = diffs
    checks = dict(rep.checks())
    checks["collar_bounds"] = all(c["within_c_star"] for c in collar)
    ratios = [c["ratio"] for c in integrals]
    checks["collar_integral"] = all(1 / 3 <= r <= 3 for r in ratios) and band(ratios) <= 1.3
    checks["im_omega_11_increasing"] = strictly_increasing([r.im_omega_11 for r in gram])
    checks["decade_differences"] = (not diffs) or band(diffs) <= 1.2
    checks["a11_L_band"] = band([r.a11 * r.L for r in gram]) <= 2.0
    checks["offdiag_L_band"] = band([r.max_offdiag * r.L for r in gram]) <= 2.0
    text = to_csv(["t", "circle", "radius", "angle_index", "K"], profiles)
    return report, checks, text, info


def _pinch_sep(grid, fixed, quad, info):
    rows = [sep_row(PinchFamily(PinchKind.SEP, e, fixed, SEP_ALPHA, quad=quad)) for e in grid]
    report = {
        "rows": [
            {
                "eps": r.eps,
                "max_abs_K": r.max_abs_K,
                "max_rho": r.max_rho,
                "max_abs_K_neck": r.max_abs_K_neck,
                "max_rho_neck": r.max_rho_neck,
                "max_abs_K_generic": r.max_abs_K_generic,
            }
            for r in rows
        ]
    }
    checks = {
        "K_band": band([r.max_abs_K for r in rows]) <= 2.0,
        "rho_band": band([r.max_rho for r in rows]) <= 2.0,
        "nonpositive": all(r.max_K <= 1e-9 for r in rows),
    }
    return report, checks, None, info


COMMANDS = {
    "periods": cmd_periods,
    "curvature": cmd_curvature,
    "area": cmd_area,
    "pinch": cmd_pinch,
    "weierstrass": cmd_weierstrass,
}


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hypercanon", description="Canonical metric and curvature of hyperelliptic curves.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--curve", help='monic polynomial in x, e.g. "x^6-1"')
        p.add_argument("--roots", help='comma-separated branch points, e.g. "1,-1,1j,-1j"')
        p.add_argument("--tol", type=float, default=1e-10, help="relative tolerance of path quadrature")
        p.add_argument("--gl-order", type=int, default=24)
        p.add_argument("--out-dir", help="directory for data files and the manifest")
        p.add_argument("--threads", type=int, default=None, help="cap on numerical threads (default: all cores)")
        fmt = p.add_mutually_exclusive_group()
        fmt.add_argument("--json", action="store_true", help="print the JSON report on stdout")
        fmt.add_argument("--csv", action="store_true", help="print the CSV data on stdout")
        if name == "curvature":
            p.add_argument("--grid", help="xmin,xmax,ymin,ymax,n")
        if name == "pinch":
            p.add_argument("--kind", choices=[k.value for k in PinchKind], default="nonsep")
            p.add_argument("--t-grid", help="descending comma list, e.g. 1e-2,10^-2.5,1e-3")
            p.add_argument("--angles", type=int, default=N_ANGLES)
    return parser


def _params(args) -> dict:
    skip = {"out_dir", "json", "csv", "threads", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    params = _params(args)
    rid = run_id(args.command, params)
    started = time.time()
    try:
        with threadpool_limits(limits=args.threads):
            report, checks, text, info = COMMANDS[args.command](args)
    except (InputError, HyperCanonError, ValueError, ArithmeticError) as exc:
        print(f"hypercanon {args.command}: error: {exc}", file=sys.stderr)
        return 1
    passed = all(checks.values())
    report = {"run_id": rid, "command": args.command, **report, "checks": checks}
    body = to_json(report) + "\n"
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = [f"{args.command}-{rid}.json"]
        (out / files[0]).write_text(body, encoding="utf-8", newline="\n")
        if text is not None:
            files.append(f"{args.command}-{rid}.csv")
            (out / files[1]).write_text(text, encoding="utf-8", newline="\n")
        manifest = {
            "run_id": rid,
            "command": args.command,
            "parameters": params,
            "input": info,
            "version": __version__,
            "started": datetime.fromtimestamp(started, timezone.utc).isoformat(),
            "wall_time_s": time.time() - started,
            "tolerances": {"tol": args.tol, "gl_order": args.gl_order},
            "threads": args.threads if args.threads else os.cpu_count(),
            "checks": {k: "PASS" if v else "FAIL" for k, v in checks.items()},
            "files": files,
        }
        (out / f"{rid}.manifest.json").write_text(to_json(manifest) + "\n", encoding="utf-8", newline="\n")
    if args.csv and text is not None:
        sys.stdout.write(text)
    elif args.json or not args.csv:
        sys.stdout.write(body)
    for name, ok in checks.items():
        if not ok:
            print(f"check failed: {name}", file=sys.stderr)
    return 0 if passed else 2


if __name__ == "__main__":
    sys.exit(main())
