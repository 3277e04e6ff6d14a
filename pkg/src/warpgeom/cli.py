"""Command-line front end: ``warpgeom <command> [flags]``.

Exit status: 0 success, 1 a check failed (output still written), 2 usage error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import List, Optional, Sequence

import numpy as np

from .flows import DomainExitError, IntegrationError, TransportedField, geodesic_integrate, parallel_transport
from .geometry import fiber_scale, normalize, semicircle_chart
from .serialize import dumps17, fmt17
from .tensor import plane_at_angle, riemann_at, sectional_closed_form, sectional_from
from .verify import SuiteConfig, hyperbolic_rank_check, run_suite, summary_table
from .warp import LN2, FiberKind, WarpParams

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

DEFAULT_A = (0.0, 0.5, -0.5, LN2)
DEFAULT_B = (0.0, 0.5, -0.5, 1.0, -1.0)
THETA_SLACK = 1e-4

_VALUE_FLAGS = {
    "--a", "--b", "--n", "--fiber", "--theta", "--t-range", "--from", "--dir", "--w",
    "--T", "--tol", "--seed", "--out", "--format", "--samples",
}


class UsageError(ValueError):
    pass


def parse_range(text: str, allow_single: bool = False) -> np.ndarray:
    """``lo:hi:count`` (both ends included) or, if allowed, a single number."""
    parts = text.split(":")
    try:
        if len(parts) == 1 and allow_single:
            return np.array([float(parts[0])])
        if len(parts) != 3:
            raise UsageError(f"expected lo:hi:count, got {text!r}")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise UsageError(f"bad range {text!r}: {exc}") from None
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise UsageError(f"range ends must be finite: {text!r}")
    if count < 2:
        raise UsageError(f"range needs at least 2 points, got {count}")
    return np.linspace(lo, hi, count)


def parse_vector(text: str, n: int, name: str) -> np.ndarray:
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise UsageError(f"{name} must be comma-separated numbers, got {text!r}") from None
    if v.size != n:
        raise UsageError(f"{name} needs {n} components, got {v.size}")
    return v


def _join_values(argv: Sequence[str]) -> List[str]:
    # lets "--t-range -5:5:101" through, which argparse would read as a flag
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--a", type=float, default=None, help="warping parameter a (default 0)")
    common.add_argument("--b", type=float, default=None, help="warping parameter b in [-1, 1] (default 0)")
    common.add_argument("--n", type=int, default=3, help="total dimension (default 3)")
    common.add_argument("--fiber", choices=[f.value for f in FiberKind], default="hyperbolic")
    common.add_argument("--tol", type=float, default=1e-10, help="integrator tolerance")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--out", default="-", help="output file ('-' for stdout)")
    common.add_argument("--format", choices=["csv", "json"], default=None)

    flow = argparse.ArgumentParser(add_help=False)
    flow.add_argument("--from", dest="start", default=None, help="start point t,x1,...,x_{n-1}")
    flow.add_argument("--dir", default=None, help="initial velocity components")
    flow.add_argument("--T", type=float, default=None, help="parameter length")

    parser = argparse.ArgumentParser(prog="warpgeom", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="run the check suite")
    v.add_argument("--samples", type=int, default=None, help="override per-check sample counts")
    c = sub.add_parser("curvature-profile", parents=[common], help="closed-form vs numeric curvature")
    c.add_argument("--theta", default="1.5707963267948966", help="angle or lo:hi:count (radians)")
    c.add_argument("--t-range", default="-5:5:101", help="lo:hi:count")
    sub.add_parser("geodesic", parents=[common, flow], help="integrate a geodesic")
    t = sub.add_parser("transport", parents=[common, flow], help="parallel-transport a vector")
    t.add_argument("--w", default=None, help="vector to transport (default d/dt)")
    r = sub.add_parser("rank-check", parents=[common, flow], help="per-sample rank residuals")
    r.add_argument("--samples", type=int, default=49, help="number of curvature evaluations")
    return parser


def _params(args, a=None, b=None) -> WarpParams:
    a = (args.a if args.a is not None else 0.0) if a is None else a
    b = (args.b if args.b is not None else 0.0) if b is None else b
    try:
        return WarpParams(a, b, args.n, args.fiber)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _launch(args, params: WarpParams, T_default: float):
    n = params.n
    if args.start is None:
        q = np.zeros(n)
        q[-1] = 1.0 if params.hyperbolic else 0.0
    else:
        q = parse_vector(args.start, n, "--from")
    if args.dir is None:
        v = np.zeros(n)
        v[0] = 1.0
    else:
        v = parse_vector(args.dir, n, "--dir")
    T = T_default if args.T is None else args.T
    return q, v, T


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(fmt17(x) for x in row) for row in rows]
    return "\n".join(lines) + "\n"


def _emit(args, text: str):
    if args.out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _records(header, rows) -> str:
    return dumps17([dict(zip(header, row)) for row in rows]) + "\n"


def cmd_verify(args) -> int:
    if args.a is None and args.b is None:
        grid = [_params(args, a, b) for a in DEFAULT_A for b in DEFAULT_B]
    else:
        grid = [_params(args)]
    cfg = SuiteConfig(seed=args.seed, tol=args.tol, samples=args.samples)
    out = []
    ok = True
    for params in grid:
        reports = run_suite(params, cfg)
        ok &= all(r.passed for r in reports)
        print(f"a={params.a:g} b={params.b:g} n={params.n} fiber={params.fiber.value}", file=sys.stderr)
        print(summary_table(reports), file=sys.stderr)
        for r in reports:
            row = r.to_dict()
            row.update(a=params.a, b=params.b, n=params.n, fiber=params.fiber.value)
            out.append(row)
    if (args.format or "json") == "json":
        text = dumps17(out) + "\n"
    else:
        header = ["a", "b", "n", "fiber", "name", "max_residual", "tolerance", "samples", "pass"]
        lines = [",".join(header)]
        for row in out:
            lines.append(
                ",".join(
                    [fmt17(row["a"]), fmt17(row["b"]), str(row["n"]), row["fiber"], row["name"],
                     fmt17(row["max_residual"]), fmt17(row["tolerance"]), str(row["samples"]),
                     "true" if row["pass"] else "false"]
                )
            )
        text = "\n".join(lines) + "\n"
    _emit(args, text)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_curvature_profile(args) -> int:
    params = _params(args)
    thetas = parse_range(args.theta, allow_single=True)
    ts = parse_range(args.t_range)
    n = params.n
    if np.any(thetas < 0.0) or np.any(thetas > math.pi / 2 + THETA_SLACK):
        raise UsageError("theta must lie in [0, pi/2]")
    if n < 3 and np.any(thetas != 0.0):
        raise UsageError("for n = 2 only theta = 0 is realizable")
    header = ["t", "theta", "sec_closed_form", "sec_numeric", "abs_diff"]
    rows = []
    for t in ts:
        q = np.zeros(n)
        q[0] = t
        if params.hyperbolic:
            q[-1] = 1.0
        riem = riemann_at(params, q)
        unit = 1.0 / math.sqrt(fiber_scale(params, q))
        for theta in thetas:
            # rounded inputs such as 1.5708 mean pi/2
            th = min(float(theta), math.pi / 2)
            vb, w = plane_at_angle(n, th, unit)
            num = sectional_from(riem, vb, w)
            closed = sectional_closed_form(params, t, th) if params.hyperbolic else math.nan
            rows.append([t, theta, closed, num, abs(closed - num)])
    if (args.format or "csv") == "csv":
        _emit(args, _csv(header, rows))
    else:
        _emit(args, _records(header, rows))
    return EXIT_OK


def _write_path(args, obj) -> None:
    _emit(args, obj.to_csv() if (args.format or "csv") == "csv" else obj.to_json() + "\n")


def _endpoint_summary(params: WarpParams, path) -> None:
    end = path.q[-1]
    print("endpoint " + "(" + ", ".join(f"{x:.9g}" for x in end) + ")", file=sys.stderr)
    if params.n == 2 and params.hyperbolic and params.a == 0.0 and params.b == 0.0 and end[1] > 0.0:
        # (M^2, h_{2,0,0}) is the hyperbolic plane through the semicircle chart
        X, Y = semicircle_chart(end[0], end[1])
        print(f"semicircle chart image ({X:.9g}, {Y:.9g})", file=sys.stderr)


def cmd_geodesic(args) -> int:
    params = _params(args)
    q, v, T = _launch(args, params, 1.0)
    try:
        path = geodesic_integrate(params, q, v, T, args.tol)
    except DomainExitError as exc:
        print(str(exc), file=sys.stderr)
        if exc.path is not None:
            _write_path(args, exc.path)
        return EXIT_FAIL
    _write_path(args, path)
    _endpoint_summary(params, path)
    return EXIT_OK


def cmd_transport(args) -> int:
    params = _params(args)
    q, v, T = _launch(args, params, 1.0)
    n = params.n
    if args.w is None:
        w = np.zeros(n)
        w[0] = 1.0
    else:
        w = parse_vector(args.w, n, "--w")
    try:
        path = geodesic_integrate(params, q, v, T, args.tol)
    except DomainExitError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL
    field_: TransportedField = parallel_transport(path, w)
    _write_path(args, field_)
    _endpoint_summary(params, path)
    return EXIT_OK


def cmd_rank_check(args) -> int:
    params = _params(args)
    q, v, T = _launch(args, params, 20.0)
    v = normalize(params, q, v).coords()
    rep = hyperbolic_rank_check(params, q, v, T, integrator_tol=max(args.tol, 1e-8), evaluations=args.samples)
    header = ["s", "sectional", "residual"]
    rows = rep.details.get("profile", [])
    if (args.format or "csv") == "csv":
        _emit(args, _csv(header, rows))
    else:
        obj = rep.to_dict()
        _emit(args, dumps17(obj) + "\n")
    status = "PASS" if rep.passed else "FAIL"
    print(f"hyperbolic_rank max residual {rep.max_residual:.3e} (tol {rep.tolerance:g}) {status}", file=sys.stderr)
    if "error" in rep.details:
        print(rep.details["error"], file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAIL


COMMANDS = {
    "verify": cmd_verify,
    "curvature-profile": cmd_curvature_profile,
    "geodesic": cmd_geodesic,
    "transport": cmd_transport,
    "rank-check": cmd_rank_check,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_values(argv))
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if not (1e-13 <= args.tol <= 1e-4):
            raise UsageError(f"--tol must lie in [1e-13, 1e-4], got {args.tol}")
        T = getattr(args, "T", None)
        if T is not None and not (math.isfinite(T) and abs(T) <= 50.0):
            raise UsageError(f"|--T| must be at most 50, got {T}")
        samples = getattr(args, "samples", None)
        if samples is not None and samples < 1:
            raise UsageError("--samples must be positive")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"warpgeom: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"warpgeom: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except IntegrationError as exc:
        print(f"warpgeom: integration failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        # bad points, zero vectors and other rejected inputs
        print(f"warpgeom: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
