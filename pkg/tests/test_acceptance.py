"""The eleven acceptance criteria at their stated tolerances.

Each test records a PASS/FAIL line through the ``criterion`` fixture before it
asserts, so a failing criterion still shows up in the summary.
"""

import math
import time

import numpy as np

from warpgeom.flows import geodesic_integrate
from warpgeom.geometry import HalfSpace, fiber_scale
from warpgeom.tensor import plane_at_angle, riemann_at, sectional_from
from warpgeom.verify import (
    check_constant_curvature,
    check_euclidean_variant,
    check_gauss_curvature,
    check_hyperbolic_rank,
    check_isometry_lifts,
    check_ode_identity,
    check_pullback,
    check_sigma_totally_geodesic,
    check_symmetry_center,
    constant_curvature_detect,
    denominator,
    extremal_curvatures,
    golden_section_minimize,
    hyperbolic_rank_check,
    misaligned_partner,
    random_plane,
    random_point,
    sample_sectional,
    symmetry_center,
)
from warpgeom.warp import LN2, WarpParams

ODE_PAIRS = [(a, b) for a in (-2.0, -0.7, 0.0, LN2, 1.5) for b in (-1.0, -0.4, 0.0, 0.6, 1.0)]
# |b| = 1 is left out here: there e^phi decays exponentially on one side and
# geodesics of Sigma genuinely reach the height floor of the chart (see test_verify)
SIGMA_PAIRS = [(0.0, 0.0), (LN2, 0.0), (1.0, 0.5), (0.5, 0.9), (-0.8, -0.3)]
ISOMETRY_PAIRS = [(0.0, 0.0), (LN2, 0.0), (1.0, 0.5), (0.0, 1.0), (-0.8, -0.3)]
RANK_SETS = [
    WarpParams(0.0, 0.0, 3),
    WarpParams(LN2, 0.0, 3),
    WarpParams(1.0, 0.5, 3),
    WarpParams(0.0, 1.0, 3),
    WarpParams(0.0, 1.0, 3, "euclidean"),
]


def law(a, b, t, theta):
    den = ((1 + b) * math.exp(t) + (1 - b) * math.exp(-t)) ** 2
    return -1.0 + 4.0 * (1.0 - b * b - math.exp(2 * a)) / den * math.sin(theta) ** 2


def test_curvature_law(criterion):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(500):
        a, b = rng.uniform(-2, 2), rng.uniform(-1, 1)
        t, theta = rng.uniform(-5, 5), rng.uniform(0, math.pi / 2)
        n = int(rng.integers(3, 6))
        p = WarpParams(a, b, n)
        q = np.concatenate(([t], rng.uniform(-1, 1, n - 2), [math.exp(rng.uniform(-1, 1))]))
        vb, w = plane_at_angle(n, theta, 1.0 / math.sqrt(fiber_scale(p, q)))
        worst = max(worst, abs(sectional_from(riemann_at(p, q), vb, w) - law(a, b, t, theta)))
    assert criterion(1, "curvature law, 500 samples", worst < 1e-5, f"max err {worst:.2e} (tol 1e-5)")


def test_pinching_endpoints(criterion):
    p = WarpParams(LN2, 0.0, 3)
    lo, hi = extremal_curvatures(p)
    q = np.array([0.0, 0.0, 1.0])
    vb, w = plane_at_angle(3, math.pi / 2, 1.0 / math.sqrt(fiber_scale(p, q)))
    sampled = sectional_from(riemann_at(p, q), vb, w)
    err = max(abs(lo + 4.0), abs(hi + 1.0))
    ok = err < 1e-10 and abs(sampled + 4.0) < 1e-5
    assert criterion(2, "pinching endpoints (ln 2, 0)", ok, f"range ({lo:.12g}, {hi:.12g}), sampled {sampled:.8f}")


def test_ode_identity(criterion):
    analytic = max(check_ode_identity(WarpParams(a, b)).max_residual for a, b in ODE_PAIRS)
    fd = max(check_ode_identity(WarpParams(a, b), finite_difference=True).max_residual for a, b in ODE_PAIRS)
    ok = analytic < 1e-12 and fd < 1e-6
    assert criterion(3, "ODE identity, 25 pairs x 1000 points", ok, f"analytic {analytic:.2e}, fd {fd:.2e}")


def test_warping_isometry(criterion):
    pull = check_pullback(50)
    gauss = max(check_gauss_curvature(WarpParams(a, b)).max_residual for a, b in ODE_PAIRS)
    ok = pull.max_residual < 1e-10 and gauss < 1e-12
    assert criterion(4, "semicircle pullback and Gauss curvature", ok, f"pullback {pull.max_residual:.2e}, gauss {gauss:.2e}")


def test_sigma_totally_geodesic(criterion):
    start = time.perf_counter()
    reports = [check_sigma_totally_geodesic(WarpParams(a, b, 3), T=10.0, cases=100) for a, b in SIGMA_PAIRS]
    worst = max(r.max_residual for r in reports)
    exits = sum(len(r.details["failures"]) for r in reports)
    control = check_sigma_totally_geodesic(WarpParams(1.0, 0.5, 3), T=10.0, cases=10, transverse=0.1)
    ok = worst < 1e-6 and exits == 0 and control.max_residual > 1e-2
    detail = f"drift {worst:.2e}, exits {exits}, control {control.max_residual:.2e}, {time.perf_counter() - start:.0f} s"
    assert criterion(5, "Sigma totally geodesic, 5 x 100 geodesics", ok, detail)


def test_isometry_lift(criterion):
    reports = [check_isometry_lifts(WarpParams(a, b, n)) for (a, b), n in zip(ISOMETRY_PAIRS, (3, 4, 3, 5, 4))]
    worst = max(r.max_residual for r in reports)
    ok = worst < 1e-9 and all(r.details["maps"] == 54 and r.details["points"] == 20 for r in reports)
    assert criterion(6, "isometry lifts, 4 generators + 50 words x 20 points", ok, f"max residual {worst:.2e}")


def test_hyperbolic_rank(criterion):
    start = time.perf_counter()
    reports = [check_hyperbolic_rank(p, geodesics=100, T=20.0) for p in RANK_SETS]
    worst = max(r.max_residual for r in reports)
    errors = sum(len(r.details["errors"]) for r in reports)
    p = WarpParams(LN2, 0.0, 3)
    rng = np.random.default_rng(7)
    q = random_point(rng, p, (-1.0, 1.0), 1.0)
    u, v = random_plane(rng, p, q)
    # launch with a genuine fiber component so the misaligned partner is well defined
    v0 = u if abs(u[0]) < 0.9 else v
    control = hyperbolic_rank_check(p, q, v0, T=20.0, V0=misaligned_partner(p, q, v0))
    ok = worst < 1e-5 and errors == 0 and control.max_residual > 0.1
    detail = f"max residual {worst:.2e}, control {control.max_residual:.2e}, {time.perf_counter() - start:.0f} s"
    assert criterion(7, "hyperbolic rank, 5 sets x 100 geodesics", ok, detail)


def test_constant_curvature(criterion):
    on = [(0.0, 0.0), (math.log(0.8), 0.6), (math.log(0.6), -0.8)]
    off = [(LN2, 0.0), (-1.0, 0.0), (0.5, 0.5)]
    ok = True
    devs = []
    for (a, b), expected in [(x, True) for x in on] + [(x, False) for x in off]:
        p = WarpParams(a, b, 3)
        rep = check_constant_curvature(p, count=500)
        devs.append(rep.details["max_deviation"])
        ok &= constant_curvature_detect(p) is expected and rep.passed
    detail = f"on-curve dev <= {max(devs[:3]):.1e}, off-curve dev >= {min(devs[3:]):.1e}"
    assert criterion(8, "constant-curvature criterion, 3 on + 3 off", ok, detail)


def test_symmetry_center(criterion):
    worst_t0, worst_even = 0.0, 0.0
    for b in (-0.9, -0.5, 0.0, 0.5, 0.9):
        p = WarpParams(0.3, b, 3)
        t0 = symmetry_center(p)
        worst_t0 = max(worst_t0, abs(t0 - golden_section_minimize(denominator(p), -10.0, 10.0)))
        rep = check_symmetry_center(p)
        worst_even = max(worst_even, rep.details["evenness"])
    ok = worst_t0 < 1e-8 and worst_even < 1e-12
    assert criterion(9, "symmetry center, 5 values of b", ok, f"t0 err {worst_t0:.2e}, evenness {worst_even:.2e}")


def test_geodesic_benchmark(criterion):
    H2 = HalfSpace(2)
    errs = {}
    for T in (1.0, 2.0, 5.0):
        path = geodesic_integrate(H2, [0.0, 1.0], [1.0, 0.0], T, 1e-10)
        errs[T] = float(np.max(np.abs(path.q[-1] - [math.tanh(T), 1 / math.cosh(T)])))
    ratios = []
    for T in (1.0, 2.0, 5.0):
        coarse = geodesic_integrate(H2, [0.0, 1.0], [1.0, 0.0], T, 1e-6)
        err = float(np.max(np.abs(coarse.q[-1] - [math.tanh(T), 1 / math.cosh(T)])))
        ratios.append(err / max(errs[T], 1e-300))
    ok = max(errs.values()) < 1e-7 and min(ratios) >= 100.0
    detail = f"max err {max(errs.values()):.2e}, min error ratio {min(ratios):.0f}"
    assert criterion(10, "H^2 semicircle benchmark", ok, detail)


def test_euclidean_variant(criterion):
    reports = [
        check_euclidean_variant(WarpParams(a, b, n, "euclidean"), count=300)
        for (a, b), n in [((0.0, 0.0), 3), ((LN2, 0.0), 4), ((1.0, 0.5), 3), ((-1.0, -0.7), 5), ((0.0, 1.0), 3)]
    ]
    top = max(r.details["max_sectional"] for r in reports)
    dt = max(r.details["dt_plane_residual"] for r in reports)
    flat = sample_sectional(WarpParams(0.0, 1.0, 4, "euclidean"), 300)
    hyp = float(np.max(np.abs(flat + 1.0)))
    ok = top <= 1e-8 and dt < 1e-6 and hyp < 1e-5
    assert criterion(11, "Euclidean-fiber variant", ok, f"max sec {top:.2e}, dt planes {dt:.2e}, (0,1) dev {hyp:.2e}")
