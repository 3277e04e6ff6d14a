"""Executable checks of the geometric properties of the warped family.

Each check returns a CheckReport; ``run_suite`` bundles the ones that apply to a
given parameter set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence

import mpmath
import numpy as np

from .flows import (
    DEFAULT_TOL,
    MAX_HORIZON,
    DomainExitError,
    IntegrationError,
    geodesic_integrate,
    parallel_transport,
)
from .geometry import (
    HEIGHT_FLOOR,
    DegeneracyError,
    DomainError,
    PointLike,
    Tangent,
    TangentLike,
    as_coords,
    check_point,
    fiber_scale,
    gram_schmidt,
    inner,
    metric_at,
    normalize,
    plane_angle,
    pullback_residual,
)
from .serialize import dumps17
from .tensor import (
    UnsupportedFiberError,
    gauss_curvature_2d,
    plane_at_angle,
    riemann_at,
    sectional_closed_form,
    sectional_from,
)
from .warp import WarpParams, fd_jet, ode_residual, phi_eval, phi_jet

DEFAULT_SEED = 42
CONSTANT_CURVATURE_EPS = 1e-12
RANK_INTEGRATOR_TOL = 1e-8
RANK_EVALUATIONS = 49


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class CheckReport:
    name: str
    max_residual: float
    tolerance: float
    samples: int
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        # NaN compares false, so a broken residual never passes
        return bool(self.max_residual < self.tolerance)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "samples": self.samples,
            "pass": self.passed,
            "details": self.details,
        }

    def to_json(self) -> str:
        return dumps17(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "CheckReport":
        res = obj["max_residual"]
        return cls(
            obj["name"],
            math.nan if res is None else float(res),
            float(obj["tolerance"]),
            int(obj["samples"]),
            dict(obj.get("details", {})),
        )


def _require_hyperbolic(params: WarpParams, what: str):
    if not params.hyperbolic:
        raise UnsupportedFiberError(f"{what} is defined for the hyperbolic fiber only")


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


# ---------------------------------------------------------------- fiber isometries


class Generator:
    """One generator of the fiber isometry group, acting on x in R^k (x_k > 0)."""

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inverse(self) -> "Generator":
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class HorizontalTranslation(Generator):
    """x -> x + (c, 0) with c in R^{k-1}."""

    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float).reshape(-1)
        if not np.all(np.isfinite(c)):
            raise ValueError("translation vector must be finite")
        object.__setattr__(self, "c", c)

    def _check(self, x):
        if self.c.size != x.size - 1:
            raise ValueError(f"translation needs {x.size - 1} components, got {self.c.size}")

    def apply(self, x):
        self._check(x)
        out = x.copy()
        out[:-1] += self.c
        return out

    def jacobian(self, x):
        self._check(x)
        return np.eye(x.size)

    def inverse(self):
        return HorizontalTranslation(-self.c)

    def __repr__(self):
        return f"HorizontalTranslation({self.c.tolist()!r})"


@dataclass(frozen=True)
class Dilation(Generator):
    lam: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0.0):
            raise ValueError(f"dilation factor must be positive, got {self.lam}")

    def apply(self, x):
        return self.lam * x

    def jacobian(self, x):
        return self.lam * np.eye(x.size)

    def inverse(self):
        return Dilation(1.0 / self.lam)


@dataclass(frozen=True, eq=False)
class Rotation(Generator):
    """Orthogonal Q acting on the horizontal coordinates x_1..x_{k-1}."""

    Q: np.ndarray

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("rotation matrix must be square")
        if Q.size and np.max(np.abs(Q.T @ Q - np.eye(Q.shape[0]))) > 1e-12:
            raise ValueError("rotation matrix is not orthogonal")
        object.__setattr__(self, "Q", Q)

    def _block(self, k):
        if self.Q.shape[0] != k - 1:
            raise ValueError(f"rotation must act on {k - 1} coordinates, got {self.Q.shape[0]}")
        J = np.eye(k)
        J[:-1, :-1] = self.Q
        return J

    def apply(self, x):
        return self._block(x.size) @ x

    def jacobian(self, x):
        return self._block(x.size)

    def inverse(self):
        return Rotation(self.Q.T)

    def __repr__(self):
        return f"Rotation({self.Q.tolist()!r})"


@dataclass(frozen=True)
class Inversion(Generator):
    """x -> x / |x|^2, inversion in the unit sphere about the origin."""

    def _r2(self, x):
        r2 = float(x @ x)
        if not r2 > 0.0:
            raise DomainError("inversion is undefined at the origin")
        return r2

    def apply(self, x):
        return x / self._r2(x)

    def jacobian(self, x):
        r2 = self._r2(x)
        return (np.eye(x.size) - 2.0 * np.outer(x, x) / r2) / r2

    def inverse(self):
        return self


def reflection(n: int) -> Rotation:
    """(x_1..x_{n-2}, x_{n-1}) -> (-x_1..-x_{n-2}, x_{n-1}); fixes the surface Sigma."""
    return Rotation(-np.eye(n - 2))


@dataclass(frozen=True)
class FiberIsometry:
    """A word of generators, applied left to right."""

    word: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(self.word))

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        for g in self.word:
            x = g.apply(x)
        return x

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        J = np.eye(x.size)
        for g in self.word:
            J = g.jacobian(x) @ J
            x = g.apply(x)
        return J

    def inverse(self) -> "FiberIsometry":
        return FiberIsometry(tuple(g.inverse() for g in reversed(self.word)))

    def then(self, other: "FiberIsometry") -> "FiberIsometry":
        return FiberIsometry(self.word + other.word)


class LiftedIsometry:
    """(t, x) -> (t, F(x)) together with its differential."""

    def __init__(self, F: FiberIsometry):
        self.F = F

    def point(self, p: PointLike) -> np.ndarray:
        q = as_coords(p)
        return np.concatenate(([q[0]], self.F.apply(q[1:])))

    def jacobian(self, p: PointLike) -> np.ndarray:
        q = as_coords(p)
        J = np.eye(q.size)
        J[1:, 1:] = self.F.jacobian(q[1:])
        return J

    def tangent(self, p: PointLike, v: TangentLike) -> np.ndarray:
        q = as_coords(p)
        return self.jacobian(q) @ as_coords(v, q.size)

    def __call__(self, p: PointLike) -> np.ndarray:
        return self.point(p)


def lift_isometry(F: FiberIsometry) -> LiftedIsometry:
    return LiftedIsometry(F)


def isometry_pullback_residual(params: WarpParams, F: FiberIsometry, p: PointLike) -> float:
    """max |J^T G(F p) J - G(p)| for the lift of F at p."""
    q = as_coords(p, params.n)
    check_point(params, q)
    lift = lift_isometry(F)
    J = lift.jacobian(q)
    image = lift.point(q)
    return float(np.max(np.abs(J.T @ metric_at(params, image) @ J - metric_at(params, q))))


def random_orthogonal(rng: np.random.Generator, m: int) -> np.ndarray:
    if m == 0:
        return np.zeros((0, 0))
    Q, R = np.linalg.qr(rng.normal(size=(m, m)))
    return Q * np.sign(np.diag(R))


def random_generator(rng: np.random.Generator, n: int, kind: Optional[str] = None) -> Generator:
    kind = kind or rng.choice(["translation", "dilation", "rotation", "inversion"])
    m = n - 2
    if kind == "translation":
        return HorizontalTranslation(rng.uniform(-1.0, 1.0, m))
    if kind == "dilation":
        return Dilation(float(np.exp(rng.uniform(-0.7, 0.7))))
    if kind == "rotation":
        return Rotation(random_orthogonal(rng, m))
    if kind == "inversion":
        return Inversion()
    raise ValueError(f"unknown generator kind {kind!r}")


def random_word(rng: np.random.Generator, n: int, max_length: int = 5) -> FiberIsometry:
    length = int(rng.integers(0, max_length + 1))
    return FiberIsometry(tuple(random_generator(rng, n) for _ in range(length)))


def random_point(rng: np.random.Generator, params: WarpParams, t_range=(-5.0, 5.0), spread: float = 2.0) -> np.ndarray:
    """t uniform, horizontal coordinates uniform in [-spread, spread], height log-uniform on [0.1, 10]."""
    n = params.n
    q = np.empty(n)
    q[0] = rng.uniform(*t_range)
    q[1:-1] = rng.uniform(-spread, spread, n - 2)
    q[-1] = math.exp(rng.uniform(math.log(0.1), math.log(10.0))) if params.hyperbolic else rng.uniform(-spread, spread)
    return q


def random_plane(rng: np.random.Generator, params: WarpParams, q: np.ndarray):
    """Two g-orthonormal vectors spanning a random 2-plane at q."""
    n = params.n
    sc = np.full(n, 1.0 / math.sqrt(fiber_scale(params, q)))
    sc[0] = 1.0
    u, v = gram_schmidt(params, q, [sc * rng.normal(size=n), sc * rng.normal(size=n)])
    return u.coords(), v.coords()


def check_isometry_lifts(
    params: WarpParams, words: int = 50, points: int = 20, tol: float = 1e-9, seed: int = DEFAULT_SEED
) -> CheckReport:
    """Pullback residual of every generator and of random words at random points."""
    _require_hyperbolic(params, "the isometry-lift check")
    rng = _rng(seed)
    n = params.n
    kinds = ["translation", "dilation", "rotation", "inversion"]
    maps = [FiberIsometry((random_generator(rng, n, k),)) for k in kinds]
    maps += [random_word(rng, n) for _ in range(words)]
    pts = [random_point(rng, params, (-2.0, 2.0), 1.5) for _ in range(points)]
    for q in pts:
        q[-1] = max(q[-1], 0.2)
    worst, worst_sec = 0.0, 0.0
    for j, F in enumerate(maps):
        lift = lift_isometry(F)
        for q in pts:
            worst = max(worst, isometry_pullback_residual(params, F, q))
        # curvature invariance, one point per map
        q = pts[j % len(pts)]
        u, v = random_plane(rng, params, q)
        before = sectional_from(riemann_at(params, q), u, v)
        after = sectional_from(riemann_at(params, lift.point(q)), lift.tangent(q, u), lift.tangent(q, v))
        worst_sec = max(worst_sec, abs(before - after))
    return CheckReport(
        "isometry_lift",
        worst,
        tol,
        len(maps) * len(pts),
        {"seed": seed, "maps": len(maps), "points": len(pts), "max_sectional_change": worst_sec},
    )


# ---------------------------------------------------------------- Sigma


def _sigma_launch(rng: np.random.Generator, params: WarpParams):
    """Random point of Sigma = {x_1 = .. = x_{n-2} = 0} and a unit velocity tangent to it."""
    n = params.n
    q = np.zeros(n)
    q[0] = rng.uniform(-3.0, 3.0)
    q[-1] = math.exp(rng.uniform(-1.0, 1.0))
    alpha = rng.uniform(0.0, 2.0 * math.pi)
    unit = 1.0 / math.sqrt(fiber_scale(params, q))
    v = np.zeros(n)
    v[0] = math.cos(alpha)
    v[-1] = math.sin(alpha) * unit
    return q, v, unit


def check_sigma_totally_geodesic(
    params: WarpParams,
    T: float = 10.0,
    tol: float = 1e-6,
    cases: int = 100,
    integrator_tol: float = DEFAULT_TOL,
    transverse: float = 0.0,
    seed: int = DEFAULT_SEED,
    allow_chart_exit: bool = False,
) -> CheckReport:
    """Geodesics launched tangent to Sigma must stay in Sigma.

    ``transverse`` adds that much unit-length x_1 velocity before renormalizing,
    turning the check into its own negative control.

    A geodesic that reaches the height floor of the chart makes the check fail
    unless ``allow_chart_exit`` is set, in which case its drift up to the exit
    counts instead. That is meant for |b| = 1, where e^phi decays exponentially
    on one side and such exits are real rather than numerical.
    """
    n = params.n
    if n < 3:
        raise ValueError("Sigma is a proper surface only for n >= 3")
    if abs(T) > MAX_HORIZON:
        raise ValueError(f"|T| must be at most {MAX_HORIZON}")
    rng = _rng(seed)
    worst = 0.0
    failures = []
    for i in range(cases):
        q, v, unit = _sigma_launch(rng, params)
        v[1] += transverse * unit
        v = normalize(params, q, v).coords()
        try:
            path = geodesic_integrate(params, q, v, T, integrator_tol)
        except (IntegrationError, DomainError) as exc:
            entry = {"case": i, "error": str(exc)}
            partial = getattr(exc, "path", None)
            if partial is not None:
                # a chart exit still says whether the path stayed in Sigma up to s_exit
                entry["partial_drift"] = float(np.max(np.abs(partial.q[:, 1:-1])))
            failures.append(entry)
            if allow_chart_exit and isinstance(exc, DomainExitError) and partial is not None:
                worst = max(worst, entry["partial_drift"])
            else:
                worst = math.inf
            continue
        worst = max(worst, float(np.max(np.abs(path.q[:, 1:-1]))))
    name = "sigma_totally_geodesic" if transverse == 0.0 else "sigma_totally_geodesic_control"
    return CheckReport(
        name,
        worst,
        tol,
        cases,
        {
            "seed": seed,
            "T": T,
            "integrator_tol": integrator_tol,
            "transverse": transverse,
            "allow_chart_exit": allow_chart_exit,
            "failures": failures,
        },
    )


def perturbed_phi(params: WarpParams, eps: float = 0.01) -> WarpParams:
    """Copy of ``params`` whose warping function is phi + eps t^2 (negative-control hook)."""
    base = phi_jet(params)

    def jet(t):
        p, d1, d2 = base(t)
        return p + eps * t * t, d1 + 2.0 * eps * t, d2 + 2.0 * eps

    return WarpParams(params.a, params.b, params.n, params.fiber, phi_override=jet)


def check_sigma_hyperbolic(
    params: WarpParams,
    tol: float = 1e-6,
    t_grid: Optional[Sequence[float]] = None,
    heights: Sequence[float] = (0.5, 1.0, 2.0),
) -> CheckReport:
    """Sigma's induced metric dt^2 + e^{2 phi} dy^2 / y^2 has curvature -1.

    Evaluated twice: by the 2d formula -phi'' - phi'^2 and by the full sectional
    curvature of span{d/dt, d/dy} in the ambient space.
    """
    _require_hyperbolic(params, "the Sigma curvature check")
    n = params.n
    ts = np.linspace(-5.0, 5.0, 41) if t_grid is None else np.asarray(t_grid, dtype=float)
    gauss = max(abs(gauss_curvature_2d(params, t) + 1.0) for t in ts)
    full = 0.0
    for t in ts:
        for y in heights:
            q = np.zeros(n)
            q[0], q[-1] = t, y
            dy = np.zeros(n)
            dy[-1] = 1.0
            dt = np.zeros(n)
            dt[0] = 1.0
            full = max(full, abs(sectional_from(riemann_at(params, q), dt, dy) + 1.0))
    return CheckReport(
        "sigma_hyperbolic",
        max(gauss, full),
        tol,
        len(ts) * (1 + len(heights)),
        {"gauss_residual": gauss, "sectional_residual": full, "perturbed": params.phi_override is not None},
    )


# ---------------------------------------------------------------- planes through d/dt


def plane_isometry(x: np.ndarray, u: np.ndarray) -> FiberIsometry:
    """Fiber isometry taking the base point e_k (height 1, origin) to ``x`` and the
    vertical direction there to the direction ``u``.

    Built as a reflection in the sphere orthogonal to the boundary through e_k
    whose tangent plane bisects e_k and u, followed by a dilation and a
    horizontal translation.
    """
    k = x.size
    u = np.asarray(u, dtype=float) / np.linalg.norm(u)
    e = np.zeros(k)
    e[-1] = 1.0
    word: List[Generator] = []
    gap = float(np.linalg.norm(e - u))
    if gap < 1e-15:
        pass
    elif gap > 2.0 - 1e-12:
        word.append(Inversion())
    else:
        nrm = (e - u) / gap
        rho = 1.0 / nrm[-1]
        c = e - rho * nrm
        word += [HorizontalTranslation(-c[:-1]), Inversion(), Dilation(rho * rho), HorizontalTranslation(c[:-1])]
    word += [Dilation(float(x[-1])), HorizontalTranslation(x[:-1])]
    return FiberIsometry(tuple(word))


class PlanePreconditionError(DegeneracyError):
    """The plane does not contain d/dt."""


def _fiber_direction(params: WarpParams, q: np.ndarray, sigma) -> np.ndarray:
    if len(sigma) != 2:
        raise DegeneracyError("a plane needs exactly two spanning vectors")
    vecs = [as_coords(s, params.n) for s in sigma]
    if plane_angle(params, q, vecs) > 1e-9:
        raise PlanePreconditionError("the plane does not contain d/dt")
    fibers = [v[1:] for v in vecs]
    u = max(fibers, key=lambda f: float(np.linalg.norm(f)))
    return u / np.linalg.norm(u)


def check_plane_property(
    params: WarpParams,
    p: PointLike,
    sigma: Sequence[TangentLike],
    tol: float = 1e-6,
    T: float = 5.0,
    cases: int = 20,
    integrator_tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED,
) -> CheckReport:
    """A plane containing d/dt exponentiates to a totally geodesic hyperbolic surface.

    The plane is carried back to the tangent plane of Sigma by an explicit lifted
    fiber isometry; geodesics tangent to the image surface are integrated and
    pulled back, and their distance from Sigma is the totally-geodesic residual.
    The sectional curvature -1 is checked directly on the image planes.
    """
    _require_hyperbolic(params, "the plane property")
    n = params.n
    q = as_coords(p, n)
    check_point(params, q)
    u = _fiber_direction(params, q, sigma)
    F = plane_isometry(q[1:], u)
    lift, back = lift_isometry(F), lift_isometry(F.inverse())
    base = np.zeros(n - 1)
    base[-1] = 1.0
    align = max(
        float(np.max(np.abs(F.apply(base) - q[1:]))),
        float(np.linalg.norm(F.jacobian(base)[:, -1] / q[-1] - u)),
    )
    rng = _rng(seed)
    drift, curv = 0.0, 0.0
    failures = []
    dt = np.zeros(n)
    dt[0] = 1.0
    for i in range(cases):
        b0 = np.zeros(n)
        b0[0] = q[0] + (0.0 if i == 0 else rng.uniform(-1.0, 1.0))
        b0[-1] = 1.0 if i == 0 else math.exp(rng.uniform(-0.5, 0.5))
        alpha = rng.uniform(0.0, 2.0 * math.pi)
        unit = 1.0 / math.sqrt(fiber_scale(params, b0))
        dy = np.zeros(n)
        dy[-1] = unit
        v0 = math.cos(alpha) * dt + math.sin(alpha) * dy
        img, img_v = lift.point(b0), lift.tangent(b0, v0)
        riem = riemann_at(params, img)
        curv = max(curv, abs(sectional_from(riem, lift.tangent(b0, dt), lift.tangent(b0, dy)) + 1.0))
        if n < 3:
            continue
        try:
            path = geodesic_integrate(params, img, img_v, T, integrator_tol)
        except (IntegrationError, DomainError) as exc:
            failures.append({"case": i, "error": str(exc)})
            drift = math.inf
            continue
        pulled = np.array([back.point(x) for x in path.q])
        drift = max(drift, float(np.max(np.abs(pulled[:, 1:-1]))))
    return CheckReport(
        "plane_property",
        max(drift, curv, align),
        tol,
        cases,
        {
            "seed": seed,
            "point": q.tolist(),
            "direction": u.tolist(),
            "word": [repr(g) for g in F.word],
            "drift": drift,
            "sectional_residual": curv,
            "alignment": align,
            "failures": failures,
        },
    )


# ---------------------------------------------------------------- hyperbolic rank


def rank_partner(params: WarpParams, p: PointLike, v0: TangentLike) -> np.ndarray:
    """Unit vector in span{v0, d/dt} orthogonal to v0 (a unit x_1 vector if v0 is along d/dt)."""
    n = params.n
    q, v = as_coords(p, n), as_coords(v0, n)
    dt = np.zeros(n)
    dt[0] = 1.0
    unit = 1.0 / math.sqrt(fiber_scale(params, q))
    fiber_len = float(np.linalg.norm(v[1:])) / unit
    if fiber_len < 1e-12 * max(abs(v[0]), 1.0):
        w = np.zeros(n)
        w[1] = unit
        return w
    w = dt - inner(params, q, v, dt) / inner(params, q, v, v) * v
    return normalize(params, q, w).coords()


def misaligned_partner(params: WarpParams, p: PointLike, v0: TangentLike) -> np.ndarray:
    """Unit fiber vector orthogonal to span{v0, d/dt}; needs n >= 3."""
    n = params.n
    if n < 3:
        raise DegeneracyError("no fiber vector orthogonal to the plane for n = 2")
    q, v = as_coords(p, n), as_coords(v0, n)
    dt = np.zeros(n)
    dt[0] = 1.0
    cands = [dt, v] + [Tangent.fiber(n, i).coords() for i in range(1, n)]
    basis = []
    for c in cands:
        try:
            basis = gram_schmidt(params, q, [b for b in basis] + [c])
        except DegeneracyError:
            continue
        if len(basis) == 3:
            break
    return basis[2].coords()


def _subsample(count: int, wanted: int) -> np.ndarray:
    if count <= wanted:
        return np.arange(count)
    return np.unique(np.round(np.linspace(0, count - 1, wanted)).astype(int))


def hyperbolic_rank_check(
    params: WarpParams,
    p0: PointLike,
    v0: TangentLike,
    T: float = 20.0,
    tol: float = 1e-5,
    V0: Optional[TangentLike] = None,
    integrator_tol: float = RANK_INTEGRATOR_TOL,
    evaluations: int = RANK_EVALUATIONS,
) -> CheckReport:
    """Transport V along the geodesic and measure max |sec(gamma', V) + 1|.

    The curvature is evaluated at ``evaluations`` evenly spread samples; the
    per-sample values are kept in ``details["profile"]``.
    """
    n = params.n
    q, v = as_coords(p0, n), as_coords(v0, n)
    check_point(params, q)
    speed = math.sqrt(inner(params, q, v, v))
    if abs(speed - 1.0) > 1e-9:
        raise ValueError(f"v0 must be a unit vector, |v0| = {speed}")
    if abs(T) > MAX_HORIZON:
        raise ValueError(f"|T| must be at most {MAX_HORIZON}")
    w0 = rank_partner(params, q, v) if V0 is None else as_coords(V0, n)
    details: dict = {"T": T, "integrator_tol": integrator_tol, "V0": w0.tolist(), "custom_V0": V0 is not None}
    try:
        path = geodesic_integrate(params, q, v, T, integrator_tol)
        field_ = parallel_transport(path, w0)
    except (IntegrationError, DomainError) as exc:
        details["error"] = str(exc)
        return CheckReport("hyperbolic_rank", math.inf, tol, 0, details)
    idx = _subsample(len(path), evaluations)
    profile = []
    for k in idx:
        sec = sectional_from(riemann_at(params, path.q[k]), path.v[k], field_.w[k])
        profile.append((float(path.s[k]), sec, abs(sec + 1.0)))
    worst = max(r for _, _, r in profile)
    details["profile"] = [list(r) for r in profile]
    return CheckReport("hyperbolic_rank", worst, tol, len(profile), details)


def random_unit_launch(rng: np.random.Generator, params: WarpParams):
    q = random_point(rng, params, (-2.0, 2.0), 1.0)
    if params.hyperbolic:
        q[-1] = math.exp(rng.uniform(-1.0, 1.0))
    sc = np.full(params.n, 1.0 / math.sqrt(fiber_scale(params, q)))
    sc[0] = 1.0
    v = normalize(params, q, sc * rng.normal(size=params.n)).coords()
    return q, v


def check_hyperbolic_rank(
    params: WarpParams,
    geodesics: int = 100,
    T: float = 20.0,
    tol: float = 1e-5,
    integrator_tol: float = RANK_INTEGRATOR_TOL,
    evaluations: int = RANK_EVALUATIONS,
    seed: int = DEFAULT_SEED,
) -> CheckReport:
    """hyperbolic_rank_check over random launches; the first launch is along d/dt."""
    rng = _rng(seed)
    worst = 0.0
    count = 0
    errors = []
    for i in range(geodesics):
        if i == 0:
            q = random_point(rng, params, (-2.0, 2.0), 1.0)
            if params.hyperbolic:
                q[-1] = 1.0
            v = np.zeros(params.n)
            v[0] = 1.0
        else:
            q, v = random_unit_launch(rng, params)
        rep = hyperbolic_rank_check(params, q, v, T, tol, integrator_tol=integrator_tol, evaluations=evaluations)
        if "error" in rep.details:
            errors.append({"case": i, "error": rep.details["error"]})
        worst = max(worst, rep.max_residual)
        count += rep.samples
    return CheckReport(
        "hyperbolic_rank",
        worst,
        tol,
        count,
        {"seed": seed, "geodesics": geodesics, "T": T, "integrator_tol": integrator_tol, "errors": errors},
    )


# ---------------------------------------------------------------- constant curvature, t0, extremes


def constant_curvature_detect(params: WarpParams) -> bool:
    """True iff b^2 + e^{2a} = 1, the case in which the metric is hyperbolic space."""
    _require_hyperbolic(params, "the constant-curvature criterion")
    return abs(params.b * params.b + math.exp(2.0 * params.a) - 1.0) < CONSTANT_CURVATURE_EPS


def symmetry_center(params: WarpParams) -> Optional[float]:
    """t0 = (ln(1-b) - ln(1+b)) / 2, or None when |b| = 1 or the curvature is constant."""
    _require_hyperbolic(params, "the symmetry center")
    b = params.b
    if abs(b) == 1.0 or constant_curvature_detect(params):
        return None
    return 0.5 * (math.log1p(-b) - math.log1p(b))


def golden_section_minimize(f: Callable, lo: float, hi: float, tol: float = 1e-15, dps: int = 40) -> float:
    """Minimizer of a unimodal ``f`` on [lo, hi], evaluated in mpmath at ``dps`` digits.

    Golden-section search only resolves the minimizer to about sqrt(precision)
    relative to the function's scale, so working precision is raised well past
    double before the answer is rounded back.
    """
    with mpmath.workdps(dps):
        invphi = (mpmath.sqrt(5) - 1) / 2
        a, b = mpmath.mpf(lo), mpmath.mpf(hi)
        c, d = b - invphi * (b - a), a + invphi * (b - a)
        fc, fd = f(c), f(d)
        while b - a > tol:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = f(c)
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = f(d)
        return float((a + b) / 2)


def denominator(params: WarpParams) -> Callable:
    """t -> ((1+b) e^t + (1-b) e^-t)^2 on mpmath numbers."""
    b = mpmath.mpf(params.b)
    return lambda t: ((1 + b) * mpmath.exp(t) + (1 - b) * mpmath.exp(-t)) ** 2


@dataclass(frozen=True)
class CurvatureRange:
    """Range of sectional curvatures; iterates as (lo, hi)."""

    lo: float
    hi: float
    lo_attained: bool = True
    hi_attained: bool = True

    def __iter__(self):
        return iter((self.lo, self.hi))

    def __getitem__(self, i):
        return (self.lo, self.hi)[i]

    def __len__(self):
        return 2


def extremal_curvatures(params: WarpParams) -> CurvatureRange:
    """Extremes over t and theta of -1 + (1 - b^2 - e^{2a}) e^{-2a-2phi(t)} sin^2 theta.

    For |b| < 1 the deviation peaks at t0 with value 1 - e^{2a}/(1 - b^2) - 1, so
    the far endpoint is -e^{2a}/(1 - b^2).  For |b| = 1 the deviation is
    unbounded below as t runs off to the side where the warp factor vanishes.
    """
    _require_hyperbolic(params, "the curvature range")
    a, b = params.a, params.b
    if abs(b) == 1.0:
        return CurvatureRange(-math.inf, -1.0, lo_attained=False, hi_attained=True)
    other = -math.exp(2.0 * a) / ((1.0 - b) * (1.0 + b))
    if constant_curvature_detect(params):
        other = -1.0
    lo, hi = min(-1.0, other), max(-1.0, other)
    return CurvatureRange(lo, hi)


def check_symmetry_center(params: WarpParams, tol: float = 1e-8) -> CheckReport:
    """t0 against the golden-section minimizer, plus evenness of the curvature law about t0."""
    _require_hyperbolic(params, "the symmetry check")
    t0 = symmetry_center(params)
    if t0 is None:
        return CheckReport("symmetry_center", 0.0, tol, 0, {"t0": None, "reason": "no distinguished center"})
    found = golden_section_minimize(denominator(params), t0 - 10.0, t0 + 10.0)
    even = 0.0
    count = 0
    for s in np.linspace(0.0, 5.0, 26):
        for theta in np.linspace(0.0, math.pi / 2, 7):
            lhs = sectional_closed_form(params, t0 + s, theta)
            rhs = sectional_closed_form(params, t0 - s, theta)
            even = max(even, abs(lhs - rhs))
            count += 1
    return CheckReport(
        "symmetry_center",
        abs(found - t0),
        tol,
        count,
        {"t0": t0, "golden_section": found, "evenness": even, "evenness_tol": 1e-12, "even": even < 1e-12},
    )


def sample_sectional(params: WarpParams, count: int, seed: int = DEFAULT_SEED, t_range=(-5.0, 5.0)) -> np.ndarray:
    """Sectional curvatures of ``count`` random planes at random points."""
    rng = _rng(seed)
    out = np.empty(count)
    for i in range(count):
        q = random_point(rng, params, t_range)
        u, v = random_plane(rng, params, q)
        out[i] = sectional_from(riemann_at(params, q), u, v)
    return out


def check_constant_curvature(params: WarpParams, count: int = 2000, seed: int = DEFAULT_SEED) -> CheckReport:
    """The criterion b^2 + e^{2a} = 1 against direct sampling.

    Agreement means max |sec + 1| < 1e-5 when the criterion holds and > 1e-2 when
    it does not (the far extreme is sampled explicitly so the deviation is seen).
    Residual 0 on agreement, 1 otherwise.
    """
    detected = constant_curvature_detect(params)
    secs = sample_sectional(params, count, seed, (-2.0, 2.0))
    if params.n >= 3:
        t0 = symmetry_center(params)
        t_peak = 0.0 if t0 is None else t0
        q = np.zeros(params.n)
        q[0], q[-1] = t_peak, 1.0
        vb, w = plane_at_angle(params.n, math.pi / 2, 1.0 / math.sqrt(fiber_scale(params, q)))
        secs = np.append(secs, sectional_from(riemann_at(params, q), vb, w))
    dev = float(np.max(np.abs(secs + 1.0)))
    agree = dev < 1e-5 if detected else dev > 1e-2
    return CheckReport(
        "constant_curvature",
        0.0 if agree else 1.0,
        0.5,
        secs.size,
        {"detected": detected, "max_deviation": dev, "seed": seed},
    )


def check_extremal_curvatures(params: WarpParams, count: int = 500, seed: int = DEFAULT_SEED, tol: float = 1e-6) -> CheckReport:
    """No sampled sectional curvature falls outside the predicted range."""
    rng_range = extremal_curvatures(params)
    secs = sample_sectional(params, count, seed)
    below = float(np.max(rng_range.lo - secs))
    above = float(np.max(secs - rng_range.hi))
    excess = max(below, above, 0.0)
    return CheckReport(
        "extremal_curvatures",
        excess,
        tol,
        count,
        {"lo": rng_range.lo, "hi": rng_range.hi, "lo_attained": rng_range.lo_attained, "seed": seed},
    )


# ---------------------------------------------------------------- pointwise identities


def check_curvature_law(params: WarpParams, count: int = 100, tol: float = 1e-5, seed: int = DEFAULT_SEED) -> CheckReport:
    """Numerical sectional curvature of planes at angle theta against the closed form."""
    _require_hyperbolic(params, "the curvature law")
    rng = _rng(seed)
    n = params.n
    worst = 0.0
    for _ in range(count):
        q = random_point(rng, params)
        theta = rng.uniform(0.0, math.pi / 2) if n >= 3 else 0.0
        vb, w = plane_at_angle(n, theta, 1.0 / math.sqrt(fiber_scale(params, q)))
        sec = sectional_from(riemann_at(params, q), vb, w)
        worst = max(worst, abs(sec - sectional_closed_form(params, q[0], theta)))
    return CheckReport("curvature_law", worst, tol, count, {"seed": seed})


def check_ode_identity(params: WarpParams, points: int = 1000, finite_difference: bool = False) -> CheckReport:
    ts = np.linspace(-20.0, 20.0, points)
    jet = fd_jet(lambda t: phi_eval(params, t)) if finite_difference else phi_jet(params)
    worst = max(abs(ode_residual(jet, t)) for t in ts)
    if finite_difference:
        return CheckReport("ode_identity_fd", worst, 1e-6, points, {})
    return CheckReport("ode_identity", worst, 1e-12, points, {})


def check_gauss_curvature(params: WarpParams, points: int = 1000) -> CheckReport:
    ts = np.linspace(-20.0, 20.0, points)
    worst = max(abs(gauss_curvature_2d(params, t) + 1.0) for t in ts)
    return CheckReport("gauss_curvature_2d", worst, 1e-12, points, {})


def check_pullback(grid: int = 50) -> CheckReport:
    worst = max(
        pullback_residual(t, r) for t in np.linspace(-5.0, 5.0, grid) for r in np.linspace(0.1, 10.0, grid)
    )
    return CheckReport("semicircle_pullback", worst, 1e-10, grid * grid, {})


def check_euclidean_variant(params: WarpParams, count: int = 500, seed: int = DEFAULT_SEED) -> CheckReport:
    """Sampled curvatures are nonpositive, and planes containing d/dt have curvature -1."""
    if params.hyperbolic:
        raise ValueError("this check is for the Euclidean fiber")
    rng = _rng(seed)
    n = params.n
    worst_sign, worst_dt = -math.inf, 0.0
    for _ in range(count):
        q = random_point(rng, params)
        riem = riemann_at(params, q)
        u, v = random_plane(rng, params, q)
        worst_sign = max(worst_sign, sectional_from(riem, u, v))
        dt = np.zeros(n)
        dt[0] = 1.0
        f = np.concatenate(([0.0], v[1:]))
        if np.any(f):
            worst_dt = max(worst_dt, abs(sectional_from(riem, dt, f) + 1.0))
    # the sign condition has a 1e-8 allowance and the d/dt planes 1e-6; report the
    # worse of the two as a fraction of its allowance
    ratio = max(worst_sign / 1e-8, worst_dt / 1e-6)
    return CheckReport(
        "euclidean_nonpositive",
        ratio,
        1.0,
        count,
        {"max_sectional": worst_sign, "dt_plane_residual": worst_dt, "seed": seed},
    )


def check_geodesic_flow(params: WarpParams, cases: int = 10, T: float = 10.0, tol: float = DEFAULT_TOL, seed: int = DEFAULT_SEED) -> CheckReport:
    """Relative speed drift of random unit-speed geodesics."""
    rng = _rng(seed)
    worst = 0.0
    errors = []
    for i in range(cases):
        q, v = random_unit_launch(rng, params)
        try:
            sp = geodesic_integrate(params, q, v, T, tol).speeds()
        except (IntegrationError, DomainError) as exc:
            errors.append({"case": i, "error": str(exc)})
            worst = math.inf
            continue
        worst = max(worst, float(np.max(np.abs(sp / sp[0] - 1.0))))
    return CheckReport("speed_conservation", worst, 1e-8, cases, {"seed": seed, "T": T, "errors": errors})


# ---------------------------------------------------------------- suite


@dataclass
class SuiteConfig:
    seed: int = DEFAULT_SEED
    tol: float = DEFAULT_TOL
    samples: Optional[int] = None  # overrides per-check sample counts when set


def run_suite(params: WarpParams, config: Optional[SuiteConfig] = None) -> List[CheckReport]:
    """Every check applicable to ``params``, in a fixed order."""
    cfg = config or SuiteConfig()
    k = cfg.samples

    def size(default):
        return default if k is None else k

    seed = cfg.seed
    out: List[CheckReport] = [
        check_ode_identity(params),
        check_ode_identity(params, finite_difference=True),
        check_gauss_curvature(params),
        check_pullback(),
        check_geodesic_flow(params, cases=size(10), tol=cfg.tol, seed=seed),
    ]
    if params.hyperbolic:
        out.append(check_curvature_law(params, count=size(100), seed=seed))
        out.append(check_sigma_hyperbolic(params))
        out.append(check_constant_curvature(params, count=size(500), seed=seed))
        out.append(check_symmetry_center(params))
        out.append(check_extremal_curvatures(params, count=size(200), seed=seed))
        if params.n >= 3:
            out.append(check_isometry_lifts(params, words=size(50), seed=seed))
            out.append(
                check_sigma_totally_geodesic(
                    params, cases=size(100), integrator_tol=cfg.tol, seed=seed, allow_chart_exit=abs(params.b) == 1.0
                )
            )
            q = np.zeros(params.n)
            q[-1] = 1.0
            dt, dy = np.eye(params.n)[0], np.eye(params.n)[-1]
            out.append(check_plane_property(params, q, [dt, dy], cases=size(20), integrator_tol=cfg.tol, seed=seed))
    else:
        out.append(check_euclidean_variant(params, count=size(200), seed=seed))
    out.append(check_hyperbolic_rank(params, geodesics=size(100), seed=seed))
    return out


def summary_table(reports: Iterable[CheckReport]) -> str:
    lines = [f"{'check':<32} {'residual':>12} {'tolerance':>10}  result"]
    for r in reports:
        lines.append(
            f"{r.name:<32} {r.max_residual:>12.3e} {r.tolerance:>10.1e}  {'PASS' if r.passed else 'FAIL'}"
        )
    return "\n".join(lines)
