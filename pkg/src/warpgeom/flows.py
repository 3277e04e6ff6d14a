"""Geodesics, the exponential map and parallel transport.

Integration uses the Dormand-Prince 5(4) pair with local extrapolation, PI step
control and error measured per unit step in the metric's orthonormal scaling.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .geometry import (
    HEIGHT_FLOOR,
    DomainError,
    HalfSpace,
    Point,
    PointLike,
    Tangent,
    TangentLike,
    as_coords,
    check_point,
    fiber_scale,
)
from .serialize import dumps17, fmt17, loads, parse_float
from .tensor import christoffel_contract, halfspace_contract
from .warp import FiberKind, WarpParams

DEFAULT_TOL = 1e-10
MAX_HORIZON = 50.0
MIN_SAMPLES = 64
TOL_RANGE = (1e-13, 1e-4)
_ROUNDING_SLACK = 2.0 * np.finfo(float).eps

Geometry = Union[WarpParams, HalfSpace]


class IntegrationError(RuntimeError):
    pass


class StepUnderflowError(IntegrationError):
    def __init__(self, s: float, h: float):
        super().__init__(f"step size underflow (h={h:.3g}) at s={s:.17g}")
        self.s = s
        self.h = h


class DomainExitError(IntegrationError, DomainError):
    """The solution left the chart; ``s_exit`` is the last parameter inside it."""

    def __init__(self, s_exit: float, path: Optional["GeodesicPath"] = None):
        super().__init__(f"left the chart domain after s={s_exit:.17g}")
        self.s_exit = s_exit
        self.path = path


class _Model:
    """Connection, validity test and error weights for one geometry."""

    def __init__(self, geom: Geometry):
        self.geom = geom
        self.n = geom.n
        self.halfspace = isinstance(geom, HalfSpace)
        self.height = self.halfspace or geom.fiber is FiberKind.HYPERBOLIC

    def contract(self, q, u, w):
        if self.halfspace:
            return halfspace_contract(q, u, w)
        return christoffel_contract(self.geom, q, u, w)

    def scales(self, q) -> np.ndarray:
        """sqrt of the diagonal metric: coordinate -> orthonormal component factors."""
        if self.halfspace:
            return np.full(self.n, 1.0 / abs(q[-1]))
        out = np.full(self.n, math.sqrt(fiber_scale(self.geom, q)))
        out[0] = 1.0
        return out

    def inner(self, q, u, w) -> float:
        s = self.scales(q)
        return float(np.dot(s * u, s * w))

    def admissible(self, q) -> bool:
        return bool(np.all(np.isfinite(q))) and (not self.height or q[-1] > 0.0)

    def inside(self, q) -> bool:
        return bool(np.all(np.isfinite(q))) and (not self.height or q[-1] >= HEIGHT_FLOOR)

    def check(self, q):
        if self.halfspace:
            self.geom.metric_at(q)
        else:
            check_point(self.geom, q)


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY = 0.9
_ALPHA = 0.7 / 4.0  # error per unit step scales like h^4
_BETA = 0.4 / 4.0
_FAC_MIN, _FAC_MAX = 0.2, 5.0


_A_ROWS = [np.array(row) for row in _A]


def _dopri_step(f, s, y, k1, h):
    """One Dormand-Prince step; returns (y_new, k_last, err_vector, stages_ok).

    k_last is the derivative at y_new (first-same-as-last).
    """
    K = np.empty((7, y.size))
    K[0] = k1
    try:
        with np.errstate(all="ignore"):
            for i in range(1, 7):
                yi = y + h * (_A_ROWS[i] @ K[:i])
                K[i] = f(s + _C[i] * h, yi)
    except (ValueError, ZeroDivisionError, OverflowError):
        return y, None, None, False
    # the seventh stage is evaluated at y_new itself
    if not (np.isfinite(K).all() and np.isfinite(yi).all()):
        return yi, None, None, False
    return yi, K[6], h * (_E @ K), True


@dataclass
class _Run:
    s: list
    y: list
    steps: list = field(default_factory=list)  # accepted step sizes
    accepted: int = 0
    rejected: int = 0
    evals: int = 0
    h_last: float = 0.0


def _integrate(
    f: Callable,
    y0: np.ndarray,
    s0: float,
    s1: float,
    tol: float,
    weights: Callable[[np.ndarray], np.ndarray],
    admissible: Callable[[np.ndarray], bool],
    inside: Optional[Callable[[np.ndarray], bool]] = None,
    h0: Optional[float] = None,
    max_steps: int = 2_000_000,
) -> _Run:
    """Adaptive DOPRI5 from s0 to s1 (either direction), landing exactly on s1."""
    span = s1 - s0
    run = _Run([s0], [np.array(y0, dtype=float)])
    if span == 0.0:
        return run
    direction = 1.0 if span > 0 else -1.0
    h = abs(h0) if h0 else min(abs(span), 0.5 * tol ** 0.25)
    s, y = s0, run.y[0]
    k1 = f(s, y)
    run.evals += 1
    err_prev = 1.0
    for _ in range(max_steps):
        remaining = abs(s1 - s)
        if remaining <= 1e-15 * max(1.0, abs(s1)):
            break
        # stretch a nearly-final step instead of leaving a sliver
        last = 1.25 * h >= remaining
        step = direction * (remaining if last else h)
        if abs(step) < 1e-14 * max(1.0, abs(s)):
            raise StepUnderflowError(s, step)
        y_new, k_new, err, ok = _dopri_step(f, s, y, k1, step)
        run.evals += 6
        if ok and admissible(y_new):
            w = np.maximum(weights(y), weights(y_new))
            ratio = float(np.max(np.abs(w * err))) / (tol * abs(step))
        else:
            ratio = math.inf
        if ratio <= 1.0:
            s = s1 if last else s + step
            y = y_new
            k1 = k_new
            run.s.append(s)
            run.y.append(y)
            run.steps.append(step)
            run.accepted += 1
            if inside is not None and not inside(y):
                exc = DomainExitError(run.s[-2])
                del run.s[-1], run.y[-1], run.steps[-1]
                exc.run = run
                raise exc
            ratio = max(ratio, 1e-10)
            fac = _SAFETY * ratio ** -_ALPHA * err_prev ** _BETA
            err_prev = ratio
            h = abs(step) * min(_FAC_MAX, max(_FAC_MIN, fac))
            if not last:
                run.h_last = h
        else:
            run.rejected += 1
            if math.isfinite(ratio):
                # below 1/1.25 so a rejected final step is never retried unchanged
                h = abs(step) * min(0.75, max(_FAC_MIN, _SAFETY * ratio ** -0.25))
            else:
                h = abs(step) * 0.25
    else:
        raise IntegrationError(f"exceeded {max_steps} steps")
    if run.h_last == 0.0:
        run.h_last = h
    return run


def _geodesic_rhs(model: _Model):
    n = model.n

    def rhs(_s, y):
        q, v = y[:n], y[n:]
        return np.concatenate((v, -model.contract(q, v, v)))

    return rhs


def _state_weights(model: _Model):
    n = model.n

    def weights(y):
        sc = model.scales(y[:n])
        return np.concatenate((sc, sc))

    return weights


@dataclass(frozen=True, eq=False)
class GeodesicPath:
    """Samples (s, position, velocity) of a geodesic, s running from 0 to T."""

    params: Geometry
    s: np.ndarray
    q: np.ndarray
    v: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        q = np.atleast_2d(np.asarray(self.q, dtype=float))
        v = np.atleast_2d(np.asarray(self.v, dtype=float))
        if not (s.ndim == 1 and q.shape == v.shape == (s.size, self.params.n)):
            raise ValueError("inconsistent sample arrays")
        if s.size > 1:
            ds = np.diff(s)
            if not (np.all(ds > 0) or np.all(ds < 0)):
                raise ValueError("sample parameters must be strictly monotone")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)

    def __len__(self):
        return self.s.size

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def samples(self):
        if isinstance(self.params, HalfSpace):
            return list(zip(self.s, self.q, self.v))
        return [(s, Point.from_coords(q), Tangent.from_coords(v)) for s, q, v in zip(self.s, self.q, self.v)]

    @property
    def end(self):
        return self.q[-1], self.v[-1]

    def speeds(self) -> np.ndarray:
        m = _Model(self.params)
        return np.array([math.sqrt(m.inner(q, v, v)) for q, v in zip(self.q, self.v)])

    def accelerations(self) -> np.ndarray:
        m = _Model(self.params)
        return np.array([-m.contract(q, v, v) for q, v in zip(self.q, self.v)])

    # serialization -----------------------------------------------------

    def columns(self) -> list:
        if isinstance(self.params, HalfSpace):
            k = self.params.k
            return ["s"] + [f"x{i}" for i in range(1, k + 1)] + [f"dx{i}" for i in range(1, k + 1)]
        n = self.n
        return ["s", "t"] + [f"x{i}" for i in range(1, n)] + ["dt"] + [f"dx{i}" for i in range(1, n)]

    def rows(self):
        for s, q, v in zip(self.s, self.q, self.v):
            yield [s, *q, *v]

    def to_csv(self) -> str:
        return _csv_text(self.columns(), self.rows())

    @classmethod
    def from_csv(cls, text: str, params: Geometry, meta: Optional[dict] = None) -> "GeodesicPath":
        n = params.n
        data = _csv_rows(text)
        return cls(params, data[:, 0], data[:, 1 : 1 + n], data[:, 1 + n : 1 + 2 * n], meta or {})

    def to_dict(self) -> dict:
        return {
            "params": geometry_to_json(self.params),
            "columns": self.columns(),
            "samples": [list(r) for r in self.rows()],
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return dumps17(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "GeodesicPath":
        obj = loads(text)
        params = geometry_from_json(obj["params"])
        n = params.n
        data = np.array(obj["samples"], dtype=float)
        return cls(params, data[:, 0], data[:, 1 : 1 + n], data[:, 1 + n : 1 + 2 * n], obj.get("meta", {}))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt17(x) for x in row])
    return buf.getvalue()


def _csv_rows(text: str) -> np.ndarray:
    reader = csv.reader(io.StringIO(text))
    next(reader)
    return np.array([[parse_float(x) for x in row] for row in reader if row], dtype=float)


def geometry_to_json(geom: Geometry) -> dict:
    if isinstance(geom, HalfSpace):
        return {"model": "halfspace", "k": geom.k}
    return {"a": geom.a, "b": geom.b, "n": geom.n, "fiber": geom.fiber.value}


def geometry_from_json(obj: dict) -> Geometry:
    if obj.get("model") == "halfspace":
        return HalfSpace(int(obj["k"]))
    return WarpParams(obj["a"], obj["b"], int(obj["n"]), FiberKind(obj["fiber"]))


def _check_tol(tol: float):
    lo, hi = TOL_RANGE
    if not lo <= tol <= hi:
        raise ValueError(f"tol must lie in [{lo:g}, {hi:g}], got {tol}")


def geodesic_integrate(
    params: Geometry,
    p0: PointLike,
    v0: TangentLike,
    T: float,
    tol: float = DEFAULT_TOL,
    min_samples: int = MIN_SAMPLES,
) -> GeodesicPath:
    """Solve x'' + Gamma(x', x') = 0 on [0, T] (T may be negative).

    Every accepted step is a sample; when there are fewer than ``min_samples``
    intervals, extra samples are produced by shortened steps taken from the
    accepted states, so the trajectory itself is untouched.

    Raises DomainExitError (with the partial path attached) if the height drops
    below the floor, StepUnderflowError if the tolerance cannot be met.
    """
    _check_tol(tol)
    if not math.isfinite(T) or abs(T) > MAX_HORIZON:
        raise ValueError(f"|T| must be at most {MAX_HORIZON}, got {T}")
    model = _Model(params)
    n = model.n
    q0, w0 = as_coords(p0, n), as_coords(v0, n)
    model.check(q0)
    if not np.any(w0):
        raise ValueError("initial velocity must be nonzero")
    rhs = _geodesic_rhs(model)
    weights = _state_weights(model)
    y0 = np.concatenate((q0, w0))

    def admissible(y):
        return model.admissible(y[:n])

    def inside(y):
        return model.inside(y[:n])

    meta = {"tol": tol, "T": T}
    try:
        run = _integrate(rhs, y0, 0.0, float(T), tol, weights, admissible, inside)
    except DomainExitError as exc:
        part = exc.run
        path = None
        if len(part.s) >= 2:
            Y = np.array(part.y)
            path = GeodesicPath(params, np.array(part.s), Y[:, :n], Y[:, n:], dict(meta, partial=True))
        raise DomainExitError(exc.s_exit, path) from None
    s, ys = run.s, run.y
    fill = 0
    if T != 0.0 and len(s) - 1 < min_samples:
        fill = math.ceil(min_samples / (len(s) - 1)) - 1
        s, ys = _fill_samples(rhs, run, fill)
    meta.update(accepted=run.accepted, rejected=run.rejected, evals=run.evals, fill_per_step=fill)
    Y = np.array(ys)
    return GeodesicPath(params, np.array(s), Y[:, :n], Y[:, n:], meta)


def _fill_samples(rhs, run: _Run, fill: int):
    s_out, y_out = [run.s[0]], [run.y[0]]
    for j, h in enumerate(run.steps):
        s_j, y_j = run.s[j], run.y[j]
        k1 = rhs(s_j, y_j)
        for m in range(1, fill + 1):
            sub = h * m / (fill + 1)
            y_m, _, _, _ = _dopri_step(rhs, s_j, y_j, k1, sub)
            s_out.append(s_j + sub)
            y_out.append(y_m)
        s_out.append(run.s[j + 1])
        y_out.append(run.y[j + 1])
    return s_out, y_out


def exp_map(params: Geometry, p: PointLike, v: TangentLike, tol: float = DEFAULT_TOL):
    """Endpoint of the geodesic with initial data (p, v) at parameter 1."""
    n = params.n
    q, w = as_coords(p, n), as_coords(v, n)
    if not np.any(w):
        _Model(params).check(q)
        return Point.from_coords(q) if isinstance(params, WarpParams) else q.copy()
    end = geodesic_integrate(params, q, w, 1.0, tol).q[-1]
    return Point.from_coords(end) if isinstance(params, WarpParams) else end


class _Hermite:
    """Cubic Hermite interpolation of (position, velocity) between path samples."""

    def __init__(self, path: GeodesicPath):
        self.s = path.s
        y = np.hstack((path.q, path.v))
        dy = np.hstack((path.v, path.accelerations()))
        h = np.diff(path.s)[:, None]
        y0, y1, d0, d1 = y[:-1], y[1:], h * dy[:-1], h * dy[1:]
        # power-basis coefficients in tau = (s - s_k) / h_k
        self.coef = np.stack((y0, d0, 3 * (y1 - y0) - 2 * d0 - d1, 2 * (y0 - y1) + d0 + d1), axis=1)
        self.h = h[:, 0]
        self.n = path.n

    def __call__(self, k: int, s: float):
        tau = (s - self.s[k]) / self.h[k]
        if not -1e-9 <= tau <= 1 + 1e-9:
            raise ValueError(f"interpolation outside sample interval at s={s}")
        c = self.coef[k]
        y = c[0] + tau * (c[1] + tau * (c[2] + tau * c[3]))
        return y[: self.n], y[self.n :]


@dataclass(frozen=True, eq=False)
class TransportedField:
    base: GeodesicPath
    w: np.ndarray

    def columns(self) -> list:
        cols = self.base.columns()
        if isinstance(self.base.params, HalfSpace):
            return cols + [f"w{i}" for i in range(1, self.base.n + 1)]
        return cols + ["wdt"] + [f"wdx{i}" for i in range(1, self.base.n)]

    def rows(self):
        for row, w in zip(self.base.rows(), self.w):
            yield [*row, *w]

    def to_csv(self) -> str:
        return _csv_text(self.columns(), self.rows())

    def to_json(self) -> str:
        obj = self.base.to_dict()
        obj["columns"] = self.columns()
        obj["samples"] = [list(r) for r in self.rows()]
        return dumps17(obj)

    def norms(self) -> np.ndarray:
        m = _Model(self.base.params)
        return np.array([math.sqrt(m.inner(q, w, w)) for q, w in zip(self.base.q, self.w)])

    def inner_with_velocity(self) -> np.ndarray:
        m = _Model(self.base.params)
        return np.array([m.inner(q, w, v) for q, v, w in zip(self.base.q, self.base.v, self.w)])


def parallel_transport(path: GeodesicPath, w0: TangentLike, tol: Optional[float] = None) -> TransportedField:
    """Solve w' + Gamma(x', w) = 0 along the sampled path, one sample interval at a time."""
    if len(path) < 2:
        raise ValueError("path needs at least two samples")
    tol = path.meta.get("tol", DEFAULT_TOL) if tol is None else tol
    _check_tol(tol)
    model = _Model(path.params)
    n = model.n
    w = as_coords(w0, n).copy()
    interp = _Hermite(path)
    out = [w]
    h = None
    for k in range(len(path) - 1):
        scales = model.scales(path.q[k])

        def rhs(s, y, k=k):
            q, v = interp(k, s)
            return -model.contract(q, v, y)

        run = _integrate(rhs, w, path.s[k], path.s[k + 1], tol, lambda _y: scales, lambda y: True, h0=h)
        h = run.h_last
        w = run.y[-1]
        out.append(w)
    return TransportedField(path, np.array(out))


def _rk4_defect(model: _Model, s0, y0, s1, y1, h_ref: float) -> float:
    n = model.n
    rhs = _geodesic_rhs(model)
    span = s1 - s0
    m = max(1, math.ceil(abs(span) / h_ref))
    h = span / m
    y0 = np.asarray(y0, dtype=float)
    # accumulate the displacement on its own: substep increments can be far
    # below the resolution of the coordinates themselves
    d = np.zeros_like(y0)
    s = s0
    for _ in range(m):
        k1 = rhs(s, y0 + d)
        k2 = rhs(s + h / 2, y0 + (d + h / 2 * k1))
        k3 = rhs(s + h / 2, y0 + (d + h / 2 * k2))
        k4 = rhs(s + h, y0 + (d + h * k3))
        d = d + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        s += h
    sc = model.scales(y1[:n])
    # the stored samples are rounded to double precision; that much mismatch is
    # not a defect of the path
    slack = _ROUNDING_SLACK * np.maximum(np.abs(y0), np.abs(y1))
    miss = np.maximum(np.abs((y0 - y1) + d) - slack, 0.0)
    return float(np.max(np.concatenate((sc, sc)) * miss))


def geodesic_residual(path: GeodesicPath, h_ref: float = 1e-3) -> float:
    """Largest defect per unit parameter between consecutive samples.

    Each sample is propagated to the next one with fine fixed-step classical RK4
    (independent of the adaptive integrator); the mismatch, measured in the
    metric's orthonormal scaling and divided by the sample spacing, estimates
    |x'' + Gamma(x', x')|.
    """
    if len(path) < 3:
        raise ValueError("residual needs at least three samples")
    model = _Model(path.params)
    worst = 0.0
    for k in range(len(path) - 1):
        y0 = np.concatenate((path.q[k], path.v[k]))
        y1 = np.concatenate((path.q[k + 1], path.v[k + 1]))
        ds = path.s[k + 1] - path.s[k]
        worst = max(worst, _rk4_defect(model, path.s[k], y0, path.s[k + 1], y1, h_ref) / abs(ds))
    return worst


def map_through_semicircle_chart(path: GeodesicPath) -> GeodesicPath:
    """Image of a path on M^2 = R x H^1 under F(t, r) = (r tanh t, r sech t), as a HalfSpace path."""
    from .geometry import semicircle_chart, semicircle_jacobian

    if not isinstance(path.params, WarpParams) or path.n != 2 or not path.params.hyperbolic:
        raise ValueError("the semicircle chart maps paths on R x H^1")
    q = np.array([semicircle_chart(t, r) for t, r in path.q])
    v = np.array([semicircle_jacobian(t, r) @ w for (t, r), w in zip(path.q, path.v)])
    return GeodesicPath(HalfSpace(2), path.s, q, v, dict(path.meta))
