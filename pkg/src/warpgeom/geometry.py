"""Points, tangent vectors and the warped metric on R x H^{n-1} (or R x R^{n-1}).

Coordinates are ordered (t, x_1, ..., x_{n-1}); for the hyperbolic fiber the last
coordinate x_{n-1} is the upper half-space height.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .warp import WarpParams

HEIGHT_FLOOR = 1e-12


class DomainError(ValueError):
    """A point lies outside the chart (height below the floor)."""


class DegeneracyError(ValueError):
    """Zero vector, dependent set, or degenerate plane."""


@dataclass(frozen=True, eq=False)
class Point:
    t: float
    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", x)
        if not (math.isfinite(self.t) and np.all(np.isfinite(x))):
            raise ValueError("point coordinates must be finite")

    @property
    def dim(self) -> int:
        return 1 + self.x.size

    def coords(self) -> np.ndarray:
        return np.concatenate(([self.t], self.x))

    @classmethod
    def from_coords(cls, q) -> "Point":
        q = np.asarray(q, dtype=float)
        return cls(q[0], q[1:])

    def to_json(self) -> dict:
        return {"t": self.t, "x": self.x.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Point":
        return cls(obj["t"], obj["x"])

    def __repr__(self):
        return f"Point(t={self.t!r}, x={self.x.tolist()!r})"


@dataclass(frozen=True, eq=False)
class Tangent:
    dt: float
    dx: np.ndarray

    def __post_init__(self):
        dx = np.array(self.dx, dtype=float).reshape(-1)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "dx", dx)
        if not (math.isfinite(self.dt) and np.all(np.isfinite(dx))):
            raise ValueError("tangent components must be finite")

    @property
    def dim(self) -> int:
        return 1 + self.dx.size

    def coords(self) -> np.ndarray:
        return np.concatenate(([self.dt], self.dx))

    @classmethod
    def from_coords(cls, v) -> "Tangent":
        v = np.asarray(v, dtype=float)
        return cls(v[0], v[1:])

    @classmethod
    def d_dt(cls, n: int) -> "Tangent":
        return cls(1.0, np.zeros(n - 1))

    @classmethod
    def fiber(cls, n: int, i: int) -> "Tangent":
        """Coordinate vector d/dx_i, i = 1..n-1."""
        dx = np.zeros(n - 1)
        dx[i - 1] = 1.0
        return cls(0.0, dx)

    def to_json(self) -> dict:
        return {"dt": self.dt, "dx": self.dx.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Tangent":
        return cls(obj["dt"], obj["dx"])

    def __repr__(self):
        return f"Tangent(dt={self.dt!r}, dx={self.dx.tolist()!r})"


PointLike = Union[Point, Sequence[float], np.ndarray]
TangentLike = Union[Tangent, Sequence[float], np.ndarray]


def as_coords(obj, n: int | None = None) -> np.ndarray:
    """Flat coordinate array of a Point, Tangent or sequence, with an optional size check."""
    if isinstance(obj, (Point, Tangent)):
        arr = obj.coords()
    else:
        arr = np.asarray(obj, dtype=float).reshape(-1)
    if n is not None and arr.size != n:
        raise ValueError(f"expected {n} components, got {arr.size}")
    return arr


def check_point(params: WarpParams, q: np.ndarray) -> None:
    if q.size != params.n:
        raise ValueError(f"expected {params.n} coordinates, got {q.size}")
    if not np.all(np.isfinite(q)):
        raise DomainError("non-finite coordinates")
    if params.hyperbolic and not q[-1] >= HEIGHT_FLOOR:
        raise DomainError(f"height x_{params.n - 1} = {q[-1]!r} is below the floor {HEIGHT_FLOOR}")


def fiber_scale(params: WarpParams, q: np.ndarray) -> float:
    """exp(2 phi(t)) / x_{n-1}^2 (hyperbolic) or exp(2 phi(t)) (Euclidean)."""
    phi = params.jet(q[0])[0]
    c = math.exp(2.0 * phi)
    if params.hyperbolic:
        c /= q[-1] * q[-1]
    return c


def metric_at(params: WarpParams, p: PointLike) -> np.ndarray:
    q = as_coords(p)
    check_point(params, q)
    g = np.full(params.n, fiber_scale(params, q))
    g[0] = 1.0
    return np.diag(g)


def inner(params: WarpParams, p: PointLike, u: TangentLike, v: TangentLike) -> float:
    n = params.n
    q = as_coords(p, n)
    check_point(params, q)
    uu, vv = as_coords(u, n), as_coords(v, n)
    c = fiber_scale(params, q)
    return float(uu[0] * vv[0] + c * np.dot(uu[1:], vv[1:]))


def norm(params: WarpParams, p: PointLike, u: TangentLike) -> float:
    return math.sqrt(max(inner(params, p, u, u), 0.0))


def normalize(params: WarpParams, p: PointLike, u: TangentLike) -> Tangent:
    size = norm(params, p, u)
    if not size > 0.0:
        raise DegeneracyError("cannot normalize the zero vector")
    return Tangent.from_coords(as_coords(u) / size)


def gram_schmidt(params: WarpParams, p: PointLike, vectors: Sequence[TangentLike], eps: float = 1e-12) -> list:
    """Orthonormalize ``vectors`` in order under the metric at ``p`` (modified Gram-Schmidt)."""
    basis: list = []
    G = metric_at(params, p)
    for vec in vectors:
        w = as_coords(vec, params.n).copy()
        scale = math.sqrt(max(w @ G @ w, 0.0))
        for e in basis:
            w -= (e @ G @ w) * e
        size = math.sqrt(max(w @ G @ w, 0.0))
        if not size > eps * max(scale, 1.0):
            raise DegeneracyError("vectors are linearly dependent")
        basis.append(w / size)
    return [Tangent.from_coords(e) for e in basis]


def plane_angle(params: WarpParams, p: PointLike, sigma: Sequence[TangentLike]) -> float:
    """Angle in [0, pi/2] between the unit vector d/dt and the 2-plane ``sigma``."""
    if len(sigma) != 2:
        raise DegeneracyError("a plane needs exactly two spanning vectors")
    e1, e2 = (e.coords() for e in gram_schmidt(params, p, sigma))
    G = metric_at(params, p)
    dt = np.zeros(params.n)
    dt[0] = 1.0
    proj = (e1 @ G @ dt) * e1 + (e2 @ G @ dt) * e2
    perp = dt - proj
    along = math.sqrt(max(proj @ G @ proj, 0.0))
    across = math.sqrt(max(perp @ G @ perp, 0.0))
    return math.atan2(across, along)


def semicircle_chart(t: float, r: float) -> np.ndarray:
    """F_r(t) = (r tanh t, r sech t): the semicircle through (0, r) as a unit-speed H^2 geodesic."""
    if not r > 0.0:
        raise DomainError(f"r must be positive, got {r}")
    return np.array([r * math.tanh(t), r / math.cosh(t)])


def semicircle_jacobian(t: float, r: float) -> np.ndarray:
    """d F / d(t, r) with columns (dF/dt, dF/dr)."""
    if not r > 0.0:
        raise DomainError(f"r must be positive, got {r}")
    sech = 1.0 / math.cosh(t)
    tanh = math.tanh(t)
    return np.array([[r * sech * sech, tanh], [-r * sech * tanh, sech]])


def pullback_residual(t: float, r: float) -> float:
    """Max entry of F*(h_2) - diag(1, cosh^2(t)/r^2) at (t, r)."""
    X, Y = semicircle_chart(t, r)
    J = semicircle_jacobian(t, r)
    pulled = J.T @ J / (Y * Y)
    target = np.diag([1.0, math.cosh(t) ** 2 / (r * r)])
    return float(np.max(np.abs(pulled - target)))


@dataclass(frozen=True)
class HalfSpace:
    """Upper half-space model of H^k: {x_k > 0} with metric |dx|^2 / x_k^2.

    Only used as a reference geometry; the warped family lives on WarpParams.
    """

    k: int = 2

    @property
    def n(self) -> int:
        return self.k

    def metric_at(self, x) -> np.ndarray:
        x = as_coords(x, self.k)
        if not x[-1] >= HEIGHT_FLOOR:
            raise DomainError(f"height {x[-1]!r} is below the floor {HEIGHT_FLOOR}")
        return np.eye(self.k) / (x[-1] * x[-1])
