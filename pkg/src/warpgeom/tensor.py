"""Levi-Civita connection and curvature of the warped metrics.

Component conventions: ``gamma[k, i, j]`` is Gamma^k_{ij}; ``R[l, i, j, k]`` is the
l-th component of R(d_i, d_j) d_k with

    R(X, Y) Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z,

and the quadrilinear form is R(X, Y, Z, W) = <R(X, Y) Z, W>, so that the sectional
curvature of span{u, v} is R(u, v, v, u) / (|u|^2 |v|^2 - <u, v>^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import (
    DegeneracyError,
    DomainError,
    PointLike,
    TangentLike,
    as_coords,
    check_point,
    fiber_scale,
    metric_at,
)
from .warp import Jet, WarpParams, phi_eval

METRIC_FD_STEP = 1e-5
GAMMA_FD_STEP = 1e-4
FD_HEIGHT_MARGIN = 1e-3
GRAM_FLOOR = 1e-14


class BoundaryError(DomainError):
    """A finite-difference stencil would reach too close to the chart boundary."""


class UnsupportedFiberError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Christoffel:
    gamma: np.ndarray

    def __call__(self, u, v) -> np.ndarray:
        """Gamma(u, v)^k = Gamma^k_{ij} u^i v^j."""
        return np.einsum("kij,i,j->k", self.gamma, u, v)


@dataclass(frozen=True, eq=False)
class RiemannValue:
    components: np.ndarray
    metric: np.ndarray

    @property
    def lowered(self) -> np.ndarray:
        """R_{ijkp} = R(d_i, d_j, d_k, d_p)."""
        return np.einsum("lijk,lp->ijkp", self.components, self.metric)

    def operator(self, u, v, w) -> np.ndarray:
        """Components of R(u, v) w."""
        return np.einsum("lijk,i,j,k->l", self.components, u, v, w)

    def form(self, u, v, w, z) -> float:
        return float(self.operator(u, v, w) @ self.metric @ np.asarray(z, dtype=float))


def _fiber_gamma(params: WarpParams, q: np.ndarray) -> np.ndarray:
    """Christoffel symbols of the fiber metric in the fiber coordinates."""
    k = params.n - 1
    out = np.zeros((k, k, k))
    if params.hyperbolic:
        # conformal metric delta / y^2 with y the last coordinate
        inv_y = 1.0 / q[-1]
        m = k - 1
        out[:, :, m] -= np.eye(k)
        out[:, m, :] -= np.eye(k)
        out[m] += np.eye(k)
        out *= inv_y
    return out


def _gamma(params: WarpParams, q: np.ndarray) -> np.ndarray:
    n = params.n
    _, d1, _ = params.jet(q[0])
    c = fiber_scale(params, q)
    g = np.zeros((n, n, n))
    idx = np.arange(1, n)
    g[0, idx, idx] = -d1 * c
    g[idx, 0, idx] = d1
    g[idx, idx, 0] = d1
    g[1:, 1:, 1:] = _fiber_gamma(params, q)
    return g


def christoffel_at(params: WarpParams, p: PointLike) -> Christoffel:
    q = as_coords(p, params.n)
    check_point(params, q)
    return Christoffel(_gamma(params, q))


def christoffel_contract(params: WarpParams, q: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Gamma(u, w) at coordinates ``q`` without building the full symbol array."""
    # plain floats: this sits in the innermost loop of every flow
    phi, d1, _ = params.jet(q[0])
    uu, ww = u.tolist(), w.tolist()
    dot = sum(x * y for x, y in zip(uu[1:], ww[1:]))
    cw, cu = d1 * uu[0], d1 * ww[0]
    if params.hyperbolic:
        inv_y = 1.0 / float(q[-1])
        cw -= inv_y * uu[-1]
        cu -= inv_y * ww[-1]
        c = math.exp(2.0 * phi) * inv_y * inv_y
    out = [cw * y + cu * x for x, y in zip(uu, ww)]
    if params.hyperbolic:
        out[-1] += inv_y * dot
    else:
        c = math.exp(2.0 * phi)
    out[0] = -d1 * c * dot
    return np.array(out)


def halfspace_contract(x: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Gamma(u, w) of the upper half-space metric delta / x_k^2 at ``x``."""
    inv_y = 1.0 / float(x[-1])
    out = (-inv_y * float(w[-1])) * u - (inv_y * float(u[-1])) * w
    out[-1] += inv_y * float(u @ w)
    return out


def _steps(params: WarpParams, q: np.ndarray, base: float) -> np.ndarray:
    """Per-coordinate difference steps scaled to each coordinate's natural length.

    t varies on a unit scale; hyperbolic fiber coordinates on the scale of the
    height (dilations are isometries), Euclidean fiber coordinates on a unit scale.
    """
    h = np.full(q.size, base)
    if params.hyperbolic:
        h[1:] = base * q[-1]
    return h


def _metric_fd_gamma(params: WarpParams, q: np.ndarray, step: float) -> np.ndarray:
    n = params.n
    G = metric_at(params, q)
    dG = np.empty((n, n, n))  # dG[a] = d_a g
    hs = _steps(params, q, step)
    for a in range(n):
        e = np.zeros(n)
        e[a] = 1.0

        def central(h):
            return (metric_at(params, q + h * e) - metric_at(params, q - h * e)) / (2.0 * h)

        dG[a] = (4.0 * central(hs[a] / 2.0) - central(hs[a])) / 3.0
    # Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
    lower = 0.5 * (np.einsum("ijl->ijl", dG) + np.einsum("jil->ijl", dG) - np.einsum("lij->ijl", dG))
    return np.einsum("kl,ijl->kij", np.linalg.inv(G), lower)


def christoffel_fd_check(params: WarpParams, p: PointLike, step: float = METRIC_FD_STEP) -> float:
    """Max |Gamma_analytic - Gamma_fd| with the fd symbols built from metric_at alone
    (central differences with one Richardson level)."""
    q = as_coords(p, params.n)
    check_point(params, q)
    if params.hyperbolic and q[-1] < FD_HEIGHT_MARGIN:
        raise BoundaryError(f"height {q[-1]} is within {FD_HEIGHT_MARGIN} of the boundary")
    return float(np.max(np.abs(_metric_fd_gamma(params, q, step) - _gamma(params, q))))


def _gamma_derivatives(params: WarpParams, q: np.ndarray, step: float) -> np.ndarray:
    """dGamma[a, k, i, j] = d_a Gamma^k_ij by Richardson-extrapolated central differences."""
    n = params.n
    hs = _steps(params, q, step)
    out = np.empty((n, n, n, n))
    for a in range(n):
        e = np.zeros(n)
        e[a] = 1.0

        def central(h):
            return (_gamma(params, q + h * e) - _gamma(params, q - h * e)) / (2.0 * h)

        out[a] = (4.0 * central(hs[a] / 2.0) - central(hs[a])) / 3.0
    return out


def riemann_at(params: WarpParams, p: PointLike, step: float = GAMMA_FD_STEP) -> RiemannValue:
    q = as_coords(p, params.n)
    check_point(params, q)
    gam = _gamma(params, q)
    dgam = _gamma_derivatives(params, q, step)
    # R^l_{kij} in our layout [l, i, j, k]
    R = (
        np.einsum("iljk->lijk", dgam)
        - np.einsum("jlik->lijk", dgam)
        + np.einsum("lim,mjk->lijk", gam, gam)
        - np.einsum("ljm,mik->lijk", gam, gam)
    )
    return RiemannValue(R, metric_at(params, q))


def sectional_from(riem: RiemannValue, u: TangentLike, v: TangentLike) -> float:
    n = riem.metric.shape[0]
    uu, vv = as_coords(u, n), as_coords(v, n)
    G = riem.metric
    uu_n, vv_n, uv = uu @ G @ uu, vv @ G @ vv, uu @ G @ vv
    gram = uu_n * vv_n - uv * uv
    if not gram > GRAM_FLOOR * max(uu_n * vv_n, 1e-300):
        raise DegeneracyError("vectors do not span a plane")
    return riem.form(uu, vv, vv, uu) / gram


def sectional(params: WarpParams, p: PointLike, u: TangentLike, v: TangentLike) -> float:
    return sectional_from(riemann_at(params, p), u, v)


def sectional_closed_form(params: WarpParams, t: float, theta: float) -> float:
    """-1 + 4 (1 - b^2 - e^{2a}) sin^2(theta) / ((1+b) e^t + (1-b) e^-t)^2.

    The denominator equals (2 e^a e^phi(t))^2, so the correction is evaluated as
    (1 - b^2 - e^{2a}) exp(-2a - 2 phi(t)) to stay finite for large |t|.
    """
    if not params.hyperbolic:
        raise UnsupportedFiberError("no closed-form curvature law for the Euclidean fiber")
    if not -1e-12 <= theta <= math.pi / 2 + 1e-12:
        raise ValueError(f"theta must lie in [0, pi/2], got {theta}")
    a, b = params.a, params.b
    amp = 1.0 - b * b - math.exp(2.0 * a)
    return -1.0 + amp * math.exp(-2.0 * a - 2.0 * phi_eval(params, t)) * math.sin(theta) ** 2


def gauss_curvature_2d(params: WarpParams, t: float, phi: Optional[Callable[[float], Jet]] = None) -> float:
    """Curvature -phi'' - (phi')^2 of dt^2 + e^{2 phi} h_1."""
    jet = phi if phi is not None else params.jet
    _, d1, d2 = jet(t)
    out = -d2 - d1 * d1
    if not math.isfinite(out):
        raise ValueError(f"non-finite curvature at t={t}")
    return out


def plane_at_angle(n: int, theta: float, scale: float = 1.0):
    """Spanning vectors {cos(theta) d/dt + sin(theta) v, w} with v along x_{n-1}, w along x_1.

    ``scale`` is the coordinate length of a unit fiber vector, i.e. 1/sqrt(g_fiber).
    For n = 2 only theta = 0 is realizable.
    """
    if n < 3 and abs(theta) > 0:
        raise DegeneracyError("fiber directions for theta > 0 need n >= 3")
    vbar = np.zeros(n)
    vbar[0] = math.cos(theta)
    vbar[-1] = math.sin(theta) * scale
    w = np.zeros(n)
    w[1 if n >= 3 else -1] = scale
    return vbar, w
