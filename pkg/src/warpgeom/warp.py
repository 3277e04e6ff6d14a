"""Warping functions phi_{a,b} solving phi'' + (phi')^2 - 1 = 0.

Every metric in the family is ``dt^2 + exp(2 phi(t)) h_fiber`` where

    phi_{a,b}(t) = ln(((1+b) e^t + (1-b) e^-t) / (2 e^a)),

the solution with phi(0) = -a, phi'(0) = b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Tuple

LN2 = math.log(2.0)

Jet = Tuple[float, float, float]
"""Value, first and second derivative of a scalar function at a point."""


class FiberKind(str, Enum):
    HYPERBOLIC = "hyperbolic"
    EUCLIDEAN = "euclidean"


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class WarpParams:
    """Selects one metric of the family.

    ``phi_override`` replaces phi_{a,b} by an arbitrary jet ``t -> (phi, phi', phi'')``;
    it exists so checks can be fed a deliberately wrong warping function.
    """

    a: float = 0.0
    b: float = 0.0
    n: int = 3
    fiber: FiberKind = FiberKind.HYPERBOLIC
    phi_override: Optional[Callable[[float], Jet]] = field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self):
        object.__setattr__(self, "a", _check_finite("a", self.a))
        object.__setattr__(self, "b", _check_finite("b", self.b))
        object.__setattr__(self, "fiber", FiberKind(self.fiber))
        if not -1.0 <= self.b <= 1.0:
            raise ValueError(f"b must lie in [-1, 1], got {self.b}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        b = self.b
        object.__setattr__(self, "_lp", math.log1p(b) if b > -1.0 else None)
        object.__setattr__(self, "_lm", math.log1p(-b) if b < 1.0 else None)
        object.__setattr__(self, "_shift", math.atanh(b) if abs(b) < 1.0 else None)

    @property
    def hyperbolic(self) -> bool:
        return self.fiber is FiberKind.HYPERBOLIC

    def jet(self, t: float) -> Jet:
        """(phi, phi', phi'') at ``t``, honouring ``phi_override``."""
        if self.phi_override is not None:
            values = tuple(float(v) for v in self.phi_override(t))
            if not all(math.isfinite(v) for v in values):
                raise ValueError(f"warping override is not finite at t={t}")
            return values  # type: ignore[return-value]
        t = float(t)
        if not math.isfinite(t):
            raise ValueError(f"t must be finite, got {t!r}")
        u = t + self._lp if self._lp is not None else None
        v = -t + self._lm if self._lm is not None else None
        phi = _logaddexp(u, v) - LN2 - self.a
        d1 = math.tanh(t + self._shift) if self._shift is not None else math.copysign(1.0, self.b)
        return phi, d1, 1.0 - d1 * d1


def _branches(params: WarpParams, t: float) -> Tuple[Optional[float], Optional[float]]:
    """Log-magnitudes of the e^t and e^-t terms; ``None`` for a vanishing term."""
    t = _check_finite("t", t)
    u = t + math.log1p(params.b) if params.b > -1.0 else None
    v = -t + math.log1p(-params.b) if params.b < 1.0 else None
    if u is None and v is None:
        raise ValueError("degenerate warping parameters: 1+b and 1-b both vanish")
    return u, v


def _logaddexp(u: Optional[float], v: Optional[float]) -> float:
    if u is None:
        return v  # type: ignore[return-value]
    if v is None:
        return u
    m = max(u, v)
    return m + math.log(math.exp(u - m) + math.exp(v - m))


def phi_eval(params: WarpParams, t: float) -> float:
    u, v = _branches(params, t)
    return _logaddexp(u, v) - LN2 - params.a


def phi_d1(params: WarpParams, t: float) -> float:
    """phi'(t) = tanh(t + artanh b), with the b = +-1 limits exact."""
    t = _check_finite("t", t)
    if params.b == 1.0:
        return 1.0
    if params.b == -1.0:
        return -1.0
    return math.tanh(t + math.atanh(params.b))


def phi_d2(params: WarpParams, t: float) -> float:
    """phi''(t), taken from the ODE itself: 1 - phi'(t)^2."""
    d1 = phi_d1(params, t)
    return 1.0 - d1 * d1


def warp_factor(params: WarpParams, t: float) -> float:
    """exp(phi(t)), the square root of the fiber coefficient of the metric."""
    return math.exp(phi_eval(params, t))


def phi_jet(params: WarpParams) -> Callable[[float], Jet]:
    """The analytic phi_{a,b} as a jet function (ignores ``phi_override``)."""
    return lambda t: (phi_eval(params, t), phi_d1(params, t), phi_d2(params, t))


def ode_residual(phi: Callable[[float], Jet], t: float) -> float:
    """phi'' + (phi')^2 - 1 for a jet function ``phi``."""
    _, d1, d2 = phi(t)
    if not (math.isfinite(d1) and math.isfinite(d2)):
        raise ValueError(f"non-finite derivatives at t={t}: phi'={d1}, phi''={d2}")
    return d2 + d1 * d1 - 1.0


def fd_jet(f: Callable[[float], float], h1: float = 1e-6, h2: float = 1e-4, relative: bool = True) -> Callable[[float], Jet]:
    """Finite-difference jet of ``f``: central first difference, Richardson-extrapolated
    second difference.  Used as an oracle against the analytic derivatives.

    With ``relative`` the steps grow like max(1, |t|): phi is of size |t|, and a fixed
    step would let the rounding of f(t) dominate the second difference far out.
    """

    def jet(t: float) -> Jet:
        scale = max(1.0, abs(t)) if relative else 1.0
        a, b = h1 * scale, h2 * scale
        d1 = (f(t + a) - f(t - a)) / (2.0 * a)

        def second(h):
            return (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h)

        d2 = (4.0 * second(b / 2.0) - second(b)) / 3.0
        return f(t), d1, d2

    return jet


def rk4_phi(params: WarpParams, t_end: float, step: float = 1e-4) -> float:
    """Integrate phi'' = 1 - (phi')^2 from (phi, phi')(0) = (-a, b) by classical RK4."""
    n_steps = max(1, int(round(abs(t_end) / step)))
    h = t_end / n_steps
    y, yp = -params.a, params.b

    def rhs(_y, _yp):
        return _yp, 1.0 - _yp * _yp

    for _ in range(n_steps):
        k1 = rhs(y, yp)
        k2 = rhs(y + 0.5 * h * k1[0], yp + 0.5 * h * k1[1])
        k3 = rhs(y + 0.5 * h * k2[0], yp + 0.5 * h * k2[1])
        k4 = rhs(y + h * k3[0], yp + h * k3[1])
        y += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        yp += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return y
