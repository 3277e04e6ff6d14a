import math

import numpy as np
import pytest

from warpgeom.flows import (
    DomainExitError,
    GeodesicPath,
    StepUnderflowError,
    TransportedField,
    exp_map,
    geodesic_integrate,
    geodesic_residual,
    map_through_semicircle_chart,
    parallel_transport,
)
from warpgeom.geometry import HalfSpace, Point, fiber_scale, inner, normalize
from warpgeom.warp import LN2, WarpParams

H2 = HalfSpace(2)


def unit_launch(params, q, direction):
    return normalize(params, q, direction).coords()


class TestBenchmark:
    @pytest.mark.parametrize("T", [1.0, 2.0, 5.0])
    def test_semicircle(self, T):
        path = geodesic_integrate(H2, [0.0, 1.0], [1.0, 0.0], T)
        assert np.max(np.abs(path.q[-1] - [math.tanh(T), 1 / math.cosh(T)])) < 1e-7

    def test_order(self):
        ref = np.array([math.tanh(1.0), 1 / math.cosh(1.0)])
        coarse = np.max(np.abs(geodesic_integrate(H2, [0.0, 1.0], [1.0, 0.0], 1.0, 1e-6).q[-1] - ref))
        fine = np.max(np.abs(geodesic_integrate(H2, [0.0, 1.0], [1.0, 0.0], 1.0, 1e-10).q[-1] - ref))
        assert coarse / fine >= 100.0

    def test_exp_map(self):
        end = exp_map(H2, [0.0, 1.0], [2.0, 0.0])
        assert np.max(np.abs(end - [math.tanh(2.0), 1 / math.cosh(2.0)])) < 1e-7


class TestGeodesic:
    @pytest.mark.parametrize("a,b,n", [(0, 0, 3), (LN2, 0, 4), (1, 0.5, 3), (-1, -1, 2)])
    def test_t_line(self, a, b, n):
        p = WarpParams(a, b, n)
        q = np.array([0.3] + [0.2] * (n - 2) + [1.4])
        v = np.zeros(n)
        v[0] = 1.0
        path = geodesic_integrate(p, q, v, 5.0)
        assert path.q[-1][0] == pytest.approx(5.3, abs=1e-12)
        assert np.max(np.abs(path.q[:, 1:] - q[1:])) == 0.0
        assert geodesic_residual(path) < 1e-10

    def test_reversible(self):
        p = WarpParams(1, 0.5, 4)
        q = np.array([0.3, 0.2, -0.1, 1.2])
        v = unit_launch(p, q, [0.3, 0.5, -0.2, 0.4])
        fwd = geodesic_integrate(p, q, v, 4.0)
        back = geodesic_integrate(p, fwd.q[-1], -fwd.v[-1], 4.0)
        assert np.max(np.abs(back.q[-1] - q)) < 1e-7

    def test_negative_T(self):
        p = WarpParams(0.2, -0.3, 3)
        q = np.array([0.0, 0.0, 1.0])
        v = unit_launch(p, q, [0.6, 0.2, 0.5])
        fwd = geodesic_integrate(p, q, v, 2.0)
        rev = geodesic_integrate(p, q, -v, -2.0)
        assert rev.s[-1] == -2.0
        assert np.max(np.abs(rev.q[-1] - fwd.q[-1])) < 1e-9

    def test_min_samples(self):
        path = geodesic_integrate(H2, [0.0, 1.0], [1.0, 0.0], 0.1)
        assert len(path) >= 65
        assert np.all(np.diff(path.s) > 0)

    def test_speed_conservation(self):
        rng = np.random.default_rng(7)
        for a, b, n in [(0, 0, 3), (LN2, 0, 3), (1, 0.5, 4), (-0.5, 1, 3), (2, -0.9, 5)]:
            p = WarpParams(a, b, n)
            q = np.concatenate(([rng.uniform(-1, 1)], rng.uniform(-1, 1, n - 2), [rng.uniform(0.5, 2)]))
            v = unit_launch(p, q, rng.normal(size=n))
            sp = geodesic_integrate(p, q, v, 10.0).speeds()
            assert np.max(np.abs(sp / sp[0] - 1)) < 1e-8

    def test_residual_random(self):
        rng = np.random.default_rng(3)
        for _ in range(4):
            p = WarpParams(rng.uniform(-2, 2), rng.uniform(-1, 1), int(rng.integers(2, 5)))
            q = np.concatenate(([rng.uniform(-2, 2)], rng.uniform(-2, 2, p.n - 2), [rng.uniform(0.5, 2)]))
            v = unit_launch(p, q, rng.normal(size=p.n))
            path = geodesic_integrate(p, q, v, 5.0)
            assert geodesic_residual(path) < 10 * path.meta["tol"]

    def test_residual_detects_non_geodesic(self):
        s = np.linspace(0.0, 1.0, 65)
        q = np.column_stack((s, np.ones_like(s)))
        v = np.column_stack((np.ones_like(s), np.zeros_like(s)))
        assert geodesic_residual(GeodesicPath(H2, s, q, v)) > 0.1

    def test_residual_needs_samples(self):
        with pytest.raises(ValueError):
            geodesic_residual(GeodesicPath(H2, np.array([0.0, 1.0]), np.ones((2, 2)), np.ones((2, 2))))

    def test_domain_exit(self):
        with pytest.raises(DomainExitError) as info:
            geodesic_integrate(H2, [0.0, 1.0], [0.0, -1.0], 40.0)
        exc = info.value
        assert 27.0 < exc.s_exit < 28.0
        assert exc.path is not None and exc.path.s[-1] == exc.s_exit
        assert exc.path.q[-1][1] > 0

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            geodesic_integrate(H2, [0.0, 1.0], [0.0, 0.0], 1.0)
        with pytest.raises(ValueError):
            geodesic_integrate(H2, [0.0, 1.0], [1.0, 0.0], 1.0, tol=1e-3)
        with pytest.raises(ValueError):
            geodesic_integrate(H2, [0.0, 1.0], [1.0, 0.0], 60.0)
        with pytest.raises(ValueError):
            geodesic_integrate(H2, [0.0, -1.0], [1.0, 0.0], 1.0)

    def test_underflow_type(self):
        assert issubclass(StepUnderflowError, Exception)

    def test_zero_velocity_exp(self):
        p = WarpParams(0, 0, 3)
        out = exp_map(p, [0.1, 0.2, 0.3], [0.0, 0.0, 0.0])
        assert isinstance(out, Point) and out.coords().tolist() == [0.1, 0.2, 0.3]

    def test_exp_reparametrization(self):
        p = WarpParams(0.4, 0.1, 3)
        q = np.array([0.0, 0.1, 1.0])
        u = unit_launch(p, q, [0.5, 0.4, -0.3])
        end = exp_map(p, q, 1.7 * u).coords()
        ref = geodesic_integrate(p, q, u, 1.7).q[-1]
        assert np.max(np.abs(end - ref)) < 1e-8


class TestChart:
    def test_chart_geodesics(self):
        p = WarpParams(0, 0, 2)
        rng = np.random.default_rng(0)
        for _ in range(5):
            q = np.array([rng.uniform(-1, 1), rng.uniform(0.5, 2)])
            v = unit_launch(p, q, rng.normal(size=2))
            mapped = map_through_semicircle_chart(geodesic_integrate(p, q, v, 3.0))
            direct = geodesic_integrate(H2, mapped.q[0], mapped.v[0], 3.0)
            assert np.max(np.abs(mapped.q[-1] - direct.q[-1])) < 1e-6

    def test_chart_rejects(self):
        path = geodesic_integrate(WarpParams(0, 0, 3), [0, 0, 1.0], [1.0, 0, 0], 1.0)
        with pytest.raises(ValueError):
            map_through_semicircle_chart(path)


class TestTransport:
    def setup_method(self):
        self.p = WarpParams(1, 0.5, 4)
        self.q = np.array([0.3, 0.2, -0.1, 1.2])
        self.v = unit_launch(self.p, self.q, [0.3, 0.5, -0.2, 0.4])
        self.path = geodesic_integrate(self.p, self.q, self.v, 10.0)

    def test_own_velocity(self):
        field = parallel_transport(self.path, self.v)
        assert np.max(np.abs(field.w - self.path.v)) < 1e-8

    def test_invariants(self):
        rng = np.random.default_rng(1)
        w0 = rng.normal(size=4)
        w0[1:] /= math.sqrt(fiber_scale(self.p, self.q))
        field = parallel_transport(self.path, w0)
        assert np.ptp(field.norms() ** 2) < 1e-7
        assert np.ptp(field.inner_with_velocity()) < 1e-7

    def test_t_line_keeps_fiber(self):
        p = WarpParams(LN2, -0.4, 3)
        q = np.array([0.0, 0.3, 1.0])
        path = geodesic_integrate(p, q, [1.0, 0.0, 0.0], 5.0)
        field = parallel_transport(path, [0.0, 1.0, 0.0])
        assert np.max(np.abs(field.w[:, 0])) < 1e-8

    def test_halfspace(self):
        path = geodesic_integrate(H2, [0.0, 1.0], [1.0, 0.0], 2.0)
        field = parallel_transport(path, [0.0, 1.0])
        assert np.ptp(field.norms()) < 1e-8

    def test_needs_samples(self):
        short = GeodesicPath(H2, np.array([0.0]), np.array([[0.0, 1.0]]), np.array([[1.0, 0.0]]))
        with pytest.raises(ValueError):
            parallel_transport(short, [0.0, 1.0])


class TestPathObject:
    def test_invalid_s(self):
        with pytest.raises(ValueError):
            GeodesicPath(H2, np.array([0.0, 0.0, 1.0]), np.ones((3, 2)), np.ones((3, 2)))

    def test_csv_columns(self):
        path = geodesic_integrate(WarpParams(0, 0, 3), [0, 0, 1.0], [1.0, 0, 0], 1.0)
        header = path.to_csv().splitlines()[0]
        assert header == "s,t,x1,x2,dt,dx1,dx2"
        field = parallel_transport(path, [0.0, 1.0, 0.0])
        assert isinstance(field, TransportedField)
        assert field.to_csv().splitlines()[0] == "s,t,x1,x2,dt,dx1,dx2,wdt,wdx1,wdx2"
