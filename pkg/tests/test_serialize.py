import json
import math

import numpy as np

from warpgeom.flows import GeodesicPath, geodesic_integrate, parallel_transport
from warpgeom.geometry import HalfSpace, normalize
from warpgeom.serialize import dumps17, fmt17, loads, parse_float
from warpgeom.verify import CheckReport
from warpgeom.warp import WarpParams


def awkward_path():
    p = WarpParams(0.7, -0.3, 3)
    q = np.array([0.1, 1 / 3, 0.9])
    v = normalize(p, q, [0.2, -0.7, 0.3]).coords()
    return geodesic_integrate(p, q, v, 2.0)


class TestNumbers:
    def test_seventeen_digits(self):
        assert fmt17(0.1) == "0.10000000000000001"
        for x in (1 / 3, math.pi, 1e-300, -2.5e17, 5e-324):
            assert float(fmt17(x)) == x

    def test_nonfinite(self):
        assert fmt17(math.nan) == ""
        assert fmt17(math.inf) == ""
        assert math.isnan(parse_float(""))
        assert dumps17([math.nan, math.inf]) == "[null, null]"

    def test_json_valid(self):
        obj = {"a": [1, 2.5, True, None], "b": {"c": "x"}, "d": np.float64(0.1)}
        back = json.loads(dumps17(obj))
        assert back == {"a": [1, 2.5, True, None], "b": {"c": "x"}, "d": 0.1}
        assert loads(dumps17(obj, indent=None)) == back


class TestPathRoundTrip:
    def test_csv_bit_exact(self):
        path = awkward_path()
        back = GeodesicPath.from_csv(path.to_csv(), path.params)
        assert np.array_equal(back.s, path.s)
        assert np.array_equal(back.q, path.q)
        assert np.array_equal(back.v, path.v)

    def test_json_bit_exact(self):
        path = awkward_path()
        back = GeodesicPath.from_json(path.to_json())
        assert back.params == path.params
        assert np.array_equal(back.q, path.q) and np.array_equal(back.v, path.v)
        assert back.meta["tol"] == path.meta["tol"]

    def test_csv_through_json(self):
        path = awkward_path()
        again = GeodesicPath.from_json(GeodesicPath.from_csv(path.to_csv(), path.params).to_json())
        assert again.to_csv() == path.to_csv()

    def test_halfspace(self):
        path = geodesic_integrate(HalfSpace(2), [0.0, 1.0], [1.0, 0.0], 1.0)
        assert path.to_csv().splitlines()[0] == "s,x1,x2,dx1,dx2"
        back = GeodesicPath.from_json(path.to_json())
        assert isinstance(back.params, HalfSpace) and np.array_equal(back.q, path.q)

    def test_transport_json(self):
        path = awkward_path()
        field = parallel_transport(path, [1.0, 0.0, 0.0])
        obj = json.loads(field.to_json())
        assert obj["columns"][-3:] == ["wdt", "wdx1", "wdx2"]
        assert np.array_equal(np.array(obj["samples"])[:, -3:], field.w)


class TestReport:
    def test_roundtrip(self):
        rep = CheckReport("x", 1 / 3, 1e-5, 7, {"seed": 42})
        obj = json.loads(rep.to_json())
        assert obj["pass"] is False and obj["details"] == {"seed": 42}
        assert CheckReport.from_dict(obj) == rep

    def test_nan_residual_fails(self):
        rep = CheckReport("x", math.nan, 1.0, 0)
        assert not rep.passed
        assert json.loads(rep.to_json())["max_residual"] is None
        assert math.isnan(CheckReport.from_dict(json.loads(rep.to_json())).max_residual)
