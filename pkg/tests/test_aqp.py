import math

import numpy as np
import pytest

import kdeaqp.aqp as aqp_mod
from kdeaqp.aqp import (
    RangeQuery,
    aqp_avg,
    aqp_count,
    aqp_sum,
    integrate_1d,
    integrate_2d,
    moments_2d,
    run_query,
    simpson_weights,
    support,
)
from kdeaqp.bandwidth import plugin_bandwidth
from kdeaqp.dataset import Dataset
from kdeaqp.errors import (
    DataError,
    DimensionMismatchError,
    EmptyRangeEstimateError,
    InvalidRangeError,
)
from kdeaqp.kde import KdeModel
from kdeaqp.synthetic import gaussian_dataset, uniform_dataset

INF = math.inf


@pytest.fixture(scope="module")
def normal_model():
    X = gaussian_dataset(10_000, 1, 42)
    return KdeModel(X, plugin_bandwidth(X))


@pytest.fixture(scope="module")
def uniform_model():
    X = uniform_dataset(10_000, 1, 43)
    return KdeModel(X, plugin_bandwidth(X))


@pytest.fixture(scope="module")
def model_2d():
    return KdeModel.with_h(gaussian_dataset(400, 2, 5), 0.35)


class TestSimpson:
    def test_exact_for_cubics(self):
        x, w = simpson_weights(-1.0, 2.0, 10)
        assert float(w @ (x ** 3 - x)) == pytest.approx(2.25, rel=1e-14)

    def test_odd_intervals_rounded_up(self):
        x, _ = simpson_weights(0.0, 1.0, 17)
        assert x.size == 19


class TestRangeQuery:
    def test_validation(self):
        with pytest.raises(InvalidRangeError):
            RangeQuery("count", 0, (1.0, 0.0))
        with pytest.raises(DataError):
            RangeQuery("count", 0, (0.0, 1.0), resolution=8)
        with pytest.raises(DataError):
            RangeQuery("median")
        with pytest.raises(DataError):
            RangeQuery("count", 0, (0.0, 1.0), column2=1)

    def test_column_out_of_range(self, normal_model):
        with pytest.raises(DimensionMismatchError):
            aqp_count(normal_model, RangeQuery("count", 1))


class TestIntegrate1d:
    def test_empty_interval(self, normal_model):
        assert integrate_1d(normal_model, 0.3, 0.3) == 0.0

    def test_invalid(self, normal_model):
        with pytest.raises(InvalidRangeError):
            integrate_1d(normal_model, 1.0, 0.0)

    def test_normalization(self, normal_model):
        lo, hi = support(normal_model, 0)
        assert 0.995 <= integrate_1d(normal_model, lo, hi) <= 1.005

    def test_half_line(self, normal_model):
        assert integrate_1d(normal_model, -INF, 0.0) == pytest.approx(0.5, abs=0.02)
        empirical = float(np.mean(normal_model.data.data[0] <= 0.0))
        assert integrate_1d(normal_model, -INF, 0.0) == pytest.approx(empirical, abs=0.01)

    def test_needs_1d_model(self, model_2d):
        with pytest.raises(DimensionMismatchError):
            integrate_1d(model_2d, 0.0, 1.0)


class TestCount:
    def test_full_domain(self, normal_model):
        assert aqp_count(normal_model, RangeQuery("count")) == pytest.approx(10_000, rel=0.01)

    def test_point_range(self, normal_model):
        assert aqp_count(normal_model, RangeQuery("count", 0, (1.0, 1.0))) == 0.0

    def test_uniform_half(self, uniform_model):
        exact = int(np.sum(uniform_model.data.data[0] <= 0.5))
        got = aqp_count(uniform_model, RangeQuery("count", 0, (0.0, 0.5)))
        assert got == pytest.approx(exact, rel=0.03)

    @pytest.mark.parametrize("m", [-1.3, -0.2, 0.0, 0.77])
    def test_additive(self, normal_model, m):
        a, b = -2.0, 1.5
        whole = aqp_count(normal_model, RangeQuery("count", 0, (a, b)))
        left = aqp_count(normal_model, RangeQuery("count", 0, (a, m)))
        right = aqp_count(normal_model, RangeQuery("count", 0, (m, b)))
        assert left + right == pytest.approx(whole, rel=1e-6)

    def test_monotone(self, normal_model):
        counts = [aqp_count(normal_model, RangeQuery("count", 0, (-1.0, b)))
                  for b in np.linspace(-1.0, 4.0, 21)]
        assert all(c2 >= c1 - 1e-9 * 10_000 for c1, c2 in zip(counts, counts[1:]))

    def test_resolution_convergence(self, normal_model):
        for bounds in [(-1.0, 0.5), (-INF, 1.2), (-INF, INF)]:
            a = aqp_count(normal_model, RangeQuery("count", 0, bounds, resolution=512))
            b = aqp_count(normal_model, RangeQuery("count", 0, bounds, resolution=1024))
            assert abs(b - a) <= 1e-3 * abs(b)


class TestSum:
    def test_point_range(self, normal_model):
        assert aqp_sum(normal_model, RangeQuery("sum", 0, (0.4, 0.4))) == 0.0

    def test_symmetric_data(self):
        x = gaussian_dataset(2000, 1, 8).data[0]
        X = Dataset([np.concatenate([x, -x])])
        model = KdeModel(X, plugin_bandwidth(X))
        assert abs(aqp_sum(model, RangeQuery("sum"))) <= 0.02 * X.n * float(np.std(x))

    def test_uniform_total(self, uniform_model):
        exact = float(np.sum(uniform_model.data.data[0]))
        assert aqp_sum(uniform_model, RangeQuery("sum")) == pytest.approx(exact, rel=0.03)


class TestAvg:
    def test_uniform_mean(self, uniform_model):
        assert aqp_avg(uniform_model, RangeQuery("avg")) == pytest.approx(0.5, abs=0.02)

    @pytest.mark.parametrize("bounds", [(-0.5, 0.5), (1.0, 2.5), (-3.0, -1.0)])
    def test_inside_range(self, normal_model, bounds):
        h = normal_model.bandwidth.h
        avg = aqp_avg(normal_model, RangeQuery("avg", 0, bounds))
        assert bounds[0] - 2 * h <= avg <= bounds[1] + 2 * h

    def test_point_range(self, normal_model):
        with pytest.raises(EmptyRangeEstimateError):
            aqp_avg(normal_model, RangeQuery("avg", 0, (0.1, 0.1)))

    def test_far_range(self, normal_model):
        with pytest.raises(EmptyRangeEstimateError):
            aqp_avg(normal_model, RangeQuery("avg", 0, (100.0, 200.0)))


class TestTwoD:
    def test_full_plane(self, model_2d):
        q = RangeQuery("count", 0, (-INF, INF), 1, (-INF, INF))
        assert aqp_count(model_2d, q) == pytest.approx(400, rel=0.01)

    def test_matrix_bandwidth_full_plane(self):
        X = gaussian_dataset(200, 2, 6)
        model = KdeModel.with_H(X, [[0.12, 0.05], [0.05, 0.2]])
        q = RangeQuery("count", 0, (-INF, INF), 1, (-INF, INF), resolution=128)
        assert aqp_count(model, q) == pytest.approx(200, rel=0.01)

    def test_separable_matches_grid(self, model_2d, monkeypatch):
        q = ((-1.0, 0.8), (-0.5, INF))
        fast = moments_2d(model_2d, *q, resolution=64)
        monkeypatch.setattr(aqp_mod, "_separable", lambda *a: None)
        slow = moments_2d(model_2d, *q, resolution=64)
        np.testing.assert_allclose(fast, slow, rtol=1e-12)

    def test_column_order(self, model_2d):
        a = integrate_2d(model_2d, (-1, 0.5), (0, 2), "x", axes=(0, 1), resolution=64)
        b = integrate_2d(model_2d, (0, 2), (-1, 0.5), "y", axes=(1, 0), resolution=64)
        assert a == pytest.approx(b, rel=1e-12)

    def test_sum_column(self, model_2d):
        base = dict(column=0, bounds=(-1.0, 1.0), column2=1, bounds2=(0.0, 1.0), resolution=64)
        sx = aqp_sum(model_2d, RangeQuery("sum", **base))
        sy = aqp_sum(model_2d, RangeQuery("sum", sum_column=1, **base))
        avg_y = aqp_avg(model_2d, RangeQuery("avg", sum_column=1, **base))
        count = aqp_count(model_2d, RangeQuery("count", **base))
        assert avg_y == pytest.approx(sy / count, rel=1e-12)
        assert 0.0 <= avg_y <= 1.0 and abs(sx / count) < 0.2
        with pytest.raises(DataError):
            aqp_sum(model_2d, RangeQuery("sum", sum_column=5, **base))

    def test_2d_query_needs_2d_model(self, normal_model):
        with pytest.raises(DimensionMismatchError):
            aqp_count(normal_model, RangeQuery("count", 0, (0, 1), 1, (0, 1)))

    def test_same_columns(self, model_2d):
        with pytest.raises(DataError):
            aqp_count(model_2d, RangeQuery("count", 0, (0, 1), 0, (0, 1)))


def test_run_query_dispatch(normal_model):
    q = RangeQuery("sum", 0, (0.0, 1.0))
    assert run_query(normal_model, q) == aqp_sum(normal_model, q)
