import numpy as np
import pytest

from kdeaqp.neldermead import initial_simplex, minimize


def rosenbrock(v):
    x, y = v
    return (1 - x) ** 2 + 100 * (y - x * x) ** 2


class TestInitialSimplex:
    def test_relative_steps(self):
        sim = initial_simplex([2.0, 4.0], 0.1)
        np.testing.assert_allclose(sim, [[2.0, 4.0], [2.2, 4.0], [2.0, 4.4]])

    def test_zero_coordinate(self):
        sim = initial_simplex([0.0, 5.0], 0.1)
        assert sim[1, 0] == pytest.approx(0.5)

    def test_all_zero(self):
        assert initial_simplex([0.0], 0.1)[1, 0] == pytest.approx(0.1)


class TestMinimize:
    def test_quadratic(self):
        res = minimize(lambda v: float(np.sum((v - [1.0, -2.0, 3.0]) ** 2)) + 1.0,
                       [0.5, 0.5, 0.5], ftol=1e-12, max_iterations=2000)
        assert res.converged
        np.testing.assert_allclose(res.x, [1.0, -2.0, 3.0], atol=1e-4)

    def test_rosenbrock(self):
        res = minimize(rosenbrock, [-1.2, 1.0], ftol=1e-14, max_iterations=5000)
        np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-3)

    def test_never_worse_than_start(self):
        f = lambda v: float(np.sin(3 * v[0]) + v[0] ** 2)  # noqa: E731
        res = minimize(f, [2.0], max_iterations=3)
        assert res.fun <= f(np.array([2.0]))

    def test_iteration_cap(self):
        res = minimize(rosenbrock, [-1.2, 1.0], ftol=0.0, max_iterations=7)
        assert res.iterations == 7 and not res.converged

    def test_penalty_recovers(self):
        # infeasible half-space scored with a huge finite value
        f = lambda v: 1e300 if v[0] <= 0 else (v[0] - 0.01) ** 2  # noqa: E731
        res = minimize(f, [1.0], ftol=1e-12, max_iterations=1000)
        assert res.x[0] > 0 and res.x[0] == pytest.approx(0.01, abs=1e-4)
