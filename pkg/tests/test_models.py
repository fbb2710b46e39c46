import math
import pickle

import numpy as np
import pytest

from polysmooth.exceptions import DimensionError, InvalidParameterError, NotPSDError
from polysmooth.models import (
    PROCESS_NOISE,
    _philox_key,
    linear_model,
    simulate,
    standard_normal_draw,
    vdp_model,
)

A, LAM, DT = 100.0, 1.85 * math.pi / 2, 0.01
Q3, R2 = 1e-3 * np.eye(3), 0.1 * np.eye(2)


def vdp_direct(x, k):
    """Forced Van der Pol Euler step written without polynomials."""
    x1, x2, x3 = x
    return np.array(
        [
            x1 + DT * x2,
            x2 + DT * (x3 * (1 - x1**2) * x2 - x1 + A * math.cos(LAM * (k - 1) * DT)),
            x3,
        ]
    )


class TestVdp:
    def test_matches_direct_coding(self, rng):
        m = vdp_model(A, LAM, DT, Q3, R2)
        for _ in range(1000):
            x = rng.uniform(-4, 4, 3)
            k = int(rng.integers(1, 400))
            got = m.dynamics_at(k).evaluate(x)
            want = vdp_direct(x, k)
            np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)

    def test_hand_values(self):
        m = vdp_model(A, LAM, DT, Q3, R2)
        assert m.dynamics_at(1).evaluate([2.75, 0.0, 2.0])[0] == 2.75
        f3 = m.transition[2]
        assert f3.degree == 1 and len(f3.terms) == 1
        np.testing.assert_array_equal(m.measurement.evaluate([1.5, -2.0, 7.0]), [1.5, -2.0])

    def test_degrees(self):
        m = vdp_model(A, LAM, DT, Q3, R2)
        assert max(p.degree for p in m.transition) == 4
        assert max(p.degree for p in m.measurement) == 1

    def test_forcing_uses_source_index(self):
        m = vdp_model(A, LAM, DT, Q3, R2)
        zero = np.zeros(3)
        assert m.dynamics_at(1).evaluate(zero)[1] == pytest.approx(A * DT)
        assert m.dynamics_at(2).evaluate(zero)[1] == pytest.approx(A * math.cos(LAM * DT) * DT)

    def test_invalid(self):
        with pytest.raises(InvalidParameterError):
            vdp_model(A, LAM, 0.0, Q3, R2)
        with pytest.raises(DimensionError):
            vdp_model(A, LAM, DT, np.eye(2), R2)
        with pytest.raises(NotPSDError):
            vdp_model(A, LAM, DT, -Q3, R2)
        with pytest.raises(InvalidParameterError):
            vdp_model(A, LAM, DT, Q3, R2).dynamics_at(0)

    def test_picklable(self):
        m = vdp_model(A, LAM, DT, Q3, R2)
        m.dynamics_at(4)
        m2 = pickle.loads(pickle.dumps(m))
        np.testing.assert_array_equal(m2.dynamics_at(4).evaluate([1.0, 2.0, 3.0]), m.dynamics_at(4).evaluate([1.0, 2.0, 3.0]))


class TestLinear:
    def test_identity_tracking(self, rng):
        m = linear_model(np.eye(2), np.eye(2), np.zeros((2, 2)), np.zeros((2, 2)))
        x = rng.normal(size=2)
        np.testing.assert_array_equal(m.dynamics_at(1).evaluate(x), x)
        np.testing.assert_array_equal(m.measurement.evaluate(x), x)

    def test_time_invariant(self, rng):
        F = rng.normal(size=(3, 3))
        m = linear_model(F, np.eye(3)[:2], Q3, R2)
        assert m.dynamics_at(1) is m.dynamics_at(250)

    def test_gi_moments_closed_form(self, rng):
        from polysmooth.linalg import GaussianBelief
        from polysmooth.strategies import gi_predict

        F = rng.normal(size=(3, 3))
        m = linear_model(F, np.eye(3)[:2], Q3, R2, offset=[1.0, 0.0, -1.0])
        bel = GaussianBelief(rng.normal(size=3), np.diag([1.0, 2.0, 0.5]))
        out = gi_predict(m.dynamics_at(1), m.Q, bel)
        np.testing.assert_allclose(out.mean, F @ bel.mean + [1.0, 0.0, -1.0], atol=1e-12)
        np.testing.assert_allclose(out.covariance, F @ bel.covariance @ F.T + Q3, atol=1e-12)


class TestSimulate:
    def test_noise_free(self):
        m = vdp_model(A, LAM, DT, np.zeros((3, 3)), np.zeros((2, 2)))
        tr = simulate(m, [2.75, 0.0, 2.0], 50, seed=3)
        x = np.array([2.75, 0.0, 2.0])
        for k in range(1, 51):
            if k > 1:
                x = vdp_direct(x, k)
            np.testing.assert_allclose(tr.states[k - 1], x, rtol=1e-12, atol=1e-12)
        np.testing.assert_array_equal(tr.measurements, tr.states[:, :2])

    def test_first_state_is_x0(self):
        tr = simulate(vdp_model(A, LAM, DT, Q3, R2), [2.75, 0.0, 2.0], 3, seed=1)
        np.testing.assert_array_equal(tr.states[0], [2.75, 0.0, 2.0])

    def test_deterministic(self):
        m = vdp_model(A, LAM, DT, Q3, R2)
        a = simulate(m, [2.75, 0.0, 2.0], 100, seed=42)
        b = simulate(m, [2.75, 0.0, 2.0], 100, seed=42)
        c = simulate(m, [2.75, 0.0, 2.0], 100, seed=43)
        np.testing.assert_array_equal(a.states, b.states)
        np.testing.assert_array_equal(a.measurements, b.measurements)
        assert not np.array_equal(a.measurements, c.measurements)

    def test_prefix_stable(self):
        # counter-based draws: a longer run extends a shorter one
        m = vdp_model(A, LAM, DT, Q3, R2)
        short = simulate(m, [2.75, 0.0, 2.0], 20, seed=5)
        long = simulate(m, [2.75, 0.0, 2.0], 60, seed=5)
        np.testing.assert_array_equal(long.states[:20], short.states)

    def test_process_noise_covariance(self):
        Q = np.array([[2e-3, 5e-4, 0.0], [5e-4, 1e-3, -2e-4], [0.0, -2e-4, 5e-4]])
        m = linear_model(np.zeros((3, 3)), np.eye(3), Q, np.eye(3))
        key = _philox_key(11)
        draws = np.array([m._sqrt_Q @ standard_normal_draw(key, k, PROCESS_NOISE, 3) for k in range(100_000)])
        C = np.cov(draws.T)
        scale = np.sqrt(np.outer(np.diag(Q), np.diag(Q)))
        assert np.all(np.abs(C - Q) <= 0.05 * scale)

    def test_invalid(self):
        m = vdp_model(A, LAM, DT, Q3, R2)
        with pytest.raises(DimensionError):
            simulate(m, [1.0, 2.0], 5, seed=0)
        with pytest.raises(InvalidParameterError):
            simulate(m, [1.0, 2.0, 3.0], 0, seed=0)
