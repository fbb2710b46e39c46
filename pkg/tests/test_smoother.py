import numpy as np
import pytest

from polysmooth.exceptions import DimensionError, NumericalFailure
from polysmooth.linalg import GaussianBelief
from polysmooth.models import linear_model, simulate, vdp_model
from polysmooth.polynomial import PolynomialMap
from polysmooth.smoother import forward_filter, rts_backward, smooth
from polysmooth.strategies import get_strategy
from polysmooth.models import StateSpaceModel

from .reference import kalman_rts, random_stable_linear

ALL = ("gi", "ckf", "ukf", "ekf")


def linear_case(seed, T=300):
    r = np.random.default_rng(seed)
    F, b, H, Q, R = random_stable_linear(r)
    model = linear_model(F, H, Q, R, offset=b)
    traj = simulate(model, r.normal(size=3), T, seed=seed)
    m0, P0 = r.normal(size=3), np.diag(r.uniform(0.5, 3.0, 3))
    ref = kalman_rts(F, b, H, Q, R, m0, P0, traj.measurements)
    return model, traj, GaussianBelief(m0, P0), ref


class TestForward:
    def test_scalar_update(self):
        m = linear_model([[1.0]], [[1.0]], [[0.0]], [[1.0]])
        rec = forward_filter(m, [[0.8]], GaussianBelief([0.0], [[1.0]]), get_strategy("gi"))
        assert rec[0].filtered.covariance[0, 0] == pytest.approx(0.5, rel=1e-14)
        assert rec[0].filtered.mean[0] == pytest.approx(0.4, rel=1e-14)
        assert rec[0].innovation[0] == pytest.approx(0.8)

    def test_noise_free_converges_to_truth(self):
        # R must stay positive for the innovation covariance to be invertible
        truth = np.array([1.5, -0.5])
        m = linear_model(np.eye(2), np.eye(2), np.zeros((2, 2)), 1e-12 * np.eye(2))
        Y = np.tile(truth, (20, 1))
        rec = forward_filter(m, Y, GaussianBelief([0.0, 0.0], 10 * np.eye(2)), get_strategy("gi"))
        np.testing.assert_allclose(rec[-1].filtered.mean, truth, atol=1e-9)

    def test_trace_never_increases(self):
        m = vdp_model(100.0, 1.85 * np.pi / 2, 0.01, 1e-3 * np.eye(3), 0.1 * np.eye(2))
        traj = simulate(m, [2.75, 0.0, 2.0], 100, seed=9)
        init = GaussianBelief([0.0, -3.0, 1.0], np.diag([10.0, 10.0, 0.5]))
        for name in ALL:
            for r in forward_filter(m, traj.measurements, init, get_strategy(name)):
                assert np.trace(r.filtered.covariance) <= np.trace(r.predicted.covariance) + 1e-12

    def test_measurement_width_checked(self):
        m = linear_model(np.eye(2), np.eye(2), np.eye(2), np.eye(2))
        with pytest.raises(DimensionError):
            forward_filter(m, np.zeros((3, 1)), GaussianBelief([0.0, 0.0], np.eye(2)), get_strategy("gi"))

    def test_failure_reports_step(self):
        # zero noise, zero prior: the innovation covariance is singular at step 1
        m = linear_model(np.eye(1), np.eye(1), [[0.0]], [[0.0]])
        with pytest.raises(NumericalFailure) as info:
            forward_filter(m, [[1.0], [1.0]], GaussianBelief([0.0], [[0.0]]), get_strategy("gi"))
        assert info.value.step == 1


class TestLinearEquivalence:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_gi_matches_closed_form(self, seed):
        model, traj, init, (mf, Pf, ms, Ps) = linear_case(seed)
        res = smooth(model, traj.measurements, init, get_strategy("gi"))
        assert np.abs(res.filtered_means - mf).max() <= 1e-10
        assert np.abs(res.filtered_covariances - Pf).max() <= 1e-10
        assert np.abs(res.smoothed_means - ms).max() <= 1e-10
        assert np.abs(res.smoothed_covariances - Ps).max() <= 1e-10

    def test_all_strategies_agree(self):
        model, traj, init, _ = linear_case(4)
        ref = smooth(model, traj.measurements, init, get_strategy("gi"))
        for name in ALL[1:]:
            res = smooth(model, traj.measurements, init, get_strategy(name))
            assert np.abs(res.smoothed_means - ref.smoothed_means).max() <= 1e-10
            assert np.abs(res.filtered_means - ref.filtered_means).max() <= 1e-10
            assert np.abs(res.smoothed_covariances - ref.smoothed_covariances).max() <= 1e-10


class TestBackward:
    def test_single_step(self):
        model, traj, init, _ = linear_case(5, T=1)
        res = smooth(model, traj.measurements, init, get_strategy("gi"))
        rec = forward_filter(model, traj.measurements, init, get_strategy("gi"))
        np.testing.assert_array_equal(res.smoothed_means, [rec[0].filtered.mean])
        assert res.smoother_gains == []

    def test_final_step_identical(self):
        m = vdp_model(100.0, 1.85 * np.pi / 2, 0.01, 1e-3 * np.eye(3), 0.1 * np.eye(2))
        traj = simulate(m, [2.75, 0.0, 2.0], 60, seed=2)
        init = GaussianBelief([0.0, -3.0, 1.0], np.diag([10.0, 10.0, 0.5]))
        for name in ALL:
            res = smooth(m, traj.measurements, init, get_strategy(name))
            assert res.smoothed[-1] is res.records[-1].filtered
            assert np.array_equal(res.smoothed_means[-1], res.filtered_means[-1])
            assert res.forward_seconds > 0 and res.backward_seconds >= 0
            assert res.strategy == name

    def test_covariances_symmetric_psd(self):
        m = vdp_model(100.0, 1.85 * np.pi / 2, 0.01, 1e-3 * np.eye(3), 0.1 * np.eye(2))
        traj = simulate(m, [2.75, 0.0, 2.0], 150, seed=8)
        init = GaussianBelief([0.0, -3.0, 1.0], np.diag([10.0, 10.0, 0.5]))
        for name in ALL:
            res = smooth(m, traj.measurements, init, get_strategy(name))
            for covs in (res.filtered_covariances, res.smoothed_covariances, np.array([r.predicted.covariance for r in res.records])):
                assert np.abs(covs - covs.transpose(0, 2, 1)).max() <= 1e-12
                assert np.linalg.eigvalsh(covs).min() >= -1e-10

    def test_empty_records(self):
        with pytest.raises(ValueError):
            rts_backward([])

    def test_gi_with_polynomial_model(self):
        # a genuinely nonlinear generic model runs end to end
        f = PolynomialMap.parse(["0.9*x1 + 0.05*x2^2", "0.8*x2 - 0.02*x1*x2"], arity=2)
        h = PolynomialMap.parse(["x1 + x2^2"], arity=2)
        model = StateSpaceModel(f, h, 1e-2 * np.eye(2), [[0.05]])
        traj = simulate(model, [1.0, 0.5], 80, seed=1)
        res = smooth(model, traj.measurements, GaussianBelief([0.0, 0.0], np.eye(2)), get_strategy("gi"))
        assert np.isfinite(res.smoothed_means).all()
