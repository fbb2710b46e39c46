"""Moment strategies: the integrals a Gaussian filter/smoother needs.

Every strategy answers two questions about a belief ``N(mean, P)`` pushed
through a map ``g`` with additive noise covariance ``N``:

* ``predict``: ``E[g]``, ``Cov[g] + N`` and ``Cov(x, g(x))``;
* ``measure``: the same triple, named as predicted measurement, innovation
  covariance and state-measurement cross covariance.

The cross term returned by ``predict`` is the covariance between the state at
one step and the predicted state at the next, which is exactly the numerator
of the backward smoother gain.

Four strategies are provided and selected by name through
:func:`get_strategy`:

========  ==========================================================
``gi``    exact Gaussian integrals of polynomials
``ckf``   third-degree spherical-radial cubature (2n points)
``ukf``   unscented transform with the classic ``kappa`` weights
``ekf``   first-order linearization about the mean
========  ==========================================================
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, InvalidParameterError
from .integral import map_moments
from .linalg import spectral_decompose, symmetrize_and_project


@dataclass(frozen=True, eq=False)
class PredictedMoments:
    mean: np.ndarray
    covariance: np.ndarray
    cross: np.ndarray


@dataclass(frozen=True, eq=False)
class MeasurementMoments:
    mean: np.ndarray
    covariance: np.ndarray
    cross: np.ndarray


@dataclass(frozen=True, eq=False)
class SigmaPointSet:
    """Deterministic sample set; ``points`` has one state per row."""

    points: np.ndarray
    mean_weights: np.ndarray
    covariance_weights: np.ndarray

    def __len__(self):
        return len(self.points)


def _check_noise(fmap, noise, arity):
    noise = np.asarray(noise, dtype=float)
    m = len(fmap)
    if noise.shape != (m, m):
        raise DimensionError(f"noise covariance of shape {noise.shape} for a map with {m} outputs")
    if fmap.arity != arity:
        raise DimensionError(f"map arity {fmap.arity} does not match state dimension {arity}")
    return noise


def _gi(fmap, noise, belief):
    noise = _check_noise(fmap, noise, belief.dim)
    mean, outer, xf = map_moments(fmap, belief)
    cov = symmetrize_and_project(outer - np.outer(mean, mean) + noise)
    cross = xf - np.outer(belief.mean, mean)
    return mean, cov, cross


def gi_predict(f, Q, belief):
    """Predicted moments with every integral evaluated exactly."""
    return PredictedMoments(*_gi(f, Q, belief))


def gi_measurement(h, R, belief):
    return MeasurementMoments(*_gi(h, R, belief))


def sigma_points_cubature(belief):
    """``2n`` points ``mean +/- sqrt(n) * sqrt(P)[:, i]`` with weights ``1/(2n)``."""
    n = belief.dim
    L = spectral_decompose(belief.covariance).sqrt() * np.sqrt(n)
    points = np.concatenate([belief.mean + L.T, belief.mean - L.T])
    w = np.full(2 * n, 1.0 / (2 * n))
    return SigmaPointSet(points, w, w)


def sigma_points_unscented(belief, kappa):
    """``2n + 1`` points; center weight ``kappa/(n+kappa)``, others ``1/(2(n+kappa))``."""
    n = belief.dim
    if n + kappa <= 0:
        raise InvalidParameterError(f"n + kappa must be positive, got n={n}, kappa={kappa}")
    L = spectral_decompose(belief.covariance).sqrt() * np.sqrt(n + kappa)
    points = np.concatenate([belief.mean[None, :], belief.mean + L.T, belief.mean - L.T])
    w = np.full(2 * n + 1, 1.0 / (2 * (n + kappa)))
    w[0] = kappa / (n + kappa)
    return SigmaPointSet(points, w, w)


def _sigma(points, fmap, noise):
    X = points.points
    noise = _check_noise(fmap, noise, X.shape[1])
    Y = fmap.evaluate(X)
    ybar = points.mean_weights @ Y
    dY = Y - ybar
    dX = X - points.mean_weights @ X
    wc = points.covariance_weights[:, None]
    cov = symmetrize_and_project((dY * wc).T @ dY + noise)
    cross = (dX * wc).T @ dY
    return ybar, cov, cross


def sigma_predict(points, f, Q):
    return PredictedMoments(*_sigma(points, f, Q))


def sigma_measurement(points, h, R):
    return MeasurementMoments(*_sigma(points, h, R))


def _linearized(fmap, noise, belief):
    noise = _check_noise(fmap, noise, belief.dim)
    J = fmap.jacobian_at(belief.mean)
    P = belief.covariance
    cross = P @ J.T
    cov = symmetrize_and_project(J @ cross + noise)
    return fmap.evaluate(belief.mean), cov, cross


def linearized_predict(f, Q, belief):
    """First-order Taylor moments: ``f(mean)``, ``J P J^T + Q``, ``P J^T``."""
    return PredictedMoments(*_linearized(f, Q, belief))


def linearized_measurement(h, R, belief):
    return MeasurementMoments(*_linearized(h, R, belief))


class MomentStrategy:
    """Interface shared by all strategies; instances hold only parameters."""

    name = None

    def predict(self, f, Q, belief):
        raise NotImplementedError

    def measure(self, h, R, belief):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


class GaussianIntegralStrategy(MomentStrategy):
    name = "gi"

    def predict(self, f, Q, belief):
        return gi_predict(f, Q, belief)

    def measure(self, h, R, belief):
        return gi_measurement(h, R, belief)


class CubatureStrategy(MomentStrategy):
    name = "ckf"

    def predict(self, f, Q, belief):
        return sigma_predict(sigma_points_cubature(belief), f, Q)

    def measure(self, h, R, belief):
        return sigma_measurement(sigma_points_cubature(belief), h, R)


class UnscentedStrategy(MomentStrategy):
    name = "ukf"

    def __init__(self, kappa=-1.0):
        self.kappa = float(kappa)

    def predict(self, f, Q, belief):
        return sigma_predict(sigma_points_unscented(belief, self.kappa), f, Q)

    def measure(self, h, R, belief):
        return sigma_measurement(sigma_points_unscented(belief, self.kappa), h, R)

    def __repr__(self):
        return f"UnscentedStrategy(kappa={self.kappa})"


class LinearizationStrategy(MomentStrategy):
    name = "ekf"

    def predict(self, f, Q, belief):
        return linearized_predict(f, Q, belief)

    def measure(self, h, R, belief):
        return linearized_measurement(h, R, belief)


STRATEGIES = {
    cls.name: cls
    for cls in (GaussianIntegralStrategy, CubatureStrategy, UnscentedStrategy, LinearizationStrategy)
}


def get_strategy(name, **options):
    """Instantiate a strategy by name (``gi``, ``ckf``, ``ukf``, ``ekf``).

    ``options`` are forwarded to the constructor, e.g. ``kappa`` for ``ukf``.
    """
    try:
        cls = STRATEGIES[name]
    except KeyError:
        raise InvalidParameterError(
            f"unknown strategy {name!r}; choose from {', '.join(STRATEGIES)}"
        ) from None
    return cls(**options)
