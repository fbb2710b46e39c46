"""State-space models with polynomial dynamics and measurements.

    x_k = f_k(x_{k-1}) + w_{k-1},   w ~ N(0, Q)
    y_k = h(x_k) + v_k,             v ~ N(0, R)

Time dependence enters only through an optional additive forcing vector, so
``f_k`` is the fixed transition map plus a per-step constant.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, InvalidParameterError
from .linalg import spectral_decompose
from .polynomial import Polynomial, PolynomialMap

PROCESS_NOISE = 0
MEASUREMENT_NOISE = 1

_CACHE_LIMIT = 4096


@dataclass(frozen=True)
class CosineForcing:
    """``amplitude * cos(frequency * (k - 1) * dt) * dt`` added to one component.

    The phase uses the source index ``k - 1`` when producing ``x_k``.
    """

    amplitude: float
    frequency: float
    dt: float
    component: int
    dim: int

    def __call__(self, k):
        out = np.zeros(self.dim)
        out[self.component] = self.amplitude * math.cos(self.frequency * (k - 1) * self.dt) * self.dt
        return out


class StateSpaceModel:
    """Polynomial state-space model.

    Parameters
    ----------
    transition : PolynomialMap
        Time-invariant part of the dynamics, ``n`` components of arity ``n``.
    measurement : PolynomialMap
        ``m`` components of arity ``n``.
    Q, R : array_like
        Process and measurement noise covariances (PSD).
    forcing : callable, optional
        ``forcing(k)`` returns the constant vector added to the dynamics that
        produce ``x_k``. Must be picklable for parallel experiments.
    """

    def __init__(self, transition, measurement, Q, R, forcing=None):
        n = transition.arity
        if len(transition) != n:
            raise DimensionError(f"transition has {len(transition)} components for arity {n}")
        if measurement.arity != n:
            raise DimensionError(f"measurement arity {measurement.arity} differs from state dimension {n}")
        m = len(measurement)
        Q = np.array(Q, dtype=float)
        R = np.array(R, dtype=float)
        if Q.shape != (n, n):
            raise DimensionError(f"Q has shape {Q.shape}, expected {(n, n)}")
        if R.shape != (m, m):
            raise DimensionError(f"R has shape {R.shape}, expected {(m, m)}")
        self._sqrt_Q = spectral_decompose(Q).sqrt()
        self._sqrt_R = spectral_decompose(R).sqrt()
        Q.flags.writeable = False
        R.flags.writeable = False
        self.transition = transition
        self.measurement = measurement
        self.Q = Q
        self.R = R
        self.forcing = forcing
        self._dynamics = {}

    @property
    def state_dim(self):
        return self.transition.arity

    @property
    def measurement_dim(self):
        return len(self.measurement)

    def dynamics_at(self, k):
        """Polynomial map producing ``x_k`` from ``x_{k-1}`` (``k >= 1``)."""
        if k < 1:
            raise InvalidParameterError(f"time index must be >= 1, got {k}")
        if self.forcing is None:
            return self.transition
        f = self._dynamics.get(k)
        if f is None:
            if len(self._dynamics) >= _CACHE_LIMIT:
                self._dynamics.clear()
            f = self._dynamics[k] = self.transition.add_constant(self.forcing(k))
        return f

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_dynamics"] = {}
        return state

    def __repr__(self):
        return (
            f"StateSpaceModel(n={self.state_dim}, m={self.measurement_dim}, "
            f"forcing={self.forcing!r})"
        )


def vdp_model(amplitude, frequency, dt, Q, R):
    """Euler-discretized forced Van der Pol oscillator with state ``(x, x', zeta)``.

    ``f = [x1 + dt x2,
           x2 + dt (x3 (1 - x1^2) x2 - x1 + amplitude cos(frequency (k-1) dt)),
           x3]``, ``h = [x1, x2]``.
    """
    if not dt > 0:
        raise InvalidParameterError(f"sampling interval must be positive, got {dt}")
    n = 3
    f1 = Polynomial(n, {(1, 0, 0): 1.0, (0, 1, 0): dt})
    f2 = Polynomial(
        n,
        {
            (0, 1, 0): 1.0,
            (0, 1, 1): dt,
            (2, 1, 1): -dt,
            (1, 0, 0): -dt,
        },
    )
    f3 = Polynomial.variable(n, 2)
    transition = PolynomialMap([f1, f2, f3])
    measurement = PolynomialMap([Polynomial.variable(n, 0), Polynomial.variable(n, 1)])
    forcing = CosineForcing(float(amplitude), float(frequency), float(dt), component=1, dim=n)
    return StateSpaceModel(transition, measurement, Q, R, forcing=forcing)


def linear_model(F, H, Q, R, offset=None):
    """Affine model ``x_k = F x_{k-1} + offset + w``, ``y_k = H x_k + v``."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if F.shape[0] != F.shape[1]:
        raise DimensionError(f"F must be square, got {F.shape}")
    if H.shape[1] != F.shape[0]:
        raise DimensionError(f"H has {H.shape[1]} columns for a {F.shape[0]}-state model")
    return StateSpaceModel(PolynomialMap.affine(F, offset), PolynomialMap.affine(H), Q, R)


@dataclass(frozen=True, eq=False)
class SimulatedTrajectory:
    states: np.ndarray
    measurements: np.ndarray
    seed: int


def _philox_key(seed):
    return np.random.SeedSequence(int(seed)).generate_state(2, dtype=np.uint64)


def standard_normal_draw(key, step, purpose, dim):
    """Counter-based draw: depends only on ``(key, step, purpose)``."""
    bitgen = np.random.Philox(key=key, counter=[0, step, purpose, 0])
    return np.random.Generator(bitgen).standard_normal(dim)


def simulate(model, x0, steps, seed):
    """Simulate ``steps`` states and measurements.

    ``x0`` is the state at the first step; each later state is
    ``f_k(x_{k-1})`` plus process noise, and every state is measured.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    n, m = model.state_dim, model.measurement_dim
    if x0.size != n:
        raise DimensionError(f"initial state of length {x0.size} for a {n}-state model")
    if steps < 1:
        raise InvalidParameterError(f"need at least one step, got {steps}")
    key = _philox_key(seed)
    states = np.empty((steps, n))
    meas = np.empty((steps, m))
    x = x0
    for k in range(1, steps + 1):
        if k > 1:
            w = model._sqrt_Q @ standard_normal_draw(key, k, PROCESS_NOISE, n)
            x = model.dynamics_at(k).evaluate(x) + w
        states[k - 1] = x
        v = model._sqrt_R @ standard_normal_draw(key, k, MEASUREMENT_NOISE, m)
        meas[k - 1] = model.measurement.evaluate(x) + v
    return SimulatedTrajectory(states, meas, int(seed))
