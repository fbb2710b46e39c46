"""Gaussian forward filter and Rauch-Tung-Striebel backward pass.

The recursion is generic over a :class:`~polysmooth.strategies.MomentStrategy`;
only the strategy decides how the prediction and measurement integrals are
evaluated. The covariance between consecutive states is produced during the
forward prediction and stored, so the backward pass never calls the strategy.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, NumericalError, NumericalFailure
from .linalg import GaussianBelief, solve_spd, symmetrize_and_project


@dataclass(frozen=True, eq=False)
class ForwardStepRecord:
    """Everything the forward pass computed at one step ``k``.

    ``cross`` is ``Cov(x_{k-1}, x_k)`` under the filtered belief at ``k-1``.
    """

    predicted: GaussianBelief
    filtered: GaussianBelief
    cross: np.ndarray
    gain: np.ndarray
    innovation: np.ndarray


@dataclass(eq=False)
class SmoothingResult:
    records: list
    smoothed: list
    smoother_gains: list
    forward_seconds: float = 0.0
    backward_seconds: float = 0.0
    strategy: str = field(default="")

    def __len__(self):
        return len(self.records)

    @property
    def filtered_means(self):
        return np.array([r.filtered.mean for r in self.records])

    @property
    def filtered_covariances(self):
        return np.array([r.filtered.covariance for r in self.records])

    @property
    def predicted_means(self):
        return np.array([r.predicted.mean for r in self.records])

    @property
    def smoothed_means(self):
        return np.array([b.mean for b in self.smoothed])

    @property
    def smoothed_covariances(self):
        return np.array([b.covariance for b in self.smoothed])


def forward_filter(model, measurements, init, strategy):
    """Run the Gaussian filter over ``measurements`` (one row per step ``k = 1..T``).

    Raises
    ------
    NumericalFailure
        If the innovation covariance is not positive definite or a covariance
        cannot be factorized; ``step`` holds the one-based time index.
    """
    Y = np.atleast_2d(np.asarray(measurements, dtype=float))
    n, m = model.state_dim, model.measurement_dim
    if Y.shape[1] != m:
        raise DimensionError(f"measurements have {Y.shape[1]} columns, model measures {m}")
    if init.dim != n:
        raise DimensionError(f"initial belief of dimension {init.dim} for a {n}-state model")
    Q, R, h = model.Q, model.R, model.measurement
    records = []
    belief = init
    for k, y in enumerate(Y, start=1):
        try:
            pred = strategy.predict(model.dynamics_at(k), Q, belief)
            predicted = GaussianBelief(pred.mean, pred.covariance)
            meas = strategy.measure(h, R, predicted)
            gain = solve_spd(meas.covariance, meas.cross.T).T
        except NumericalError as exc:
            raise NumericalFailure(k, str(exc)) from exc
        innovation = y - meas.mean
        cov = symmetrize_and_project(pred.covariance - gain @ meas.covariance @ gain.T)
        belief = GaussianBelief(pred.mean + gain @ innovation, cov)
        records.append(ForwardStepRecord(predicted, belief, pred.cross, gain, innovation))
    return records


def rts_backward(records):
    """Backward smoothing pass over stored forward records.

    Starts from the filtered belief at the last step and, for ``k = T-1..1``,
    applies the gain ``G_k = C_{k,k+1} P_{k+1|k}^{-1}`` where ``C_{k,k+1}`` is
    the cross covariance stored in record ``k+1``.
    """
    if not records:
        raise ValueError("no forward records to smooth")
    T = len(records)
    smoothed = [None] * T
    gains = [None] * (T - 1)
    smoothed[-1] = records[-1].filtered
    for k in range(T - 2, -1, -1):
        filt = records[k].filtered
        nxt = records[k + 1]
        try:
            G = solve_spd(nxt.predicted.covariance, nxt.cross.T).T
        except NumericalError as exc:
            raise NumericalFailure(k + 1, str(exc)) from exc
        later = smoothed[k + 1]
        mean = filt.mean + G @ (later.mean - nxt.predicted.mean)
        cov = filt.covariance + G @ (later.covariance - nxt.predicted.covariance) @ G.T
        smoothed[k] = GaussianBelief(mean, symmetrize_and_project(cov))
        gains[k] = G
    return SmoothingResult(records, smoothed, gains)


def smooth(model, measurements, init, strategy):
    """Forward filter followed by the backward pass, with per-phase wall time."""
    t0 = time.perf_counter()
    records = forward_filter(model, measurements, init, strategy)
    t1 = time.perf_counter()
    result = rts_backward(records)
    t2 = time.perf_counter()
    result.forward_seconds = t1 - t0
    result.backward_seconds = t2 - t1
    result.strategy = getattr(strategy, "name", "") or ""
    return result
