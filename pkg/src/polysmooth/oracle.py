"""Independent references for Gaussian polynomial expectations.

Nothing here touches the eigen-decomposition path of :mod:`polysmooth.integral`:
quadrature maps a tensor Gauss-Hermite grid through a Cholesky factor, and the
zero-mean reference sums products of covariance entries over perfect pairings
(Isserlis' theorem).
"""

from dataclasses import dataclass

import numpy as np

from .integral import polynomial_expectation
from .linalg import GaussianBelief
from .polynomial import Polynomial, evaluate


def gauss_hermite_expectation(p, belief, nodes=12):
    """``E[p(x)]`` by a tensor Gauss-Hermite rule with ``nodes`` points per axis.

    Exact (up to rounding) when every variable degree is below ``2*nodes``.
    Requires a positive-definite covariance.
    """
    n = belief.dim
    z, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / np.sqrt(2.0 * np.pi)
    grid = np.stack(np.meshgrid(*([z] * n), indexing="ij"), axis=-1).reshape(-1, n)
    weights = np.prod(np.stack(np.meshgrid(*([w] * n), indexing="ij"), axis=-1).reshape(-1, n), axis=1)
    L = np.linalg.cholesky(belief.covariance)
    x = belief.mean + grid @ L.T
    return float(weights @ evaluate(p, x))


def _pairings(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for k in range(len(rest)):
        for tail in _pairings(rest[:k] + rest[k + 1 :]):
            yield [(first, rest[k])] + tail


def isserlis_moment(exponents, covariance):
    """``E[prod x_i^m_i]`` for zero-mean ``x`` via the sum over perfect pairings."""
    cov = np.asarray(covariance, dtype=float)
    items = [i for i, m in enumerate(exponents) for _ in range(m)]
    if len(items) % 2:
        return 0.0
    return float(sum(np.prod([cov[a, b] for a, b in pairs]) for pairs in _pairings(items)))


def isserlis_expectation(p, covariance):
    return sum(c * isserlis_moment(e, covariance) for e, c in p.terms.items())


def magnitude(p, belief):
    """Scale used for relative errors: ``sum |a_t| prod (|mean_i| + sd_i)^m_ti``."""
    spread = np.abs(belief.mean) + np.sqrt(np.diag(belief.covariance))
    return float(sum(abs(c) * np.prod(spread ** np.array(e)) for e, c in p.terms.items()))


def relative_error(value, reference, scale):
    """``|value - reference|`` over ``max(|reference|, scale)``.

    Using the term magnitude as a floor keeps the measure meaningful when the
    terms of a polynomial cancel to a near-zero expectation.
    """
    denom = max(abs(reference), scale)
    if denom == 0.0:
        return abs(value - reference)
    return abs(value - reference) / denom


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_belief(rng, n, max_condition=1e4, zero_mean=False):
    """Belief with a random eigenbasis and condition number at most ``max_condition``."""
    scale = 10.0 ** rng.uniform(-1.0, 0.5)
    spread = rng.uniform(0.0, np.log10(max_condition))
    log_eigs = rng.uniform(0.0, spread, size=n)
    if n > 1:
        log_eigs[0], log_eigs[-1] = 0.0, spread
    eigs = scale * 10.0 ** (log_eigs - spread / 2)
    U = random_orthogonal(rng, n)
    cov = (U * eigs) @ U.T
    mean = np.zeros(n) if zero_mean else rng.normal(0.0, 1.0, size=n)
    return GaussianBelief(mean, cov)


def random_polynomial(rng, n, degree, max_terms=6):
    """Random polynomial of total degree at most ``degree`` with the top degree present."""
    count = int(rng.integers(1, max_terms + 1))
    terms = []
    for k in range(count):
        d = degree if k == 0 else int(rng.integers(0, degree + 1))
        cuts = np.sort(rng.integers(0, d + 1, size=n - 1))
        parts = np.diff(np.concatenate([[0], cuts, [d]]))
        terms.append((tuple(int(v) for v in parts), rng.normal()))
    return Polynomial(n, terms)


@dataclass
class OracleReport:
    cases: int
    max_quadrature_error: float
    max_isserlis_error: float
    isserlis_cases: int


def run_oracle_suite(dims, degree, cases, seed=0, max_condition=1e4, nodes=12):
    """Compare exact expectations with quadrature (all cases) and Isserlis (zero-mean cases).

    Every other case uses a zero-mean belief so both references are exercised.
    ``dims`` is an int or a sequence cycled through.
    """
    dims = [dims] if isinstance(dims, int) else list(dims)
    rng = np.random.default_rng(seed)
    worst_q = worst_i = 0.0
    n_iss = 0
    for case in range(cases):
        n = dims[case % len(dims)]
        zero_mean = case % 2 == 1
        belief = random_belief(rng, n, max_condition, zero_mean=zero_mean)
        p = random_polynomial(rng, n, degree)
        value = polynomial_expectation(p, belief)
        scale = magnitude(p, belief)
        q = gauss_hermite_expectation(p, belief, nodes)
        worst_q = max(worst_q, relative_error(value, q, scale))
        if zero_mean:
            ref = isserlis_expectation(p, belief.covariance)
            worst_i = max(worst_i, relative_error(value, ref, scale))
            n_iss += 1
    return OracleReport(cases, worst_q, worst_i, n_iss)
