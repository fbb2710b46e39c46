"""Exact expectations of polynomials under a multivariate Gaussian.

For ``x ~ N(mean, P)`` write ``P = S diag(c) S^T`` and ``x = mean + S z`` with
independent ``z_j ~ N(0, c_j)``. Each coordinate is then the affine form
``x_i = mean_i + sum_j S_ij z_j`` and a monomial ``prod_i x_i^m_i`` expands,
power by power, over the ``n + 1`` slots ``(mean_i, S_i1 z_1, ..., S_in z_n)``
with multinomial weights. A term survives only if every ``z_j`` carries an
even total exponent; its expectation is then the product of one-dimensional
even moments.

Which composition combinations survive depends only on the exponents, so the
structure is enumerated once per monomial and cached. Evaluating against a
particular belief is a gather from power tables of ``mean``, ``S`` and ``c``.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .exceptions import DegreeError, DimensionError, InvalidParameterError
from .linalg import GaussianBelief, spectral_decompose
from .polynomial import multiply, multiply_by_coordinate

MAX_VARIABLE_DEGREE = 30


def _double_factorial(k):
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def gaussian_moment_1d(m, variance):
    """``E[z^m]`` for ``z ~ N(0, variance)``.

    Zero for odd ``m``. For even ``m`` this is
    ``(2 variance)^(m/2) Gamma((m+1)/2) / sqrt(pi)``, evaluated through the
    equal closed form ``(m-1)!! variance^(m/2)``. ``variance == 0`` is the
    point-mass limit.
    """
    if m < 0 or int(m) != m:
        raise InvalidParameterError(f"moment order must be a nonnegative integer, got {m}")
    if variance < 0:
        raise InvalidParameterError(f"variance must be nonnegative, got {variance}")
    m = int(m)
    if m % 2:
        return 0.0
    return float(_double_factorial(m - 1)) * float(variance) ** (m // 2)


@dataclass(frozen=True, eq=False)
class CompositionTable:
    """All weak compositions of ``total`` into ``slots`` parts.

    ``vectors[r]`` sums to ``total`` and ``coefficients[r]`` is the
    multinomial coefficient ``total! / prod(vectors[r]!)``.
    """

    total: int
    slots: int
    vectors: np.ndarray
    coefficients: np.ndarray


@lru_cache(maxsize=None)
def composition_table(total, slots):
    if total < 0 or slots < 1:
        raise InvalidParameterError(f"invalid composition request ({total}, {slots})")
    rows = []
    # stars and bars: bar positions among total + slots - 1 places
    for bars in combinations(range(total + slots - 1), slots - 1):
        prev, parts = -1, []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(total + slots - 2 - prev)
        rows.append(parts)
    vectors = np.array(rows, dtype=np.int64).reshape(len(rows), slots)
    fact = [math.factorial(k) for k in range(total + 1)]
    coefs = np.array(
        [fact[total] // math.prod(fact[k] for k in row) for row in rows], dtype=float
    )
    vectors.flags.writeable = False
    coefs.flags.writeable = False
    return CompositionTable(total, slots, vectors, coefs)


@lru_cache(maxsize=4096)
def _monomial_structure(exponents):
    """Surviving composition combinations for one monomial.

    Returns ``(mean_exp, basis_exp, half_z, weight)`` with shapes ``(R, n)``,
    ``(R, n, n)``, ``(R, n)`` and ``(R,)``. ``weight`` folds together the
    multinomial coefficients and the ``(k-1)!!`` factors of the even moments.
    """
    n = len(exponents)
    tables = [composition_table(m, n + 1) for m in exponents]
    grids = np.meshgrid(*[np.arange(len(t.vectors)) for t in tables], indexing="ij")
    picks = [g.ravel() for g in grids]
    a = np.stack([t.vectors[p] for t, p in zip(tables, picks)], axis=1)
    z = a[:, :, 1:].sum(axis=1)
    keep = np.all(z % 2 == 0, axis=1)
    a, z = a[keep], z[keep]
    weight = np.ones(len(a))
    for t, p in zip(tables, picks):
        weight *= t.coefficients[p[keep]]
    dfact = np.array([_double_factorial(k - 1) for k in range(z.max(initial=0) + 1)], dtype=float)
    weight *= np.prod(dfact[z], axis=1)
    return a[:, :, 0], a[:, :, 1:], z // 2, weight


@dataclass(frozen=True, eq=False)
class _Plan:
    n: int
    max_degree: int
    n_monomials: int
    index: np.ndarray
    weight: np.ndarray
    owner: np.ndarray


@lru_cache(maxsize=1024)
def _plan(monomials):
    n = len(monomials[0])
    K = max(sum(m) for m in monomials)
    H = K // 2 + 1
    off_basis = n * (K + 1)
    off_var = off_basis + n * n * (K + 1)
    idx, weights, owners = [], [], []
    var_rows = np.arange(n) * (K + 1)
    basis_rows = (np.arange(n)[:, None] * n + np.arange(n)[None, :]) * (K + 1)
    half_rows = np.arange(n) * H
    for k, m in enumerate(monomials):
        mean_exp, basis_exp, half_z, weight = _monomial_structure(m)
        if not len(weight):
            continue
        R = len(weight)
        idx.append(
            np.concatenate(
                [
                    var_rows + mean_exp,
                    (off_basis + basis_rows + basis_exp).reshape(R, n * n),
                    off_var + half_rows + half_z,
                ],
                axis=1,
            )
        )
        weights.append(weight)
        owners.append(np.full(R, k))
    width = 2 * n + n * n
    return _Plan(
        n,
        K,
        len(monomials),
        np.concatenate(idx) if idx else np.zeros((0, width), dtype=np.int64),
        np.concatenate(weights) if weights else np.zeros(0),
        np.concatenate(owners) if owners else np.zeros(0, dtype=np.int64),
    )


def _monomial_moments(monomials, mean, spectral):
    plan = _plan(monomials)
    K = plan.max_degree
    powers = np.arange(K + 1)
    n = plan.n
    table = np.empty(2 * n * (K + 1) + n * n * (K + 1))
    table[: n * (K + 1)] = (mean[:, None] ** powers).ravel()
    table[n * (K + 1) : (n + n * n) * (K + 1)] = (spectral.basis[:, :, None] ** powers).ravel()
    H = K // 2 + 1
    table[(n + n * n) * (K + 1) : (n + n * n) * (K + 1) + n * H] = (
        spectral.eigenvalues[:, None] ** powers[:H]
    ).ravel()
    values = plan.weight * table[plan.index].prod(axis=1)
    return np.bincount(plan.owner, values, minlength=plan.n_monomials)


@dataclass(frozen=True, eq=False)
class _Batch:
    monomials: tuple
    monomial_index: np.ndarray
    owner: np.ndarray


@lru_cache(maxsize=1024)
def _batch(structure):
    index, positions, owner = {}, [], []
    for k, exps in enumerate(structure):
        for e in exps:
            if e and max(e) > MAX_VARIABLE_DEGREE:
                raise DegreeError(
                    f"variable power {max(e)} exceeds the supported maximum {MAX_VARIABLE_DEGREE}"
                )
            positions.append(index.setdefault(e, len(index)))
            owner.append(k)
    return _Batch(
        tuple(index),
        np.array(positions, dtype=np.int64),
        np.array(owner, dtype=np.int64),
    )


def _check_belief(belief, arity):
    if not isinstance(belief, GaussianBelief):
        raise TypeError(f"expected GaussianBelief, got {type(belief).__name__}")
    if belief.dim != arity:
        raise DimensionError(f"polynomial arity {arity} does not match belief dimension {belief.dim}")


def expectations(polynomials, belief, spectral=None):
    """Expectations of several polynomials under one belief.

    One spectral decomposition and one evaluation plan serve the whole batch.

    Parameters
    ----------
    polynomials : sequence of Polynomial
        All of arity ``belief.dim``.
    belief : GaussianBelief
    spectral : SpectralDecomposition, optional
        Decomposition of ``belief.covariance``; computed when omitted. Any
        orthogonal eigenbasis gives the same result.

    Returns
    -------
    ndarray of shape (len(polynomials),)
    """
    polynomials = list(polynomials)
    for p in polynomials:
        _check_belief(belief, p.arity)
    batch = _batch(tuple(p.exponents for p in polynomials))
    coefs = np.concatenate([p.coefficients for p in polynomials] or [np.zeros(0)])
    return _evaluate_batch(batch, coefs, len(polynomials), belief, spectral)


def monomial_expectation(exponents, belief, spectral=None):
    """``E[prod_i x_i^m_i]`` for ``x ~ belief``."""
    exponents = tuple(int(m) for m in exponents)
    _check_belief(belief, len(exponents))
    if any(m < 0 for m in exponents):
        raise ValueError(f"negative exponent in {exponents}")
    if max(exponents, default=0) > MAX_VARIABLE_DEGREE:
        raise DegreeError(
            f"variable power {max(exponents)} exceeds the supported maximum {MAX_VARIABLE_DEGREE}"
        )
    if spectral is None:
        spectral = spectral_decompose(belief.covariance)
    return float(_monomial_moments((exponents,), belief.mean, spectral)[0])


def polynomial_expectation(p, belief, spectral=None):
    return float(expectations([p], belief, spectral)[0])


def map_expectation(f, belief, spectral=None):
    """Component-wise expectation of a polynomial map."""
    _check_belief(belief, f.arity)
    return expectations(f.components, belief, spectral)


def _cross_polys(f):
    return [multiply_by_coordinate(fj, g) for g in range(f.arity) for fj in f.components]


def _second_polys(f):
    comps = f.components
    return [multiply(comps[i], comps[j]) for i in range(len(comps)) for j in range(i, len(comps))]


def _mirror(values, m):
    out = np.empty((m, m))
    iu = np.triu_indices(m)
    out[iu] = values
    out.T[iu] = values
    return out


def cross_moment_matrix(f, belief, spectral=None):
    """Matrix ``E[x f(x)^T]`` of shape ``(n, m)``.

    Entry ``(g, j)`` is the expectation of ``x_g * f_j(x)``, formed by raising
    the ``g``-th exponent of every term of ``f_j``.
    """
    _check_belief(belief, f.arity)
    vals = expectations(_cross_polys(f), belief, spectral)
    return vals.reshape(f.arity, len(f))


def second_moment_matrix(f, belief, spectral=None):
    """Symmetric matrix ``E[f(x) f(x)^T]``; upper triangle computed, then mirrored."""
    _check_belief(belief, f.arity)
    vals = expectations(_second_polys(f), belief, spectral)
    return _mirror(vals, len(f))


def _evaluate_batch(batch, coefs, n_out, belief, spectral):
    if spectral is None:
        spectral = spectral_decompose(belief.covariance)
    if not batch.monomials:
        return np.zeros(n_out)
    moments = _monomial_moments(batch.monomials, belief.mean, spectral)
    return np.bincount(batch.owner, coefs * moments[batch.monomial_index], minlength=n_out)


def _map_program(f):
    # (monomials, dense coefficient matrix mapping monomial moments to outputs)
    program = f._memo.get("map_moments")
    if program is None:
        polys = list(f.components) + _second_polys(f) + _cross_polys(f)
        batch = _batch(tuple(p.exponents for p in polys))
        C = np.zeros((len(polys), len(batch.monomials)))
        coefs = np.concatenate([p.coefficients for p in polys])
        np.add.at(C, (batch.owner, batch.monomial_index), coefs)
        program = f._memo["map_moments"] = (batch.monomials, C)
    return program


def map_moments(f, belief, spectral=None):
    """``(E[f], E[f f^T], E[x f^T])`` evaluated as a single batch.

    The product polynomials and the evaluation plan are built once per map.
    """
    _check_belief(belief, f.arity)
    monomials, C = _map_program(f)
    if spectral is None:
        spectral = spectral_decompose(belief.covariance)
    if monomials:
        vals = C @ _monomial_moments(monomials, belief.mean, spectral)
    else:
        vals = np.zeros(len(C))
    m = len(f)
    n_second = m * (m + 1) // 2
    mean = vals[:m]
    outer = _mirror(vals[m : m + n_second], m)
    xf = vals[m + n_second :].reshape(f.arity, m)
    return mean, outer, xf
