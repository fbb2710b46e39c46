"""Sparse multivariate polynomials over the reals.

A :class:`Polynomial` stores its terms in a dict keyed by exponent tuples and
is kept in canonical form: keys sorted, like terms merged, and terms whose
coefficient is exactly ``0.0`` dropped. No epsilon pruning is done, so two
polynomials compare equal only if every coefficient matches.

Variable indices are zero-based in the Python API. The text format uses the
conventional one-based names ``x1, x2, ...``::

    >>> p = parse_polynomial("1.0*x1^2*x2 + -3.0*x3")
    >>> p.arity, p.degree
    (3, 3)
    >>> format_polynomial(p)
    '-3.0*x3 + 1.0*x1^2*x2'
"""

import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import DimensionError


@dataclass(frozen=True)
class Monomial:
    coefficient: float
    exponents: tuple

    @property
    def degree(self):
        return sum(self.exponents)


def _canonical(arity, items):
    terms = {}
    for exps, coef in items:
        if len(exps) != arity:
            raise DimensionError(f"exponent vector {exps} does not have length {arity}")
        terms[exps] = terms.get(exps, 0.0) + coef
    return {k: terms[k] for k in sorted(terms) if terms[k] != 0.0}


class Polynomial:
    """Immutable sparse polynomial in ``arity`` variables."""

    def __init__(self, arity, terms=()):
        if int(arity) < 1:
            raise DimensionError("arity must be positive")
        arity = int(arity)
        if isinstance(terms, dict):
            terms = terms.items()
        items = []
        for t in terms:
            if isinstance(t, Monomial):
                exps, coef = t.exponents, t.coefficient
            else:
                exps, coef = t
            exps = tuple(int(e) for e in exps)
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            items.append((exps, float(coef)))
        object.__setattr__(self, "arity", arity)
        object.__setattr__(self, "_terms", _canonical(arity, items))

    @classmethod
    def _from_canonical(cls, arity, terms):
        p = cls.__new__(cls)
        object.__setattr__(p, "arity", arity)
        object.__setattr__(p, "_terms", terms)
        return p

    @classmethod
    def constant(cls, arity, value):
        return cls(arity, [((0,) * arity, value)])

    @classmethod
    def variable(cls, arity, index, coefficient=1.0):
        if not 0 <= index < arity:
            raise IndexError(f"variable index {index} out of range for arity {arity}")
        exps = tuple(1 if i == index else 0 for i in range(arity))
        return cls(arity, [(exps, coefficient)])

    @classmethod
    def affine(cls, weights, offset=0.0):
        """``offset + weights @ x`` as a polynomial."""
        weights = np.asarray(weights, dtype=float).reshape(-1)
        n = weights.size
        items = [((0,) * n, offset)]
        for i, w in enumerate(weights):
            items.append((tuple(1 if j == i else 0 for j in range(n)), w))
        return cls(n, items)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    @property
    def terms(self):
        return dict(self._terms)

    def monomials(self):
        return [Monomial(c, e) for e, c in self._terms.items()]

    @cached_property
    def exponents(self):
        return tuple(self._terms)

    @cached_property
    def coefficients(self):
        return np.fromiter(self._terms.values(), dtype=float, count=len(self._terms))

    @cached_property
    def _exponent_array(self):
        return np.array(self.exponents, dtype=np.int64).reshape(len(self._terms), self.arity)

    @property
    def degree(self):
        """Total degree; ``-1`` for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def max_variable_degree(self):
        return max((max(e) for e in self._terms), default=0)

    def is_zero(self):
        return not self._terms

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(self.arity, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.arity == other.arity and self._terms == other._terms

    def __hash__(self):
        return hash((self.arity, tuple(self._terms.items())))

    def __repr__(self):
        return f"Polynomial({self.arity}, {format_polynomial(self)!r})"

    def __str__(self):
        return format_polynomial(self)

    def _coerce(self, other):
        if isinstance(other, Polynomial):
            if other.arity != self.arity:
                raise DimensionError(f"arity mismatch: {self.arity} vs {other.arity}")
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Polynomial.constant(self.arity, float(other))
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return Polynomial(self.arity, list(self._terms.items()) + list(other._terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._from_canonical(self.arity, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return multiply(self, other)

    __rmul__ = __mul__

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ValueError("power must be a nonnegative integer")
        out = Polynomial.constant(self.arity, 1.0)
        for _ in range(k):
            out = multiply(out, self)
        return out

    def __call__(self, x):
        return evaluate(self, x)


def evaluate(p, x):
    """Evaluate ``p`` at ``x``; ``x`` may carry leading batch dimensions."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (p.arity,):
        raise DimensionError(f"point of shape {x.shape} for polynomial of arity {p.arity}")
    if p.is_zero():
        return np.zeros(x.shape[:-1]) if x.ndim > 1 else 0.0
    E = p._exponent_array
    vals = np.prod(x[..., None, :] ** E, axis=-1) @ p.coefficients
    return float(vals) if x.ndim == 1 else vals


def multiply(p, q):
    """Product of two polynomials of equal arity, like terms merged."""
    if p.arity != q.arity:
        raise DimensionError(f"arity mismatch: {p.arity} vs {q.arity}")
    out = {}
    for e1, c1 in p._terms.items():
        for e2, c2 in q._terms.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0.0) + c1 * c2
    return Polynomial._from_canonical(
        p.arity, {k: out[k] for k in sorted(out) if out[k] != 0.0}
    )


def multiply_by_coordinate(p, g):
    """``x_g * p(x)``: raise the ``g``-th exponent of every term by one."""
    if not 0 <= g < p.arity:
        raise IndexError(f"coordinate {g} out of range for arity {p.arity}")
    terms = {e[:g] + (e[g] + 1,) + e[g + 1:]: c for e, c in p._terms.items()}
    return Polynomial._from_canonical(p.arity, dict(sorted(terms.items())))


def differentiate(p, i):
    """Partial derivative of ``p`` with respect to variable ``i``."""
    if not 0 <= i < p.arity:
        raise IndexError(f"variable {i} out of range for arity {p.arity}")
    items = []
    for e, c in p._terms.items():
        if e[i] > 0:
            items.append((e[:i] + (e[i] - 1,) + e[i + 1:], c * e[i]))
    return Polynomial(p.arity, items)


class PolynomialMap:
    """An ordered vector of polynomials sharing one input arity."""

    def __init__(self, components, arity=None):
        components = tuple(components)
        if arity is None:
            if not components:
                raise DimensionError("arity is required for an empty map")
            arity = components[0].arity
        for c in components:
            if c.arity != arity:
                raise DimensionError(f"component of arity {c.arity} in map of arity {arity}")
        self.arity = arity
        self.components = components
        # derived data (product polynomials, evaluation plans); valid because
        # the map never changes after construction
        self._memo = {}

    @classmethod
    def identity(cls, n):
        return cls([Polynomial.variable(n, i) for i in range(n)])

    @classmethod
    def affine(cls, F, b=None):
        """``F @ x + b`` as a polynomial map."""
        F = np.atleast_2d(np.asarray(F, dtype=float))
        b = np.zeros(F.shape[0]) if b is None else np.asarray(b, dtype=float).reshape(-1)
        if b.size != F.shape[0]:
            raise DimensionError(f"offset of length {b.size} for {F.shape} matrix")
        return cls([Polynomial.affine(row, off) for row, off in zip(F, b)], arity=F.shape[1])

    @classmethod
    def parse(cls, texts, arity=None):
        polys = [parse_polynomial(t, arity) for t in texts]
        if arity is None:
            arity = max(p.arity for p in polys)
            polys = [parse_polynomial(t, arity) for t in texts]
        return cls(polys, arity=arity)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __eq__(self, other):
        if not isinstance(other, PolynomialMap):
            return NotImplemented
        return self.arity == other.arity and self.components == other.components

    def __hash__(self):
        return hash((self.arity, self.components))

    def __repr__(self):
        return f"PolynomialMap([{', '.join(repr(str(c)) for c in self.components)}])"

    @property
    def degree(self):
        return max((c.degree for c in self.components), default=-1)

    def add_constant(self, offset):
        """New map with ``offset[i]`` added to component ``i``."""
        offset = np.asarray(offset, dtype=float).reshape(-1)
        if offset.size != len(self):
            raise DimensionError(f"offset of length {offset.size} for map with {len(self)} outputs")
        return PolynomialMap(
            [c + float(o) if o != 0.0 else c for c, o in zip(self.components, offset)],
            arity=self.arity,
        )

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        """Evaluate every component; ``x`` of shape ``(..., arity)`` gives ``(..., m)``."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.arity,):
            raise DimensionError(f"point of shape {x.shape} for map of arity {self.arity}")
        E, C = self._stacked
        powers = np.prod(x[..., None, :] ** E, axis=-1)
        return powers @ C

    @cached_property
    def _stacked(self):
        # union of exponent vectors and an (n_terms, m) coefficient matrix
        index = {}
        for c in self.components:
            for e in c.exponents:
                index.setdefault(e, len(index))
        E = np.array(list(index), dtype=np.int64).reshape(len(index), self.arity)
        C = np.zeros((len(index), len(self.components)))
        for j, c in enumerate(self.components):
            for e, coef in c._terms.items():
                C[index[e], j] = coef
        return E, C

    @cached_property
    def jacobian(self):
        """Rows of partial derivatives, ``jacobian[i][j] = d f_i / d x_j``."""
        return tuple(
            tuple(differentiate(c, j) for j in range(self.arity)) for c in self.components
        )

    @cached_property
    def _jacobian_map(self):
        return PolynomialMap([d for row in self.jacobian for d in row], arity=self.arity)

    def jacobian_at(self, x):
        """Numeric Jacobian ``(m, arity)`` at a single point."""
        return self._jacobian_map.evaluate(x).reshape(len(self), self.arity)


def outer_product(f, g):
    """Matrix of polynomials with entry ``(i, j) = f_i * g_j``."""
    if f.arity != g.arity:
        raise DimensionError(f"arity mismatch: {f.arity} vs {g.arity}")
    return [[multiply(fi, gj) for gj in g.components] for fi in f.components]


_NUMBER = r"[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?|[0-9]+\.(?:[eE][+-]?[0-9]+)?"
_FACTOR_RE = re.compile(
    rf"^\s*(?:(?P<num>[+-]?\s*(?:{_NUMBER}))|(?P<sign>[+-]?)\s*x(?P<var>[0-9]+)\s*(?:\^\s*(?P<exp>[0-9]+))?)\s*$"
)
_FLOAT_EXP_TAIL = re.compile(r"[0-9.][eE]$")


def _split_terms(text):
    # '+' and binary '-' separate terms, except inside a float exponent such
    # as 1e+03 or after '*' / '^'; a '-' stays with the term it starts
    terms, start = [], 0
    for i, ch in enumerate(text):
        if ch not in "+-":
            continue
        before = text[start:i].rstrip()
        if not before and ch == "-":
            continue
        if _FLOAT_EXP_TAIL.search(before) or before.endswith(("*", "^")):
            continue
        terms.append(text[start:i])
        start = i + 1 if ch == "+" else i
    terms.append(text[start:])
    return terms


def parse_polynomial(text, arity=None):
    """Parse ``"1.0*x1^2*x2 + -3.0*x3"`` style text.

    Terms are separated by ``+`` or ``-``; each term is a ``*``-separated product of
    signed decimal numbers and ``x<i>`` or ``x<i>^<e>`` factors. Whitespace is
    ignored. ``arity`` defaults to the largest variable index present.
    """
    items = []
    for raw in _split_terms(text):
        if not raw.strip():
            raise ValueError(f"empty term in polynomial {text!r}")
        coef, powers = 1.0, {}
        for factor in raw.split("*"):
            m = _FACTOR_RE.match(factor)
            if m is None:
                raise ValueError(f"cannot parse factor {factor.strip()!r} in {text!r}")
            if m.group("num") is not None:
                coef *= float(m.group("num").replace(" ", ""))
            else:
                if m.group("sign") == "-":
                    coef = -coef
                var = int(m.group("var"))
                if var < 1:
                    raise ValueError(f"variables are numbered from x1, got x{var}")
                powers[var] = powers.get(var, 0) + int(m.group("exp") or 1)
        items.append((powers, coef))
    top = max((max(p, default=0) for p, _ in items), default=0)
    if arity is None:
        arity = max(top, 1)
    elif top > arity:
        raise DimensionError(f"x{top} used in polynomial of arity {arity}")
    return Polynomial(
        arity,
        [(tuple(p.get(i + 1, 0) for i in range(arity)), c) for p, c in items],
    )


def format_polynomial(p):
    """Inverse of :func:`parse_polynomial` (round-trips coefficients exactly)."""
    if p.is_zero():
        return "0.0"
    parts = []
    for e, c in p._terms.items():
        factors = [repr(float(c))]
        for i, k in enumerate(e):
            if k == 1:
                factors.append(f"x{i + 1}")
            elif k > 1:
                factors.append(f"x{i + 1}^{k}")
        parts.append("*".join(factors))
    return " + ".join(parts)
