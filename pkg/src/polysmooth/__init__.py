"""Gaussian filtering and RTS smoothing for polynomial state-space models.

Moments of polynomials under Gaussian beliefs are computed exactly via an
eigen-decomposition of the covariance; cubature, unscented and linearized
strategies share the same filter/smoother recursion for comparison.
"""

from .exceptions import (
    ConfigError,
    DegreeError,
    DimensionError,
    InvalidMatrixError,
    InvalidParameterError,
    NotPSDError,
    NotSPDError,
    NumericalError,
    NumericalFailure,
    PolysmoothError,
)
from .integral import (
    cross_moment_matrix,
    gaussian_moment_1d,
    map_expectation,
    map_moments,
    monomial_expectation,
    polynomial_expectation,
    second_moment_matrix,
)
from .linalg import GaussianBelief, solve_spd, spectral_decompose, symmetrize_and_project
from .models import StateSpaceModel, linear_model, simulate, vdp_model
from .polynomial import Polynomial, PolynomialMap, format_polynomial, parse_polynomial
from .smoother import SmoothingResult, forward_filter, rts_backward, smooth
from .strategies import STRATEGIES, get_strategy

__version__ = "0.1.0"
