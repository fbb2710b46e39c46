"""Symmetric linear algebra and Gaussian belief primitives.

Eigen-decomposition is the one covariance factorization used throughout the
package: the exact moment computation consumes the eigenvalues and the
orthogonal basis directly, and sigma-point rules take their matrix square
root as ``basis @ diag(sqrt(eigenvalues))``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .exceptions import DimensionError, InvalidMatrixError, NotPSDError, NotSPDError

SYM_TOL = 1e-9
PSD_TOL = 1e-10
RECON_TOL = 1e-10


def _readonly(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def _as_square(P, name="matrix"):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise InvalidMatrixError(f"{name} must be square, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise InvalidMatrixError(f"{name} contains non-finite values")
    return P


@dataclass(frozen=True, eq=False)
class GaussianBelief:
    """Mean and covariance of a Gaussian state estimate.

    The covariance is symmetrized on construction. Positive semi-definiteness
    is not re-checked here; it is enforced where a factorization is taken.
    """

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise DimensionError(
                f"covariance shape {cov.shape} does not match mean length {mean.size}"
            )
        cov = 0.5 * (cov + cov.T)
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self):
        return self.mean.size


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Orthogonal eigenbasis (columns) and nonnegative eigenvalues, descending."""

    basis: np.ndarray
    eigenvalues: np.ndarray

    def sqrt(self):
        """Matrix square root ``basis @ diag(sqrt(eigenvalues))``."""
        return self.basis * np.sqrt(self.eigenvalues)

    def reconstruct(self):
        return (self.basis * self.eigenvalues) @ self.basis.T


def spectral_decompose(P):
    """Eigen-decompose a symmetric PSD matrix.

    Parameters
    ----------
    P : (n, n) array_like
        Symmetric within ``SYM_TOL`` (scaled by ``1 + max|P|``).

    Returns
    -------
    SpectralDecomposition
        Eigenvalues in descending order; values in ``[-PSD_TOL*scale, 0)``
        are clamped to zero. The first nonzero component of every
        eigenvector is made nonnegative.

    Raises
    ------
    InvalidMatrixError
        Non-square, non-finite or asymmetric input.
    NotPSDError
        An eigenvalue below ``-PSD_TOL*scale``.
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.size == 0:
        raise InvalidMatrixError(f"matrix must be square and nonempty, got shape {P.shape}")
    n = P.shape[0]
    scale = 1.0 + np.abs(P).max()
    # NaN/inf make both sides NaN and fail the comparison
    if not np.abs(P - P.T).max() <= SYM_TOL * scale:
        _as_square(P)
        raise InvalidMatrixError("matrix is not symmetric")
    w, V, info = lapack.dsyevd(P)
    if info != 0:
        raise InvalidMatrixError(f"eigen-decomposition failed (info={info})")
    # stable descending order keeps tied eigenvectors in LAPACK's order
    order = np.argsort(-w, kind="stable")
    w, V = w[order], V[:, order]
    if w[-1] < -PSD_TOL * scale:
        raise NotPSDError(f"smallest eigenvalue {w[-1]:.3e} is negative")
    w = np.maximum(w, 0.0)
    lead = V[0]
    if not lead.all():
        lead = V[(V != 0.0).argmax(axis=0), np.arange(n)]
    V = V * np.where(lead < 0.0, -1.0, 1.0)
    w.flags.writeable = False
    V.flags.writeable = False
    return SpectralDecomposition(V, w)


def solve_spd(A, B):
    """Solve ``A X = B`` for symmetric positive-definite ``A`` via Cholesky.

    Raises
    ------
    NotSPDError
        ``A`` is singular, indefinite, or the solution is not finite.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidMatrixError(f"matrix must be square, got shape {A.shape}")
    if B.shape[:1] != A.shape[:1]:
        raise DimensionError(f"cannot solve {A.shape} system with rhs {B.shape}")
    c, info = lapack.dpotrf(A, lower=1, clean=0)
    if info != 0:
        raise NotSPDError(f"matrix is not positive definite (leading minor {info})")
    X, info = lapack.dpotrs(c, B, lower=1)
    if info != 0 or not np.isfinite(X).all():
        raise NotSPDError("Cholesky solve produced non-finite values")
    return X


def symmetrize_and_project(P):
    """Symmetrize and clamp negative eigenvalues to zero.

    Valid covariances are returned unchanged (up to the symmetrization),
    so the projection is idempotent and preserves eigenvalue order.
    Non-finite input is symmetrized and passed through.
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise InvalidMatrixError(f"matrix must be square, got shape {P.shape}")
    S = 0.5 * (P + P.T)
    if S.size == 0 or not np.isfinite(S).all():
        return S
    # positive definite: nothing to clamp
    if lapack.dpotrf(S, lower=1, clean=0)[1] == 0:
        return S
    w, V, info = lapack.dsyevd(S)
    if info != 0 or w[0] >= 0.0:
        return S
    w = np.maximum(w, 0.0)
    out = (V * w) @ V.T
    return 0.5 * (out + out.T)
