"""Gaussian copula sampling with a specified correlation matrix.

Validates the correlation matrix, factors it (Cholesky, with a
semidefinite fallback so singular matrices like perfect correlation work),
draws latent multivariate normals, maps them through the standard normal
CDF to uniforms, and through the marginal inverse CDFs to parameter draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import quantile, std_normal_cdf, std_normal_quantile
from .errors import InvalidCorrelationError
from .fitting import FittedDistribution
from .rng import _U_HIGH, _U_LOW, RngStream

__all__ = [
    "CorrelationMatrix",
    "CorrelationFactor",
    "CopulaDraw",
    "validate_correlation_matrix",
    "factor_correlation",
    "sample_latent",
    "copula_transform",
    "draw_dependent_samples",
]

# smallest eigenvalue tolerated before a matrix is rejected as not PSD
PSD_TOL = 1e-10

# max-norm reconstruction tolerance for the factor
FACTOR_TOL = 1e-8


@dataclass(frozen=True)
class CorrelationMatrix:
    """A validated correlation matrix (symmetric, unit diagonal, PSD)."""

    entries: np.ndarray

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    def __eq__(self, other):
        return isinstance(other, CorrelationMatrix) and np.array_equal(
            self.entries, other.entries
        )


@dataclass(frozen=True)
class CorrelationFactor:
    """Lower-triangular L with L @ L.T reproducing the correlation matrix."""

    L: np.ndarray
    rank: int


@dataclass(frozen=True)
class CopulaDraw:
    """One joint sample: latent normals z, uniforms u, parameter values x."""

    z: np.ndarray
    u: np.ndarray
    x: np.ndarray


def validate_correlation_matrix(
    raw, symmetrize: bool = False
) -> CorrelationMatrix:
    """Validate a candidate correlation matrix.

    Checks, in order: squareness, finiteness, symmetry (averaged when
    ``symmetrize``), exact unit diagonal, off-diagonals in [-1, 1], and
    positive semi-definiteness (min eigenvalue >= -1e-10). The error names
    the first violated invariant.
    """
    m = np.array(raw, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidCorrelationError(f"matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidCorrelationError("matrix has non-finite entries")
    if symmetrize:
        m = 0.5 * (m + m.T)
    elif not np.array_equal(m, m.T):
        i, j = np.argwhere(m != m.T)[0]
        raise InvalidCorrelationError(
            f"matrix is not symmetric: entry ({i},{j})={m[i, j]!r} "
            f"vs ({j},{i})={m[j, i]!r}"
        )
    diag = np.diag(m)
    if not np.all(diag == 1.0):
        i = int(np.argwhere(diag != 1.0)[0][0])
        raise InvalidCorrelationError(f"diagonal not unit: entry ({i},{i})={diag[i]!r}")
    if np.any(np.abs(m) > 1.0):
        i, j = np.argwhere(np.abs(m) > 1.0)[0]
        raise InvalidCorrelationError(
            f"correlation out of [-1, 1]: entry ({i},{j})={m[i, j]!r}"
        )
    min_eig = float(np.linalg.eigvalsh(m)[0])
    if min_eig < -PSD_TOL:
        raise InvalidCorrelationError(
            f"matrix is not positive semi-definite: min eigenvalue {min_eig:.3e}"
        )
    m.setflags(write=False)
    return CorrelationMatrix(entries=m)


def _semidefinite_cholesky(m: np.ndarray) -> np.ndarray:
    # column-wise Cholesky that zeroes columns whose pivot is ~0, so exactly
    # or nearly singular matrices (e.g. perfect correlation) factor cleanly
    d = m.shape[0]
    L = np.zeros((d, d))
    for j in range(d):
        pivot = m[j, j] - L[j, :j] @ L[j, :j]
        if pivot <= PSD_TOL:
            continue  # leave column j at zero
        L[j, j] = np.sqrt(pivot)
        if j + 1 < d:
            L[j + 1 :, j] = (m[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def factor_correlation(sigma: CorrelationMatrix) -> CorrelationFactor:
    """Factor a validated correlation matrix as L @ L.T with L lower-triangular."""
    m = sigma.entries
    try:
        L = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        L = _semidefinite_cholesky(m)
    err = float(np.max(np.abs(L @ L.T - m)))
    if err > FACTOR_TOL:
        raise InvalidCorrelationError(
            f"factorization failed to reproduce the matrix (max error {err:.3e})"
        )
    rank = int(np.count_nonzero(np.diag(L)))
    L.setflags(write=False)
    return CorrelationFactor(L=L, rank=rank)


def sample_latent(factor: CorrelationFactor, rng: RngStream) -> np.ndarray:
    """One latent multivariate normal vector z = L @ g, advancing the stream."""
    g = rng.normals(factor.L.shape[0])
    return factor.L @ g


def copula_transform(
    z: np.ndarray, marginals: Sequence[FittedDistribution]
) -> CopulaDraw:
    """Map latent normals through Phi and the marginal inverse CDFs."""
    z = np.asarray(z, dtype=float)
    if z.shape[0] != len(marginals):
        raise ValueError(
            f"dimension mismatch: {z.shape[0]} latent values, "
            f"{len(marginals)} marginals"
        )
    u = np.clip(std_normal_cdf(z), _U_LOW, _U_HIGH)
    x = np.array([quantile(m.spec, u_i) for m, u_i in zip(marginals, u)])
    return CopulaDraw(z=z, u=u, x=x)


def _is_identity(L: np.ndarray) -> bool:
    return np.array_equal(L, np.eye(L.shape[0]))


def draw_dependent_samples(
    marginals: Sequence[FittedDistribution],
    sigma: CorrelationMatrix,
    n: int,
    rng: RngStream,
) -> np.ndarray:
    """Draw an n x d matrix of dependent parameter values.

    Draw i consumes the d uniforms at stream positions i*d .. (i+1)*d - 1,
    so any chunking of the work reproduces the same output. With the
    identity matrix the latent stage is skipped and the output is
    bit-identical to independent per-marginal inverse-transform sampling
    from the same stream.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    d = len(marginals)
    if sigma.d != d:
        raise ValueError(
            f"dimension mismatch: {d} marginals, {sigma.d}x{sigma.d} matrix"
        )
    factor = factor_correlation(sigma)
    u = _draw_uniform_block(factor, n, d, rng)
    x = np.empty((n, d))
    for i, m in enumerate(marginals):
        x[:, i] = quantile(m.spec, u[:, i])
    return x


def _draw_uniform_block(
    factor: CorrelationFactor, n: int, d: int, rng: RngStream
) -> np.ndarray:
    """The n x d copula uniforms for draws consuming positions [c, c + n*d)."""
    raw = rng.uniforms(n * d).reshape(n, d)
    if _is_identity(factor.L):
        return np.clip(raw, _U_LOW, _U_HIGH)
    g = std_normal_quantile(np.clip(raw, _U_LOW, _U_HIGH))
    z = g @ factor.L.T
    return np.clip(std_normal_cdf(z), _U_LOW, _U_HIGH)
