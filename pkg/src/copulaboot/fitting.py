"""Fit marginal distribution parameters to a reported confidence interval.

Given two quantile constraints (typically the 2.5% and 97.5% points of a
reported 95% CI), recover the parameters of a chosen family. The objective
is least squares on the probability scale: bounded, scale-free, and avoids
calling the inverse CDF inside the optimizer loop.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .distributions import DistributionSpec, Family, cdf, std_normal_quantile
from .errors import DomainError, FitError

__all__ = [
    "QuantileConstraint",
    "FittedDistribution",
    "fit_from_quantiles",
    "fit_residual",
]

# two-parameter families must meet both constraints to this tolerance
FIT_TOL = 1e-6

_MAX_ITER = 500
_N_RESTARTS = 5


@dataclass(frozen=True)
class QuantileConstraint:
    """Two quantile constraints: cdf(q_low) = alpha_low, cdf(q_upp) = alpha_upp."""

    q_low: float
    q_upp: float
    alpha_low: float = 0.025
    alpha_upp: float = 0.975

    def __post_init__(self):
        if not (math.isfinite(self.q_low) and math.isfinite(self.q_upp)):
            raise DomainError("quantiles must be finite")
        if not self.q_low < self.q_upp:
            raise DomainError(
                f"qLow must be < qUpp, got ({self.q_low}, {self.q_upp})"
            )
        if not 0.0 < self.alpha_low < self.alpha_upp < 1.0:
            raise DomainError(
                "need 0 < alphaLow < alphaUpp < 1, got "
                f"({self.alpha_low}, {self.alpha_upp})"
            )


@dataclass(frozen=True)
class FittedDistribution:
    """A marginal distribution fitted to a quantile constraint."""

    spec: DistributionSpec
    constraint: QuantileConstraint
    residual: float


def fit_residual(spec: DistributionSpec, constraint: QuantileConstraint) -> float:
    """Euclidean fit error on the probability scale.

    sqrt[(cdf(qLow) - alphaLow)^2 + (cdf(qUpp) - alphaUpp)^2]; zero iff both
    constraints are met exactly.
    """
    r_low = cdf(spec, constraint.q_low) - constraint.alpha_low
    r_upp = cdf(spec, constraint.q_upp) - constraint.alpha_upp
    return math.hypot(r_low, r_upp)


def _check_support(family: Family, c: QuantileConstraint):
    if family is Family.BETA and not (0.0 < c.q_low and c.q_upp < 1.0):
        raise DomainError(
            f"beta quantiles must lie in (0, 1), got ({c.q_low}, {c.q_upp})"
        )
    if family in (Family.GAMMA, Family.EXPONENTIAL) and c.q_low <= 0.0:
        raise DomainError(
            f"{family.value} quantiles must be positive, got qLow={c.q_low}"
        )


def _initial_params(family: Family, c: QuantileConstraint) -> tuple[float, ...]:
    # moment-matching starting points; the (0.025, 0.975) CI spans ~3.92 sd
    m = 0.5 * (c.q_low + c.q_upp)
    sd = (c.q_upp - c.q_low) / 3.92
    if family is Family.BETA:
        common = m * (1.0 - m) / (sd * sd) - 1.0
        if common <= 0.0:
            common = 1e-3
        return (max(m * common, 1e-6), max((1.0 - m) * common, 1e-6))
    if family is Family.GAMMA:
        return ((m / sd) ** 2, m / (sd * sd))
    raise AssertionError(family)


def _fit_normal(c: QuantileConstraint) -> DistributionSpec:
    # closed form: two constraints, two linear unknowns after z-transform
    z_low = std_normal_quantile(c.alpha_low)
    z_upp = std_normal_quantile(c.alpha_upp)
    sigma = (c.q_upp - c.q_low) / (z_upp - z_low)
    mu = c.q_low - sigma * z_low
    return DistributionSpec(Family.NORMAL, (mu, sigma))


def _fit_exponential(c: QuantileConstraint) -> DistributionSpec:
    # one parameter, two constraints: least squares over log(rate)
    rate0 = -math.log1p(-c.alpha_upp) / c.q_upp

    def objective(theta):
        spec = DistributionSpec(Family.EXPONENTIAL, (math.exp(theta[0]),))
        return fit_residual(spec, c) ** 2

    best = None
    for scale in (1.0, 0.5, 2.0, 0.25, 4.0):
        res = optimize.minimize(
            objective,
            [math.log(rate0 * scale)],
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-24, "maxiter": _MAX_ITER},
        )
        if best is None or res.fun < best.fun:
            best = res
    return DistributionSpec(Family.EXPONENTIAL, (math.exp(best.x[0]),))


def _fit_two_param(family: Family, c: QuantileConstraint) -> DistributionSpec:
    p0 = _initial_params(family, c)
    theta0 = np.log(p0)

    def objective(theta):
        if np.any(theta > 500.0):  # overflow guard on exp
            return 4.0
        spec = DistributionSpec(family, tuple(np.exp(theta)))
        r_low = cdf(spec, c.q_low) - c.alpha_low
        r_upp = cdf(spec, c.q_upp) - c.alpha_upp
        return r_low * r_low + r_upp * r_upp

    # deterministic restart perturbations
    perturb = np.array(
        [[0.0, 0.0], [0.3, -0.3], [-0.3, 0.3], [0.7, 0.7], [-0.7, -0.7], [1.5, 0.0]]
    )
    best = None
    for k in range(_N_RESTARTS + 1):
        res = optimize.minimize(
            objective,
            theta0 + perturb[k],
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-28, "maxiter": _MAX_ITER},
        )
        if best is None or res.fun < best.fun:
            best = res
        if math.sqrt(best.fun) <= FIT_TOL / 10.0:
            break
    spec = DistributionSpec(family, tuple(np.exp(best.x)))
    return spec


def fit_from_quantiles(
    family: Family | str, constraint: QuantileConstraint
) -> FittedDistribution:
    """Fit a distribution of the given family to a quantile constraint.

    Two-parameter families must reproduce both constraints to within
    ``FIT_TOL`` on the probability scale or a :class:`FitError` is raised.
    The exponential (one parameter, two constraints) returns the
    least-squares optimum and reports the combined residual; a warning is
    emitted when that residual exceeds 1e-3.
    """
    family = Family.from_name(family) if isinstance(family, str) else family
    _check_support(family, constraint)

    if family is Family.NORMAL:
        spec = _fit_normal(constraint)
    elif family is Family.EXPONENTIAL:
        spec = _fit_exponential(constraint)
    else:
        spec = _fit_two_param(family, constraint)

    residual = fit_residual(spec, constraint)
    if family is Family.EXPONENTIAL:
        if residual > 1e-3:
            warnings.warn(
                f"exponential fit is overdetermined; residual {residual:.3e} "
                "exceeds 1e-3",
                stacklevel=2,
            )
    elif residual > FIT_TOL:
        raise FitError(
            f"{family.value} fit did not converge: residual {residual:.3e} "
            f"> {FIT_TOL} for constraint {constraint}",
            best_residual=residual,
        )
    return FittedDistribution(spec=spec, constraint=constraint, residual=residual)
