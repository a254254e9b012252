"""Continuous univariate distribution kernels.

CDF, PDF and quantile (inverse CDF) for the supported marginal families,
plus the standard normal CDF and its inverse. All functions accept scalars
or numpy arrays and are pure, so they are safe for concurrent use.

Parameters use the natural parameterization throughout: beta(alpha, beta),
normal(mu, sigma), gamma(shape, rate), exponential(rate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = [
    "Family",
    "DistributionSpec",
    "cdf",
    "pdf",
    "quantile",
    "std_normal_cdf",
    "std_normal_quantile",
]


class Family(str, Enum):
    """Supported continuous marginal families (closed set)."""

    BETA = "beta"
    NORMAL = "normal"
    GAMMA = "gamma"
    EXPONENTIAL = "exponential"

    @classmethod
    def from_name(cls, name: str) -> "Family":
        try:
            return cls(name.lower())
        except ValueError:
            valid = ", ".join(f.value for f in cls)
            raise DomainError(
                f"unknown distribution family {name!r}; expected one of: {valid}"
            ) from None


# number of parameters per family
_N_PARAMS = {
    Family.BETA: 2,
    Family.NORMAL: 2,
    Family.GAMMA: 2,
    Family.EXPONENTIAL: 1,
}


@dataclass(frozen=True)
class DistributionSpec:
    """A fully parameterized continuous distribution.

    Parameter order: beta(alpha>0, beta>0), normal(mu, sigma>0),
    gamma(shape>0, rate>0), exponential(rate>0).
    """

    family: Family
    params: tuple[float, ...]

    def __post_init__(self):
        family = Family(self.family)
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "params", params)
        if len(params) != _N_PARAMS[family]:
            raise DomainError(
                f"{family.value} takes {_N_PARAMS[family]} parameters, "
                f"got {len(params)}"
            )
        if not all(math.isfinite(p) for p in params):
            raise DomainError(f"non-finite parameter in {params}")
        if family is Family.BETA and (params[0] <= 0 or params[1] <= 0):
            raise DomainError(f"beta requires alpha>0 and beta>0, got {params}")
        if family is Family.NORMAL and params[1] <= 0:
            raise DomainError(f"normal requires sigma>0, got sigma={params[1]}")
        if family is Family.GAMMA and (params[0] <= 0 or params[1] <= 0):
            raise DomainError(f"gamma requires shape>0 and rate>0, got {params}")
        if family is Family.EXPONENTIAL and params[0] <= 0:
            raise DomainError(f"exponential requires rate>0, got rate={params[0]}")

    @property
    def support(self) -> tuple[float, float]:
        if self.family is Family.BETA:
            return (0.0, 1.0)
        if self.family is Family.NORMAL:
            return (-math.inf, math.inf)
        return (0.0, math.inf)


def _check_finite(x, what: str):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"non-finite {what}: {x!r}")
    return arr


def cdf(spec: DistributionSpec, x):
    """Cumulative distribution function Pr[X <= x].

    Returns 0 below the support and 1 above it; continuous on the support.
    """
    xv = _check_finite(x, "x")
    fam, p = spec.family, spec.params
    if fam is Family.BETA:
        out = special.betainc(p[0], p[1], np.clip(xv, 0.0, 1.0))
    elif fam is Family.NORMAL:
        out = special.ndtr((xv - p[0]) / p[1])
    elif fam is Family.GAMMA:
        out = np.where(xv > 0.0, special.gammainc(p[0], p[1] * np.maximum(xv, 0.0)), 0.0)
    else:  # exponential
        out = np.where(xv > 0.0, -np.expm1(-p[0] * np.maximum(xv, 0.0)), 0.0)
    return out if isinstance(x, np.ndarray) else float(out)


def pdf(spec: DistributionSpec, x):
    """Probability density function; 0 outside the support."""
    xv = _check_finite(x, "x")
    fam, p = spec.family, spec.params
    with np.errstate(divide="ignore", invalid="ignore"):
        if fam is Family.BETA:
            a, b = p
            inside = (xv > 0.0) & (xv < 1.0)
            xs = np.where(inside, xv, 0.5)
            logpdf = (
                (a - 1.0) * np.log(xs)
                + (b - 1.0) * np.log1p(-xs)
                - special.betaln(a, b)
            )
            out = np.where(inside, np.exp(logpdf), 0.0)
        elif fam is Family.NORMAL:
            mu, sigma = p
            z = (xv - mu) / sigma
            out = np.exp(-0.5 * z * z) / (sigma * math.sqrt(2.0 * math.pi))
        elif fam is Family.GAMMA:
            shape, rate = p
            inside = xv > 0.0
            xs = np.where(inside, xv, 1.0)
            logpdf = (
                shape * np.log(rate)
                + (shape - 1.0) * np.log(xs)
                - rate * xs
                - special.gammaln(shape)
            )
            out = np.where(inside, np.exp(logpdf), 0.0)
        else:  # exponential
            rate = p[0]
            out = np.where(xv >= 0.0, rate * np.exp(-rate * np.maximum(xv, 0.0)), 0.0)
    return out if isinstance(x, np.ndarray) else float(out)


def quantile(spec: DistributionSpec, p):
    """Inverse CDF: the x with cdf(spec, x) = p, for p strictly in (0, 1)."""
    pv = np.asarray(p, dtype=float)
    if not np.all((pv > 0.0) & (pv < 1.0)):
        raise DomainError(f"quantile probability must be in (0, 1), got {p!r}")
    fam, par = spec.family, spec.params
    if fam is Family.BETA:
        out = special.betaincinv(par[0], par[1], pv)
    elif fam is Family.NORMAL:
        out = par[0] + par[1] * special.ndtri(pv)
    elif fam is Family.GAMMA:
        out = special.gammaincinv(par[0], pv) / par[1]
    else:  # exponential: closed form -log(1-p)/rate
        out = -np.log1p(-pv) / par[0]
    return out if isinstance(p, np.ndarray) else float(out)


def std_normal_cdf(z):
    """Standard normal CDF Phi(z)."""
    zv = np.asarray(z, dtype=float)
    out = special.ndtr(zv)
    return out if isinstance(z, np.ndarray) else float(out)


def std_normal_quantile(p):
    """Inverse standard normal CDF, for p strictly in (0, 1)."""
    pv = np.asarray(p, dtype=float)
    if not np.all((pv > 0.0) & (pv < 1.0)):
        raise DomainError(f"probability must be in (0, 1), got {p!r}")
    out = special.ndtri(pv)
    return out if isinstance(p, np.ndarray) else float(out)
