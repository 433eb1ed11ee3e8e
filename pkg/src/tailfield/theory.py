"""Closed-form tail copulas of the Smith model and the Pareto process.

Both models have bivariate tail copulas of Husler-Reiss form with parameter
``a = |s - t|`` (Smith, unit kernel variance) or ``a = sqrt(|s - t|)``
(Pareto). Higher-order coefficients at the unit point come from
``E[min_j exp(X_j - var(X_j)/2)]`` for a Gaussian vector ``X``.
"""

from __future__ import annotations

import enum
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from .errors import NumericalError, ValidationError
from .mvn import mvn_cdf, regularize_covariance

_SQRT2 = np.sqrt(2.0)


class Model(str, enum.Enum):
    SMITH = "smith"
    PARETO = "pareto"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"unknown model {value!r}") from None


def norm_sf(x):
    """Standard normal survival function via ``erfc``."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)


def norm_cdf(x):
    return norm_sf(-np.asarray(x, dtype=float))


def hr_parameter(model, s, t):
    """Husler-Reiss parameter of the pair ``(s, t)``."""
    gap = abs(float(s) - float(t))
    return gap if Model.parse(model) is Model.SMITH else np.sqrt(gap)


def bivariate_R(model, s, t, x, y):
    """Bivariate tail copula ``R_{s,t}(x, y)``."""
    x, y = float(x), float(y)
    if x < 0 or y < 0:
        raise ValidationError("tail copula arguments must be nonnegative")
    a = hr_parameter(model, s, t)
    if x == 0.0 or y == 0.0:
        return 0.0
    if a == 0.0:
        return min(x, y)
    lr = np.log(x / y)
    with np.errstate(over="ignore"):  # a -> 0 saturates the tails, giving min(x, y)
        return float(x * norm_sf(a / 2 + lr / a) + y * norm_sf(a / 2 - lr / a))


def husler_reiss_partial(model, s, t, j, x, y):
    """Partial derivative of :func:`bivariate_R` in coordinate ``j``.

    For ``s == t`` the tail copula is ``min(x, y)``; on the diagonal the
    value 1/2 (the limit as the locations merge) is returned.
    """
    if j not in (1, 2):
        raise ValidationError(f"j must be 1 or 2, got {j}")
    x, y = float(x), float(y)
    if x < 0 or y < 0:
        raise ValidationError("tail copula arguments must be nonnegative")
    if j == 2:
        x, y = y, x
    a = hr_parameter(model, s, t)
    if a == 0.0:
        if x == y:
            return 0.5
        return 1.0 if x < y else 0.0
    if x == 0.0:
        raise ValidationError("partial derivative needs a positive coordinate")
    if y == 0.0:
        return 0.0
    with np.errstate(over="ignore"):
        return float(norm_sf(a / 2 + np.log(x / y) / a))


def _distinct(t):
    t = np.asarray(t, dtype=float).ravel()
    if t.size == 0:
        raise ValidationError("need at least one location")
    return t


def smith_dvariate_R(t):
    """``R_t(1)`` for the Smith model: ``2 Phi_bar(range(t) / 2)``."""
    t = _distinct(t)
    return float(2.0 * norm_sf((t.max() - t.min()) / 2.0))


def gaussian_min_exp(gamma, tol=1e-6, seed=0, full_output=False):
    """``E[min_j exp(X_j - gamma_jj / 2)]`` for ``X ~ N(0, gamma)``.

    Splitting on the index attaining the minimum turns the expectation into
    a sum of ``d`` normal orthant probabilities of dimension ``d - 1`` in the
    differences ``X_j - X_k``. Singular ``gamma`` gets a ``1e-10 * trace``
    ridge; with ``full_output`` the pair ``(value, diagnostics)`` is returned.
    """
    gamma, ridge = regularize_covariance(gamma, "gamma")
    d = gamma.shape[0]
    if d < 2:
        raise ValidationError("gaussian_min_exp needs dimension at least 2")
    diag = np.diag(gamma)
    total = 0.0
    err = 0.0
    for j in range(d):
        others = [k for k in range(d) if k != j]
        cov = (gamma[j, j] - gamma[j, others][:, None] - gamma[others, j][None, :]
               + gamma[np.ix_(others, others)])
        var = diag[j] + diag[others] - 2.0 * gamma[j, others]
        res = mvn_cdf(np.full(d - 1, -np.inf), -0.5 * var, cov, tol=tol / d, seed=seed)
        total += res.value
        err += res.error_estimate
    if full_output:
        return total, {"ridge": ridge, "error_estimate": err}
    return total


def _pareto_key(t):
    t = np.sort(_distinct(t))
    return tuple(np.round(t - t[0], 12))


@lru_cache(maxsize=None)
def _pareto_R_cached(key, tol):
    t = np.asarray(key) + 1.0  # independent increments: shift is free, keeps gamma PD
    return gaussian_min_exp(np.minimum.outer(t, t), tol=tol)


def pareto_dvariate_R(t, tol=1e-6):
    """``R_t(1)`` for the Pareto process, ``E[min_j B(t_j)]``."""
    t = _distinct(t)
    if len(np.unique(t)) != len(t):
        raise ValidationError("locations must be distinct")
    if len(t) == 1:
        return 1.0
    return _pareto_R_cached(_pareto_key(t), tol)


def tail_coefficient(model, locations, tol=1e-6):
    """``R_t(1)`` for any tuple of locations; repeated ones are merged."""
    t = np.unique(np.asarray(locations, dtype=float))
    if len(t) == 1:
        return 1.0
    if Model.parse(model) is Model.SMITH:
        return smith_dvariate_R(t)
    return pareto_dvariate_R(t, tol=tol)


def hatW_covariance(s, t, s2, t2, R, Rdot):
    """Covariance of the limit tail copula process at ``(s, t)`` and ``(s2, t2)``.

    ``R`` maps a tuple of locations to the tail coefficient at the unit point
    and ``Rdot(s, t, j)`` gives the partial derivatives at (1, 1).
    """
    if s == t or s2 == t2:
        raise ValidationError("pairs must consist of distinct locations")
    a1, a2 = Rdot(s, t, 1), Rdot(s, t, 2)
    b1, b2 = Rdot(s2, t2, 1), Rdot(s2, t2, 2)
    return (R((s, t, s2, t2)) - b1 * R((s, t, s2)) - b2 * R((s, t, t2))
            - a1 * R((s, s2, t2)) + a1 * b1 * R((s, s2)) + a1 * b2 * R((s, t2))
            - a2 * R((t, s2, t2)) + a2 * b1 * R((t, s2)) + a2 * b2 * R((t, t2)))


def model_providers(model, tol=1e-6):
    """``(R, Rdot)`` callables for :func:`hatW_covariance` under ``model``."""
    model = Model.parse(model)

    def R(locs):
        return tail_coefficient(model, locs, tol=tol)

    def Rdot(s, t, j):
        return husler_reiss_partial(model, s, t, j, 1.0, 1.0)

    return R, Rdot


def rho2(model, s, x, t, y):
    """Standard deviation semimetric between ``(s, x)`` and ``(t, y)``."""
    if x < 0 or y < 0:
        raise ValidationError("arguments must be nonnegative")
    sq = x - 2.0 * bivariate_R(model, s, t, x, y) + y
    if sq < -1e-12:
        raise NumericalError(f"negative squared distance {sq}")
    return float(np.sqrt(max(sq, 0.0)))
