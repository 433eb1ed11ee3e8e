"""Multivariate normal rectangle probabilities and the law of the range.

Rectangle probabilities are computed with the separation-of-variables
transform of Genz (1992): the integrand is rewritten as a product of
univariate conditional probabilities over the unit cube, the variables are
reordered so that the narrowest conditional intervals come first, and the
resulting integral is evaluated with randomly shifted rank-1 lattice rules.
The spread across shifts gives the error estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ValidationError

DEFAULT_TOL = 1e-4
DEFAULT_MAX_POINTS = 200_000
DEFAULT_SHIFTS = 12

_SYMMETRY_TOL = 1e-12
_RIDGE_FACTOR = 1e-10
_FIRST_PRIMES = np.array([
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67,
    71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149,
    151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229,
])


@dataclass(frozen=True)
class MvnResult:
    """Outcome of a rectangle-probability evaluation.

    ``error_estimate`` is three standard errors across the random lattice
    shifts. ``budget_exceeded`` is set when the point budget ran out before
    the tolerance was met; ``ridge`` records any diagonal regularization.
    """

    value: float
    error_estimate: float
    points_used: int
    budget_exceeded: bool = False
    ridge: float = 0.0
    diagnostics: dict = field(default_factory=dict, compare=False)


def regularize_covariance(cov, name="covariance"):
    """Check symmetry and make ``cov`` positive definite.

    Returns ``(matrix, ridge)``. When the smallest eigenvalue is not
    positive, ``1e-10 * trace`` is added to the diagonal (plus whatever is
    needed to lift a clearly negative spectrum) and reported as ``ridge``.
    """
    cov = np.array(cov, dtype=float, copy=True)
    if cov.ndim == 0:
        cov = cov.reshape(1, 1)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] == 0:
        raise ValidationError(f"{name} must be a nonempty square matrix, got shape {cov.shape}")
    if not np.all(np.isfinite(cov)):
        raise ValidationError(f"{name} has non-finite entries")
    scale = max(float(np.max(np.abs(np.diag(cov)))), 1.0)
    if np.max(np.abs(cov - cov.T)) > _SYMMETRY_TOL * scale:
        raise ValidationError(f"{name} is not symmetric")
    cov = 0.5 * (cov + cov.T)
    lam_min = float(np.linalg.eigvalsh(cov)[0])
    max_diag = float(np.max(np.diag(cov)))
    if lam_min < -1e-10 * max(max_diag, 1e-300):
        raise ValidationError(f"{name} is not positive semidefinite (min eigenvalue {lam_min:.3g})")
    ridge = 0.0
    if lam_min <= 0.0:
        ridge = _RIDGE_FACTOR * float(np.trace(cov)) - lam_min
        if ridge <= 0.0:
            raise ValidationError(f"{name} is identically zero")
        cov[np.diag_indices_from(cov)] += ridge
    return cov, ridge


def _reorder_cholesky(a, b, cov):
    """Cholesky factor with Genz-Bretz variable prioritization.

    At each step the remaining variable with the smallest conditional
    interval probability is moved forward. Returns permuted and scaled
    limits together with the unit-diagonal-scaled factor.
    """
    m = len(a)
    a = a.copy()
    b = b.copy()
    cov = cov.copy()
    chol = np.zeros((m, m))
    y = np.zeros(m)
    for i in range(m):
        rem = np.arange(i, m)
        partial = chol[rem, :i] @ y[:i]
        sd = np.sqrt(np.maximum(cov[rem, rem] - np.sum(chol[rem, :i] ** 2, axis=1), 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = np.where(sd > 0, (a[rem] - partial) / sd, -np.inf)
            hi = np.where(sd > 0, (b[rem] - partial) / sd, np.inf)
        width = ndtr(hi) - ndtr(lo)
        j = i + int(np.argmin(width))
        if j != i:
            for arr in (a, b):
                arr[[i, j]] = arr[[j, i]]
            cov[[i, j], :] = cov[[j, i], :]
            cov[:, [i, j]] = cov[:, [j, i]]
            chol[[i, j], :] = chol[[j, i], :]
        diag = cov[i, i] - chol[i, :i] @ chol[i, :i]
        if diag <= 0.0:
            raise ValidationError("covariance is numerically singular")
        chol[i, i] = np.sqrt(diag)
        below = np.arange(i + 1, m)
        chol[below, i] = (cov[below, i] - chol[below, :i] @ chol[i, :i]) / chol[i, i]
        s = chol[i, :i] @ y[:i]
        lo = (a[i] - s) / chol[i, i]
        hi = (b[i] - s) / chol[i, i]
        p = ndtr(hi) - ndtr(lo)
        if p > 1e-300:
            phi_lo = np.exp(-0.5 * lo * lo) if np.isfinite(lo) else 0.0
            phi_hi = np.exp(-0.5 * hi * hi) if np.isfinite(hi) else 0.0
            y[i] = (phi_lo - phi_hi) / (np.sqrt(2.0 * np.pi) * p)
        else:
            y[i] = lo if np.isfinite(lo) else hi
    return a, b, chol


def _integrand(w, a, b, chol):
    """Separated integrand at points ``w`` of shape (m - 1, P)."""
    m = len(a)
    npts = w.shape[1]
    d = np.full(npts, ndtr(a[0] / chol[0, 0]))
    e = np.full(npts, ndtr(b[0] / chol[0, 0]))
    f = e - d
    ys = np.empty((m - 1, npts))
    for i in range(1, m):
        u = d + w[i - 1] * (e - d)
        ys[i - 1] = ndtri(np.clip(u, 1e-300, 1.0 - 1e-16))
        s = chol[i, :i] @ ys[:i]
        d = ndtr((a[i] - s) / chol[i, i])
        e = ndtr((b[i] - s) / chol[i, i])
        f = f * (e - d)
    return f


def mvn_cdf(lower, upper, cov, tol=DEFAULT_TOL, max_points=DEFAULT_MAX_POINTS,
            n_shifts=DEFAULT_SHIFTS, seed=0):
    """Probability that ``lower <= X <= upper`` for ``X ~ N(0, cov)``.

    Infinite limits are allowed. Coordinates unbounded on both sides are
    integrated out exactly before the lattice rule is applied.

    Parameters
    ----------
    lower, upper : array_like, shape (m,)
    cov : array_like, shape (m, m)
        Positive semidefinite; singular input is ridge-regularized.
    tol : float
        Target for ``error_estimate``.
    max_points : int
        Total lattice points (all shifts, all stages) before giving up.
    n_shifts : int
        Random shifts per stage; the error estimate uses their spread.
    seed : int
        Seed for the shifts. Fixed seeds make repeated calls identical.

    Returns
    -------
    MvnResult
    """
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    cov, ridge = regularize_covariance(cov)
    m = cov.shape[0]
    if lower.shape != (m,) or upper.shape != (m,):
        raise ValidationError("limits must match the covariance dimension")
    if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
        raise ValidationError("limits must not be NaN")
    if np.any(lower > upper):
        raise ValidationError("lower limit exceeds upper limit")
    if tol <= 0 or n_shifts < 2:
        raise ValidationError("tol must be positive and n_shifts at least 2")

    if np.any(lower == upper):
        return MvnResult(0.0, 0.0, 0, ridge=ridge)
    keep = np.isfinite(lower) | np.isfinite(upper)
    if not np.any(keep):
        return MvnResult(1.0, 0.0, 0, ridge=ridge)
    lower, upper = lower[keep], upper[keep]
    cov = cov[np.ix_(keep, keep)]
    m = len(lower)
    if m == 1:
        sd = np.sqrt(cov[0, 0])
        value = float(ndtr(upper[0] / sd) - ndtr(lower[0] / sd))
        return MvnResult(min(max(value, 0.0), 1.0), 0.0, 0, ridge=ridge)

    a, b, chol = _reorder_cholesky(lower, upper, cov)
    rng = np.random.default_rng(seed)
    gen = np.sqrt(_FIRST_PRIMES[: m - 1].astype(float)) % 1.0 if m - 1 <= len(_FIRST_PRIMES) \
        else rng.random(m - 1)

    total = 0.0
    weight = 0.0
    used = 0
    npts = 64
    error = np.inf
    while True:
        if used + npts * n_shifts > max_points:
            npts = (max_points - used) // n_shifts
            if npts < 8:
                break
        k = np.arange(1, npts + 1, dtype=float)
        if m == 2:
            base = (k / npts)[None, :]  # equispaced rule is optimal in one dimension
        else:
            base = np.outer(gen, k) % 1.0
        means = np.empty(n_shifts)
        for r in range(n_shifts):
            shift = rng.random(m - 1)[:, None]
            x = np.abs(2.0 * ((base + shift) % 1.0) - 1.0)
            means[r] = _integrand(x, a, b, chol).mean()
        used += npts * n_shifts
        var = means.var(ddof=1) / n_shifts
        est = means.mean()
        # inverse-variance pooling of stages
        var = max(var, 1e-300)
        if weight == 0.0:
            total, weight = est, 1.0 / var
        else:
            total = (total * weight + est / var) / (weight + 1.0 / var)
            weight += 1.0 / var
        error = 3.0 / np.sqrt(weight)
        if error <= tol or used >= max_points:
            break
        npts = int(npts * 1.6)
    value = float(min(max(total, 0.0), 1.0))
    exceeded = bool(error > tol)
    return MvnResult(value, float(error), int(used), budget_exceeded=exceeded, ridge=ridge)


def difference_covariance(cov, i):
    """Covariance of ``(U_j - U_i)_{j != i}`` for ``U ~ N(0, cov)``."""
    cov = np.asarray(cov, dtype=float)
    others = [j for j in range(cov.shape[0]) if j != i]
    sub = cov[np.ix_(others, others)]
    col = cov[others, i]
    return sub - col[:, None] - col[None, :] + cov[i, i]


def range_cdf(q, cov, tol=DEFAULT_TOL, max_points=DEFAULT_MAX_POINTS, seed=0,
              full_output=False):
    """Distribution function of ``max(U) - min(U)`` for ``U ~ N(0, cov)``.

    The event is split according to the index where the maximum sits, which
    gives a sum of ``m`` rectangle probabilities of dimension ``m - 1`` over
    ``[-q, 0]``. Each term gets tolerance ``tol / sqrt(m)``.

    With ``full_output`` an :class:`MvnResult` for the whole sum is returned.
    """
    q = float(q)
    if not q >= 0:
        raise ValidationError(f"q must be nonnegative, got {q}")
    cov, ridge = regularize_covariance(cov)
    m = cov.shape[0]
    if m < 2:
        raise ValidationError("range distribution needs dimension at least 2")
    if q == 0.0:
        res = MvnResult(0.0, 0.0, 0, ridge=ridge)
        return res if full_output else 0.0
    term_tol = tol / np.sqrt(m)
    lower = np.full(m - 1, -q)
    upper = np.zeros(m - 1)
    value = err = 0.0
    used = 0
    exceeded = False
    for i in range(m):
        r = mvn_cdf(lower, upper, difference_covariance(cov, i), tol=term_tol,
                    max_points=max_points, seed=seed)
        value += r.value
        err += r.error_estimate
        used += r.points_used
        exceeded |= r.budget_exceeded
    value = min(max(value, 0.0), 1.0)
    if full_output:
        return MvnResult(value, err, used, budget_exceeded=exceeded, ridge=ridge)
    return value


def default_pdf_step(tol=DEFAULT_TOL):
    """Finite-difference step with ``tol <= h**2``."""
    return float(np.sqrt(tol))


def range_pdf(q, cov, h=None, tol=DEFAULT_TOL, max_points=DEFAULT_MAX_POINTS, seed=0):
    """Density of the range by central differencing of :func:`range_cdf`.

    Both evaluations share the lattice shifts (same ``seed``) so that their
    integration errors largely cancel.
    """
    if h is None:
        h = default_pdf_step(tol)
    q = float(q)
    if not h > 0:
        raise ValidationError("step h must be positive")
    if not q > h:
        raise ValidationError(f"need q > h > 0, got q={q}, h={h}")
    hi = range_cdf(q + h, cov, tol=tol, max_points=max_points, seed=seed)
    lo = range_cdf(q - h, cov, tol=tol, max_points=max_points, seed=seed)
    return (hi - lo) / (2.0 * h)
