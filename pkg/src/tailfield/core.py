"""Ranks and rank-based tail dependence estimators.

All estimators count observations whose rank at location ``t_j`` exceeds
``n - k x_j + 1``. The cutoff is computed in exact rational arithmetic from
the given floats, so counts do not depend on rounding of ``k * x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .errors import ValidationError
from .sim import FunctionalSample, Grid


@dataclass(frozen=True, eq=False)
class RankMatrix:
    """Per-location ranks of a sample; each column is a permutation of 1..n."""

    ranks: np.ndarray
    grid: Grid
    ties: int = 0

    @property
    def n(self):
        return self.ranks.shape[0]

    @property
    def n_locations(self):
        return self.ranks.shape[1]


@dataclass(frozen=True)
class TailCopulaQuery:
    """Evaluation point: distinct location indices, arguments ``x`` and threshold ``k``."""

    t_indices: tuple
    x: tuple
    k: float

    def __post_init__(self):
        t = tuple(int(i) for i in np.atleast_1d(self.t_indices))
        x = tuple(float(v) for v in np.atleast_1d(self.x))
        if len(t) == 0:
            raise ValidationError("query needs at least one location")
        if len(t) != len(x):
            raise ValidationError("t_indices and x must have equal length")
        if len(set(t)) != len(t):
            raise ValidationError("query locations must be pairwise distinct")
        if not all(math.isfinite(v) and v >= 0 for v in x):
            raise ValidationError("x must be finite and nonnegative")
        if not (math.isfinite(self.k) and self.k > 0):
            raise ValidationError("k must be positive")
        object.__setattr__(self, "t_indices", t)
        object.__setattr__(self, "x", x)

    @property
    def d(self):
        return len(self.t_indices)


def compute_ranks(sample):
    """Ranks ``#{a : xi_a(t) <= xi_i(t)}`` at every location.

    Exact ties are broken by observation index (earlier row, smaller rank);
    the number of tied observations is stored in ``RankMatrix.ties``.
    Accepts a :class:`FunctionalSample` or a plain ``n x m`` array.
    """
    if isinstance(sample, FunctionalSample):
        values, grid = sample.values, sample.grid
    else:
        values = np.asarray(sample, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1:
            raise ValidationError("sample must be a nonempty matrix")
        grid = Grid(np.linspace(0.0, 1.0, values.shape[1])) if values.shape[1] > 1 \
            else Grid([0.0])
    if not np.all(np.isfinite(values)):
        raise ValidationError("sample contains non-finite values")
    n, m = values.shape
    order = np.argsort(values, axis=0, kind="stable")
    ranks = np.empty((n, m), dtype=np.int64)
    ranks[order, np.arange(m)] = np.arange(1, n + 1)[:, None]
    sorted_vals = np.take_along_axis(values, order, axis=0)
    ties = int(np.count_nonzero(np.diff(sorted_vals, axis=0) == 0))
    return RankMatrix(ranks, grid, ties)


def rank_cutoff(n, k, x):
    """Largest integer ``c`` with ``rank > c  <=>  rank > n - k x + 1``."""
    return math.floor(Fraction(n + 1) - Fraction(k) * Fraction(x))


def exceedances(ranks, k, x=1.0, t_indices=None):
    """Boolean matrix of ``rank > n - k x + 1``, one column per location.

    ``x`` is a scalar or one value per selected location.
    """
    r = ranks.ranks if t_indices is None else ranks.ranks[:, list(t_indices)]
    xs = np.broadcast_to(np.asarray(x, dtype=float), (r.shape[1],))
    cut = np.array([rank_cutoff(ranks.n, k, v) for v in xs])
    return r > cut


def _check_query(ranks, q):
    if q.k > ranks.n:
        raise ValidationError(f"k={q.k} exceeds n={ranks.n}")
    bad = [i for i in q.t_indices if not 0 <= i < ranks.n_locations]
    if bad:
        raise ValidationError(f"location index out of range: {bad}")


def empirical_tail_copula(ranks, q):
    """``(1/k) #{i : rank_i(t_j) > n - k x_j + 1 for all j}``."""
    _check_query(ranks, q)
    hit = exceedances(ranks, q.k, q.x, q.t_indices).all(axis=1)
    return np.count_nonzero(hit) / q.k


def empirical_stdf(ranks, q):
    """Union analogue of :func:`empirical_tail_copula` (some ``j`` exceeds)."""
    _check_query(ranks, q)
    hit = exceedances(ranks, q.k, q.x, q.t_indices).any(axis=1)
    return np.count_nonzero(hit) / q.k


def stdf_by_inclusion_exclusion(ranks, q):
    """Alternating sum of empirical tail copulas over nonempty subsets."""
    total = 0.0
    for size in range(1, q.d + 1):
        sign = 1.0 if size % 2 else -1.0
        for sub in combinations(range(q.d), size):
            sq = TailCopulaQuery([q.t_indices[j] for j in sub], [q.x[j] for j in sub], q.k)
            total += sign * empirical_tail_copula(ranks, sq)
    return total


def tail_empirical_df(uniforms, k, t_indices, x):
    """Tail empirical distribution with known margins.

    ``(1/k) #{i : U_i(t_j) < (k/n) x_j for all j}`` for uniforms in (0, 1).
    """
    u = np.asarray(uniforms, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    if np.any(~(u > 0)) or np.any(~(u < 1)):
        raise ValidationError("uniforms must lie strictly inside (0, 1)")
    n = u.shape[0]
    if not 0 < k <= n:
        raise ValidationError(f"k must lie in (0, n], got {k}")
    t = list(np.atleast_1d(t_indices))
    x = np.broadcast_to(np.asarray(x, dtype=float), (len(t),))
    if np.any(x < 0):
        raise ValidationError("x must be nonnegative")
    hit = (u[:, t] < (k / n) * x).all(axis=1)
    return np.count_nonzero(hit) / k


def default_bandwidth(k):
    """Finite-difference bandwidth ``k**(-1/4)``."""
    return float(k) ** -0.25


def estimate_partial_derivative(ranks, k, s_index, t_index, j, eta=None):
    """Central difference of the bivariate empirical tail copula at (1, 1).

    ``j = 1`` differentiates in the coordinate at ``s_index``, ``j = 2`` in
    the one at ``t_index``. The result is clamped to [0, 1].
    """
    eta = default_bandwidth(k) if eta is None else float(eta)
    if not eta > 0:
        raise ValidationError(f"bandwidth must be positive, got {eta}")
    if j not in (1, 2):
        raise ValidationError(f"j must be 1 or 2, got {j}")
    if s_index == t_index:
        raise ValidationError("locations must differ")
    if j == 2:
        s_index, t_index = t_index, s_index
    up = empirical_tail_copula(ranks, TailCopulaQuery((s_index, t_index), (1 + eta, 1), k))
    down = empirical_tail_copula(
        ranks, TailCopulaQuery((s_index, t_index), (max(1 - eta, 0.0), 1), k))
    return float(np.clip((up - down) / (2 * eta), 0.0, 1.0))


def partial_derivative_matrix(ranks, k, eta=None):
    """All first-coordinate difference quotients at once.

    Entry ``[s, t]`` equals ``estimate_partial_derivative(ranks, k, s, t, 1)``
    for ``s != t``; the diagonal is NaN.
    """
    eta = default_bandwidth(k) if eta is None else float(eta)
    if not eta > 0:
        raise ValidationError(f"bandwidth must be positive, got {eta}")
    base = exceedances(ranks, k, 1.0).astype(float)
    up = exceedances(ranks, k, 1 + eta).astype(float)
    down = exceedances(ranks, k, max(1 - eta, 0.0)).astype(float)
    fd = ((up - down).T @ base) / k / (2 * eta)
    fd = np.clip(fd, 0.0, 1.0)
    np.fill_diagonal(fd, np.nan)
    return fd


def pairwise_tdc_matrix(ranks, k):
    """Matrix of bivariate empirical tail copulas at (1, 1)."""
    if not 0 < k <= ranks.n:
        raise ValidationError(f"k must lie in (0, n], got {k}")
    e = exceedances(ranks, k, 1.0).astype(np.int64)
    return (e.T @ e) / k
