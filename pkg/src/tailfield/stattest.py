"""Test of tail copula stationarity on the grid ``{r / N}``.

For each centre ``r0`` the local statistic averages the pairwise empirical
tail dependence coefficients ``R_hat(r/N, r0/N; 1, 1)`` over ``1 <= |r - r0| <= Delta``;
the test statistic is ``sqrt(k)`` times the range of these averages. Its null
limit is the range of a Gaussian vector whose covariance is a linear image
of the covariance of the tail empirical process, estimated from the ranks
or computed in closed form for the two example models.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import core, mvn, sim, theory
from .errors import DegenerateDataError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_ALPHAS = (0.01, 0.05, 0.10)
DEFAULT_TEST_TOL = 1e-3


@dataclass(frozen=True)
class TestConfig:
    """Tuning of a single test.

    ``eta`` defaults to ``k**(-1/4)``; ``mvn_tol`` is the error target of the
    range distribution function used for the p-value.
    """

    __test__ = False  # not a pytest class

    k: float
    Delta: int
    eta: float | None = None
    mvn_tol: float = DEFAULT_TEST_TOL
    mvn_max_points: int = mvn.DEFAULT_MAX_POINTS
    mvn_seed: int = 0
    ridge_floor: float = 1e-8
    toeplitz: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0):
            raise ValidationError(f"k must be positive, got {self.k}")
        if int(self.Delta) != self.Delta or self.Delta < 1:
            raise ValidationError(f"Delta must be a positive integer, got {self.Delta}")
        object.__setattr__(self, "Delta", int(self.Delta))
        if self.eta is not None and not self.eta > 0:
            raise ValidationError(f"eta must be positive, got {self.eta}")
        if not self.mvn_tol > 0:
            raise ValidationError("mvn_tol must be positive")

    @property
    def bandwidth(self):
        return core.default_bandwidth(self.k) if self.eta is None else float(self.eta)

    def validate_for(self, n, N):
        if self.k > n:
            raise ValidationError(f"k={self.k} exceeds n={n}")
        if not self.Delta < N / 2:
            raise ValidationError(f"Delta={self.Delta} must be below N/2={N / 2}")

    def as_dict(self):
        return {"k": self.k, "Delta": self.Delta, "eta": self.bandwidth,
                "mvn_tol": self.mvn_tol, "mvn_max_points": self.mvn_max_points,
                "mvn_seed": self.mvn_seed, "ridge_floor": self.ridge_floor,
                "toeplitz": self.toeplitz}


@dataclass
class TestResult:
    """Outcome of :func:`stationarity_test`; reject at level alpha iff ``p_value <= alpha``."""

    __test__ = False

    D: float
    I_hat: np.ndarray
    Sigma_hat: np.ndarray
    p_value: float
    scaled_statistic: int
    diagnostics: dict = field(default_factory=dict)

    def rejects(self, alpha):
        return self.p_value <= alpha

    def as_dict(self):
        return {"D": self.D, "I_hat": self.I_hat.tolist(),
                "Sigma_hat": self.Sigma_hat.tolist(), "p_value": self.p_value,
                "scaled_statistic": self.scaled_statistic,
                "diagnostics": self.diagnostics}


def _check_grid(grid, Delta):
    if not grid.is_uniform():
        raise ValidationError("the test needs the uniform grid {r/N : r = 0..N}")
    N = grid.N
    if N < 3:
        raise ValidationError(f"need N >= 3, got {N}")
    if int(Delta) != Delta or not 1 <= Delta < N / 2:
        raise ValidationError(f"Delta must be an integer in [1, N/2), got {Delta}")
    return N


def centres(N, Delta):
    return np.arange(Delta, N - Delta + 1)


def neighbour_pairs(N, Delta):
    """Ordered pairs ``(r, r0)`` entering the local statistics, grouped by ``r0``."""
    return [(r, r0) for r0 in centres(N, Delta)
            for r in range(r0 - Delta, r0 + Delta + 1) if r != r0]


def _averaging_matrix(N, Delta):
    pairs = neighbour_pairs(N, Delta)
    B = np.zeros((len(centres(N, Delta)), len(pairs)))
    for p, (_, r0) in enumerate(pairs):
        B[r0 - Delta, p] = 1.0 / (2 * Delta)
    return B


def _pair_counts(ranks, k):
    e = core.exceedances(ranks, k, 1.0).astype(np.int64)
    return e.T @ e


def integral_statistic(ranks, k, Delta):
    """Local averages of pairwise tail dependence, one per centre ``r0 = Delta..N-Delta``."""
    N = _check_grid(ranks.grid, Delta)
    if not 0 < k <= ranks.n:
        raise ValidationError(f"k must lie in (0, n], got {k}")
    pt = core.pairwise_tdc_matrix(ranks, k)
    return np.array([
        sum(pt[r, r0] for r in range(r0 - Delta, r0 + Delta + 1) if r != r0) / (2 * Delta)
        for r0 in centres(N, Delta)])


def test_statistic(I_hat, k):
    """``sqrt(k) * (max - min)`` of the local statistics."""
    I_hat = np.asarray(I_hat, dtype=float)
    if I_hat.size == 0:
        raise ValidationError("empty statistic vector")
    return float(np.sqrt(k) * (I_hat.max() - I_hat.min()))


test_statistic.__test__ = False


def scaled_statistic(ranks, k, Delta):
    """The integer ``2 Delta sqrt(k) D``, computed from the exact counts.

    ``2 Delta k I_hat(r0)`` is a sum of joint exceedance counts, so the
    scaled statistic is a difference of two integers.
    """
    N = _check_grid(ranks.grid, Delta)
    counts = _pair_counts(ranks, k)
    sums = [sum(int(counts[r, r0]) for r in range(r0 - Delta, r0 + Delta + 1) if r != r0)
            for r0 in centres(N, Delta)]
    return max(sums) - min(sums)


def _lag_derivatives(fd, Delta):
    """Average first-coordinate difference quotients over each signed lag."""
    m = fd.shape[0]
    return {h: float(np.mean(np.diagonal(fd, offset=h)))
            for h in range(-Delta, Delta + 1) if h != 0 and abs(h) < m}


def _transform(N, Delta, rdot):
    """Matrix taking ``(W(pairs), W(singles))`` to ``V``.

    ``rdot(r, r0, j)`` supplies the partial derivatives of each pair.
    """
    pairs = neighbour_pairs(N, Delta)
    P = len(pairs)
    A = np.zeros((P, P + N + 1))
    for p, (r, r0) in enumerate(pairs):
        A[p, p] = 1.0
        A[p, P + r] -= rdot(r, r0, 1)
        A[p, P + r0] -= rdot(r, r0, 2)
    return _averaging_matrix(N, Delta) @ A


def toeplitz_project(S):
    """Replace every diagonal of ``S`` by its mean."""
    m = S.shape[0]
    T = np.empty_like(S)
    idx = np.arange(m)
    for h in range(m):
        v = 0.5 * (np.mean(np.diagonal(S, h)) + np.mean(np.diagonal(S, -h)))
        T[idx[: m - h], idx[h:]] = v
        T[idx[h:], idx[: m - h]] = v
    return T


def _finish_covariance(S, toeplitz, ridge_floor):
    S = 0.5 * (S + S.T)
    diag = {}
    if toeplitz:
        T = toeplitz_project(S)
        diag["toeplitz_deviation"] = float(np.linalg.norm(S - T))
        S = T
    lam = float(np.linalg.eigvalsh(S)[0])
    ridge = 0.0
    if lam <= 0.0:
        ridge = abs(lam) + ridge_floor
        S = S + ridge * np.eye(S.shape[0])
    diag["ridge"] = ridge
    diag["min_eigenvalue"] = lam
    return S, diag


def estimate_VN_covariance(ranks, config, full_output=False):
    """Rank-based estimate of the covariance of the limit vector ``V``.

    Tail empirical covariances come from joint exceedance counts at the unit
    point in dimensions two to four. Partial derivatives are central
    differences, clamped to [0, 1] and averaged over all ordered pairs with
    the same lag. The result is made Toeplitz by diagonal averaging and
    ridge-regularized if that broke positive definiteness.
    """
    N = _check_grid(ranks.grid, config.Delta)
    config.validate_for(ranks.n, N)
    k = config.k
    e = core.exceedances(ranks, k, 1.0)
    if not e.any():
        raise DegenerateDataError("no tail exceedances at the unit point",
                                  {"k": k, "n": ranks.n})
    pairs = neighbour_pairs(N, config.Delta)
    z = np.hstack([np.column_stack([e[:, r] & e[:, r0] for r, r0 in pairs]), e]).astype(float)
    C = z.T @ z / k
    lag = _lag_derivatives(core.partial_derivative_matrix(ranks, k, config.bandwidth),
                           config.Delta)

    def rdot(r, r0, j):
        # d/dx_1 of R_{r,r0} sits at signed lag r0 - r; d/dx_2 equals d/dx_1 of R_{r0,r}
        return lag[r0 - r] if j == 1 else lag[r - r0]

    M = _transform(N, config.Delta, rdot)
    S, diag = _finish_covariance(M @ C @ M.T, config.toeplitz, config.ridge_floor)
    diag["lag_derivatives"] = {str(h): v for h, v in sorted(lag.items())}
    if not np.all(np.isfinite(S)):
        raise DegenerateDataError("covariance estimate is not finite", diag)
    return (S, diag) if full_output else S


def theoretical_VN_covariance(model, N, Delta, tol=1e-6):
    """Covariance of ``V`` under the Smith model or the Pareto process."""
    model = theory.Model.parse(model)
    grid = sim.Grid.uniform(N)
    _check_grid(grid, Delta)
    loc = grid.locations
    R, Rdot = theory.model_providers(model, tol=tol)
    members = list(neighbour_pairs(N, Delta)) + [(r,) for r in range(N + 1)]
    C = np.empty((len(members), len(members)))
    for a in range(len(members)):
        for b in range(a, len(members)):
            C[a, b] = C[b, a] = R(tuple(loc[list(members[a] + members[b])]))
    M = _transform(N, Delta, lambda r, r0, j: Rdot(loc[r], loc[r0], j))
    S = M @ C @ M.T
    return 0.5 * (S + S.T)


def limit_covariance_from_expansion(R, Rdot, locations, Delta):
    """Covariance of ``V`` assembled entry by entry from :func:`theory.hatW_covariance`.

    Slow reference path for checking the matrix assembly.
    """
    N = len(locations) - 1
    pairs = neighbour_pairs(N, Delta)
    W = np.empty((len(pairs), len(pairs)))
    for a, (r, r0) in enumerate(pairs):
        for b, (q, q0) in enumerate(pairs):
            W[a, b] = theory.hatW_covariance(locations[r], locations[r0],
                                             locations[q], locations[q0], R, Rdot)
    B = _averaging_matrix(N, Delta)
    return B @ W @ B.T


def p_value(D, Sigma, tol=DEFAULT_TEST_TOL, max_points=mvn.DEFAULT_MAX_POINTS, seed=0):
    """``1 - F(D; Sigma)`` with ``F`` the law of the range of ``N(0, Sigma)``."""
    if D <= 0:
        return 1.0, None
    res = mvn.range_cdf(D, Sigma, tol=tol, max_points=max_points, seed=seed, full_output=True)
    return float(min(max(1.0 - res.value, 0.0), 1.0)), res


def stationarity_test(sample, config):
    """Run the stationarity test on a sample (or its :class:`core.RankMatrix`)."""
    ranks = sample if isinstance(sample, core.RankMatrix) else core.compute_ranks(sample)
    N = _check_grid(ranks.grid, config.Delta)
    config.validate_for(ranks.n, N)
    I_hat = integral_statistic(ranks, config.k, config.Delta)
    D = test_statistic(I_hat, config.k)
    Sigma, diag = estimate_VN_covariance(ranks, config, full_output=True)
    p, res = p_value(D, Sigma, config.mvn_tol, config.mvn_max_points, config.mvn_seed)
    diag["ties"] = ranks.ties
    diag["mvn_error_estimate"] = 0.0 if res is None else res.error_estimate
    diag["mvn_budget_exceeded"] = False if res is None else res.budget_exceeded
    diag["mvn_points_used"] = 0 if res is None else res.points_used
    return TestResult(D, I_hat, Sigma, p, scaled_statistic(ranks, config.k, config.Delta), diag)


@dataclass
class ExperimentResult:
    """Replication output of :func:`monte_carlo_experiment`, keyed by theta."""

    model: str
    thetas: list
    alphas: tuple
    settings: dict
    p_values: dict
    statistics: dict
    scaled: dict
    ridge_count: dict

    def rejection_rate(self, theta, alpha):
        p = np.asarray(self.p_values[theta])
        return float(np.mean(p <= alpha))

    def summary_rows(self):
        """``(theta, alpha, reject_rate, se)`` with binomial standard errors."""
        rows = []
        for theta in self.thetas:
            reps = len(self.p_values[theta])
            for alpha in self.alphas:
                rate = self.rejection_rate(theta, alpha)
                rows.append((theta, alpha, rate, math.sqrt(rate * (1 - rate) / reps)))
        return rows

    def as_dict(self):
        key = lambda th: repr(float(th))  # noqa: E731
        return {"model": self.model, "thetas": list(map(float, self.thetas)),
                "alphas": list(self.alphas), "settings": self.settings,
                "p_values": {key(t): list(map(float, v)) for t, v in self.p_values.items()},
                "statistics": {key(t): list(map(float, v)) for t, v in self.statistics.items()},
                "scaled_statistics": {key(t): list(map(int, v)) for t, v in self.scaled.items()},
                "ridge_count": {key(t): int(v) for t, v in self.ridge_count.items()},
                "summary": [dict(zip(("theta", "alpha", "reject_rate", "se"), row))
                            for row in self.summary_rows()]}


def replication_seed(seed, theta, rep):
    """Seed of one replication; independent of how many reps or thetas are run."""
    return np.random.SeedSequence([int(seed), int(round(theta * 1_000_000)), int(rep)])


def run_replication(model, theta, n, N, config, seed, rep, window_halfwidth=sim.DEFAULT_WINDOW):
    """Simulate one sample on the distorted grid and test it at the nominal grid."""
    nominal = sim.Grid.uniform(N)
    grid = sim.distort_grid(nominal, theta)
    ss = replication_seed(seed, theta, rep)
    if theory.Model.parse(model) is theory.Model.SMITH:
        sample = sim.simulate_smith(n, grid, window_halfwidth=window_halfwidth, seed=ss)
    else:
        sample = sim.simulate_pareto(n, grid, seed=ss)
    res = stationarity_test(sample.with_grid(nominal), config)
    return res.p_value, res.D, res.scaled_statistic, res.diagnostics["ridge"] > 0


def _run_chunk(args):
    model, theta, n, N, config, seed, reps, window = args
    return [run_replication(model, theta, n, N, config, seed, rep, window) for rep in reps]


def monte_carlo_experiment(model, theta_list, n, k, N, Delta, reps, seed, alphas=DEFAULT_ALPHAS,
                           config=None, jobs=1, window_halfwidth=sim.DEFAULT_WINDOW,
                           rep_offset=0):
    """Size and power of the test by simulation.

    For each ``theta`` the model is simulated on the distorted grid
    ``f_theta(r/N)`` but analysed as if observed at ``r/N``. Replications are
    seeded individually, so results do not depend on ``jobs``.
    """
    if int(reps) != reps or reps < 1:
        raise ValidationError(f"reps must be a positive integer, got {reps}")
    model = theory.Model.parse(model).value
    config = config or TestConfig(k=k, Delta=Delta)
    if config.k != k or config.Delta != Delta:
        raise ValidationError("config disagrees with k / Delta")
    config.validate_for(n, N)
    thetas = [float(t) for t in theta_list]
    for t in thetas:
        sim.distortion(0.0, t)  # validates theta
    p_values, stats, scaled, ridges = {}, {}, {}, {}
    rep_ids = list(range(rep_offset, rep_offset + int(reps)))
    for theta in thetas:
        if jobs > 1:
            chunks = [rep_ids[i::jobs] for i in range(jobs)]
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                parts = list(pool.map(_run_chunk, [(model, theta, n, N, config, seed, c,
                                                    window_halfwidth) for c in chunks]))
            by_rep = {}
            for c, part in zip(chunks, parts):
                by_rep.update(zip(c, part))
            out = [by_rep[r] for r in rep_ids]
        else:
            out = _run_chunk((model, theta, n, N, config, seed, rep_ids, window_halfwidth))
        p_values[theta] = np.array([o[0] for o in out])
        stats[theta] = np.array([o[1] for o in out])
        scaled[theta] = np.array([o[2] for o in out], dtype=np.int64)
        ridges[theta] = int(sum(o[3] for o in out))
        logger.info("theta=%g: rejection rate %.3f at 0.05", theta,
                    float(np.mean(p_values[theta] <= 0.05)))
    settings = {"n": n, "k": k, "N": N, "Delta": Delta, "reps": int(reps), "seed": int(seed),
                "rep_offset": int(rep_offset), "window_halfwidth": window_halfwidth,
                **{f"config_{a}": b for a, b in config.as_dict().items()}}
    return ExperimentResult(model, thetas, tuple(alphas), settings, p_values, stats, scaled,
                            ridges)
