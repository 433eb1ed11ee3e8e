"""Seeded samplers for the Smith model and the Pareto process on a grid.

Every trajectory draws from its own child of a :class:`numpy.random.SeedSequence`,
so a sample is identical whatever order (or process) its rows are built in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

SMITH = "smith"
PARETO = "pareto"

DEFAULT_WINDOW = 5.0
MIN_WINDOW = 4.0
_SMITH_BATCH = 32
_F0 = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing observation locations in [0, 1]."""

    locations: np.ndarray

    def __post_init__(self):
        loc = np.array(self.locations, dtype=float).ravel()
        if loc.size == 0:
            raise ValidationError("grid must have at least one location")
        if not np.all(np.isfinite(loc)) or loc.min() < 0.0 or loc.max() > 1.0:
            raise ValidationError("grid locations must lie in [0, 1]")
        if np.any(np.diff(loc) <= 0):
            raise ValidationError("grid locations must be strictly increasing")
        loc.setflags(write=False)
        object.__setattr__(self, "locations", loc)

    @classmethod
    def uniform(cls, N):
        """The grid ``{r / N : r = 0, ..., N}``."""
        if int(N) != N or N < 1:
            raise ValidationError(f"N must be a positive integer, got {N}")
        N = int(N)
        return cls(np.arange(N + 1) / N)

    @property
    def N(self):
        return len(self.locations) - 1

    def __len__(self):
        return len(self.locations)

    def __eq__(self, other):
        return isinstance(other, Grid) and np.array_equal(self.locations, other.locations)

    def __hash__(self):
        return hash(self.locations.tobytes())

    def is_uniform(self, atol=1e-12):
        if len(self) < 2:
            return False
        return bool(np.allclose(self.locations, np.arange(len(self)) / self.N, rtol=0, atol=atol))


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """``n`` trajectories observed on a common grid (one row each)."""

    values: np.ndarray
    grid: Grid
    seed: dict | None = None
    model_tag: str = "data"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1:
            raise ValidationError("values must be a matrix with at least one row")
        if values.shape[1] != len(self.grid):
            raise ValidationError(
                f"{values.shape[1]} columns but {len(self.grid)} grid locations")
        if not np.all(np.isfinite(values)):
            raise ValidationError("sample contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self):
        return self.values.shape[0]

    def with_grid(self, grid):
        """Same trajectories, relabelled with other (nominal) locations."""
        return FunctionalSample(self.values, grid, self.seed, self.model_tag,
                                {**self.meta, "true_locations": self.grid.locations.tolist()})


def _seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if seed is None:
        return np.random.SeedSequence()
    return np.random.SeedSequence(seed)


def seed_record(ss):
    """JSON-friendly description of a seed sequence."""
    entropy = ss.entropy
    if isinstance(entropy, (list, tuple)) or hasattr(entropy, "tolist"):
        entropy = [int(e) for e in np.atleast_1d(entropy)]
    else:
        entropy = int(entropy)
    return {"entropy": entropy, "spawn_key": [int(s) for s in ss.spawn_key]}


def _row_generators(n, seed):
    ss = _seed_sequence(seed)
    return ss, [np.random.Generator(np.random.PCG64(child)) for child in ss.spawn(n)]


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n}")
    return int(n)


def _as_grid(grid):
    return grid if isinstance(grid, Grid) else Grid(grid)


def pareto_row(rng, locations):
    """One trajectory ``Y * exp(W(t) - t/2)`` of the Pareto process."""
    y = 1.0 / (1.0 - rng.random())
    steps = np.diff(locations, prepend=0.0)
    w = np.cumsum(rng.standard_normal(len(locations)) * np.sqrt(steps))
    return y * np.exp(w - 0.5 * locations)


def simulate_pareto(n, grid, seed=None):
    """Draw ``n`` independent Pareto-process trajectories on ``grid``.

    Each row is ``Y * B(t)`` with ``Y`` standard Pareto and ``B`` a
    unit-mean geometric Brownian motion, built from exact Gaussian increments
    between consecutive locations.
    """
    n = _check_n(n)
    grid = _as_grid(grid)
    ss, gens = _row_generators(n, seed)
    values = np.vstack([pareto_row(g, grid.locations) for g in gens])
    return FunctionalSample(values, grid, seed_record(ss), PARETO)


def smith_row(rng, locations, window_halfwidth=DEFAULT_WINDOW, history=None):
    """One Smith-model trajectory with a standard normal kernel.

    Poisson points ``(S_j, Y_j)`` with ``S_j`` uniform on
    ``[-A, 1 + A]`` arrive in increasing ``Y_j``; the intensity correction
    makes the contribution of point ``j`` equal to ``w / Gamma_j * f(S_j - u)``
    where ``w = 2A + 1``. Points are consumed until ``w f(0) / Gamma_j`` drops
    below the smallest running maximum over the grid, after which no further
    point can change the trajectory.

    If ``history`` is a list, the running maximum after each consumed point
    is appended to it.
    """
    width = 2.0 * window_halfwidth + 1.0
    running = np.zeros(len(locations))
    gamma = 0.0
    while True:
        gammas = gamma + np.cumsum(rng.standard_exponential(_SMITH_BATCH))
        centres = rng.uniform(-window_halfwidth, 1.0 + window_halfwidth, _SMITH_BATCH)
        contrib = (width * _F0 / gammas)[:, None] * np.exp(
            -0.5 * (centres[:, None] - locations[None, :]) ** 2)
        cummax = np.maximum.accumulate(np.vstack([running, contrib]), axis=0)
        # point j is irrelevant once its bound falls below the floor built so far
        bound = width * _F0 / gammas
        floor_before = cummax[:-1].min(axis=1)
        stop = np.flatnonzero(bound < floor_before)
        used = stop[0] if stop.size else _SMITH_BATCH
        if history is not None:
            history.extend(cummax[1:used + 1])
        running = cummax[used]
        if stop.size:
            return running
        gamma = gammas[-1]


def simulate_smith(n, grid, window_halfwidth=DEFAULT_WINDOW, seed=None):
    """Draw ``n`` independent Smith-model trajectories (``r = 1``, unit variance).

    Margins are unit Frechet up to the truncation of the Poisson points to
    ``[-A, 1 + A]``; with ``A >= 4`` the omitted kernel mass is negligible.
    """
    n = _check_n(n)
    grid = _as_grid(grid)
    if not window_halfwidth >= MIN_WINDOW:
        raise ValidationError(
            f"window_halfwidth must be at least {MIN_WINDOW}, got {window_halfwidth}")
    ss, gens = _row_generators(n, seed)
    values = np.vstack([smith_row(g, grid.locations, window_halfwidth) for g in gens])
    return FunctionalSample(values, grid, seed_record(ss), SMITH,
                            {"window_halfwidth": float(window_halfwidth)})


def simulate(model, n, grid, seed=None, **kwargs):
    """Dispatch to the sampler for ``model`` (``"smith"`` or ``"pareto"``)."""
    model = str(model).lower()
    if model == SMITH:
        return simulate_smith(n, grid, seed=seed, **kwargs)
    if model == PARETO:
        return simulate_pareto(n, grid, seed=seed)
    raise ValidationError(f"unknown model {model!r}")


def distortion(t, theta):
    """The map ``f_theta`` of [0, 1] onto itself; ``f_0`` is the identity
    and ``f_1(t) = sqrt((2 - t) t)``."""
    if not 0.0 <= theta <= 1.0:
        raise ValidationError(f"theta must lie in [0, 1], got {theta}")
    t = np.asarray(t, dtype=float)
    if theta == 0.0:
        return t.copy()
    root = np.sqrt((2.0 - theta * t) * theta * t + (1.0 - theta) ** 2)
    den = 1.0 - theta + root
    # both terms of the denominator are nonnegative; it vanishes only at t = 0, theta = 1
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, (2.0 - theta * t) * t / np.where(den > 0, den, 1.0), 0.0)
    # f(1) = 1 exactly, but the rounded quotient can land one ulp below
    return np.where(t == 1.0, 1.0, out)


def distort_grid(grid, theta):
    """Apply :func:`distortion` to every location of ``grid``."""
    grid = _as_grid(grid)
    loc = np.clip(distortion(grid.locations, theta), 0.0, 1.0)
    return Grid(loc)
