"""Discrete-state branching: Galton-Watson chains, their renewal
time-changes, and the branching-covariance experiment quantifying how a
shared random clock correlates subpopulations.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError
from .grids import PathGrid
from .sampling import WaitingTimeLaw, _renewal_counts
from .stats import McEstimate, estimate
from .streams import RngStream

__all__ = [
    "OffspringLaw",
    "GwPath",
    "gw_step",
    "simulate_gw",
    "simulate_time_changed_gw",
    "branching_inequality_experiment",
]


class OffspringLaw:
    """A finite-support offspring distribution on the nonnegative integers.

    Sampling uses an inverse-CDF table over the support, which is exact and
    fast for the small supports this package works with.
    """

    def __init__(self, pmf: dict[int, float]):
        if not pmf:
            raise DomainError("offspring pmf must be nonempty")
        support = []
        probs = []
        for k in sorted(pmf):
            p = float(pmf[k])
            if not isinstance(k, (int, np.integer)) or k < 0:
                raise DomainError(f"offspring counts must be integers >= 0, got {k!r}")
            if not math.isfinite(p) or p < 0.0:
                raise DomainError(f"probability for count {k} must be in [0, 1]")
            support.append(int(k))
            probs.append(p)
        total = math.fsum(probs)
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"offspring pmf sums to {total!r}, not 1")
        self.pmf = {k: p for k, p in zip(support, probs)}
        self._support = np.asarray(support, dtype=np.int64)
        self._probs = np.asarray(probs, dtype=float)
        self._cum = np.cumsum(self._probs)
        self._cum[-1] = 1.0  # guard the searchsorted upper edge
        self.mean = float(np.dot(self._support, self._probs))
        self.variance = float(
            np.dot((self._support - self.mean) ** 2, self._probs)
        )

    def __repr__(self) -> str:
        return f"OffspringLaw({self.pmf!r})"

    def sample(self, n: int, gen: np.random.Generator) -> np.ndarray:
        """Draw ``n`` offspring counts via the inverse-CDF table."""
        idx = np.searchsorted(self._cum, gen.random(n), side="right")
        return self._support[np.minimum(idx, self._support.size - 1)]


@dataclass(frozen=True)
class GwPath:
    """Population sizes along the generations of one Galton-Watson chain."""

    generations: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.generations, dtype=np.int64)
        if g.ndim != 1 or g.size == 0:
            raise PreconditionError("generations must be a nonempty 1-d array")
        if np.any(g < 0):
            raise DomainError("population sizes must be nonnegative")
        dead = np.flatnonzero(g == 0)
        if dead.size and np.any(g[dead[0]:] != 0):
            raise DomainError("population must stay absorbed at zero")
        object.__setattr__(self, "generations", g)

    def __len__(self) -> int:
        return self.generations.size


def _check_size(z, name: str = "population size") -> int:
    if not isinstance(z, (int, np.integer)) or z < 0:
        raise DomainError(f"{name} must be an integer >= 0, got {z!r}")
    return int(z)


def gw_step(z: int, law: OffspringLaw, rng: RngStream) -> int:
    """One reproduction step: the sum of ``z`` i.i.d. offspring counts."""
    z = _check_size(z)
    if z == 0:
        return 0
    return int(law.sample(z, rng.gen).sum())


def _step_population(z: np.ndarray, law: OffspringLaw, gen: np.random.Generator) -> np.ndarray:
    """Advance a vector of population sizes by one generation in lockstep."""
    alive = z > 0
    if not np.any(alive):
        return np.zeros_like(z)
    counts = z[alive]
    offspring = law.sample(int(counts.sum()), gen)
    bounds = np.concatenate(([0], np.cumsum(counts)[:-1]))
    out = np.zeros_like(z)
    out[alive] = np.add.reduceat(offspring, bounds)
    return out


def _population_at(
    j: int, law: OffspringLaw, n_gens: np.ndarray, gen: np.random.Generator
) -> np.ndarray:
    """Population size of independent chains run for per-replicate horizons.

    Chains start at ``j`` and evolve in lockstep; replicate ``i`` is frozen
    once its generation counter reaches ``n_gens[i]``.
    """
    z = np.full(n_gens.size, j, dtype=np.int64)
    g = 0
    max_g = int(n_gens.max()) if n_gens.size else 0
    while g < max_g:
        active = n_gens > g
        if not np.any(active):
            break
        z[active] = _step_population(z[active], law, gen)
        g += 1
    return z


def _gw_path(j: int, law: OffspringLaw, n_gen: int, gen: np.random.Generator) -> np.ndarray:
    path = np.empty(n_gen + 1, dtype=np.int64)
    path[0] = j
    z = j
    for g in range(1, n_gen + 1):
        if z > 0:
            z = int(law.sample(z, gen).sum())
        path[g] = z
    return path


def simulate_gw(j: int, law: OffspringLaw, n_gen: int, rng: RngStream) -> GwPath:
    """Simulate ``n_gen`` generations of a Galton-Watson chain from size ``j``."""
    j = _check_size(j, "initial size")
    if not isinstance(n_gen, (int, np.integer)) or n_gen < 0:
        raise PreconditionError(f"n_gen must be an integer >= 0, got {n_gen!r}")
    return GwPath(_gw_path(j, law, int(n_gen), rng.gen))


def simulate_time_changed_gw(
    j: int,
    law: OffspringLaw,
    wait: WaitingTimeLaw,
    t_grid,
    rng: RngStream,
) -> PathGrid:
    """Galton-Watson chain observed through a renewal clock.

    One renewal path is sampled per replicate and shared across the whole
    grid: the value at physical time t is the chain at generation N_t,
    where N_t counts the waiting times accumulated up to t.  The result is
    a step function of t.
    """
    j = _check_size(j, "initial size")
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise PreconditionError("t_grid must be a nonempty 1-d array")
    if t.size > 1 and not np.all(np.diff(t) > 0.0):
        raise PreconditionError("t_grid must be strictly increasing")
    if t[0] < 0.0:
        raise DomainError("t_grid must be nonnegative")
    gen = rng.gen
    t_max = float(t[-1])

    # One shared renewal path: accumulate arrival times until past t_max.
    arrivals = []
    elapsed = 0.0
    while elapsed <= t_max:
        w = float(wait.sample(1, gen)[0])
        elapsed += w
        if elapsed <= t_max:
            arrivals.append(elapsed)
        else:
            break
    counts = np.searchsorted(np.asarray(arrivals), t, side="right")
    path = _gw_path(j, law, int(counts[-1]), gen)
    return PathGrid(t, path[counts].astype(float))


def branching_inequality_experiment(
    j: int,
    k: int,
    lam: float,
    t: float,
    law: OffspringLaw,
    wait: WaitingTimeLaw,
    n_rep: int,
    rng: RngStream,
) -> McEstimate:
    """Monte Carlo estimate of the branching-covariance gap

        K_{j,k}(t) = E_{j+k}[exp(-lam Z_{N_t})]
                     - E_j[exp(-lam Z_{N_t})] E_k[exp(-lam Z_{N_t})].

    The first term is estimated by coupling: one shared renewal count per
    replicate drives two independent subpopulations started at ``j`` and
    ``k`` (the covariance decomposition behind the inequality).  The
    product term uses independent renewal counts.  A shared random clock
    makes the gap nonnegative; a deterministic clock makes it vanish.
    """
    j = _check_size(j, "initial size j")
    k = _check_size(k, "initial size k")
    lam = float(lam)
    if lam <= 0.0 or not math.isfinite(lam):
        raise DomainError(f"lam must be finite and positive, got {lam!r}")
    t = float(t)
    if t <= 0.0 or not math.isfinite(t):
        raise DomainError(f"t must be finite and positive, got {t!r}")
    if n_rep < 1000:
        raise PreconditionError(f"n_rep must be at least 1000, got {n_rep!r}")
    n_rep = int(n_rep)
    gen = rng.gen

    shared = _renewal_counts(wait, t, n_rep, gen)
    z1 = _population_at(j, law, shared, gen)
    z2 = _population_at(k, law, shared, gen)
    coupled = np.exp(-lam * (z1 + z2).astype(float))

    n_j = _renewal_counts(wait, t, n_rep, gen)
    n_k = _renewal_counts(wait, t, n_rep, gen)
    zj = _population_at(j, law, n_j, gen)
    zk = _population_at(k, law, n_k, gen)
    product = np.exp(-lam * zj.astype(float)) * np.exp(-lam * zk.astype(float))

    return estimate(coupled - product)
