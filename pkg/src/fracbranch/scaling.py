"""Scaling-limit convergence experiment: rescaled renewal-clocked
Galton-Watson marginals against the time-changed Feller diffusion.

The offspring family is the standard Feller-limit family: at scale k the
law is a (finitely truncated) geometric on {0, 1, 2, ...} with mean
1 - b/k, whose variance tends to 2, so the rescaled chains Z_{[k u]}/k
converge to the Feller diffusion with drift coefficient b and diffusion
coefficient c = 1 started from x0 = 1.  Composing the chain with a renewal
clock in the stable domain of attraction and rescaling time by n turns the
marginal limit into the time-changed diffusion.
"""

import math
from dataclasses import dataclass

import numpy as np

from .csbp import FellerSpec, TcProcessSpec, compose_time_change_batch
from .errors import DomainError, PreconditionError
from .gw import OffspringLaw, _population_at
from .sampling import WaitingTimeLaw, _renewal_counts
from .stats import ks_two_sample
from .streams import RngStream

__all__ = ["ConvergenceReport", "FellerLimitFamily", "scaling_limit_experiment"]

# Diffusion coefficient of the limiting Feller process for the plain
# geometric family (offspring variance -> 2 means c = 1).
_LIMIT_C = 1.0
_LIMIT_X0 = 1.0


@dataclass(frozen=True)
class ConvergenceReport:
    """KS distances between rescaled-chain and limit marginals per level."""

    levels: tuple[int, ...]
    ks_distances: tuple[float, ...]
    t: float

    def __post_init__(self):
        if len(self.levels) != len(self.ks_distances):
            raise PreconditionError("levels and distances must align")
        if any(d < 0.0 or d > 1.0 for d in self.ks_distances):
            raise DomainError("KS distances must lie in [0, 1]")


@dataclass(frozen=True)
class FellerLimitFamily:
    """Offspring laws indexed by the scale k, with a known Feller limit.

    ``law(k)`` is the geometric law with success ratio tuned to mean
    1 - b/k, truncated at a support point carrying less than 1e-18 tail
    mass; the truncation perturbs the mean far below sampling resolution.
    """

    b: float

    def __post_init__(self):
        if not math.isfinite(self.b):
            raise DomainError("b must be finite")

    def law(self, k: int) -> OffspringLaw:
        if k < 1:
            raise DomainError("scale k must be at least 1")
        m = 1.0 - self.b / k
        if m <= 0.0:
            raise DomainError(
                f"scale k={k} makes the offspring mean nonpositive for b={self.b}"
            )
        p = m / (1.0 + m)  # geometric pmf (1-p) p^i on {0, 1, ...}, mean p/(1-p)
        cap = max(60, int(math.ceil(-42.0 / math.log(p))))
        i = np.arange(cap + 1)
        probs = (1.0 - p) * p**i
        # fold the truncated tail into the cap cell
        probs[-1] = max(1.0 - float(probs[:-1].sum()), 0.0)
        return OffspringLaw({int(n): float(q) for n, q in zip(i, probs)})


def scaling_limit_experiment(
    family: FellerLimitFamily,
    wait: WaitingTimeLaw,
    beta: float,
    t: float,
    levels,
    n_rep: int,
    rng: RngStream,
    h: float = 1e-3,
) -> ConvergenceReport:
    """KS distance between the rescaled renewal-clocked chain marginal and
    the time-changed diffusion marginal, per scale level.

    At level n the chain scale is k = round(count_norming(n)), the chain
    starts from k individuals, runs for the renewal count at physical time
    n*t generations, and is rescaled by k.  The reference sample is the
    time-changed Feller marginal at t (plain Feller when beta = 1).
    """
    beta = float(beta)
    if not (0.0 < beta <= 1.0):
        raise DomainError("beta must lie in (0, 1]")
    t = float(t)
    if not (t > 0.0 and math.isfinite(t)):
        raise DomainError("t must be finite and positive")
    lv = [int(n) for n in levels]
    if not lv or any(n < 1 for n in lv) or any(
        b <= a for a, b in zip(lv, lv[1:])
    ):
        raise PreconditionError("levels must be increasing positive integers")
    if n_rep < 2:
        raise PreconditionError("n_rep must be at least 2")
    n_rep = int(n_rep)

    spec = TcProcessSpec(
        inner=FellerSpec(x0=_LIMIT_X0, b=family.b, c=_LIMIT_C), beta=beta
    )
    reference = compose_time_change_batch(
        spec, np.asarray([t]), n_rep, rng.substream(0), h=h
    )[:, 0]

    distances = []
    for i, n in enumerate(lv):
        k = max(1, int(round(wait.count_norming(n))))
        law_k = family.law(k)
        gen = rng.substream(i + 1).gen
        counts = _renewal_counts(wait, n * t, n_rep, gen)
        z = _population_at(k, law_k, counts, gen)
        distances.append(ks_two_sample(z / k, reference))
    return ConvergenceReport(
        levels=tuple(lv), ks_distances=tuple(distances), t=t
    )
