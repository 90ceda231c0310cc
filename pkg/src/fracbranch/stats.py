"""Monte Carlo estimates and the two-sample statistics used to verify
distributional claims.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = ["McEstimate", "ChiSquareResult", "estimate", "ks_two_sample", "chi_square_gof"]


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with its standard error; the unit of all verification."""

    mean: float
    std_error: float
    n: int

    def margin(self, n_se: float = 3.0) -> float:
        return n_se * self.std_error


def estimate(samples) -> McEstimate:
    """Sample mean and standard error (sample std over sqrt(n))."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        x = x.ravel()
    if x.size < 2:
        raise InputError("estimate needs at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise InputError("estimate requires finite samples")
    mean = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(x.size))
    return McEstimate(mean=mean, std_error=se, n=int(x.size))


def ks_two_sample(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic: the sup distance between
    the empirical distribution functions."""
    x = np.sort(np.asarray(a, dtype=float).ravel())
    y = np.sort(np.asarray(b, dtype=float).ravel())
    if x.size == 0 or y.size == 0:
        raise InputError("ks_two_sample requires nonempty samples")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InputError("ks_two_sample requires finite samples")
    pooled = np.concatenate([x, y])
    cdf_x = np.searchsorted(x, pooled, side="right") / x.size
    cdf_y = np.searchsorted(y, pooled, side="right") / y.size
    return float(np.max(np.abs(cdf_x - cdf_y)))


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int


def chi_square_gof(counts, probs, min_expected: float = 5.0) -> ChiSquareResult:
    """Pearson chi-square statistic of observed counts against cell
    probabilities.

    Trailing cells are pooled until the tail cell reaches the minimum
    expected count; every remaining cell must also reach it.  Degrees of
    freedom are cells - 1 after pooling.
    """
    o = np.asarray(counts, dtype=float).ravel()
    p = np.asarray(probs, dtype=float).ravel()
    if o.size == 0 or o.size != p.size:
        raise InputError("counts and probs must be nonempty and equal length")
    if np.any(o < 0) or np.any(o != np.floor(o)):
        raise InputError("counts must be nonnegative integers")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InputError("probs must be nonnegative and finite")
    if abs(p.sum() - 1.0) > 1e-9:
        raise InputError(f"probs sum to {p.sum()!r}; expected 1 within 1e-9")
    n = o.sum()
    expected = n * p

    # Pool the tail until its expected count clears the threshold.
    cut = o.size
    tail_e = 0.0
    while cut > 1 and tail_e < min_expected:
        cut -= 1
        tail_e += expected[cut]
    if tail_e >= min_expected or cut == o.size:
        o_m = np.concatenate([o[:cut], [o[cut:].sum()]]) if cut < o.size else o
        e_m = np.concatenate([expected[:cut], [tail_e]]) if cut < o.size else expected
    else:
        o_m = np.asarray([o.sum()])
        e_m = np.asarray([expected.sum()])
    if o_m.size > 1 and np.any(e_m < min_expected):
        raise InputError(
            "expected count below "
            f"{min_expected} in a cell even after tail pooling"
        )
    if o_m.size == 1:
        return ChiSquareResult(statistic=0.0, df=0)
    stat = float(np.sum((o_m - e_m) ** 2 / e_m))
    return ChiSquareResult(statistic=stat, df=int(o_m.size - 1))
