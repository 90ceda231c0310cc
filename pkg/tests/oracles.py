"""Independent oracles for the test suite.

Everything here is computed by a route disjoint from the package
implementation: arbitrary-precision series, high-precision quadrature of
integral representations, generating-function iteration, and numerical
convolution.  The acceptance and unit tests freeze or recompute expected
values through these helpers only.
"""

import math

import mpmath
import numpy as np


def ml_series_mp(beta: float, x: float, dps: int = 60, terms: int = 6000) -> float:
    """Mittag-Leffler by brute-force arbitrary-precision series."""
    with mpmath.workdps(dps):
        b = mpmath.mpf(beta)
        xx = mpmath.mpf(x)
        total = mpmath.mpf(0)
        for r in range(terms):
            total += xx**r / mpmath.gamma(b * r + 1)
        return float(total)


def ml_quad_mp(beta: float, y: float, dps: int = 40) -> float:
    """Mittag-Leffler at a negative argument -y via the complete-monotonicity
    integral representation, evaluated with mpmath quadrature:

        E_beta(-y) = sin(beta pi)/(beta pi y)
                     * int_0^inf exp(-v^(1/beta)) / ((v/y)^2 + 2(v/y)cos(beta pi) + 1) dv
    """
    with mpmath.workdps(dps):
        b = mpmath.mpf(beta)
        yy = mpmath.mpf(y)
        s = mpmath.sin(b * mpmath.pi)
        c = mpmath.cos(b * mpmath.pi)

        def f(v):
            w = v / yy
            return mpmath.exp(-(v ** (1 / b))) / (w * w + 2 * w * c + 1)

        val = mpmath.quad(f, [0, 1, 2, mpmath.inf])
        return float(s / (b * mpmath.pi * yy) * val)


def caputo_power(p: float, beta: float, t: np.ndarray) -> np.ndarray:
    """Closed-form fractional derivative of t^p (order beta in (0,1))."""
    return math.gamma(p + 1.0) / math.gamma(p + 1.0 - beta) * t ** (p - beta)


# --------------------------------------------------------------------------
# generating-function machinery for Galton-Watson oracles

def pgf_value(pmf: dict[int, float], s: float) -> float:
    return math.fsum(p * s**k for k, p in pmf.items())


def pgf_iterate(pmf: dict[int, float], s: float, n: int) -> float:
    """n-th functional iterate of the offspring generating function at s."""
    v = s
    for _ in range(n):
        v = pgf_value(pmf, v)
    return v


def law_after_generations(pmf: dict[int, float], j: int, n: int, tol: float = 1e-12) -> np.ndarray:
    """Exact pmf of the population after ``n`` generations from ``j``
    individuals, by repeated polynomial composition with mass truncation."""
    base = np.zeros(max(pmf) + 1)
    for k, p in pmf.items():
        base[k] = p

    def compose(poly: np.ndarray) -> np.ndarray:
        # coefficients of sum_k poly_k * f(s)^k
        out = np.zeros(1)
        power = np.ones(1)  # f(s)^0
        for k, coeff in enumerate(poly):
            if coeff > 0.0:
                if out.size < power.size:
                    out = np.pad(out, (0, power.size - out.size))
                out[: power.size] += coeff * power
            power = np.convolve(power, base)
            if power.sum() > 0:
                keep = np.nonzero(power > tol * power.sum())[0]
                power = power[: keep[-1] + 1] if keep.size else power[:1]
        return out

    gen_pmf = np.zeros(2)
    gen_pmf[1] = 1.0  # identity: one individual
    for _ in range(n):
        gen_pmf = compose(gen_pmf)
    law_j = np.ones(1)
    for _ in range(j):
        law_j = np.convolve(law_j, gen_pmf)
    return law_j


def renewal_count_law_pareto(
    tail_index: float, scale: float, t: float, n_grid: int = 1 << 14
) -> np.ndarray:
    """Law of the renewal count at time ``t`` for pareto waits, by numerical
    convolution of the waiting-time distribution on a uniform grid.

    Returns P(N = n) for n = 0..n_max where n_max = floor(t/scale) (waits
    are at least ``scale``, so later counts are impossible).
    """
    n_max = int(t / scale)
    dx = t / n_grid
    edges = np.linspace(0.0, t, n_grid + 1)
    cdf = np.where(edges >= scale, 1.0 - (np.maximum(edges, scale) / scale) ** (-tail_index), 0.0)
    cell = np.diff(cdf)  # mass of one wait per cell, truncated to [0, t]

    probs = []
    # distribution of T_n restricted to [0, t]
    t_pmf = np.zeros(n_grid)
    t_pmf_mass_at_zero = 1.0  # T_0 = 0
    surv = 1.0  # P(T_n <= t)
    for n in range(n_max + 1):
        probs.append(surv)
        if n == 0:
            t_pmf = cell.copy()
        else:
            t_pmf = np.convolve(t_pmf, cell)[:n_grid]
        surv = float(t_pmf.sum())
    p_ge = np.asarray(probs)  # p_ge[n] = P(T_n <= t) = P(N >= n)
    pmf = np.empty(n_max + 1)
    pmf[:-1] = p_ge[:-1] - p_ge[1:]
    pmf[-1] = p_ge[-1]
    return pmf


def poisson_pmf(lam: float, n: int) -> float:
    return math.exp(-lam + n * math.log(lam) - math.lgamma(n + 1)) if lam > 0 else float(n == 0)
