"""Continuous-state branching: branching mechanisms, the Laplace-exponent
ODE, closed-form first and second moments with and without the random time
change, Feller-diffusion and Yule path simulation, composition with the
inverse stable subordinator, and the time-changed Yule pmf.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from ._parallel import map_chunks, split_chunks
from .errors import (
    AccuracyError,
    CensoringError,
    DomainError,
    NumericalError,
    PreconditionError,
    ResourceError,
)
from .grids import GridFunction, PathGrid
from .sampling import _stable_batch
from .special import mittag_leffler
from .stats import McEstimate
from .streams import RngStream

__all__ = [
    "BranchingMechanism",
    "FellerSpec",
    "YuleSpec",
    "TcProcessSpec",
    "psi_eval",
    "solve_exponent",
    "csbp_mean",
    "csbp_second_moment",
    "tc_mean",
    "tc_second_moment",
    "simulate_feller",
    "simulate_yule",
    "compose_time_change",
    "compose_time_change_batch",
    "yule_fractional_pmf",
    "tc_branching_gap",
]


# --------------------------------------------------------------------------
# branching mechanisms and the exponent ODE

@dataclass(frozen=True)
class BranchingMechanism:
    """Branching mechanism psi(u) = b u + c u^2 + sum_i w_i (e^{-z_i u} - 1 + z_i u).

    ``b`` classifies the process (subcritical b > 0, critical b = 0,
    supercritical b < 0); ``c`` is the diffusion coefficient; ``jumps`` is a
    finite atomic jump measure given as (size, weight) pairs.
    """

    b: float
    c: float = 0.0
    jumps: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if not math.isfinite(self.b):
            raise DomainError("b must be finite")
        if not (math.isfinite(self.c) and self.c >= 0.0):
            raise DomainError("c must be finite and nonnegative")
        jumps = tuple((float(z), float(w)) for z, w in self.jumps)
        for z, w in jumps:
            if not (z > 0.0 and math.isfinite(z)):
                raise DomainError("jump sizes must be finite and positive")
            if not (w > 0.0 and math.isfinite(w)):
                raise DomainError("jump weights must be finite and positive")
        object.__setattr__(self, "jumps", jumps)

    @property
    def beta_tilde(self) -> float:
        """Variance coefficient 2c + sum w_i z_i^2 entering second moments."""
        return 2.0 * self.c + sum(w * z * z for z, w in self.jumps)


def psi_eval(mech: BranchingMechanism, u):
    """Evaluate the branching mechanism at ``u`` (scalar or array), u >= 0."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        raise DomainError("psi_eval requires finite u >= 0")
    out = mech.b * arr + mech.c * arr * arr
    for z, w in mech.jumps:
        out = out + w * (np.expm1(-z * arr) + z * arr)
    if np.isscalar(u) or arr.ndim == 0:
        return float(out)
    return out


def _exponent_interpolant(mech: BranchingMechanism, lam: float, t_max: float):
    """Dense solution of d nu/dt = -psi(nu), nu(0) = lam, on [0, t_max]."""

    def rhs(_t, y):
        v = max(y[0], 0.0)
        p = mech.b * v + mech.c * v * v
        for z, w in mech.jumps:
            p += w * (math.expm1(-z * v) + z * v)
        return [-p]

    sol = solve_ivp(
        rhs,
        (0.0, t_max),
        [lam],
        method="RK45",
        rtol=1e-10,
        atol=1e-12,
        dense_output=True,
    )
    if not sol.success:
        raise NumericalError(
            f"exponent ODE solver failed on [0, {t_max:.6g}]: {sol.message}"
        )
    return lambda t: np.maximum(sol.sol(np.asarray(t, dtype=float))[0], 0.0)


def solve_exponent(mech: BranchingMechanism, lam: float, t_grid) -> GridFunction:
    """Solve the Laplace-exponent ODE d nu/dt = -psi(nu), nu(0) = lam.

    Adaptive embedded Runge-Kutta 4/5 with tolerances well below the 1e-8
    accuracy the closed-form checks demand; the solution stays nonnegative.
    """
    lam = float(lam)
    if not (lam > 0.0 and math.isfinite(lam)):
        raise DomainError(f"lam must be finite and positive, got {lam!r}")
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise PreconditionError("t_grid must be a nonempty 1-d array")
    if t.size > 1 and not np.all(np.diff(t) > 0.0):
        raise PreconditionError("t_grid must be strictly increasing")
    if t[0] < 0.0 or not np.all(np.isfinite(t)):
        raise DomainError("t_grid must be finite and nonnegative")
    if t[-1] == 0.0:
        return GridFunction(t, np.full(t.size, lam))
    interp = _exponent_interpolant(mech, lam, float(t[-1]))
    return GridFunction(t, interp(t))


# --------------------------------------------------------------------------
# closed-form moments

def _check_xt(x: float, t: float) -> tuple[float, float]:
    x = float(x)
    t = float(t)
    if not (x > 0.0 and math.isfinite(x)):
        raise DomainError(f"initial mass x must be finite and positive, got {x!r}")
    if not (t >= 0.0 and math.isfinite(t)):
        raise DomainError(f"time t must be finite and nonnegative, got {t!r}")
    return x, t


def _check_tc_beta(beta: float) -> float:
    beta = float(beta)
    if not (0.0 < beta <= 1.0) or not math.isfinite(beta):
        raise DomainError(f"time-change index must lie in (0, 1], got {beta!r}")
    return beta


def csbp_mean(mech: BranchingMechanism, x: float, t: float) -> float:
    """First moment of the branching process: x e^{-bt}."""
    x, t = _check_xt(x, t)
    return x * math.exp(-mech.b * t)


def csbp_second_moment(mech: BranchingMechanism, x: float, t: float) -> float:
    """Second moment of the branching process.

    Critical case (b = 0): x^2 + x bt t with bt = 2c + sum w z^2;
    otherwise x^2 e^{-2bt} - (bt x / b)(e^{-2bt} - e^{-bt}).
    """
    x, t = _check_xt(x, t)
    b = mech.b
    bt = mech.beta_tilde
    if b == 0.0:
        return x * x + x * bt * t
    e2 = math.exp(-2.0 * b * t)
    e1 = math.exp(-b * t)
    return x * x * e2 - (bt * x / b) * (e2 - e1)


def tc_mean(mech: BranchingMechanism, x: float, t: float, beta: float) -> float:
    """First moment of the time-changed process: x E_beta(-b t^beta)."""
    x, t = _check_xt(x, t)
    beta = _check_tc_beta(beta)
    return x * mittag_leffler(beta, -mech.b * t**beta)


def tc_second_moment(
    mech: BranchingMechanism, x: float, t: float, beta: float
) -> float:
    """Second moment of the time-changed process.

    Critical case (b = 0): x^2 + x bt t^beta / Gamma(beta + 1); otherwise
    x^2 E_beta(-2b t^beta) - (bt x / b)(E_beta(-2b t^beta) - E_beta(-b t^beta)).
    At beta = 1 both branches reduce to the plain moments.
    """
    x, t = _check_xt(x, t)
    beta = _check_tc_beta(beta)
    b = mech.b
    bt = mech.beta_tilde
    if b == 0.0:
        return x * x + x * bt * t**beta / math.gamma(beta + 1.0)
    e2 = mittag_leffler(beta, -2.0 * b * t**beta)
    e1 = mittag_leffler(beta, -b * t**beta)
    return x * x * e2 - (bt * x / b) * (e2 - e1)


# --------------------------------------------------------------------------
# process specifications

@dataclass(frozen=True)
class FellerSpec:
    """Feller branching diffusion dX = -b X dt + sqrt(2 c X) dW, X(0) = x0."""

    x0: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.x0 > 0.0 and math.isfinite(self.x0)):
            raise DomainError("x0 must be finite and positive")
        if not math.isfinite(self.b):
            raise DomainError("b must be finite")
        if not (self.c > 0.0 and math.isfinite(self.c)):
            raise DomainError("c must be finite and positive")


@dataclass(frozen=True)
class YuleSpec:
    """Linear pure-birth process with rate theta*n, started at n0 >= 1."""

    n0: int
    theta: float

    def __post_init__(self):
        if not isinstance(self.n0, (int, np.integer)) or self.n0 < 1:
            raise DomainError("n0 must be an integer >= 1")
        if not (self.theta > 0.0 and math.isfinite(self.theta)):
            raise DomainError("theta must be finite and positive")


@dataclass(frozen=True)
class TcProcessSpec:
    """An inner process together with the stability index of its random clock.

    ``beta = 1`` means no time change: the inner process is returned as is.
    """

    inner: FellerSpec | YuleSpec
    beta: float

    def __post_init__(self):
        if not isinstance(self.inner, (FellerSpec, YuleSpec)):
            raise DomainError("inner must be a FellerSpec or a YuleSpec")
        _check_tc_beta(self.beta)


# --------------------------------------------------------------------------
# path simulation

def simulate_feller(
    x0: float, b: float, c: float, t_grid, rng: RngStream
) -> PathGrid:
    """Euler-Maruyama path of the Feller diffusion on a uniform grid.

    Positivity is enforced by full truncation: the state (and hence the
    diffusion argument) is clamped at zero after every step, which also
    makes zero absorbing, matching the process itself.
    """
    spec = FellerSpec(x0=float(x0), b=float(b), c=float(c))
    grid = np.asarray(t_grid, dtype=float)
    probe = GridFunction(grid, np.zeros_like(grid))  # validates the grid
    h = probe.uniform_step() if grid.size > 1 else 0.0
    values = np.empty(grid.size)
    values[0] = spec.x0
    if grid.size > 1:
        z = rng.gen.standard_normal(grid.size - 1)
        x = spec.x0
        drift = 1.0 - spec.b * h
        dif = math.sqrt(2.0 * spec.c * h)
        for i in range(1, grid.size):
            x = max(x * drift + dif * math.sqrt(x) * z[i - 1], 0.0)
            values[i] = x
    return PathGrid(grid, values)


def simulate_yule(
    n0: int,
    theta: float,
    t_max: float,
    rng: RngStream,
    max_events: int = 1_000_000,
) -> PathGrid:
    """Exact event-driven Yule path on [0, t_max].

    From state n the next birth arrives after an exponential(theta*n) wait;
    the returned grid holds the initial time and every birth time, so the
    path is a unit-step increasing step function.
    """
    spec = YuleSpec(n0=int(n0), theta=float(theta))
    t_max = float(t_max)
    if not (t_max >= 0.0 and math.isfinite(t_max)):
        raise DomainError("t_max must be finite and nonnegative")
    gen = rng.gen
    times = [0.0]
    n = spec.n0
    t = 0.0
    while True:
        t += gen.exponential(1.0 / (spec.theta * n))
        if t > t_max:
            break
        n += 1
        times.append(t)
        if n - spec.n0 > max_events:
            raise ResourceError(
                f"yule path exceeded {max_events} birth events before t_max; "
                "supercritical growth guard"
            )
    values = spec.n0 + np.arange(len(times), dtype=float)
    return PathGrid(np.asarray(times), values)


# --------------------------------------------------------------------------
# time-change composition engine

_DEFAULT_CHUNK = 2048
_UCAP_SAMPLES = 10_000
_UCAP_QUANTILE = 0.999


def _operational_cap(beta: float, t_max: float, step: float, rng: RngStream) -> int:
    """Operational-horizon length in grid steps: the 0.999 quantile of the
    inverse subordinator at t_max, estimated from marginal samples."""
    if t_max == 0.0:
        return 1
    d = _stable_batch(beta, _UCAP_SAMPLES, rng.gen)
    e = (t_max / d) ** beta
    q = float(np.quantile(e, _UCAP_QUANTILE))
    return max(int(math.ceil(q / step)), 1)


def _inverse_indices(
    beta: float,
    t_grid: np.ndarray,
    m: int,
    n_cap: int,
    step: float,
    gen: np.random.Generator,
) -> np.ndarray:
    """First-passage grid indices of m independent subordinator paths.

    Entry (i, j) is the smallest grid index k >= 1 with D_i(k*step) >
    t_grid[j].  Paths are generated block by block so that a replicate
    stops consuming stable draws once all its targets are crossed.  The
    horizon is n_cap steps, auto-extended once to 2*n_cap; replicates
    censored beyond that raise.
    """
    n_t = t_grid.size
    scale = step ** (1.0 / beta)
    k_idx = np.zeros((m, n_t), dtype=np.int64)
    ptr = np.zeros(m, dtype=np.int64)
    d_last = np.zeros(m)
    active = np.arange(m)
    base = 0
    hard_cap = 2 * n_cap
    block = max(64, n_cap // 8)
    while active.size:
        if base >= hard_cap:
            t_bad = float(t_grid[int(ptr[active].min())])
            raise CensoringError(
                f"inverse time change censored at t={t_bad:.6g}: horizon of "
                f"{hard_cap} steps (one doubling applied) was insufficient"
            )
        nb = min(block, hard_cap - base)
        incs = scale * _stable_batch(beta, active.size * nb, gen)
        cum = np.cumsum(incs.reshape(active.size, nb), axis=1)
        cum += d_last[active, None]
        for j in range(n_t):
            rel = np.flatnonzero(ptr[active] == j)
            if rel.size == 0:
                continue
            crossed = cum[rel, -1] > t_grid[j]
            if not np.any(crossed):
                continue
            sel = rel[crossed]
            first = np.argmax(cum[sel] > t_grid[j], axis=1)
            rows = active[sel]
            k_idx[rows, j] = base + first + 1
            ptr[rows] += 1
        d_last[active] = cum[:, -1]
        base += nb
        active = active[ptr[active] < n_t]
    return k_idx


def _feller_values_at(
    spec: FellerSpec,
    h: float,
    k_idx: np.ndarray,
    gen: np.random.Generator,
) -> np.ndarray:
    """Euler-Maruyama values of independent Feller paths at per-replicate
    step indices.  Row i is stepped only up to its own largest index."""
    m, n_t = k_idx.shape
    row_max = k_idx[:, -1]
    order = np.argsort(row_max, kind="stable")
    ks = k_idx[order]
    row_max_sorted = row_max[order]
    out_sorted = np.empty((m, n_t))

    flat = ks.ravel()
    forder = np.argsort(flat, kind="stable")
    fkeys = flat[forder]

    x = np.full(m, spec.x0)
    drift = 1.0 - spec.b * h
    dif = math.sqrt(2.0 * spec.c * h)

    hi = int(np.searchsorted(fkeys, 0, side="right"))
    if hi > 0:
        pos = forder[:hi]
        out_sorted[pos // n_t, pos % n_t] = spec.x0
    lo = hi
    kmax = int(row_max_sorted[-1]) if m else 0
    for k in range(1, kmax + 1):
        i0 = int(np.searchsorted(row_max_sorted, k, side="left"))
        xa = x[i0:]
        z = gen.standard_normal(m - i0)
        xa = xa * drift + dif * np.sqrt(xa) * z
        np.maximum(xa, 0.0, out=xa)
        x[i0:] = xa
        hi = int(np.searchsorted(fkeys, k, side="right"))
        if hi > lo:
            pos = forder[lo:hi]
            rows = pos // n_t
            out_sorted[rows, pos % n_t] = x[rows]
            lo = hi
    out = np.empty((m, n_t))
    out[order] = out_sorted
    return out


def _yule_values_at(
    spec: YuleSpec,
    targets: np.ndarray,
    gen: np.random.Generator,
    max_events: int = 1_000_000,
    round_size: int = 64,
) -> np.ndarray:
    """Exact Yule values at per-replicate (nondecreasing) target times.

    Birth times are generated in vectorised rounds; rows retire once their
    last target is passed."""
    m, n_t = targets.shape
    counts = np.zeros((m, n_t), dtype=np.int64)
    t_now = np.zeros(m)
    births = np.zeros(m, dtype=np.int64)
    active = np.arange(m)
    t_last = targets[:, -1]
    steps = np.arange(round_size)
    while active.size:
        pops = spec.n0 + births[active]
        rates = spec.theta * (pops[:, None] + steps[None, :])
        waits = gen.standard_exponential((active.size, round_size)) / rates
        jumps = t_now[active, None] + np.cumsum(waits, axis=1)
        for j in range(n_t):
            counts[active, j] += np.sum(
                jumps <= targets[active, j, None], axis=1
            )
        t_now[active] = jumps[:, -1]
        births[active] += round_size
        if np.any(births[active] > max_events):
            raise ResourceError(
                f"yule time-change exceeded {max_events} birth events; "
                "supercritical growth guard"
            )
        keep = t_now[active] <= t_last[active]
        active = active[keep]
    return (spec.n0 + counts).astype(float)


def _compose_chunk(
    spec: TcProcessSpec,
    t_grid: np.ndarray,
    h: float,
    u_step: float,
    n_cap: int,
    m: int,
    stream: RngStream,
) -> np.ndarray:
    gen = stream.gen
    if spec.beta == 1.0:
        if isinstance(spec.inner, FellerSpec):
            k = np.rint(t_grid / h).astype(np.int64)
            k_idx = np.broadcast_to(k, (m, k.size)).copy()
            return _feller_values_at(spec.inner, h, k_idx, gen)
        targets = np.broadcast_to(t_grid, (m, t_grid.size)).copy()
        return _yule_values_at(spec.inner, targets, gen)
    k_idx = _inverse_indices(spec.beta, t_grid, m, n_cap, u_step, gen)
    if isinstance(spec.inner, FellerSpec):
        return _feller_values_at(spec.inner, h, k_idx, gen)
    return _yule_values_at(spec.inner, k_idx * u_step, gen)


def compose_time_change_batch(
    spec: TcProcessSpec,
    t_grid,
    n_rep: int,
    rng: RngStream,
    h: float = 1e-3,
    u_step: float | None = None,
    chunk_size: int = _DEFAULT_CHUNK,
) -> np.ndarray:
    """Marginals of the time-changed process on ``t_grid`` for ``n_rep``
    independent replicates; returns an (n_rep, len(t_grid)) array.

    Each replicate composes one inner path with one independent
    inverse-subordinator path obtained by grid inversion at resolution
    ``u_step`` (default: the inner Euler step ``h``).  The operational
    horizon is the 0.999 quantile of the clock at the last grid time,
    doubled once on censoring.  ``beta = 1`` bypasses the clock entirely.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise PreconditionError("t_grid must be a nonempty 1-d array")
    if t.size > 1 and not np.all(np.diff(t) > 0.0):
        raise PreconditionError("t_grid must be strictly increasing")
    if t[0] < 0.0 or not np.all(np.isfinite(t)):
        raise DomainError("t_grid must be finite and nonnegative")
    if not (h > 0.0 and math.isfinite(h)):
        raise DomainError("h must be finite and positive")
    if n_rep < 1:
        raise PreconditionError("n_rep must be at least 1")
    if u_step is None:
        u_step = h
    if not (u_step > 0.0 and math.isfinite(u_step)):
        raise DomainError("u_step must be finite and positive")

    n_cap = 1
    if spec.beta < 1.0:
        n_cap = _operational_cap(spec.beta, float(t[-1]), u_step, rng.substream(0))

    sizes = split_chunks(int(n_rep), chunk_size)
    parts = map_chunks(
        lambda m, s: _compose_chunk(spec, t, h, u_step, n_cap, m, s),
        sizes,
        rng,
        offset=1,
    )
    return np.vstack(parts)


def compose_time_change(
    spec: TcProcessSpec,
    t_grid,
    rng: RngStream,
    h: float = 1e-3,
    u_step: float | None = None,
) -> PathGrid:
    """One path of the time-changed process X(E(t)) observed on ``t_grid``."""
    values = compose_time_change_batch(spec, t_grid, 1, rng, h=h, u_step=u_step)
    return PathGrid(np.asarray(t_grid, dtype=float), values[0])


# --------------------------------------------------------------------------
# time-changed Yule pmf

def _ml_mp_asymptotic(beta: float, x: float, target_dps: int):
    """Large-argument expansion in mpmath; returns None when the envelope
    of the expansion cannot certify ``target_dps`` digits.

    The truncation point comes from the smooth term envelope
    |x|^{-k} Gamma(beta k)/pi (raw magnitudes dip spuriously near the
    poles of Gamma); the error is certified against the first-term scale
    |x|^{-1}/Gamma(1-beta) ~ the value itself for x <= -2.
    """
    import mpmath

    from .special import _asymptotic_cutoff_k

    log_ax = math.log(abs(x))
    log_t1 = -log_ax - math.lgamma(1.0 - beta)
    # Find the first k whose envelope reaches the certified accuracy.
    cert_log = log_t1 - (target_dps + 8) * math.log(10.0)
    k_cert = None
    best = math.inf
    for k in range(1, 4000):
        env = math.lgamma(beta * k) - k * log_ax - math.log(math.pi)
        if env <= cert_log:
            k_cert = k
            break
        if env < best:
            best = env
        elif env > best + 14.0:
            return None  # envelope minimum reached without certification
    if k_cert is None:
        return None
    xb = mpmath.mpf(x)
    bb = mpmath.mpf(beta)
    total = mpmath.mpf(0)
    power = mpmath.mpf(1)
    for k in range(1, k_cert + 1):
        power /= xb
        total += -power * mpmath.rgamma(1 - bb * k)
    if total > 0:
        return total
    return None


_ML_MP_CACHE: dict[tuple[float, float], tuple[object, int]] = {}


def _ml_mp(beta: float, x: float, target_dps: int):
    """Cached Mittag-Leffler value at ``x <= 0`` good to ``target_dps``
    significant digits.  Values are computed with 80 digits of headroom so
    later calls with moderately higher targets reuse the cache."""
    key = (beta, x)
    hit = _ML_MP_CACHE.get(key)
    if hit is not None and hit[1] >= target_dps:
        return hit[0]
    achieved = target_dps + 80
    value = _ml_mp_uncached(beta, x, achieved)
    if len(_ML_MP_CACHE) > 16384:
        _ML_MP_CACHE.clear()
    _ML_MP_CACHE[key] = (value, achieved)
    return value


def _ml_mp_uncached(beta: float, x: float, target_dps: int):
    """Mittag-Leffler value at ``x <= 0`` to ``target_dps`` significant
    digits: mpmath asymptotic expansion where it certifies the target,
    adaptive-precision power series otherwise."""
    import mpmath

    with mpmath.workdps(target_dps + 15):
        if beta == 1.0:
            return mpmath.exp(mpmath.mpf(x))
        if x == 0.0:
            return mpmath.mpf(1)
        if x <= -2.0:
            value = _ml_mp_asymptotic(beta, x, target_dps)
            if value is not None:
                return value

        from .special import _series_peak

        _, log_peak = _series_peak(beta, math.log(abs(x)))
        peak_digits = log_peak / math.log(10.0)
        if peak_digits > 600:
            raise AccuracyError(
                "Mittag-Leffler argument needs more than 600 digits of "
                "working precision; extended precision beyond the supported "
                "range"
            )
        dps = int(math.ceil(peak_digits)) + target_dps + 10
        with mpmath.workdps(dps):
            xb = mpmath.mpf(x)
            bb = mpmath.mpf(beta)
            total = mpmath.mpf(1)
            power = mpmath.mpf(1)
            floor = mpmath.mpf(10) ** (-(dps - 4))
            decreasing = False
            prev = mpmath.mpf("inf")
            for r in range(1, 500_000):
                power *= xb
                term = power / mpmath.gamma(bb * r + 1)
                total += term
                mag = abs(term)
                if mag < prev:
                    decreasing = True
                if decreasing and mag <= floor * max(1, abs(total)):
                    return +total
                prev = mag
    raise AccuracyError("pmf term series did not converge in mpmath")


_PMF_GUARD_RATIO = 1e8


def yule_fractional_pmf(n: int, t: float, theta: float, beta: float) -> float:
    """Marginal pmf of the time-changed Yule process started from one
    individual:

        p(n, t) = sum_{j=1}^{n} C(n-1, j-1) (-1)^{j-1} E_beta(-theta j t^beta).

    The alternating binomial sum is evaluated with exact compensated
    summation; when the predicted cancellation exceeds 1e8 times the result
    the terms are recomputed in extended precision, so the returned value
    always carries at least ~8 correct digits or raises.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError(f"n must be an integer >= 1, got {n!r}")
    n = int(n)
    t = float(t)
    if not (t >= 0.0 and math.isfinite(t)):
        raise DomainError("t must be finite and nonnegative")
    theta = float(theta)
    if not (theta > 0.0 and math.isfinite(theta)):
        raise DomainError("theta must be finite and positive")
    beta = _check_tc_beta(beta)
    if t == 0.0:
        return 1.0 if n == 1 else 0.0

    tb = t**beta
    log10_max = -math.inf
    if n <= 900:  # binomial coefficients stay inside the float64 range
        terms = []
        max_mag = 0.0
        for j in range(1, n + 1):
            coeff = math.comb(n - 1, j - 1) * (-1) ** (j - 1)
            term = coeff * mittag_leffler(beta, -theta * j * tb)
            terms.append(term)
            max_mag = max(max_mag, abs(term))
        total = math.fsum(terms)
        if max_mag <= _PMF_GUARD_RATIO * max(abs(total), 1e-300):
            return min(max(total, 0.0), 1.0)
        log10_max = math.log10(max_mag)
    else:
        ln10 = math.log(10.0)
        for j in range(1, n + 1):
            lc = math.lgamma(n) - math.lgamma(j) - math.lgamma(n - j + 1)
            e = mittag_leffler(beta, -theta * j * tb)
            log10_max = max(log10_max, lc / ln10 + math.log10(e))

    # Cancellation too deep for float64 terms: recompute in mpmath.  The
    # working precision covers the largest term plus a fresh 30 digits for
    # the result; the target is quantised so the per-argument cache of
    # high-precision values is shared across neighbouring n.
    import mpmath

    target = int(math.ceil(log10_max)) + 30
    target = 40 * math.ceil(target / 40)
    with mpmath.workdps(target + 10):
        tot = mpmath.mpf(0)
        coeff = mpmath.mpf(1)  # C(n-1, j-1), advanced multiplicatively
        sign = 1
        for j in range(1, n + 1):
            tot += sign * coeff * _ml_mp(beta, -theta * j * tb, target)
            coeff = coeff * (n - j) / j
            sign = -sign
        value = float(tot)
    if not (math.isfinite(value)):
        raise AccuracyError(
            f"pmf at n={n} could not be resolved even in extended precision"
        )
    return min(max(value, 0.0), 1.0)


# --------------------------------------------------------------------------
# branching-covariance gap of the time-changed process

def tc_branching_gap(
    mech: BranchingMechanism,
    x: float,
    y: float,
    lam: float,
    t: float,
    beta: float,
    n_rep: int,
    rng: RngStream,
) -> McEstimate:
    """Monte Carlo estimate of Cov(e^{-x nu_E(lam)}, e^{-y nu_E(lam)}) where
    E is the inverse-subordinator marginal at ``t``.

    The Laplace exponent is solved once as a dense ODE solution and then
    evaluated at every sampled clock value, mirroring the conditional
    covariance identity: no path simulation is involved.  The gap vanishes
    identically at beta = 1 (deterministic clock) and when x or y is 0.
    """
    x = float(x)
    y = float(y)
    if x < 0.0 or y < 0.0 or not (math.isfinite(x) and math.isfinite(y)):
        raise DomainError("x and y must be finite and nonnegative")
    lam = float(lam)
    if not (lam > 0.0 and math.isfinite(lam)):
        raise DomainError("lam must be finite and positive")
    t = float(t)
    if not (t >= 0.0 and math.isfinite(t)):
        raise DomainError("t must be finite and nonnegative")
    beta = _check_tc_beta(beta)
    if n_rep < 1000:
        raise PreconditionError(f"n_rep must be at least 1000, got {n_rep!r}")
    n_rep = int(n_rep)

    if beta == 1.0 or t == 0.0:
        # Deterministic clock: covariance of constants.
        return McEstimate(mean=0.0, std_error=0.0, n=n_rep)

    e = (t / _stable_batch(beta, n_rep, rng.gen)) ** beta
    interp = _exponent_interpolant(mech, lam, float(e.max()))
    nu = interp(e)
    a = np.exp(-x * nu)
    bvals = np.exp(-y * nu)
    prod = (a - a.mean()) * (bvals - bvals.mean())
    cov = float(prod.sum() / (n_rep - 1))
    se = float(prod.std(ddof=1) / math.sqrt(n_rep))
    return McEstimate(mean=cov, std_error=se, n=n_rep)
