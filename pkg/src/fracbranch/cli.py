"""Command-line front end: simulation runs, closed-form moment/pmf tables,
Mittag-Leffler evaluation, and named verification bundles.

Exit codes: 0 success, 2 validation failure (bad flag or value), 3
numerical/censoring/resource failure, 4 unwritable output path.  All CSV
output uses 17-significant-digit round-trip float formatting, so a rerun
with the same configuration and seed is byte-identical.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .csbp import (
    BranchingMechanism,
    FellerSpec,
    TcProcessSpec,
    YuleSpec,
    compose_time_change_batch,
    simulate_feller,
    simulate_yule,
    tc_mean,
    tc_second_moment,
    yule_fractional_pmf,
)
from .errors import (
    AccuracyError,
    CensoringError,
    DomainError,
    InputError,
    NumericalError,
    PreconditionError,
    ResourceError,
)
from .gw import OffspringLaw, branching_inequality_experiment, simulate_gw, simulate_time_changed_gw
from .sampling import WaitingTimeLaw
from .scaling import FellerLimitFamily, scaling_limit_experiment
from .special import gamma_fn, mittag_leffler
from .stats import chi_square_gof, estimate
from .streams import RngStream

from scipy.stats import chi2 as _chi2

_VALIDATION_ERRORS = (DomainError, PreconditionError, InputError)
_NUMERICAL_ERRORS = (CensoringError, NumericalError, AccuracyError, ResourceError)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    text = ",".join(header) + "\n"
    for row in rows:
        text += ",".join(_fmt(v) for v in row) + "\n"
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise _UnwritableOutput(f"cannot write output path {path!r}: {exc}") from exc


class _UnwritableOutput(Exception):
    pass


def _parse_pmf(text: str) -> OffspringLaw:
    pmf = {}
    try:
        for part in text.split(","):
            k, v = part.split(":")
            pmf[int(k)] = float(v)
    except ValueError as exc:
        raise DomainError(
            f"--pmf expects 'count:prob,count:prob,...', got {text!r}"
        ) from exc
    return OffspringLaw(pmf)


def _parse_waits(text: str) -> WaitingTimeLaw:
    parts = text.split(":")
    kind = parts[0]
    args = [float(p) for p in parts[1:]]
    try:
        if kind == "exponential":
            return WaitingTimeLaw.exponential(*args)
        if kind == "pareto":
            return WaitingTimeLaw.pareto(*args)
        if kind == "stable":
            return WaitingTimeLaw.stable(*args)
        if kind == "deterministic":
            return WaitingTimeLaw.deterministic(*args)
    except TypeError as exc:
        raise DomainError(f"wrong parameter count in --waits {text!r}") from exc
    raise DomainError(
        f"--waits kind must be exponential/pareto/stable/deterministic, got {kind!r}"
    )


def _parse_grid(text: str) -> np.ndarray:
    try:
        return np.asarray([float(p) for p in text.split(",")], dtype=float)
    except ValueError as exc:
        raise DomainError(f"--t-grid expects comma-separated reals, got {text!r}") from exc


# --------------------------------------------------------------------------
# argument plumbing: explicit flags override --config, which overrides defaults

def _merge(
    args: argparse.Namespace, defaults: dict, optional: frozenset = frozenset()
) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise DomainError(f"cannot read --config {args.config!r}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DomainError(f"--config is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise DomainError("--config must hold a JSON object of flag values")
        unknown = set(cfg) - set(defaults)
        if unknown:
            raise DomainError(
                f"--config keys {sorted(unknown)} do not mirror any flag; "
                f"known keys: {sorted(defaults)}"
            )
    merged = {}
    for key, fallback in defaults.items():
        attr = key.replace("-", "_")
        cli_val = getattr(args, attr, None)
        if cli_val is not None:
            merged[key] = cli_val
        elif key in cfg:
            merged[key] = cfg[key]
        else:
            merged[key] = fallback
    missing = [
        k
        for k, v in merged.items()
        if v is None and k not in optional and k != "config"
    ]
    if missing:
        raise DomainError(f"missing required flag --{missing[0]}")
    return merged


def _require_number(merged: dict, key: str, kind=float):
    try:
        return kind(merged[key])
    except (TypeError, ValueError) as exc:
        raise DomainError(f"--{key} expects a number, got {merged[key]!r}") from exc


# --------------------------------------------------------------------------
# subcommand implementations

_MOMENTS_DEFAULTS = {
    "beta": None,
    "b": None,
    "beta-tilde": 1.0,
    "x": 1.0,
    "t-max": 4.0,
    "steps": 100,
    "out": "-",
    "config": None,
}


def _cmd_moments(args) -> int:
    m = _merge(args, _MOMENTS_DEFAULTS)
    beta = _require_number(m, "beta")
    b = _require_number(m, "b")
    bt = _require_number(m, "beta-tilde")
    x = _require_number(m, "x")
    t_max = _require_number(m, "t-max")
    steps = _require_number(m, "steps", int)
    if steps < 1:
        raise DomainError("--steps must be at least 1")
    if t_max <= 0:
        raise DomainError("--t-max must be positive")
    if bt < 0:
        raise DomainError("--beta-tilde must be nonnegative")
    mech = BranchingMechanism(b=b, c=bt / 2.0)
    rows = []
    for t in np.linspace(0.0, t_max, steps + 1):
        mean = tc_mean(mech, x, float(t), beta)
        m2 = tc_second_moment(mech, x, float(t), beta)
        rows.append([t, mean, m2, m2 - mean * mean])
    _write_csv(m["out"], ["t", "mean", "second_moment", "variance"], rows)
    return 0


_PMF_DEFAULTS = {
    "theta": None,
    "beta": None,
    "t": None,
    "n-max": 30,
    "out": "-",
    "config": None,
}


def _cmd_pmf(args) -> int:
    m = _merge(args, _PMF_DEFAULTS)
    theta = _require_number(m, "theta")
    beta = _require_number(m, "beta")
    t = _require_number(m, "t")
    n_max = _require_number(m, "n-max", int)
    if n_max < 1:
        raise DomainError("--n-max must be at least 1")
    rows = [[n, yule_fractional_pmf(n, t, theta, beta)] for n in range(1, n_max + 1)]
    _write_csv(m["out"], ["n", "probability"], rows)
    return 0


_MLEVAL_DEFAULTS = {
    "beta": None,
    "x": None,
    "x-min": None,
    "x-max": None,
    "steps": 100,
    "out": "-",
    "config": None,
}


def _cmd_ml_eval(args) -> int:
    m = _merge(args, _MLEVAL_DEFAULTS, optional=frozenset({"x", "x-min", "x-max"}))
    beta = _require_number(m, "beta")
    if m["x"] is not None:
        xs = [_require_number(m, "x")]
    else:
        if m["x-min"] is None or m["x-max"] is None:
            raise DomainError("ml-eval needs either --x or both --x-min and --x-max")
        lo = _require_number(m, "x-min")
        hi = _require_number(m, "x-max")
        steps = _require_number(m, "steps", int)
        if not hi > lo:
            raise DomainError("--x-max must exceed --x-min")
        if steps < 1:
            raise DomainError("--steps must be at least 1")
        xs = list(np.linspace(lo, hi, steps + 1))
    rows = [[x, mittag_leffler(beta, float(x))] for x in xs]
    _write_csv(m["out"], ["x", "value"], rows)
    return 0


_SIMULATE_DEFAULTS = {
    "process": None,
    "seed": 42,
    "n-rep": 1,
    "out": "-",
    "t-grid": None,
    "t-max": 1.0,
    "steps": 1000,
    "h": 1e-3,
    "j": 1,
    "pmf": "0:0.25,1:0.25,2:0.25,3:0.25",
    "waits": None,
    "n-gen": 10,
    "x0": 1.0,
    "b": 1.0,
    "c": 1.0,
    "n0": 1,
    "theta": 1.0,
    "beta": 0.5,
    "config": None,
}


def _cmd_simulate(args) -> int:
    m = _merge(args, _SIMULATE_DEFAULTS, optional=frozenset({"waits", "t-grid"}))
    process = m["process"]
    seed = _require_number(m, "seed", int)
    n_rep = _require_number(m, "n-rep", int)
    if n_rep < 1:
        raise DomainError("--n-rep must be at least 1")
    rng = RngStream(seed=seed)
    rows = []
    header = ["replicate", "t", "value"]

    if process == "gw":
        law = _parse_pmf(m["pmf"])
        j = _require_number(m, "j", int)
        if m["waits"] is not None:
            wait = _parse_waits(m["waits"])
            grid = (
                _parse_grid(m["t-grid"])
                if m["t-grid"] is not None
                else np.linspace(0.0, _require_number(m, "t-max"), 11)
            )
            for r in range(n_rep):
                path = simulate_time_changed_gw(j, law, wait, grid, rng.substream(r))
                rows += [[r, t, v] for t, v in zip(path.t_grid, path.values)]
        else:
            n_gen = _require_number(m, "n-gen", int)
            header = ["replicate", "generation", "value"]
            for r in range(n_rep):
                path = simulate_gw(j, law, n_gen, rng.substream(r))
                rows += [[r, g, int(z)] for g, z in enumerate(path.generations)]
    elif process == "feller":
        grid = np.linspace(
            0.0, _require_number(m, "t-max"), _require_number(m, "steps", int) + 1
        )
        for r in range(n_rep):
            path = simulate_feller(
                _require_number(m, "x0"),
                _require_number(m, "b"),
                _require_number(m, "c"),
                grid,
                rng.substream(r),
            )
            rows += [[r, t, v] for t, v in zip(path.t_grid, path.values)]
    elif process == "yule":
        for r in range(n_rep):
            path = simulate_yule(
                _require_number(m, "n0", int),
                _require_number(m, "theta"),
                _require_number(m, "t-max"),
                rng.substream(r),
            )
            rows += [[r, t, int(v)] for t, v in zip(path.t_grid, path.values)]
    elif process in ("tc-feller", "tc-yule"):
        if process == "tc-feller":
            inner = FellerSpec(
                x0=_require_number(m, "x0"),
                b=_require_number(m, "b"),
                c=_require_number(m, "c"),
            )
        else:
            inner = YuleSpec(
                n0=_require_number(m, "n0", int), theta=_require_number(m, "theta")
            )
        spec = TcProcessSpec(inner=inner, beta=_require_number(m, "beta"))
        grid = (
            _parse_grid(m["t-grid"])
            if m["t-grid"] is not None
            else np.linspace(0.0, _require_number(m, "t-max"), 11)
        )
        values = compose_time_change_batch(
            spec, grid, n_rep, rng, h=_require_number(m, "h")
        )
        for r in range(n_rep):
            rows += [[r, t, v] for t, v in zip(grid, values[r])]
    else:
        raise DomainError(
            "--process must be one of gw, feller, yule, tc-feller, tc-yule; "
            f"got {process!r}"
        )
    _write_csv(m["out"], header, rows)
    return 0


# --------------------------------------------------------------------------
# verification bundles

_VERIFY_DEFAULTS = {
    "preset": None,
    "seed": 42,
    "n-rep": None,
    "out": "-",
    "h": 1e-3,
    "config": None,
}

_PRESET_FOR_TARGET = {
    "moments": ("feller-sub", "feller-crit", "feller-super"),
    "pmf": ("yule-frac",),
    "branching-inequality": ("gw-inequality",),
    "scaling": ("scaling",),
}


def _verify_moment_rows(preset: str, seed: int, n_rep: int, h: float) -> list[list]:
    params = {
        "feller-sub": dict(x0=1.0, b=1.0, c=1.0, beta=0.5, t=1.0),
        "feller-crit": dict(x0=1.0, b=0.0, c=0.5, beta=0.7, t=1.0),
        "feller-super": dict(x0=1.0, b=-1.0, c=1.0, beta=0.5, t=1.0),
    }[preset]
    mech = BranchingMechanism(b=params["b"], c=params["c"])
    spec = TcProcessSpec(
        inner=FellerSpec(x0=params["x0"], b=params["b"], c=params["c"]),
        beta=params["beta"],
    )
    rng = RngStream(seed=seed)
    samples = compose_time_change_batch(spec, [params["t"]], n_rep, rng, h=h)[:, 0]
    rows = []
    mean_est = estimate(samples)
    mean_tgt = tc_mean(mech, params["x0"], params["t"], params["beta"])
    tol = 3.0 * mean_est.std_error + 0.01 * (1.0 + abs(mean_tgt))
    rows.append(
        [
            f"{preset}-mean",
            mean_est.mean,
            mean_tgt,
            mean_est.std_error,
            abs(mean_est.mean - mean_tgt) <= tol,
        ]
    )
    m2_est = estimate(samples**2)
    m2_tgt = tc_second_moment(mech, params["x0"], params["t"], params["beta"])
    tol2 = 3.0 * m2_est.std_error + 0.02 * (1.0 + abs(m2_tgt))
    rows.append(
        [
            f"{preset}-second-moment",
            m2_est.mean,
            m2_tgt,
            m2_est.std_error,
            abs(m2_est.mean - m2_tgt) <= tol2,
        ]
    )
    return rows


def _verify_pmf_rows(seed: int, n_rep: int, h: float) -> list[list]:
    theta, beta, t = 1.0, 0.6, 1.0
    spec = TcProcessSpec(inner=YuleSpec(n0=1, theta=theta), beta=beta)
    rng = RngStream(seed=seed)
    samples = compose_time_change_batch(spec, [t], n_rep, rng, h=h)[:, 0].astype(int)
    n_cells = max(10, min(int(np.quantile(samples, 0.999)) + 1, 200))
    probs = np.array([yule_fractional_pmf(n, t, theta, beta) for n in range(1, n_cells + 1)])
    tail = max(1.0 - probs.sum(), 0.0)
    counts = np.bincount(np.clip(samples, 1, n_cells + 1), minlength=n_cells + 2)[1:]
    res = chi_square_gof(counts, np.append(probs, tail))
    crit = float(_chi2.ppf(0.99, res.df)) if res.df > 0 else 0.0
    rows = [
        [
            "yule-frac-chi-square",
            res.statistic,
            crit,
            0.0,
            bool(res.statistic < crit),
        ]
    ]
    total = 0.0
    n = 0
    while total < 1.0 - 1e-6 and n < 2000:
        n += 1
        total += yule_fractional_pmf(n, t, theta, beta)
    rows.append(
        ["yule-frac-partial-sum", total, 1.0 - 1e-6, 0.0, total >= 1.0 - 1e-6]
    )
    return rows


def _verify_inequality_rows(seed: int, n_rep: int) -> list[list]:
    law = OffspringLaw({0: 0.35, 1: 0.2, 2: 0.25, 3: 0.2})  # mean 1.3
    rng = RngStream(seed=seed)
    rows = []
    n_sweep = max(1000, n_rep // 5)
    idx = 0
    for tail in (0.4, 0.6, 0.8):
        for lam in (0.5, 1.0, 2.0):
            r = branching_inequality_experiment(
                1, 1, lam, 2.0, law, WaitingTimeLaw.pareto(tail, 0.5),
                n_sweep, rng.substream(idx),
            )
            rows.append(
                [
                    f"gw-inequality-b{tail}-l{lam}",
                    r.mean,
                    0.0,
                    r.std_error,
                    r.mean >= -3.0 * r.std_error,
                ]
            )
            idx += 1
    r = branching_inequality_experiment(
        1, 1, 1.0, 2.0, law, WaitingTimeLaw.pareto(0.6, 0.5), n_rep,
        rng.substream(idx),
    )
    rows.append(
        ["gw-inequality-positive", r.mean, 0.0, r.std_error, r.mean > 3.0 * r.std_error]
    )
    return rows


def _verify_scaling_rows(seed: int, n_rep: int, h: float) -> list[list]:
    fam = FellerLimitFamily(b=1.0)
    levels = [50, 200, 800]
    noise = math.sqrt(2.0 / n_rep)
    rows = []
    control = scaling_limit_experiment(
        fam, WaitingTimeLaw.deterministic(1.0), 1.0, 1.0, levels, n_rep,
        RngStream(seed=seed, stream_id=1), h=h,
    )
    frac = scaling_limit_experiment(
        fam, WaitingTimeLaw.pareto(0.6, 0.1), 0.6, 1.0, levels, n_rep,
        RngStream(seed=seed, stream_id=2), h=h,
    )
    for name, rep, final_tol in (("control", control, 0.05), ("frac", frac, 0.08)):
        dists = rep.ks_distances
        monotone = all(
            b <= a + 2.0 * noise for a, b in zip(dists, dists[1:])
        )
        for lvl, d in zip(rep.levels, dists):
            rows.append([f"scaling-{name}-ks-n{lvl}", d, final_tol, noise, True])
        rows.append(
            [f"scaling-{name}-final", dists[-1], final_tol, noise, dists[-1] < final_tol]
        )
        rows.append([f"scaling-{name}-monotone", float(monotone), 1.0, noise, monotone])
    return rows


def _cmd_verify(args) -> int:
    m = _merge(args, _VERIFY_DEFAULTS, optional=frozenset({"preset", "n-rep"}))
    target = args.what
    seed = _require_number(m, "seed", int)
    h = _require_number(m, "h")
    preset = m["preset"] or _PRESET_FOR_TARGET[target][0]
    if preset not in _PRESET_FOR_TARGET[target]:
        raise DomainError(
            f"--preset {preset!r} does not belong to verify {target}; "
            f"choose from {_PRESET_FOR_TARGET[target]}"
        )
    if m["n-rep"] is not None:
        n_rep = _require_number(m, "n-rep", int)
    else:
        n_rep = 10_000 if target == "scaling" else 100_000
    if n_rep < 1000:
        raise DomainError("--n-rep must be at least 1000 for verification")

    if target == "moments":
        rows = _verify_moment_rows(preset, seed, n_rep, h)
    elif target == "pmf":
        rows = _verify_pmf_rows(seed, n_rep, h)
    elif target == "branching-inequality":
        rows = _verify_inequality_rows(seed, n_rep)
    else:
        rows = _verify_scaling_rows(seed, n_rep, h)
    _write_csv(m["out"], ["check", "estimate", "target", "std_error", "pass"], rows)
    return 0


# --------------------------------------------------------------------------
# parser assembly

def _add_common(p: argparse.ArgumentParser, keys: dict) -> None:
    for key, default in keys.items():
        if key == "config":
            p.add_argument("--config", default=None, help="JSON file whose keys mirror the flags")
            continue
        kwargs = {"default": None}
        if key in ("process", "pmf", "waits", "t-grid", "out", "preset"):
            kwargs["type"] = str
        else:
            kwargs["type"] = float if not isinstance(default, int) else float
        p.add_argument(f"--{key}", **kwargs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracbranch",
        description="Simulation and verification toolkit for randomly "
        "time-changed branching population models.",
    )
    parser.add_argument("--version", action="version", version=f"fracbranch {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="closed-form moment curves as CSV")
    _add_common(p, _MOMENTS_DEFAULTS)
    p.set_defaults(fn=_cmd_moments)

    p = sub.add_parser("pmf", help="time-changed Yule pmf table as CSV")
    _add_common(p, _PMF_DEFAULTS)
    p.set_defaults(fn=_cmd_pmf)

    p = sub.add_parser("ml-eval", help="evaluate the Mittag-Leffler function")
    _add_common(p, _MLEVAL_DEFAULTS)
    p.set_defaults(fn=_cmd_ml_eval)

    p = sub.add_parser("simulate", help="sample process paths as CSV")
    _add_common(p, _SIMULATE_DEFAULTS)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("verify", help="run a named verification bundle")
    p.add_argument(
        "what",
        choices=("moments", "pmf", "branching-inequality", "scaling"),
        help="which verification family to run",
    )
    _add_common(p, _VERIFY_DEFAULTS)
    p.set_defaults(fn=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.fn(args)
    except _VALIDATION_ERRORS as exc:
        print(f"fracbranch: validation error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"fracbranch: numerical error: {exc}", file=sys.stderr)
        return 3
    except _UnwritableOutput as exc:
        print(f"fracbranch: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
