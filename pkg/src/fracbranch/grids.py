"""Grid-valued carriers shared by the special-function and process modules."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionError

__all__ = ["GridFunction", "PathGrid"]


def _as_1d(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise PreconditionError(f"{name} must be a nonempty 1-d array")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class GridFunction:
    """A real function sampled on a strictly increasing time grid."""

    t_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = _as_1d(self.t_grid, "t_grid")
        v = _as_1d(self.values, "values")
        if t.size != v.size:
            raise PreconditionError("t_grid and values must have equal length")
        if t[0] < 0.0:
            raise DomainError("t_grid must start at a nonnegative time")
        if t.size > 1 and not np.all(np.diff(t) > 0.0):
            raise PreconditionError("t_grid must be strictly increasing")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.t_grid.size

    def uniform_step(self, rel_tol: float = 1e-8) -> float:
        """Return the grid step, raising if the grid is not uniform."""
        if len(self) < 2:
            raise PreconditionError("grid needs at least two points")
        steps = np.diff(self.t_grid)
        h = steps[0]
        if np.max(np.abs(steps - h)) > rel_tol * h:
            raise PreconditionError("grid is not uniform")
        return float(h)


@dataclass(frozen=True)
class PathGrid:
    """A nonnegative process path sampled on an increasing time grid.

    The path is read as a cadlag step function: between grid points the
    process keeps the value of the most recent grid point.
    """

    t_grid: np.ndarray
    values: np.ndarray
    interpolation: str = field(default="step")

    def __post_init__(self):
        t = _as_1d(self.t_grid, "t_grid")
        v = _as_1d(self.values, "values")
        if t.size != v.size:
            raise PreconditionError("t_grid and values must have equal length")
        if t[0] < 0.0:
            raise DomainError("t_grid must start at a nonnegative time")
        if t.size > 1 and not np.all(np.diff(t) > 0.0):
            raise PreconditionError("t_grid must be strictly increasing")
        if np.any(v < 0.0):
            raise DomainError("path values must be nonnegative")
        if self.interpolation not in ("step", "linear"):
            raise DomainError("interpolation must be 'step' or 'linear'")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.t_grid.size

    def value_at(self, t) -> np.ndarray:
        """Evaluate the path at times ``t`` (cadlag/linear per ``interpolation``)."""
        tq = np.asarray(t, dtype=float)
        if np.any(tq < self.t_grid[0]):
            raise DomainError("query time precedes the path origin")
        if self.interpolation == "linear":
            return np.interp(tq, self.t_grid, self.values)
        idx = np.searchsorted(self.t_grid, tq, side="right") - 1
        return self.values[idx]
