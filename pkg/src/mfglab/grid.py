"""Uniform time grids, fixed-step RK4 integration, and sampled trajectories.

Everything downstream (best-response solves, population flows, shooting,
kernel quadrature) shares these grids so that fixed-point iteration and
kernel discretisation see the same nodes.
"""

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

State = Union[float, np.ndarray]


class NumericalFailure(RuntimeError):
    """Raised when an integration produces a non-finite value.

    ``time`` carries the grid time at which the failure was detected.
    """

    def __init__(self, message: str, time: float | None = None):
        if time is not None:
            message = f"{message} (at t={time:.6g})"
        super().__init__(message)
        self.time = time


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k*dt, k = 0..n_steps, with n_steps*dt = horizon."""

    horizon: float
    n_steps: int

    def __post_init__(self):
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise ValueError(f"horizon must be finite and > 0, got {self.horizon}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise ValueError(f"n_steps must be an integer >= 2, got {self.n_steps}")
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)

    def __len__(self) -> int:
        return self.n_steps + 1


def make_grid(horizon: float, n_steps: int) -> TimeGrid:
    """Build a uniform time grid over [0, horizon] with n_steps steps."""
    return TimeGrid(horizon, n_steps)


@dataclass(frozen=True)
class Trajectory:
    """A function of time sampled on a uniform grid.

    ``values`` has shape (n_steps+1,) for scalar trajectories or
    (n_steps+1, d) for d-component ones; all entries must be finite.
    """

    grid: TimeGrid
    values: np.ndarray
    labels: tuple = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape[0] != len(self.grid):
            raise ValueError(
                f"values length {values.shape[0]} != grid length {len(self.grid)}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("trajectory values must all be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def times(self) -> np.ndarray:
        return self.grid.nodes

    def component(self, label: str) -> np.ndarray:
        if label not in self.labels:
            raise KeyError(f"no component {label!r}; have {self.labels}")
        idx = self.labels.index(label)
        return self.values if self.values.ndim == 1 else self.values[:, idx]


def interpolate(traj: Trajectory, t: float) -> State:
    """Piecewise-linear interpolation; exact at grid nodes."""
    horizon = traj.grid.horizon
    slack = 4.0 * np.finfo(float).eps * horizon
    if t < -slack or t > horizon + slack:
        raise ValueError(f"t={t} outside [0, {horizon}]")
    t = min(max(t, 0.0), horizon)
    pos = t / traj.grid.dt
    k = min(int(pos), traj.grid.n_steps - 1)
    w = pos - k
    v = traj.values
    return (1.0 - w) * v[k] + w * v[k + 1]


def _rk4(drift: Callable, start: State, grid: TimeGrid, forward: bool) -> Trajectory:
    scalar = np.isscalar(start) or np.ndim(start) == 0
    y = float(start) if scalar else np.array(start, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("initial/terminal state must be finite")

    n = grid.n_steps
    dt = grid.dt if forward else -grid.dt
    times = grid.nodes
    out = np.empty(n + 1) if scalar else np.empty((n + 1, np.size(y)))
    idx = 0 if forward else n
    out[idx] = y

    order = range(n) if forward else range(n, 0, -1)
    for k in order:
        t = times[k]
        k1 = drift(y, t)
        k2 = drift(y + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = drift(y + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = drift(y + dt * k3, t + dt)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NumericalFailure("drift evaluation produced non-finite state", t)
        idx = k + 1 if forward else k - 1
        out[idx] = y
    return Trajectory(grid, out)


def integrate_forward(drift: Callable, initial: State, grid: TimeGrid) -> Trajectory:
    """Classical 4th-order fixed-step integration of an initial value problem.

    ``drift(state, t)`` must be evaluable at all grid nodes and midpoints;
    node 0 of the result equals ``initial`` exactly.
    """
    return _rk4(drift, initial, grid, forward=True)


def integrate_backward(drift: Callable, terminal: State, grid: TimeGrid) -> Trajectory:
    """As integrate_forward, stepping from node n_steps down to node 0."""
    return _rk4(drift, terminal, grid, forward=False)
