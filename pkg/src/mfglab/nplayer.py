"""Finite-population layer.

Symmetric Markov-perfect equilibrium of the N+1 player game (exchangeable
(i, n) reduction), forward occupancy evolution through the birth-death
master equation, exact Monte Carlo simulation by thinning, the epsilon-Nash
gap of the decentralized mean-field policy, indifference curves, and the
value-difference approximation of the backward system.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .grid import NumericalFailure, TimeGrid, Trajectory
from .mfg import MfgSolution
from .model import CostModel


@dataclass(frozen=True)
class NPlayerValue:
    """Cost-to-go table u[i, n, k] and policy alpha[i, n, k] = (u_i - u_{1-i})_+.

    ``N`` is the number of *other* players; n counts how many of them are in
    state 0.  Costs are evaluated at theta = n/N.
    """

    model: CostModel
    N: int
    grid: TimeGrid
    u: np.ndarray
    alpha: np.ndarray

    @property
    def value_difference(self) -> np.ndarray:
        """Y(n, t) = u(1, n, t) - u(0, n, t)."""
        return self.u[1] - self.u[0]


@dataclass(frozen=True)
class OccupancyDistribution:
    """Distribution of the count m of players (out of N+1) in state 0."""

    n_players: int
    grid: TimeGrid
    p: np.ndarray          # (n_steps+1, n_players+1)
    mean: np.ndarray       # of m / n_players
    variance: np.ndarray


@dataclass(frozen=True)
class SamplePathSet:
    """Monte Carlo replicas of the occupancy fraction m(t) / (N+1)."""

    n_players: int
    grid: TimeGrid
    seed: int
    paths: np.ndarray      # (replicas, n_steps+1), multiples of 1/(N+1)


@dataclass(frozen=True)
class FlmpReport:
    distances: np.ndarray  # (paths, candidates) sup-norm distances
    nearest: np.ndarray    # (paths,) candidate indices
    counts: np.ndarray     # histogram over candidates


@dataclass(frozen=True)
class YApproxResult:
    N: int
    grid: TimeGrid
    y_approx: np.ndarray   # (N+1, n_steps+1)
    y_exact: np.ndarray
    sup_error: float


def _cost_tables(model: CostModel, N: int):
    thetas = np.arange(N + 1) / N
    return (
        np.asarray(model.eval_running_cost(0, thetas), dtype=float),
        np.asarray(model.eval_running_cost(1, thetas), dtype=float),
        np.asarray(model.eval_terminal_cost(0, thetas), dtype=float),
        np.asarray(model.eval_terminal_cost(1, thetas), dtype=float),
    )


def solve_symmetric_mpe(model: CostModel, N: int, grid: TimeGrid) -> NPlayerValue:
    """Backward solve of the coupled 2(N+1) dimensional terminal value problem.

    The policies of all players are replaced by the instantaneous
    (u_i - u_{1-i})_+ inside every integration stage, so the returned table
    is the unique symmetric Markov-perfect equilibrium.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    f0n, f1n, psi0n, psi1n = _cost_tables(model, N)
    u = _kernels.mpe_backward(f0n, f1n, psi0n, psi1n, model.eta, grid.dt,
                              grid.n_steps)
    if not np.all(np.isfinite(u)):
        raise NumericalFailure("MPE backward solve produced non-finite values")
    alpha = np.maximum(u - u[::-1], 0.0)
    return NPlayerValue(model, N, grid, u, alpha)


def _initial_distribution(initial, n_states):
    if np.isscalar(initial):
        m0 = int(initial)
        if not 0 <= m0 < n_states:
            raise ValueError(f"initial count must lie in [0, {n_states - 1}]")
        p0 = np.zeros(n_states)
        p0[m0] = 1.0
        return p0
    p0 = np.asarray(initial, dtype=float)
    if p0.shape != (n_states,):
        raise ValueError(f"initial distribution must have length {n_states}")
    if np.any(p0 < -1e-12) or abs(p0.sum() - 1.0) > 1e-9:
        raise ValueError("initial distribution must be nonnegative and sum to 1")
    return p0


def forward_occupancy(values: NPlayerValue, initial, model: CostModel) -> OccupancyDistribution:
    """Kolmogorov forward solve of the occupancy count under the MPE policy.

    ``initial`` is either an integer point mass m0 or a probability vector
    over m in {0..N+1}.
    """
    n_players = values.N + 1
    p0 = _initial_distribution(initial, n_players + 1)
    p = _kernels.kfe_forward(values.alpha, model.eta, p0, values.grid.dt,
                             values.grid.n_steps)
    if not np.all(np.isfinite(p)):
        raise NumericalFailure("occupancy solve produced non-finite values")
    sums = p.sum(axis=1)
    if np.max(np.abs(sums - 1.0)) > 1e-9 or p.min() < -1e-12:
        raise NumericalFailure(
            "occupancy distribution lost conservation; refine the time grid"
        )
    fractions = np.arange(n_players + 1) / n_players
    mean = p @ fractions
    variance = p @ fractions ** 2 - mean ** 2
    return OccupancyDistribution(n_players, values.grid, p, mean, variance)


def simulate_population(values: NPlayerValue, m0: int, model: CostModel,
                        seed: int, replicas: int) -> SamplePathSet:
    """Exact-event CTMC simulation of the occupancy count by thinning.

    Candidate events arrive at the constant bound (N+1)(Gamma1 + eta) with
    Gamma1 the maximum of the policy table; each proposal consumes one
    exponential gap and one uniform, drawn per replica from
    ``default_rng((seed, r))``, so identical seeds give identical paths on
    every backend.
    """
    n_players = values.N + 1
    if not 0 <= m0 <= n_players:
        raise ValueError(f"m0 must lie in [0, {n_players}]")
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    grid = values.grid
    gamma1 = float(values.alpha.max())
    lam = n_players * (gamma1 + model.eta)
    if lam == 0.0:
        paths = np.full((replicas, grid.n_steps + 1), m0 / n_players)
        return SamplePathSet(n_players, grid, seed, paths)

    expected = lam * grid.horizon
    block = int(expected + 10.0 * math.sqrt(expected) + 100.0)
    for _ in range(8):
        E = np.empty((replicas, block))
        U = np.empty((replicas, block))
        for r in range(replicas):
            rng = np.random.default_rng((seed, r))
            E[r] = rng.exponential(scale=1.0 / lam, size=block)
            U[r] = rng.random(block)
        counts, exhausted = _kernels.mc_paths(
            values.alpha, model.eta, grid.dt, n_players, m0, grid.horizon,
            lam, E, U, grid.n_steps,
        )
        if not exhausted.any():
            return SamplePathSet(n_players, grid, seed, counts / n_players)
        block *= 2
    raise NumericalFailure("thinning block budget exhausted")


def best_response_gap(model: CostModel, N: int, grid: TimeGrid,
                      solution: MfgSolution) -> float:
    """epsilon-Nash gap of the decentralized policy of an MFG equilibrium.

    Cost (a): the reference player also plays the decentralized beta(i, t),
    evaluated on the joint (i, n) chain.  Cost (b): the reference player best
    responds while the other N keep beta.  Returns (a) - (b) at t = 0 with the
    reference state drawn from the initial mass and n0 = round(N * theta_0).
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    y = np.interp(grid.nodes, solution.theta.times, solution.values.y)
    beta1 = np.maximum(y, 0.0)
    beta0 = np.maximum(-y, 0.0)
    f0n, f1n, psi0n, psi1n = _cost_tables(model, N)
    v0, v1 = _kernels.response_chain_backward(
        f0n, f1n, psi0n, psi1n, beta0, beta1, model.eta, grid.dt,
        grid.n_steps, False,
    )
    u0, u1 = _kernels.response_chain_backward(
        f0n, f1n, psi0n, psi1n, beta0, beta1, model.eta, grid.dt,
        grid.n_steps, True,
    )
    theta_bar = float(solution.theta.values[0])
    n0 = int(math.floor(theta_bar * N + 0.5))
    gap0 = v0[n0] - u0[n0]
    gap1 = v1[n0] - u1[n0]
    return float(theta_bar * gap0 + (1.0 - theta_bar) * gap1)


def flmp_distance(paths_or_mean, candidates) -> FlmpReport:
    """Sup-norm distance of occupancy paths to candidate equilibrium masses."""
    if not candidates:
        raise ValueError("candidates must be nonempty")
    if isinstance(paths_or_mean, SamplePathSet):
        paths = paths_or_mean.paths
        times = paths_or_mean.grid.nodes
    elif isinstance(paths_or_mean, Trajectory):
        paths = paths_or_mean.values[None, :]
        times = paths_or_mean.times
    else:
        raise TypeError("expected a SamplePathSet or Trajectory")
    dists = np.empty((paths.shape[0], len(candidates)))
    for c, cand in enumerate(candidates):
        theta_c = np.interp(times, cand.theta.times, cand.theta.values)
        dists[:, c] = np.max(np.abs(paths - theta_c[None, :]), axis=1)
    nearest = np.argmin(dists, axis=1)
    counts = np.bincount(nearest, minlength=len(candidates))
    return FlmpReport(dists, nearest, counts)


def _upcrossings(row, dead_band=1e-12):
    out = []
    prev_sign = 0
    prev_idx = -1
    for j, v in enumerate(row):
        if abs(v) <= dead_band:
            continue
        s = 1 if v > 0 else -1
        if prev_sign == -1 and s == 1:
            if j == prev_idx + 1:
                out.append(prev_idx + (-row[prev_idx]) / (row[j] - row[prev_idx]))
            else:
                out.append(0.5 * (prev_idx + j))  # midpoint of the zero run
        prev_sign, prev_idx = s, j
    return np.asarray(out)


def indifference_curve(values: NPlayerValue) -> list:
    """Per-node locations where n -> u(1,n,t) - u(0,n,t) upcrosses zero.

    Crossing positions are fractional (linear interpolation in n); a run of
    values inside the dead band between a negative and a positive neighbour
    reports its midpoint.  Nodes without an upcrossing get an empty array.
    """
    Y = values.value_difference
    return [_upcrossings(Y[:, k]) for k in range(Y.shape[1])]


def solve_Y_approx(model: CostModel, N: int, grid: TimeGrid) -> YApproxResult:
    """Backward solve of the decoupled value-difference approximation and its
    comparison against the exact Markov-perfect difference."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    f0n, f1n, psi0n, psi1n = _cost_tables(model, N)
    y_approx = _kernels.yapprox_backward(f1n - f0n, psi1n - psi0n, model.eta,
                                         grid.dt, grid.n_steps)
    if not np.all(np.isfinite(y_approx)):
        raise NumericalFailure("approximate solve produced non-finite values")
    exact = solve_symmetric_mpe(model, N, grid)
    y_exact = exact.value_difference
    sup_error = float(np.max(np.abs(y_approx - y_exact)))
    return YApproxResult(N, grid, y_approx, y_exact, sup_error)
