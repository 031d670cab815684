"""Mean field game layer.

Single-player best response, forward population flow, the mean field map
(theta -> best response -> induced mass trajectory), shooting-based
enumeration of all finite-horizon equilibria through the reduced (x, y)
plane, Hamiltonian analytics, and infinite-horizon classification.

Reduced coordinates: x = 2*theta - 1 (centered mass), y = u1 - u0 (value
difference).  For any two-state game with time-independent running costs the
pair (x, y) is autonomous:

    dx/dt = y - x|y| - 2*eta*x
    dy/dt = -df(x) + y|y|/2 + 2*eta*y,      df(x) = f(1,th) - f(0,th)

with a conserved energy H(x,y) = F(x) - 2*eta*x*y + (y^2 - x*y|y|)/2 where
F' = df.  The named "follow" / "avoid" games have df(x) = +x / -x.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .grid import NumericalFailure, TimeGrid, Trajectory, make_grid
from .model import CostModel

GAMES = ("follow", "avoid")

DEAD_BAND = 1e-9     # |value| below this counts as "on the axis"
STATE_CAP = 1e4      # freeze shots beyond this amplitude (pre-blow-up)


def _game_sign(game: str) -> float:
    if game == "follow":
        return 1.0
    if game == "avoid":
        return -1.0
    raise ValueError(f"game must be one of {GAMES}, got {game!r}")


def _game_df_table(game: str):
    sign = _game_sign(game)
    return np.array([-1.0, 1.0]), np.array([-sign, sign])


def _clean_theta(values, slack=1e-6):
    values = np.asarray(values, dtype=float)
    if np.any(values < -slack) or np.any(values > 1.0 + slack):
        raise ValueError("theta trajectory leaves [0, 1]")
    return np.clip(values, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class XYState:
    x: float
    y: float


@dataclass(frozen=True)
class ValuePair:
    """Cost-to-go pair u(0, t), u(1, t) sampled on a grid."""

    grid: TimeGrid
    u0: np.ndarray
    u1: np.ndarray

    @property
    def y(self) -> np.ndarray:
        return self.u1 - self.u0


@dataclass(frozen=True)
class ShotResult:
    path: Trajectory                 # components ("x", "y")
    hamiltonian_drift: float
    exited: bool                     # left [-1, 1] in x at some node


@dataclass(frozen=True)
class MfgSolution:
    """A verified equilibrium of the mean field game."""

    model: CostModel
    y0: float
    xy: Trajectory                   # components ("x", "y")
    theta: Trajectory
    values: ValuePair
    winding: int                     # quadrants traversed; 0 = zero solution
    sign: int                        # sign of y0 (0 for the zero solution)
    fixed_point_residual: float      # sup |T(theta) - theta|
    hamiltonian_drift: float
    recovery_gap: float              # sup |(u1 - u0) - y|
    exited: bool
    tangent: bool = False

    @property
    def grid(self) -> TimeGrid:
        return self.theta.grid


@dataclass(frozen=True)
class OrbitReport:
    """Orbit of repeated mean-field-map applications."""

    iterates: list
    iterate_indices: list
    residuals: np.ndarray
    converged: bool
    iterations: int
    limit: Trajectory


@dataclass(frozen=True)
class TransientCandidate:
    y0: float
    limit: XYState
    label: str                       # "+P", "-P", or "origin"


# ---------------------------------------------------------------------------
# Best response / population flow / mean field map
# ---------------------------------------------------------------------------

def solve_best_response(model: CostModel, theta: Trajectory) -> ValuePair:
    """Backward HJB solve of a single player against the mass trajectory."""
    th = _clean_theta(theta.values)
    psi0 = float(model.eval_terminal_cost(0, th[-1]))
    psi1 = float(model.eval_terminal_cost(1, th[-1]))
    u0, u1 = _kernels.br_backward(
        th, model.theta_knots, model.f_vals[0], model.f_vals[1],
        psi0, psi1, model.eta, theta.grid.dt,
    )
    if not (np.all(np.isfinite(u0)) and np.all(np.isfinite(u1))):
        raise NumericalFailure("best-response solve produced non-finite values")
    return ValuePair(theta.grid, u0, u1)


def forward_population(model: CostModel, values: ValuePair, theta0: float) -> Trajectory:
    """Forward mass flow under the decentralized policy of ``values``."""
    if not 0.0 <= theta0 <= 1.0:
        raise ValueError(f"theta0 must lie in [0, 1], got {theta0}")
    th = _kernels.pop_forward(values.y, model.eta, float(theta0), values.grid.dt)
    if not np.all(np.isfinite(th)):
        raise NumericalFailure("population flow produced non-finite values")
    return Trajectory(values.grid, th, labels=("theta",))


def apply_T(model: CostModel, theta: Trajectory) -> Trajectory:
    """One application of the mean field map; keeps theta_0 pinned."""
    values = solve_best_response(model, theta)
    return forward_population(model, values, float(theta.values[0]))


def iterate_T(model: CostModel, theta0: Trajectory, max_iter: int, tol: float,
              stride: int = 100) -> OrbitReport:
    """Pure fixed-point iteration theta <- T(theta), no damping.

    Stops when the sup-norm difference of successive iterates drops below
    ``tol``; non-convergence is reported in the flag, not raised.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    current = theta0
    kept = [np.array(theta0.values, copy=True)]
    kept_idx = [0]
    residuals = []
    converged = False
    iterations = 0
    for it in range(1, max_iter + 1):
        new = apply_T(model, current)
        resid = float(np.max(np.abs(new.values - current.values)))
        residuals.append(resid)
        current = new
        iterations = it
        if it % stride == 0:
            kept.append(np.array(current.values, copy=True))
            kept_idx.append(it)
        if resid < tol:
            converged = True
            break
    if kept_idx[-1] != iterations:
        kept.append(np.array(current.values, copy=True))
        kept_idx.append(iterations)
    return OrbitReport(kept, kept_idx, np.asarray(residuals), converged,
                       iterations, current)


# ---------------------------------------------------------------------------
# Phase plane analytics
# ---------------------------------------------------------------------------

def xy_drift(game: str, eta: float, s: XYState) -> XYState:
    """Right-hand side of the reduced dynamics for the named game."""
    sign = _game_sign(game)
    ay = abs(s.y)
    return XYState(
        s.y - s.x * ay - 2.0 * eta * s.x,
        -sign * s.x + 0.5 * s.y * ay + 2.0 * eta * s.y,
    )


def hamiltonian(game: str, eta: float, s: XYState) -> float:
    """Conserved energy of the reduced dynamics."""
    sign = _game_sign(game)
    return (sign * s.x ** 2 - 4.0 * eta * s.x * s.y
            + s.y ** 2 - s.x * s.y * abs(s.y)) / 2.0


def _df_antiderivative(model: CostModel):
    """Knot values of F(x) = int_0^x df, exact for the piecewise-linear df."""
    kx, kv = model.df_table()
    cumulative = np.concatenate(
        ([0.0], np.cumsum(0.5 * (kv[:-1] + kv[1:]) * np.diff(kx)))
    )
    j = min(max(int(np.searchsorted(kx, 0.0, side="right")) - 1, 0), kx.size - 2)
    slope = (kv[j + 1] - kv[j]) / (kx[j + 1] - kx[j])
    at_zero = cumulative[j] + kv[j] * (0.0 - kx[j]) + 0.5 * slope * (0.0 - kx[j]) ** 2
    return kx, kv, cumulative - at_zero


def _hamiltonian_values(model: CostModel, xs, ys):
    """H along arrays of reduced states, valid for any cost family."""
    kx, kv, Fk = _df_antiderivative(model)
    x = np.clip(np.asarray(xs, dtype=float), kx[0], kx[-1])
    j = np.clip(np.searchsorted(kx, x, side="right") - 1, 0, kx.size - 2)
    slope = (kv[j + 1] - kv[j]) / (kx[j + 1] - kx[j])
    dx = x - kx[j]
    F = Fk[j] + kv[j] * dx + 0.5 * slope * dx ** 2
    ys = np.asarray(ys, dtype=float)
    return F - 2.0 * model.eta * x * ys + 0.5 * (ys ** 2 - x * ys * np.abs(ys))


def shoot(game: str, eta: float, x0: float, y0: float, grid: TimeGrid) -> ShotResult:
    """Integrate the reduced dynamics from (x0, y0) and report the H drift."""
    if abs(x0) > 1.0:
        raise ValueError(f"|x0| must be <= 1, got {x0}")
    kx, kv = _game_df_table(game)
    xs, ys, exited, capped = _kernels.xy_path(
        float(x0), float(y0), float(eta), kx, kv, grid.dt, grid.n_steps, STATE_CAP
    )
    if capped or not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise NumericalFailure("shot state blew up", time=None)
    H = _ham_closed(game, eta, xs, ys)
    drift = float(np.max(np.abs(H - H[0])))
    path = Trajectory(grid, np.column_stack([xs, ys]), labels=("x", "y"))
    return ShotResult(path, drift, bool(exited))


def _ham_closed(game, eta, xs, ys):
    sign = _game_sign(game)
    return (sign * xs ** 2 - 4.0 * eta * xs * ys + ys ** 2
            - xs * ys * np.abs(ys)) / 2.0


def critical_horizon(eta: float) -> float:
    """Horizon below which the zero trajectory is the unique equilibrium."""
    if not 0.0 <= eta < 0.5:
        raise ValueError(f"critical horizon requires 0 <= eta < 0.5, got {eta}")
    return (math.pi - math.acos(2.0 * eta)) / math.sqrt(1.0 - 4.0 * eta * eta)


def count_equilibria(eta: float, horizon: float) -> int:
    """Closed-form number of equilibria of the symmetric follow game."""
    if eta < 0:
        raise ValueError("eta must be >= 0")
    if eta >= 0.5:
        return 1
    tc = critical_horizon(eta)
    if horizon <= tc:
        return 1
    return 1 + 2 * math.ceil((horizon - tc) * math.sqrt(1.0 - 4.0 * eta * eta) / math.pi)


def equilibrium_points(game: str, eta: float) -> list:
    """Rest points of the reduced dynamics (critical points of H)."""
    if eta < 0:
        raise ValueError("eta must be >= 0")
    points = [XYState(0.0, 0.0)]
    if game == "follow" and eta < 0.5:
        root = math.sqrt(2.0 + eta * eta)
        xbar = 1.0 - eta * eta - eta * root
        ybar = root - 3.0 * eta
        points += [XYState(xbar, ybar), XYState(-xbar, -ybar)]
    else:
        _game_sign(game)
    for p in points:
        gx, gy = _grad_h(game, eta, p.x, p.y)
        if abs(gx) > 1e-12 or abs(gy) > 1e-12:
            raise NumericalFailure(
                f"gradient check failed at ({p.x}, {p.y}): ({gx}, {gy})"
            )
    return points


def _grad_h(game, eta, x, y):
    sign = _game_sign(game)
    hx = sign * x - 2.0 * eta * y - 0.5 * y * abs(y)
    hy = y - x * abs(y) - 2.0 * eta * x
    return hx, hy


# ---------------------------------------------------------------------------
# Equilibrium enumeration by shooting
# ---------------------------------------------------------------------------

def _mismatch_batch(model, x0, y0s, dt, n_steps):
    kx, kv = model.df_table()
    xT, yT, exited, capped = _kernels.xy_batch(
        float(x0), np.asarray(y0s, float), model.eta, kx, kv, dt, n_steps, STATE_CAP
    )
    g = yT - model.terminal_difference(np.clip(xT, -1.0, 1.0))
    return g, exited, capped


def _sign_changes(values, dead_band=DEAD_BAND):
    signs = np.sign(values)
    signs[np.abs(values) < dead_band] = 0.0
    signs = signs[signs != 0.0]
    if signs.size < 2:
        return 0
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def _winding(xs, ys):
    if np.max(np.abs(xs)) < DEAD_BAND and np.max(np.abs(ys)) < DEAD_BAND:
        return 0
    # boundary nodes sit on their target sets by construction (x_0 pinned,
    # y_T on the terminal manifold up to solver tolerance), so only interior
    # crossings count: drop the first x node and the last y node
    return _sign_changes(xs[1:]) + _sign_changes(ys[:-1]) + 1


def _bisect_roots(model, x0, lo, hi, glo, dt, n_steps, tol):
    # Near the separatrix dy_T/dy0 grows like exp(T), so brackets are driven
    # well below the requested tolerance (down to float resolution) to keep
    # terminal mismatches, and hence fixed-point residuals, small.
    if lo.size == 0:
        return np.empty(0)
    lo = lo.copy()
    hi = hi.copy()
    glo = glo.copy()
    tol = min(tol, 1e-14)
    for _ in range(120):
        width = hi - lo
        if np.max(width) < tol or np.all(width <= 4e-16 * np.maximum(np.abs(lo), 1.0)):
            break
        mid = 0.5 * (lo + hi)
        gmid, _, _ = _mismatch_batch(model, x0, mid, dt, n_steps)
        same = np.sign(gmid) == np.sign(glo)
        exact = gmid == 0.0
        lo = np.where(same & ~exact, mid, lo)
        glo = np.where(same & ~exact, gmid, glo)
        hi = np.where(~same | exact, mid, hi)
        lo = np.where(exact, mid, lo)
    return 0.5 * (lo + hi)


def enumerate_equilibria(model: CostModel, theta0: float, grid: TimeGrid,
                         scan_points: int = 2000, y0_tol: float = 1e-10,
                         residual_tol: float = 1e-4) -> list:
    """All mean-field equilibria with initial mass ``theta0`` on ``grid``.

    Scans the initial value difference y0 over a bracket that provably
    contains every root of the boundary mismatch
    g(y0) = y_T - [psi(1, th_T) - psi(0, th_T)], refines each sign change by
    bisection, classifies solutions by winding number, and verifies each one
    against the mean field map.
    """
    if not 0.0 <= theta0 <= 1.0:
        raise ValueError(f"theta0 must lie in [0, 1], got {theta0}")
    x0 = 2.0 * theta0 - 1.0
    dt = grid.dt
    n_steps = grid.n_steps
    # |y| = |u1 - u0| is bounded by twice the cost-to-go bound.
    y_max = 2.0 * model.value_bound() + 1.0
    y0s = np.linspace(-y_max, y_max, scan_points + 1)
    g, _, capped = _mismatch_batch(model, x0, y0s, dt, n_steps)

    if np.sign(g[0]) == np.sign(g[-1]):
        warnings.warn(
            "boundary mismatch has equal signs at the bracket extremes; "
            "roots may lie outside the scanned range",
            RuntimeWarning,
        )

    finite = np.isfinite(g)
    flip = finite[:-1] & finite[1:] & (np.sign(g[:-1]) * np.sign(g[1:]) < 0)
    roots = list(_bisect_roots(
        model, x0, y0s[:-1][flip], y0s[1:][flip], g[:-1][flip], dt, n_steps, y0_tol
    ))
    tangent_flags = [False] * len(roots)

    exact = np.where(finite & (np.abs(g) == 0.0))[0]
    for idx in exact:
        roots.append(float(y0s[idx]))
        tangent_flags.append(False)

    for y0 in _edge_refine(model, x0, y0s, capped, roots, dt, n_steps, y0_tol):
        roots.append(y0)
        tangent_flags.append(False)

    tangents = _tangent_roots(model, x0, y0s, g, flip, dt, n_steps)
    roots.extend(tangents)
    tangent_flags.extend([True] * len(tangents))

    order = np.argsort(roots)
    solutions = []
    last_y0 = None
    for idx in order:
        y0 = float(roots[idx])
        if last_y0 is not None and abs(y0 - last_y0) < 1e-9:
            continue
        last_y0 = y0
        solutions.append(_build_solution(model, theta0, x0, y0, grid,
                                         residual_tol, tangent_flags[idx]))
    return solutions


def _capped_boundary(model, x0, y_in, y_out, dt, n_steps):
    """Bisect the blow-up flag to locate the separatrix initial value."""
    for _ in range(80):
        mid = 0.5 * (y_in + y_out)
        if mid == y_in or mid == y_out:
            break
        _, _, cap = _mismatch_batch(model, x0, np.array([mid]), dt, n_steps)
        if cap[0]:
            y_out = mid
        else:
            y_in = mid
    return 0.5 * (y_in + y_out)


def _edge_refine(model, x0, y0s, capped, known_roots, dt, n_steps, y0_tol,
                 n_log=400):
    """Log-spaced sweep up to the separatrix on each side of y0 = 0.

    Slow near-separatrix solutions accumulate geometrically below the level
    whose traversal time diverges (their distance to it shrinks like
    exp(-T)), so a uniform scan misses them.  The separatrix is located by
    bisecting the blow-up flag between the last surviving and first capped
    sample; sampling its inner neighbourhood at logarithmic spacing then
    recovers every remaining sign change of the boundary mismatch.
    """
    extra = []
    for side in (1.0, -1.0):
        idx = np.where((np.sign(y0s) == side) & capped)[0]
        if idx.size == 0:
            continue
        edge_idx = idx.min() if side > 0 else idx.max()
        inner_idx = edge_idx - 1 if side > 0 else edge_idx + 1
        if not 0 <= inner_idx < y0s.size or capped[inner_idx]:
            continue
        boundary = _capped_boundary(
            model, x0, float(y0s[inner_idx]), float(y0s[edge_idx]), dt, n_steps
        )
        if side > 0:
            inner = [r for r in known_roots if 0.0 < r < boundary]
            y_base = max(inner) if inner else 0.0
        else:
            inner = [r for r in known_roots if boundary < r < 0.0]
            y_base = min(inner) if inner else 0.0
        span = boundary - y_base
        if span == 0.0:
            continue
        deltas = np.logspace(-0.001, -15.5, n_log)
        ys = boundary - span * deltas
        gs, _, _ = _mismatch_batch(model, x0, ys, dt, n_steps)
        finite = np.isfinite(gs)
        flip = finite[:-1] & finite[1:] & (np.sign(gs[:-1]) * np.sign(gs[1:]) < 0)
        refined = _bisect_roots(
            model, x0,
            np.minimum(ys[:-1][flip], ys[1:][flip]),
            np.maximum(ys[:-1][flip], ys[1:][flip]),
            gs[:-1][flip] if side > 0 else gs[1:][flip],
            dt, n_steps, y0_tol,
        )
        extra.extend(float(r) for r in refined)
    return extra


def _tangent_roots(model, x0, y0s, g, flip, dt, n_steps, tol=1e-9):
    """Roots where g touches zero without a sign change (bifurcation tangency)."""
    finite = np.isfinite(g)
    interior = np.where(
        finite[1:-1] & finite[:-2] & finite[2:]
        & (np.abs(g[1:-1]) < np.minimum(np.abs(g[:-2]), np.abs(g[2:])))
        & (np.abs(g[1:-1]) < 1e-5)
    )[0] + 1
    found = []
    for idx in interior:
        if flip[idx - 1] or flip[idx]:
            continue
        lo, hi = y0s[idx - 1], y0s[idx + 1]
        for _ in range(80):
            thirds = np.array([lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0])
            gt, _, _ = _mismatch_batch(model, x0, thirds, dt, n_steps)
            if abs(gt[0]) < abs(gt[1]):
                hi = thirds[1]
            else:
                lo = thirds[0]
            if hi - lo < 1e-12:
                break
        mid = np.array([0.5 * (lo + hi)])
        gm, _, _ = _mismatch_batch(model, x0, mid, dt, n_steps)
        if abs(gm[0]) < tol:
            found.append(float(mid[0]))
    return found


def _build_solution(model, theta0, x0, y0, grid, residual_tol, tangent):
    kx, kv = model.df_table()
    xs, ys, exited, capped = _kernels.xy_path(
        float(x0), float(y0), model.eta, kx, kv, grid.dt, grid.n_steps, STATE_CAP
    )
    if capped:
        raise NumericalFailure(f"solution path blew up for y0={y0}")
    H = _hamiltonian_values(model, xs, ys)
    drift = float(np.max(np.abs(H - H[0])))
    winding = _winding(xs, ys)
    sign = 0 if winding == 0 else (1 if y0 > 0 else -1)
    theta_vals = np.clip((1.0 + xs) / 2.0, 0.0, 1.0)
    theta = Trajectory(grid, theta_vals, labels=("theta",))
    values = solve_best_response(model, theta)
    recovery_gap = float(np.max(np.abs(values.y - ys)))
    mapped = forward_population(model, values, float(theta_vals[0]))
    residual = float(np.max(np.abs(mapped.values - theta_vals)))
    if residual > residual_tol:
        warnings.warn(
            f"solution y0={y0:.6g} has fixed-point residual {residual:.3g} "
            f"above tolerance {residual_tol:.3g}",
            RuntimeWarning,
        )
    xy = Trajectory(grid, np.column_stack([xs, ys]), labels=("x", "y"))
    return MfgSolution(
        model=model, y0=y0, xy=xy, theta=theta, values=values,
        winding=winding, sign=sign, fixed_point_residual=residual,
        hamiltonian_drift=drift, recovery_gap=recovery_gap,
        exited=bool(exited), tangent=tangent,
    )


# ---------------------------------------------------------------------------
# Infinite-horizon analytics
# ---------------------------------------------------------------------------

def orbit_period(eta: float, amplitude: float, dt: float = 1e-3) -> float:
    """Period of the closed follow-game orbit whose peak |x| is ``amplitude``.

    Measured as the gap between successive same-direction crossings of the
    x = 0 section; the orbit is started at its x-extremum (amplitude, y*)
    where y* solves dx/dt = 0.
    """
    if not 0.0 <= eta < 0.5:
        raise ValueError("periodic orbits require 0 <= eta < 0.5")
    xbar = equilibrium_points("follow", eta)[1].x
    if not 0.0 < amplitude < xbar:
        raise ValueError(
            f"amplitude must lie strictly inside (0, {xbar:.6g}), got {amplitude}"
        )
    y_star = 2.0 * eta * amplitude / (1.0 - amplitude)
    base = 2.0 * math.pi / math.sqrt(1.0 - 4.0 * eta * eta)
    kx, kv = _game_df_table("follow")
    crossings = []
    x, y = amplitude, y_star
    t_offset = 0.0
    chunk = max(int(round(2.0 * base / dt)), 100)
    for _ in range(40):
        xs, ys, _, capped = _kernels.xy_path(x, y, eta, kx, kv, dt, chunk, STATE_CAP)
        if capped:
            raise NumericalFailure("periodic orbit integration blew up")
        down = np.where((xs[:-1] > 0.0) & (xs[1:] <= 0.0))[0]
        for k in down:
            frac = xs[k] / (xs[k] - xs[k + 1])
            crossings.append(t_offset + (k + frac) * dt)
            if len(crossings) == 2:
                return crossings[1] - crossings[0]
        x, y = xs[-1], ys[-1]
        t_offset += chunk * dt
    raise NumericalFailure("failed to observe two section crossings")


def _level_roots(game, eta, x0, level):
    """Solve H(x0, y) = level for y; H is quadratic in y on each half-line."""
    sign = _game_sign(game)
    roots = []
    for half in (1.0, -1.0):
        a = 0.5 * (1.0 - half * x0)
        b = -2.0 * eta * x0
        c = 0.5 * sign * x0 * x0 - level
        if abs(a) < 1e-14:
            if abs(b) > 1e-14:
                candidates = [-c / b]
            else:
                candidates = []
        else:
            disc = b * b - 4.0 * a * c
            if disc < 0:
                candidates = []
            else:
                sq = math.sqrt(disc)
                candidates = [(-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a)]
        for y in candidates:
            if half * y >= -1e-12:
                roots.append(float(y))
    return sorted(set(roots))


def infinite_horizon_transient(game: str, eta: float, x0: float,
                               horizon_proxy: float) -> list:
    """Initial value-differences whose trajectories stay in [-1, 1] and settle.

    Candidates come from the contour conditions (H through the saddle points
    for eta < 1/2 on the follow game, H = 0 otherwise); each is verified by
    shooting over ``horizon_proxy`` and classified by the limit it approaches
    within 0.01.
    """
    if abs(x0) > 1.0:
        raise ValueError(f"|x0| must be <= 1, got {x0}")
    points = equilibrium_points(game, eta)
    if game == "follow" and eta < 0.5:
        targets = [(points[1], "+P"), (points[2], "-P")]
        level = hamiltonian(game, eta, points[1])
        candidates = _level_roots(game, eta, x0, level)
    else:
        targets = [(points[0], "origin")]
        candidates = _level_roots(game, eta, x0, 0.0)
        if not candidates:
            raise NumericalFailure(
                f"no contour root for H({x0}, y) = 0 at eta={eta}"
            )
        candidates = [min(candidates, key=abs)]

    if not candidates:
        raise NumericalFailure(
            f"no contour roots through the saddle level at x0={x0}, eta={eta}"
        )

    kx, kv = _game_df_table(game)
    dt = 1e-3
    n_steps = int(round(horizon_proxy / dt))
    out = []
    for y0 in candidates:
        # capped (eventually blown-up) shots are kept: hits only count while
        # the path has stayed inside [-1, 1], which excludes the frozen tail
        xs, ys, _, _ = _kernels.xy_path(
            float(x0), float(y0), eta, kx, kv, dt, n_steps, STATE_CAP
        )
        verdict = None
        inside = np.abs(xs) <= 1.0 + 1e-9
        for target, label in targets:
            dist = np.hypot(xs - target.x, ys - target.y)
            hits = np.where(dist < 0.01)[0]
            if hits.size and np.all(inside[: hits[0] + 1]):
                if verdict is None or hits[0] < verdict[0]:
                    verdict = (hits[0], target, label)
        if verdict is not None:
            out.append(TransientCandidate(float(y0), verdict[1], verdict[2]))
    return out
