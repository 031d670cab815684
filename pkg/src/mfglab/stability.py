"""Stability analytics for the mean field map and the reduced dynamics.

Gateaux-derivative kernels of the map around fixed points, power-iteration
spectra, the closed-form reference spectrum of the min(t,u) kernel,
sup-norm operator bounds, the eigenvalue-crossing sweep in the horizon, and
linear asymptotic stability of phase-plane rest points.
"""

import math
from dataclasses import dataclass

import numpy as np

from .grid import NumericalFailure, Trajectory
from .mfg import MfgSolution, XYState, _game_sign, _grad_h, apply_T
from .model import CostModel


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric discretization M[i][j] ~ K(t_i, t_j) * (T/n), t_i = i*T/n, i=1..n."""

    n: int
    horizon: float
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (self.n, self.n):
            raise ValueError(f"matrix must be ({self.n}, {self.n}), got {m.shape}")
        if np.max(np.abs(m - m.T)) > 1e-12:
            raise ValueError("kernel matrix must be symmetric to 1e-12")
        if m.min() < -1e-12:
            raise ValueError("kernel matrix entries must be >= -1e-12")
        object.__setattr__(self, "matrix", m)

    @property
    def times(self) -> np.ndarray:
        return np.arange(1, self.n + 1) * (self.horizon / self.n)


@dataclass(frozen=True)
class NormBound:
    c: float
    bound: float           # c^2, bound on the composed linearization
    contraction: bool      # c < 1


@dataclass(frozen=True)
class StabilityReport:
    point: XYState
    matrix: np.ndarray             # linearized dynamics A, trace zero
    eigenvalues: tuple             # (+lambda, -lambda), real or purely imaginary
    classification: str
    det_hessian: float


def kernel_zero_traj(eta: float, horizon: float, n: int = 1000) -> KernelMatrix:
    """Kernel of the map linearized about the zero trajectory.

    K(t, u) = exp(-2*eta*max(t,u)) * sinh(2*eta*min(t,u)) / (2*eta), with the
    eta -> 0 limit min(t, u).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if eta < 0:
        raise ValueError("eta must be >= 0")
    t = np.arange(1, n + 1) * (horizon / n)
    tmin = np.minimum.outer(t, t)
    if eta == 0.0:
        K = tmin
    else:
        tmax = np.maximum.outer(t, t)
        K = np.exp(-2.0 * eta * tmax) * np.sinh(2.0 * eta * tmin) / (2.0 * eta)
    return KernelMatrix(n, horizon, K * (horizon / n))


def kernel_nonzero_traj(solution: MfgSolution) -> KernelMatrix:
    """Kernel of the map linearized about a nonzero solution (eta = 0 only).

    K(t, t') = int_0^{min(t,t')} exp(-int_s^t |y|) exp(-int_s^{t'} |y|)
               (1 - sgn(y_s) x_s) ds,
    evaluated with trapezoid prefix tables of |y| on the solution's grid.
    """
    if solution.model.eta != 0.0:
        raise ValueError("the nonzero-trajectory kernel is derived for eta = 0 only")
    xs = solution.xy.component("x")
    ys = solution.xy.component("y")
    grid = solution.grid
    n = grid.n_steps
    dt = grid.dt
    ay = np.abs(ys)
    # C[k] = int_0^{t_k} |y|, trapezoid
    C = np.concatenate(([0.0], np.cumsum(0.5 * (ay[:-1] + ay[1:]) * dt)))
    integrand = np.exp(2.0 * C) * (1.0 - np.sign(ys) * xs)
    # P[k] = int_0^{t_k} e^{2C(s)} (1 - sgn(y_s) x_s) ds
    P = np.concatenate(([0.0], np.cumsum(0.5 * (integrand[:-1] + integrand[1:]) * dt)))
    idx = np.arange(1, n + 1)
    expo = np.exp(-(C[idx][:, None] + C[idx][None, :]))
    K = expo * P[np.minimum.outer(idx, idx)]
    return KernelMatrix(n, grid.horizon, K * (grid.horizon / n))


def largest_eigenvalue(kernel, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Dominant eigenvalue by power iteration from the all-ones vector."""
    m = kernel.matrix if isinstance(kernel, KernelMatrix) else np.asarray(kernel, float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("kernel must be a square matrix")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    v = np.ones(m.shape[0]) / math.sqrt(m.shape[0])
    lam_prev = None
    for _ in range(max_iter):
        w = m @ v
        lam = float(v @ w)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        if lam_prev is not None and abs(lam - lam_prev) < tol:
            return lam
        lam_prev = lam
    raise NumericalFailure("power iteration did not converge")


def mercer_reference(horizon: float, k: int, n: int = 1000):
    """Closed-form eigenpair of the min(t,u) kernel: lambda_k = (2T/((2k+1)pi))^2,
    h_k(t) = sin((2k+1) pi t / (2T)), sampled at t_i = i*T/n."""
    if k < 0:
        raise ValueError("k must be >= 0")
    lam = (2.0 * horizon / ((2 * k + 1) * math.pi)) ** 2
    t = np.arange(1, n + 1) * (horizon / n)
    h = np.sin((2 * k + 1) * math.pi * t / (2.0 * horizon))
    return lam, h


def operator_norm_bound(eta: float, horizon: float) -> NormBound:
    """Sup-norm bound c(eta, T)^2 on the zero-trajectory linearization,
    c = (1 - exp(-2*eta*T)) / (2*eta); returns the eta -> 0 limit c = T at 0."""
    if eta < 0:
        raise ValueError("eta must be >= 0")
    if eta == 0.0:
        c = horizon
    else:
        c = (1.0 - math.exp(-2.0 * eta * horizon)) / (2.0 * eta)
    return NormBound(c, c * c, c < 1.0)


def eigenvalue_crossing(eta: float, n: int, bracket, tol: float = 1e-3) -> float:
    """Horizon at which the dominant kernel eigenvalue crosses 1 (bisection)."""
    lo, hi = float(bracket[0]), float(bracket[1])
    if not 0.0 < lo < hi:
        raise ValueError("bracket must satisfy 0 < lo < hi")

    def excess(T):
        return largest_eigenvalue(kernel_zero_traj(eta, T, n)) - 1.0

    g_lo = excess(lo)
    g_hi = excess(hi)
    if np.sign(g_lo) == np.sign(g_hi):
        raise ValueError(
            f"no eigenvalue crossing in bracket: lambda-1 = {g_lo:.3e} at T={lo}, "
            f"{g_hi:.3e} at T={hi}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid = excess(mid)
        if np.sign(g_mid) == np.sign(g_lo):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def linear_stability(game: str, eta: float, point: XYState) -> StabilityReport:
    """Linearized dynamics at a rest point and its asymptotic-stability verdict.

    A = [[Hxy, Hyy], [-Hxx, -Hxy]] evaluated with the closed-form entries of
    the named games (Hxx = +/-1, Hxy = -(2*eta + |y|), Hyy = 1); eigenvalues
    are +/- sqrt(-det Hess).  Real pair -> linearly asymptotically stable;
    imaginary pair or vanishing determinant -> not.
    """
    sign = _game_sign(game)
    gx, gy = _grad_h(game, eta, point.x, point.y)
    if abs(gx) > 1e-9 or abs(gy) > 1e-9:
        raise ValueError(
            f"({point.x}, {point.y}) is not an equilibrium: grad H = ({gx:.2e}, {gy:.2e})"
        )
    off = 2.0 * eta + abs(point.y)
    a = np.array([[-off, 1.0], [-sign, off]])
    det_hess = sign * 1.0 - off * off
    d = -det_hess
    if math.sqrt(abs(d)) < 1e-10:
        eigenvalues = (0.0 + 0.0j, 0.0 + 0.0j)
        classification = "not LAS (degenerate)"
    elif d > 0:
        lam = math.sqrt(d)
        eigenvalues = (complex(lam, 0.0), complex(-lam, 0.0))
        classification = "linearly asymptotically stable"
    else:
        w = math.sqrt(-d)
        eigenvalues = (complex(0.0, w), complex(0.0, -w))
        classification = "not LAS (imaginary)"
    return StabilityReport(point, a, eigenvalues, classification, det_hess)


def gateaux_finite_difference(model: CostModel, solution: MfgSolution,
                              direction: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Directional derivative of the map in centered-mass coordinates.

    Returns (T(x + eps*h) - T(x)) / eps sampled on the solution grid; the
    only tool available for kernels the closed forms do not cover.
    """
    direction = np.asarray(direction, dtype=float)
    xs = solution.xy.component("x")
    if direction.shape != xs.shape:
        raise ValueError("direction must be sampled on the solution grid")
    grid = solution.grid
    base = apply_T(model, Trajectory(grid, (1.0 + xs) / 2.0))
    bumped = apply_T(model, Trajectory(grid, (1.0 + xs + eps * direction) / 2.0))
    return (2.0 * bumped.values - 2.0 * base.values) / eps
