"""Game specifications: running cost f(i, theta), terminal cost psi(i, theta),
background jump rate eta, and horizon T.

All built-in families (and user "tabulated" games) are stored as
piecewise-linear tables of f and psi over a shared theta grid on [0, 1];
the built-ins are affine in theta, so the tables reproduce them exactly.
A JSON descriptor round-trips every model:

    {"family": "follow", "params": {"psi1": 0.3}, "eta": 0.0, "horizon": 10.0}
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

FAMILIES = ("follow", "avoid", "prisoners_dilemma", "zero", "tabulated")

_VALIDATION_SAMPLES = 10_000


def _check_theta(theta):
    arr = np.asarray(theta, dtype=float)
    if np.any(arr < -1e-12) or np.any(arr > 1.0 + 1e-12):
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    return np.clip(arr, 0.0, 1.0)


@dataclass(frozen=True)
class CostModel:
    """Immutable two-state game specification.

    ``f_vals[i]`` / ``psi_vals[i]`` are the running / terminal cost values of
    state i at ``theta_knots``; costs are evaluated by linear interpolation.
    ``lipschitz`` is the declared Lipschitz constant of all four tables.
    """

    family: str
    eta: float
    horizon: float
    theta_knots: np.ndarray
    f_vals: np.ndarray
    psi_vals: np.ndarray
    lipschitz: float
    params: dict

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if not np.isfinite(self.eta) or self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")
        knots = np.asarray(self.theta_knots, dtype=float)
        f_vals = np.asarray(self.f_vals, dtype=float)
        psi_vals = np.asarray(self.psi_vals, dtype=float)
        if knots.ndim != 1 or knots.size < 2:
            raise ValueError("theta_knots must hold at least two points")
        if knots[0] != 0.0 or knots[-1] != 1.0 or np.any(np.diff(knots) <= 0):
            raise ValueError("theta_knots must increase strictly from 0 to 1")
        if f_vals.shape != (2, knots.size) or psi_vals.shape != (2, knots.size):
            raise ValueError("cost tables must have shape (2, len(theta_knots))")
        if not (np.all(np.isfinite(f_vals)) and np.all(np.isfinite(psi_vals))):
            raise ValueError("cost tables must be finite (bounded on [0,1])")
        object.__setattr__(self, "theta_knots", knots)
        object.__setattr__(self, "f_vals", f_vals)
        object.__setattr__(self, "psi_vals", psi_vals)
        self.validate()

    # -- evaluation ---------------------------------------------------------

    def eval_running_cost(self, i: int, theta):
        """Running cost rate f(i, theta) for i in {0, 1}, theta in [0, 1]."""
        if i not in (0, 1):
            raise ValueError(f"state must be 0 or 1, got {i}")
        theta = _check_theta(theta)
        return np.interp(theta, self.theta_knots, self.f_vals[i])

    def eval_terminal_cost(self, i: int, theta):
        """Terminal cost psi(i, theta)."""
        if i not in (0, 1):
            raise ValueError(f"state must be 0 or 1, got {i}")
        theta = _check_theta(theta)
        return np.interp(theta, self.theta_knots, self.psi_vals[i])

    def cost_difference(self, x):
        """f(1, (1+x)/2) - f(0, (1+x)/2) on centered mass x in [-1, 1]."""
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > 1.0 + 1e-12):
            raise ValueError(f"x must lie in [-1, 1], got {x}")
        theta = np.clip((1.0 + x) / 2.0, 0.0, 1.0)
        return np.interp(theta, self.theta_knots, self.f_vals[1] - self.f_vals[0])

    def terminal_difference(self, x):
        """psi(1, (1+x)/2) - psi(0, (1+x)/2)."""
        theta = np.clip((1.0 + np.asarray(x, dtype=float)) / 2.0, 0.0, 1.0)
        return np.interp(theta, self.theta_knots, self.psi_vals[1] - self.psi_vals[0])

    # -- bounds -------------------------------------------------------------

    def sup_running_cost(self) -> float:
        return float(np.max(np.abs(self.f_vals)))

    def sup_terminal_cost(self) -> float:
        return float(np.max(np.abs(self.psi_vals)))

    def value_bound(self) -> float:
        """Bound on |u(i,t)|: sup|f| * T + sup|psi|."""
        return self.sup_running_cost() * self.horizon + self.sup_terminal_cost()

    # -- reduced-plane tables (x = 2*theta - 1) ------------------------------

    def df_table(self):
        """Knots/values of f(1,.)-f(0,.) in x coordinates."""
        return 2.0 * self.theta_knots - 1.0, self.f_vals[1] - self.f_vals[0]

    def dpsi_table(self):
        return 2.0 * self.theta_knots - 1.0, self.psi_vals[1] - self.psi_vals[0]

    # -- validation ----------------------------------------------------------

    def validate(self, n_samples: int = _VALIDATION_SAMPLES):
        """Dense-sampling check of boundedness and the declared Lipschitz bound."""
        thetas = np.linspace(0.0, 1.0, n_samples)
        for table in (self.f_vals, self.psi_vals):
            for i in (0, 1):
                vals = np.interp(thetas, self.theta_knots, table[i])
                if not np.all(np.isfinite(vals)):
                    raise ValueError("cost table evaluates to non-finite values")
                quotients = np.abs(np.diff(vals)) * (n_samples - 1)
                if quotients.size and quotients.max() > self.lipschitz + 1e-9:
                    raise ValueError(
                        f"sampled Lipschitz quotient {quotients.max():.6g} exceeds "
                        f"declared constant {self.lipschitz:.6g}"
                    )

    # -- serialization -------------------------------------------------------

    def to_descriptor(self) -> dict:
        return {
            "family": self.family,
            "params": dict(self.params),
            "eta": self.eta,
            "horizon": self.horizon,
        }


def _table_model(family, eta, horizon, knots, f0, f1, psi0, psi1, lipschitz, params):
    f_vals = np.vstack([np.asarray(f0, float), np.asarray(f1, float)])
    psi_vals = np.vstack([np.asarray(psi0, float), np.asarray(psi1, float)])
    return CostModel(
        family=family,
        eta=float(eta),
        horizon=float(horizon),
        theta_knots=np.asarray(knots, float),
        f_vals=f_vals,
        psi_vals=psi_vals,
        lipschitz=float(lipschitz),
        params=params,
    )


def follow_the_crowd(eta: float, horizon: float, psi0: float = 0.0, psi1: float = 0.0):
    """f(i, theta) = |1 - theta - i| with optional per-state constant psi."""
    return _table_model(
        "follow", eta, horizon, [0.0, 1.0],
        f0=[1.0, 0.0], f1=[0.0, 1.0],
        psi0=[psi0, psi0], psi1=[psi1, psi1],
        lipschitz=1.0, params={"psi0": psi0, "psi1": psi1},
    )


def avoid_the_crowd(eta: float, horizon: float, psi0: float = 0.0, psi1: float = 0.0):
    """f(i, theta) = |i - theta| with optional per-state constant psi."""
    return _table_model(
        "avoid", eta, horizon, [0.0, 1.0],
        f0=[0.0, 1.0], f1=[1.0, 0.0],
        psi0=[psi0, psi0], psi1=[psi1, psi1],
        lipschitz=1.0, params={"psi0": psi0, "psi1": psi1},
    )


def prisoners_dilemma(eta: float, horizon: float, psi0: float = 0.0, psi1: float = 0.0):
    """f(i, theta) = |1 - i - theta| - 0.6*theta + 0.3*1{i=0}; state 0 cooperates."""
    # On [0,1]: f(0,.) = 1.3 - 1.6*theta, f(1,.) = 0.4*theta.
    return _table_model(
        "prisoners_dilemma", eta, horizon, [0.0, 1.0],
        f0=[1.3, -0.3], f1=[0.0, 0.4],
        psi0=[psi0, psi0], psi1=[psi1, psi1],
        lipschitz=1.6, params={"psi0": psi0, "psi1": psi1},
    )


def zero_game(eta: float, horizon: float):
    """f = psi = 0; useful for closed-form checks."""
    return _table_model(
        "zero", eta, horizon, [0.0, 1.0],
        f0=[0.0, 0.0], f1=[0.0, 0.0], psi0=[0.0, 0.0], psi1=[0.0, 0.0],
        lipschitz=0.0, params={},
    )


def tabulated(theta_grid, f0, f1, psi0, psi1, eta, horizon,
              lipschitz: Optional[float] = None):
    """Custom game from piecewise-linear tables over a theta grid."""
    knots = np.asarray(theta_grid, float)
    if lipschitz is None:
        dk = np.diff(knots)
        slopes = [np.abs(np.diff(np.asarray(v, float))) / dk for v in (f0, f1, psi0, psi1)]
        lipschitz = float(max(s.max() if s.size else 0.0 for s in slopes))
    params = {
        "theta_grid": list(map(float, theta_grid)),
        "f0": list(map(float, f0)), "f1": list(map(float, f1)),
        "psi0": list(map(float, psi0)), "psi1": list(map(float, psi1)),
        "lipschitz": float(lipschitz),
    }
    return _table_model("tabulated", eta, horizon, knots, f0, f1, psi0, psi1,
                        lipschitz, params)


_CONSTRUCTORS = {
    "follow": follow_the_crowd,
    "avoid": avoid_the_crowd,
    "prisoners_dilemma": prisoners_dilemma,
}

_SCALAR_PARAMS = {"psi0", "psi1"}
_TABULATED_PARAMS = {"theta_grid", "f0", "f1", "psi0", "psi1", "lipschitz"}


def from_descriptor(descriptor: dict) -> CostModel:
    """Build a CostModel from its JSON descriptor; unknown keys are rejected."""
    if not isinstance(descriptor, dict):
        raise ValueError("game descriptor must be a JSON object")
    extra = set(descriptor) - {"family", "params", "eta", "horizon"}
    if extra:
        raise ValueError(f"unknown keys in game descriptor: {sorted(extra)}")
    try:
        family = descriptor["family"]
        eta = float(descriptor["eta"])
        horizon = float(descriptor["horizon"])
    except KeyError as exc:
        raise ValueError(f"game descriptor missing key {exc}") from exc
    params = descriptor.get("params", {})
    if not isinstance(params, dict):
        raise ValueError("params must be a JSON object")

    if family in _CONSTRUCTORS:
        extra = set(params) - _SCALAR_PARAMS
        if extra:
            raise ValueError(f"unknown params for {family}: {sorted(extra)}")
        return _CONSTRUCTORS[family](
            eta, horizon,
            psi0=float(params.get("psi0", 0.0)), psi1=float(params.get("psi1", 0.0)),
        )
    if family == "zero":
        if params:
            raise ValueError("zero family takes no params")
        return zero_game(eta, horizon)
    if family == "tabulated":
        extra = set(params) - _TABULATED_PARAMS
        if extra:
            raise ValueError(f"unknown params for tabulated: {sorted(extra)}")
        missing = {"theta_grid", "f0", "f1", "psi0", "psi1"} - set(params)
        if missing:
            raise ValueError(f"tabulated family missing params: {sorted(missing)}")
        return tabulated(
            params["theta_grid"], params["f0"], params["f1"],
            params["psi0"], params["psi1"], eta, horizon,
            lipschitz=params.get("lipschitz"),
        )
    raise ValueError(f"unknown family {family!r}")
