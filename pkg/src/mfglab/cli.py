"""Command-line surface: JSON-configured subcommands over the analysis layers.

    mfg-lab <subcommand> --config game.json [--out DIR] [--format csv|json]
                         [--seed U64] [--n-steps INT]

Subcommands: solve-mfg, iterate-t, mpe, simulate, epsilon-nash, kernel,
stability, contour, y-approx, period.  Configs carry a ``schema_version``,
a ``game`` descriptor (see mfglab.model) and subcommand parameters under
``params``; unknown keys are rejected.  Exit codes: 0 success, 2 config
error, 3 numerical or I/O failure, with a machine-readable JSON error on
stderr.  Identical configs (including seeds) produce byte-identical files.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import mfg, nplayer, stability
from .grid import NumericalFailure, Trajectory, make_grid
from .model import from_descriptor

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Output writers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    return format(float(value), ".17g")


def _write_table(path: Path, columns, rows, fmt: str):
    """Long-form table writer; CSV with a header row or the JSON mirror."""
    if fmt == "csv":
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(_fmt(v) for v in row))
        path.with_suffix(".csv").write_text("\n".join(lines) + "\n")
    else:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "columns": list(columns),
            "rows": [[float(_fmt(v)) for v in row] for row in rows],
        }
        path.with_suffix(".json").write_text(
            json.dumps(doc, sort_keys=True, indent=2) + "\n"
        )


def export_trajectory(traj: Trajectory, fmt: str, path) -> Path:
    """Write one trajectory as t plus one column per component."""
    path = Path(path)
    labels = traj.labels or tuple(
        f"v{i}" for i in range(1 if traj.values.ndim == 1 else traj.values.shape[1])
    )
    values = traj.values if traj.values.ndim == 2 else traj.values[:, None]
    rows = np.column_stack([traj.times, values])
    _write_table(path, ("t", *labels), rows, fmt)
    return path.with_suffix(".csv" if fmt == "csv" else ".json")


def _write_json(path: Path, payload: dict):
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def _load_config(path: str) -> dict:
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        config = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(config) - {"schema_version", "game", "params"}
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    if config.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")
    if "game" not in config:
        raise ConfigError("config must carry a game descriptor")
    return config


class Params:
    """Typed accessor over the subcommand parameter object; rejects unknowns."""

    def __init__(self, raw):
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError("params must be a JSON object")
        self.raw = dict(raw)
        self.seen = set()

    def get(self, key, default=None, kind=float, check=None, required=False):
        self.seen.add(key)
        if key not in self.raw:
            if required:
                raise ConfigError(f"missing required param {key!r}")
            return default
        value = self.raw[key]
        try:
            if kind is int:
                if isinstance(value, bool) or int(value) != value:
                    raise ValueError
                value = int(value)
            elif kind is float:
                value = float(value)
            elif kind in (list, dict) and not isinstance(value, kind):
                raise ValueError
        except (TypeError, ValueError):
            raise ConfigError(f"param {key!r} must be of type {kind.__name__}")
        if check is not None and not check(value):
            raise ConfigError(f"param {key!r} out of documented range: {value}")
        return value

    def finish(self):
        extra = set(self.raw) - self.seen
        if extra:
            raise ConfigError(f"unknown params: {sorted(extra)}")


def _default_grid(model, params, n_steps_override):
    n_steps = params.get("n_steps", 4000, int, lambda v: v >= 2)
    if n_steps_override is not None:
        n_steps = n_steps_override
    return make_grid(model.horizon, n_steps)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_solve_mfg(model, params, out, fmt, seed, n_steps):
    grid = _default_grid(model, params, n_steps)
    theta0 = params.get("theta0", 0.5, float, lambda v: 0.0 <= v <= 1.0)
    scan_points = params.get("scan_points", 2000, int, lambda v: v >= 10)
    params.finish()
    solutions = mfg.enumerate_equilibria(model, theta0, grid, scan_points=scan_points)
    summary = []
    for idx, sol in enumerate(solutions):
        summary.append({
            "index": idx,
            "y0": sol.y0,
            "sign": sol.sign,
            "winding": sol.winding,
            "fixed_point_residual": sol.fixed_point_residual,
            "hamiltonian_drift": sol.hamiltonian_drift,
            "exited_unit_interval": sol.exited,
            "tangent": sol.tangent,
        })
        traj = Trajectory(
            grid,
            np.column_stack([
                sol.theta.values,
                sol.xy.component("x"),
                sol.xy.component("y"),
                sol.values.u0,
                sol.values.u1,
            ]),
            labels=("theta", "x", "y", "u0", "u1"),
        )
        export_trajectory(traj, fmt, out / f"solution_{idx:02d}")
    _write_json(out / "solutions.json", {
        "subcommand": "solve-mfg",
        "count": len(solutions),
        "solutions": summary,
    })
    return 0


def _start_trajectory(model, params, grid):
    start = params.get("start", {"kind": "constant", "value": 0.5}, kind=dict)
    if not isinstance(start, dict) or "kind" not in start:
        raise ConfigError("start must be an object with a 'kind'")
    kind = start["kind"]
    if kind == "constant":
        extra = set(start) - {"kind", "value"}
        if extra:
            raise ConfigError(f"unknown start keys: {sorted(extra)}")
        value = float(start.get("value", 0.5))
        if not 0.0 <= value <= 1.0:
            raise ConfigError("start value must lie in [0, 1]")
        return Trajectory(grid, np.full(len(grid), value), labels=("theta",))
    if kind == "perturbed-equilibrium":
        extra = set(start) - {"kind", "index", "amplitude", "theta0"}
        if extra:
            raise ConfigError(f"unknown start keys: {sorted(extra)}")
        theta0 = float(start.get("theta0", 0.5))
        index = int(start.get("index", 0))
        amplitude = float(start.get("amplitude", 0.01))
        solutions = mfg.enumerate_equilibria(model, theta0, grid)
        if not 0 <= index < len(solutions):
            raise ConfigError(f"start index {index} out of range ({len(solutions)} solutions)")
        base = solutions[index].theta.values
        bump = amplitude * np.sin(np.pi * grid.nodes / grid.horizon) / 2.0
        return Trajectory(grid, np.clip(base + bump, 0.0, 1.0), labels=("theta",))
    raise ConfigError(f"unknown start kind {kind!r}")


def _cmd_iterate_t(model, params, out, fmt, seed, n_steps):
    grid = _default_grid(model, params, n_steps)
    max_iter = params.get("max_iter", 1000, int, lambda v: v >= 1)
    tol = params.get("tol", 1e-8, float, lambda v: v > 0)
    stride = params.get("stride", 100, int, lambda v: v >= 1)
    start = _start_trajectory(model, params, grid)
    params.finish()
    report = mfg.iterate_T(model, start, max_iter=max_iter, tol=tol, stride=stride)
    _write_json(out / "orbit.json", {
        "subcommand": "iterate-t",
        "converged": report.converged,
        "iterations": report.iterations,
        "final_residual": float(report.residuals[-1]) if report.residuals.size else 0.0,
    })
    _write_table(out / "orbit_residuals",
                 ("iteration", "residual"),
                 list(enumerate(report.residuals, start=1)), fmt)
    rows = []
    for idx, values in zip(report.iterate_indices, report.iterates):
        for t, v in zip(grid.nodes, values):
            rows.append((idx, t, v))
    _write_table(out / "orbit_iterates", ("iteration", "t", "theta"), rows, fmt)
    export_trajectory(report.limit, fmt, out / "orbit_final")
    return 0


def _cmd_mpe(model, params, out, fmt, seed, n_steps):
    grid = _default_grid(model, params, n_steps)
    N = params.get("N", required=True, kind=int, check=lambda v: v >= 1)
    m0 = params.get("m0", (N + 1) // 2, int, lambda v: 0 <= v <= N + 1)
    params.finish()
    values = nplayer.solve_symmetric_mpe(model, N, grid)
    occupancy = nplayer.forward_occupancy(values, m0, model)
    crossings = nplayer.indifference_curve(values)

    times = grid.nodes
    rows = []
    for i in (0, 1):
        for n in range(N + 1):
            for k, t in enumerate(times):
                rows.append((i, n, t, values.u[i, n, k]))
    _write_table(out / "mpe_value", ("i", "n", "t", "u"), rows, fmt)

    y = values.value_difference
    rows = [(n, t, y[n, k]) for n in range(N + 1) for k, t in enumerate(times)]
    _write_table(out / "mpe_y", ("n", "t", "y"), rows, fmt)

    rows = [(t, loc) for t, locs in zip(times, crossings) for loc in locs]
    _write_table(out / "indifference", ("t", "n_star"), rows, fmt)

    rows = np.column_stack([times, occupancy.mean, occupancy.variance])
    _write_table(out / "occupancy", ("t", "mean", "variance"), rows, fmt)

    _write_json(out / "mpe.json", {
        "subcommand": "mpe",
        "N": N,
        "m0": m0,
        "n_steps": grid.n_steps,
        "policy_bound": float(values.alpha.max()),
    })
    return 0


def _cmd_simulate(model, params, out, fmt, seed, n_steps):
    grid = _default_grid(model, params, n_steps)
    N = params.get("N", required=True, kind=int, check=lambda v: v >= 1)
    m0 = params.get("m0", required=True, kind=int, check=lambda v: v >= 0)
    replicas = params.get("replicas", 100, int, lambda v: v >= 1)
    cfg_seed = params.get("seed", 20240901, int, lambda v: v >= 0)
    scan_points = params.get("scan_points", 2000, int, lambda v: v >= 10)
    params.finish()
    if seed is not None:
        cfg_seed = seed
    if m0 > N + 1:
        raise ConfigError(f"m0 must lie in [0, {N + 1}]")
    values = nplayer.solve_symmetric_mpe(model, N, grid)
    paths = nplayer.simulate_population(values, m0, model, cfg_seed, replicas)
    theta0 = m0 / (N + 1)
    candidates = mfg.enumerate_equilibria(model, theta0, grid, scan_points=scan_points)
    report = nplayer.flmp_distance(paths, candidates)

    rows = []
    for r in range(replicas):
        for t, v in zip(grid.nodes, paths.paths[r]):
            rows.append((r, t, v))
    _write_table(out / "paths", ("replica", "t", "fraction"), rows, fmt)
    _write_json(out / "flmp.json", {
        "subcommand": "simulate",
        "N": N,
        "m0": m0,
        "replicas": replicas,
        "seed": cfg_seed,
        "candidates": [
            {"index": i, "y0": sol.y0, "winding": sol.winding, "sign": sol.sign}
            for i, sol in enumerate(candidates)
        ],
        "nearest_counts": report.counts.tolist(),
        "max_distance_to_nearest": float(report.distances[
            np.arange(replicas), report.nearest].max()),
    })
    return 0


def _cmd_epsilon_nash(model, params, out, fmt, seed, n_steps):
    grid = _default_grid(model, params, n_steps)
    n_list = params.get("N_list", [25, 50, 100, 200, 400], list)
    theta0 = params.get("theta0", 0.5, float, lambda v: 0.0 <= v <= 1.0)
    index = params.get("solution_index", None, int)
    params.finish()
    if not all(isinstance(v, int) and v >= 1 for v in n_list):
        raise ConfigError("N_list must hold integers >= 1")
    solutions = mfg.enumerate_equilibria(model, theta0, grid)
    if index is None:
        index = int(np.argmin([abs(s.y0) for s in solutions]))
    if not 0 <= index < len(solutions):
        raise ConfigError(f"solution_index {index} out of range")
    chosen = solutions[index]
    rows = [(N, nplayer.best_response_gap(model, N, grid, chosen)) for N in n_list]
    _write_table(out / "epsilon", ("N", "epsilon"), rows, fmt)
    _write_json(out / "epsilon.json", {
        "subcommand": "epsilon-nash",
        "solution_index": index,
        "solution_y0": chosen.y0,
        "N_list": list(n_list),
        "epsilon": [float(r[1]) for r in rows],
    })
    return 0


def _cmd_kernel(model, params, out, fmt, seed, n_steps):
    n = params.get("n", 1000, int, lambda v: v >= 2)
    bracket = params.get("crossing_bracket", None, list)
    tol = params.get("crossing_tol", 1e-3, float, lambda v: v > 0)
    params.finish()
    kernel = stability.kernel_zero_traj(model.eta, model.horizon, n)
    lam = stability.largest_eigenvalue(kernel)
    bound = stability.operator_norm_bound(model.eta, model.horizon)
    payload = {
        "subcommand": "kernel",
        "eta": model.eta,
        "horizon": model.horizon,
        "n": n,
        "lambda_max": lam,
        "norm_bound": bound.bound,
        "contraction": bound.contraction,
    }
    if bracket is not None:
        if len(bracket) != 2:
            raise ConfigError("crossing_bracket must be [lo, hi]")
        payload["crossing_horizon"] = stability.eigenvalue_crossing(
            model.eta, n, (float(bracket[0]), float(bracket[1])), tol
        )
    _write_json(out / "kernel.json", payload)
    return 0


def _cmd_stability(model, params, out, fmt, seed, n_steps):
    params.finish()
    if model.family not in ("follow", "avoid"):
        raise ConfigError("stability subcommand requires the follow or avoid family")
    points = mfg.equilibrium_points(model.family, model.eta)
    reports = [stability.linear_stability(model.family, model.eta, p) for p in points]
    _write_json(out / "stability.json", {
        "subcommand": "stability",
        "eta": model.eta,
        "points": [
            {
                "x": r.point.x,
                "y": r.point.y,
                "eigenvalues": [[z.real, z.imag] for z in r.eigenvalues],
                "classification": r.classification,
                "det_hessian": r.det_hessian,
            }
            for r in reports
        ],
    })
    return 0


def _cmd_contour(model, params, out, fmt, seed, n_steps):
    x_range = params.get("x_range", [-1.05, 1.05], list)
    y_range = params.get("y_range", [-1.05, 1.05], list)
    points = params.get("points", 43, int, lambda v: 2 <= v <= 2001)
    params.finish()
    for rng in (x_range, y_range):
        if len(rng) != 2 or not rng[0] < rng[1]:
            raise ConfigError("ranges must be increasing [lo, hi] pairs")
    xs = np.linspace(float(x_range[0]), float(x_range[1]), points)
    ys = np.linspace(float(y_range[0]), float(y_range[1]), points)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    H = mfg._hamiltonian_values(model, X.ravel(), Y.ravel())
    rows = np.column_stack([X.ravel(), Y.ravel(), H])
    _write_table(out / "contour", ("x", "y", "H"), rows, fmt)
    return 0


def _cmd_y_approx(model, params, out, fmt, seed, n_steps):
    grid = _default_grid(model, params, n_steps)
    N = params.get("N", required=True, kind=int, check=lambda v: v >= 1)
    params.finish()
    result = nplayer.solve_Y_approx(model, N, grid)
    times = grid.nodes
    rows = []
    for n in range(N + 1):
        for k, t in enumerate(times):
            rows.append((n, t, result.y_approx[n, k], result.y_exact[n, k]))
    _write_table(out / "y_approx", ("n", "t", "Y_approx", "Y_exact"), rows, fmt)
    _write_json(out / "y_approx.json", {
        "subcommand": "y-approx",
        "N": N,
        "sup_error": result.sup_error,
    })
    return 0


def _cmd_period(model, params, out, fmt, seed, n_steps):
    count = params.get("count", 10, int, lambda v: v >= 1)
    lo = params.get("lo_frac", 0.05, float, lambda v: 0 < v < 1)
    hi = params.get("hi_frac", 0.95, float, lambda v: 0 < v < 1)
    amplitudes = params.get("amplitudes", None, list)
    dt = params.get("dt", 1e-3, float, lambda v: v > 0)
    params.finish()
    if model.family != "follow" or model.eta >= 0.5:
        raise ConfigError("period subcommand requires the follow family with eta < 0.5")
    if amplitudes is None:
        xbar = mfg.equilibrium_points("follow", model.eta)[1].x
        amplitudes = list(np.linspace(lo * xbar, hi * xbar, count))
    rows = [(a, mfg.orbit_period(model.eta, float(a), dt=dt)) for a in amplitudes]
    _write_table(out / "period", ("amplitude", "period"), rows, fmt)
    _write_json(out / "period.json", {
        "subcommand": "period",
        "eta": model.eta,
        "zero_amplitude_period": 2.0 * math.pi / math.sqrt(1.0 - 4.0 * model.eta ** 2),
        "amplitudes": [float(a) for a in amplitudes],
        "periods": [float(r[1]) for r in rows],
    })
    return 0


_SUBCOMMANDS = {
    "solve-mfg": _cmd_solve_mfg,
    "iterate-t": _cmd_iterate_t,
    "mpe": _cmd_mpe,
    "simulate": _cmd_simulate,
    "epsilon-nash": _cmd_epsilon_nash,
    "kernel": _cmd_kernel,
    "stability": _cmd_stability,
    "contour": _cmd_contour,
    "y-approx": _cmd_y_approx,
    "period": _cmd_period,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="mfg-lab",
        description="Numerical laboratory for two-state mean field games",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=".")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--n-steps", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _load_config(args.config)
        model = from_descriptor(config["game"])
        params = Params(config.get("params"))
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.n_steps is not None and args.n_steps < 2:
            raise ConfigError("--n-steps must be >= 2")
        return _SUBCOMMANDS[args.subcommand](
            model, params, out, args.format, args.seed, args.n_steps
        )
    except (ConfigError, ValueError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except (NumericalFailure, OSError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
