"""Numerical laboratory for two-state continuous-time mean field games.

Enumerates every finite-horizon mean-field-game equilibrium of a two-state
game, solves the symmetric Markov-perfect equilibrium of the N+1 player
system, identifies fluid limits against Monte Carlo and forward-equation
evidence, and analyses stability of the mean field best-response map via
its linearization kernels.
"""

from ._backend import active_backend, set_backend
from .grid import (
    NumericalFailure,
    TimeGrid,
    Trajectory,
    integrate_backward,
    integrate_forward,
    interpolate,
    make_grid,
)
from .mfg import (
    MfgSolution,
    OrbitReport,
    ShotResult,
    TransientCandidate,
    ValuePair,
    XYState,
    apply_T,
    count_equilibria,
    critical_horizon,
    enumerate_equilibria,
    equilibrium_points,
    forward_population,
    hamiltonian,
    infinite_horizon_transient,
    iterate_T,
    orbit_period,
    shoot,
    solve_best_response,
    xy_drift,
)
from .model import (
    CostModel,
    avoid_the_crowd,
    follow_the_crowd,
    from_descriptor,
    prisoners_dilemma,
    tabulated,
    zero_game,
)
from .nplayer import (
    FlmpReport,
    NPlayerValue,
    OccupancyDistribution,
    SamplePathSet,
    YApproxResult,
    best_response_gap,
    flmp_distance,
    forward_occupancy,
    indifference_curve,
    simulate_population,
    solve_symmetric_mpe,
    solve_Y_approx,
)
from .stability import (
    KernelMatrix,
    NormBound,
    StabilityReport,
    eigenvalue_crossing,
    gateaux_finite_difference,
    kernel_nonzero_traj,
    kernel_zero_traj,
    largest_eigenvalue,
    linear_stability,
    mercer_reference,
    operator_norm_bound,
)

__version__ = "0.1.0"
