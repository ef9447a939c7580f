"""Gradient-flow solver for one-dimensional self-regulating transport networks.

The unknown is a diffusivity field ``D(x, t) > 0`` on ``[0, L]``; it evolves by
``D^2 D_t = R V`` where ``R`` is the primitive of the source, ``u`` solves the
elliptic constraint and ``V`` accumulates ``phi''(u) S``. Time stepping uses a
four-stage third-order IMEX Runge-Kutta pair.
"""
from .delta_solver import (
    DeltaRunConfig,
    DeltaState,
    DeltaTouchdown,
    DeltaTrajectory,
    DeltaVerdict,
    check_delta_conditions,
    delta_energy,
    delta_multipliers,
    run_delta,
    u_at_deltas,
)
from .diagnostics import ConvergenceTable, StudyAborted, convergence_study, rel_l2_error
from .entropy import EntropyKind, EntropyModel, Phi3Sign, phi2
from .errors import (
    ConfigError,
    DomainViolation,
    NetGradFlowError,
    NonPositiveDiffusivity,
    NotPointwise,
    SingularStage,
    ZeroReference,
)
from .field import (
    DiffusivityField,
    Grid,
    NodalField,
    compute_u,
    compute_V,
    energy,
    sup_bound_check,
)
from .imex import ImexTableau, check_order3, imex_step, ssp_ldirk3_433
from .pde_solver import (
    Completed,
    PdeRunConfig,
    Touchdown,
    TrajectoryRecord,
    min_D_sweep,
    multiplier,
    run,
)
from .source import DeltaPair, LinearSource, PositivityVerdict, classify_positivity

__version__ = "0.1.0"
