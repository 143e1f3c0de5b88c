"""Consensus swarms under predator attack: simulation and interaction-range sweeps."""

from .errors import CaptureError, InputError, PreconditionError, SimulationError, SweepError
from .graph import (
    ComponentLabeling,
    ConsensusMatrices,
    InteractionGraph,
    build_graph,
    components,
    consensus_matrices,
    neighbor_average,
)
from .consensus1d import (
    ForceLaw,
    Predator1D,
    Sim1DParams,
    SteadyStateReport,
    Trajectory1D,
    critical_strength,
    repulsion_1d,
    simulate_1d,
    steady_state_set_member,
    step_1d,
)
from .flock import (
    DistanceSeries,
    FlockParams,
    FlockState,
    PredatorND,
    consensus_force,
    escape_force,
    simulate_flock,
    step_flock,
)
from .sweep import (
    Mode,
    Objective,
    SweepConfig,
    SweepRecord,
    SweepResult,
    run_sweep,
    sample_initial_1d,
    sample_initial_flock,
    select_optimum,
    trial_seed,
)

__version__ = "0.1.0"
