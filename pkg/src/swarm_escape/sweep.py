"""Seeded Monte-Carlo sweeps over the interaction range.

Each trial ``k`` draws one initial condition from ``trial_seed(base_seed, k)``
and reuses it at every grid value of ``rho`` (paired design), so differences
between grid points come from the range alone. A trial is a pure function of
the config and ``k``; trials may run in any order or in separate processes.
"""

from __future__ import annotations

import enum
import hashlib
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Iterable, Sequence

import numpy as np

from .consensus1d import ForceLaw, Predator1D, Sim1DParams, simulate_1d
from .errors import InputError, SimulationError, SweepError
from .flock import FlockParams, FlockState, PredatorND, simulate_flock

log = logging.getLogger(__name__)


class Mode(str, enum.Enum):
    ONE_D = "one_d"
    FLOCK = "flock"


class Objective(str, enum.Enum):
    STEADY_STATE_ESCAPE = "steady_state_escape"
    MIN_AVG_DISTANCE = "min_avg_distance"
    MIN_MIN_DISTANCE = "min_min_distance"


DEFAULT_GRID_1D = tuple(round(0.05 * k, 2) for k in range(21))
DEFAULT_GRID_FLOCK = tuple(5.0 * k for k in range(21))


def default_predator_1d() -> Predator1D:
    return Predator1D(x_p=0.6, rho_p=0.2, s=2.0, force_law=ForceLaw.LINEAR)


def default_predator_nd(dim: int = 3) -> PredatorND:
    pos, vel = [-30.0, -30.0, 0.0], [10.0, 10.0, 0.0]
    return PredatorND(position=pos[:dim], velocity=vel[:dim], rho_p=30.0, s=10.0)


@dataclass(frozen=True, eq=False)
class SweepConfig:
    """What to sweep and how to sample each trial.

    Fields left as ``None`` take the mode's defaults: the 0 to 1 grid in
    steps of 0.05 with the linear-law predator at 0.6 for ``ONE_D``, and the
    0 to 100 m grid in steps of 5 m with the diagonal predator for ``FLOCK``.
    ``flock.rho`` is a placeholder; each grid value replaces it.
    """

    mode: Mode
    n_agents: int
    rho_grid: tuple[float, ...] | None = None
    trials: int = 40
    base_seed: int = 0
    objective: Objective | None = None
    predator_1d: Predator1D | None = None
    eps_ss: float = 1e-9
    t_max: int = 10_000
    flock: FlockParams | None = None
    predator_nd: PredatorND | None = None
    horizon: float = 12.0
    box_side: float = 100.0
    dim: int = 3

    def __post_init__(self):
        set_ = partial(object.__setattr__, self)
        set_("mode", Mode(self.mode))
        one_d = self.mode is Mode.ONE_D
        if self.rho_grid is None:
            set_("rho_grid", DEFAULT_GRID_1D if one_d else DEFAULT_GRID_FLOCK)
        set_("rho_grid", tuple(float(r) for r in self.rho_grid))
        if self.objective is None:
            set_("objective", Objective.STEADY_STATE_ESCAPE if one_d else Objective.MIN_AVG_DISTANCE)
        set_("objective", Objective(self.objective))

        grid = np.asarray(self.rho_grid)
        if grid.size == 0:
            raise InputError("rho_grid must not be empty")
        if not (np.all(np.isfinite(grid)) and np.all(grid >= 0)):
            raise InputError("rho_grid values must be finite and >= 0")
        if np.any(np.diff(grid) <= 0):
            raise InputError("rho_grid must be strictly ascending")
        if int(self.trials) != self.trials or self.trials < 1:
            raise InputError(f"trials must be an integer >= 1, got {self.trials}")
        if int(self.n_agents) != self.n_agents or self.n_agents < 1:
            raise InputError(f"n_agents must be an integer >= 1, got {self.n_agents}")
        if int(self.base_seed) != self.base_seed or self.base_seed < 0:
            raise InputError(f"base_seed must be a non-negative integer, got {self.base_seed}")

        if one_d:
            if self.objective is not Objective.STEADY_STATE_ESCAPE:
                raise InputError(f"objective {self.objective.value} needs mode flock")
            if self.predator_1d is None:
                set_("predator_1d", default_predator_1d())
            # validates eps_ss and t_max
            Sim1DParams(rho=0.0, predator=self.predator_1d, eps_ss=self.eps_ss, t_max=self.t_max)
        else:
            if self.objective is Objective.STEADY_STATE_ESCAPE:
                raise InputError("objective steady_state_escape needs mode one_d")
            if self.dim not in (2, 3):
                raise InputError(f"flock sampling needs dim 2 or 3, got {self.dim}")
            if self.flock is None:
                set_("flock", FlockParams(rho=0.0))
            if self.predator_nd is None:
                set_("predator_nd", default_predator_nd(self.dim))
            if self.predator_nd.position.size != self.dim:
                raise InputError(f"predator is {self.predator_nd.position.size}-dimensional, dim is {self.dim}")
            if not self.box_side > 0:
                raise InputError(f"box_side must be > 0, got {self.box_side}")
            if not self.horizon >= self.flock.dt:
                raise InputError(f"horizon must be >= dt, got {self.horizon}")


@dataclass(frozen=True)
class TrialOutcome:
    value: float
    clusters: int | None = None
    converged: bool = True
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True, eq=False)
class SweepRecord:
    """Statistics for one grid value; failed trials carry ``nan`` in ``values``."""

    rho: float
    values: tuple[float, ...]
    mean: float
    std: float
    mean_clusters: float | None
    trials_ok: int
    trials_failed: int
    trials_unconverged: int = 0
    errors: tuple[str | None, ...] = field(default=())


@dataclass(frozen=True, eq=False)
class SweepResult:
    config: SweepConfig
    records: tuple[SweepRecord, ...]
    rho_star: float
    seeds: tuple[int, ...]
    initial_hashes: tuple[str, ...]


def trial_seed(base_seed: int, k: int) -> int:
    """Seed for trial ``k``: the first 64-bit word of ``SeedSequence([base_seed, k])``."""
    word = np.random.SeedSequence([int(base_seed), int(k)]).generate_state(1, np.uint64)[0]
    return int(word)


def sample_initial_1d(n: int, seed: int) -> np.ndarray:
    """``n`` draws from U[0, 1) with numpy's PCG64 generator seeded by ``seed``."""
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    return np.random.default_rng(seed).uniform(0.0, 1.0, n)


def sample_initial_flock(n: int, seed: int, box_side: float = 100.0, v0: float = 10.0, dim: int = 3) -> FlockState:
    """Uniform positions in the square ``[0, box_side]^2`` and planar headings.

    Headings are drawn from U[0, 2 pi); for ``dim == 3`` every z component is 0.
    """
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    if not box_side > 0:
        raise InputError(f"box_side must be > 0, got {box_side}")
    if dim not in (2, 3):
        raise InputError(f"dim must be 2 or 3, got {dim}")
    rng = np.random.default_rng(seed)
    xy = rng.uniform(0.0, box_side, (n, 2))
    theta = rng.uniform(0.0, 2 * np.pi, n)
    positions = np.zeros((n, dim))
    velocities = np.zeros((n, dim))
    positions[:, :2] = xy
    velocities[:, 0] = v0 * np.cos(theta)
    velocities[:, 1] = v0 * np.sin(theta)
    return FlockState(positions, velocities)


def initial_condition(config: SweepConfig, k: int) -> np.ndarray | FlockState:
    seed = trial_seed(config.base_seed, k)
    if config.mode is Mode.ONE_D:
        return sample_initial_1d(config.n_agents, seed)
    return sample_initial_flock(config.n_agents, seed, config.box_side, config.flock.v0, config.dim)


def state_hash(initial) -> str:
    h = hashlib.sha256()
    if isinstance(initial, FlockState):
        h.update(np.ascontiguousarray(initial.positions).tobytes())
        h.update(np.ascontiguousarray(initial.velocities).tobytes())
    else:
        h.update(np.ascontiguousarray(initial).tobytes())
    return h.hexdigest()


def _one_d_cell(config: SweepConfig, x0: np.ndarray, rho: float) -> TrialOutcome:
    params = Sim1DParams(rho=rho, predator=config.predator_1d, eps_ss=config.eps_ss, t_max=config.t_max)
    try:
        _, report = simulate_1d(x0, params)
    except SimulationError as exc:
        return TrialOutcome(float("nan"), error=str(exc))
    return TrialOutcome(report.d_ss, clusters=report.m_star, converged=report.converged)


def _flock_cell(config: SweepConfig, initial: FlockState, rho: float) -> TrialOutcome:
    params = replace(config.flock, rho=rho)
    try:
        _, series = simulate_flock(initial, config.predator_nd, params, config.horizon)
    except SimulationError as exc:
        return TrialOutcome(float("nan"), error=str(exc))
    if series.captured:
        return TrialOutcome(float("nan"), error=f"capture at step {series.captured_step}")
    curve = series.mean if config.objective is Objective.MIN_AVG_DISTANCE else series.minimum
    return TrialOutcome(float(curve.min()), clusters=int(series.component_counts[-1]))


def run_trial(config: SweepConfig, k: int) -> tuple[str, list[TrialOutcome]]:
    """Run trial ``k`` at every grid value; returns the initial-state hash and outcomes."""
    initial = initial_condition(config, k)
    cell = _one_d_cell if config.mode is Mode.ONE_D else _flock_cell
    outcomes = [cell(config, initial, rho) for rho in config.rho_grid]
    log.debug("trial %d done", k)
    return state_hash(initial), outcomes


def _record(rho: float, outcomes: Sequence[TrialOutcome]) -> SweepRecord:
    ok = [o for o in outcomes if o.ok]
    if not ok:
        raise SweepError(f"every trial failed at rho={rho}: {outcomes[0].error}")
    values = np.array([o.value for o in ok])
    clusters = [o.clusters for o in ok if o.clusters is not None]
    return SweepRecord(
        rho=rho,
        values=tuple(o.value for o in outcomes),
        mean=float(values.mean()),
        std=float(values.std(ddof=1)) if values.size > 1 else 0.0,
        mean_clusters=float(np.mean(clusters)) if clusters else None,
        trials_ok=len(ok),
        trials_failed=len(outcomes) - len(ok),
        trials_unconverged=sum(not o.converged for o in ok),
        errors=tuple(o.error for o in outcomes),
    )


def select_optimum(records: Iterable) -> float:
    """Grid value with the largest mean objective; ties go to the smallest ``rho``.

    ``records`` holds ``SweepRecord`` objects or ``(rho, mean)`` pairs.
    """
    pairs = [(r.rho, r.mean) if isinstance(r, SweepRecord) else (float(r[0]), float(r[1])) for r in records]
    pairs = [p for p in pairs if not np.isnan(p[1])]
    if not pairs:
        raise InputError("select_optimum needs at least one record with a finite mean")
    pairs.sort(key=lambda p: p[0])
    best_rho, best = pairs[0]
    for rho, mean in pairs[1:]:
        if mean > best:
            best_rho, best = rho, mean
    return best_rho


def run_sweep(config: SweepConfig, workers: int = 1) -> SweepResult:
    """Evaluate every (rho, trial) cell and pick the best range.

    ``workers > 1`` spreads trials over processes; the result is identical
    to a serial run.
    """
    trials = range(config.trials)
    if workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(partial(run_trial, config), trials))
    else:
        results = [run_trial(config, k) for k in trials]

    hashes = tuple(h for h, _ in results)
    records = tuple(
        _record(rho, [outcomes[i] for _, outcomes in results])
        for i, rho in enumerate(config.rho_grid)
    )
    for rec in records:
        if rec.trials_failed:
            log.warning("rho=%g: %d trial(s) excluded", rec.rho, rec.trials_failed)
    return SweepResult(
        config=config,
        records=records,
        rho_star=select_optimum(records),
        seeds=tuple(trial_seed(config.base_seed, k) for k in trials),
        initial_hashes=hashes,
    )
