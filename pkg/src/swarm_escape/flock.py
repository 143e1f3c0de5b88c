"""Constant-speed Newtonian flock in 1 to 3 dimensions with a drifting predator.

Agents align their velocity with the neighbour mean at fixed speed ``v0``
and are pushed radially away when the predator comes within ``rho_p``. The
predator moves in a straight line at constant velocity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import CaptureError, InputError, SimulationError
from .graph import InteractionGraph, build_graph, components, neighbor_average


def _vectors(a, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise InputError(f"{name} must be a non-empty (n, d) array, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class FlockState:
    positions: np.ndarray
    velocities: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        r = _vectors(self.positions, "positions")
        v = _vectors(self.velocities, "velocities")
        if r.shape != v.shape:
            raise InputError(f"positions {r.shape} and velocities {v.shape} differ in shape")
        object.__setattr__(self, "positions", r)
        object.__setattr__(self, "velocities", v)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def speeds(self) -> np.ndarray:
        return np.linalg.norm(self.velocities, axis=1)


@dataclass(frozen=True, eq=False)
class FlockParams:
    """Integration settings.

    ``masses`` is a scalar shared by every agent or one value per agent.
    """

    rho: float
    v0: float = 10.0
    dt: float = 0.05
    masses: float | tuple[float, ...] = 0.1
    renormalize_speed: bool = True

    def __post_init__(self):
        if not self.rho >= 0:
            raise InputError(f"rho must be >= 0, got {self.rho}")
        if not self.dt > 0:
            raise InputError(f"dt must be > 0, got {self.dt}")
        if not self.v0 > 0:
            raise InputError(f"v0 must be > 0, got {self.v0}")
        m = np.asarray(self.masses, dtype=float)
        if m.ndim > 1 or not np.all(m > 0):
            raise InputError(f"masses must be > 0, got {self.masses}")

    def mass_column(self, n: int) -> np.ndarray:
        m = np.asarray(self.masses, dtype=float)
        if m.ndim == 0:
            return np.full((n, 1), float(m))
        if m.size != n:
            raise InputError(f"{m.size} masses for {n} agents")
        return m[:, None]


@dataclass(frozen=True, eq=False)
class PredatorND:
    position: np.ndarray
    velocity: np.ndarray
    rho_p: float
    s: float

    def __post_init__(self):
        r = np.array(self.position, dtype=float)
        v = np.array(self.velocity, dtype=float)
        if r.ndim != 1 or r.shape != v.shape:
            raise InputError(f"predator position {r.shape} and velocity {v.shape} must be equal-length vectors")
        if not self.rho_p >= 0:
            raise InputError(f"rho_p must be >= 0, got {self.rho_p}")
        if not self.s > 0:
            raise InputError(f"s must be > 0, got {self.s}")
        r.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "position", r)
        object.__setattr__(self, "velocity", v)


@dataclass(frozen=True, eq=False)
class DistanceSeries:
    """Agent-to-predator distances recorded at every step, ``t = 0`` included.

    ``captured_step`` is set when the run stopped early because an agent
    landed exactly on the predator; the arrays then end at that step.
    """

    times: np.ndarray
    distances: np.ndarray
    mean: np.ndarray
    minimum: np.ndarray
    nearest_agent: np.ndarray
    component_counts: np.ndarray
    captured_step: int | None = None

    @property
    def captured(self) -> bool:
        return self.captured_step is not None


def consensus_force(state: FlockState, graph: InteractionGraph, v0: float) -> np.ndarray:
    """Alignment force ``v0 * <v_i> / |v_i|`` with the denominator the agent's own speed."""
    speeds = state.speeds()
    if np.any(speeds == 0):
        i = int(np.flatnonzero(speeds == 0)[0])
        raise SimulationError(f"agent {i} has zero speed; alignment force undefined")
    return v0 * neighbor_average(graph, state.velocities) / speeds[:, None]


def _predator_offsets(state: FlockState, predator: PredatorND) -> tuple[np.ndarray, np.ndarray]:
    if predator.position.size != state.dim:
        raise InputError(f"predator is {predator.position.size}-dimensional, flock is {state.dim}")
    diff = state.positions - predator.position
    return diff, np.linalg.norm(diff, axis=1)


def escape_force(state: FlockState, predator: PredatorND) -> np.ndarray:
    """Unit push of size ``s`` away from the predator for agents within ``rho_p`` (inclusive)."""
    diff, dist = _predator_offsets(state, predator)
    inside = dist <= predator.rho_p
    hit = inside & (dist == 0)
    if np.any(hit):
        raise CaptureError(int(np.flatnonzero(hit)[0]))
    force = np.zeros_like(diff)
    force[inside] = predator.s * diff[inside] / dist[inside, None]
    return force


def advance_predator(predator: PredatorND, dt: float) -> PredatorND:
    return replace(predator, position=predator.position + dt * predator.velocity)


def _step(state, predator, params, graph):
    force = consensus_force(state, graph, params.v0)
    if predator is not None:
        force = force + escape_force(state, predator)
    positions = state.positions + params.dt * state.velocities
    velocities = state.velocities + params.dt * force / params.mass_column(state.n)
    if params.renormalize_speed:
        speeds = np.linalg.norm(velocities, axis=1)
        if np.any(speeds == 0):
            raise SimulationError("velocity vanished before speed renormalisation")
        velocities = params.v0 * velocities / speeds[:, None]
    if not (np.all(np.isfinite(positions)) and np.all(np.isfinite(velocities))):
        raise SimulationError("non-finite flock state")
    nxt = FlockState(positions, velocities, state.time + params.dt)
    return nxt, (None if predator is None else advance_predator(predator, params.dt))


def step_flock(
    state: FlockState, predator: PredatorND | None, params: FlockParams
) -> tuple[FlockState, PredatorND | None]:
    """Advance one explicit step.

    Positions move with the pre-update velocities; both forces are evaluated
    on the pre-update state. With ``renormalize_speed`` the new velocities
    are rescaled to ``v0``.
    """
    return _step(state, predator, params, build_graph(state.positions, params.rho))


def n_steps(horizon: float, dt: float) -> int:
    # tolerate float noise such as 12 / 0.05 = 240.00000000000003
    return max(1, math.ceil(horizon / dt - 1e-9))


def simulate_flock(
    initial: FlockState,
    predator: PredatorND,
    params: FlockParams,
    horizon: float,
    snapshot_stride: int | None = None,
) -> tuple[list[tuple[int, FlockState, PredatorND]], DistanceSeries]:
    """Run ``ceil(horizon / dt)`` steps and record predator distances.

    Returns
    -------
    snapshots : list of (step, FlockState, PredatorND)
        Every ``snapshot_stride``-th step plus the final one; just the
        initial state when ``snapshot_stride`` is None.
    series : DistanceSeries
    """
    if not horizon >= params.dt:
        raise InputError(f"horizon must be >= dt, got horizon={horizon}, dt={params.dt}")
    if snapshot_stride is not None and snapshot_stride < 1:
        raise InputError(f"snapshot_stride must be >= 1, got {snapshot_stride}")
    total = n_steps(horizon, params.dt)

    state, pred = initial, predator
    snapshots = [(0, state, pred)]
    times, dists, counts = [], [], []
    captured = None
    for k in range(total + 1):
        graph = build_graph(state.positions, params.rho)
        times.append(k * params.dt)
        dists.append(_predator_offsets(state, pred)[1])
        counts.append(components(graph).count)
        if snapshot_stride is not None and k > 0 and (k % snapshot_stride == 0 or k == total):
            snapshots.append((k, state, pred))
        if k == total:
            break
        try:
            state, pred = _step(state, pred, params, graph)
        except CaptureError:
            captured = k
            break
        except SimulationError as exc:
            raise SimulationError(str(exc), step=k) from exc

    dists = np.vstack(dists)
    series = DistanceSeries(
        times=np.asarray(times),
        distances=dists,
        mean=dists.mean(axis=1),
        minimum=dists.min(axis=1),
        nearest_agent=dists.argmin(axis=1),
        component_counts=np.asarray(counts, dtype=int),
        captured_step=captured,
    )
    return snapshots, series
