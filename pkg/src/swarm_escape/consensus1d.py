"""Scalar bounded-confidence consensus, optionally repelled by a fixed predator."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, PreconditionError, SimulationError
from .graph import InteractionGraph, build_graph, components, neighbor_average

log = logging.getLogger(__name__)

SET_MEMBER_TOL = 1e-9


class ForceLaw(str, enum.Enum):
    """Shape of the predator's push on an agent inside its range.

    SIGN moves the agent by ``s`` away from the predator. LINEAR sends an
    isolated agent to ``x_p +/- s * rho_p`` regardless of where it started.
    """

    SIGN = "sign"
    LINEAR = "linear"


@dataclass(frozen=True)
class Predator1D:
    x_p: float
    rho_p: float
    s: float
    force_law: ForceLaw = ForceLaw.SIGN

    def __post_init__(self):
        if not self.rho_p >= 0:
            raise InputError(f"rho_p must be >= 0, got {self.rho_p}")
        if not self.s > 0:
            raise InputError(f"s must be > 0, got {self.s}")
        if not np.isfinite(self.x_p):
            raise InputError(f"x_p must be finite, got {self.x_p}")
        object.__setattr__(self, "force_law", ForceLaw(self.force_law))


@dataclass(frozen=True)
class Sim1DParams:
    rho: float
    predator: Predator1D | None = None
    eps_ss: float = 1e-9
    t_max: int = 10_000

    def __post_init__(self):
        if not self.rho >= 0:
            raise InputError(f"rho must be >= 0, got {self.rho}")
        if not self.eps_ss > 0:
            raise InputError(f"eps_ss must be > 0, got {self.eps_ss}")
        if int(self.t_max) != self.t_max or self.t_max < 1:
            raise InputError(f"t_max must be an integer >= 1, got {self.t_max}")


@dataclass(frozen=True, eq=False)
class Trajectory1D:
    """Recorded run: row ``t`` of ``states`` is x(t).

    ``escape_distances`` is ``None`` for predator-free runs.
    """

    states: np.ndarray
    component_counts: np.ndarray
    escape_distances: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def steps(self) -> int:
        return self.states.shape[0] - 1


@dataclass(frozen=True, eq=False)
class SteadyStateReport:
    x_ss: np.ndarray
    m_star: int
    alphas: np.ndarray
    sizes: np.ndarray
    labels: np.ndarray
    converged: bool
    t_stop: int
    d_ss: float | None = None
    # max |alpha_k - mean of component k at t_c|; unforced converged runs only
    alpha_tc_deviation: float | None = field(default=None)


def repulsion_1d(x_i, predator: Predator1D):
    """Displacement the predator adds to agent state(s) ``x_i``.

    Active only strictly inside ``rho_p``; ``sign(0) = 0`` so an agent sitting
    exactly on the predator is not pushed by the SIGN law.
    """
    x = np.asarray(x_i, dtype=float)
    offset = x - predator.x_p
    direction = np.sign(offset)
    if predator.force_law is ForceLaw.SIGN:
        push = predator.s * direction
    else:
        push = -offset + predator.s * predator.rho_p * direction
    out = np.where(np.abs(offset) < predator.rho_p, push, 0.0)
    return float(out) if out.ndim == 0 else out


def _advance(x: np.ndarray, graph: InteractionGraph, params: Sim1DParams) -> np.ndarray:
    nxt = neighbor_average(graph, x)
    if params.predator is not None:
        nxt = nxt + repulsion_1d(x, params.predator)
    return nxt


def step_1d(x, params: Sim1DParams) -> np.ndarray:
    """One synchronous update on the range graph rebuilt from ``x``."""
    x = np.asarray(x, dtype=float)
    return _advance(x, build_graph(x, params.rho), params)


def _escape_distance(x: np.ndarray, predator: Predator1D) -> float:
    return float(np.min(np.abs(x - predator.x_p)))


def simulate_1d(x0, params: Sim1DParams) -> tuple[Trajectory1D, SteadyStateReport]:
    """Iterate until the sup-norm step change drops below ``eps_ss`` or ``t_max``.

    Raises
    ------
    SimulationError
        If a state becomes non-finite; ``.step`` names the offending step.
    """
    x = np.asarray(x0, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise InputError(f"x0 must be a non-empty vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("x0 must be finite")
    predator = params.predator

    states = [x]
    counts = []
    converged = False
    t_stop = params.t_max
    for t in range(params.t_max):
        graph = build_graph(x, params.rho)
        counts.append(components(graph).count)
        with np.errstate(over="ignore", invalid="ignore"):
            nxt = _advance(x, graph, params)
        if not np.all(np.isfinite(nxt)):
            raise SimulationError("non-finite agent state", step=t + 1)
        states.append(nxt)
        done = np.max(np.abs(nxt - x)) < params.eps_ss
        x = nxt
        if done:
            converged = True
            t_stop = t + 1
            break

    final = components(build_graph(x, params.rho))
    counts.append(final.count)
    states = np.vstack(states)
    trajectory = Trajectory1D(
        states=states,
        component_counts=np.asarray(counts, dtype=int),
        escape_distances=(
            None
            if predator is None
            else np.abs(states - predator.x_p).min(axis=1)
        ),
    )

    groups = final.groups()
    means = np.array([x[g].mean() for g in groups])
    order = np.argsort(means, kind="stable")
    # relabel components so label k matches alphas[k]
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    report = SteadyStateReport(
        x_ss=x,
        m_star=final.count,
        alphas=means[order],
        sizes=np.array([groups[k].size for k in order]),
        labels=rank[final.labels],
        converged=converged,
        t_stop=t_stop,
        d_ss=None if predator is None else _escape_distance(x, predator),
        alpha_tc_deviation=(
            _tc_deviation(states, trajectory.component_counts, groups, means)
            if converged and predator is None
            else None
        ),
    )
    return trajectory, report


def _tc_deviation(states, counts, groups, means) -> float:
    # Components can only split, so the partition at t_c is the final one.
    t_c = int(np.argmax(counts == counts[-1]))
    tc_means = np.array([states[t_c][g].mean() for g in groups])
    dev = float(np.max(np.abs(tc_means - means)))
    log.debug("t_c=%d, max |alpha - t_c component mean| = %.3e", t_c, dev)
    return dev


def critical_strength(rho: float, rho_p: float) -> float:
    """Repulsion strength ``rho_p + rho`` that guarantees escape under the SIGN law.

    Only valid when the predator's reach is at least the interaction range.
    """
    if not rho >= 0:
        raise PreconditionError(f"rho must be >= 0, got {rho}")
    if not rho_p >= rho:
        raise PreconditionError(f"requires rho_p >= rho, got rho_p={rho_p}, rho={rho}")
    return rho_p + rho


def steady_state_set_member(x_candidate, alphas, sizes) -> bool:
    """Whether ``x_candidate`` is a permutation of alphas repeated by sizes."""
    x = np.asarray(x_candidate, dtype=float)
    alphas = np.asarray(alphas, dtype=float)
    sizes = np.asarray(sizes, dtype=int)
    if alphas.shape != sizes.shape:
        raise InputError(f"{alphas.size} alphas but {sizes.size} sizes")
    if np.any(sizes < 0) or sizes.sum() != x.size:
        raise InputError(f"sizes sum to {sizes.sum()}, candidate has {x.size} entries")
    expected = np.sort(np.repeat(alphas, sizes))
    return bool(np.all(np.abs(np.sort(x) - expected) <= SET_MEMBER_TOL))
