"""Run configuration: JSON documents, defaults, and conversion to model objects."""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .consensus1d import Predator1D, Sim1DParams
from .errors import InputError
from .flock import FlockParams, FlockState, PredatorND
from .sweep import DEFAULT_GRID_1D, DEFAULT_GRID_FLOCK, Mode, Objective, SweepConfig, sample_initial_1d, sample_initial_flock

COMMANDS = ("simulate-1d", "simulate-flock", "sweep")
OUTPUT_DIR_ENV = "SWARM_ESCAPE_OUTPUT_DIR"

PREDATOR_1D = {"x_p": 0.6, "rho_p": 0.2, "s": 2.0, "force_law": "linear"}
FLOCK = {
    "v0": 10.0,
    "dt": 0.05,
    "mass": 0.1,
    "renormalize_speed": True,
    "dim": 3,
    "box_side": 100.0,
    "horizon": 12.0,
    "snapshot_stride": 80,
}
PREDATOR_ND = {"position": [-30.0, -30.0, 0.0], "velocity": [10.0, 10.0, 0.0], "rho_p": 30.0, "s": 10.0}


class ConfigError(InputError):
    pass


def schema() -> dict:
    text = resources.files("swarm_escape").joinpath("run_config.schema.json").read_text()
    return json.loads(text)


def load_document(path: str | os.PathLike) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return doc


def validate_document(doc: dict) -> None:
    try:
        jsonschema.validate(doc, schema())
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"schema violation at {where}: {exc.message}") from None


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _defaults(command: str, doc: dict) -> dict:
    if command == "simulate-1d":
        return {"seed": 0, "n": 100, "rho": 0.1, "eps_ss": 1e-9, "t_max": 10_000, "predator_1d": None}
    dim = doc.get("flock", {}).get("dim", FLOCK["dim"])
    predator = {**PREDATOR_ND, "position": PREDATOR_ND["position"][:dim], "velocity": PREDATOR_ND["velocity"][:dim]}
    flock = {"seed": 0, "n": 300, "flock": dict(FLOCK), "predator": predator}
    if command == "simulate-flock":
        return {**flock, "rho": 10.0}
    mode = doc.get("sweep", {}).get("mode", "one_d")
    if mode == "one_d":
        return {
            "seed": 0,
            "n": 100,
            "eps_ss": 1e-9,
            "t_max": 10_000,
            "predator_1d": dict(PREDATOR_1D),
            "sweep": {
                "mode": "one_d",
                "rho_grid": list(DEFAULT_GRID_1D),
                "trials": 40,
                "objective": "steady_state_escape",
                "workers": 1,
            },
        }
    return {
        **flock,
        "sweep": {
            "mode": "flock",
            "rho_grid": list(DEFAULT_GRID_FLOCK),
            "trials": 1,
            "objective": "min_avg_distance",
            "workers": 1,
        },
    }


# Where and how a run executes; kept out of the provenance embedded in outputs.
EXECUTION_KEYS = ("output",)
EXECUTION_SWEEP_KEYS = ("workers",)


@dataclass
class RunConfig:
    """A fully resolved invocation: ``doc`` holds every field, defaults filled in."""

    command: str
    doc: dict

    @classmethod
    def resolve(cls, command: str, doc: dict | None = None) -> "RunConfig":
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
        doc = dict(doc or {})
        validate_document(doc)
        if doc.get("command", command) != command:
            raise ConfigError(f"config is for {doc['command']!r} but command is {command!r}")
        if "x0" in doc:
            if command != "simulate-1d":
                raise ConfigError("x0 is only accepted by simulate-1d")
            if doc.setdefault("n", len(doc["x0"])) != len(doc["x0"]):
                raise ConfigError(f"n={doc['n']} disagrees with the {len(doc['x0'])} entries of x0")
        if command == "simulate-1d" and isinstance(doc.get("predator_1d"), dict):
            doc["predator_1d"] = {**PREDATOR_1D, **doc["predator_1d"]}
        resolved = _merge(_defaults(command, doc), doc)
        resolved["command"] = command
        if command == "sweep" and resolved["sweep"]["mode"] == "flock":
            resolved.pop("eps_ss", None)
            resolved.pop("t_max", None)
        cfg = cls(command, resolved)
        cfg.check()
        return cfg

    def check(self) -> None:
        """Build every model object once so invariant violations surface early."""
        if self.command == "simulate-1d":
            self.sim1d_params()
            self.initial_1d()
        elif self.command == "simulate-flock":
            self.flock_params()
            self.predator_nd()
            self.initial_flock()
            if not self.doc["flock"]["horizon"] >= self.doc["flock"]["dt"]:
                raise InputError("horizon must be >= dt")
        else:
            self.sweep_config()

    @property
    def seed(self) -> int:
        return int(self.doc["seed"])

    def provenance(self) -> dict:
        doc = {k: v for k, v in self.doc.items() if k not in EXECUTION_KEYS}
        if "sweep" in doc:
            doc["sweep"] = {k: v for k, v in doc["sweep"].items() if k not in EXECUTION_SWEEP_KEYS}
        return doc

    def output_dir(self) -> Path:
        out = self.doc.get("output", {}).get("dir") or os.environ.get(OUTPUT_DIR_ENV) or "out"
        return Path(out)

    def predator_1d(self) -> Predator1D | None:
        p = self.doc.get("predator_1d")
        return None if p is None else Predator1D(**p)

    @property
    def records_nothing(self) -> bool:
        """``simulate-1d`` with ``t_max == 0``: validate, then write header-only output."""
        return self.command == "simulate-1d" and self.doc["t_max"] == 0

    def sim1d_params(self) -> Sim1DParams:
        d = self.doc
        # t_max 0 is a CLI-level no-op; the simulator itself needs at least one step
        t_max = 1 if self.records_nothing else d["t_max"]
        return Sim1DParams(rho=d["rho"], predator=self.predator_1d(), eps_ss=d["eps_ss"], t_max=t_max)

    def initial_1d(self) -> np.ndarray:
        if "x0" in self.doc:
            return np.asarray(self.doc["x0"], dtype=float)
        return sample_initial_1d(self.doc["n"], self.seed)

    def flock_params(self, rho: float | None = None) -> FlockParams:
        f = self.doc["flock"]
        return FlockParams(
            rho=self.doc.get("rho", 0.0) if rho is None else rho,
            v0=f["v0"],
            dt=f["dt"],
            masses=f["mass"],
            renormalize_speed=f["renormalize_speed"],
        )

    def predator_nd(self) -> PredatorND:
        p = self.doc["predator"]
        pred = PredatorND(position=p["position"], velocity=p["velocity"], rho_p=p["rho_p"], s=p["s"])
        if pred.position.size != self.doc["flock"]["dim"]:
            raise InputError(f"predator position has {pred.position.size} components, dim is {self.doc['flock']['dim']}")
        return pred

    def initial_flock(self) -> FlockState:
        f = self.doc["flock"]
        if not f["box_side"] > 0:
            raise InputError(f"box_side must be > 0, got {f['box_side']}")
        return sample_initial_flock(self.doc["n"], self.seed, f["box_side"], f["v0"], f["dim"])

    def sweep_config(self) -> SweepConfig:
        d, s = self.doc, self.doc["sweep"]
        common = dict(
            mode=Mode(s["mode"]),
            n_agents=d["n"],
            rho_grid=tuple(s["rho_grid"]),
            trials=s["trials"],
            base_seed=self.seed,
            objective=Objective(s["objective"]),
        )
        if common["mode"] is Mode.ONE_D:
            return SweepConfig(**common, predator_1d=self.predator_1d(), eps_ss=d["eps_ss"], t_max=d["t_max"])
        f = d["flock"]
        return SweepConfig(
            **common,
            flock=self.flock_params(rho=0.0),
            predator_nd=self.predator_nd(),
            horizon=f["horizon"],
            box_side=f["box_side"],
            dim=f["dim"],
        )

    @property
    def workers(self) -> int:
        return int(self.doc.get("sweep", {}).get("workers", 1))
