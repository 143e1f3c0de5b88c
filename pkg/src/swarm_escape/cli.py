"""``swarm-escape`` command line.

Exit status: 0 on success, 1 for invalid input or configuration, 2 when a
run fails or its outputs cannot be written.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from . import output
from .config import ConfigError, RunConfig, load_document
from .consensus1d import simulate_1d
from .errors import InputError, PreconditionError, SimulationError, SweepError
from .flock import simulate_flock
from .sweep import run_sweep

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("swarm_escape")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# (flag, dest, type, help); dest is a dotted path into the config document,
# except "@rho_p" and "@s" which go to whichever predator the run uses.
PREDATOR_1D_FLAGS = [
    ("--xp", "predator_1d.x_p", float, "predator position"),
    ("--force-law", "predator_1d.force_law", str, "sign or linear"),
]
PREDATOR_FLAGS = [
    ("--rho-p", "@rho_p", float, "predator influence range"),
    ("--s", "@s", float, "repulsion strength"),
]
ONE_D_FLAGS = [
    ("--eps-ss", "eps_ss", float, "steady-state tolerance on the sup-norm step change"),
    ("--t-max", "t_max", int, "step cap"),
]
FLOCK_FLAGS = [
    ("--v0", "flock.v0", float, "agent speed (m/s)"),
    ("--dt", "flock.dt", float, "time step (s)"),
    ("--mass", "flock.mass", float, "agent mass (kg)"),
    ("--dim", "flock.dim", int, "spatial dimension, 2 or 3"),
    ("--box-side", "flock.box_side", float, "side of the initial square (m)"),
    ("--horizon", "flock.horizon", float, "simulated time (s)"),
    ("--predator-position", "predator.position", _floats, "e.g. --predator-position=-30,-30,0"),
    ("--predator-velocity", "predator.velocity", _floats, "e.g. --predator-velocity=10,10,0"),
]
COMMAND_FLAGS = {
    "simulate-1d": [
        ("--rho", "rho", float, "interaction range"),
        ("--x0", "x0", _floats, "explicit initial state, comma separated"),
        *ONE_D_FLAGS,
        *PREDATOR_1D_FLAGS,
        *PREDATOR_FLAGS,
    ],
    "simulate-flock": [
        ("--rho", "rho", float, "interaction range (m)"),
        *FLOCK_FLAGS,
        *PREDATOR_FLAGS,
        ("--snapshot-stride", "flock.snapshot_stride", int, "steps between snapshot files"),
    ],
    "sweep": [
        ("--mode", "sweep.mode", str, "one_d or flock"),
        ("--grid", "sweep.rho_grid", _floats, "comma-separated ascending rho values"),
        ("--trials", "sweep.trials", int, "trials per grid value"),
        ("--objective", "sweep.objective", str, "steady_state_escape, min_avg_distance or min_min_distance"),
        ("--workers", "sweep.workers", int, "worker processes"),
        *ONE_D_FLAGS,
        *PREDATOR_1D_FLAGS,
        *FLOCK_FLAGS,
        *PREDATOR_FLAGS,
    ],
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swarm-escape", description=__doc__.splitlines()[0].strip("`. "))
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="{simulate-1d,simulate-flock,sweep}")
    for command, flags in COMMAND_FLAGS.items():
        p = sub.add_parser(command)
        p.add_argument("--config", help="JSON run configuration; flags override its values")
        p.add_argument("--seed", dest="seed", type=int, default=None)
        p.add_argument("--n", dest="n", type=int, default=None, help="number of agents")
        p.add_argument("--out", dest="output.dir", default=None, help="output directory")
        p.add_argument("-v", "--verbose", action="store_true")
        for flag, dest, typ, help_ in flags:
            p.add_argument(flag, dest=dest, type=typ, default=None, help=help_)
        if command == "simulate-1d":
            p.add_argument("--no-predator", action="store_true", help="ignore any predator in the config")
        if command != "simulate-1d":
            p.add_argument("--no-renormalize", action="store_true", help="do not rescale speeds to v0")
    return parser


def _set(doc: dict, path: str, value) -> None:
    *parents, leaf = path.split(".")
    node = doc
    for key in parents:
        if not isinstance(node.get(key), dict):
            node[key] = {}
        node = node[key]
    node[leaf] = value


def _document(args: argparse.Namespace) -> dict:
    doc = load_document(args.config) if args.config else {}
    values = {k: v for k, v in vars(args).items() if v is not None}
    for key in ("config", "command", "verbose", "no_predator", "no_renormalize"):
        values.pop(key, None)
    one_d = args.command == "simulate-1d" or (
        args.command == "sweep" and values.get("sweep.mode", doc.get("sweep", {}).get("mode", "one_d")) == "one_d"
    )
    for key, value in values.items():
        if key.startswith("@"):
            key = ("predator_1d." if one_d else "predator.") + key[1:]
        if key.startswith("predator_1d.") and not isinstance(doc.get("predator_1d"), dict):
            doc["predator_1d"] = {}
        _set(doc, key, value)
    if getattr(args, "no_predator", False):
        doc["predator_1d"] = None
    if getattr(args, "no_renormalize", False):
        _set(doc, "flock.renormalize_speed", False)
    return doc


def run_simulate_1d(cfg: RunConfig) -> int:
    if cfg.records_nothing:
        out = cfg.output_dir()
        prov = cfg.provenance()
        output.write_csv(out / output.TRAJECTORY_1D, output.trajectory_header(cfg.doc["n"]), [], prov)
        output.write_json(out / output.SUMMARY_1D, {"config": prov, "report": None, "version": __version__})
        print(f"{out / output.TRAJECTORY_1D}: t_max=0, header only")
        return EXIT_OK
    trajectory, report = simulate_1d(cfg.initial_1d(), cfg.sim1d_params())
    out = cfg.output_dir()
    prov = cfg.provenance()
    output.write_trajectory_1d(out / output.TRAJECTORY_1D, trajectory, prov)
    output.write_json(
        out / output.SUMMARY_1D,
        {"config": prov, "report": output.report_dict(report), "version": __version__},
    )
    print(
        f"{out / output.TRAJECTORY_1D}: {trajectory.steps} steps, m*={report.m_star}, "
        f"converged={report.converged}" + ("" if report.d_ss is None else f", d_ss={report.d_ss:.6g}")
    )
    return EXIT_OK


def run_simulate_flock(cfg: RunConfig) -> int:
    flock = cfg.doc["flock"]
    snapshots, series = simulate_flock(
        cfg.initial_flock(), cfg.predator_nd(), cfg.flock_params(), flock["horizon"], flock["snapshot_stride"]
    )
    out = cfg.output_dir()
    prov = cfg.provenance()
    output.write_flock_series(out / output.FLOCK_SERIES, series, prov)
    output.write_snapshots(out / "snapshots", snapshots, prov)
    output.write_json(
        out / output.SUMMARY_FLOCK,
        {"config": prov, "series": output.series_dict(series), "version": __version__},
    )
    if series.captured:
        print(f"error: run aborted, agent captured at step {series.captured_step}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"{out / output.FLOCK_SERIES}: min dbar={series.mean.min():.6g}, min dcheck={series.minimum.min():.6g}")
    return EXIT_OK


def run_sweep_command(cfg: RunConfig) -> int:
    result = run_sweep(cfg.sweep_config(), workers=cfg.workers)
    csv_path, _ = output.write_sweep(cfg.output_dir(), result, cfg.provenance(), __version__)
    print(f"{csv_path}: rho_star={result.rho_star:g}")
    return EXIT_OK


RUNNERS = {
    "simulate-1d": run_simulate_1d,
    "simulate-flock": run_simulate_flock,
    "sweep": run_sweep_command,
}


def run_command(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help, --version
        return int(exc.code or 0)
    if args.command is None:
        print("error: missing subcommand; choose simulate-1d, simulate-flock or sweep", file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    try:
        cfg = RunConfig.resolve(args.command, _document(args))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InputError, PreconditionError) as exc:
        print(f"error: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_INVALID

    try:
        return RUNNERS[args.command](cfg)
    except (InputError, PreconditionError) as exc:
        print(f"error: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SimulationError, SweepError) as exc:
        print(f"error: simulation failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
