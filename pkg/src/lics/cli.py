"""Command line: ``lics simulate|sweep|optimize|presets``.

Exit codes: 0 success, 2 configuration or validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, load_config, scenario_to_explicit
from .dynamics import integrate
from .errors import IntegrationError, ValidationError
from .files import write_json, write_matrix, write_trajectory
from .optimize import optimize
from .scenarios import PRESETS
from .sweep import default_workers, run_sweep

log = logging.getLogger("lics")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _out_dir(cfg: RunConfig, override) -> Path:
    out = Path(override) if override else Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo(cfg: RunConfig, out: Path) -> None:
    (out / "config.echo.yaml").write_text(cfg.to_yaml(), encoding="utf-8")


def cmd_simulate(cfg: RunConfig, args) -> int:
    scenario = cfg.build_scenario()
    block = cfg.simulate
    final_only = block is not None and block.final_only
    samples = None if final_only else (block.samples if block is not None else 801)
    traj = integrate(scenario.schedule, scenario.params, scenario.init, scenario.integrator,
                     sampling=samples)
    out = _out_dir(cfg, args.out)
    for fmt in cfg.output.formats:
        write_trajectory(traj, out / f"trajectory.{fmt}", "," if fmt == "csv" else "\t")
    start_total = scenario.init.norm2 + scenario.init.W
    residual = float(abs(traj.sum_total - start_total).max())
    summary = {
        "scenario": cfg.scenario.preset or "explicit",
        "final": traj.final_observables(),
        "final_time": float(traj.times[-1]),
        "conservation_residual": residual,
        "lossless": scenario.params.eta_m == scenario.params.eta_n == scenario.params.eta_f == 0,
        "steps": traj.n_steps,
        "rejected_steps": traj.n_rejected,
        "samples": len(traj),
    }
    write_json(summary, out / "summary.json")
    _echo(cfg, out)
    final = summary["final"]
    print(" ".join(f"{k}={v:.9g}" for k, v in final.items()))
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    scenario = cfg.build_scenario()
    spec = cfg.build_sweep(scenario)
    result = run_sweep(spec, workers=args.workers, permit_partial=args.permit_partial)
    out = _out_dir(cfg, args.out)
    extra = {"partial": str(bool(result.failed_cells)).lower()}
    for name in result.data:
        write_matrix(result, name, out / f"{name}.dat", extra)
    write_json(
        {"axis1": {"path": result.axis1_path, "values": result.axis1},
         "axis2": None if result.axis2 is None else {"path": result.axis2_path, "values": result.axis2}},
        out / "axes.json",
    )
    write_json(result.to_dict(), out / "sweep_result.json")
    _echo(cfg, out)
    if result.failed_cells:
        print(f"warning: {len(result.failed_cells)} cell(s) failed and are NaN", file=sys.stderr)
    print(f"sweep {result.shape} -> {out}")
    return EXIT_OK


def reproduction_config(cfg: RunConfig, result) -> RunConfig:
    """Simulate config that re-runs the optimum with final-state sampling."""
    return RunConfig.model_validate({
        "scenario": scenario_to_explicit(result.scenario),
        "integrator": cfg.integrator.model_dump(exclude_none=True),
        "simulate": {"final_only": True},
        "output": cfg.output.model_dump(),
    })


def cmd_optimize(cfg: RunConfig, args) -> int:
    scenario = cfg.build_scenario()
    objective = cfg.build_objective(scenario)
    result = optimize(objective, budget=cfg.optimize.budget, seed=args.seed, workers=args.workers)
    out = _out_dir(cfg, args.out)
    doc = result.to_dict()
    doc["seed"] = args.seed
    write_json(doc, out / "optimize_result.json")
    (out / "optimum.simulate.yaml").write_text(reproduction_config(cfg, result).to_yaml(), encoding="utf-8")
    _echo(cfg, out)
    best = " ".join(f"{k}={v:.9g}" for k, v in result.best.items())
    achieved = " ".join(f"{k}={v:.9g}" for k, v in result.achieved.items())
    print(f"best {best}\nachieved {achieved}\nobjective={result.objective:.3e}")
    return EXIT_OK


def cmd_presets(args) -> int:
    for name, p in PRESETS.items():
        print(f"{name:6s}  {p.citation}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "optimize": cmd_optimize}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lics", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--workers", type=int, default=default_workers())
        p.add_argument("--out", default=None, help="output directory (overrides the config)")
        p.add_argument("--permit-partial", action="store_true",
                       help="keep going when sweep cells fail; failed cells become NaN")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("presets", help="list scenario presets")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "presets":
        return cmd_presets(args)
    try:
        if args.workers < 1:
            raise ValidationError("--workers must be at least 1")
        cfg = load_config(args.config, args.command)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
