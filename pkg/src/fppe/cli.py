"""Command-line entry point: ``fppe <subcommand> --config <path> [--out DIR] [--seed N]``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .classify import classify
from .domain import Discretization
from .errors import (
    BracketError,
    ConfigError,
    ConvergenceError,
    CrossCheckError,
    QuadratureInstabilityError,
    StepError,
)
from .evolution import energy_residual, simulate
from .functionals import well_constants
from .io import ExperimentConfig, emit_trajectory, parse_config, realize_initial_data, write_document
from .stationary import ground_state
from .verify import run_suite

log = logging.getLogger("fppe")

SUBCOMMANDS = ("constants", "classify", "ground-state", "simulate", "verify")
EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3, 4
NUMERICAL_ERRORS = (ConvergenceError, CrossCheckError, QuadratureInstabilityError,
                    BracketError, StepError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fppe", description=__doc__)
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, help="JSON configuration file")
    ap.add_argument("--out", default=None, help="output directory (overrides output.directory)")
    ap.add_argument("--seed", type=int, default=None, help="random seed for multi-start solvers")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def resolve_seed(cli_seed: int | None, cfg: ExperimentConfig) -> int:
    """``--seed`` beats ``FPPE_SEED`` beats the config file."""
    if cli_seed is not None:
        seed = cli_seed
    elif os.environ.get("FPPE_SEED"):
        try:
            seed = int(os.environ["FPPE_SEED"])
        except ValueError as exc:
            raise ConfigError(f"FPPE_SEED is not an integer: {os.environ['FPPE_SEED']!r}") from exc
    else:
        return cfg.seed
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return seed


def _base_summary(name: str, cfg: ExperimentConfig) -> dict:
    return {
        "subcommand": name,
        "artifact_version": __version__,
        "n_modes": cfg.domain.n_modes,
        "config": cfg.as_dict(),
    }


def run_subcommand(name: str, cfg: ExperimentConfig, out_dir: Path) -> tuple[dict, int]:
    """Run one subcommand, write its files into ``out_dir``, return (summary, exit code)."""
    if name not in SUBCOMMANDS:
        raise ValueError(f"unknown subcommand {name!r}")
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    summary = _base_summary(name, cfg)
    code = EXIT_OK
    domain = cfg.domain
    disc = Discretization(domain)

    if name == "verify":
        results = run_suite(domain, seed=cfg.seed, solver=cfg.solver, disc=disc)
        summary["properties"] = [r.as_dict() for r in results]
        summary["all_passed"] = all(r.passed for r in results)
        code = EXIT_OK if summary["all_passed"] else EXIT_VERIFY
        write_document(summary, out_dir / "verify.json")
    else:
        gs = ground_state(domain, solver_cfg=cfg.solver, disc=disc)
        if not gs.converged:
            raise ConvergenceError(f"ground state did not converge (residual {gs.residual:.3e})")
        if name == "ground-state":
            summary["ground_state"] = {
                "coefficients": gs.field.coeffs, "J_value": gs.J_value, "residual": gs.residual,
                "iterations": gs.iterations, "converged": gs.converged,
                "start_index": gs.start_index,
            }
            write_document(summary, out_dir / "ground_state.json")
        else:
            constants = well_constants(domain, disc=disc, seed=cfg.seed, solver_cfg=cfg.solver)
            summary["constants"] = constants.as_dict()
            if name == "constants":
                write_document(summary, out_dir / "constants.json")
            else:
                u0 = realize_initial_data(cfg, gs.field)
                report = classify(u0, constants, domain, disc=disc)
                summary["classification"] = report.as_dict()
                if name == "classify":
                    write_document(summary, out_dir / "classification.json")
                else:
                    record = simulate(u0, cfg.evolution, domain, disc=disc)
                    for fmt in cfg.output.formats:
                        emit_trajectory(record, out_dir / f"trajectory.{fmt}", fmt)
                    o = record.outcome
                    summary["outcome"] = {
                        "kind": o.kind, "t_stop": o.t_stop, "T_star": o.T_star,
                        "T_star_reliable": o.T_star_reliable, "reason": o.reason,
                    }
                    summary["bounds"] = {"T_lower": report.T_lower, "T_upper": report.T_upper}
                    summary["max_energy_residual"] = energy_residual(record, report.J0)
                    summary["n_snapshots"] = len(record.snapshots)
                    write_document(summary, out_dir / "summary.json")
                    if o.kind == "StepFailure":
                        code = EXIT_NUMERICAL
    # wall time is kept out of the summary so summaries stay byte-identical
    write_document({"subcommand": name, "wall_time_s": time.perf_counter() - started},
                   out_dir / "timing.json")
    return summary, code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"fppe: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text)
        cfg = cfg.with_seed(resolve_seed(args.seed, cfg))
    except ConfigError as exc:
        print(f"fppe: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out if args.out is not None else cfg.output.directory)
    try:
        summary, code = run_subcommand(args.subcommand, cfg, out_dir)
    except NUMERICAL_ERRORS as exc:
        print(f"fppe: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"fppe: I/O failure: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.subcommand == "verify":
        for prop in summary["properties"]:
            print(f"{prop['status']:4s}  {prop['name']}")
    log.info("wrote results to %s", out_dir)
    return code


if __name__ == "__main__":
    sys.exit(main())
