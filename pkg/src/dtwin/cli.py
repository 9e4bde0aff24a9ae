"""Command-line entry point: ``dtwin {offline,online,predict,validate,export-plots}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .assimilation import SimulationError
from .config import RunConfig, load_config
from .ddn import DegenerateEvidenceError
from .pipeline import (
    StageError,
    bundle_config,
    check_compatible,
    export_long,
    load_bundle,
    read_history,
    run_offline,
    run_online,
    run_predict,
)
from .planner import ConvergenceError
from .statespace import ConfigurationError, point_mass
from .structure.newmark import FactorizationError

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

NUMERICAL = (ConvergenceError, DegenerateEvidenceError, FactorizationError, SimulationError,
             np.linalg.LinAlgError, ArithmeticError)


def _config(args) -> RunConfig:
    if args.config is None:
        raise ConfigurationError("--config is required")
    return load_config(args.config).with_seed(args.seed)


def _bundle_dir(args, cfg: RunConfig | None) -> Path:
    if args.bundle is not None:
        return Path(args.bundle)
    if cfg is not None:
        return cfg.output_dir
    raise ConfigurationError("--bundle is required")


def cmd_offline(args) -> int:
    cfg = _config(args)
    out = Path(args.out) if args.out else Path(args.bundle) if args.bundle else cfg.output_dir
    s = run_offline(cfg, out)
    print(f"bundle {s.bundle}: basis {s.basis_size}, accuracy {s.accuracy:.3f}, "
          f"diagonal-dominant cells {s.diagonal_dominance:.2f}")
    return EXIT_OK


def cmd_online(args) -> int:
    cfg = _config(args)
    bundle = load_bundle(_bundle_dir(args, cfg))
    run = run_online(cfg, bundle, args.steps, args.mode, args.out)
    truth = read_history(run.path)["true_state"]
    hits = sum(r.map_state == s for r, s in zip(run.records, truth))
    print(f"history {run.path}: {len(run.records)} steps, MAP equals truth on {hits}")
    return EXIT_OK


def _start_belief(args, bundle) -> np.ndarray:
    if args.start_state is not None:
        return point_mass(bundle.n_states, args.start_state)
    hist = Path(args.out or bundle.path) / "history.csv"
    if args.from_history:
        hist = Path(args.from_history)
    if hist.is_file():
        return read_history(hist)["posterior"][-1]
    return point_mass(bundle.n_states, 0)


def cmd_predict(args) -> int:
    cfg = _config(args) if args.config else None
    bundle = load_bundle(_bundle_dir(args, cfg))
    if cfg is None:
        cfg = bundle_config(bundle)
    check_compatible(cfg, bundle)
    path = run_predict(cfg, bundle, _start_belief(args, bundle), args.horizon, args.out)
    print(f"prediction {path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _config(args) if args.config else None
    if cfg is not None:
        print(f"config {args.config}: ok ({cfg.space.n_states} states, actions {cfg.action_names})")
    if args.bundle is not None:
        bundle = load_bundle(Path(args.bundle))
        if cfg is not None:
            check_compatible(cfg, bundle)
        print(f"bundle {args.bundle}: ok")
    if cfg is None and args.bundle is None:
        raise ConfigurationError("nothing to validate: pass --config and/or --bundle")
    return EXIT_OK


def cmd_export(args) -> int:
    cfg = _config(args) if args.config else None
    src = _bundle_dir(args, cfg)
    for p in export_long(src, Path(args.out) if args.out else src):
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dtwin", description="Predictive digital twin for structural health.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML run configuration")
        sp.add_argument("--bundle", help="artifact directory (default: the config's output_dir)")
        sp.add_argument("--seed", type=int, help="override the configured master seed")
        sp.add_argument("--out", help="output directory")

    s = sub.add_parser("offline", help="build the structural model, surrogate, confusion CPT and policy")
    common(s)
    s.set_defaults(func=cmd_offline)

    s = sub.add_parser("online", help="simulate the asset and assimilate observations step by step")
    common(s)
    s.add_argument("--steps", type=int)
    s.add_argument("--mode", choices=["channel", "pipeline"])
    s.set_defaults(func=cmd_online)

    s = sub.add_parser("predict", help="unroll the closed loop from a starting belief")
    common(s)
    s.add_argument("--horizon", type=int)
    s.add_argument("--start-state", type=int, help="start from a point mass on this state")
    s.add_argument("--from-history", help="start from the last posterior of this history CSV")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("validate", help="check a configuration and/or an artifact bundle")
    common(s)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("export-plots", help="write long-format CSVs for plotting")
    common(s)
    s.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        if isinstance(exc.cause, ConfigurationError):
            return EXIT_INVALID
        return EXIT_NUMERICAL if isinstance(exc.cause, NUMERICAL) else 1
    except ConfigurationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NUMERICAL as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
