"""Command-line entry point.

Subcommands map one-to-one onto the experiment drivers:

  run          one simulation with certificate, CSV, VTK, figures
  convergence  temporal self-convergence study (rates table)
  min-c        minimum solute value across mesh resolutions
  sweep        single-parameter re-runs with a summary table

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 output I/O failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .experiments import cmd_convergence, cmd_min_c, cmd_run, cmd_sweep
from .sparse import SingularMatrixError
from .stepper import NewtonError, PhiOutOfDomainError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

# CLI flag -> config key; every flag simply overrides the file value
_FLAG_KEYS = [
    ("--eps", "eps", float),
    ("--theta0", "theta0", float),
    ("--sigma", "sigma", float),
    ("--delta", "delta", float),
    ("--tau", "tau", float),
    ("--mesh", "mesh", int),
    ("--length", "length", float),
    ("--seed", "seed", int),
    ("--steps", "steps", int),
    ("--tmax", "tmax", float),
    ("--phi0-scale", "phi0_scale", float),
    ("--phi0-offset", "phi0_offset", float),
    ("--c0-scale", "c0_scale", float),
    ("--c0-offset", "c0_offset", float),
    ("--mu0", "mu0", str),
    ("--out", "out", str),
    ("--dump-every", "dump_every", int),
    ("--diag-every", "diag_every", int),
]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="key = value configuration file")
    for flag, key, kind in _FLAG_KEYS:
        parser.add_argument(flag, dest=f"cfg_{key}", type=kind, metavar=key.upper(),
                            help=f"override config key '{key}'")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip figure rendering (CSV and VTK still written)")


def _collect_overrides(args: argparse.Namespace) -> dict:
    overrides = {}
    for _, key, _ in _FLAG_KEYS:
        value = getattr(args, f"cfg_{key}")
        if value is not None:
            overrides[key] = value
    if args.no_figures:
        overrides["figures"] = False
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chcross",
        description="Structure-preserving solver for a Cahn-Hilliard "
                    "cross-diffusion system on the periodic square",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one simulation and certify it")
    _add_common(p_run)

    p_conv = sub.add_parser("convergence", help="temporal convergence study")
    _add_common(p_conv)
    p_conv.add_argument("--taus", default=None,
                        help="comma-separated step sizes (largest first)")
    p_conv.add_argument("--tau-ref", type=float, default=1e-4,
                        help="reference step size (default 1e-4)")
    p_conv.add_argument("--horizon", type=float, default=0.064,
                        help="comparison time T (default 0.064)")

    p_minc = sub.add_parser("min-c", help="minimum solute value vs. mesh resolution")
    _add_common(p_minc)
    p_minc.add_argument("--meshes", default="30,60,90",
                        help="comma-separated mesh subdivisions (default 30,60,90)")
    p_minc.add_argument("--times", default="0.2,0.4,0.6",
                        help="comma-separated checkpoint times (default 0.2,0.4,0.6)")

    p_sweep = sub.add_parser("sweep", help="re-run while varying one parameter")
    _add_common(p_sweep)
    p_sweep.add_argument("--param", required=True, choices=("tau", "delta", "theta0"))
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated parameter values")
    return parser


def _floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad numeric list {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad integer list {text!r}") from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, _collect_overrides(args))
        if args.command == "run":
            result = cmd_run(cfg)
            return EXIT_OK if result.certificate.ok else EXIT_SOLVER
        if args.command == "convergence":
            taus = _floats(args.taus) if args.taus else None
            if taus is not None:
                cmd_convergence(cfg, taus=taus, tau_ref=args.tau_ref, tmax=args.horizon)
            else:
                cmd_convergence(cfg, tau_ref=args.tau_ref, tmax=args.horizon)
            return EXIT_OK
        if args.command == "min-c":
            cmd_min_c(cfg, meshes=_ints(args.meshes), times=_floats(args.times))
            return EXIT_OK
        if args.command == "sweep":
            cmd_sweep(cfg, args.param, _floats(args.values))
            return EXIT_OK
        raise AssertionError(f"unhandled command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NewtonError, SingularMatrixError, PhiOutOfDomainError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
