"""Command line front end: configuration in, CSV out.

Exit codes: 0 success, 2 configuration or argument error, 3 numerical
error, 4 input-data error.
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from ._csv import render
from .amplitude import norm
from .analysis import (
    Simulation,
    curve_to_csv,
    default_theta2,
    fit_modulation,
    fit_to_csv,
    ingest_counts_csv,
    scan_tau,
    synth_counts,
    tau_scan_to_csv,
    visibility_map,
    visibility_map_to_csv,
)
from .config import ExperimentConfig, default_config, load_config
from .errors import ConfigError, DataError, NumericalError
from .interference import density_matrix, density_matrix_to_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_DATA = 4

FIGURE1_PANELS = {
    "fig1a.csv": (90.0, True),
    "fig1b.csv": (45.0, True),
    "fig1c.csv": (90.0, False),
    "fig1d.csv": (45.0, False),
}


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="configuration document, or 'default' (default when omitted)")
    common.add_argument("--output", default=argparse.SUPPRESS, help="output file (default: stdout)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for synthetic counts")

    parser = argparse.ArgumentParser(
        prog="polcorr", parents=[common],
        description="Polarization correlation of pulsed type-II SPDC pairs behind an X-Y delay.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("scan-theta", parents=[common], help="rate versus theta2 at fixed theta1")
    p.add_argument("--theta1", type=float, required=True)
    p.add_argument("--model", choices=["full", "truncated"])
    p.add_argument("--points", type=int, default=41, help="theta2 samples over 0..180 deg")
    p.add_argument("--counts", type=float, metavar="N_PEAK",
                   help="emit Poisson counts with this expected peak instead of rates")

    for name, text in (("visibility-map", "visibility of both models per theta1"),
                       ("compare-models", "alias of visibility-map")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--theta1", type=_float_list, default=[0, 15, 30, 45, 60, 75, 90],
                       help="comma-separated theta1 values in degrees")

    p = sub.add_parser("scan-tau", parents=[common], help="visibility versus delay at fixed theta1")
    p.add_argument("--theta1", type=float, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--tau", type=_float_list, help="comma-separated delays in fs")
    group.add_argument("--tau-range", type=float, nargs=3, metavar=("START", "STOP", "STEP"))

    sub.add_parser("density-matrix", parents=[common], help="4x4 polarization density matrix")

    p = sub.add_parser("fit", parents=[common], help="fit a measured theta2,counts CSV")
    p.add_argument("--input", required=True, help="CSV path, '-' for stdin")
    p.add_argument("--theta1", type=float, default=float("nan"))

    sub.add_parser("validate", parents=[common], help="check the configuration only")

    p = sub.add_parser("figure1", parents=[common], help="write fig1a.csv .. fig1d.csv")
    p.add_argument("--outdir", required=True)

    p = sub.add_parser("amplitude", parents=[common], help="dump |A|^2 as t_e,t_o,value")
    p.add_argument("--stride", type=int, default=4)
    return parser


def _load(args) -> ExperimentConfig:
    source = getattr(args, "config", None)
    if source is None or source == "default":
        return default_config()
    try:
        text = Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {source}: {exc.strerror}") from None
    return load_config(text)


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_figure1_bundle(cfg: ExperimentConfig, outdir) -> list[Path]:
    """Write the four panels: theta1 = 90 and 45 deg, with the delay at tau = 0 and without it."""
    outdir = Path(outdir)
    if not outdir.is_dir():
        raise ConfigError(f"output directory {outdir} does not exist")
    sim = Simulation(cfg.with_(tau_fs=0.0, delay_present=True))
    documents = {}
    for name, (theta1, with_delay) in FIGURE1_PANELS.items():
        curve = sim.curve(theta1) if with_delay else sim.curve_no_delay(theta1)
        documents[name] = curve_to_csv(curve)
    written = []
    try:
        for name, text in documents.items():
            _atomic_write(outdir / name, text)
            written.append(outdir / name)
    except OSError as exc:
        for path in written:
            path.unlink(missing_ok=True)
        raise ConfigError(f"cannot write to {outdir}: {exc.strerror}") from None
    return written


def _execute(args, stdin) -> str | None:
    command = args.command
    if command == "fit":
        if args.input == "-":
            text = stdin.read()
        else:
            try:
                text = Path(args.input).read_text(encoding="utf-8")
            except OSError as exc:
                raise DataError(f"cannot read {args.input}: {exc.strerror}") from None
        return fit_to_csv(fit_modulation(ingest_counts_csv(text, args.theta1)))

    cfg = _load(args)
    if command == "validate":
        return "ok\n"
    if command == "figure1":
        emit_figure1_bundle(cfg, args.outdir)
        return None
    if command == "scan-theta":
        if args.model:
            cfg = cfg.with_(model=args.model)
        if args.points < 5:
            raise ConfigError("--points must be >= 5")
        curve = Simulation(cfg).curve(args.theta1, default_theta2(args.points))
        if args.counts is not None:
            curve = synth_counts(curve, args.counts, getattr(args, "seed", 0))
        return curve_to_csv(curve)
    if command in ("visibility-map", "compare-models"):
        return visibility_map_to_csv(visibility_map(Simulation(cfg), args.theta1))
    if command == "scan-tau":
        if args.tau is not None:
            taus = args.tau
        else:
            start, stop, step = args.tau_range
            if step <= 0 or stop < start:
                raise ConfigError("--tau-range needs START <= STOP and STEP > 0")
            taus = start + step * np.arange(int(np.floor((stop - start) / step + 1e-9)) + 1)
        return tau_scan_to_csv(scan_tau(Simulation(cfg), args.theta1, taus))
    if command == "density-matrix":
        return density_matrix_to_csv(density_matrix(Simulation(cfg).components()))
    if command == "amplitude":
        if args.stride < 1:
            raise ConfigError("--stride must be >= 1")
        sim = Simulation(cfg)
        norm(sim.amp)
        t = sim.amp.grid.times[::args.stride]
        intensity = np.abs(sim.amp.values[::args.stride, ::args.stride]) ** 2
        te, to = np.meshgrid(t, t, indexing="ij")
        return render(["t_e_fs", "t_o_fs", "abs_A_squared"],
                      zip(te.ravel(), to.ravel(), intensity.ravel()))
    raise ConfigError(f"unknown command {command!r}")


def run(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        text = _execute(args, stdin)
        if text is not None:
            output = getattr(args, "output", None)
            if output:
                try:
                    _atomic_write(Path(output), text)
                except OSError as exc:
                    raise ConfigError(f"cannot write {output}: {exc.strerror}") from None
            else:
                stdout.write(text)
    except ConfigError as exc:
        for line in exc.violations:
            print(f"polcorr: error: {line}", file=stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"polcorr: numerical error: {exc}", file=stderr)
        return EXIT_NUMERICAL
    except DataError as exc:
        print(f"polcorr: data error: {exc}", file=stderr)
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
