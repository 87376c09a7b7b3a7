"""
Command line front end.

Every subcommand reads an IFS document (or, for ``continuity``, a scan
document) given by ``--ifs`` and writes CSV with a header row to standard
output or ``--out``. Numbers are written with 17 significant digits.

Exit codes: 0 success, 1 input error or bad usage, 2 numerical failure,
3 resource cap exceeded.
"""

import argparse
import contextlib
import csv
import logging
import sys
from typing import IO, Iterator, List, Optional, Sequence

import numpy as np

from . import __version__
from .config import DEFAULT_LIMITS, Limits
from .cones import pressure_bounds
from .continuity import continuity_scan, max_adjacent_jump
from .dimension import affinity_dimension_bounds, joint_spectral_radius_bounds, zero_temperature_slope
from .document import IFSDocument, ScanSpec
from .exceptions import InputError, NumericalError, ResourceError
from .linalg import singular_values_batch, svf
from .measures import BernoulliWeights, energy_estimate, lyapunov_mc, variational_lower
from .methods import Potential
from .selfaffine import (
    FALCONER_DELTAS,
    box_dimension_estimate,
    chaos_game,
    falconer_experiment,
    occupancy_raster,
    write_csv,
    write_pgm,
)

logger = logging.getLogger("affinity.cli")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2
EXIT_RESOURCE = 3


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors with exit code 1 instead of argparse's 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


class CsvOut:
    def __init__(self, handle: IO[str], header: Sequence[str]):
        self._writer = csv.writer(handle, lineterminator="\n")
        self._width = len(header)
        self._writer.writerow(header)

    def row(self, *values) -> None:
        self._writer.writerow([_fmt(v) for v in values])

    def summary(self, label: str, *values) -> None:
        cells = [label] + [_fmt(v) for v in values]
        self._writer.writerow(cells + [""] * (self._width - len(cells)))


@contextlib.contextmanager
def _output(path: Optional[str]) -> Iterator[IO[str]]:
    if path is None:
        yield sys.stdout
        return
    try:
        handle = open(path, "w", newline="")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc
    with handle:
        yield handle


def _limits(args: argparse.Namespace) -> Limits:
    return DEFAULT_LIMITS.with_overrides(leaf_cap=getattr(args, "leaf_cap", None))


def _weights(args: argparse.Namespace, m: int) -> BernoulliWeights:
    if args.weights is None:
        return BernoulliWeights.uniform(m)
    try:
        values = tuple(float(x) for x in args.weights.split(","))
    except ValueError as exc:
        raise InputError(f"cannot parse weights {args.weights!r}") from exc
    return BernoulliWeights(values)


def cmd_svf(args: argparse.Namespace, out: IO[str]) -> None:
    doc = IFSDocument.load(args.ifs)
    T = doc.linear()
    sv = singular_values_batch(T.stack)
    header = ["map"] + [f"alpha_{j + 1}" for j in range(T.d)] + ["svf", "norm", "abs_det"]
    writer = CsvOut(out, header)
    for i, A in enumerate(T.stack):
        writer.row(i, *sv[i], svf(A, args.s), sv[i, 0], float(np.prod(sv[i])))


def cmd_pressure(args: argparse.Namespace, out: IO[str]) -> None:
    T = IFSDocument.load(args.ifs).linear()
    bounds = pressure_bounds(T, args.s, args.n, args.potential, cone=args.cone, limits=_limits(args))
    writer = CsvOut(out, ["s", "n", "upper", "lower", "method"])
    writer.row(bounds.s, bounds.n, bounds.upper, bounds.lower, bounds.method)


def cmd_dimension(args: argparse.Namespace, out: IO[str]) -> None:
    T = IFSDocument.load(args.ifs).linear()
    bounds = affinity_dimension_bounds(T, args.n, use_cone=args.cone == "auto", limits=_limits(args))
    writer = CsvOut(out, ["n", "upper", "lower", "upper_method", "lower_method"])
    writer.row(bounds.n, bounds.upper, bounds.lower, bounds.upper_method, bounds.lower_method)


def cmd_jsr(args: argparse.Namespace, out: IO[str]) -> None:
    T = IFSDocument.load(args.ifs).linear()
    limits = _limits(args)
    lo, hi = joint_spectral_radius_bounds(T, args.n, limits=limits)
    if args.smax is None:
        CsvOut(out, ["n", "lo", "hi"]).row(args.n, lo, hi)
        return
    slope = zero_temperature_slope(T, args.smax, args.n, limits)
    CsvOut(out, ["n", "lo", "hi", "m_upper_over_s"]).row(args.n, lo, hi, slope)


def cmd_lyapunov(args: argparse.Namespace, out: IO[str]) -> None:
    T = IFSDocument.load(args.ifs).linear()
    p = _weights(args, T.m)
    analysis = lyapunov_mc(T, p, args.steps, args.reps, args.seed)
    energy = variational = stderr = None
    if args.s is not None:
        estimate = energy_estimate(T, p, args.s, analysis)
        energy, stderr = estimate.value, estimate.stderr
        variational = variational_lower(T, p, args.s, analysis=analysis).value
    header = [
        "h", "lambda1", "lambda2", "stderr1", "stderr2", "splitting",
        "energy", "energy_stderr", "variational",
    ]
    CsvOut(out, header).row(
        analysis.h, analysis.lambda1, analysis.lambda2, analysis.stderr1, analysis.stderr2,
        analysis.splitting, energy, stderr, variational,
    )


def cmd_attractor(args: argparse.Namespace, out: IO[str]) -> None:
    ifs = IFSDocument.load(args.ifs).ifs()
    cloud = chaos_game(ifs, args.points, seed=args.seed, limits=_limits(args))
    if args.pgm is not None:
        write_pgm(args.pgm, occupancy_raster(cloud, args.grid))
    if args.points_csv is not None:
        write_csv(args.points_csv, cloud)
    box = box_dimension_estimate(cloud, *FALCONER_DELTAS)
    CsvOut(out, ["points", "radius", "box_dimension", "stderr"]).row(
        cloud.count, cloud.radius, box.slope, box.stderr
    )


def cmd_falconer(args: argparse.Namespace, out: IO[str]) -> None:
    T = IFSDocument.load(args.ifs).linear()
    report = falconer_experiment(T, args.trials, args.points, args.seed, args.n, _limits(args))
    writer = CsvOut(out, ["trial", "translations", "estimate", "stderr", "upper"])
    for row in report.trials:
        translations = " ".join(_fmt(x) for x in row.translations.ravel())
        writer.row(row.trial, translations, row.estimate, row.stderr, report.bounds.upper)
    writer.summary("median", report.median)
    writer.summary("mad", report.mad)


def cmd_continuity(args: argparse.Namespace, out: IO[str]) -> None:
    spec = ScanSpec.load(args.ifs)
    s = args.s if args.s is not None else spec.s
    n = args.n if args.n is not None else spec.n
    if s is None or n is None:
        raise InputError("continuity needs s and n from --s/--n or the scan document")
    writer = CsvOut(out, ["t", "s", "upper", "lower", "n"])
    rows = []
    for row in continuity_scan(spec, s, n, args.cone, _limits(args)):
        writer.row(row.t, row.s, row.upper, row.lower, row.n)
        rows.append(row)
    writer.summary("max_jump", max_adjacent_jump(rows))


COMMANDS = {
    "svf": cmd_svf,
    "pressure": cmd_pressure,
    "dimension": cmd_dimension,
    "jsr": cmd_jsr,
    "lyapunov": cmd_lyapunov,
    "attractor": cmd_attractor,
    "falconer": cmd_falconer,
    "continuity": cmd_continuity,
}


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="affinity", description="Pressures and dimensions of matrix tuples.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = ArgumentParser(add_help=False)
    common.add_argument("--ifs", required=True, help="IFS document (JSON); scan document for continuity.")
    common.add_argument("--out", help="Write CSV here instead of standard output.")
    common.add_argument("--leaf-cap", type=int, dest="leaf_cap", help="Largest number of words per level.")
    common.add_argument("--verbose", action="store_true", help="Log at DEBUG level on stderr.")

    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    p = sub.add_parser("svf", parents=[common], help="Singular values and phi^s of each map.")
    p.add_argument("--s", type=float, default=1.0)

    p = sub.add_parser("pressure", parents=[common], help="Certified bounds on P(A, s) or M(A, s).")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--cone", choices=["auto", "off"], default="auto")
    p.add_argument("--potential", choices=list(Potential.ALL), default=Potential.SVF)

    p = sub.add_parser("dimension", parents=[common], help="Affinity dimension bounds.")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--cone", choices=["auto", "off"], default="auto")

    p = sub.add_parser("jsr", parents=[common], help="Joint spectral radius bounds.")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--smax", type=float, help="Also report M-upper(s)/s at this s.")

    p = sub.add_parser("lyapunov", parents=[common], help="Monte Carlo Lyapunov exponents (d = 2).")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--steps", type=int, default=10 ** 5)
    p.add_argument("--reps", type=int, default=16)
    p.add_argument("--s", type=float, help="Also report the energy and variational bound at s.")
    p.add_argument("--weights", help="Comma separated Bernoulli weights (default uniform).")

    p = sub.add_parser("attractor", parents=[common], help="Chaos game, raster and box dimension.")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--points", type=int, default=10 ** 6)
    p.add_argument("--grid", type=int, default=1024)
    p.add_argument("--pgm", help="Write the occupancy raster as binary PGM.")
    p.add_argument("--points-csv", dest="points_csv", help="Write the point cloud as CSV.")

    p = sub.add_parser("falconer", parents=[common], help="Random translation experiment (d = 2).")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--points", type=int, default=10 ** 6)
    p.add_argument("--n", type=int, default=8)

    p = sub.add_parser("continuity", parents=[common], help="Pressure bounds along a matrix path.")
    p.add_argument("--s", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--cone", choices=["auto", "off"], default="auto")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    logging.captureWarnings(True)
    try:
        with _output(args.out) as out:
            COMMANDS[args.command](args, out)
    except InputError as exc:
        logger.error(str(exc))
        return EXIT_INPUT
    except NumericalError as exc:
        logger.error(str(exc))
        return EXIT_NUMERICAL
    except ResourceError as exc:
        logger.error(str(exc))
        return EXIT_RESOURCE
    finally:
        logging.captureWarnings(False)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
