"""
Continuity scan: pressure bounds along the straight-line family
``A_i(t) = A_i + t D_i``.

For a fixed level n the upper bound ``min_{k <= n} S_k / k`` is a finite minimum
of functions continuous in the matrix entries, hence continuous in t. A scan
with small adjacent jumps illustrates the continuity of the pressure in the
matrices; it proves nothing about the limit.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .config import DEFAULT_LIMITS, Limits
from .cones import pressure_bounds
from .document import ScanSpec
from .exceptions import AffinityWarning
from .methods import Potential

logger = logging.getLogger("affinity.continuity")


@dataclass(frozen=True)
class ScanRow:
    t: float
    s: float
    upper: float
    lower: Optional[float]
    n: int


def scan_row(
    spec: ScanSpec,
    t: float,
    s: float,
    n: int,
    cone: str = "auto",
    limits: Limits = DEFAULT_LIMITS,
) -> ScanRow:
    T = spec.tuple_at(t)
    if T.d != 2:
        cone = "off"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AffinityWarning)
        bounds = pressure_bounds(T, s, n, Potential.SVF, cone=cone, limits=limits)
    return ScanRow(t=t, s=s, upper=bounds.upper, lower=bounds.lower, n=n)


def continuity_scan(
    spec: ScanSpec,
    s: float,
    n: int,
    cone: str = "auto",
    limits: Limits = DEFAULT_LIMITS,
) -> Iterator[ScanRow]:
    """Rows in grid order; the lower column is empty for d > 2 or when no cone is found."""
    spec.check()
    for t in spec.t_grid:
        row = scan_row(spec, t, s, n, cone, limits)
        logger.debug(f"scan t={t!r}: upper={row.upper!r} lower={row.lower!r}")
        yield row


def max_adjacent_jump(rows: Iterable[ScanRow]) -> float:
    uppers = [row.upper for row in rows]
    return max((abs(b - a) for a, b in zip(uppers, uppers[1:])), default=0.0)
