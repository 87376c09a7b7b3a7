"""
Root finding on pressures: similarity dimension, two-sided bounds on the
affinity dimension, and joint spectral radius bounds.

All roots are found by bisection (`scipy.optimize.bisect`): the partition sums
are monotone in s but have kinks at every integer s.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect

from .config import DEFAULT_LIMITS, Limits
from .cones import ConePair, find_invariant_cone
from .exceptions import AffinityWarning, InputError, NumericalError
from .linalg import _check_power, is_conformal, log_spectral_radius_bounds_batch
from .methods import Method, Potential
from .pressure import (
    LevelSpectrum,
    LinearTuple,
    _block_logsv,
    _check_level,
    _normalised,
    level_blocks,
    level_spectrum,
    lipschitz_bracket,
)

logger = logging.getLogger("affinity.dimension")

SIMILARITY_TOLERANCE = 1e-12
ROOT_TOLERANCE = 1e-10
BRACKET_SLACK = 1e-12
DEFAULT_POWER = 2 ** 24


@dataclass(frozen=True)
class DimensionBounds:
    upper: float
    n: int
    upper_method: str = Method.SUBADDITIVE_INF
    lower: Optional[float] = None
    lower_method: Optional[str] = None
    cone: Optional[ConePair] = None

    @property
    def gap(self) -> Optional[float]:
        return None if self.lower is None else self.upper - self.lower


def similarity_dimension(ratios: Sequence[float]) -> float:
    """The ``s >= 0`` with ``sum r_i^s = 1``, to within 1e-12; a single ratio gives 0."""
    r = np.asarray(ratios, dtype=np.float64).ravel()
    if r.size == 0:
        raise InputError("similarity dimension needs at least one ratio")
    if not np.all(np.isfinite(r)) or np.any(r <= 0.0) or np.any(r >= 1.0):
        raise InputError(f"ratios must lie in (0, 1), got {r.tolist()}")
    if r.size == 1:
        return 0.0
    # m * r_max^s <= 1 past this point
    hi = math.log(r.size) / -math.log(float(r.max())) + 1.0
    return float(bisect(lambda s: float(np.sum(r ** s)) - 1.0, 0.0, hi, xtol=SIMILARITY_TOLERANCE))


def _check_contractive(T: LinearTuple) -> None:
    norms = T.singular_values[:, 0]
    if np.any(norms >= 1.0):
        i = int(np.argmax(norms))
        raise InputError(f"map {i} has norm {float(norms[i])} >= 1; the tuple must be contractive")


def _root_bracket(f: Callable[[float], float], d: int, what: str) -> Tuple[float, float]:
    """``(a, b)`` with ``f(a) > 0 >= f(b)`` around the root of a decreasing ``f``."""
    lo, hi = 0.0, 2.0 * d
    if f(lo) <= 0.0:
        return 0.0, 0.0
    if f(hi) >= 0.0:
        raise NumericalError(f"{what} has no root below the sanity cap 2d = {hi}")
    root = float(bisect(f, lo, hi, xtol=ROOT_TOLERANCE))
    # bisect returns a point inside its final bracket; step out until the signs certify
    step = 2.0 * ROOT_TOLERANCE
    a, b = max(root - step, lo), min(root + step, hi)
    while f(a) <= 0.0:
        step *= 2.0
        a = max(a - step, lo)
    while f(b) > 0.0:
        step *= 2.0
        b = min(b + step, hi)
    logger.debug(f"{what}: root in [{a:.12g}, {b:.12g}]")
    return a, b


def affinity_dimension_upper(
    T: LinearTuple, n: int, limits: Limits = DEFAULT_LIMITS
) -> float:
    """
    Root ``s_n`` of ``S_n(T, s) = 0``; an upper bound for the affinity dimension.

    Raises `InputError` unless every ``||A_i|| < 1``.
    """
    _check_contractive(T)
    spectrum = level_spectrum(T, n, limits)
    return _root_bracket(spectrum.partition_sum, T.d, f"S_{n}")[1]


def pressure_bracket_root(
    s0: float, lower: float, upper: float, slopes: Tuple[float, float]
) -> Tuple[float, float]:
    """
    Interval containing the root of a pressure known to lie in ``[lower, upper]`` at ``s0``.

    ``slopes`` come from `lipschitz_bracket` and must both be negative.
    """
    steep, shallow = -slopes[0], -slopes[1]
    if not (steep >= shallow > 0.0):
        raise InputError(f"slopes {slopes} do not describe a strictly decreasing pressure")
    if lower > upper:
        raise InputError(f"pressure interval [{lower}, {upper}] is empty")
    root_lo = s0 + lower / (steep if lower >= 0.0 else shallow)
    root_hi = s0 + upper / (shallow if upper >= 0.0 else steep)
    return root_lo, root_hi


def _level_profiles(spectra: List[LevelSpectrum], s: float, log_c: Optional[float]):
    values = [(k, spectrum.partition_sum(s)) for k, spectrum in enumerate(spectra, start=1)]
    upper = min(S / k for k, S in values)
    lower = None if log_c is None else max((log_c + S) / k for k, S in values)
    return upper, lower


def affinity_dimension_bounds(
    T: LinearTuple,
    n: int,
    use_cone: bool = True,
    limits: Limits = DEFAULT_LIMITS,
) -> DimensionBounds:
    """
    Two-sided bounds on the affinity dimension of a contractive tuple.

    The upper side is `affinity_dimension_upper`. Conformal tuples have
    ``S_n / n = P`` exactly, so both sides are the ends of the bisection
    bracket around the root of ``S_n`` (``exact-conformal``). Otherwise, for
    d = 2 and ``use_cone``, a certified cone pair gives the lower side as the
    root of ``log c + S_n(s)``. Both sides are then tightened with the Lipschitz
    bracket at their midpoint, using the pressure bounds from every level
    ``k <= n``.
    """
    _check_contractive(T)
    n = _check_level(T, n, limits)
    spectra = [level_spectrum(T, k, limits) for k in range(1, n + 1)]
    lower_root, upper = _root_bracket(spectra[-1].partition_sum, T.d, f"S_{n}")

    if all(is_conformal(A) for A in T.stack):
        return DimensionBounds(
            upper=upper, n=n, lower=lower_root, lower_method=Method.EXACT_CONFORMAL
        )

    pair: Optional[ConePair] = None
    if use_cone:
        if T.d != 2:
            warnings.warn("cone lower bounds are available for d = 2 only", AffinityWarning)
        else:
            pair = find_invariant_cone(T, min_gap=limits.min_gap)
            if pair is None:
                warnings.warn("no invariant cone found; lower bound omitted", AffinityWarning)
    if pair is None:
        return DimensionBounds(upper=upper, n=n)

    log_c = math.log(pair.c)
    lower, _ = _root_bracket(
        lambda s: log_c + spectra[-1].partition_sum(s), T.d, f"log c + S_{n}"
    )
    lower = min(lower, upper)

    s0 = 0.5 * (lower + upper)
    p_hi, p_lo = _level_profiles(spectra, s0, log_c)
    root_lo, root_hi = pressure_bracket_root(s0, min(p_lo, p_hi), p_hi, lipschitz_bracket(T, s0, 1.0))
    # rounding in the level sums
    root_lo, root_hi = root_lo - BRACKET_SLACK, root_hi + BRACKET_SLACK
    tightened_upper = min(upper, max(root_hi, 0.0))
    tightened_lower = min(max(lower, root_lo), tightened_upper)
    logger.debug(
        f"dimension bounds n={n}: roots [{lower:.12g}, {upper:.12g}] "
        f"bracket [{root_lo:.12g}, {root_hi:.12g}]"
    )
    return DimensionBounds(
        upper=tightened_upper,
        n=n,
        upper_method=Method.SLOPE_BRACKET if tightened_upper < upper else Method.SUBADDITIVE_INF,
        lower=tightened_lower,
        lower_method=Method.SLOPE_BRACKET if tightened_lower > lower else Method.CONE_CERTIFIED,
        cone=pair,
    )


def joint_spectral_radius_bounds(
    T: LinearTuple,
    n_max: int,
    power: int = DEFAULT_POWER,
    limits: Limits = DEFAULT_LIMITS,
) -> Tuple[float, float]:
    """
    Two-sided bounds ``lo <= JSR <= hi``.

    ``hi = min_{n <= n_max} max_{|i| = n} ||A(i)||^(1/n)`` and
    ``lo = max_{|i| <= n_max} rho_lo(A(i))^(1/|i|)`` with ``rho_lo`` the trace bound
    of ``A(i)^power``. A single matrix also contributes the level ``power`` to
    ``hi``, since its only word of that length is ``A^power``.
    """
    n_max = _check_level(T, n_max, limits)
    power = _check_power(power)
    generators, log_scale = _normalised(T)

    log_hi = math.inf
    log_lo = -math.inf
    for n in range(1, n_max + 1):
        level_max = -math.inf
        for block in level_blocks(generators, n, limits.batch_leaves):
            level_max = max(level_max, float(np.max(_block_logsv(block)[:, 0])))
            block_lo, _ = log_spectral_radius_bounds_batch(block, power)
            log_lo = max(log_lo, float(np.max(block_lo)) / n)
        log_hi = min(log_hi, level_max / n)
    if T.m == 1:
        _, single_hi = log_spectral_radius_bounds_batch(generators, power)
        log_hi = min(log_hi, float(single_hi[0]))

    lo, hi = math.exp(log_lo + log_scale), math.exp(log_hi + log_scale)
    logger.debug(f"JSR in [{lo:.12g}, {hi:.12g}] from levels <= {n_max}")
    return min(lo, hi), hi


def zero_temperature_slope(
    T: LinearTuple, s: float, n_max: int, limits: Limits = DEFAULT_LIMITS
) -> float:
    if not s > 0.0:
        raise InputError(f"s = {s} must be positive")
    n_max = _check_level(T, n_max, limits)
    best = math.inf
    for k in range(1, n_max + 1):
        spectrum = level_spectrum(T, k, limits)
        best = min(best, spectrum.partition_sum(s, Potential.NORM) / k)
    return best / s
