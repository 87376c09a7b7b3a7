"""
Bernoulli measures on the full shift: entropy, Monte Carlo Lyapunov exponents
for planar tuples, the energy of the SVF potential and the (non-certified)
variational lower bound on the pressure.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np
from scipy.special import entr

from .exceptions import InputError, UnsupportedDimensionError
from .methods import Method, Splitting
from .pressure import LinearTuple

logger = logging.getLogger("affinity.measures")

MIN_STEPS = 1000
MIN_REPS = 8
DISTINCT_SIGMAS = 5.0
EQUAL_SIGMAS = 2.0
SPREAD_THRESHOLD = 0.1
_ROUNDING = 1e-12


@dataclass(frozen=True, eq=False)
class BernoulliWeights:
    p: Tuple[float, ...]

    def __post_init__(self) -> None:
        p = tuple(float(x) for x in self.p)
        if not p:
            raise InputError("weights need at least one symbol")
        if any(not (math.isfinite(x) and x > 0.0) for x in p):
            raise InputError(f"weights must be positive, got {p}")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise InputError(f"weights sum to {math.fsum(p)}, not 1")
        object.__setattr__(self, "p", p)

    @classmethod
    def uniform(cls, m: int) -> "BernoulliWeights":
        return cls(tuple([1.0 / m] * m))

    @property
    def m(self) -> int:
        return len(self.p)

    def array(self) -> np.ndarray:
        return np.array(self.p)


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    certified: bool = False
    method: Optional[str] = None


@dataclass(frozen=True)
class BernoulliAnalysis:
    """Monte Carlo summary of the random product driven by Bernoulli weights.

    ``directions`` holds ``(bin_edges, forward_counts, backward_counts)``: histograms
    on ``[0, pi)`` of the normalised forward vector (expanding side) and of the
    inverse-transpose iterate (contracting side), sampled over the second half of
    each path. Diagnostic only.
    """

    weights: BernoulliWeights
    h: float
    lambda1: float
    lambda2: float
    stderr1: float
    stderr2: float
    splitting: str
    direction_spread: float
    steps: int
    reps: int
    seed: int
    energy: Optional[float] = None
    energy_stderr: Optional[float] = None
    directions: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None


def _as_weights(p, m: Optional[int] = None) -> BernoulliWeights:
    weights = p if isinstance(p, BernoulliWeights) else BernoulliWeights(tuple(p))
    if m is not None and weights.m != m:
        raise InputError(f"{weights.m} weights for an alphabet of {m} symbols")
    return weights


def entropy(p) -> float:
    return float(np.sum(entr(_as_weights(p).array())))


def log_det_mean(T: LinearTuple, p) -> float:
    """``sum_i p_i log |det A_i|``: the sum of the Lyapunov exponents."""
    weights = _as_weights(p, T.m)
    logdet = np.log(np.abs(np.linalg.det(T.stack)))
    return float(np.dot(weights.array(), logdet))


def _axial_spread(theta: np.ndarray) -> np.ndarray:
    # circular variance of lines: directions are doubled before averaging
    return 1.0 - np.abs(np.mean(np.exp(2j * theta), axis=-1))


def lyapunov_mc(
    T: LinearTuple,
    p,
    steps: int,
    reps: int,
    seed: int,
    probes: int = 4,
    bins: int = 32,
) -> BernoulliAnalysis:
    """
    Estimate the Lyapunov exponents of ``B_{i_n} ... B_{i_1}`` for i.i.d. symbols.

    Every replica draws its own symbol path from ``default_rng(seed + rep)`` and
    pushes ``probes`` random unit vectors along it, prepending one matrix per
    step and renormalising. ``lambda1`` uses the control variate
    ``log ||B v|| - log|det B| / 2`` whose mean is known exactly, and
    ``lambda2 = sum p_i log|det A_i| - lambda1``. The splitting is Distinct when the
    gap exceeds five standard errors and the probes have collapsed onto one
    direction (axial circular variance below 0.1), Equal when the gap is within
    two standard errors, Undetermined otherwise.
    """
    if T.d != 2:
        raise UnsupportedDimensionError("Lyapunov estimation is implemented for d = 2 only")
    weights = _as_weights(p, T.m)
    if steps < MIN_STEPS or reps < MIN_REPS:
        raise InputError(f"need steps >= {MIN_STEPS} and reps >= {MIN_REPS}, got {steps}, {reps}")

    A = T.stack
    A_inv_t = np.linalg.inv(A).transpose(0, 2, 1)
    half_logdet = 0.5 * np.log(np.abs(np.linalg.det(A)))
    rngs = [np.random.default_rng(seed + rep) for rep in range(reps)]
    symbols = np.stack([rng.choice(T.m, size=steps, p=weights.array()) for rng in rngs])
    V = np.stack([rng.normal(size=(probes, 2)) for rng in rngs])
    V /= np.linalg.norm(V, axis=-1, keepdims=True)
    U = V[:, 0, :].copy()

    growth = np.zeros(reps)
    every = max(1, steps // 256)
    forward, backward = [], []
    for k in range(steps):
        sym = symbols[:, k]
        V = np.einsum("rab,rpb->rpa", A[sym], V)
        norms = np.linalg.norm(V, axis=-1)
        growth += np.log(norms[:, 0]) - half_logdet[sym]
        V /= norms[..., None]
        U = np.einsum("rab,rb->ra", A_inv_t[sym], U)
        U /= np.linalg.norm(U, axis=-1, keepdims=True)
        if 2 * k >= steps and k % every == 0:
            forward.append(np.arctan2(V[:, 0, 1], V[:, 0, 0]))
            backward.append(np.arctan2(U[:, 1], U[:, 0]))

    D = log_det_mean(T, weights)
    per_rep = growth / steps + 0.5 * D
    lambda1 = float(np.mean(per_rep))
    stderr1 = float(np.std(per_rep, ddof=1) / math.sqrt(reps))
    lambda2 = D - lambda1
    stderr2 = stderr1

    final = np.mod(np.arctan2(V[..., 1], V[..., 0]), np.pi)
    spread = float(np.mean(_axial_spread(final)))
    gap = lambda1 - lambda2
    sigma = stderr1 + stderr2
    if abs(gap) <= EQUAL_SIGMAS * sigma + _ROUNDING:
        splitting = Splitting.EQUAL
    elif gap > DISTINCT_SIGMAS * sigma + _ROUNDING and spread < SPREAD_THRESHOLD:
        splitting = Splitting.DISTINCT
    else:
        splitting = Splitting.UNDETERMINED

    edges = np.linspace(0.0, np.pi, bins + 1)
    fwd_counts, _ = np.histogram(np.mod(np.concatenate(forward), np.pi), bins=edges)
    bwd_counts, _ = np.histogram(np.mod(np.concatenate(backward), np.pi), bins=edges)

    logger.debug(
        f"lyapunov: lambda1={lambda1:.6g}+-{stderr1:.2g} lambda2={lambda2:.6g} "
        f"spread={spread:.3g} -> {splitting}"
    )
    return BernoulliAnalysis(
        weights=weights,
        h=entropy(weights),
        lambda1=lambda1,
        lambda2=lambda2,
        stderr1=stderr1,
        stderr2=stderr2,
        splitting=splitting,
        direction_spread=spread,
        steps=steps,
        reps=reps,
        seed=seed,
        directions=(edges, fwd_counts, bwd_counts),
    )


def energy_estimate(T: LinearTuple, p, s: float, analysis: BernoulliAnalysis) -> Estimate:
    """
    Energy of the SVF potential under the Bernoulli measure.

    ``s lambda1`` for ``s <= 1``, ``lambda1 + (s-1) lambda2`` on ``[1, 2]`` and the exact
    ``(s/2) sum p_i log|det A_i|`` for ``s >= 2``.
    """
    if not (math.isfinite(s) and s >= 0.0):
        raise InputError(f"s = {s} must be a finite non-negative number")
    if s >= 2.0:
        return Estimate(0.5 * s * log_det_mean(T, p), 0.0)
    if s <= 1.0:
        return Estimate(s * analysis.lambda1, s * analysis.stderr1)
    # lambda1 + (s-1) lambda2 = (2-s) lambda1 + (s-1) D
    return Estimate(
        analysis.lambda1 + (s - 1.0) * analysis.lambda2,
        (2.0 - s) * analysis.stderr1,
    )


def variational_lower(
    T: LinearTuple,
    p,
    s: float,
    steps: int = 10 ** 4,
    reps: int = 16,
    seed: int = 0,
    analysis: Optional[BernoulliAnalysis] = None,
) -> Estimate:
    """
    ``h(p) + E - 3 stderr``: a Monte Carlo lower bound on P(T, s), not certified.

    Bernoulli measures are ergodic, so ``h + E`` never exceeds the pressure; the
    three standard errors account for the sampling error of E only.
    """
    weights = _as_weights(p, T.m)
    if analysis is None:
        analysis = lyapunov_mc(T, weights, steps, reps, seed)
    energy = energy_estimate(T, weights, s, analysis)
    return Estimate(
        entropy(weights) + energy.value - 3.0 * energy.stderr,
        energy.stderr,
        method=Method.VARIATIONAL_MC,
    )


def simplex_grid(m: int, resolution: int) -> Iterator[Tuple[float, ...]]:
    for head in itertools.product(range(1, resolution), repeat=m - 1):
        last = resolution - sum(head)
        if last >= 1:
            yield tuple(k / resolution for k in head + (last,))


def optimize_weights(
    T: LinearTuple,
    s: float,
    resolution: int = 10,
    steps: int = 10 ** 4,
    reps: int = 8,
    seed: int = 0,
    candidates: Optional[Sequence[Sequence[float]]] = None,
) -> Tuple[BernoulliWeights, Estimate]:
    """Grid search over Bernoulli weights for the largest variational lower bound."""
    if T.m == 1:
        weights = BernoulliWeights((1.0,))
        return weights, variational_lower(T, weights, s, steps, reps, seed)
    grid = candidates if candidates is not None else list(simplex_grid(T.m, resolution))
    best: Optional[Tuple[BernoulliWeights, Estimate]] = None
    for p in grid:
        weights = BernoulliWeights(tuple(p))
        estimate = variational_lower(T, weights, s, steps, reps, seed)
        if best is None or estimate.value > best[1].value:
            best = (weights, estimate)
    if best is None:
        raise InputError(f"resolution {resolution} leaves no interior weights for m = {T.m}")
    logger.debug(f"best Bernoulli weights {best[0].p} -> {best[1].value:.6g}")
    return best
