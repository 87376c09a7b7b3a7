"""
Invariant cones for planar tuples and the certified pressure lower bounds they
give.

A planar cone is a projective interval: a closed arc of directions
``{theta mod pi}``. A tuple satisfies the cone condition with ``K_inner`` strictly
inside ``K`` when every generator maps ``K`` into ``K_inner`` (as directions, so
``K_inner`` and ``-K_inner`` are the same arc). Under that condition the
potentials c * phi^s are supermultiplicative along products and
``(log c + S_n) / n`` bounds the pressure from below.
"""

import logging
import math
import warnings
from concurrent.futures import Executor
from dataclasses import dataclass, replace
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import DEFAULT_LIMITS, Limits
from .exceptions import AffinityWarning, InputError, PreconditionError, UnsupportedDimensionError
from .linalg import as_matrix, singular_values_batch
from .methods import Method, Potential
from .pressure import (
    LinearTuple,
    PressureBounds,
    _bounds_from_sums,
    _check_level,
    _check_potential,
    _check_s,
    partition_sum,
)
from .types import Matrix

logger = logging.getLogger("affinity.cones")

PI = math.pi
GRID_POINTS = 256
OUTWARD_ROUNDING = 1e-12
_EPS = float(np.finfo(np.float64).eps)

Arc = Tuple[float, float]


def _mod_pi(theta: float) -> float:
    value = math.fmod(theta, PI)
    if value < 0.0:
        value += PI
    return 0.0 if value >= PI else value


@dataclass(frozen=True)
class ProjectiveInterval:
    """The arc of directions ``{theta mod pi : lo <= theta <= hi}``, ``0 < hi - lo < pi``."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        length = self.hi - self.lo
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not 0.0 < length < PI:
            raise InputError(f"interval [{self.lo}, {self.hi}] must have length in (0, pi)")
        if not 0.0 <= self.lo < PI:
            lo = _mod_pi(self.lo)
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", lo + length)

    @classmethod
    def from_start(cls, start: float, length: float) -> "ProjectiveInterval":
        lo = _mod_pi(start)
        return cls(lo, lo + length)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return _mod_pi(self.lo + 0.5 * self.length)

    def offset(self, theta: float) -> float:
        return _mod_pi(theta - self.lo)

    def contains(self, theta: float) -> bool:
        return self.offset(theta) <= self.length

    def widened(self, w: float) -> "ProjectiveInterval":
        return ProjectiveInterval.from_start(self.lo - w, self.length + 2.0 * w)

    def arc(self) -> Arc:
        return self.lo, self.length

    def boundary_vectors(self) -> Tuple[np.ndarray, np.ndarray]:
        return (
            np.array([math.cos(self.lo), math.sin(self.lo)]),
            np.array([math.cos(self.hi), math.sin(self.hi)]),
        )

    def __str__(self) -> str:
        return f"[{self.lo:.6g}, {self.hi:.6g}]"


@dataclass(frozen=True)
class ConePair:
    """Cones ``K_inner`` inside ``K`` with angular gap ``gap`` and constant ``c``.

    ``flagged`` is set when ``c`` had to be replaced by the grid oracle value.
    """

    K: ProjectiveInterval
    K_inner: ProjectiveInterval
    gap: float
    c: float
    flagged: bool = False


def induced_projective_map(A, theta: float) -> float:
    """Direction of ``A (cos theta, sin theta)``, reduced to ``[0, pi)``."""
    M = as_matrix(A)
    if M.shape != (2, 2):
        raise UnsupportedDimensionError("the projective line action needs 2 x 2 matrices")
    x = M[0, 0] * math.cos(theta) + M[0, 1] * math.sin(theta)
    y = M[1, 0] * math.cos(theta) + M[1, 1] * math.sin(theta)
    return _mod_pi(math.atan2(y, x))


def _angle_slack(A: Matrix) -> float:
    # forward error of the product, the cos/sin evaluation and atan2, in radians
    alpha_2 = float(singular_values_batch(A)[0, -1])
    return OUTWARD_ROUNDING + 16.0 * _EPS * (1.0 + float(np.abs(A).sum()) / alpha_2)


def _image_arc(A: Matrix, arc: Arc, rigorous: bool = True) -> Arc:
    start, length = arc
    a = induced_projective_map(A, start)
    b = induced_projective_map(A, start + length)
    if np.linalg.det(A) > 0.0:
        new_start, new_length = a, _mod_pi(b - a)
    else:
        new_start, new_length = b, _mod_pi(a - b)
    # the action on directions expands by at most alpha_1 / alpha_2
    sv = singular_values_batch(A)[0]
    expansion = length * sv[0] / sv[1]
    if new_length > expansion + 1e-9:
        # a tiny image wrapped around the circle through rounding
        new_start, new_length = new_start - expansion, 2.0 * expansion
    if rigorous:
        slack = _angle_slack(A)
        new_start, new_length = new_start - slack, new_length + 2.0 * slack
    return _mod_pi(new_start), min(new_length, PI)


def _arc_hull(arcs: Sequence[Arc]) -> Arc:
    """Smallest arc containing all ``arcs``; length ``pi`` when none fits."""
    best: Arc = (0.0, PI)
    for start, _ in arcs:
        needed = max(_mod_pi(a - start) + length for a, length in arcs)
        for a, length in arcs:
            # an arc straddling ``start`` cannot be covered from there
            if 0.0 < _mod_pi(start - a) < length:
                needed = PI
        if needed < best[1]:
            best = (start, needed)
    return best


def _point_hull(points: np.ndarray) -> Arc:
    theta = np.sort(np.mod(points, PI))
    gaps = np.diff(np.append(theta, theta[0] + PI))
    widest = int(np.argmax(gaps))
    start = theta[(widest + 1) % theta.size]
    return float(start), float(PI - gaps[widest])


def _arc_within(inner: Arc, outer: Arc) -> float:
    """Angular gap of ``inner`` inside ``outer``; negative when it sticks out."""
    offset = _mod_pi(inner[0] - outer[0])
    if offset > outer[1]:
        offset -= PI
    return min(offset, outer[1] - offset - inner[1])


def maps_into(A, K: ProjectiveInterval, K_inner: ProjectiveInterval) -> bool:
    """Rigorous check of ``A K`` inside ``K_inner`` (up to sign), with outward rounding."""
    M = as_matrix(A)
    if M.shape != (2, 2):
        raise UnsupportedDimensionError("cone membership is implemented for d = 2 only")
    return _arc_within(_image_arc(M, K.arc()), K_inner.arc()) >= 0.0


def verify_cone(T: LinearTuple, pair: ConePair) -> bool:
    if T.d != 2:
        raise UnsupportedDimensionError("cone conditions are implemented for d = 2 only")
    return all(maps_into(A, pair.K, pair.K_inner) for A in T.stack)


def _pair_gap(K: ProjectiveInterval, K_inner: ProjectiveInterval) -> float:
    return _arc_within(K_inner.arc(), K.arc())


def supermultiplicativity_constant(K: ProjectiveInterval, K_inner: ProjectiveInterval) -> float:
    """
    Constant ``c`` with ``||B1 B2|| >= c ||B1|| ||B2||`` for products of maps sending
    ``K`` into ``K_inner``.

    With ``beta = |K| <= pi/2`` and gap ``gamma``, every such B satisfies
    ``||B w|| >= sin(gamma) / (2 cos(beta/2)) ||B||`` for unit ``w`` in ``K_inner``
    and ``sup_{w in K} ||B w|| >= sin(beta/2) ||B||``; the product of the two is
    ``c = sin(gamma) tan(beta/2) / 2``. Because ``phi^s = ||.||^(2-s) |det|^(s-1)`` on
    ``[1, 2]`` and ``|det|^(s/2)`` above, the same c gives
    ``phi^s(B1 B2) >= c phi^s(B1) phi^s(B2)`` for every ``s >= 0``. K is shrunk
    around ``K_inner`` first when it is wider than pi/2.
    """
    gamma = _pair_gap(K, K_inner)
    if not gamma > 0.0:
        raise InputError(f"inner cone {K_inner} is not strictly inside {K}")
    if K.length > PI / 2:
        if K_inner.length >= PI / 2:
            raise InputError(f"inner cone {K_inner} is wider than pi/2")
        K = K_inner.widened(min(gamma, 0.5 * (PI / 2 - K_inner.length)))
        gamma = _pair_gap(K, K_inner)
    beta = K.length
    c = 0.5 * math.sin(gamma) * math.tan(0.5 * beta)
    return min(1.0, c * (1.0 - 1e-12))


def _unit(theta: np.ndarray) -> np.ndarray:
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def oracle_constant(
    K: ProjectiveInterval, K_inner: ProjectiveInterval, resolution: int = 16
) -> float:
    """
    Grid minimum of ``||B w|| / ||B||`` over maps sending K into ``K_inner``.

    Such a map is determined up to scale by the directions of its images of the
    boundary vectors of K and the ratio of their lengths; all four parameters
    (two image directions, the ratio, and the unit ``w`` in ``K_inner``) are
    gridded.
    """
    e_lo, e_hi = K.boundary_vectors()
    E_inv = np.linalg.inv(np.column_stack([e_lo, e_hi]))
    angles = K_inner.lo + np.linspace(0.0, K_inner.length, resolution)
    ratios = np.geomspace(1e-4, 1e4, 2 * resolution + 1)
    t1, t2, r = np.meshgrid(angles, angles, ratios, indexing="ij")
    images = np.stack([_unit(t1.ravel()), r.ravel()[:, None] * _unit(t2.ravel())], axis=-1)
    B = images @ E_inv
    norms = singular_values_batch(B)[:, 0]
    W = _unit(angles)
    Bw = np.linalg.norm(np.einsum("nab,wb->nwa", B, W), axis=-1)
    return float(np.min(Bw / norms[:, None]))


def _certify_constant(K: ProjectiveInterval, K_inner: ProjectiveInterval) -> Tuple[float, bool]:
    c = supermultiplicativity_constant(K, K_inner)
    oracle = oracle_constant(K, K_inner)
    if oracle < c:
        warnings.warn(
            f"cone constant {c:.6g} exceeds the grid oracle {oracle:.6g}; using the oracle",
            AffinityWarning,
        )
        return oracle * (1.0 - 1e-3), True
    return c, False


def _quadrant_arcs(T: LinearTuple, min_gap: float) -> List[Arc]:
    arcs = []
    for start in (0.0, PI / 2):
        quadrant = (start, PI / 2)
        images = [_image_arc(A, quadrant) for A in T.stack]
        if min(_arc_within(image, quadrant) for image in images) >= 4.0 * min_gap:
            arcs.append(quadrant)
    return arcs


def _eigen_arc(T: LinearTuple) -> Optional[Arc]:
    """Hull of the dominant eigendirections; None when one of them is not real."""
    directions = []
    for A in T.stack:
        values, vectors = np.linalg.eig(A)
        order = np.argsort(-np.abs(values))
        top, second = values[order[0]], values[order[1]]
        if abs(top.imag) > 0.0 or abs(top) <= abs(second) * (1.0 + 1e-9):
            return None
        v = vectors[:, order[0]].real
        directions.append(math.atan2(v[1], v[0]))
    return _point_hull(np.array(directions))


def _attracting_arc(T: LinearTuple, max_iter: int) -> Tuple[Optional[Arc], int]:
    points = (np.arange(GRID_POINTS) + 0.5) * PI / GRID_POINTS
    cos, sin = np.cos(points), np.sin(points)
    hull = _point_hull(points)
    for iteration in range(1, max_iter + 1):
        images = np.einsum("jab,bn->jan", T.stack, np.stack([cos, sin]))
        directions = np.sort(np.mod(np.arctan2(images[:, 1], images[:, 0]), PI).ravel())
        points = directions[:: T.m] if T.m > 1 else directions
        cos, sin = np.cos(points), np.sin(points)
        hull = _point_hull(points)
        if hull[1] < PI / 2:
            return hull, iteration
    logger.debug(f"sampled directions still span {hull[1]:.6g} rad after {max_iter} iterations")
    return None, max_iter


def _invariant_arc(T: LinearTuple, arc: Arc, max_iter: int) -> Optional[Arc]:
    for iteration in range(max_iter):
        grown = _arc_hull([arc] + [_image_arc(A, arc, rigorous=False) for A in T.stack])
        if grown[1] >= PI / 2:
            return None
        if grown[1] - arc[1] <= 1e-13:
            logger.debug(f"invariant arc stabilised after {iteration} steps: {grown}")
            return grown
        arc = grown
    return arc


def _candidate(K: ProjectiveInterval, image: Arc, room: float) -> ConePair:
    K_inner = ProjectiveInterval.from_start(image[0] - 0.5 * room, image[1] + room)
    gap = _pair_gap(K, K_inner)
    c = supermultiplicativity_constant(K, K_inner)
    logger.debug(f"candidate K={K} K'={K_inner} gap={gap:.6g} c={c:.6g}")
    return ConePair(K=K, K_inner=K_inner, gap=gap, c=c)


def _nested_candidates(
    T: LinearTuple, outer: Arc, min_gap: float, depth: int = 8
) -> Iterator[ConePair]:
    # images of a forward-invariant arc are nested, so K sits strictly between
    # ``outer`` and the hull of its images
    for _ in range(depth):
        image = _arc_hull([_image_arc(A, outer) for A in T.stack])
        room = _arc_within(image, outer)
        if room < 4.0 * min_gap:
            return
        K = ProjectiveInterval.from_start(image[0] - 0.5 * room, image[1] + room)
        yield _candidate(K, image, 0.5 * room)
        outer = image


def _widened_candidates(T: LinearTuple, core: Arc, min_gap: float) -> Iterator[ConePair]:
    widest = 0.5 * (PI / 2 - core[1])
    for step in range(24):
        w = widest * 0.5 ** step
        K = ProjectiveInterval.from_start(core[0] - w, core[1] + 2.0 * w)
        image = _arc_hull([_image_arc(A, K.arc()) for A in T.stack])
        room = _arc_within(image, K.arc())
        if room >= 2.0 * min_gap:
            yield _candidate(K, image, room)


def _search(T: LinearTuple, max_iter: int, min_gap: float) -> Iterator[Iterator[ConePair]]:
    for quadrant in _quadrant_arcs(T, min_gap):
        yield _nested_candidates(T, quadrant, min_gap)
    for seed in (_eigen_arc(T), _attracting_arc(T, max_iter)[0]):
        if seed is None:
            continue
        core = _invariant_arc(T, seed, max_iter)
        if core is not None:
            yield _widened_candidates(T, core, min_gap)


def find_invariant_cone(
    T: LinearTuple,
    max_iter: int = 200,
    min_gap: float = DEFAULT_LIMITS.min_gap,
) -> Optional[ConePair]:
    """
    Search for cones ``K_inner`` inside ``K`` with every ``A_i K`` inside ``K_inner``.

    Seeds are tried in turn: a coordinate quadrant the generators map strictly
    into itself (always the case for entrywise positive tuples), the hull of the
    dominant eigendirections, and a pushed-forward grid of directions. A
    quadrant yields K between it and the hull of its images; the other seeds
    are grown to an invariant arc which is then widened. The first seed with a
    verified candidate wins, taking its largest constant. Returns None when no
    seed certifies.
    """
    if T.d != 2:
        raise UnsupportedDimensionError("cone search is implemented for d = 2 only")
    for candidates in _search(T, max_iter, min_gap):
        found = [pair for pair in candidates if verify_cone(T, pair)]
        if found:
            best = max(found, key=lambda pair: pair.c)
            c, flagged = _certify_constant(best.K, best.K_inner)
            return replace(best, c=c, flagged=flagged)
    return None


def _log_constant(pair: ConePair, s: float, potential: str) -> float:
    if potential == Potential.NORM:
        return max(1.0, s) * math.log(pair.c)
    return math.log(pair.c)


def pressure_lower_cone(
    T: LinearTuple,
    s: float,
    n: int,
    pair: ConePair,
    potential: str = Potential.SVF,
    executor: Optional[Executor] = None,
    limits: Limits = DEFAULT_LIMITS,
) -> float:
    """
    Certified lower bound ``L_n = (log c + S_n) / n`` on P (or on M for NORM).

    For the NORM potential with ``s > 1`` the constant enters as ``c^s``.
    Raises `PreconditionError` when a generator fails the cone check.
    """
    s = _check_s(s)
    potential = _check_potential(potential)
    if not verify_cone(T, pair):
        raise PreconditionError("a generator does not map K into K_inner; the bound would be unsound")
    return (_log_constant(pair, s, potential) + partition_sum(T, s, n, potential, executor, limits)) / n


def pressure_bounds(
    T: LinearTuple,
    s: float,
    n: int,
    potential: str = Potential.SVF,
    cone: Union[str, ConePair, None] = "auto",
    executor: Optional[Executor] = None,
    limits: Limits = DEFAULT_LIMITS,
) -> PressureBounds:
    """
    Two-sided bounds at level n: upper ``min_{k <= n} S_k / k``; lower
    ``max_{k <= n} (log c + S_k) / k`` when a cone pair is given or found
    (``cone="auto"``). ``cone=None`` or ``"off"`` skips the lower side.
    """
    s = _check_s(s)
    potential = _check_potential(potential)
    n = _check_level(T, n, limits)
    sums: List[float] = [partition_sum(T, s, k, potential, executor, limits) for k in range(1, n + 1)]
    bounds = _bounds_from_sums(T, s, sums, potential)

    pair: Optional[ConePair] = None
    if isinstance(cone, ConePair):
        pair = cone
    elif cone == "auto":
        if T.d != 2:
            warnings.warn("cone lower bounds are available for d = 2 only", AffinityWarning)
        else:
            pair = find_invariant_cone(T, min_gap=limits.min_gap)
            if pair is None:
                warnings.warn("no invariant cone found; lower bound omitted", AffinityWarning)
    elif cone not in (None, "off"):
        raise InputError(f"cone must be 'auto', 'off' or a ConePair, got {cone!r}")
    if pair is None:
        return bounds

    if not verify_cone(T, pair):
        raise PreconditionError("a generator does not map K into K_inner; the bound would be unsound")
    log_c = _log_constant(pair, s, potential)
    lower = max((log_c + S) / k for k, S in enumerate(sums, start=1))
    return replace(bounds, lower=min(lower, bounds.upper), cone=pair, method=Method.CONE_CERTIFIED)
