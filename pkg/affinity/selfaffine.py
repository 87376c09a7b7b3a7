"""
Self-affine sets at desk scale: chaos-game sampling, the natural ellipsoid
covers, covering counts and Hausdorff content bounds, box-counting estimates,
raster and CSV output, and the random-translation experiment for planar
tuples.

Compositions follow the IFS convention: the word ``(i_1, ..., i_k)`` maps the
invariant ball B_R by ``f_{i_1} o ... o f_{i_k}``, whose linear part is
``A_{i_1} ... A_{i_k}``.
"""

import csv
import logging
import math
import os
import warnings
from dataclasses import dataclass
from typing import IO, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import linregress

from .config import DEFAULT_LIMITS, Limits
from .dimension import DimensionBounds, affinity_dimension_bounds
from .exceptions import AffinityWarning, InputError, ResourceError, UnsupportedDimensionError
from .linalg import log_svf_batch, singular_values_batch
from .pressure import LinearTuple, level_spectrum
from .types import Vector

logger = logging.getLogger("affinity.selfaffine")

MIN_RADIUS = 1e-12
FALCONER_NORM = 0.5
FALCONER_DELTAS = (2.0 ** -9, 2.0 ** -4)
_CELL_INDEX_CAP = 2.0 ** 62

PathOrFile = Union[str, os.PathLike, IO[str]]


@dataclass(frozen=True, eq=False)
class AffineIFS:
    """The iterated function system ``f_i(x) = A_i x + t_i`` of strict contractions."""

    linear: LinearTuple
    translations: np.ndarray

    def __post_init__(self) -> None:
        t = np.array(self.translations, dtype=np.float64)
        if t.shape != (self.linear.m, self.linear.d):
            raise InputError(
                f"expected {self.linear.m} translations in R^{self.linear.d}, got shape {t.shape}"
            )
        if not np.all(np.isfinite(t)):
            raise InputError("translations must be finite")
        norms = self.linear.singular_values[:, 0]
        if np.any(norms >= 1.0):
            i = int(np.argmax(norms))
            raise InputError(f"map {i} has norm {float(norms[i])} >= 1; maps must be strict contractions")
        t.setflags(write=False)
        object.__setattr__(self, "translations", t)

    @classmethod
    def of(cls, matrices: Sequence, translations: Optional[Sequence] = None) -> "AffineIFS":
        linear = LinearTuple.of(matrices)
        if translations is None:
            translations = np.zeros((linear.m, linear.d))
        return cls(linear, np.asarray(translations, dtype=np.float64))

    @property
    def d(self) -> int:
        return self.linear.d

    @property
    def m(self) -> int:
        return self.linear.m

    @property
    def contraction(self) -> float:
        return float(self.linear.singular_values[:, 0].max())

    @property
    def radius(self) -> float:
        """Radius of a ball about the origin mapped into itself by every ``f_i``."""
        largest = float(np.linalg.norm(self.translations, axis=1).max())
        return max(largest / (1.0 - self.contraction), MIN_RADIUS)

    def fixed_point(self, i: int) -> Vector:
        return np.linalg.solve(np.eye(self.d) - self.linear.stack[i], self.translations[i])


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    radius: float

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.points.min(axis=0), self.points.max(axis=0)


def chaos_game(
    ifs: AffineIFS,
    count: int,
    burn_in: Optional[int] = None,
    seed: int = 0,
    limits: Limits = DEFAULT_LIMITS,
) -> PointCloud:
    """
    Sample the attractor by random iteration ``x <- f_i(x)`` with uniform symbols.

    ``limits.chains`` chains start at the origin and run side by side; each
    drops its first ``burn_in`` iterates (default ``limits.burn_in``).
    """
    if count < 1:
        raise InputError(f"point count {count} must be positive")
    burn_in = limits.burn_in if burn_in is None else burn_in
    if burn_in < 0:
        raise InputError(f"burn-in {burn_in} must be non-negative")
    rng = np.random.default_rng(seed)
    chains = min(limits.chains, count)
    rounds = -(-count // chains)
    A, t = ifs.linear.stack, ifs.translations
    x = np.zeros((chains, ifs.d))
    out = np.empty((rounds, chains, ifs.d))
    for step in range(burn_in + rounds):
        idx = rng.integers(ifs.m, size=chains)
        x = np.einsum("cab,cb->ca", A[idx], x) + t[idx]
        if step >= burn_in:
            out[step - burn_in] = x
    points = out.reshape(-1, ifs.d)[:count]
    logger.debug(f"chaos game: {count} points from {chains} chains, burn-in {burn_in}")
    return PointCloud(points=points, radius=ifs.radius)


@dataclass(frozen=True, eq=False)
class EllipsoidCover:
    """Images of B_R under every composition of length ``level``, in lexicographic order.

    The element of word ``w`` is ``{center + shape @ u : |u| <= 1}`` and its parent
    at the previous level has index ``w // m``.
    """

    level: int
    m: int
    centers: np.ndarray
    shapes: np.ndarray

    def __len__(self) -> int:
        return self.centers.shape[0]

    def semi_axes(self) -> np.ndarray:
        return singular_values_batch(self.shapes)

    def parent(self, index: int) -> int:
        return index // self.m

    def support(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        return self.centers @ u + np.linalg.norm(np.einsum("nba,b->na", self.shapes, u), axis=1)

    def contains(self, points: np.ndarray, slack: float = 1e-9, chunk: int = 256) -> np.ndarray:
        """Mask of the points lying in at least one element (up to ``slack``)."""
        P = np.atleast_2d(np.asarray(points, dtype=np.float64))
        inverse = np.linalg.inv(self.shapes)
        inside = np.zeros(P.shape[0], dtype=bool)
        for start in range(0, P.shape[0], chunk):
            diff = P[start : start + chunk, None, :] - self.centers[None, :, :]
            z = np.einsum("nab,pnb->pna", inverse, diff)
            inside[start : start + chunk] = np.any(
                np.linalg.norm(z, axis=-1) <= 1.0 + slack, axis=1
            )
        return inside


def _check_cover_level(ifs: AffineIFS, k: int, limits: Limits) -> int:
    if isinstance(k, bool) or int(k) != k or k < 0:
        raise InputError(f"cover level k = {k} must be a non-negative integer")
    k = int(k)
    if k * math.log(ifs.m) > math.log(limits.leaf_cap) + 1e-12:
        raise ResourceError(f"{ifs.m}^{k} ellipsoids exceed the leaf cap of {limits.leaf_cap}")
    return k


def ellipsoid_cover(ifs: AffineIFS, k: int, limits: Limits = DEFAULT_LIMITS) -> EllipsoidCover:
    k = _check_cover_level(ifs, k, limits)
    d, m = ifs.d, ifs.m
    A, t = ifs.linear.stack, ifs.translations
    centers = np.zeros((1, d))
    linear = np.eye(d)[None, :, :]
    for _ in range(k):
        # f_w o f_j: center f_w(t_j), linear part L_w A_j
        centers = (centers[:, None, :] + np.einsum("wab,jb->wja", linear, t)).reshape(-1, d)
        linear = np.einsum("wab,jbc->wjac", linear, A).reshape(-1, d, d)
    return EllipsoidCover(level=k, m=m, centers=centers, shapes=ifs.radius * linear)


@dataclass(frozen=True)
class CoveringCount:
    ball_count: int
    direct_count: int
    content_bound: float
    constant: float
    k: int
    s: float


def content_constant(radius: float, d: int, s: float) -> float:
    return (4.0 * max(radius, 0.5)) ** d * d ** (0.5 * s)


def _check_content_exponent(s: float, d: int) -> float:
    s = float(s)
    if not (math.isfinite(s) and 0.0 <= s < d):
        raise InputError(f"covering exponent s = {s} must lie in [0, {d})")
    return s


def covering_count(
    ifs: AffineIFS, k: int, s: float, limits: Limits = DEFAULT_LIMITS
) -> CoveringCount:
    """
    Cube counts for the level-k ellipsoid cover and the Hausdorff content bound.

    Each ellipsoid with semi-axes ``R alpha_1 >= ... >= R alpha_d`` sits in a box
    covered by cubes of side ``alpha_q``, ``q = floor(s) + 1``. The formula count per
    word is ``prod_{j<q} (4R alpha_j / alpha_q) * (4R)^(d-q+1)``; ``direct_count``
    uses the exact ceilings ``prod_j ceil(2R alpha_j / alpha_q)``. Summing
    ``(sqrt(d) alpha_q)^s`` over the formula cubes gives
    ``content_bound = C_{R,d} sum_{|w|=k} phi^s(A_w)``.
    """
    s = _check_content_exponent(s, ifs.d)
    k = _check_cover_level(ifs, k, limits)
    cover = ellipsoid_cover(ifs, k, limits)
    d = ifs.d
    R = max(ifs.radius, 0.5)
    alpha = singular_values_batch(cover.shapes / ifs.radius)
    q = int(math.floor(s)) + 1
    side = alpha[:, q - 1 : q]
    formula = np.prod(4.0 * R * alpha[:, : q - 1] / side, axis=1) * (4.0 * R) ** (d - q + 1)
    direct = np.prod(np.ceil(2.0 * ifs.radius * alpha / side - 1e-12), axis=1)
    constant = content_constant(ifs.radius, d, s)
    content = constant * float(np.sum(np.exp(log_svf_batch(np.log(alpha), s))))
    return CoveringCount(
        ball_count=int(math.ceil(float(np.sum(formula)) * (1.0 - 1e-12))),
        direct_count=int(np.sum(direct)),
        content_bound=content,
        constant=constant,
        k=k,
        s=s,
    )


def content_decay(
    ifs: AffineIFS, s: float, k_max: int, limits: Limits = DEFAULT_LIMITS
) -> List[float]:
    """``log content_bound(k)`` for ``k = 1 .. k_max``; decays at rate P(s) when P(s) < 0."""
    s = _check_content_exponent(s, ifs.d)
    log_c = math.log(content_constant(ifs.radius, ifs.d, s))
    return [log_c + level_spectrum(ifs.linear, k, limits).partition_sum(s) for k in range(1, k_max + 1)]


@dataclass(frozen=True)
class BoxDimension:
    slope: float
    stderr: float
    deltas: np.ndarray
    counts: np.ndarray


def occupied_cells(points: np.ndarray, delta: float, anchor: np.ndarray) -> int:
    scaled = (points - anchor) / delta
    if scaled.size and not float(scaled.max()) < _CELL_INDEX_CAP:
        raise ResourceError(
            f"grid of side {delta:.3g} over extent {float((points - anchor).max()):.3g} "
            "has too many cells to index"
        )
    cells = np.floor(scaled).astype(np.int64)
    return int(np.unique(cells, axis=0).shape[0])


def box_dimension_estimate(
    cloud: PointCloud, delta_lo: float, delta_hi: float, levels: int = 12
) -> BoxDimension:
    """
    Least-squares slope of ``log N(delta)`` against ``log(1/delta)``.

    ``N(delta)`` counts the occupied cells of a delta-grid anchored at the lower
    corner of the bounding box, for ``levels`` geometrically spaced deltas.
    Warns when the finest grid is close to one point per cell.
    """
    if not (0.0 < delta_lo < delta_hi and math.isfinite(delta_hi)):
        raise InputError(f"need 0 < delta_lo < delta_hi, got [{delta_lo}, {delta_hi}]")
    if levels < 2:
        raise InputError(f"need at least 2 grid levels, got {levels}")
    if cloud.count < 1:
        raise InputError("empty point cloud")
    anchor = cloud.points.min(axis=0)
    deltas = np.geomspace(delta_lo, delta_hi, levels)
    counts = np.array([occupied_cells(cloud.points, delta, anchor) for delta in deltas])
    if counts[0] > cloud.count / 10:
        warnings.warn(
            f"{counts[0]} occupied cells at delta = {delta_lo:.3g} for {cloud.count} points; "
            "the finest grid is not saturated",
            AffinityWarning,
        )
    fit = linregress(np.log(1.0 / deltas), np.log(counts))
    return BoxDimension(float(fit.slope), float(fit.stderr), deltas, counts)


def occupancy_raster(cloud: PointCloud, grid: int) -> np.ndarray:
    """``grid x grid`` uint8 raster over the square bounding box, row 0 at the top."""
    if cloud.d != 2:
        raise UnsupportedDimensionError("rasters are drawn for planar clouds only")
    if grid < 1:
        raise InputError(f"grid size {grid} must be positive")
    lo, hi = cloud.bounding_box()
    side = float(np.max(hi - lo)) or 1.0
    cells = np.minimum(np.floor((cloud.points - lo) / side * grid).astype(np.int64), grid - 1)
    raster = np.zeros((grid, grid), dtype=np.uint8)
    raster[grid - 1 - cells[:, 1], cells[:, 0]] = 255
    return raster


def write_pgm(path: Union[str, os.PathLike], raster: np.ndarray) -> None:
    height, width = raster.shape
    with open(path, "wb") as handle:
        handle.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        handle.write(np.ascontiguousarray(raster, dtype=np.uint8).tobytes())


def _columns(d: int) -> List[str]:
    return ["x", "y"] if d == 2 else [f"x{j + 1}" for j in range(d)]


def write_csv(target: PathOrFile, cloud: PointCloud) -> None:
    if hasattr(target, "write"):
        _write_rows(target, cloud)
        return
    with open(target, "w", newline="") as handle:
        _write_rows(handle, cloud)


def _write_rows(handle: IO[str], cloud: PointCloud) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(_columns(cloud.d))
    writer.writerows([["%.17g" % value for value in row] for row in cloud.points])


def read_csv(path: Union[str, os.PathLike], radius: Optional[float] = None) -> PointCloud:
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise InputError(f"{path} is empty")
    try:
        points = np.array([[float(x) for x in row] for row in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"cannot parse {path}: {exc}") from exc
    points = points.reshape(-1, len(rows[0]))
    if radius is None:
        radius = float(np.linalg.norm(points, axis=1).max()) if len(points) else 0.0
    return PointCloud(points=points, radius=radius)


@dataclass(frozen=True)
class FalconerTrial:
    trial: int
    translations: np.ndarray
    estimate: float
    stderr: float


@dataclass(frozen=True)
class FalconerReport:
    trials: Tuple[FalconerTrial, ...]
    bounds: DimensionBounds
    median: float
    mad: float


def check_falconer(T: LinearTuple) -> None:
    if T.d != 2:
        raise UnsupportedDimensionError("the translation experiment is implemented for d = 2 only")
    norms = T.singular_values[:, 0]
    if np.any(norms >= FALCONER_NORM):
        raise InputError(
            f"Falconer's theorem needs ||A_i|| < 1/2 for every map; largest norm is {float(norms.max())}"
        )


def iter_falconer(
    T: LinearTuple,
    trials: int,
    points: int,
    seed: int,
    limits: Limits = DEFAULT_LIMITS,
) -> Iterator[FalconerTrial]:
    """Trials in order; trial ``j`` uses ``default_rng(seed + j)`` for translations and sampling."""
    check_falconer(T)
    for trial in range(trials):
        rng = np.random.default_rng(seed + trial)
        translations = rng.uniform(0.0, 1.0, size=(T.m, T.d))
        ifs = AffineIFS(T, translations)
        cloud = chaos_game(ifs, points, seed=int(rng.integers(2 ** 63)), limits=limits)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AffinityWarning)
            box = box_dimension_estimate(cloud, *FALCONER_DELTAS)
        yield FalconerTrial(trial=trial, translations=translations, estimate=box.slope, stderr=box.stderr)


def summarise_falconer(rows: Sequence[FalconerTrial], reference: float) -> Tuple[float, float]:
    estimates = np.array([row.estimate for row in rows])
    return float(np.median(estimates)), float(np.median(np.abs(estimates - reference)))


def falconer_experiment(
    T: LinearTuple,
    trials: int,
    points: int,
    seed: int,
    n: int = 8,
    limits: Limits = DEFAULT_LIMITS,
) -> FalconerReport:
    """
    Box-counting estimates for attractors with uniform random translations in
    ``[0, 1]^(2m)``, next to the affinity dimension bounds of T.

    Raises `InputError` unless every ``||A_i|| < 1/2``.
    """
    check_falconer(T)
    if trials < 1:
        raise InputError(f"trial count {trials} must be positive")
    bounds = affinity_dimension_bounds(T, n, use_cone=False, limits=limits)
    rows = tuple(iter_falconer(T, trials, points, seed, limits))
    median, mad = summarise_falconer(rows, bounds.upper)
    logger.info(
        f"translation experiment: median box estimate {median:.4f}, "
        f"MAD {mad:.4f} from the affinity bound {bounds.upper:.4f}"
    )
    return FalconerReport(trials=rows, bounds=bounds, median=median, mad=mad)
