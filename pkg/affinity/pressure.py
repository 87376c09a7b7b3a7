"""
Partition sums over matrix products and certified upper bounds for the SVF
pressure P(A, s) and the matrix pressure M(A, s).

Words are tuples of 0-based symbols ``(i_1, ..., i_n)`` and the product
attached to a word is ``A(i) = A_{i_n} ... A_{i_1}``: extending a word by a
symbol multiplies on the left. Words are always visited in lexicographic
order.
"""

import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Any, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from .config import DEFAULT_LIMITS, Limits
from .exceptions import InputError, NumericalError, ResourceError
from .linalg import (
    as_matrix,
    log_norm_batch,
    log_singular_values_batch,
    log_svf_batch,
    nondegenerate,
    singular_values_batch,
)
from .methods import Method, Potential, quantity_of
from .types import Matrix, MatrixStack, Word

logger = logging.getLogger("affinity.pressure")


@dataclass(frozen=True, eq=False)
class LinearTuple:
    """An immutable tuple ``(A_1, ..., A_m)`` of invertible d x d matrices."""

    matrices: Tuple[Matrix, ...]
    _stack: MatrixStack = field(init=False, repr=False)
    _singular: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        matrices = tuple(as_matrix(A) for A in self.matrices)
        if not matrices:
            raise InputError("a linear tuple needs at least one matrix")
        d = matrices[0].shape[0]
        if any(A.shape != (d, d) for A in matrices):
            raise InputError("all matrices of a tuple must share one dimension")
        stack = np.stack(matrices)
        stack.setflags(write=False)
        sv = singular_values_batch(stack)
        with np.errstate(divide="ignore"):
            bad = np.flatnonzero(~nondegenerate(np.log(sv)))
        if bad.size:
            raise InputError(f"matrix {int(bad[0])} of the tuple is numerically singular")
        object.__setattr__(self, "matrices", matrices)
        object.__setattr__(self, "_stack", stack)
        object.__setattr__(self, "_singular", sv)

    @classmethod
    def of(cls, matrices: Sequence[Any]) -> "LinearTuple":
        return cls(tuple(matrices))

    @property
    def d(self) -> int:
        return self._stack.shape[-1]

    @property
    def m(self) -> int:
        return self._stack.shape[0]

    @property
    def stack(self) -> MatrixStack:
        return self._stack

    @property
    def singular_values(self) -> np.ndarray:
        return self._singular

    def product(self, word: Word) -> Matrix:
        """``A(i) = A_{i_n} ... A_{i_1}`` for ``word = (i_1, ..., i_n)``."""
        P = np.eye(self.d)
        for symbol in word:
            if not 0 <= symbol < self.m:
                raise InputError(f"symbol {symbol} outside the alphabet of size {self.m}")
            P = self._stack[symbol] @ P
        return P

    def perturbed(self, directions: Sequence[Any], t: float) -> "LinearTuple":
        D = np.asarray(directions, dtype=np.float64)
        if D.shape != self._stack.shape:
            raise InputError(f"perturbation shape {D.shape} does not match {self._stack.shape}")
        return LinearTuple(tuple(self._stack + t * D))

    def __len__(self) -> int:
        return self.m

    def __repr__(self) -> str:
        return f"<LinearTuple m={self.m} d={self.d}>"


@dataclass(frozen=True)
class PressureBounds:
    """Certified sandwich around P(A, s) (quantity "P") or M(A, s) (quantity "M")."""

    s: float
    n: int
    upper: float
    quantity: str
    method: str
    alpha_star: float
    alpha_sup: float
    lower: Optional[float] = None
    cone: Optional[Any] = None
    attained_at: int = 1
    profile: Tuple[float, ...] = ()

    @property
    def gap(self) -> Optional[float]:
        if self.lower is None:
            return None
        return self.upper - self.lower


@dataclass(frozen=True, eq=False)
class LevelSpectrum:
    """Log singular values of all m^n products of the normalised generators.

    The generators are divided by ``exp(log_scale)`` (their largest norm) before
    multiplying, so ``log phi^s(A(i)) = n * s * log_scale + log_svf(logsv[i], s)``.
    """

    n: int
    log_scale: float
    logsv: np.ndarray

    def log_potentials(self, s: float, potential: str = Potential.SVF) -> np.ndarray:
        shift = self.n * s * self.log_scale
        if potential == Potential.SVF:
            return shift + log_svf_batch(self.logsv, s)
        return shift + log_norm_batch(self.logsv, s)

    def partition_sum(self, s: float, potential: str = Potential.SVF) -> float:
        return float(logsumexp(self.log_potentials(s, potential)))


def _check_potential(potential: str) -> str:
    if potential not in Potential.ALL:
        raise InputError(f"unknown potential '{potential}', expected one of {Potential.ALL}")
    return potential


def _check_level(T: LinearTuple, n: int, limits: Limits) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InputError(f"level n = {n} must be a positive integer")
    n = int(n)
    if n * math.log(T.m) > math.log(limits.leaf_cap) + 1e-12:
        raise ResourceError(f"{T.m}^{n} words exceed the leaf cap of {limits.leaf_cap}")
    return n


def _check_s(s: float) -> float:
    s = float(s)
    if not math.isfinite(s) or s < 0.0:
        raise InputError(f"s = {s} must be a finite non-negative number")
    return s


def _normalised(T: LinearTuple) -> Tuple[MatrixStack, float]:
    scale = float(T.singular_values[:, 0].max())
    return T.stack / scale, math.log(scale)


def _expand(P: MatrixStack, generators: MatrixStack, depth: int) -> MatrixStack:
    d = generators.shape[-1]
    for _ in range(depth):
        P = np.einsum("jab,wbc->wjac", generators, P).reshape(-1, d, d)
    return P


def _block_logsv(block: MatrixStack) -> np.ndarray:
    logsv = log_singular_values_batch(block)
    if not np.all(np.isfinite(logsv)):
        raise NumericalError("a matrix product is numerically singular")
    return logsv


def _leaf_log_potentials(logsv: np.ndarray, s: float, potential: str) -> np.ndarray:
    if potential == Potential.SVF:
        return log_svf_batch(logsv, s)
    return log_norm_batch(logsv, s)


def _subtree_sum(
    prefix: Matrix,
    generators: MatrixStack,
    depth: int,
    s: float,
    potential: str,
    log_shift: float,
    batch_leaves: int,
) -> float:
    m = generators.shape[0]
    if m ** depth <= batch_leaves:
        block = _expand(prefix[None, :, :], generators, depth)
        values = np.exp(_leaf_log_potentials(_block_logsv(block), s, potential) - log_shift)
        return float(np.sum(values))
    children = [
        _subtree_sum(A @ prefix, generators, depth - 1, s, potential, log_shift, batch_leaves)
        for A in generators
    ]
    return float(np.sum(np.array(children)))


def _subtree_task(args: Tuple) -> float:
    return _subtree_sum(*args)


def partition_sum(
    T: LinearTuple,
    s: float,
    n: int,
    potential: str = Potential.SVF,
    executor: Optional[Executor] = None,
    limits: Limits = DEFAULT_LIMITS,
) -> float:
    """
    ``S_n = log sum_{|i| = n} phi^s(A(i))`` (or ``||A(i)||^s`` for the NORM potential).

    The word tree is split at ``limits.prefix_depth`` into independent subtrees;
    each subtree reuses its prefix product and expands its bottom levels in
    vectorised blocks. Leaves are scaled by ``(max_i phi^s(A_i))^-n`` and summed
    pairwise in lexicographic order, so the result does not depend on whether
    an ``executor`` is given or how many workers it has.
    """
    s = _check_s(s)
    potential = _check_potential(potential)
    n = _check_level(T, n, limits)

    generators, log_scale = _normalised(T)
    log_k = float(np.max(_leaf_log_potentials(np.log(singular_values_batch(generators)), s, potential)))
    log_shift = n * log_k

    q = min(limits.prefix_depth, n)
    prefixes = _expand(np.eye(T.d)[None, :, :], generators, q)
    tasks = [
        (P, generators, n - q, s, potential, log_shift, limits.batch_leaves) for P in prefixes
    ]
    if executor is None:
        partials = [_subtree_task(task) for task in tasks]
    else:
        partials = list(executor.map(_subtree_task, tasks))
    total = float(np.sum(np.array(partials)))
    if not total > 0.0:
        raise NumericalError(f"every term of S_{n} underflowed at s = {s}")

    logger.debug(f"S_{n}(s={s}, {potential}) over {len(tasks)} subtrees: total={total}")
    return n * s * log_scale + log_shift + math.log(total)


def level_blocks(generators: MatrixStack, n: int, batch_leaves: int) -> Iterator[MatrixStack]:
    """All level-n products of ``generators`` in lexicographic blocks of bounded size."""
    m, d = generators.shape[0], generators.shape[-1]
    top = 0
    while top < n and m ** (n - top) > batch_leaves:
        top += 1
    for P in _expand(np.eye(d)[None, :, :], generators, top):
        yield _expand(P[None, :, :], generators, n - top)


def level_spectrum(T: LinearTuple, n: int, limits: Limits = DEFAULT_LIMITS) -> LevelSpectrum:
    """Log singular values of every level-n product, in lexicographic word order."""
    n = _check_level(T, n, limits)
    generators, log_scale = _normalised(T)
    blocks = [_block_logsv(block) for block in level_blocks(generators, n, limits.batch_leaves)]
    logsv = np.concatenate(blocks, axis=0)
    logsv.setflags(write=False)
    return LevelSpectrum(n=n, log_scale=log_scale, logsv=logsv)


def tuple_extremes(T: LinearTuple) -> Tuple[float, float]:
    sv = T.singular_values
    return float(sv[:, -1].min()), float(sv[:, 0].max())


def lipschitz_bracket(T: LinearTuple, s: float, ds: float) -> Tuple[float, float]:
    """
    Slopes ``(log alpha_*, log alpha^*)`` bracketing the growth of S_n in s.

    For every n: ``S_n(s) + n ds log alpha_* <= S_n(s + ds) <= S_n(s) + n ds log alpha^*``,
    so the same bracket holds for P and M.
    """
    _check_s(s)
    if not ds > 0.0:
        raise InputError(f"ds = {ds} must be positive")
    alpha_star, alpha_sup = tuple_extremes(T)
    return math.log(alpha_star), math.log(alpha_sup)


def _bounds_from_sums(
    T: LinearTuple, s: float, sums: List[float], potential: str
) -> PressureBounds:
    profile = tuple(S / k for k, S in enumerate(sums, start=1))
    best = int(np.argmin(profile))
    alpha_star, alpha_sup = tuple_extremes(T)
    return PressureBounds(
        s=s,
        n=len(sums),
        upper=profile[best],
        quantity=quantity_of(potential),
        method=Method.SUBADDITIVE_INF,
        alpha_star=alpha_star,
        alpha_sup=alpha_sup,
        attained_at=best + 1,
        profile=profile,
    )


def pressure_upper(
    T: LinearTuple,
    s: float,
    n_max: int,
    potential: str = Potential.SVF,
    executor: Optional[Executor] = None,
    limits: Limits = DEFAULT_LIMITS,
) -> PressureBounds:
    """Upper bound ``min_{n <= n_max} S_n / n``, valid by subadditivity of S_n."""
    s = _check_s(s)
    n_max = _check_level(T, n_max, limits)
    sums = [partition_sum(T, s, k, potential, executor, limits) for k in range(1, n_max + 1)]
    return _bounds_from_sums(T, s, sums, potential)


def pressure_curve(
    T: LinearTuple,
    s_values: Sequence[float],
    n_max: int,
    potential: str = Potential.SVF,
    limits: Limits = DEFAULT_LIMITS,
) -> List[PressureBounds]:
    potential = _check_potential(potential)
    n_max = _check_level(T, n_max, limits)
    spectra = [level_spectrum(T, k, limits) for k in range(1, n_max + 1)]
    curve = []
    for s in s_values:
        s = _check_s(s)
        sums = [spectrum.partition_sum(s, potential) for spectrum in spectra]
        curve.append(_bounds_from_sums(T, s, sums, potential))
    return curve
