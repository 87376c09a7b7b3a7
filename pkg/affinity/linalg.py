"""
Small dense matrix primitives: singular values, the singular value function,
exterior norms and spectral radius bounds.

Every logarithm in this package is natural (base e). Single matrices go
through the scalar helpers; the pressure engine works on stacks of shape
``(N, d, d)`` through the ``*_batch`` variants.
"""

import logging
import math
from typing import Tuple

import numpy as np

from .config import DEFAULT_LIMITS
from .exceptions import InputError, NumericalError
from .types import Matrix, MatrixStack

logger = logging.getLogger("affinity.linalg")

MAX_DIMENSION = 8
INVERTIBILITY_TOLERANCE = 1e-14
JACOBI_TOLERANCE = 1e-14
CONFORMAL_TOLERANCE = 1e-12
_UNDERFLOW_SIZE = math.sqrt(np.finfo(np.float64).tiny / np.finfo(np.float64).eps)


def as_matrix(A) -> Matrix:
    """Validate ``A`` and return it as a read-only float64 square array."""
    try:
        M = np.array(A, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InputError(f"cannot read matrix: {exc}") from exc
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise InputError(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] > MAX_DIMENSION:
        raise InputError(f"dimension {M.shape[0]} exceeds the supported {MAX_DIMENSION}")
    if not np.all(np.isfinite(M)):
        raise InputError("matrix has non-finite entries")
    M.setflags(write=False)
    return M


def as_stack(M) -> MatrixStack:
    S = np.asarray(M, dtype=np.float64)
    if S.ndim == 2:
        S = S[None, :, :]
    if S.ndim != 3 or S.shape[1] != S.shape[2]:
        raise InputError(f"expected a stack of square matrices, got shape {S.shape}")
    return S


def _singular_values_2x2(M: MatrixStack) -> np.ndarray:
    a, b = M[:, 0, 0], M[:, 0, 1]
    c, d = M[:, 1, 0], M[:, 1, 1]
    # sigma_1 +/- sigma_2 = hypot(a + d, b - c), hypot(a - d, b + c)
    top = 0.5 * (np.hypot(a + d, b - c) + np.hypot(a - d, b + c))
    det = np.abs(a * d - b * c)
    with np.errstate(invalid="ignore", divide="ignore"):
        bottom = np.where(top > 0.0, det / np.where(top > 0.0, top, 1.0), 0.0)
    return np.stack([top, np.minimum(bottom, top)], axis=-1)


def _singular_values_jacobi(M: MatrixStack, max_sweeps: int) -> np.ndarray:
    # One-sided (Hestenes) Jacobi: rotating column pairs of A diagonalises A^T A
    # without forming it, so small singular values keep their relative accuracy.
    U = np.array(M, dtype=np.float64, copy=True)
    d = U.shape[-1]
    for sweep in range(max_sweeps):
        rotated = False
        for p in range(d - 1):
            for q in range(p + 1, d):
                up = U[:, :, p].copy()
                uq = U[:, :, q].copy()
                alpha = np.einsum("ij,ij->i", up, up)
                beta = np.einsum("ij,ij->i", uq, uq)
                gamma = np.einsum("ij,ij->i", up, uq)
                active = np.abs(gamma) > JACOBI_TOLERANCE * np.sqrt(alpha * beta)
                if not np.any(active):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * np.where(active, gamma, 1.0))
                sign = np.where(zeta >= 0.0, 1.0, -1.0)
                t = np.where(active, sign / (np.abs(zeta) + np.hypot(1.0, zeta)), 0.0)
                cs = 1.0 / np.hypot(1.0, t)
                sn = cs * t
                U[:, :, p] = cs[:, None] * up - sn[:, None] * uq
                U[:, :, q] = sn[:, None] * up + cs[:, None] * uq
        if not rotated:
            break
    else:
        logger.debug(f"jacobi stopped after {max_sweeps} sweeps without full convergence")
    sv = np.linalg.norm(U, axis=1)
    return -np.sort(-sv, axis=1)


def singular_values_batch(M, max_sweeps: int = DEFAULT_LIMITS.max_sweeps) -> np.ndarray:
    """Descending singular values of every matrix in a stack, shape ``(N, d)``."""
    S = as_stack(M)
    d = S.shape[-1]
    if d == 1:
        return np.abs(S[:, :, 0])
    if d == 2:
        return _singular_values_2x2(S)
    return _singular_values_jacobi(S, max_sweeps)


def log_singular_values_batch(M, max_sweeps: int = DEFAULT_LIMITS.max_sweeps) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(singular_values_batch(M, max_sweeps))


def log_svf_batch(logsv: np.ndarray, s: float) -> np.ndarray:
    """log phi^s from a table of descending log singular values (last axis)."""
    d = logsv.shape[-1]
    if s >= d:
        return (s / d) * logsv.sum(axis=-1)
    k = int(math.floor(s))
    frac = s - k
    out = logsv[..., :k].sum(axis=-1)
    if frac > 0.0:
        out = out + frac * logsv[..., k]
    return out


def log_norm_batch(logsv: np.ndarray, s: float) -> np.ndarray:
    if s == 0.0:
        return np.zeros(logsv.shape[:-1])
    return s * logsv[..., 0]


def nondegenerate(logsv: np.ndarray) -> np.ndarray:
    """Mask of rows with ``|det| > 1e-14 * alpha_1^d`` (relative nondegeneracy)."""
    d = logsv.shape[-1]
    with np.errstate(invalid="ignore"):
        ok = logsv.sum(axis=-1) > math.log(INVERTIBILITY_TOLERANCE) + d * logsv[..., 0]
    return ok & np.all(np.isfinite(logsv), axis=-1)


def _checked_singular_values(A) -> np.ndarray:
    sv = singular_values_batch(as_matrix(A))
    if not nondegenerate(_safe_log(sv))[0]:
        raise InputError("matrix is numerically singular")
    return sv[0]


def _safe_log(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(values)


def singular_values(A) -> np.ndarray:
    """
    Singular values of ``A`` in descending order.

    Arguments
    ---------
    A : array_like
        Square real matrix, 1 <= d <= 8.

    Returns
    -------
    numpy.ndarray
        ``alpha_1 >= ... >= alpha_d >= 0``; ``alpha_1`` is the operator norm and
        ``alpha_d = 1 / ||A^-1||`` when ``A`` is invertible.
    """
    return singular_values_batch(as_matrix(A))[0]


def svf(A, s: float) -> float:
    """
    Singular value function phi^s(A).

    ``alpha_1 ... alpha_k * alpha_{k+1}^(s-k)`` with ``k = floor(s)`` for ``s < d``
    and ``|det A|^(s/d)`` for ``s >= d``. Raises `InputError` for singular ``A``.
    """
    s = _check_exponent(s)
    sv = _checked_singular_values(A)
    return float(np.exp(log_svf_batch(np.log(sv)[None, :], s)[0]))


def exterior_norm(A, k: int) -> float:
    M = as_matrix(A)
    d = M.shape[0]
    if isinstance(k, bool) or int(k) != k or not 1 <= k <= d:
        raise InputError(f"exterior power {k} outside [1, {d}]")
    sv = singular_values_batch(M)[0]
    return float(np.prod(sv[: int(k)]))


def operator_norm(A) -> float:
    return float(singular_values(A)[0])


def is_conformal(A, tolerance: float = CONFORMAL_TOLERANCE) -> bool:
    """True when ``A`` is a scalar multiple of an orthogonal matrix."""
    sv = singular_values(A)
    return bool(sv[0] - sv[-1] <= tolerance * sv[0])


def _check_power(k: int) -> int:
    if isinstance(k, bool) or int(k) != k or k < 1 or (int(k) & (int(k) - 1)):
        raise InputError(f"power {k} must be a positive power of two")
    return int(k)


def _check_exponent(s: float) -> float:
    s = float(s)
    if not math.isfinite(s) or s < 0.0:
        raise InputError(f"exponent s = {s} must be a finite non-negative number")
    return s


def log_spectral_radius_bounds_batch(M, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Log-domain spectral radius bounds for a stack of matrices.

    Computes ``A^k`` by repeated squaring, renormalising after every step so
    nothing overflows, and returns ``(log lo, log hi)`` with
    ``lo = (|tr A^k| / d)^(1/k)`` and ``hi = ||A^k||^(1/k)``.
    """
    k = _check_power(k)
    P = np.array(as_stack(M), dtype=np.float64, copy=True)
    d = P.shape[-1]
    log_scale = np.zeros(P.shape[0])
    for step in range(k.bit_length()):
        if step:
            P = P @ P
            log_scale *= 2.0
        size = np.max(np.abs(P), axis=(1, 2))
        size = np.where(size > 0.0, size, 1.0)
        P = P / size[:, None, None]
        log_scale += np.log(size)
    trace = np.abs(np.trace(P, axis1=1, axis2=2))
    with np.errstate(divide="ignore"):
        log_lo = (np.log(trace) - math.log(d) + log_scale) / k
        log_hi = (np.log(singular_values_batch(P)[:, 0]) + log_scale) / k
    return log_lo, log_hi


def spectral_radius_bounds(A, k: int, scaled: bool = False) -> Tuple[float, float]:
    """
    Two-sided bounds ``lo <= rho(A) <= hi`` from the k-th power, k a power of two.

    With ``scaled=False`` the power is formed directly and overflow raises
    `NumericalError`; callers retry with ``scaled=True`` (log-domain squaring).
    Powers heading for underflow switch to the scaled path on their own.
    """
    M = as_matrix(A)
    k = _check_power(k)
    if scaled:
        log_lo, log_hi = log_spectral_radius_bounds_batch(M, k)
        return float(np.exp(log_lo[0])), float(np.exp(log_hi[0]))

    P = np.array(M, copy=True)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(k.bit_length() - 1):
            size = float(np.max(np.abs(P)))
            if 0.0 < size < _UNDERFLOW_SIZE:
                # squaring would flush entries to subnormals or zero
                return spectral_radius_bounds(M, k, scaled=True)
            P = P @ P
    if not np.all(np.isfinite(P)):
        raise NumericalError(f"overflow forming A^{k}; retry with log-domain scaling")
    d = M.shape[0]
    hi = float(singular_values_batch(P)[0, 0]) ** (1.0 / k)
    lo = (abs(float(np.trace(P))) / d) ** (1.0 / k)
    return lo, hi
