"""Dense real linear-algebra primitives shared by the certificates and solvers.

Matrices and vectors are plain float64 numpy arrays. The helpers here only
validate and dispatch; the elimination loops live in :mod:`gavecert._kernels`.
"""

from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import NoConvergence, SingularMatrix

EPS = _kernels.EPS


class DetSign(NamedTuple):
    """Sign of a determinant (-1, 0 or +1) and ``log|det|``.

    ``log_magnitude`` is ``-inf`` whenever ``sign == 0``.
    """

    sign: int
    log_magnitude: float


def as_matrix(m, square=True, name="matrix"):
    arr = np.array(m, dtype=np.float64, copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return np.ascontiguousarray(arr)


def as_vector(v, name="vector"):
    arr = np.array(v, dtype=np.float64, copy=True).reshape(-1)
    if arr.size < 1:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def rank_tolerance(m):
    """Magnitude under which a pivot of ``m`` counts as zero."""
    m = np.asarray(m)
    return m.shape[0] * EPS * float(np.abs(m).max())


def lu_factor(m):
    """Partially pivoted LU of a square matrix.

    Returns ``(lu, perm)`` with unit-lower and upper factors packed in ``lu``.
    Raises :class:`SingularMatrix` when a pivot falls below
    :func:`rank_tolerance`.
    """
    m = as_matrix(m)
    lu, perm, parity = _kernels.lu_factor_kernel(m)
    if parity == 0:
        raise SingularMatrix("pivot below rank tolerance")
    return lu, perm


def lu_solve(m, rhs):
    """Solve ``m @ x = rhs`` by row-pivoted elimination.

    ``rhs`` may be a vector or a 2-D array whose columns are solved one by one
    against the same factorisation.
    """
    lu, perm = lu_factor(m)
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape[0] != lu.shape[0]:
        raise ValueError(f"rhs length {rhs.shape[0]} does not match matrix order {lu.shape[0]}")
    if rhs.ndim == 1:
        return _kernels.lu_substitute_kernel(lu, perm, np.ascontiguousarray(rhs))
    cols = [_kernels.lu_substitute_kernel(lu, perm, np.ascontiguousarray(rhs[:, j]))
            for j in range(rhs.shape[1])]
    return np.column_stack(cols)


def det_sign(m):
    m = as_matrix(m)
    sign, logmag = _kernels.det_sign_kernel(m)
    return DetSign(int(sign), float(logmag))


def singular_values(m):
    """Singular values in non-increasing order (LAPACK ``gesdd``)."""
    m = as_matrix(m)
    try:
        return np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"SVD did not converge: {exc}") from exc


def spectral_radius_nonneg(m, rtol=1e-12, max_iter=20000):
    """Perron root of an entrywise nonnegative matrix by power iteration.

    Iterates on ``m + I`` (same Perron vector, no periodicity) from the all-ones
    vector and stops when successive Rayleigh quotients agree to ``rtol``.
    """
    m = as_matrix(m)
    if np.any(m < 0):
        raise ValueError("matrix must be entrywise nonnegative")
    x = np.ones(m.shape[0]) / np.sqrt(m.shape[0])
    prev = None
    for _ in range(max_iter):
        mx = m @ x
        est = float(x @ mx)
        if prev is not None and abs(est - prev) <= rtol * abs(est):
            return est
        prev = est
        y = mx + x
        x = y / np.linalg.norm(y)
    raise NoConvergence(f"power iteration did not settle in {max_iter} steps")


def spectral_radius_general(m):
    """Largest eigenvalue modulus, via LAPACK Hessenberg QR."""
    m = as_matrix(m)
    try:
        return float(np.abs(np.linalg.eigvals(m)).max())
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"eigenvalue iteration did not converge: {exc}") from exc


def gelfand_spectral_radius(m, tol=1e-6, max_doublings=10):
    """Spectral radius from ``||m^k||_2`` by repeated squaring.

    The estimate at ``k`` is ``(||m^(2k)|| / ||m^k||)^(1/k)``, which cancels
    the constant in ``||m^k|| ~ C rho^k``. Iterates are renormalised after every
    squaring. Converged when estimates at ``k`` and ``2k`` differ by at most
    ``tol``; raises :class:`NoConvergence` if that never happens up to
    ``k = 2**max_doublings``. A dominant complex pair makes the norm oscillate
    and typically ends in :class:`NoConvergence`.
    """
    m = as_matrix(m)
    norm = np.linalg.norm(m, 2)
    if norm == 0.0:
        return 0.0
    p = m / norm
    log_pk = np.log(norm)  # log ||m^k||, k = 1
    k = 1
    prev = None
    for _ in range(max_doublings):
        q = p @ p
        qn = np.linalg.norm(q, 2)
        if qn == 0.0:
            return 0.0
        est = float(np.exp((log_pk + np.log(qn)) / k))
        if prev is not None and abs(est - prev) <= tol:
            return est
        prev = est
        p = q / qn
        log_pk = 2.0 * log_pk + np.log(qn)
        k *= 2
    raise NoConvergence(f"Gelfand estimates still moving at k = {k}")
