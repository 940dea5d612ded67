"""Hot dense kernels: pivoted LU, determinant signs and the 2**n sweeps.

Every kernel exists twice: a scalar-loop version compiled by numba (suffix
``_nb``) and a batched, vectorised numpy version (suffix ``_np``) that runs
the same elimination across a stack of matrices at once. The public names at
the bottom of the module are bound to one of them according to
:data:`gavecert._accel.USE_NUMBA`.

Both versions treat a pivot whose magnitude is ``<= n * eps * max|entry|`` as
zero, pick the first row attaining the largest pivot magnitude, and perform
the same arithmetic per entry, so their results agree to the last bit on
ordinary hardware.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

EPS = float(np.finfo(np.float64).eps)
CHUNK = 4096


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------


@njit
def _lu_inplace_nb(a, perm):
    # Returns the permutation parity, or 0 when a pivot falls under tolerance.
    n = a.shape[0]
    amax = 0.0
    for i in range(n):
        for j in range(n):
            v = abs(a[i, j])
            if v > amax:
                amax = v
    tol = n * EPS * amax
    for i in range(n):
        perm[i] = i
    parity = 1
    for k in range(n):
        p = k
        best = abs(a[k, k])
        for i in range(k + 1, n):
            v = abs(a[i, k])
            if v > best:
                best = v
                p = i
        if best <= tol:
            return 0
        if p != k:
            for j in range(n):
                t = a[k, j]
                a[k, j] = a[p, j]
                a[p, j] = t
            t2 = perm[k]
            perm[k] = perm[p]
            perm[p] = t2
            parity = -parity
        piv = a[k, k]
        for i in range(k + 1, n):
            f = a[i, k] / piv
            a[i, k] = f
            for j in range(k + 1, n):
                a[i, j] -= f * a[k, j]
    return parity


@njit
def _sign_from_lu_nb(lu, parity):
    n = lu.shape[0]
    if parity == 0:
        return 0, -np.inf
    sign = parity
    logmag = 0.0
    for k in range(n):
        d = lu[k, k]
        if d < 0.0:
            sign = -sign
        logmag += np.log(abs(d))
    return sign, logmag


@njit
def _det_sign_nb(m):
    a = m.copy()
    perm = np.empty(a.shape[0], np.int64)
    parity = _lu_inplace_nb(a, perm)
    return _sign_from_lu_nb(a, parity)


@njit
def _lu_factor_nb(m):
    a = m.copy()
    perm = np.empty(a.shape[0], np.int64)
    parity = _lu_inplace_nb(a, perm)
    return a, perm, parity


@njit
def _lu_substitute_nb(lu, perm, rhs):
    n = lu.shape[0]
    x = np.empty(n)
    for i in range(n):
        x[i] = rhs[perm[i]]
    for i in range(n):
        acc = x[i]
        for j in range(i):
            acc -= lu[i, j] * x[j]
        x[i] = acc
    for i in range(n - 1, -1, -1):
        acc = x[i]
        for j in range(i + 1, n):
            acc -= lu[i, j] * x[j]
        x[i] = acc / lu[i, i]
    return x


@njit
def _vertex_sweep_nb(a, b):
    n = a.shape[0]
    total = 1 << n
    signs = np.zeros(total, np.int8)
    logs = np.zeros(total)
    m = np.empty((n, n))
    s = np.empty(n)
    perm = np.empty(n, np.int64)
    ref = 0
    fail = -1
    count = 0
    for k in range(total):
        g = k ^ (k >> 1)
        for j in range(n):
            s[j] = -1.0 if (g >> j) & 1 else 1.0
        for i in range(n):
            for j in range(n):
                m[i, j] = a[i, j] + b[i, j] * s[j]
        parity = _lu_inplace_nb(m, perm)
        sg, lg = _sign_from_lu_nb(m, parity)
        signs[k] = sg
        logs[k] = lg
        count = k + 1
        if k == 0:
            ref = sg
        if sg == 0 or sg != ref:
            fail = k
            break
    return fail, signs[:count].copy(), logs[:count].copy()


@njit
def _minor_sweep_nb(m, masks):
    n = m.shape[0]
    total = masks.shape[0]
    signs = np.zeros(total, np.int8)
    logs = np.zeros(total)
    idx = np.empty(n, np.int64)
    fail = -1
    count = 0
    for t in range(total):
        mask = masks[t]
        k = 0
        for i in range(n):
            if (mask >> i) & 1:
                idx[k] = i
                k += 1
        sub = np.empty((k, k))
        for i in range(k):
            for j in range(k):
                sub[i, j] = m[idx[i], idx[j]]
        perm = np.empty(k, np.int64)
        parity = _lu_inplace_nb(sub, perm)
        sg, lg = _sign_from_lu_nb(sub, parity)
        signs[t] = sg
        logs[t] = lg
        count = t + 1
        if sg <= 0:
            fail = t
            break
    return fail, signs[:count].copy(), logs[:count].copy()


@njit
def _branch_solve_nb(a, b, rhs):
    n = a.shape[0]
    total = 1 << n
    xs = np.full((total, n), np.nan)
    singular = np.zeros(total, np.bool_)
    m = np.empty((n, n))
    perm = np.empty(n, np.int64)
    for k in range(total):
        for i in range(n):
            for j in range(n):
                sj = -1.0 if (k >> j) & 1 else 1.0
                m[i, j] = a[i, j] + b[i, j] * sj
        parity = _lu_inplace_nb(m, perm)
        if parity == 0:
            singular[k] = True
            continue
        xs[k] = _lu_substitute_nb(m, perm, rhs)
    return xs, singular


# ---------------------------------------------------------------------------
# numpy kernels (batched over a leading stack axis)
# ---------------------------------------------------------------------------


def _lu_batched_np(stack):
    """Factor every matrix of ``stack`` (K, n, n) in place.

    Returns ``(parity, perm)``; ``parity`` is 0 for matrices that hit a
    pivot under tolerance (their factors are then meaningless).
    """
    K, n, _ = stack.shape
    rows = np.arange(K)
    tol = n * EPS * np.abs(stack).reshape(K, -1).max(axis=1)
    perm = np.tile(np.arange(n), (K, 1))
    parity = np.ones(K, dtype=np.int64)
    dead = np.zeros(K, dtype=bool)
    with np.errstate(all="ignore"):
        for k in range(n):
            p = k + np.argmax(np.abs(stack[:, k:, k]), axis=1)
            best = np.abs(stack[rows, p, k])
            dead |= best <= tol
            swap = p != k
            if swap.any():
                r, pk = rows[swap], p[swap]
                tmp = stack[r, k, :].copy()
                stack[r, k, :] = stack[r, pk, :]
                stack[r, pk, :] = tmp
                tp = perm[r, k].copy()
                perm[r, k] = perm[r, pk]
                perm[r, pk] = tp
                parity[swap] = -parity[swap]
            piv = np.where(dead, 1.0, stack[:, k, k])
            f = stack[:, k + 1:, k] / piv[:, None]
            stack[:, k + 1:, k] = f
            stack[:, k + 1:, k + 1:] -= f[:, :, None] * stack[:, k, None, k + 1:]
    parity[dead] = 0
    return parity, perm


def _det_sign_batched_np(stack):
    lu = np.array(stack, dtype=np.float64, copy=True)
    parity, _ = _lu_batched_np(lu)
    diag = np.diagonal(lu, axis1=1, axis2=2)
    with np.errstate(all="ignore"):
        neg = np.count_nonzero(diag < 0, axis=1)
        sign = parity * np.where(neg % 2 == 1, -1, 1)
        logs = np.log(np.abs(diag)).sum(axis=1)
    dead = parity == 0
    sign[dead] = 0
    logs[dead] = -np.inf
    return sign.astype(np.int8), logs


def _det_sign_np(m):
    sign, logs = _det_sign_batched_np(m[None])
    return int(sign[0]), float(logs[0])


def _lu_factor_np(m):
    lu = np.array(m, dtype=np.float64, copy=True)[None]
    parity, perm = _lu_batched_np(lu)
    return lu[0], perm[0], int(parity[0])


def _substitute_batched_np(lu, perm, rhs):
    K, n, _ = lu.shape
    x = np.take_along_axis(np.broadcast_to(rhs, (K, n)), perm, axis=1).copy()
    for i in range(n):
        x[:, i] -= np.einsum("kj,kj->k", lu[:, i, :i], x[:, :i])
    for i in range(n - 1, -1, -1):
        x[:, i] -= np.einsum("kj,kj->k", lu[:, i, i + 1:], x[:, i + 1:])
        x[:, i] /= lu[:, i, i]
    return x


def _lu_substitute_np(lu, perm, rhs):
    return _substitute_batched_np(lu[None], perm[None], rhs)[0]


def sign_patterns(indices, n, gray=False):
    """Sign vectors for pattern ``indices``: bit j set means entry j is -1."""
    k = np.asarray(indices, dtype=np.int64)
    if gray:
        k = k ^ (k >> 1)
    bits = (k[:, None] >> np.arange(n)) & 1
    return 1.0 - 2.0 * bits


def _vertex_sweep_np(a, b, chunk=CHUNK):
    n = a.shape[0]
    total = 1 << n
    signs, logs = [], []
    ref = None
    fail = -1
    for start in range(0, total, chunk):
        s = sign_patterns(np.arange(start, min(total, start + chunk)), n, gray=True)
        sg, lg = _det_sign_batched_np(a[None] + b[None] * s[:, None, :])
        if ref is None:
            ref = sg[0]
        bad = np.flatnonzero((sg == 0) | (sg != ref))
        if bad.size:
            stop = bad[0] + 1
            signs.append(sg[:stop])
            logs.append(lg[:stop])
            fail = start + int(bad[0])
            break
        signs.append(sg)
        logs.append(lg)
    return fail, np.concatenate(signs), np.concatenate(logs)


def _minor_sweep_np(m, masks):
    n = m.shape[0]
    total = masks.shape[0]
    signs = np.zeros(total, np.int8)
    logs = np.zeros(total)
    sizes = np.array([bin(int(x)).count("1") for x in masks])
    for k in range(1, n + 1):
        where = np.flatnonzero(sizes == k)
        if where.size == 0:
            continue
        bits = (masks[where, None] >> np.arange(n)) & 1
        idx = np.nonzero(bits)[1].reshape(where.size, k)
        sub = m[idx[:, :, None], idx[:, None, :]]
        signs[where], logs[where] = _det_sign_batched_np(sub)
    bad = np.flatnonzero(signs <= 0)
    if bad.size:
        stop = int(bad[0]) + 1
        return int(bad[0]), signs[:stop], logs[:stop]
    return -1, signs, logs


def _branch_solve_np(a, b, rhs, chunk=CHUNK):
    n = a.shape[0]
    total = 1 << n
    xs = np.full((total, n), np.nan)
    singular = np.zeros(total, dtype=bool)
    for start in range(0, total, chunk):
        stop = min(total, start + chunk)
        s = sign_patterns(np.arange(start, stop), n)
        lu = a[None] + b[None] * s[:, None, :]
        parity, perm = _lu_batched_np(lu)
        ok = parity != 0
        singular[start:stop] = ~ok
        if ok.any():
            xs[start:stop][ok] = _substitute_batched_np(lu[ok], perm[ok], rhs)
    return xs, singular


# ---------------------------------------------------------------------------
# public bindings
# ---------------------------------------------------------------------------

if USE_NUMBA:
    det_sign_kernel = _det_sign_nb
    lu_factor_kernel = _lu_factor_nb
    lu_substitute_kernel = _lu_substitute_nb
    vertex_sweep = _vertex_sweep_nb
    minor_sweep = _minor_sweep_nb
    branch_solve = _branch_solve_nb
else:
    det_sign_kernel = _det_sign_np
    lu_factor_kernel = _lu_factor_np
    lu_substitute_kernel = _lu_substitute_np
    vertex_sweep = _vertex_sweep_np
    minor_sweep = _minor_sweep_np
    branch_solve = _branch_solve_np

NUMBA_KERNELS = {
    "det_sign": _det_sign_nb,
    "vertex_sweep": _vertex_sweep_nb,
    "minor_sweep": _minor_sweep_nb,
    "branch_solve": _branch_solve_nb,
}
NUMPY_KERNELS = {
    "det_sign": _det_sign_np,
    "vertex_sweep": _vertex_sweep_np,
    "minor_sweep": _minor_sweep_np,
    "branch_solve": _branch_solve_np,
}
