import numpy as np
import pytest

from gavecert import _kernels


def cofactor_det(m):
    """Laplace expansion along the first row (small n only)."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if n == 1:
        return m[0, 0]
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total += (-1) ** j * m[0, j] * cofactor_det(minor)
    return total


def charpoly(m):
    """Characteristic polynomial coefficients by Faddeev-LeVerrier."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    coeffs = [1.0]
    mk = np.zeros_like(m)
    for k in range(1, n + 1):
        mk = m @ mk + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(m @ mk) / k)
    return np.array(coeffs)


def poly_roots(m):
    return np.roots(charpoly(m))


@pytest.fixture(params=["numba", "numpy"])
def backend(request, monkeypatch):
    """Run a test with the kernels bound to one backend."""
    table = _kernels.NUMBA_KERNELS if request.param == "numba" else _kernels.NUMPY_KERNELS
    monkeypatch.setattr(_kernels, "det_sign_kernel", table["det_sign"])
    monkeypatch.setattr(_kernels, "vertex_sweep", table["vertex_sweep"])
    monkeypatch.setattr(_kernels, "minor_sweep", table["minor_sweep"])
    monkeypatch.setattr(_kernels, "branch_solve", table["branch_solve"])
    return request.param


def mixed_pairs(count, seed=0, n_min=1, n_max=6):
    """Random (A, B) pairs from several shapes of ensemble, using numpy's own generator."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(n_min, n_max + 1))
        kind = k % 4
        if kind == 0:
            a, b = rng.standard_normal((n, n)), rng.standard_normal((n, n))
        elif kind == 1:
            a = rng.uniform(-1, 1, (n, n)) + rng.uniform(0.5, 2.0) * n * np.eye(n)
            b = rng.uniform(-1, 1, (n, n))
        elif kind == 2:
            a = rng.standard_normal((n, n))
            b = rng.standard_normal((n, n))
            b *= rng.uniform(0.05, 1.5) * np.linalg.svd(a, compute_uv=False)[-1] / np.linalg.norm(b, 2)
        else:
            a, b = np.diag(rng.uniform(-3, 3, n)), np.diag(rng.uniform(-3, 3, n))
        out.append((a, b))
    return out


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
