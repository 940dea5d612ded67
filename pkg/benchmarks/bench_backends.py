"""Compare the numba kernels against the pure-numpy fallback.

The backend is fixed at import time, so each one is timed in its own
subprocess with ``GAVECERT_BACKEND`` set. Usage::

    python benchmarks/bench_backends.py [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def workloads():
    import numpy as np

    from gavecert.certify import GaveInstance, hierarchy_report, pmatrix_certificate, vertex_regularity_certificate
    from gavecert.solve import enumerate_branch_solutions

    rng = np.random.default_rng(0)
    a12 = rng.standard_normal((12, 12)) + 12 * np.eye(12)
    b12 = rng.standard_normal((12, 12))
    m10 = rng.standard_normal((10, 10)) + 6 * np.eye(10)
    a10 = rng.standard_normal((10, 10)) + 10 * np.eye(10)
    b10 = rng.standard_normal((10, 10))
    small = [GaveInstance(rng.standard_normal((5, 5)), rng.standard_normal((5, 5))) for _ in range(50)]
    return {
        "vertex_sweep n=12": lambda: vertex_regularity_certificate(a12, b12),
        "principal_minors n=10": lambda: pmatrix_certificate(m10),
        "enumerate n=10": lambda: enumerate_branch_solutions(GaveInstance(a10, b10, np.ones(10))),
        "check x50 n=5": lambda: [hierarchy_report(i, samples=200) for i in small],
    }


def worker(repeat):
    from gavecert import BACKEND

    out = {"backend": BACKEND, "timings": {}}
    for name, fn in workloads().items():
        fn()  # compile / warm caches
        best = float("inf")
        for _ in range(repeat):
            start = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - start)
        out["timings"][name] = best
    print(json.dumps(out))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()
    if args.worker:
        worker(args.repeat)
        return
    results = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, GAVECERT_BACKEND=backend)
        proc = subprocess.run([sys.executable, __file__, "--worker", "--repeat", str(args.repeat)],
                              env=env, capture_output=True, text=True, check=True)
        results[backend] = json.loads(proc.stdout)["timings"]
    print(f"{'workload':<24}{'numba (s)':>12}{'numpy (s)':>12}{'speedup':>10}")
    for name in results["numba"]:
        nb, np_ = results["numba"][name], results["numpy"][name]
        print(f"{name:<24}{nb:>12.4f}{np_:>12.4f}{np_ / nb:>9.1f}x")


if __name__ == "__main__":
    main()
