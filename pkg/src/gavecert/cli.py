"""``gavecert`` command line: check, solve, compare, fuzz.

Each run prints one JSON document. Floats carry 17 significant digits and
the field order is fixed, so two runs with the same arguments differ only in
``wall_time_s``. Failures print ``{"error": ..., "detail": ...}`` and exit
nonzero; a ``fails`` verdict is a successful run.
"""

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .certify import N_CAP_MINOR, N_CAP_VERTEX, SAMPLES, Condition, GaveInstance, hierarchy_report, MARGIN
from .mmio import load_matrix_market, load_vector
from .probe import Ensemble, EnsembleSpec, SeparationQuery, find_separating_instance, uniqueness_crosscheck
from .solve import ACCEPT_TOL, DEDUP_RADIUS, SIGN_TOL, enumerate_branch_solutions, newton_solve, picard_solve


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return "null" if obj is None else ("true" if obj else "false")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return '"nan"'
        if math.isinf(v):
            return '"inf"' if v > 0 else '"-inf"'
        text = format(v, ".17g")
        return text if any(c in text for c in ".en") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if hasattr(obj, "value") and isinstance(obj.value, str):
        return json.dumps(obj.value)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, tuple, dict, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        inner = (",\n").join(pad + _encode(v, indent, level + 1) for v in obj)
        return "[\n" + inner + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}"
                           for k, v in obj.items())
        return "{\n" + inner + "\n" + end + "}"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent=2):
    """JSON text with floats at 17 significant digits."""
    return _encode(obj, indent, 0)


def _add_common(p):
    p.add_argument("--tol", type=float, default=ACCEPT_TOL)
    p.add_argument("--n-cap-vertex", type=int, default=N_CAP_VERTEX)
    p.add_argument("--n-cap-minor", type=int, default=N_CAP_MINOR)
    p.add_argument("--samples", type=int, default=SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $GAVE_THREADS or 1); never changes the output")


def _add_instance(p, rhs_required):
    p.add_argument("--A", dest="a_path", required=True, help="Matrix Market file for A")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--B", dest="b_path", help="Matrix Market file for B")
    group.add_argument("--ave", action="store_true", help="use B = I (Ax + |x| = b)")
    p.add_argument("--b", dest="rhs_path", required=rhs_required, help="Matrix Market n x 1 file for b")


def build_parser():
    parser = _Parser(prog="gavecert", description="Unique-solvability certificates for Ax + B|x| = b")
    parser.add_argument("--version", action="version", version=f"gavecert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="run every certificate and report the final verdict")
    _add_instance(p, rhs_required=False)
    _add_common(p)

    p = sub.add_parser("solve", help="solve one instance")
    _add_instance(p, rhs_required=True)
    p.add_argument("--method", choices=["enumerate", "picard", "newton"], default="enumerate")
    p.add_argument("--max-iter", type=int, default=500)
    _add_common(p)

    p = sub.add_parser("compare", help="search for an instance separating two conditions")
    p.add_argument("--hold", required=True, choices=[c.value for c in Condition])
    p.add_argument("--fail", required=True, choices=[c.value for c in Condition])
    p.add_argument("--ensemble", choices=[e.value for e in Ensemble], default="GAUSSIAN")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--target", type=float, default=None)
    p.add_argument("--budget", type=int, default=1000)
    _add_common(p)

    p = sub.add_parser("fuzz", help="cross-check certificates against the enumeration oracle")
    p.add_argument("--ensemble", choices=[e.value for e in Ensemble], default="GAUSSIAN")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--target", type=float, default=None)
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--rhs-per-instance", type=int, default=20)
    _add_common(p)
    return parser


def _threads(args):
    if args.threads is not None:
        return args.threads
    return int(os.environ.get("GAVE_THREADS", "1"))


def _validate(args):
    if not args.tol > 0:
        raise UsageError("--tol must be positive")
    for name in ("n_cap_vertex", "n_cap_minor"):
        if getattr(args, name) < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be at least 1")
    if args.samples < 0:
        raise UsageError("--samples must be nonnegative")
    if _threads(args) < 1:
        raise UsageError("--threads must be at least 1")


def _load_instance(args):
    a = load_matrix_market(args.a_path)
    b = np.eye(a.shape[0]) if args.ave else load_matrix_market(args.b_path)
    rhs = load_vector(args.rhs_path) if args.rhs_path else None
    return GaveInstance(a, b, rhs)


def config_echo(args):
    """Arguments that determine the output (thread count excluded)."""
    cfg = {k: v for k, v in vars(args).items() if k != "threads"}
    return dict(sorted(cfg.items()))


def argv_from_config(cfg):
    """Command line reproducing an echoed config."""
    argv = [cfg["command"]]
    for key, value in cfg.items():
        if key == "command" or value is None or value is False:
            continue
        flag = {"a_path": "--A", "b_path": "--B", "rhs_path": "--b"}.get(key, "--" + key.replace("_", "-"))
        argv.append(flag)
        if value is not True:
            argv.append(str(value))
    return argv


def _run(args):
    threads = _threads(args)
    caps = {"n_cap_vertex": args.n_cap_vertex, "n_cap_minor": args.n_cap_minor,
            "samples": args.samples, "seed": args.seed}
    if args.command == "check":
        return hierarchy_report(_load_instance(args), **caps).to_dict()
    if args.command == "solve":
        inst = _load_instance(args)
        if args.method == "enumerate":
            rep = enumerate_branch_solutions(inst, n_cap=args.n_cap_vertex, tol=args.tol)
        elif args.method == "picard":
            rep = picard_solve(inst, tol=args.tol, max_iter=args.max_iter)
        else:
            rep = newton_solve(inst, tol=args.tol, max_iter=args.max_iter)
        return rep.to_dict()
    if args.command == "compare":
        spec = EnsembleSpec(args.n, Ensemble(args.ensemble), args.target, args.seed)
        query = SeparationQuery(args.hold, args.fail, args.budget, args.seed)
        res = find_separating_instance(query, spec, threads=threads, **caps)
        return {"found": res is not None, "separation": None if res is None else res.to_dict()}
    spec = EnsembleSpec(args.n, Ensemble(args.ensemble), args.target, args.seed)
    return uniqueness_crosscheck(spec, args.instances, args.rhs_per_instance, threads=threads,
                                 **caps).to_dict()


def main(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    start = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
        result = _run(args)
    except UsageError as exc:
        stdout.write(dumps({"error": "UsageError", "detail": str(exc)}) + "\n")
        return 2
    except Exception as exc:  # every failure becomes a JSON error object
        stdout.write(dumps({"error": type(exc).__name__, "detail": str(exc)}) + "\n")
        return 1
    report = {
        "tool": "gavecert",
        "version": __version__,
        "command": args.command,
        "config": config_echo(args),
        "tolerances": {"margin": MARGIN, "accept": args.tol, "sign": SIGN_TOL, "dedup": DEDUP_RADIUS,
                       "rank": "n * eps * max|entry|"},
        "result": result,
        "wall_time_s": time.perf_counter() - start,
    }
    stdout.write(dumps(report) + "\n")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
