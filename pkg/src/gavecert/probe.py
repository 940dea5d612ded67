"""Seeded instance ensembles, separation searches and oracle cross-checks.

Every draw is a pure function of ``(seed, draw index)``: instance ``j`` of a
search reads the counter stream keyed by ``derive_seed(spec.seed, j)``, so
results do not depend on how draws are spread over threads.
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .certify import (
    KNOWN_IMPLICATIONS,
    Condition,
    FinalVerdict,
    GaveInstance,
    N_CAP_MINOR,
    N_CAP_VERTEX,
    SAMPLES,
    Verdict,
    certificate_for,
    hierarchy_report,
)
from .errors import ImpossiblePair, SingularMatrix
from .numkernel import det_sign, lu_solve, singular_values
from .rng import CounterRNG, derive_seed
from .solve import SolveVerdict, enumerate_branch_solutions, nonuniqueness_rhs

MAX_SINGULAR_RETRIES = 100


class Ensemble(str, Enum):
    GAUSSIAN = "GAUSSIAN"
    DIAGONAL_DOMINANT = "DIAGONAL_DOMINANT"
    SCALED_CONTRACTION = "SCALED_CONTRACTION"
    DIAGONAL = "DIAGONAL"


@dataclass(frozen=True)
class EnsembleSpec:
    """Recipe for :func:`random_instance`.

    Stream layout (counter RNG keyed by ``seed``):

    * GAUSSIAN: ``n*n`` normals for A (row-major), ``n*n`` for B, ``n`` uniforms for b.
    * DIAGONAL_DOMINANT: ``n*n`` uniforms for A (then ``+ n I``), ``n*n`` for B, ``n`` for b.
    * SCALED_CONTRACTION: as DIAGONAL_DOMINANT, then B is rescaled so that
      ``sigma_1(A^-1 B) = target`` (default 0.5).
    * DIAGONAL: ``n`` uniforms for diag(A), ``n`` for diag(B), ``n`` for b.

    Uniforms are on [-1, 1). A draw rejected for a singular ``A`` (only when
    the ensemble needs ``A^-1``) is followed by a fresh draw from the
    continuing stream.
    """

    n: int
    ensemble: Ensemble = Ensemble.GAUSSIAN
    target: float = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ensemble", Ensemble(self.ensemble))
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.target is not None and not self.target > 0:
            raise ValueError("target must be positive")


@dataclass(frozen=True)
class SeparationQuery:
    must_hold: Condition
    must_fail: Condition
    budget: int = 1000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "must_hold", Condition(self.must_hold))
        object.__setattr__(self, "must_fail", Condition(self.must_fail))
        if self.must_hold is self.must_fail:
            raise ValueError("must_hold and must_fail must differ")
        if self.budget < 1:
            raise ValueError("budget must be at least 1")


def _draw(rng, spec):
    n = spec.n
    kind = spec.ensemble
    if kind is Ensemble.GAUSSIAN:
        a = rng.normal(n * n).reshape(n, n)
        b = rng.normal(n * n).reshape(n, n)
    elif kind is Ensemble.DIAGONAL:
        a = np.diag(rng.uniform(n))
        b = np.diag(rng.uniform(n))
    else:
        a = rng.uniform(n * n).reshape(n, n) + n * np.eye(n)
        b = rng.uniform(n * n).reshape(n, n)
    rhs = rng.uniform(n)
    return a, b, rhs


def random_instance(spec):
    """Deterministic instance (with right-hand side) for ``spec``."""
    rng = CounterRNG(spec.seed)
    for _ in range(MAX_SINGULAR_RETRIES):
        a, b, rhs = _draw(rng, spec)
        if spec.ensemble is not Ensemble.SCALED_CONTRACTION:
            return GaveInstance(a, b, rhs)
        if det_sign(a).sign == 0:
            continue
        s1 = float(singular_values(lu_solve(a, b))[0])
        if s1 == 0.0:
            continue
        target = 0.5 if spec.target is None else spec.target
        return GaveInstance(a, b * (target / s1), rhs)
    raise SingularMatrix(f"{MAX_SINGULAR_RETRIES} consecutive draws had a singular A")


def instance_spec(spec, index):
    """Spec of draw ``index`` in a search or batch rooted at ``spec``."""
    return replace(spec, seed=derive_seed(spec.seed, index))


def random_rhs(n, seed, index):
    return CounterRNG(derive_seed(seed, 0x524853, index)).uniform(n)


def _map_ordered(fn, items, threads):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class SeparationResult:
    instance: GaveInstance
    hold_certificate: object
    fail_certificate: object
    draw_index: int

    def to_dict(self):
        return {
            "draw_index": self.draw_index,
            "A": self.instance.a.tolist(),
            "B": self.instance.b_mat.tolist(),
            "hold": self.hold_certificate.to_dict(),
            "fail": self.fail_certificate.to_dict(),
        }


def find_separating_instance(query, spec, threads=1, batch=64, **cert_kwargs):
    """First draw where ``must_hold`` holds and ``must_fail`` fails, or ``None``.

    Draws are evaluated in batches (concurrently when ``threads > 1``) and the
    smallest qualifying draw index wins, so the answer matches a sequential
    scan.
    """
    if (query.must_hold, query.must_fail) in KNOWN_IMPLICATIONS:
        warnings.warn(f"{query.must_hold.value} implies {query.must_fail.value}; "
                      "no separating instance can exist", ImpossiblePair, stacklevel=2)
    root = replace(spec, seed=derive_seed(spec.seed, query.seed))

    def evaluate(j):
        inst = random_instance(instance_spec(root, j))
        hold = certificate_for(query.must_hold, inst, **cert_kwargs)
        if hold.verdict is not Verdict.HOLDS:
            return None
        fail = certificate_for(query.must_fail, inst, **cert_kwargs)
        if fail.verdict is not Verdict.FAILS:
            return None
        return SeparationResult(inst, hold, fail, j)

    for start in range(0, query.budget, batch):
        idx = range(start, min(query.budget, start + batch))
        for res in _map_ordered(evaluate, idx, threads):
            if res is not None:
                return res
    return None


@dataclass
class CrosscheckSummary:
    instances: int = 0
    agreements: int = 0
    disagreements: int = 0
    unique: int = 0
    not_unique: int = 0
    undecided: int = 0
    witnessed: int = 0
    unwitnessed: int = 0
    rhs_checked: int = 0
    details: list = field(default_factory=list)

    def to_dict(self):
        out = {k: getattr(self, k) for k in (
            "instances", "agreements", "disagreements", "unique", "not_unique",
            "undecided", "witnessed", "unwitnessed", "rhs_checked")}
        out["details"] = list(self.details)
        return out


def crosscheck_instance(inst, rhs_list, n_cap_vertex=N_CAP_VERTEX, n_cap_minor=N_CAP_MINOR,
                        samples=SAMPLES, seed=0):
    """Compare the certified verdict of one instance against the oracle.

    Returns a record with the final verdict, whether the oracle agrees, and,
    for not-unique instances, whether a right-hand side with a number of
    solutions other than one was found (random ones first, then the targeted
    construction from the VERTEX_NS witness).
    """
    report = hierarchy_report(inst, n_cap_vertex, n_cap_minor, samples, seed)
    counts = [enumerate_branch_solutions(inst.with_rhs(b)).verdict for b in rhs_list]
    rec = {"final_verdict": report.final_verdict.value, "decided_by": report.decided_by,
           "oracle": [v.value for v in counts], "agree": True, "witnessed": None}
    if report.final_verdict is FinalVerdict.UNIQUE:
        rec["agree"] = all(v is SolveVerdict.UNIQUE for v in counts)
    elif report.final_verdict is FinalVerdict.NOT_UNIQUE:
        witnessed = any(v is not SolveVerdict.UNIQUE for v in counts)
        how = "random" if witnessed else None
        vertex = report.get(Condition.VERTEX_NS)
        if not witnessed and vertex is not None and vertex.verdict is Verdict.FAILS:
            b, _, _ = nonuniqueness_rhs(inst, vertex)
            v = enumerate_branch_solutions(inst.with_rhs(b)).verdict
            witnessed = v is not SolveVerdict.UNIQUE
            how = "targeted" if witnessed else None
            rec["targeted_oracle"] = v.value
        rec["witnessed"] = witnessed
        rec["witness_route"] = how
        rec["agree"] = witnessed
    return rec


def uniqueness_crosscheck(spec, instances, rhs_per_instance, threads=1, extra=(), **kwargs):
    """Certificates versus the enumeration oracle over a batch of draws.

    ``extra`` instances (e.g. hand-built degenerate cases) are checked after
    the random draws.
    """
    pool = [random_instance(instance_spec(spec, j)) for j in range(instances)]
    pool.extend(extra)
    seed = kwargs.get("seed", 0)

    def run(j):
        inst = pool[j]
        rhs_list = [random_rhs(inst.n, spec.seed, j * 100003 + r) for r in range(rhs_per_instance)]
        return crosscheck_instance(inst, rhs_list, seed=derive_seed(seed, j),
                                   **{k: v for k, v in kwargs.items() if k != "seed"})

    summary = CrosscheckSummary()
    for j, rec in enumerate(_map_ordered(run, range(len(pool)), threads)):
        summary.instances += 1
        summary.rhs_checked += rhs_per_instance
        fv = FinalVerdict(rec["final_verdict"])
        if fv is FinalVerdict.UNIQUE:
            summary.unique += 1
        elif fv is FinalVerdict.NOT_UNIQUE:
            summary.not_unique += 1
            if rec["witnessed"]:
                summary.witnessed += 1
            else:
                summary.unwitnessed += 1
        else:
            summary.undecided += 1
        if rec["agree"]:
            summary.agreements += 1
        else:
            summary.disagreements += 1
            summary.details.append({"index": j, **rec})
    return summary
