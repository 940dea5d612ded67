"""Solvability certificates for ``A x + B |x| = b``.

Two certificates are exact (necessary and sufficient) up to their size caps:

* ``VERTEX_NS``: ``det(A + B diag(s))`` is nonzero with one common sign over
  all ``2**n`` sign vectors ``s``.
* ``PMATRIX_NS``: ``(A + B)^-1 (A - B)`` has only positive principal minors.

The rest are cheap sufficient conditions based on singular values and
spectral radii, plus a sampling falsifier for the box spectral-radius
condition. :func:`hierarchy_report` runs all of them and cross-checks the
implications between them.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import InconsistencyDetected, NoConvergence, RangeViolation, SingularMatrix, SingularSum
from .numkernel import (
    as_matrix,
    as_vector,
    det_sign,
    lu_solve,
    singular_values,
    spectral_radius_general,
    spectral_radius_nonneg,
)
from .rng import CounterRNG, derive_seed

MARGIN = 1e-10
N_CAP_VERTEX = 14
N_CAP_MINOR = 12
RHO_VERTEX_CAP = 12
SAMPLES = 1000


class Condition(str, Enum):
    VERTEX_NS = "VERTEX_NS"
    PMATRIX_NS = "PMATRIX_NS"
    RHO_ABS = "RHO_ABS"
    RHO_BOX_SAMPLED = "RHO_BOX_SAMPLED"
    SIGMA1_INVAB = "SIGMA1_INVAB"
    SIGMAN_BINVA = "SIGMAN_BINVA"
    SIGMA_PAIR_37 = "SIGMA_PAIR_37"
    SIGMA_PAIR_ABS_38 = "SIGMA_PAIR_ABS_38"
    AVE_SHIFT = "AVE_SHIFT"


class Verdict(str, Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNDECIDED = "undecided"


class FinalVerdict(str, Enum):
    UNIQUE = "unique"
    NOT_UNIQUE = "not_unique"
    UNDECIDED = "undecided"


CONDITION_ORDER = list(Condition)
SUFFICIENT = (
    Condition.RHO_ABS,
    Condition.SIGMA1_INVAB,
    Condition.SIGMAN_BINVA,
    Condition.SIGMA_PAIR_37,
    Condition.SIGMA_PAIR_ABS_38,
    Condition.AVE_SHIFT,
)
# Depth along the implication chains SIGMA_PAIR_ABS_38 => SIGMA_PAIR_37 =>
# SIGMAN_BINVA => SIGMA1_INVAB and RHO_ABS => RHO_BOX_SAMPLED; exact tests last.
STRENGTH = {
    Condition.SIGMA_PAIR_ABS_38: 0,
    Condition.RHO_ABS: 0,
    Condition.AVE_SHIFT: 0,
    Condition.SIGMA_PAIR_37: 1,
    Condition.RHO_BOX_SAMPLED: 1,
    Condition.SIGMAN_BINVA: 2,
    Condition.SIGMA1_INVAB: 3,
    Condition.VERTEX_NS: 9,
    Condition.PMATRIX_NS: 9,
}
# must_hold => must_fail is impossible for these pairs.
KNOWN_IMPLICATIONS = {
    (Condition.SIGMA_PAIR_ABS_38, Condition.SIGMA_PAIR_37),
    (Condition.SIGMA_PAIR_ABS_38, Condition.VERTEX_NS),
    (Condition.SIGMA_PAIR_37, Condition.VERTEX_NS),
    (Condition.SIGMAN_BINVA, Condition.SIGMA1_INVAB),
    (Condition.SIGMAN_BINVA, Condition.VERTEX_NS),
    (Condition.SIGMA1_INVAB, Condition.VERTEX_NS),
    (Condition.RHO_ABS, Condition.VERTEX_NS),
    (Condition.AVE_SHIFT, Condition.VERTEX_NS),
    (Condition.VERTEX_NS, Condition.PMATRIX_NS),
    (Condition.PMATRIX_NS, Condition.VERTEX_NS),
}
_WITNESS_REQUIRED = {Condition.VERTEX_NS, Condition.PMATRIX_NS, Condition.RHO_BOX_SAMPLED}


@dataclass(frozen=True)
class GaveInstance:
    """Data of ``A x + B |x| = b``; ``rhs`` may be omitted for certification."""

    a: np.ndarray
    b_mat: np.ndarray
    rhs: np.ndarray = None

    def __post_init__(self):
        a = as_matrix(self.a, name="A")
        b = as_matrix(self.b_mat, name="B")
        if a.shape != b.shape:
            raise ValueError(f"A is {a.shape} but B is {b.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b_mat", b)
        if self.rhs is not None:
            rhs = as_vector(self.rhs, name="b")
            if rhs.size != a.shape[0]:
                raise ValueError(f"b has length {rhs.size}, expected {a.shape[0]}")
            object.__setattr__(self, "rhs", rhs)

    @classmethod
    def ave(cls, a, rhs=None):
        a = as_matrix(a, name="A")
        return cls(a, np.eye(a.shape[0]), rhs)

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def is_ave(self):
        return bool(np.array_equal(self.b_mat, np.eye(self.n)))

    def with_rhs(self, rhs):
        return GaveInstance(self.a, self.b_mat, rhs)


@dataclass(frozen=True)
class BoxDiagonal:
    """Diagonal matrix with entries in ``[lower, upper]``."""

    entries: tuple
    lower: float = -1.0
    upper: float = 1.0

    def __post_init__(self):
        entries = tuple(float(v) for v in np.ravel(self.entries))
        if (self.lower, self.upper) not in ((-1.0, 1.0), (0.0, 1.0)):
            raise RangeViolation(f"unsupported range [{self.lower}, {self.upper}]")
        bad = [v for v in entries if not self.lower <= v <= self.upper]
        if bad:
            raise RangeViolation(f"entries {bad} outside [{self.lower}, {self.upper}]")
        object.__setattr__(self, "entries", entries)

    def matrix(self):
        return np.diag(self.entries)


def box_from_unit(d):
    """Map ``D`` with entries in [0, 1] to ``I - 2D`` with entries in [-1, 1]."""
    if not isinstance(d, BoxDiagonal):
        d = BoxDiagonal(d, 0.0, 1.0)
    if (d.lower, d.upper) != (0.0, 1.0):
        raise RangeViolation("expected a diagonal over [0, 1]")
    return BoxDiagonal(tuple(1.0 - 2.0 * v for v in d.entries), -1.0, 1.0)


def unit_from_box(dbar):
    """Inverse of :func:`box_from_unit`."""
    if not isinstance(dbar, BoxDiagonal):
        dbar = BoxDiagonal(dbar, -1.0, 1.0)
    return BoxDiagonal(tuple((1.0 - v) / 2.0 for v in dbar.entries), 0.0, 1.0)


@dataclass
class Certificate:
    condition_id: Condition
    verdict: Verdict
    evidence: dict = field(default_factory=dict)
    witness: tuple = None
    witness_kind: str = None
    cost: dict = field(default_factory=dict)
    note: str = ""

    def __post_init__(self):
        if (self.verdict is Verdict.FAILS and self.condition_id in _WITNESS_REQUIRED
                and self.witness is None):
            raise ValueError(f"{self.condition_id.value} failed without a witness")

    def to_dict(self):
        return {
            "condition_id": self.condition_id.value,
            "verdict": self.verdict.value,
            "evidence": dict(self.evidence),
            "witness": None if self.witness is None
            else {"kind": self.witness_kind, "value": list(self.witness)},
            "cost": dict(self.cost),
            "note": self.note,
        }


@dataclass(frozen=True)
class LcpInstance:
    """``w = M z + q``, ``z, w >= 0``, ``z.w = 0`` with ``z = |x| - x``, ``w = |x| + x``."""

    m: np.ndarray
    q: np.ndarray

    @staticmethod
    def to_gave_solution(z, w):
        return (np.asarray(w) - np.asarray(z)) / 2.0


def _compare(value, threshold, less, margin=MARGIN):
    """Verdict for ``value < threshold`` (``less``) or ``value > threshold``."""
    band = margin * max(1.0, abs(threshold))
    gap = threshold - value if less else value - threshold
    if gap >= band:
        return Verdict.HOLDS, gap
    if gap <= -band:
        return Verdict.FAILS, gap
    return Verdict.UNDECIDED, gap


def _min_max_log(logs, signs):
    live = logs[signs != 0]
    if live.size == 0:
        return {}
    return {"min_log_abs_det": float(live.min()), "max_log_abs_det": float(live.max())}


def vertex_regularity_certificate(a, b_mat, n_cap=N_CAP_VERTEX):
    """Exact test: ``A + B diag(s)`` nonsingular with a constant determinant sign.

    Vertices are visited in reflected Gray-code order starting from
    ``s = (+1, ..., +1)``; bit ``j`` of the Gray code set means ``s_j = -1``.
    The determinant of ``A + B diag(d)`` is affine in every ``d_j``, so a
    sign-constant nonzero vertex set rules out a singular point anywhere in
    the box ``[-1, 1]^n``.
    """
    a = as_matrix(a, name="A")
    b_mat = as_matrix(b_mat, name="B")
    n = a.shape[0]
    if n > n_cap:
        return Certificate(Condition.VERTEX_NS, Verdict.UNDECIDED,
                           {"n": n, "n_cap": n_cap}, cost={"determinants": 0},
                           note="dimension above vertex cap")
    fail, signs, logs = _kernels.vertex_sweep(a, b_mat)
    fail = int(fail)
    evidence = {"reference_sign": int(signs[0]), "vertices": 1 << n}
    evidence.update(_min_max_log(logs, signs))
    cost = {"determinants": int(signs.size)}
    if fail < 0:
        return Certificate(Condition.VERTEX_NS, Verdict.HOLDS, evidence, cost=cost)
    s = _kernels.sign_patterns([fail], n, gray=True)[0]
    evidence["witness_index"] = fail
    evidence["witness_sign"] = int(signs[fail])
    return Certificate(Condition.VERTEX_NS, Verdict.FAILS, evidence,
                       witness=tuple(int(v) for v in s), witness_kind="sign_vector", cost=cost)


@lru_cache(maxsize=None)
def lex_subset_masks(n):
    """Bitmasks of all nonempty subsets of ``range(n)`` in lexicographic order.

    Subsets compare as sorted index tuples: (0,) < (0, 1) < (0, 1, 2) < (0, 2) < (1,) ...
    """
    out = []

    def walk(start, mask):
        for i in range(start, n):
            child = mask | (1 << i)
            out.append(child)
            walk(i + 1, child)

    walk(0, 0)
    arr = np.array(out, dtype=np.int64)
    arr.setflags(write=False)
    return arr


def pmatrix_certificate(m, n_cap=N_CAP_MINOR):
    """Exact P-matrix test over all ``2**n - 1`` principal minors.

    On failure the witness is the lexicographically first index set (0-based)
    whose minor is not positive.
    """
    m = as_matrix(m, name="M")
    n = m.shape[0]
    if n > n_cap:
        return Certificate(Condition.PMATRIX_NS, Verdict.UNDECIDED,
                           {"n": n, "n_cap": n_cap}, cost={"minors": 0},
                           note="dimension above principal-minor cap")
    masks = lex_subset_masks(n)
    fail, signs, logs = _kernels.minor_sweep(m, masks)
    fail = int(fail)
    evidence = {"minors": len(masks)}
    live = logs[signs > 0]
    if live.size:
        evidence["min_log_minor"] = float(live.min())
    cost = {"minors": int(signs.size)}
    if fail < 0:
        return Certificate(Condition.PMATRIX_NS, Verdict.HOLDS, evidence, cost=cost)
    mask = int(masks[fail])
    idx = tuple(i for i in range(n) if (mask >> i) & 1)
    evidence["witness_sign"] = int(signs[fail])
    return Certificate(Condition.PMATRIX_NS, Verdict.FAILS, evidence, witness=idx,
                       witness_kind="index_set", cost=cost)


def lcp_matrix(a, b_mat):
    """``(A + B)^-1 (A - B)``, solved column by column."""
    a = as_matrix(a, name="A")
    b_mat = as_matrix(b_mat, name="B")
    try:
        return lu_solve(a + b_mat, a - b_mat)
    except SingularMatrix as exc:
        raise SingularSum("A + B is singular") from exc


def reduce_to_lcp(inst):
    """LCP ``(M, q)`` with ``M = (A+B)^-1 (A-B)`` and ``q = 2 (A+B)^-1 b``."""
    if inst.rhs is None:
        raise ValueError("instance has no right-hand side")
    m = lcp_matrix(inst.a, inst.b_mat)
    q = lu_solve(inst.a + inst.b_mat, 2.0 * inst.rhs)
    return LcpInstance(m, q)


def lcp_pmatrix_certificate(inst, n_cap=N_CAP_MINOR):
    """PMATRIX_NS for an instance; undecided when ``A + B`` is singular."""
    if inst.n > n_cap:
        return pmatrix_certificate(np.zeros((inst.n, inst.n)), n_cap)
    try:
        m = lcp_matrix(inst.a, inst.b_mat)
    except SingularSum:
        return Certificate(Condition.PMATRIX_NS, Verdict.UNDECIDED, {"sum_singular": 1},
                           cost={"minors": 0}, note="A + B is singular; the LCP reduction does not exist")
    return pmatrix_certificate(m, n_cap)


def _max_abs_sv(m):
    return float(singular_values(m)[0])


def spectral_certificates(inst, margin=MARGIN):
    """Singular-value and spectral-radius sufficient conditions.

    Returns RHO_ABS, SIGMA1_INVAB, SIGMAN_BINVA, SIGMA_PAIR_37,
    SIGMA_PAIR_ABS_38 and, for ``B = I``, AVE_SHIFT. A certificate whose own
    precondition fails (``A`` or ``B`` singular) is reported undecided.
    """
    a, b = inst.a, inst.b_mat
    out = []
    sv_a = singular_values(a)
    a_singular = det_sign(a).sign == 0
    b_singular = det_sign(b).sign == 0

    if a_singular:
        for cid in (Condition.RHO_ABS, Condition.SIGMA1_INVAB):
            out.append(Certificate(cid, Verdict.UNDECIDED, {"sigma_n_A": float(sv_a[-1])},
                                   cost={"factorizations": 1}, note="A is singular"))
    else:
        g = lu_solve(a, b)
        absg = np.abs(g)
        try:
            rho = spectral_radius_nonneg(absg)
            how = "power"
        except NoConvergence:
            rho = spectral_radius_general(absg)
            how = "eig"
        verdict, gap = _compare(rho, 1.0, less=True, margin=margin)
        out.append(Certificate(Condition.RHO_ABS, verdict, {"rho_abs_invA_B": rho, "margin": gap},
                               cost={"factorizations": 1, "spectral_radii": 1}, note=how))
        s1 = _max_abs_sv(g)
        verdict, gap = _compare(s1, 1.0, less=True, margin=margin)
        out.append(Certificate(Condition.SIGMA1_INVAB, verdict, {"sigma1_invA_B": s1, "margin": gap},
                               cost={"factorizations": 1, "svds": 1}))

    if b_singular:
        out.append(Certificate(Condition.SIGMAN_BINVA, Verdict.UNDECIDED, {},
                               cost={"factorizations": 1}, note="B is singular"))
    else:
        sn = float(singular_values(lu_solve(b, a))[-1])
        verdict, gap = _compare(sn, 1.0, less=False, margin=margin)
        out.append(Certificate(Condition.SIGMAN_BINVA, verdict, {"sigman_invB_A": sn, "margin": gap},
                               cost={"factorizations": 1, "svds": 1}))

    sn_a = float(sv_a[-1])
    s1_b = _max_abs_sv(b)
    verdict, gap = _compare(s1_b, sn_a, less=True, margin=margin)
    out.append(Certificate(Condition.SIGMA_PAIR_37, verdict,
                           {"sigma1_B": s1_b, "sigman_A": sn_a, "margin": gap}, cost={"svds": 2}))
    s1_absb = _max_abs_sv(np.abs(b))
    verdict, gap = _compare(s1_absb, sn_a, less=True, margin=margin)
    out.append(Certificate(Condition.SIGMA_PAIR_ABS_38, verdict,
                           {"sigma1_absB": s1_absb, "sigman_A": sn_a, "margin": gap}, cost={"svds": 2}))

    if inst.is_ave:
        shift = float(singular_values(a + np.eye(inst.n))[-1])
        verdict, gap = _compare(shift, 2.0, less=False, margin=margin)
        out.append(Certificate(Condition.AVE_SHIFT, verdict, {"sigman_A_plus_I": shift, "margin": gap},
                               cost={"svds": 1}))
    return out


def box_samples(n, samples, seed, vertex_cap=RHO_VERTEX_CAP):
    """Diagonals probed by :func:`sampled_rho_box`: Gray-order vertices, then uniform draws."""
    parts = []
    if n <= vertex_cap:
        parts.append(_kernels.sign_patterns(np.arange(1 << n), n, gray=True))
    if samples > 0:
        rng = CounterRNG(derive_seed(seed, 0x52484F))
        parts.append(rng.uniform(samples * n).reshape(samples, n))
    return np.concatenate(parts) if parts else np.zeros((0, n))


def sampled_rho_box(inst, samples=SAMPLES, seed=0, margin=MARGIN, vertex_cap=RHO_VERTEX_CAP):
    """Falsifier for ``rho(A^-1 B D) < 1`` over all diagonal ``D`` in the box.

    Never returns holds: sampling cannot prove a universally quantified
    condition. Fails with the first offending diagonal as witness.
    """
    n = inst.n
    g = lu_solve(inst.a, inst.b_mat)
    ds = box_samples(n, samples, seed, vertex_cap)
    rhos = np.empty(ds.shape[0])
    for start in range(0, ds.shape[0], _kernels.CHUNK):
        chunk = ds[start:start + _kernels.CHUNK]
        rhos[start:start + chunk.shape[0]] = np.abs(np.linalg.eigvals(g[None] * chunk[:, None, :])).max(axis=1)
    n_vertices = (1 << n) if n <= vertex_cap else 0
    evidence = {"max_rho": float(rhos.max()) if rhos.size else 0.0,
                "vertices": n_vertices, "samples": int(samples)}
    cost = {"spectral_radii": int(rhos.size)}
    band = margin
    bad = np.flatnonzero(rhos >= 1.0 + band)
    if bad.size:
        i = int(bad[0])
        evidence["witness_rho"] = float(rhos[i])
        return Certificate(Condition.RHO_BOX_SAMPLED, Verdict.FAILS, evidence,
                           witness=tuple(float(v) for v in ds[i]), witness_kind="box_diagonal", cost=cost)
    return Certificate(Condition.RHO_BOX_SAMPLED, Verdict.UNDECIDED, evidence, cost=cost,
                       note="no sampled diagonal violates the bound")


@dataclass
class HierarchyReport:
    certificates: list
    final_verdict: FinalVerdict
    decided_by: str

    def get(self, cid):
        for c in self.certificates:
            if c.condition_id is cid:
                return c
        return None

    def to_dict(self):
        return {
            "final_verdict": self.final_verdict.value,
            "decided_by": self.decided_by,
            "certificates": [c.to_dict() for c in self.certificates],
        }


def _check_consistency(by_id, b_singular):
    def verdict(cid):
        c = by_id.get(cid)
        return None if c is None else c.verdict

    exact = [verdict(Condition.VERTEX_NS), verdict(Condition.PMATRIX_NS)]
    decided = [v for v in exact if v in (Verdict.HOLDS, Verdict.FAILS)]
    if len(set(decided)) > 1:
        raise InconsistencyDetected("VERTEX_NS and PMATRIX_NS disagree")
    if Verdict.FAILS in decided:
        for cid in SUFFICIENT:
            if verdict(cid) is Verdict.HOLDS:
                raise InconsistencyDetected(f"{cid.value} holds but the exact test fails")
    chain = [(Condition.SIGMA_PAIR_ABS_38, Condition.SIGMA_PAIR_37),
             (Condition.SIGMAN_BINVA, Condition.SIGMA1_INVAB)]
    if not b_singular:
        chain.append((Condition.SIGMA_PAIR_37, Condition.SIGMAN_BINVA))
    for strong, weak in chain:
        if verdict(strong) is Verdict.HOLDS and verdict(weak) is Verdict.FAILS:
            raise InconsistencyDetected(f"{strong.value} holds but {weak.value} fails")


def hierarchy_report(inst, n_cap_vertex=N_CAP_VERTEX, n_cap_minor=N_CAP_MINOR,
                     samples=SAMPLES, seed=0, margin=MARGIN):
    """Run every certificate, order strongest to weakest, and settle a final verdict.

    The final verdict comes from VERTEX_NS, then PMATRIX_NS, then any
    sufficient condition that holds. Raises :class:`InconsistencyDetected` if
    the certificates contradict one another.
    """
    certs = spectral_certificates(inst, margin=margin)
    try:
        certs.append(sampled_rho_box(inst, samples, seed, margin=margin))
    except SingularMatrix:
        certs.append(Certificate(Condition.RHO_BOX_SAMPLED, Verdict.UNDECIDED, {},
                                 note="A is singular"))
    certs.append(vertex_regularity_certificate(inst.a, inst.b_mat, n_cap_vertex))
    certs.append(lcp_pmatrix_certificate(inst, n_cap_minor))
    by_id = {c.condition_id: c for c in certs}
    _check_consistency(by_id, det_sign(inst.b_mat).sign == 0)

    final, decided_by = FinalVerdict.UNDECIDED, ""
    for cid in (Condition.VERTEX_NS, Condition.PMATRIX_NS):
        v = by_id[cid].verdict
        if v is not Verdict.UNDECIDED:
            final = FinalVerdict.UNIQUE if v is Verdict.HOLDS else FinalVerdict.NOT_UNIQUE
            decided_by = cid.value
            break
    else:
        for cid in SUFFICIENT:
            c = by_id.get(cid)
            if c is not None and c.verdict is Verdict.HOLDS:
                final, decided_by = FinalVerdict.UNIQUE, cid.value
                break

    ordered = sorted(certs, key=lambda c: (STRENGTH[c.condition_id],
                                           CONDITION_ORDER.index(c.condition_id)))
    return HierarchyReport(ordered, final, decided_by)


def certificate_for(cid, inst, n_cap_vertex=N_CAP_VERTEX, n_cap_minor=N_CAP_MINOR,
                    samples=SAMPLES, seed=0, margin=MARGIN):
    """Compute a single named certificate."""
    cid = Condition(cid)
    if cid is Condition.VERTEX_NS:
        return vertex_regularity_certificate(inst.a, inst.b_mat, n_cap_vertex)
    if cid is Condition.PMATRIX_NS:
        return lcp_pmatrix_certificate(inst, n_cap_minor)
    if cid is Condition.RHO_BOX_SAMPLED:
        try:
            return sampled_rho_box(inst, samples, seed, margin=margin)
        except SingularMatrix:
            return Certificate(cid, Verdict.UNDECIDED, {}, note="A is singular")
    for c in spectral_certificates(inst, margin=margin):
        if c.condition_id is cid:
            return c
    return Certificate(cid, Verdict.UNDECIDED, {}, note="not applicable: B is not the identity")
