import itertools

import numpy as np
import pytest

from gavecert import _kernels
from gavecert.certify import (
    BoxDiagonal,
    Certificate,
    Condition,
    FinalVerdict,
    GaveInstance,
    KNOWN_IMPLICATIONS,
    LcpInstance,
    Verdict,
    box_from_unit,
    box_samples,
    certificate_for,
    hierarchy_report,
    lcp_matrix,
    lcp_pmatrix_certificate,
    lex_subset_masks,
    pmatrix_certificate,
    reduce_to_lcp,
    sampled_rho_box,
    spectral_certificates,
    unit_from_box,
    vertex_regularity_certificate,
)
from gavecert.errors import InconsistencyDetected, RangeViolation, SingularMatrix, SingularSum
from gavecert.numkernel import det_sign, lu_solve, spectral_radius_nonneg

from conftest import mixed_pairs

H, F, U = Verdict.HOLDS, Verdict.FAILS, Verdict.UNDECIDED


def by_id(certs):
    return {c.condition_id: c for c in certs}


def vertices01(n):
    return [np.array(d, dtype=float) for d in itertools.product((0.0, 1.0), repeat=n)]


def sign_constant(signs):
    signs = list(signs)
    return 0 not in signs and len(set(signs)) == 1


class TestBoxDiagonal:
    def test_examples(self):
        assert box_from_unit([0.0, 0.0]).entries == (1.0, 1.0)
        assert box_from_unit([1.0, 1.0, 1.0]).entries == (-1.0, -1.0, -1.0)
        assert box_from_unit([0.5]).entries == (0.0,)

    def test_range_violation(self):
        with pytest.raises(RangeViolation):
            box_from_unit([1.5])
        with pytest.raises(RangeViolation):
            BoxDiagonal((0.0,), -2.0, 2.0)
        with pytest.raises(RangeViolation):
            box_from_unit(BoxDiagonal((0.0,), -1.0, 1.0))

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        d = tuple(rng.random(5))
        back = unit_from_box(box_from_unit(d))
        np.testing.assert_allclose(back.entries, d, atol=1e-15)
        np.testing.assert_array_equal(box_from_unit(d).matrix(), np.diag(box_from_unit(d).entries))


class TestInstance:
    def test_validation(self):
        with pytest.raises(ValueError):
            GaveInstance(np.eye(2), np.eye(3))
        with pytest.raises(ValueError):
            GaveInstance(np.eye(2), np.eye(2), [1.0])
        with pytest.raises(ValueError):
            GaveInstance([[np.inf]], [[1.0]])

    def test_ave(self):
        inst = GaveInstance.ave(2 * np.eye(3))
        assert inst.is_ave and inst.n == 3
        assert not GaveInstance(np.eye(2), 2 * np.eye(2)).is_ave


class TestReduceToLcp:
    def test_diagonal(self):
        lcp = reduce_to_lcp(GaveInstance(2 * np.eye(2), np.eye(2), [3.0, -6.0]))
        np.testing.assert_allclose(lcp.m, np.eye(2) / 3)
        np.testing.assert_allclose(lcp.q, [2.0, -4.0])

    def test_singular_sum(self):
        with pytest.raises(SingularSum):
            reduce_to_lcp(GaveInstance(np.eye(2), -np.eye(2), [1.0, 1.0]))
        assert issubclass(SingularSum, SingularMatrix)

    def test_residual_substitution(self):
        a = np.array([[3.0, 1.0], [0.0, 2.0]])
        b = np.eye(2)
        lcp = reduce_to_lcp(GaveInstance(a, b, [1.0, 0.0]))
        np.testing.assert_allclose((a + b) @ lcp.m, a - b, atol=1e-14)
        np.testing.assert_allclose((a + b) @ lcp.q, [2.0, 0.0], atol=1e-14)

    def test_mapping(self):
        x = np.array([1.5, -2.0, 0.0])
        z, w = np.abs(x) - x, np.abs(x) + x
        np.testing.assert_array_equal(LcpInstance.to_gave_solution(z, w), x)


class TestPmatrix:
    def test_examples(self):
        assert pmatrix_certificate(np.eye(3)).verdict is H
        c = pmatrix_certificate([[0.0, 0.0], [0.0, 1.0]])
        assert c.verdict is F and c.witness == (0,) and c.witness_kind == "index_set"
        assert pmatrix_certificate(np.eye(2) / 3).verdict is H
        assert pmatrix_certificate(np.eye(13)).verdict is U

    def test_lex_order(self):
        sets = [tuple(i for i in range(3) if m >> i & 1) for m in lex_subset_masks(3)]
        assert sets == sorted(sets) == [(0,), (0, 1), (0, 1, 2), (0, 2), (1,), (1, 2), (2,)]

    def test_lex_first_witness(self):
        # minors {0}, {0,1} positive; {0,1,2} negative; {1,2} also negative but later
        m = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 2.0], [0.0, 2.0, 1.0]])
        assert pmatrix_certificate(m).witness == (0, 1, 2)

    def test_witness_minor_nonpositive(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = int(rng.integers(2, 6))
            m = rng.standard_normal((n, n)) + 1.5 * np.eye(n)
            c = pmatrix_certificate(m)
            if c.verdict is F:
                idx = list(c.witness)
                assert det_sign(m[np.ix_(idx, idx)]).sign <= 0

    def test_lcp_certificate_singular_sum(self):
        c = lcp_pmatrix_certificate(GaveInstance(np.eye(2), -np.eye(2)))
        assert c.verdict is U


class TestVertex:
    def test_examples(self):
        c = vertex_regularity_certificate([[2.0]], [[1.0]])
        assert c.verdict is H and c.cost["determinants"] == 2
        c = vertex_regularity_certificate([[1.0]], [[1.0]])
        assert c.verdict is F and c.witness == (-1,)
        c = vertex_regularity_certificate(2 * np.eye(2), np.eye(2))
        assert c.verdict is H and c.cost["determinants"] == 4
        assert vertex_regularity_certificate(np.eye(15), np.eye(15)).verdict is U

    def test_sign_flip_witness(self):
        # det(A + B diag(s)) = s1 * s2 on this instance: flips at the second vertex
        c = vertex_regularity_certificate(np.zeros((2, 2)), np.eye(2))
        assert c.verdict is F
        assert c.witness == (-1, 1)
        assert c.evidence["witness_sign"] == -1

    def test_failure_requires_witness(self):
        with pytest.raises(ValueError):
            Certificate(Condition.VERTEX_NS, F)


class TestSpectral:
    def test_diagonal_all_hold(self):
        c = by_id(spectral_certificates(GaveInstance(2 * np.eye(2), np.eye(2))))
        assert all(v.verdict is H for v in c.values())
        assert c[Condition.RHO_ABS].evidence["rho_abs_invA_B"] == pytest.approx(0.5)
        assert c[Condition.SIGMA1_INVAB].evidence["sigma1_invA_B"] == pytest.approx(0.5)
        assert c[Condition.SIGMAN_BINVA].evidence["sigman_invB_A"] == pytest.approx(2.0)
        assert c[Condition.AVE_SHIFT].evidence["sigman_A_plus_I"] == pytest.approx(3.0)

    def test_separating_pair(self):
        c = by_id(spectral_certificates(GaveInstance(np.diag([3.0, 1.0]), np.diag([2.0, 0.5]))))
        assert c[Condition.SIGMAN_BINVA].verdict is H
        assert c[Condition.SIGMAN_BINVA].evidence["sigman_invB_A"] == pytest.approx(1.5)
        assert c[Condition.SIGMA_PAIR_37].verdict is F
        assert Condition.AVE_SHIFT not in c

    def test_zero_b(self):
        c = by_id(spectral_certificates(GaveInstance(np.eye(2), np.zeros((2, 2)))))
        assert c[Condition.RHO_ABS].evidence["rho_abs_invA_B"] == 0.0
        assert c[Condition.SIGMA1_INVAB].evidence["sigma1_invA_B"] == 0.0
        for cid in (Condition.RHO_ABS, Condition.SIGMA1_INVAB, Condition.SIGMA_PAIR_37,
                    Condition.SIGMA_PAIR_ABS_38):
            assert c[cid].verdict is H
        assert c[Condition.SIGMAN_BINVA].verdict is U  # B singular: not applicable

    def test_singular_a(self):
        c = by_id(spectral_certificates(GaveInstance(np.zeros((2, 2)), np.eye(2))))
        assert c[Condition.RHO_ABS].verdict is U and c[Condition.SIGMA1_INVAB].verdict is U

    def test_margin_band(self):
        # sigma_1(A^-1 B) is exactly 1: inside the undecided band
        c = by_id(spectral_certificates(GaveInstance(np.eye(2), np.eye(2))))
        assert c[Condition.SIGMA1_INVAB].verdict is U
        c = by_id(spectral_certificates(GaveInstance(np.eye(2), (1 + 1e-6) * np.eye(2))))
        assert c[Condition.SIGMA1_INVAB].verdict is F

    def test_sign_convention_invariance(self):
        # B -> -B switches between the two common sign conventions; no verdict moves
        for a, b in mixed_pairs(60, seed=8):
            inst, flipped = GaveInstance(a, b), GaveInstance(a, -b)
            r1, r2 = hierarchy_report(inst, samples=50), hierarchy_report(flipped, samples=50)
            assert r1.final_verdict == r2.final_verdict
            for cid in (Condition.RHO_ABS, Condition.SIGMA1_INVAB, Condition.SIGMAN_BINVA,
                        Condition.SIGMA_PAIR_37, Condition.SIGMA_PAIR_ABS_38, Condition.VERTEX_NS):
                assert r1.get(cid).verdict == r2.get(cid).verdict


class TestSampledRhoBox:
    def test_never_holds(self):
        c = sampled_rho_box(GaveInstance(2 * np.eye(2), np.eye(2)), samples=100)
        assert c.verdict is U and c.evidence["max_rho"] <= 0.5 + 1e-12

    def test_fails_at_vertex(self):
        c = sampled_rho_box(GaveInstance([[1.0]], [[2.0]]), samples=10)
        assert c.verdict is F
        assert c.witness == (1.0,) and c.evidence["witness_rho"] == pytest.approx(2.0)

    def test_singular_a(self):
        with pytest.raises(SingularMatrix):
            sampled_rho_box(GaveInstance(np.zeros((2, 2)), np.eye(2)))

    def test_scaled_to_rho_abs(self):
        rng = np.random.default_rng(17)
        a, b = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
        b *= 0.9 / spectral_radius_nonneg(np.abs(lu_solve(a, b)))
        inst = GaveInstance(a, b)
        assert spectral_radius_nonneg(np.abs(lu_solve(a, b))) == pytest.approx(0.9)
        c = sampled_rho_box(inst, samples=1000, seed=3)
        assert c.verdict is U and c.evidence["max_rho"] <= 0.9 + 1e-6

    def test_domination(self):
        for k, (a, b) in enumerate(mixed_pairs(80, seed=9)):
            if det_sign(a).sign == 0:
                continue
            g = lu_solve(a, b)
            bound = spectral_radius_nonneg(np.abs(g))
            ds = box_samples(a.shape[0], 100, k)
            rhos = np.abs(np.linalg.eigvals(g[None] * ds[:, None, :])).max(axis=1)
            assert rhos.max() <= bound + 1e-6
            assert sampled_rho_box(GaveInstance(a, b), 100, k).evidence["max_rho"] <= bound + 1e-6

    def test_samples_deterministic(self):
        np.testing.assert_array_equal(box_samples(3, 20, 7), box_samples(3, 20, 7))
        assert not np.array_equal(box_samples(3, 20, 7), box_samples(3, 20, 8))
        assert box_samples(3, 20, 7).shape == (8 + 20, 3)
        assert box_samples(13, 5, 0).shape == (5, 13)


class TestHierarchy:
    def test_diagonal_unique(self):
        r = hierarchy_report(GaveInstance(2 * np.eye(2), np.eye(2)))
        assert r.final_verdict is FinalVerdict.UNIQUE
        for cid in (Condition.RHO_ABS, Condition.SIGMA1_INVAB, Condition.SIGMAN_BINVA,
                    Condition.SIGMA_PAIR_37, Condition.SIGMA_PAIR_ABS_38, Condition.AVE_SHIFT):
            assert r.get(cid).verdict is H

    def test_identity_pair_not_unique(self):
        r = hierarchy_report(GaveInstance(np.eye(2), np.eye(2)))
        assert r.final_verdict is FinalVerdict.NOT_UNIQUE
        v = r.get(Condition.VERTEX_NS)
        assert v.verdict is F and v.evidence["witness_sign"] == 0
        assert det_sign(np.eye(2) + np.diag(v.witness)).sign == 0
        for c in r.certificates:
            if c.condition_id not in (Condition.VERTEX_NS, Condition.PMATRIX_NS):
                assert c.verdict is not H

    def test_separating_pair_unique(self):
        r = hierarchy_report(GaveInstance(np.diag([3.0, 1.0]), np.diag([2.0, 0.5])))
        assert r.final_verdict is FinalVerdict.UNIQUE and r.decided_by == "VERTEX_NS"
        assert r.get(Condition.SIGMAN_BINVA).verdict is H
        assert r.get(Condition.SIGMA_PAIR_37).verdict is F

    def test_order_strongest_first(self):
        r = hierarchy_report(GaveInstance.ave(3 * np.eye(3)))
        ids = [c.condition_id for c in r.certificates]
        assert ids[-2:] == [Condition.VERTEX_NS, Condition.PMATRIX_NS]
        assert ids.index(Condition.SIGMA_PAIR_ABS_38) < ids.index(Condition.SIGMA_PAIR_37)
        assert ids.index(Condition.SIGMA_PAIR_37) < ids.index(Condition.SIGMAN_BINVA)
        assert ids.index(Condition.SIGMAN_BINVA) < ids.index(Condition.SIGMA1_INVAB)
        assert ids.index(Condition.RHO_ABS) < ids.index(Condition.RHO_BOX_SAMPLED)

    def test_above_caps_falls_back_to_sufficient(self):
        r = hierarchy_report(GaveInstance(4 * np.eye(3), np.eye(3)), n_cap_vertex=2, n_cap_minor=2)
        assert r.final_verdict is FinalVerdict.UNIQUE
        assert r.decided_by == "RHO_ABS"
        r = hierarchy_report(GaveInstance(np.eye(3), np.eye(3)), n_cap_vertex=2, n_cap_minor=2)
        assert r.final_verdict is FinalVerdict.UNDECIDED

    def test_inconsistency_detected(self, monkeypatch):
        def broken(m, masks):
            return 0, np.array([-1], np.int8), np.zeros(1)
        monkeypatch.setattr(_kernels, "minor_sweep", broken)
        with pytest.raises(InconsistencyDetected):
            hierarchy_report(GaveInstance(2 * np.eye(2), np.eye(2)))

    def test_certificate_for(self):
        inst = GaveInstance(2 * np.eye(2), np.eye(2))
        for cid in Condition:
            assert certificate_for(cid, inst).condition_id is cid
        assert certificate_for("AVE_SHIFT", GaveInstance(np.eye(2), 2 * np.eye(2))).verdict is U

    def test_known_implications_are_pairs(self):
        for hold, fail in KNOWN_IMPLICATIONS:
            assert isinstance(hold, Condition) and isinstance(fail, Condition)


def test_vertex_equals_pmatrix(backend):
    """The two exact tests agree wherever the reduction exists."""
    checked = 0
    for a, b in mixed_pairs(300, seed=1):
        try:
            m = lcp_matrix(a, b)
        except SingularSum:
            continue
        assert vertex_regularity_certificate(a, b).verdict is pmatrix_certificate(m).verdict
        checked += 1
    assert checked > 250


def test_pmatrix_vs_unit_vertices():
    """Principal-minor test against the {0,1}-vertex form det(M D + I - D)."""
    rng = np.random.default_rng(21)
    holds = 0
    for _ in range(200):
        n = int(rng.integers(1, 7))
        m = rng.standard_normal((n, n)) + rng.uniform(0, 4) * np.eye(n)
        signs = [np.sign(np.linalg.det(m @ np.diag(d) + np.eye(n) - np.diag(d))) for d in vertices01(n)]
        expect = sign_constant(signs)
        assert (pmatrix_certificate(m).verdict is H) == expect
        holds += expect
        if expect:
            for _ in range(50):
                f0 = rng.random(n) * (rng.random(n) < 0.7)
                f1 = rng.random(n) * (rng.random(n) < 0.7)
                f1[(f0 + f1) == 0] = 0.5
                assert det_sign(m @ np.diag(f0) + np.diag(f1)).sign != 0
    assert 20 < holds < 180


def test_unit_box_families_and_witness_mapping():
    """A + B - 2BD and A - B + 2BD give the same verdict, with witnesses mapped by d -> 1 - d."""
    for a, b in mixed_pairs(120, seed=4, n_max=5):
        n = a.shape[0]
        cert = vertex_regularity_certificate(a, b)
        fam1 = [np.sign(np.linalg.det(a + b - 2 * b @ np.diag(d))) for d in vertices01(n)]
        fam2 = [np.sign(np.linalg.det(a - b + 2 * b @ np.diag(d))) for d in vertices01(n)]
        assert (cert.verdict is H) == sign_constant(fam1) == sign_constant(fam2)
        if cert.verdict is F:
            s = np.array(cert.witness, dtype=float)
            d = (1 - s) / 2
            ref = np.sign(np.linalg.det(a + b))
            w1 = det_sign(a + b - 2 * b @ np.diag(d)).sign
            w2 = det_sign(a - b + 2 * b @ np.diag(1 - d)).sign
            assert w1 == w2 == cert.evidence["witness_sign"]
            assert w1 == 0 or w1 != ref


def test_multiaffine_interior():
    rng = np.random.default_rng(13)
    tested = 0
    for a, b in mixed_pairs(100, seed=6):
        cert = vertex_regularity_certificate(a, b)
        if cert.verdict is not H:
            continue
        tested += 1
        ref = cert.evidence["reference_sign"]
        for _ in range(200):
            d = rng.uniform(-1, 1, a.shape[0])
            assert det_sign(a + b @ np.diag(d)).sign == ref
    assert tested > 20


def test_implication_chain():
    for a, b in mixed_pairs(300, seed=2, n_max=8):
        inst = GaveInstance(a, b)
        c = by_id(spectral_certificates(inst))
        vertex = vertex_regularity_certificate(a, b).verdict
        b_ok = det_sign(b).sign != 0
        if c[Condition.SIGMA_PAIR_ABS_38].verdict is H:
            assert c[Condition.SIGMA_PAIR_37].verdict is H
        if c[Condition.SIGMA_PAIR_37].verdict is H and b_ok:
            assert c[Condition.SIGMAN_BINVA].verdict is H
        if c[Condition.SIGMAN_BINVA].verdict is H:
            assert c[Condition.SIGMA1_INVAB].verdict is H
        for cid in (Condition.SIGMA1_INVAB, Condition.RHO_ABS, Condition.SIGMA_PAIR_37):
            if c[cid].verdict is H:
                assert vertex is H


def test_ave_shift_implies_vertex():
    rng = np.random.default_rng(30)
    for _ in range(60):
        n = int(rng.integers(1, 8))
        a = rng.standard_normal((n, n))
        a += (2.2 + np.linalg.norm(a, 2)) * np.eye(n)
        c = by_id(spectral_certificates(GaveInstance.ave(a)))
        assert c[Condition.AVE_SHIFT].verdict is H
        assert vertex_regularity_certificate(a, np.eye(n)).verdict is H


def test_zero_b_is_linear_system():
    rng = np.random.default_rng(40)
    for k in range(60):
        n = int(rng.integers(1, 7))
        a = rng.standard_normal((n, n))
        if k % 6 == 0:
            a[:, -1] = a[:, :-1].sum(axis=1) if n > 1 else 0.0
        cert = vertex_regularity_certificate(a, np.zeros((n, n)))
        assert (cert.verdict is H) == (det_sign(a).sign != 0)
