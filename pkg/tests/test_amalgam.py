import numpy as np
import pytest
from hypothesis import given, strategies as st

from rfdkit.amalgam import (Amalgam, AmalgamWord, Budget, HNNWord, abels_experiment,
                            abels_witness, britton_reduce, embed_hnn_word, evaluate_amalgam,
                            evaluate_hnn, hnn_to_amalgam_transfer, is_reduced, reduce_amalgam,
                            seeded_monomial, seeded_unitary, separate_amalgam, separate_hnn)
from rfdkit.characters import Character
from rfdkit.errors import (AmalgamDisagreement, CommutationFailure, DimensionMismatch,
                           PreconditionFailed)
from rfdkit.groups import heisenberg
from rfdkit.repkit import ConjugateRep, FinDimRep, Monomial, exact_level_rep, op_distance_to_identity
from fractions import Fraction

HEIS = heisenberg()
AM = Amalgam(HEIS, HEIS)
LETTERS = ["x", "y", "z", "x^-1", "y^-1", "z^-1", "x*y", "x^2", "y*z", "x*z^-1"]
HNN_TOKENS = ["t", "t^-1", "t^2", "x", "y", "z", "x^-1", "z^-1", "y^2", "x*z"]


def dense(M):
    return M.to_dense() if isinstance(M, Monomial) else M


amalgam_words = st.lists(st.tuples(st.sampled_from("LR"), st.sampled_from(LETTERS)), max_size=7).map(
    lambda ls: AmalgamWord.parse(AM, " ".join(f"{t}:{g}" for t, g in ls)))
hnn_words = st.lists(st.sampled_from(HNN_TOKENS), max_size=8).map(
    lambda ts: HNNWord.parse(HEIS, " ".join(ts)))


@pytest.fixture(scope="module")
def pair3(lam_third):
    rho = exact_level_rep(HEIS, lam_third, 3)
    return rho, ConjugateRep(rho, seeded_monomial(rho.dim, (0, 3, 0, 1)))


class TestReduceAmalgam:
    def test_cancel(self):
        assert len(reduce_amalgam(AM, AmalgamWord.parse(AM, "L:x L:x^-1"))) == 0

    def test_absorb_right(self, xyz):
        _, y, z = xyz
        red = reduce_amalgam(AM, AmalgamWord.parse(AM, "L:z R:y"))
        assert red.letters == (("R", z @ y),)

    def test_absorb_left_at_end(self, xyz):
        x, _, z = xyz
        red = reduce_amalgam(AM, AmalgamWord.parse(AM, "L:x R:z"))
        assert red.letters == (("L", x @ z),)

    def test_alternating_kept(self):
        assert len(reduce_amalgam(AM, AmalgamWord.parse(AM, "L:x R:y L:x"))) == 3

    def test_phi_applied_across_factors(self, xyz):
        x, _, z = xyz
        A = Amalgam(HEIS, HEIS, phi=lambda c: c.inv(), phi_inv=lambda c: c.inv())
        red = reduce_amalgam(A, AmalgamWord.parse(A, "L:z R:x"))
        assert red.letters == (("R", z.inv() @ x),)

    @given(amalgam_words)
    def test_idempotent_and_reduced(self, w):
        red = reduce_amalgam(AM, w)
        assert reduce_amalgam(AM, red) == red
        assert is_reduced(AM, red)

    @given(amalgam_words, st.integers(0, 3))
    def test_evaluation_compatible(self, pair3, w, seed):
        rho, _ = pair3
        twisted = ConjugateRep(rho, seeded_monomial(rho.dim, (seed, 1)))
        a = dense(evaluate_amalgam(AM, rho, twisted, w))
        b = dense(evaluate_amalgam(AM, rho, twisted, reduce_amalgam(AM, w)))
        assert np.allclose(a, b, atol=1e-9)


class TestEvaluateAmalgam:
    def test_empty(self, pair3):
        assert evaluate_amalgam(AM, *pair3, AmalgamWord()).is_identity()

    def test_central_letter_same_on_both_sides(self, pair3):
        a = evaluate_amalgam(AM, *pair3, AmalgamWord.parse(AM, "L:z"))
        b = evaluate_amalgam(AM, *pair3, AmalgamWord.parse(AM, "R:z"))
        assert a == b

    def test_insert_across_seam(self, pair3):
        w1 = AmalgamWord.parse(AM, "L:x R:y L:y")
        w2 = AmalgamWord.parse(AM, "L:x*z^2 R:z^-2*y L:y")
        assert np.allclose(dense(evaluate_amalgam(AM, *pair3, w1)),
                           dense(evaluate_amalgam(AM, *pair3, w2)), atol=1e-9)

    def test_disagreement(self, pair3):
        other = exact_level_rep(HEIS, Character.for_group(HEIS, [Fraction(2, 3)]), 3)
        with pytest.raises(AmalgamDisagreement):
            evaluate_amalgam(AM, pair3[0], other, AmalgamWord())

    def test_dimension_mismatch(self, pair3):
        small = exact_level_rep(HEIS, Character.for_group(HEIS, [Fraction(1, 2)]), 2)
        with pytest.raises(DimensionMismatch):
            evaluate_amalgam(AM, pair3[0], small, AmalgamWord())


class TestBritton:
    @pytest.mark.parametrize("text,form,length", [
        ("t^-1 z t", 6, 1),
        ("t^-1 x t x^-1", 4, 4),
        ("", 6, 0),
        ("t^-1 z t z^-1", 6, 0),
        ("t t^-1", 6, 0),
        ("t", 5, 1),
        ("z t^3", 5, 2),
        ("t z", 5, 2),
        ("x t y t^-1", 1, 4),
        ("t x t", 2, 3),
        ("x t y", 3, 3),
        ("x t^2", 1, 2),
        ("x", 3, 1),
    ])
    def test_forms(self, text, form, length):
        red = britton_reduce(HEIS, HNNWord.parse(HEIS, text))
        assert (red.form, len(red.word)) == (form, length)
        assert red.trivial == (length == 0)

    @given(hnn_words)
    def test_idempotent_and_pinch_free(self, w):
        red = britton_reduce(HEIS, w)
        assert britton_reduce(HEIS, red.word) == red
        L = red.word.letters
        for i in range(1, len(L) - 1):
            if L[i][0] == "g" and L[i - 1][0] == "t" and L[i + 1][0] == "t":
                assert not HEIS.in_center(L[i][1])

    @given(hnn_words, st.integers(0, 2))
    def test_evaluation_compatible(self, pair3, w, seed):
        rho = pair3[0]
        U = seeded_unitary(rho.dim, (seed,))
        a = dense(evaluate_hnn(HEIS, rho, U, w))
        b = dense(evaluate_hnn(HEIS, rho, U, britton_reduce(HEIS, w).word))
        assert np.allclose(a, b, atol=1e-9)


class _DiagonalOnC(FinDimRep):
    dim = 2

    def __call__(self, g):
        return np.diag([1, -1]).astype(complex) if HEIS.in_center(g) and not g.is_identity() else np.eye(2)


class TestEvaluateHNN:
    def test_cancel(self, pair3):
        U = seeded_unitary(9, (1,))
        assert np.allclose(dense(evaluate_hnn(HEIS, pair3[0], U, HNNWord.parse(HEIS, "t t^-1"))),
                           np.eye(9), atol=1e-12)

    def test_pinch(self, pair3, xyz):
        rho = pair3[0]
        U = seeded_unitary(9, (2,))
        M = evaluate_hnn(HEIS, rho, U, HNNWord.parse(HEIS, "t^-1 z t"))
        assert np.allclose(M, rho.matrix(xyz[2]), atol=1e-12)

    def test_generic_nontrivial(self, pair3):
        U = seeded_unitary(9, (3,))
        M = evaluate_hnn(HEIS, pair3[0], U, HNNWord.parse(HEIS, "t^-1 x t x^-1"))
        assert op_distance_to_identity(M) > 0.1

    def test_commutation_failure(self):
        U = np.array([[0, 1], [1, 0]], dtype=complex)
        with pytest.raises(CommutationFailure):
            evaluate_hnn(HEIS, _DiagonalOnC(), U, HNNWord())

    def test_dimension(self, pair3):
        with pytest.raises(DimensionMismatch):
            evaluate_hnn(HEIS, pair3[0], np.eye(2), HNNWord())

    def test_soundness_corpus(self, pair3):
        """Nontrivial Britton forms are almost never sent to I by generic unitaries."""
        rng = np.random.default_rng(99)
        rho = pair3[0]
        flagged = []
        for k in range(30):
            w = HNNWord.parse(HEIS, " ".join(rng.choice(HNN_TOKENS, size=5)))
            red = britton_reduce(HEIS, w)
            if red.trivial:
                continue
            norms = [op_distance_to_identity(evaluate_hnn(HEIS, rho, seeded_unitary(9, (k, s)), red.word))
                     for s in range(3)]
            if max(norms) < 1e-9:
                flagged.append(red.word.describe())
        # only words whose group part dies mod 3 can be flagged; none do in this corpus
        assert flagged == []


class TestTransfer:
    def test_identity_unitary(self, pair3, xyz):
        rho, gamma = hnn_to_amalgam_transfer(pair3[0], np.eye(9), [xyz[2]])
        assert np.allclose(rho.matrix(xyz[0]), gamma.matrix(xyz[0]))

    def test_seeded(self, pair3, xyz):
        gamma = pair3[0]
        U = seeded_unitary(9, (5,))
        rho, _ = hnn_to_amalgam_transfer(gamma, U, [xyz[2]])
        x = xyz[0]
        M = evaluate_amalgam(AM, rho, gamma, AmalgamWord.parse(AM, "L:x R:x^-1"))
        want = U.conj().T @ gamma.matrix(x) @ U @ gamma.matrix(x.inv())
        assert np.allclose(dense(M), want, atol=1e-12)

    def test_noncommuting(self):
        with pytest.raises(CommutationFailure):
            hnn_to_amalgam_transfer(_DiagonalOnC(), np.array([[0, 1], [1, 0]]), [HEIS.generator("z")])


class TestEmbed:
    def test_single_t(self, xyz):
        y = xyz[1]
        assert embed_hnn_word(HEIS, HNNWord.parse(HEIS, "t"), y).letters == (("R", y),)

    def test_heisenberg_conjugate(self, xyz):
        x, y, _ = xyz
        emb = embed_hnn_word(HEIS, HNNWord.parse(HEIS, "t x t^-1"), y)
        assert emb.letters == (("R", y), ("L", x), ("R", y.inv()))

    def test_abels_witness(self):
        G, x0, g0, w = abels_witness(2)
        emb = embed_hnn_word(G, w, g0)
        assert len(emb) == 4 and is_reduced(Amalgam(G, G), emb)
        assert [t for t, _ in emb.letters] == ["R", "L", "R", "L"]

    def test_power_precondition(self, xyz):
        with pytest.raises(PreconditionFailed):
            embed_hnn_word(HEIS, HNNWord.parse(HEIS, "t x t^-1"), xyz[2])

    @given(hnn_words)
    def test_preserves_nontriviality(self, w):
        red = britton_reduce(HEIS, w)
        emb = embed_hnn_word(HEIS, red.word, HEIS.generator("y"))
        assert is_reduced(AM, emb)
        if red.form in (1, 2, 3, 4, 5):
            assert len(emb) >= 1


class TestSeparation:
    def test_x_x(self, lam_third):
        rep = separate_amalgam(AM, AmalgamWord.parse(AM, "L:x R:x"), lam_third)
        assert rep.outcome == "separated" and rep.success["modulus"] <= 16

    def test_central_letter(self, lam_third):
        rep = separate_amalgam(AM, AmalgamWord.parse(AM, "L:z"), lam_third)
        assert rep.success["norm"] == pytest.approx(np.sqrt(3))

    def test_needs_twist(self, lam_third):
        rep = separate_amalgam(AM, AmalgamWord.parse(AM, "L:x R:x^-1"), lam_third)
        assert rep.success["seed"] >= 1
        untwisted = [a for a in rep.attempts if a["seed"] == 0]
        assert untwisted and all(a["norm"] == 0.0 for a in untwisted)

    def test_identity_word(self, lam_third):
        rep = separate_amalgam(AM, AmalgamWord.parse(AM, "L:x R:z L:x^-1 R:z^-1"), lam_third)
        assert rep.outcome == "identity" and rep.attempts == []

    def test_inconclusive_within_budget(self, lam_third):
        rep = separate_amalgam(AM, AmalgamWord.parse(AM, "L:x R:x^-1"), lam_third,
                               budget=Budget(max_modulus=3, seeds=1))
        assert rep.outcome == "inconclusive"

    def test_deterministic_and_worker_independent(self, lam_third):
        w = AmalgamWord.parse(AM, "L:x R:y L:x^-1 R:y^-1")
        lam = Character.for_group(HEIS, [0.1234])
        runs = [separate_amalgam(AM, w, lam, budget=Budget(max_modulus=8, levels=2), workers=k).dumps()
                for k in (1, 1, 3)]
        assert runs[0] == runs[1] == runs[2]

    def test_hnn(self, lam_third):
        rep = separate_hnn(HEIS, HNNWord.parse(HEIS, "t^-1 x t x^-1"), lam_third)
        assert rep.outcome == "separated"
        assert rep.success["modulus"] <= 16 and rep.success["seed"] < 8

    def test_hnn_identity(self, lam_third):
        rep = separate_hnn(HEIS, HNNWord.parse(HEIS, "t z t^-1 z^-1"), lam_third)
        assert rep.outcome == "identity" and rep.attempts == []

    def test_hnn_stable_letter(self, lam_third):
        rep = separate_hnn(HEIS, HNNWord.parse(HEIS, "t"), lam_third)
        assert rep.outcome == "separated"

    def test_abels_small(self):
        rep = abels_experiment(2, [3, 5, 7], Budget(max_modulus=3, seeds=2))
        assert rep.probe["inside"] == 3
        assert rep.separation.successes == 0
        assert rep.not_attempted == [5, 7]
        assert rep.exit_code == 2

    def test_abels_rejects_even(self):
        with pytest.raises(PreconditionFailed):
            abels_experiment(2, [3, 4])
