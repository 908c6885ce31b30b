import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rfdkit.characters import (Character, QuotientCharacter, build_compatible_characters, chord,
                               extend_by_zero, k0_for, nearest_root, psd_check, root_of_unity)
from rfdkit.errors import IncompatibleImages, PreconditionFailed
from rfdkit.groups import evaluate_word, group_from_config, random_word
from rfdkit.quotients import central_image, enumerate_quotient

THETA = math.sqrt(2) - 1

SIGNED_HEIS = {
    "name": "heis-x-sign",
    "generators": {"x": [[1, 1, 0], [0, 1, 0], [0, 0, 1]], "y": [[1, 0, 0], [0, 1, 1], [0, 0, 1]],
                   "s": [[-1, 0, 0], [0, -1, 0], [0, 0, -1]]},
    "center": {"generators": [[[1, 0, 1], [0, 1, 0], [0, 0, 1]], "s"], "predicate": "signed_corner",
               "entry": [1, 3], "free_rank": 1, "torsion": [2], "coords": [[1, 0], [0, 1]]},
}


def zero_ext_oracle(M, lam_angle):
    """Heisenberg zero extension read straight off the matrix entries."""
    if M[0, 1] != 0 or M[1, 2] != 0:
        return 0j
    return cmath.exp(2j * math.pi * lam_angle * int(M[0, 2]))


class TestCharacter:
    @given(st.fractions(), st.integers(-50, 50))
    def test_unit_modulus(self, q, n):
        lam = Character((q,))
        assert abs(abs(lam.value((n,))) - 1) <= 1e-12

    def test_torsion_order(self):
        lam = Character((), (6,), (5,))
        assert lam.angle((6,)) == 0 and lam.value((6,)) == 1

    def test_quarter_turns_exact(self):
        assert root_of_unity(Fraction(1, 4)) == 1j
        assert root_of_unity(Fraction(-1, 2)) == -1

    def test_config_forms(self, H):
        assert Character.from_config(H, "1/3").free == (Fraction(1, 3),)
        assert Character.from_config(H, {"free": ["0.25"]}).free == (0.25,)
        with pytest.raises(ValueError):
            Character.for_group(H, [0.1, 0.2])


class TestZeroExtension:
    def test_identity(self, H):
        assert extend_by_zero(H, Character.for_group(H), H.identity()) == 1

    def test_z_cubed(self, H, xyz):
        lam = Character.for_group(H, [Fraction(1, 4)])
        assert extend_by_zero(H, lam, xyz[2] ** 3) == -1j

    def test_outside(self, H, xyz):
        assert extend_by_zero(H, Character.for_group(H, [Fraction(1, 4)]), xyz[0]) == 0


class TestPsd:
    def test_singleton(self, H):
        res = psd_check(H, Character.for_group(H), [H.identity()])
        assert res.min_eigenvalue == pytest.approx(1.0)

    def test_e_x_z(self, H, xyz):
        x, _, z = xyz
        lam = Character.for_group(H, [Fraction(1, 4)])
        res = psd_check(H, lam, [H.identity(), x, z])
        oracle = np.array([[1, 0, 1j], [0, 1, 0], [-1j, 0, 1]])
        assert np.allclose(res.gram, oracle, atol=1e-15)
        # eigenvalues of the oracle are 0, 1, 2
        assert abs(res.min_eigenvalue) <= 1e-12 and res.passed

    @pytest.mark.parametrize("angle", [Fraction(0), Fraction(1, 4), 0.3])
    def test_seeded_sweep_against_oracle(self, H, angle):
        lam = Character.for_group(H, [angle])
        rng = np.random.default_rng(2024)
        for _ in range(40):
            F = [evaluate_word(H, random_word(H, rng, int(rng.integers(0, 6))))
                 for _ in range(int(rng.integers(1, 13)))]
            res = psd_check(H, lam, F)
            oracle = np.array([[zero_ext_oracle(s.inv() @ t, float(angle)) for t in F] for s in F])
            assert np.allclose(res.gram, oracle, atol=1e-12)
            assert res.min_eigenvalue >= -1e-9

    def test_empty(self, H):
        with pytest.raises(ValueError):
            psd_check(H, Character.for_group(H), [])


class TestK0:
    def test_trivial(self):
        for s, L in [(1, 0), (2, 3), (4, 1)]:
            assert k0_for(2 * math.pi * s * (L + 1), s, L) == 1

    def test_value(self):
        assert k0_for(0.01, 1, 0) == 629

    @given(st.floats(1e-4, 10), st.integers(1, 5), st.integers(0, 5))
    def test_monotone_and_net(self, eps, s, L):
        k = k0_for(eps, s, L)
        assert k0_for(eps / 2, s, L) >= k
        # worst case chord to the nearest k-th root is 2 sin(pi / 2k)
        assert 2 * math.sin(math.pi / (2 * k)) <= eps / (s * (L + 1)) + 1e-12

    def test_bad_input(self):
        with pytest.raises(ValueError):
            k0_for(0, 1, 0)


class TestNearestRoot:
    @given(st.floats(-3, 3, allow_nan=False), st.integers(1, 400))
    def test_matches_brute_force(self, theta, k):
        l, err = nearest_root(theta, k)
        target = cmath.exp(2j * math.pi * theta)
        best = min(abs(cmath.exp(2j * math.pi * j / k) - target) for j in range(k))
        assert err == pytest.approx(best, abs=1e-12)
        assert 0 <= l < k

    def test_tie_breaks_low(self):
        assert nearest_root(Fraction(1, 6), 3) == (0, pytest.approx(1.0))
        assert nearest_root(Fraction(1, 2), 2)[1] == 0.0

    def test_exact_zero(self):
        assert nearest_root(Fraction(1, 3), 3) == (1, 0.0)
        assert chord(Fraction(1, 3), Fraction(4, 3)) == 0.0


class TestCompatible:
    def test_rational_exact(self, H, xyz, lam_third):
        Q = enumerate_quotient(H, 3)
        chiA, chiB = build_compatible_characters(Q, Q, lam_third, 0.1, enforce_net=False)
        assert chiA.angle_of(xyz[2]) == Fraction(1, 3)
        assert chiA.approx_errors == (0.0,)
        assert chiA.angles == chiB.angles

    def test_irrational_315(self, H, xyz):
        # H mod 315 has order 315^3 > cap; the central image alone carries the characters
        C = central_image(H, 315)
        lam = Character.for_group(H, [THETA])
        chiA, chiB = build_compatible_characters(C, C, lam, 0.02, enforce_net=False)
        assert abs(chiA.value_of(xyz[2]) - cmath.exp(2j * math.pi * THETA)) <= 0.02
        assert chiA.angle_of(xyz[2]) == Fraction(nearest_root(THETA, 315)[0], 315)

    def test_strict_order_condition(self, H):
        lam = Character.for_group(H, [THETA])
        with pytest.raises(PreconditionFailed):
            build_compatible_characters(central_image(H, 315), central_image(H, 315), lam, 0.02)
        C = central_image(H, 629)
        chiA, _ = build_compatible_characters(C, C, lam, 0.02)
        assert chiA.approx_errors[0] <= 0.02

    def test_transport_through_phi(self, H, xyz, lam_third):
        z = xyz[2]
        C = central_image(H, 7)
        lam = Character.for_group(H, [Fraction(2, 7)])
        chiA, chiB = build_compatible_characters(C, C, lam, 0.1, phi=lambda g: g.inv(),
                                                 enforce_net=False)
        for k in range(7):
            assert chiB.angle_of(z ** -k) == chiA.angle_of(z ** k)

    def test_size_mismatch(self, H, lam_third):
        with pytest.raises(IncompatibleImages):
            build_compatible_characters(central_image(H, 3), central_image(H, 6), lam_third, 0.1,
                                        enforce_net=False)

    def test_not_well_defined(self, H, lam_third):
        with pytest.raises(IncompatibleImages):
            build_compatible_characters(central_image(H, 3), central_image(H, 9), lam_third, 0.1,
                                        enforce_net=False)

    def test_torsion_collapse(self):
        G = group_from_config(SIGNED_HEIS)
        lam = Character.for_group(G, [Fraction(1, 3)], [1])
        with pytest.raises(PreconditionFailed):
            build_compatible_characters(central_image(G, 2), central_image(G, 2), lam, 0.1,
                                        enforce_net=False)
        C = central_image(G, 3)
        chi, _ = build_compatible_characters(C, C, lam, 0.1, enforce_net=False)
        assert chi.angle_of(G.generator("s")) == Fraction(1, 2)

    @given(st.integers(1, 40), st.fractions(0, 1, max_denominator=50))
    def test_multiplicative_and_unital(self, m, q):
        from rfdkit.groups import heisenberg
        H = heisenberg()
        C = central_image(H, m)
        chi, _ = build_compatible_characters(C, C, Character.for_group(H, [q]), 1.0,
                                             enforce_net=False)
        assert chi.check_multiplicative()
        assert chi.value_of(H.identity()) == 1

    def test_angle_count_checked(self, H):
        with pytest.raises(ValueError):
            QuotientCharacter(central_image(H, 3), [Fraction(0)])
