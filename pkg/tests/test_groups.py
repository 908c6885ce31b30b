import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rfdkit.errors import BasisError, ConfigError, GroupSpecError, UnknownGenerator
from rfdkit.exact import ExactMatrix, Ring
from rfdkit.groups import (GroupWord, abels, builtin_group, evaluate_word, group_from_config,
                           load_group, random_word)

Z2 = Ring.localized(2)


def commutator(a, b):
    return a @ b @ a.inv() @ b.inv()


class TestHeisenberg:
    def test_commutator_is_z(self, H, xyz):
        x, y, z = xyz
        assert commutator(x, y) == z

    def test_z_central(self, xyz):
        x, y, z = xyz
        assert z @ x == x @ z and z @ y == y @ z

    def test_predicate(self, H, xyz):
        x, _, z = xyz
        assert H.in_center(z ** 5)
        assert not H.in_center(x)
        assert H.c_coordinates(z ** -4) == (-4,)
        with pytest.raises(BasisError):
            H.c_coordinates(x)


class TestAbels:
    def test_corner_fixed_by_g0(self, A2):
        g0 = ExactMatrix.diagonal([1, 2, 2, 1], Z2)
        u14 = A2.generator("u14")
        assert g0 @ u14 @ g0.inv() == u14

    def test_predicate_integrality(self, A2):
        assert A2.in_center(ExactMatrix.elementary(4, 0, 3, 7, Z2))
        assert not A2.in_center(ExactMatrix.elementary(4, 0, 3, Z2.coerce("1/2"), Z2))

    @pytest.mark.parametrize("k", [k for k in range(-6, 7) if k])
    def test_g0_powers_avoid_center(self, A2, k):
        g0 = ExactMatrix.diagonal([1, 2, 2, 1], Z2)
        assert not A2.in_center(g0 ** k)

    @pytest.mark.parametrize("a", [Fraction(1), Fraction(1, 2), Fraction(1, 4)])
    def test_divisibility_mechanism(self, A2, a):
        g = ExactMatrix.elementary(4, 0, 3, Z2.coerce(a), Z2)
        assert g ** 2 == ExactMatrix.elementary(4, 0, 3, Z2.coerce(2 * a), Z2)

    def test_centrality(self, A2):
        for _, c in A2.c_generators:
            for _, g in A2.generators:
                assert commutator(c, g).is_identity()

    @pytest.mark.parametrize("p", [1, 4, 9])
    def test_rejects_non_prime(self, p):
        with pytest.raises(GroupSpecError):
            abels(p)


class TestWords:
    def test_empty_word(self, H):
        assert evaluate_word(H, GroupWord()).is_identity()

    def test_commutator_word(self, H, xyz):
        assert evaluate_word(H, "x y x^-1 y^-1") == xyz[2]

    def test_power(self, H):
        assert evaluate_word(H, "z^3") == ExactMatrix.elementary(3, 0, 2, 3)

    def test_unknown_name(self, H):
        with pytest.raises(UnknownGenerator):
            evaluate_word(H, "w")

    def test_zero_exponents_dropped(self):
        assert GroupWord.parse("x^0 y") == GroupWord.parse("y")

    @given(st.integers(0, 2 ** 32), st.integers(0, 8), st.integers(0, 8))
    def test_monoid_homomorphism(self, seed, n1, n2):
        for G in (builtin_group("heisenberg"), builtin_group("abels", 3)):
            rng = np.random.default_rng(seed)
            w1, w2 = random_word(G, rng, n1), random_word(G, rng, n2)
            assert evaluate_word(G, w1 + w2) == evaluate_word(G, w1) @ evaluate_word(G, w2)
            assert evaluate_word(G, w1.inverse()) == evaluate_word(G, w1).inv()


HEIS_CONFIG = {
    "name": "heis-2z",
    "ring": "Z",
    "generators": {"x": [[1, 1, 0], [0, 1, 0], [0, 0, 1]],
                   "y": [[1, 0, 0], [0, 1, 1], [0, 0, 1]]},
    "center": {"generators": [[[1, 0, 2], [0, 1, 0], [0, 0, 1]]], "predicate": "corner",
               "entry": [1, 3], "unit": 1, "free_rank": 1,
               "basis": [[[1, 0, 1], [0, 1, 0], [0, 0, 1]]], "coords": [[2]]},
}


class TestConfig:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps(HEIS_CONFIG))
        G = load_group(path)
        assert G.name == "heis-2z" and G.free_rank == 1
        assert G.c_coordinates(G.c_generators[0][1]) == (2,)

    def test_inconsistent_coords_rejected(self):
        bad = json.loads(json.dumps(HEIS_CONFIG))
        bad["center"]["coords"] = [[3]]
        with pytest.raises(GroupSpecError):
            group_from_config(bad)

    def test_non_central_rejected(self):
        bad = json.loads(json.dumps(HEIS_CONFIG))
        bad["center"]["generators"] = ["x"]
        bad["center"]["entry"] = [1, 2]
        bad["center"]["basis"] = ["x"]
        bad["center"]["coords"] = [[1]]
        with pytest.raises(GroupSpecError):
            group_from_config(bad)

    def test_missing_keys(self):
        with pytest.raises(ConfigError):
            group_from_config({"generators": {}})
