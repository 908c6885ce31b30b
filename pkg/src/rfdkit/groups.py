"""Concrete matrix groups with a designated central subgroup.

A :class:`GroupSpec` bundles named generators, the central subgroup ``C``
(generators, a membership test, and a declared decomposition
``C = Z^s x torsion``), and validates the whole description on construction.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .errors import BasisError, ConfigError, GroupSpecError, UnknownGenerator
from .exact import ExactMatrix, ModInt, PLocal, Ring

PREDICATES = ("corner", "signed_corner", "trivial")


@dataclass(frozen=True)
class CenterPredicate:
    """Shape test for membership in ``C`` plus the coordinate map.

    ``corner``         matrices ``I + c*E_ij`` with ``c`` integral; one free
                       coordinate ``c / unit``.
    ``signed_corner``  matrices ``±(I + c*E_ij)``; coordinates
                       ``(c / unit, 0 or 1)`` against a free direction and
                       the order-2 torsion direction ``-I``.
    ``trivial``        only the identity; no coordinates.
    """

    kind: str
    entry: tuple[int, int] = (0, 0)
    unit: int = 1

    def __post_init__(self):
        if self.kind not in PREDICATES:
            raise GroupSpecError(f"unknown predicate {self.kind!r}; choose from {PREDICATES}")
        if self.kind != "trivial" and self.entry[0] >= self.entry[1]:
            raise GroupSpecError("corner entry must lie strictly above the diagonal")
        if self.unit == 0:
            raise GroupSpecError("unit must be nonzero")

    def _split(self, g: ExactMatrix):
        """Return ``(sign, c)`` if ``g = sign * (I + c E_ij)`` with c integral, else None."""
        ring = g.ring
        one, zero = ring.one(), ring.zero()
        signs = (1, -1) if self.kind == "signed_corner" else (1,)
        i, j = self.entry
        for sign in signs:
            h = g if sign == 1 else ExactMatrix(ring, g.n, tuple(-v for v in g.entries))
            ok = True
            for a in range(g.n):
                for b in range(g.n):
                    if (a, b) == (i, j):
                        continue
                    if h[a, b] != (one if a == b else zero):
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                continue
            c = h[i, j]
            if isinstance(c, PLocal):
                if not c.is_integral():
                    return None
                c = c.num
            elif isinstance(c, ModInt):
                c = c.residue
            return sign, c
        return None

    def contains(self, g: ExactMatrix) -> bool:
        if self.kind == "trivial":
            return g.is_identity()
        return self._split(g) is not None

    def coordinates(self, g: ExactMatrix) -> tuple[int, ...]:
        if self.kind == "trivial":
            if not g.is_identity():
                raise BasisError("element is not in C")
            return ()
        split = self._split(g)
        if split is None:
            raise BasisError("element is not in C")
        sign, c = split
        if c % self.unit:
            raise BasisError(f"corner value {c} is not a multiple of the basis unit {self.unit}")
        free = c // self.unit
        if self.kind == "corner":
            return (free,)
        return (free, 0 if sign == 1 else 1)


@dataclass(frozen=True)
class GroupWord:
    """A word ``g1^e1 g2^e2 ...`` in named generators; zero exponents are dropped."""

    letters: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple((n, int(e)) for n, e in self.letters if e != 0))

    @classmethod
    def parse(cls, text: str) -> GroupWord:
        """Parse ``"x y^-1 z^3"``; an empty string is the identity."""
        letters = []
        for tok in text.split():
            m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)(?:\^(-?\d+))?", tok)
            if not m:
                raise ValueError(f"bad word token {tok!r}")
            letters.append((m.group(1), int(m.group(2) or 1)))
        return cls(tuple(letters))

    def __add__(self, other: GroupWord) -> GroupWord:
        return GroupWord(self.letters + other.letters)

    def inverse(self) -> GroupWord:
        return GroupWord(tuple((n, -e) for n, e in reversed(self.letters)))

    def __str__(self):
        return " ".join(n if e == 1 else f"{n}^{e}" for n, e in self.letters)


@dataclass(frozen=True)
class GroupSpec:
    name: str
    ring: Ring
    generators: tuple[tuple[str, ExactMatrix], ...]
    c_generators: tuple[tuple[str, ExactMatrix], ...]
    predicate: CenterPredicate
    free_rank: int
    torsion: tuple[int, ...]
    c_basis: tuple[ExactMatrix, ...]
    c_coords: tuple[tuple[int, ...], ...]
    _gens: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_gens", dict(self.generators))
        self._validate()

    # -- accessors ---------------------------------------------------------
    @property
    def n(self) -> int:
        return self.generators[0][1].n

    @property
    def gen_names(self) -> list[str]:
        return [name for name, _ in self.generators]

    def generator(self, name: str) -> ExactMatrix:
        try:
            return self._gens[name]
        except KeyError:
            raise UnknownGenerator(f"{self.name} has no generator {name!r}") from None

    def identity(self) -> ExactMatrix:
        return ExactMatrix.identity(self.n, self.ring)

    def in_center(self, g: ExactMatrix) -> bool:
        return self.predicate.contains(g)

    def c_coordinates(self, g: ExactMatrix) -> tuple[int, ...]:
        return self.predicate.coordinates(g)

    def from_c_coordinates(self, coords: Sequence[int]) -> ExactMatrix:
        g = self.identity()
        for b, a in zip(self.c_basis, coords):
            if a:
                g = g @ (b ** a)
        return g

    # -- construction checks ----------------------------------------------
    def _validate(self):
        if not self.generators:
            raise GroupSpecError("a group needs at least one generator")
        n = self.n
        for name, g in self.generators + self.c_generators:
            if g.n != n or g.ring != self.ring:
                raise GroupSpecError(f"{name}: dimension or ring differs from the group")
            if not g.is_upper_triangular():
                raise GroupSpecError(f"{name}: only upper-triangular elements are supported")
            g.inv()  # diagonal must consist of units
        rank = self.free_rank + len(self.torsion)
        if len(self.c_basis) != rank:
            raise GroupSpecError(f"basis has {len(self.c_basis)} elements, structure needs {rank}")
        if len(self.c_coords) != len(self.c_generators):
            raise GroupSpecError("one coordinate tuple per C-generator is required")
        for cname, c in self.c_generators:
            for gname, g in self.generators:
                if c @ g != g @ c:
                    raise GroupSpecError(f"C-generator {cname} does not commute with {gname}")
        for b in self.c_basis:
            if not self.in_center(b):
                raise GroupSpecError("basis element rejected by the C predicate")
        for (cname, c), coords in zip(self.c_generators, self.c_coords):
            if len(coords) != rank:
                raise GroupSpecError(f"{cname}: coordinate tuple has the wrong length")
            if self.from_c_coordinates(coords) != c:
                raise GroupSpecError(f"{cname} does not equal its declared basis expression")
            if tuple(self.c_coordinates(c)) != self._normalize(coords):
                raise GroupSpecError(f"{cname}: predicate coordinates disagree with the declaration")
        for k, order in enumerate(self.torsion):
            t = self.c_basis[self.free_rank + k]
            if order < 1 or not (t ** order).is_identity():
                raise GroupSpecError(f"torsion basis element {k} does not have order dividing {order}")
            if any((t ** e).is_identity() for e in range(1, order)):
                raise GroupSpecError(f"torsion basis element {k} has order smaller than {order}")
        smoke = [c for _, c in self.c_generators] + [c.inv() for _, c in self.c_generators]
        for length in range(1, 4):
            for word in itertools.product(smoke, repeat=length):
                g = word[0]
                for h in word[1:]:
                    g = g @ h
                if not self.in_center(g):
                    raise GroupSpecError("C predicate rejects a product of C-generators")

    def _normalize(self, coords: Sequence[int]) -> tuple[int, ...]:
        s = self.free_rank
        return tuple(coords[:s]) + tuple(a % d for a, d in zip(coords[s:], self.torsion))


def evaluate_word(G: GroupSpec, w: GroupWord | str) -> ExactMatrix:
    if isinstance(w, str):
        w = GroupWord.parse(w)
    g = G.identity()
    for name, e in w.letters:
        g = g @ (G.generator(name) ** e)
    return g


def random_word(G: GroupSpec, rng, length: int, max_exp: int = 2) -> GroupWord:
    """Seeded random word (``rng`` is a ``numpy.random.Generator``)."""
    names = G.gen_names
    letters = []
    for _ in range(length):
        e = int(rng.integers(1, max_exp + 1)) * (1 if rng.random() < 0.5 else -1)
        letters.append((names[int(rng.integers(len(names)))], e))
    return GroupWord(tuple(letters))


# -- built-in groups ----------------------------------------------------------

def heisenberg() -> GroupSpec:
    """Upper unitriangular 3x3 integer matrices, ``C = <z>`` the center."""
    E = ExactMatrix.elementary
    x, y, z = E(3, 0, 1), E(3, 1, 2), E(3, 0, 2)
    return GroupSpec(
        name="heisenberg",
        ring=Ring.integers(),
        generators=(("x", x), ("y", y), ("z", z)),
        c_generators=(("z", z),),
        predicate=CenterPredicate("corner", (0, 2)),
        free_rank=1,
        torsion=(),
        c_basis=(z,),
        c_coords=((1,),),
    )


def _isprime(p: int) -> bool:
    from sympy import isprime

    return bool(isprime(p))


def abels(p: int) -> GroupSpec:
    """Abels' 4x4 upper-triangular group over Z[1/p] with diagonal (1, p^k, p^n, 1).

    ``C = N`` is the corner subgroup ``I + x E_14`` with integral ``x``.
    """
    if not isinstance(p, int) or p < 2 or not _isprime(p):
        raise GroupSpecError(f"p must be a prime, got {p!r}")
    ring = Ring.localized(p)
    gens = [
        ("d1", ExactMatrix.diagonal([1, p, 1, 1], ring)),
        ("d2", ExactMatrix.diagonal([1, 1, p, 1], ring)),
    ]
    for i, j in itertools.combinations(range(4), 2):
        gens.append((f"u{i + 1}{j + 1}", ExactMatrix.elementary(4, i, j, 1, ring)))
    u14 = dict(gens)["u14"]
    return GroupSpec(
        name=f"abels({p})",
        ring=ring,
        generators=tuple(gens),
        c_generators=(("u14", u14),),
        predicate=CenterPredicate("corner", (0, 3)),
        free_rank=1,
        torsion=(),
        c_basis=(u14,),
        c_coords=((1,),),
    )


BUILTINS = {"heisenberg": heisenberg, "abels": abels}


def builtin_group(name: str, p: int | None = None) -> GroupSpec:
    if name == "abels":
        return abels(2 if p is None else p)
    if name in BUILTINS:
        return BUILTINS[name]()
    raise ConfigError(f"unknown built-in group {name!r}")


# -- config files ---------------------------------------------------------------

def group_from_config(cfg: Mapping) -> GroupSpec:
    """Build a group from a mapping (the decoded JSON config schema).

    Keys: ``name``; ``ring`` (``"Z"`` or ``"Z[1/p]"``) with ``p``;
    ``generators`` mapping names to row lists of ints or ``"a/b"`` strings;
    ``center`` with ``generators`` (names), ``predicate``
    (``corner``/``signed_corner``/``trivial``), ``entry`` (1-based pair),
    ``unit``, ``free_rank``, ``torsion``, ``basis`` (names or row lists) and
    ``coords`` (one list per C-generator).
    """
    try:
        ring_name = cfg.get("ring", "Z")
        if ring_name == "Z":
            ring = Ring.integers()
        elif ring_name in ("Z[1/p]", "Zp"):
            ring = Ring.localized(int(cfg["p"]))
        else:
            raise ConfigError(f"unsupported ring {ring_name!r}")
        gens = tuple((str(k), ExactMatrix.from_rows(v, ring)) for k, v in cfg["generators"].items())
        lookup = dict(gens)

        def element(ref):
            if isinstance(ref, str):
                if ref not in lookup:
                    raise ConfigError(f"unknown generator {ref!r}")
                return lookup[ref]
            return ExactMatrix.from_rows(ref, ring)

        center = cfg["center"]
        entry = center.get("entry", [1, 1])
        pred = CenterPredicate(
            center["predicate"], (int(entry[0]) - 1, int(entry[1]) - 1), int(center.get("unit", 1))
        )
        cgens = tuple(
            (ref if isinstance(ref, str) else f"c{k}", element(ref))
            for k, ref in enumerate(center.get("generators", []))
        )
        basis = tuple(element(ref) for ref in center.get("basis", center.get("generators", [])))
        return GroupSpec(
            name=str(cfg.get("name", "custom")),
            ring=ring,
            generators=gens,
            c_generators=cgens,
            predicate=pred,
            free_rank=int(center.get("free_rank", 0)),
            torsion=tuple(int(d) for d in center.get("torsion", [])),
            c_basis=basis,
            c_coords=tuple(tuple(int(a) for a in c) for c in center["coords"]),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed group config: {exc!r}") from exc


def load_group(path: str | Path) -> GroupSpec:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read group config {path}: {exc}") from exc
    return group_from_config(cfg)
