"""Characters of the central subgroup and their finite approximations.

Angles are stored as turns: the value at angle ``q`` is ``exp(2*pi*i*q)``.
Rational angles are kept as :class:`~fractions.Fraction` so that equality
of character values can be decided exactly; irrational targets are floats.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import IncompatibleImages, PreconditionFailed, RfdError
from .exact import ExactMatrix
from .groups import GroupSpec
from .quotients import CentralImage, FiniteQuotient

_QUARTER_TURNS = {Fraction(0): 1 + 0j, Fraction(1, 4): 1j, Fraction(1, 2): -1 + 0j,
                  Fraction(3, 4): -1j}


def frac_part(angle):
    if isinstance(angle, Fraction):
        return angle - math.floor(angle)
    return angle - math.floor(angle)


def root_of_unity(angle) -> complex:
    """``exp(2*pi*i*angle)``, exact at multiples of a quarter turn."""
    a = frac_part(angle)
    if isinstance(a, Fraction) and a in _QUARTER_TURNS:
        return _QUARTER_TURNS[a]
    return cmath.exp(2j * math.pi * float(a))


def chord(a, b) -> float:
    """``|exp(2*pi*i*a) - exp(2*pi*i*b)|``; exactly 0.0 for equal rational angles."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        d = frac_part(a - b)
        if d == 0:
            return 0.0
        return abs(2 * math.sin(math.pi * float(d)))
    d = float(a) - float(b)
    d -= round(d)
    return abs(2 * math.sin(math.pi * d))


def _parse_angle(v):
    if isinstance(v, (Fraction, int)):
        return Fraction(v)
    if isinstance(v, float):
        return v
    text = str(v).strip()
    if "/" in text or text.lstrip("-").isdigit():
        return Fraction(text)
    return float(text)


@dataclass(frozen=True)
class Character:
    """One-dimensional unitary character of ``Z^s x prod Z/d_j``.

    ``free`` holds one angle per free direction; ``torsion_exps[j]`` is the
    integer ``e`` with value ``exp(2*pi*i*e/d_j)``.
    """

    free: tuple = ()
    torsion_orders: tuple[int, ...] = ()
    torsion_exps: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "free", tuple(_parse_angle(v) for v in self.free))
        if len(self.torsion_orders) != len(self.torsion_exps):
            raise ValueError("one exponent per torsion direction is required")
        object.__setattr__(self, "torsion_exps",
                           tuple(int(e) % d for e, d in zip(self.torsion_exps, self.torsion_orders)))

    @classmethod
    def for_group(cls, G: GroupSpec, free: Sequence = (), torsion: Sequence[int] = ()) -> Character:
        free = tuple(free) or (Fraction(0),) * G.free_rank
        torsion = tuple(torsion) or (0,) * len(G.torsion)
        if len(free) != G.free_rank or len(torsion) != len(G.torsion):
            raise ValueError(f"{G.name} needs {G.free_rank} free and {len(G.torsion)} torsion angles")
        return cls(free, G.torsion, torsion)

    @classmethod
    def from_config(cls, G: GroupSpec, cfg: Mapping | str | None) -> Character:
        """``{"free": ["1/3" | 0.414...], "torsion": [1]}`` or a comma list of free angles."""
        if cfg is None:
            return cls.for_group(G)
        if isinstance(cfg, str):
            return cls.for_group(G, [s for s in cfg.split(",") if s.strip()])
        return cls.for_group(G, cfg.get("free", ()), cfg.get("torsion", ()))

    @property
    def rank(self) -> int:
        return len(self.free) + len(self.torsion_orders)

    def angle(self, coords: Sequence[int]):
        s = len(self.free)
        if len(coords) != self.rank:
            raise ValueError("coordinate tuple has the wrong length")
        total = Fraction(0)
        floats = 0.0
        for n, q in zip(coords[:s], self.free):
            if isinstance(q, Fraction):
                total += n * q
            else:
                floats += n * q
        for t, e, d in zip(coords[s:], self.torsion_exps, self.torsion_orders):
            total += Fraction(t * e, d)
        if floats:
            return frac_part(float(total) + floats)
        return frac_part(total)

    def value(self, coords: Sequence[int]) -> complex:
        return root_of_unity(self.angle(coords))

    def to_json(self) -> dict:
        return {"free": [str(q) if isinstance(q, Fraction) else repr(q) for q in self.free],
                "torsion_orders": list(self.torsion_orders), "torsion_exps": list(self.torsion_exps)}


def extend_by_zero(G: GroupSpec, lam: Character, g: ExactMatrix) -> complex:
    """The character on ``C`` extended by zero to the whole group."""
    if not G.in_center(g):
        return 0j
    return lam.value(G.c_coordinates(g))


def _zero_extension_angle(G: GroupSpec, lam: Character, g: ExactMatrix):
    return lam.angle(G.c_coordinates(g)) if G.in_center(g) else None


@dataclass
class PsdResult:
    min_eigenvalue: float
    passed: bool
    gram: np.ndarray


def psd_check(G: GroupSpec, lam: Character, F: Sequence[ExactMatrix], tol: float = 1e-9) -> PsdResult:
    """Minimum eigenvalue of ``[lam~(s^-1 t)]_{s,t in F}``."""
    if not F:
        raise ValueError("F must be nonempty")
    inv = [f.inv() for f in F]
    k = len(F)
    M = np.zeros((k, k), dtype=complex)
    for a in range(k):
        for b in range(k):
            M[a, b] = extend_by_zero(G, lam, inv[a] @ F[b])
    if np.max(np.abs(M - M.conj().T)) > 1e-12:
        raise RfdError("Gram matrix is not Hermitian; arithmetic is broken")
    M = (M + M.conj().T) / 2
    lo = float(np.linalg.eigvalsh(M)[0])
    return PsdResult(lo, lo >= -tol, M)


def k0_for(eps: float, s: int, L: int) -> int:
    """Root-of-unity order from which the k-th roots form an ``eps/(s(L+1))``-net.

    Uses arc length ``2*pi/k`` as a (generous) bound on the chord to the
    nearest root.
    """
    if eps <= 0 or s < 1 or L < 0:
        raise ValueError("need eps > 0, s >= 1, L >= 0")
    return max(1, math.ceil(2 * math.pi * s * (L + 1) / eps))


def nearest_root(angle, k: int) -> tuple[int, float]:
    """``l`` in ``[0, k)`` minimizing ``|exp(2*pi*i*l/k) - exp(2*pi*i*angle)|``.

    Ties go to the smaller ``l``.  Returns ``(l, chord error)``.
    """
    x = Fraction(angle) * k
    lo = math.floor(x)
    best = None
    for c in (lo, lo + 1):
        dist = abs(x - c)
        cand = (dist, c % k)
        if best is None or cand < best:
            best = cand
    l = best[1]
    target = angle if isinstance(angle, Fraction) else float(angle)
    return l, chord(Fraction(l, k), target)


class QuotientCharacter:
    """Character of a central image ``f(C)`` with exact root-of-unity values.

    ``angles[p]`` is the angle (a Fraction) at position ``p`` of the central
    image.  ``approx_errors`` lists ``|chi(f(h)) - lambda(h)|`` for the
    C-generators the character was built against.
    """

    def __init__(self, central: CentralImage, angles: Sequence[Fraction],
                 approx_errors: Sequence[float] = ()):
        if len(angles) != central.order:
            raise ValueError("one angle per element of the central image is required")
        self.central = central
        self.angles = [frac_part(Fraction(a)) for a in angles]
        self.approx_errors = tuple(approx_errors)
        self.denominator = math.lcm(*(a.denominator for a in self.angles)) if self.angles else 1

    def angle_at(self, pos: int) -> Fraction:
        return self.angles[pos]

    def value_at(self, pos: int) -> complex:
        return root_of_unity(self.angles[pos])

    def angle_of(self, g: ExactMatrix) -> Fraction:
        return self.angles[self.central.position(g)]

    def value_of(self, g: ExactMatrix) -> complex:
        return root_of_unity(self.angle_of(g))

    def numerators(self) -> np.ndarray:
        D = self.denominator
        return np.array([int(a * D) for a in self.angles], dtype=np.int64)

    def check_multiplicative(self) -> bool:
        """Exhaustive check that ``chi(ab) = chi(a) chi(b)`` at the angle level."""
        C = self.central
        m = C.modulus
        for p, a in enumerate(C.elements):
            prods = np.matmul(a, C.elements) % m
            for q, key in enumerate(C.encoder.keys(prods)):
                r = C.index.get(key)
                if r is None or frac_part(self.angles[p] + self.angles[q]) != self.angles[r]:
                    return False
        return True

    def to_json(self) -> dict:
        C = self.central
        return {"modulus": C.modulus, "basis_orders": list(C.basis_orders),
                "basis_angles": [str(self.angles[C.box_position[self._unit(i)]])
                                 for i in range(len(C.basis_orders))]}

    def _unit(self, i: int) -> tuple:
        tup = [0] * len(self.central.basis_orders)
        if self.central.basis_orders[i] > 1:
            tup[i] = 1
        return tuple(tup)


def _central(Q) -> CentralImage:
    return Q.central if isinstance(Q, FiniteQuotient) else Q


def _generator_L(G: GroupSpec, c_generators) -> list[int]:
    coords = [G.c_coordinates(c) for c in c_generators]
    return [max((abs(c[i]) for c in coords), default=0) for i in range(G.free_rank)]


def character_on_image(G: GroupSpec, C: CentralImage, lam: Character, eps: float,
                       c_generators: Sequence[ExactMatrix] | None = None,
                       enforce_net: bool = True) -> QuotientCharacter:
    """Nearest-root approximation of ``lam`` on one central image."""
    s = G.free_rank
    if not C.is_direct:
        raise PreconditionFailed(f"mod {C.modulus}: f(C) is not the direct product of the "
                                 "images of the basis directions")
    if tuple(C.basis_orders[s:]) != tuple(G.torsion):
        raise PreconditionFailed(f"mod {C.modulus}: torsion of C collapses "
                                 f"({C.basis_orders[s:]} vs {G.torsion})")
    gens = list(c_generators) if c_generators is not None else [c for _, c in G.c_generators]
    Ls = _generator_L(G, gens)
    basis_angles = []
    for i in range(s):
        k = C.basis_orders[i]
        if enforce_net and k < k0_for(eps, s, Ls[i]):
            raise PreconditionFailed(f"mod {C.modulus}: image of free direction {i} has order {k}"
                                     f" < {k0_for(eps, s, Ls[i])}; choose a larger modulus")
        l, _ = nearest_root(lam.free[i], k)
        basis_angles.append(Fraction(l, k))
    basis_angles += [Fraction(e, d) for e, d in zip(lam.torsion_exps, lam.torsion_orders)]
    angles = [frac_part(sum((a * q for a, q in zip(tup, basis_angles)), Fraction(0)))
              for tup in C.exponents]
    chi = QuotientCharacter(C, angles)
    errors = tuple(chord(chi.angle_of(h), lam.angle(G.c_coordinates(h))) for h in gens)
    chi.approx_errors = errors
    if enforce_net and any(e > eps + 1e-15 for e in errors):
        raise RfdError("net condition held but the error bound failed; this is a bug")
    return chi


def build_compatible_characters(QA, QB, lam: Character, eps: float,
                                c_generators: Sequence[ExactMatrix] | None = None,
                                phi: Callable[[ExactMatrix], ExactMatrix] | None = None,
                                enforce_net: bool = True):
    """Matching characters on ``f^A(C_A)`` and ``f^B(C_B)``.

    ``phi`` maps elements of ``C_A`` to ``C_B`` (identity by default).  The
    B-side character is transported through ``phi`` so the two agree
    exactly at the angle level.  With ``enforce_net=False`` the order
    condition is skipped and the caller must judge ``approx_errors``.
    """
    CA, CB = _central(QA), _central(QB)
    GA, GB = CA.group, CB.group
    if CA.modulus != CB.modulus and phi is None and GA is GB:
        pass
    phi = phi or (lambda g: g)
    chiA = character_on_image(GA, CA, lam, eps, c_generators, enforce_net)
    # well-definedness: each basis direction's kernel power must die on the B side
    for b, k in zip(GA.c_basis, CA.basis_orders):
        if not CB.contains(phi(b ** k)) or CB.position(phi(b ** k)) != CB.position(GB.identity()):
            raise IncompatibleImages("phi does not induce a map f^A(C) -> f^B(C)")
    if CA.order != CB.order:
        raise IncompatibleImages(f"|f^A(C)| = {CA.order} but |f^B(C)| = {CB.order}")
    anglesB = [None] * CB.order
    for posA, tup in enumerate(CA.exponents):
        h = GA.from_c_coordinates(tup)
        hb = phi(h)
        if not CB.contains(hb):
            raise IncompatibleImages("phi(h) falls outside f^B(C)")
        posB = CB.position(hb)
        if anglesB[posB] is not None:
            raise IncompatibleImages("the induced map on central images is not injective")
        anglesB[posB] = chiA.angles[posA]
    chiB = QuotientCharacter(CB, anglesB, chiA.approx_errors)
    return chiA, chiB
