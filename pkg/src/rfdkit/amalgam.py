"""Amalgamated free products and HNN extensions over a central subgroup.

Words are reduced to normal form here, evaluated under pairs of finite
dimensional representations, and searched for separating representations.
Failure to separate within a budget is reported as ``inconclusive``; it is
never evidence of triviality by itself.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .characters import Character, build_compatible_characters, character_on_image
from .errors import (AmalgamDisagreement, CapExceeded, CommutationFailure,
                     DimensionCapExceeded, DimensionMismatch, PreconditionFailed)
from .exact import ExactMatrix
from .groups import GroupSpec, GroupWord, evaluate_word
from .quotients import DEFAULT_CAP, FiniteQuotient, enumerate_quotient, profinite_probe
from .repkit import (DIM_CAP, ConjugateRep, FinDimRep, Monomial, align_dims, induce,
                     is_unitary, op_distance_to_identity)

SEPARATION_THRESHOLD = 0.1


def parse_element(G: GroupSpec, text: str) -> ExactMatrix:
    """``"x*y^-1"`` (or ``"e"``) to a group element."""
    text = text.strip()
    if text in ("e", "1", ""):
        return G.identity()
    return evaluate_word(G, GroupWord.parse(text.replace("*", " ")))


# -- amalgamated products -------------------------------------------------------

@dataclass(frozen=True)
class Amalgam:
    """``left *_C right`` with ``phi`` identifying the left copy of ``C`` with the right one."""

    left: GroupSpec
    right: GroupSpec
    phi: Callable[[ExactMatrix], ExactMatrix] | None = None
    phi_inv: Callable[[ExactMatrix], ExactMatrix] | None = None

    def factor(self, tag: str) -> GroupSpec:
        return self.left if tag == "L" else self.right

    def transfer(self, c: ExactMatrix, src: str, dst: str) -> ExactMatrix:
        if src == dst:
            return c
        f = self.phi if src == "L" else self.phi_inv
        return f(c) if f is not None else c

    @property
    def name(self) -> str:
        return f"{self.left.name}*_C{self.right.name}"


@dataclass(frozen=True)
class AmalgamWord:
    letters: tuple[tuple[str, ExactMatrix], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))
        for tag, _ in self.letters:
            if tag not in ("L", "R"):
                raise ValueError(f"letter tag must be L or R, got {tag!r}")

    def __len__(self):
        return len(self.letters)

    @classmethod
    def parse(cls, A: Amalgam, text: str) -> AmalgamWord:
        """Whitespace-separated letters ``L:x^2`` or ``R:x*y^-1``."""
        letters = []
        for tok in text.split():
            tag, sep, body = tok.partition(":")
            if not sep or tag not in ("L", "R"):
                raise ValueError(f"bad amalgam letter {tok!r}")
            letters.append((tag, parse_element(A.factor(tag), body)))
        return cls(tuple(letters))

    def inverse(self) -> AmalgamWord:
        return AmalgamWord(tuple((t, g.inv()) for t, g in reversed(self.letters)))

    def __add__(self, other: AmalgamWord) -> AmalgamWord:
        return AmalgamWord(self.letters + other.letters)

    def describe(self) -> list[str]:
        return [f"{t}:{_entries(g)}" for t, g in self.letters]


def _entries(g: ExactMatrix) -> str:
    return "[" + ";".join(",".join(str(g[i, j]) for j in range(g.n)) for i in range(g.n)) + "]"


def reduce_amalgam(A: Amalgam, w: AmalgamWord) -> AmalgamWord:
    """Normal form: alternating tags, no identities, C-letters absorbed rightward."""
    letters = list(w.letters)
    while True:
        merged: list[tuple[str, ExactMatrix]] = []
        for tag, g in letters:
            if merged and merged[-1][0] == tag:
                merged[-1] = (tag, merged[-1][1] @ g)
            else:
                merged.append((tag, g))
        merged = [(t, g) for t, g in merged if not g.is_identity()]
        if len(merged) != len(letters) or any(a[0] == b[0] for a, b in zip(merged, merged[1:])):
            letters = merged
            continue
        letters = merged
        if len(letters) <= 1:
            return AmalgamWord(tuple(letters))
        pos = next((i for i, (t, g) in enumerate(letters) if A.factor(t).in_center(g)), None)
        if pos is None:
            return AmalgamWord(tuple(letters))
        tag, c = letters.pop(pos)
        if pos < len(letters):
            nt, ng = letters[pos]
            letters[pos] = (nt, A.transfer(c, tag, nt) @ ng)
        else:
            nt, ng = letters[pos - 1]
            letters[pos - 1] = (nt, ng @ A.transfer(c, tag, nt))


def is_reduced(A: Amalgam, w: AmalgamWord) -> bool:
    L = w.letters
    if any(g.is_identity() for _, g in L):
        return False
    if any(a[0] == b[0] for a, b in zip(L, L[1:])):
        return False
    return len(L) <= 1 or not any(A.factor(t).in_center(g) for t, g in L)


def is_trivial(A: Amalgam, w: AmalgamWord) -> bool:
    return len(reduce_amalgam(A, w)) == 0


def _product(mats: Iterable, dim: int):
    out = None
    for M in mats:
        out = M if out is None else out @ M
    return Monomial.identity(dim) if out is None else out


def check_agreement(A: Amalgam, rho1: FinDimRep, rho2: FinDimRep, tol: float = 1e-12):
    if rho1.dim != rho2.dim:
        raise DimensionMismatch(f"dimensions {rho1.dim} and {rho2.dim} differ")
    for name, c in A.left.c_generators:
        M1, M2 = rho1(c), rho2(A.transfer(c, "L", "R"))
        if isinstance(M1, Monomial) and isinstance(M2, Monomial):
            ok = M1 == M2
        else:
            d1 = M1.to_dense() if isinstance(M1, Monomial) else M1
            d2 = M2.to_dense() if isinstance(M2, Monomial) else M2
            ok = float(np.max(np.abs(d1 - d2), initial=0.0)) <= tol
        if not ok:
            raise AmalgamDisagreement(f"the two representations disagree on {name}")


def evaluate_amalgam(A: Amalgam, rho1: FinDimRep, rho2: FinDimRep, w: AmalgamWord,
                     check: bool = True):
    """``sigma(w)``: ordered product with ``rho1`` on L-letters and ``rho2`` on R-letters."""
    if check:
        check_agreement(A, rho1, rho2)
    elif rho1.dim != rho2.dim:
        raise DimensionMismatch(f"dimensions {rho1.dim} and {rho2.dim} differ")
    return _product(((rho1 if t == "L" else rho2)(g) for t, g in w.letters), rho1.dim)


# -- HNN extensions -----------------------------------------------------------------

@dataclass(frozen=True)
class HNNWord:
    """Letters ``("t", k)`` or ``("g", element)`` of ``<G, t | t^-1 c t = c, c in C>``."""

    letters: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))
        for kind, _ in self.letters:
            if kind not in ("t", "g"):
                raise ValueError(f"letter kind must be 't' or 'g', got {kind!r}")

    def __len__(self):
        return len(self.letters)

    @classmethod
    def parse(cls, G: GroupSpec, text: str) -> HNNWord:
        """Whitespace-separated ``t^k`` and group letters ``x^k`` / ``x*y``."""
        if "t" in G.gen_names:
            raise ValueError("a generator named 't' clashes with the stable letter")
        letters = []
        for tok in text.split():
            base, _, exp = tok.partition("^")
            if base == "t":
                letters.append(("t", int(exp) if exp else 1))
            else:
                letters.append(("g", parse_element(G, tok)))
        return cls(tuple(letters))

    @property
    def max_t_power(self) -> int:
        return max((abs(k) for kind, k in self.letters if kind == "t"), default=0)

    def describe(self) -> list[str]:
        return [f"t^{v}" if k == "t" else _entries(v) for k, v in self.letters]


@dataclass(frozen=True)
class BrittonForm:
    word: HNNWord
    form: int

    @property
    def trivial(self) -> bool:
        return len(self.word) == 0


def britton_reduce(G: GroupSpec, w: HNNWord) -> BrittonForm:
    """Britton normal form and its shape (1-6).

    Since ``t`` centralizes ``C``, a C-letter slides left across ``t``-powers
    into the previous group letter, or to the front when there is none.
    Shapes 1 and 3 also cover a single group letter (``g t^k`` and ``g``).
    """
    letters = list(w.letters)
    while True:
        merged: list = []
        for kind, v in letters:
            if merged and merged[-1][0] == kind:
                pk, pv = merged[-1]
                merged[-1] = (kind, pv + v if kind == "t" else pv @ v)
            else:
                merged.append((kind, v))
        merged = [(k, v) for k, v in merged if not (v == 0 if k == "t" else v.is_identity())]
        if len(merged) != len(letters) or any(a[0] == b[0] for a, b in zip(merged, merged[1:])):
            letters = merged
            continue
        letters = merged
        # slide a C-letter left into the nearest earlier group letter
        moved = False
        for i, (kind, v) in enumerate(letters):
            if kind != "g" or not G.in_center(v):
                continue
            prev = next((j for j in range(i - 1, -1, -1) if letters[j][0] == "g"), None)
            nxt = next((j for j in range(i + 1, len(letters)) if letters[j][0] == "g"), None)
            if prev is not None:
                letters[prev] = ("g", letters[prev][1] @ v)
            elif nxt is not None:
                letters[nxt] = ("g", v @ letters[nxt][1])
            elif i == 0:
                continue  # lone central letter stays in front
            else:
                letters.insert(0, ("g", v))
                del letters[i + 1]
            if prev is not None or nxt is not None:
                del letters[i]
            moved = True
            break
        if not moved:
            break
    word = HNNWord(tuple(letters))
    return BrittonForm(word, _classify(G, letters))


def _classify(G: GroupSpec, letters) -> int:
    if not any(k == "g" and not G.in_center(v) for k, v in letters):
        return 6 if not any(k == "t" for k, _ in letters) else 5
    starts_g = letters[0][0] == "g"
    ends_t = letters[-1][0] == "t"
    return {(True, True): 1, (False, True): 2, (True, False): 3, (False, False): 4}[(starts_g, ends_t)]


def evaluate_hnn(G: GroupSpec, rho: FinDimRep, U, w: HNNWord, check: bool = True):
    """``sigma_{rho,U}(w)`` with ``t -> U`` and ``t^-1 -> U*``."""
    U = U if isinstance(U, Monomial) else np.asarray(U, dtype=complex)
    dim = U.dim if isinstance(U, Monomial) else U.shape[0]
    if dim != rho.dim:
        raise DimensionMismatch(f"unitary of size {dim} for a rep of dimension {rho.dim}")
    if check:
        if not is_unitary(U):
            raise CommutationFailure("U is not unitary")
        _check_commutes(G, rho, U)
    Uinv = U.inverse() if isinstance(U, Monomial) else U.conj().T

    def image(kind, v):
        if kind == "g":
            return rho(v)
        base = U if v > 0 else Uinv
        out = base
        for _ in range(abs(v) - 1):
            out = out @ base
        return out

    return _product((image(k, v) for k, v in w.letters), rho.dim)


def _dense(M):
    return M.to_dense() if isinstance(M, Monomial) else np.asarray(M, dtype=complex)


def _check_commutes(G: GroupSpec, rho: FinDimRep, U, elements=None, tol: float = 1e-12):
    Ud = _dense(U)
    for c in (elements if elements is not None else [c for _, c in G.c_generators]):
        M = _dense(rho(c))
        if float(np.max(np.abs(M @ Ud - Ud @ M), initial=0.0)) > tol:
            raise CommutationFailure("U does not commute with the image of C")


def seeded_unitary(d: int, seed: Sequence[int]) -> np.ndarray:
    """Haar-distributed unitary from the QR factorization of a complex Gaussian."""
    rng = np.random.default_rng(list(seed))
    Z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    Qm, R = np.linalg.qr(Z)
    diag = np.diag(R)
    return Qm * (diag / np.abs(diag))


def seeded_monomial(d: int, seed: Sequence[int], denom: int = 8) -> Monomial:
    rng = np.random.default_rng(list(seed))
    return Monomial(rng.permutation(d), rng.integers(0, denom, size=d), denom)


def hnn_to_amalgam_transfer(gamma: FinDimRep, U, c_elements: Sequence[ExactMatrix]):
    """``(U* gamma U, gamma)``: a representation pair of ``A *_B A`` built from ``(gamma, U)``."""
    for c in c_elements:
        M = _dense(gamma(c))
        Ud = _dense(U)
        if float(np.max(np.abs(M @ Ud - Ud @ M), initial=0.0)) > 1e-12:
            raise CommutationFailure("U does not commute with gamma on the amalgamated subgroup")
    rho = ConjugateRep(gamma, U)
    for c in c_elements:
        if float(np.max(np.abs(_dense(rho(c)) - _dense(gamma(c))), initial=0.0)) > 1e-12:
            raise CommutationFailure("conjugated representation moved the amalgamated subgroup")
    return rho, gamma


def embed_hnn_word(G: GroupSpec, w: HNNWord, g0: ExactMatrix,
                   A: Amalgam | None = None) -> AmalgamWord:
    """Image under ``t -> R:g0``, ``g -> L:g`` in ``G *_C G``, reduced."""
    A = A or Amalgam(G, G)
    K = w.max_t_power
    for k in range(1, K + 1):
        if A.right.in_center(g0 ** k):
            raise PreconditionFailed(f"g0^{k} lies in C")
    letters = [("R", g0 ** v) if kind == "t" else ("L", v) for kind, v in w.letters]
    return reduce_amalgam(A, AmalgamWord(tuple(letters)))


# -- separation search --------------------------------------------------------------

@dataclass(frozen=True)
class Budget:
    """Search limits.  Exhausting them yields ``inconclusive``."""

    max_modulus: int = 16
    levels: int = 1
    seeds: int = 4
    min_modulus: int = 2
    cap: int = DEFAULT_CAP
    dim_cap: int = DIM_CAP
    moduli: tuple[int, ...] | None = None

    def modulus_list(self, *groups: GroupSpec) -> list[int]:
        ms = self.moduli if self.moduli is not None else range(self.min_modulus, self.max_modulus + 1)
        out = []
        for m in ms:
            if m > self.max_modulus:
                continue
            if any(G.ring.kind == "Zp" and math.gcd(m, G.ring.param) != 1 for G in groups):
                continue
            out.append(m)
        return out

    def to_json(self) -> dict:
        return {"max_modulus": self.max_modulus, "levels": self.levels, "seeds": self.seeds,
                "min_modulus": self.min_modulus, "cap": self.cap, "dim_cap": self.dim_cap,
                "moduli": list(self.moduli) if self.moduli is not None else None}


@dataclass
class SeparationReport:
    kind: str
    word: list[str]
    reduced: list[str]
    outcome: str  # "separated", "inconclusive" or "identity"
    attempts: list[dict]
    budget: dict
    seed: int
    form: int | None = None
    extra: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def success(self) -> dict | None:
        return next((a for a in self.attempts if a.get("status") == "separated"), None)

    @property
    def successes(self) -> int:
        return sum(1 for a in self.attempts if a.get("status") == "separated")

    def to_json(self, metadata: bool = True) -> dict:
        out = {"kind": self.kind, "word": self.word, "reduced": self.reduced,
               "outcome": self.outcome, "attempts": self.attempts, "budget": self.budget,
               "seed": self.seed, "form": self.form, "success": self.success, **self.extra}
        if metadata:
            out["metadata"] = self.metadata
        return out

    def dumps(self, metadata: bool = False) -> str:
        return json.dumps(self.to_json(metadata), sort_keys=True)


def _ordered_map(fn, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _first_success(chunks: list[list[dict]]) -> list[dict]:
    out = []
    for chunk in chunks:
        for a in chunk:
            out.append(a)
            if a["status"] == "separated":
                return out
    return out


def _norm_record(rec: dict, M) -> dict:
    norm = op_distance_to_identity(M)
    rec["norm"] = round(norm, 12)
    rec["status"] = "separated" if norm >= SEPARATION_THRESHOLD else "not-separated"
    return rec


def separate_amalgam(A: Amalgam, w: AmalgamWord, lam: Character, eps: float = 0.1,
                     budget: Budget = Budget(), seed: int = 0, workers: int = 1,
                     stop_at_first: bool = True) -> SeparationReport:
    """Search congruence-induced representation pairs with ``||sigma(w) - I|| >= 0.1``.

    Attempt seed 0 uses the two induced reps as they are; later seeds twist
    the right factor by a seeded monomial unitary, which is allowed because
    both reps are scalar on ``C``.
    """
    t0 = time.perf_counter()
    red = reduce_amalgam(A, w)
    report = SeparationReport("amalgam", w.describe(), red.describe(), "identity", [],
                              budget.to_json(), seed, extra={"lambda": lam.to_json(),
                                                             "epsilon": eps})
    if len(red) == 0:
        report.metadata["elapsed_ms"] = round((time.perf_counter() - t0) * 1000, 3)
        return report
    moduli = budget.modulus_list(A.left, A.right)

    def per_modulus(m: int) -> list[dict]:
        recs: list[dict] = []
        try:
            QA = enumerate_quotient(A.left, m, budget.cap)
            QB = QA if A.right is A.left else enumerate_quotient(A.right, m, budget.cap)
        except CapExceeded:
            return [{"modulus": m, "level": None, "seed": None, "status": "cap-exceeded"}]
        previous = None
        for level in range(budget.levels):
            eps_l = eps / 2 ** level
            base = {"modulus": m, "level": level}
            try:
                chiA, chiB = build_compatible_characters(QA, QB, lam, eps_l,
                                                         phi=A.phi, enforce_net=False)
            except PreconditionFailed as exc:
                recs.append({**base, "seed": None, "status": "precondition", "reason": str(exc)})
                continue
            err = max(chiA.approx_errors, default=0.0)
            if err > eps_l:
                recs.append({**base, "seed": None, "status": "character-error",
                             "character_error": round(err, 12)})
                continue
            if previous == chiA.angles:
                recs.append({**base, "seed": None, "status": "duplicate-level"})
                continue
            previous = chiA.angles
            try:
                r1, r2 = align_dims(induce(QA, chiA), induce(QB, chiB), budget.dim_cap)
            except DimensionCapExceeded:
                recs.append({**base, "seed": None, "status": "dimension-cap"})
                continue
            for s in range(budget.seeds):
                rec = {**base, "seed": s, "dim": r1.dim, "character_error": round(err, 12)}
                rho2 = r2 if s == 0 else ConjugateRep(r2, seeded_monomial(r2.dim, (seed, m, level, s)))
                recs.append(_norm_record(rec, evaluate_amalgam(A, r1, rho2, red)))
                if stop_at_first and rec["status"] == "separated":
                    return recs
        return recs

    chunks = _ordered_map(per_modulus, moduli, workers)
    attempts = _first_success(chunks) if stop_at_first else [a for c in chunks for a in c]
    report.attempts = attempts
    report.outcome = "separated" if any(a["status"] == "separated" for a in attempts) else "inconclusive"
    report.metadata["elapsed_ms"] = round((time.perf_counter() - t0) * 1000, 3)
    return report


def separate_hnn(G: GroupSpec, w: HNNWord, lam: Character, eps: float = 0.1,
                 budget: Budget = Budget(seeds=8), seed: int = 0,
                 workers: int = 1) -> SeparationReport:
    """Search ``(Ind chi, U)`` pairs with seeded Haar ``U`` separating ``w`` from the identity."""
    t0 = time.perf_counter()
    red = britton_reduce(G, w)
    report = SeparationReport("hnn", w.describe(), red.word.describe(), "identity", [],
                              budget.to_json(), seed, form=red.form,
                              extra={"lambda": lam.to_json(), "epsilon": eps})
    if red.trivial:
        report.metadata["elapsed_ms"] = round((time.perf_counter() - t0) * 1000, 3)
        return report

    def per_modulus(m: int) -> list[dict]:
        recs: list[dict] = []
        try:
            Q = enumerate_quotient(G, m, budget.cap)
        except CapExceeded:
            return [{"modulus": m, "level": None, "seed": None, "status": "cap-exceeded"}]
        previous = None
        for level in range(budget.levels):
            eps_l = eps / 2 ** level
            base = {"modulus": m, "level": level}
            try:
                chi = character_on_image(G, Q.central, lam, eps_l, enforce_net=False)
            except PreconditionFailed as exc:
                recs.append({**base, "seed": None, "status": "precondition", "reason": str(exc)})
                continue
            err = max(chi.approx_errors, default=0.0)
            if err > eps_l:
                recs.append({**base, "seed": None, "status": "character-error",
                             "character_error": round(err, 12)})
                continue
            if previous == chi.angles:
                recs.append({**base, "seed": None, "status": "duplicate-level"})
                continue
            previous = chi.angles
            rho = induce(Q, chi)
            if rho.dim > budget.dim_cap:
                recs.append({**base, "seed": None, "status": "dimension-cap"})
                continue
            for s in range(budget.seeds):
                U = seeded_unitary(rho.dim, (seed, m, level, s))
                rec = {**base, "seed": s, "dim": rho.dim, "character_error": round(err, 12)}
                recs.append(_norm_record(rec, evaluate_hnn(G, rho, U, red.word)))
                if rec["status"] == "separated":
                    return recs
        return recs

    report.attempts = _first_success(_ordered_map(per_modulus, budget.modulus_list(G), workers))
    report.outcome = "separated" if report.success else "inconclusive"
    report.metadata["elapsed_ms"] = round((time.perf_counter() - t0) * 1000, 3)
    return report


# -- the Abels experiment ------------------------------------------------------------

def abels_witness(p: int):
    """``(G, x0, g0, w)`` with ``x0 = I + (1/p) E14``, ``g0 = diag(1, p, p, 1)`` and
    ``w = t^-1 x0 t x0^-1``."""
    from .groups import abels
    G = abels(p)
    x0 = ExactMatrix.elementary(4, 0, 3, G.ring.coerce(f"1/{p}"), G.ring)
    g0 = ExactMatrix.diagonal([1, p, p, 1], G.ring)
    w = HNNWord((("t", -1), ("g", x0), ("t", 1), ("g", x0.inv())))
    return G, x0, g0, w


@dataclass
class ExperimentReport:
    p: int
    probe: dict
    witness: dict
    separation: SeparationReport
    not_attempted: list[int]
    metadata: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        if self.probe["outside"] or not self.witness["nontrivial"] or self.probe["errors"]:
            return 1
        return 0 if self.separation.outcome == "separated" else 2

    def to_json(self, metadata: bool = True) -> dict:
        probe = self.probe
        if not metadata:
            probe = dict(probe, records=[{k: v for k, v in r.items() if k != "metadata"}
                                         for r in probe["records"]])
        out = {"p": self.p, "probe": probe, "witness": self.witness,
               "separation": self.separation.to_json(metadata),
               "separation_successes": self.separation.successes,
               "not_attempted": self.not_attempted}
        if metadata:
            out["metadata"] = self.metadata
        return out

    def dumps(self, metadata: bool = False) -> str:
        return json.dumps(self.to_json(metadata), sort_keys=True)


def abels_experiment(p: int, m_list: Sequence[int], budget: Budget = Budget(max_modulus=5, seeds=4,
                                                                             dim_cap=10 ** 5),
                     lam: Character | None = None, seed: int = 0,
                     workers: int = 1) -> ExperimentReport:
    """Profinite probe of ``x0`` against ``C``, the embedded witness, and a separation search.

    The probe uses central images only, so it covers every modulus in
    ``m_list``.  The separation search needs full quotients and is limited
    to moduli up to ``budget.max_modulus``; the rest are listed as not
    attempted.
    """
    t0 = time.perf_counter()
    G, x0, g0, w = abels_witness(p)
    bad = [m for m in m_list if math.gcd(m, p) != 1]
    if bad:
        raise PreconditionFailed(f"moduli {bad} are not coprime to {p}")
    probe = profinite_probe(G, x0, m_list, budget.cap, workers=workers)
    verdicts = [r["verdict"] for r in probe.records]
    probe_json = {"records": probe.records, "inside": verdicts.count("inside"),
                  "outside": verdicts.count("outside"), "errors": verdicts.count("error"),
                  "tested": len(verdicts)}
    A = Amalgam(G, G)
    emb = embed_hnn_word(G, w, g0, A)
    witness = {"hnn_form": britton_reduce(G, w).form, "word": emb.describe(), "length": len(emb),
               "reduced": is_reduced(A, emb), "nontrivial": len(emb) >= 2 and is_reduced(A, emb)}
    lam = lam or Character.for_group(G)
    sep_budget = Budget(budget.max_modulus, budget.levels, budget.seeds, budget.min_modulus,
                        budget.cap, budget.dim_cap, tuple(m_list))
    sep = separate_amalgam(A, emb, lam, budget=sep_budget, seed=seed, workers=workers,
                           stop_at_first=False)
    skipped = [m for m in m_list if m > budget.max_modulus]
    for m in skipped:
        sep.attempts.append({"modulus": m, "level": None, "seed": None, "status": "not-attempted"})
    rep = ExperimentReport(p, probe_json, witness, sep, skipped)
    rep.metadata["elapsed_ms"] = round((time.perf_counter() - t0) * 1000, 3)
    return rep
