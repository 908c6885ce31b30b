"""Finite congruence quotients and the searches built on them.

Elements of a quotient are reduced matrices stored in one int64 array; the
canonical key of an element is the big-endian byte string of its entries, so
byte order agrees with lexicographic order of the entry tuple.
"""

from __future__ import annotations

import itertools
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import gcd
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CapExceeded,
    NonInvertiblePrime,
    NotASubgroup,
    PreconditionFailed,
    RfdError,
    SearchExhausted,
)
from .exact import ExactMatrix, reduce_mod
from .groups import GroupSpec

log = logging.getLogger(__name__)

DEFAULT_CAP = 10**6


def _key_dtype(m: int) -> np.dtype:
    if m <= 256:
        return np.dtype("u1")
    if m <= 65536:
        return np.dtype(">u2")
    return np.dtype(">u4")


class _Encoder:
    def __init__(self, n: int, m: int):
        self.dtype = _key_dtype(m)
        self.width = n * n * self.dtype.itemsize

    def key(self, arr: np.ndarray) -> bytes:
        return np.ascontiguousarray(arr, dtype=self.dtype).tobytes()

    def keys(self, batch: np.ndarray) -> list[bytes]:
        blob = np.ascontiguousarray(batch, dtype=self.dtype).tobytes()
        w = self.width
        return [blob[i:i + w] for i in range(0, len(blob), w)]


def _check_modulus(G: GroupSpec, m: int):
    if m < 1:
        raise ValueError("modulus must be >= 1")
    if G.ring.kind == "Zp" and gcd(m, G.ring.param) != 1:
        raise NonInvertiblePrime(f"gcd({m}, {G.ring.param}) != 1")


def _reduced(g: ExactMatrix, m: int) -> np.ndarray:
    return reduce_mod(g, m).to_array()


def _element_order(a: np.ndarray, m: int, cap: int) -> int:
    ident = np.eye(a.shape[0], dtype=np.int64) % m
    cur, k = a % m, 1
    while not np.array_equal(cur, ident):
        cur = (cur @ a) % m
        k += 1
        if k > cap:
            raise CapExceeded(m, cap, "element order")
    return k


@dataclass
class CentralImage:
    """The image ``f(C)`` of the central subgroup modulo ``m``.

    Elements are listed in box order: position ``p`` holds
    ``prod_i f(b_i)^{a_i}`` for the ``p``-th tuple of ``product(range(k_i))``,
    keeping only the first occurrence when the box map is not injective.
    """

    group: GroupSpec
    modulus: int
    basis_orders: tuple[int, ...]
    elements: np.ndarray
    exponents: list[tuple[int, ...]]
    index: dict
    is_direct: bool
    box_position: dict
    encoder: _Encoder = field(repr=False)

    @property
    def order(self) -> int:
        return len(self.exponents)

    def contains(self, g: ExactMatrix) -> bool:
        return self.encoder.key(_reduced(g, self.modulus)) in self.index

    def position(self, g: ExactMatrix) -> int:
        return self.index[self.encoder.key(_reduced(g, self.modulus))]


def central_image(G: GroupSpec, m: int, cap: int = DEFAULT_CAP) -> CentralImage:
    """Enumerate ``f(C)`` from the reduced basis of ``C`` alone.

    This is exact: ``f(C)`` is generated by the images of any generating set
    of ``C``, so the rest of the quotient never needs to be built.
    """
    _check_modulus(G, m)
    enc = _Encoder(G.n, m)
    basis = [_reduced(b, m) for b in G.c_basis]
    orders = tuple(_element_order(b, m, cap) for b in basis)
    size = int(np.prod(orders)) if orders else 1
    if size > cap:
        raise CapExceeded(m, cap, "central image")
    ident = np.eye(G.n, dtype=np.int64) % m
    cache = {(): ident}
    elements, exponents, index, box_position = [], [], {}, {}
    direct = True
    for tup in itertools.product(*(range(k) for k in orders)):
        # build from the prefix with the last coordinate one smaller
        if not tup or all(a == 0 for a in tup):
            mat = ident
        else:
            last = max(i for i, a in enumerate(tup) if a)
            parent = tup[:last] + (tup[last] - 1,) + tup[last + 1:]
            mat = (cache[parent] @ basis[last]) % m
        cache[tup] = mat
        key = enc.key(mat)
        if key in index:
            direct = False
            box_position[tup] = index[key]
            continue
        box_position[tup] = index[key] = len(exponents)
        elements.append(mat)
        exponents.append(tup)
    arr = np.array(elements, dtype=np.int64).reshape(len(elements), G.n, G.n)
    return CentralImage(G, m, orders, arr, exponents, index, direct, box_position, enc)


class FiniteQuotient:
    """A fully enumerated congruence quotient ``G -> G mod m``.

    Besides the element table this holds the coset data for the image of
    ``C``: ``transversal[i]`` is the byte-minimal element of coset ``i``,
    ``coset_of[g]`` the coset of element ``g`` and ``central_part[g]`` the
    position in :attr:`central` of ``transversal[coset_of[g]]^-1 g``.
    """

    def __init__(self, group: GroupSpec, modulus: int, elements: np.ndarray, index: dict,
                 gen_images: dict, central: CentralImage, encoder: _Encoder):
        self.group = group
        self.modulus = modulus
        self.elements = elements
        self.index = index
        self.gen_images = gen_images
        self.central = central
        self._enc = encoder
        self.c_indices = self.lookup(central.elements)
        self._build_cosets()

    # -- element access ------------------------------------------------------
    @property
    def order(self) -> int:
        return len(self.elements)

    def key(self, i: int) -> bytes:
        return self._enc.key(self.elements[i])

    def lookup(self, batch: np.ndarray) -> np.ndarray:
        idx = self.index
        keys = self._enc.keys(batch)
        return np.fromiter((idx[k] for k in keys), dtype=np.int64, count=len(keys))

    def image(self, g: ExactMatrix) -> int:
        """Index of the reduction of a group element."""
        return self.index[self._enc.key(_reduced(g, self.modulus))]

    def element_matrix(self, i: int) -> ExactMatrix:
        return ExactMatrix.from_array(self.elements[i], self.modulus)

    def mul(self, i: int, j: int) -> int:
        return self.index[self._enc.key((self.elements[i] @ self.elements[j]) % self.modulus)]

    def left_mul_all(self, i: int, targets: np.ndarray) -> np.ndarray:
        """Indices of ``q_i * q_j`` for every ``j`` in ``targets``."""
        prod = np.matmul(self.elements[i], self.elements[targets]) % self.modulus
        return self.lookup(prod)

    def inv(self, i: int) -> int:
        return self.index[self._enc.key(self.element_matrix(i).inv().to_array())]

    def table(self) -> np.ndarray:
        """Full multiplication table; intended for small quotients."""
        all_idx = np.arange(self.order)
        return np.stack([self.lookup(np.matmul(self.elements[i], self.elements) % self.modulus)
                         for i in all_idx]) if self.order else np.zeros((0, 0), dtype=np.int64)

    def in_central(self, i: int) -> bool:
        return self.key(i) in self.central.index

    @property
    def central_set(self) -> frozenset:
        return frozenset(int(i) for i in self.c_indices)

    # -- cosets of the central image ------------------------------------------
    def _build_cosets(self):
        m, N = self.modulus, self.order
        flat = self.elements.reshape(N, -1)
        order = np.lexsort(flat.T[::-1])
        rank = np.empty(N, dtype=np.int64)
        rank[order] = np.arange(N)
        perms = [self.lookup(np.matmul(self.elements, b) % m) for b in
                 (np.asarray(_reduced(b, m)) for b in self.group.c_basis)]
        label = rank.copy()
        changed = True
        while changed:
            changed = False
            for perm, k in zip(perms, self.central.basis_orders):
                p = perm
                for _ in range(max(1, int(k - 1).bit_length())):
                    new = np.minimum(label, label[p])
                    if not np.array_equal(new, label):
                        changed = True
                        label = new
                    p = p[p]
        reps = np.unique(label)
        self.transversal = order[reps]
        self.coset_of = np.searchsorted(reps, label)
        central_part = np.full(N, -1, dtype=np.int64)
        positions = {}
        for tup in itertools.product(*(range(k) for k in self.central.basis_orders)):
            if not tup or all(a == 0 for a in tup):
                pos = self.transversal
            else:
                last = max(i for i, a in enumerate(tup) if a)
                parent = tup[:last] + (tup[last] - 1,) + tup[last + 1:]
                pos = perms[last][positions[parent]]
            positions[tup] = pos
            central_part[pos] = self.central.box_position[tup]
        self.central_part = central_part
        if (central_part < 0).any():
            raise RfdError("coset decomposition left elements unassigned")

    def __repr__(self):
        return (f"FiniteQuotient({self.group.name} mod {self.modulus}, order={self.order}, "
                f"|C-image|={self.central.order})")


def enumerate_quotient(G: GroupSpec, m: int, cap: int = DEFAULT_CAP) -> FiniteQuotient:
    """Breadth-first closure of the reduced generators and their inverses."""
    _check_modulus(G, m)
    n = G.n
    enc = _Encoder(n, m)
    gens = [_reduced(g, m) for _, g in G.generators]
    gens += [_reduced(g.inv(), m) for _, g in G.generators]
    ident = np.eye(n, dtype=np.int64) % m
    index = {enc.key(ident): 0}
    parts = [ident[None]]
    frontier = ident[None]
    total = 1
    while len(frontier):
        fresh_parts = []
        for g in gens:
            prod = np.matmul(frontier, g) % m
            fresh = []
            for i, k in enumerate(enc.keys(prod)):
                if k not in index:
                    index[k] = total
                    total += 1
                    fresh.append(i)
            if total > cap:
                raise CapExceeded(m, cap)
            if fresh:
                fresh_parts.append(prod[fresh])
        frontier = np.concatenate(fresh_parts) if fresh_parts else np.zeros((0, n, n), np.int64)
        if len(frontier):
            parts.append(frontier)
    elements = np.concatenate(parts)
    gen_images = {name: index[enc.key(_reduced(g, m))] for name, g in G.generators}
    central = central_image(G, m, cap)
    return FiniteQuotient(G, m, elements, index, gen_images, central, enc)


def _check_outside(G: GroupSpec, outside: Sequence[ExactMatrix]):
    for a in outside:
        if G.in_center(a):
            raise PreconditionFailed("an 'outside' element lies in C")


def _check_pairs(G: GroupSpec, pairs):
    for h1, h2 in pairs:
        if not (G.in_center(h1) and G.in_center(h2)):
            raise PreconditionFailed("pair elements must lie in C")
        if h1 == h2:
            raise PreconditionFailed("pair elements must be distinct")


def separating_conditions_hold(C: CentralImage, outside, pairs) -> bool:
    """Conditions of the filtration reformulation, evaluated on ``f(C)`` only."""
    m = C.modulus
    for a in outside:
        if C.contains(a):
            return False
    for h1, h2 in pairs:
        if np.array_equal(_reduced(h1, m), _reduced(h2, m)):
            return False
    return True


def verify_witness(Q: FiniteQuotient, outside, pairs) -> bool:
    """Re-check the separating conditions inside the enumerated quotient."""
    cset = Q.central_set
    if any(Q.image(a) in cset for a in outside):
        return False
    return all(Q.image(h1) != Q.image(h2) for h1, h2 in pairs)


def filtration_witness(G: GroupSpec, outside: Sequence[ExactMatrix] = (),
                       pairs: Sequence[tuple[ExactMatrix, ExactMatrix]] = (),
                       m_range: Iterable[int] = range(1, 65), cap: int = DEFAULT_CAP):
    """Smallest modulus whose quotient keeps ``outside`` out of ``f(C)`` and
    separates every pair; returns ``(m, quotient)``."""
    _check_outside(G, outside)
    _check_pairs(G, pairs)
    reasons = []
    for m in m_range:
        try:
            C = central_image(G, m, cap)
            if not separating_conditions_hold(C, outside, pairs):
                continue
            Q = enumerate_quotient(G, m, cap)
        except NonInvertiblePrime:
            continue
        except CapExceeded as exc:
            reasons.append(str(exc))
            continue
        if not verify_witness(Q, outside, pairs):
            raise RfdError(f"modulus {m}: central-image check and full quotient disagree")
        return m, Q
    raise SearchExhausted("no modulus in range separates the requested elements"
                          + (f" ({'; '.join(reasons)})" if reasons else ""))


@dataclass
class ProbeReport:
    group: str
    records: list[dict]

    @property
    def summary(self) -> dict:
        verdicts = [r["verdict"] for r in self.records]
        return {
            "tested": len(verdicts),
            "inside": verdicts.count("inside"),
            "outside": verdicts.count("outside"),
            "errors": verdicts.count("error"),
            "evidence": "one-sided: only congruence quotients are tested; 'inside' for every "
                        "tested modulus is consistent with non-separability but proves nothing",
        }


def _probe_one(G: GroupSpec, x: ExactMatrix, m: int, cap: int, full_order: bool) -> dict:
    t0 = time.perf_counter()
    rec = {"modulus": m, "order": None, "c_image_order": None, "verdict": "error", "error": None}
    try:
        C = central_image(G, m, cap)
        rec["c_image_order"] = C.order
        rec["verdict"] = "inside" if C.contains(x) else "outside"
        if full_order:
            try:
                rec["order"] = enumerate_quotient(G, m, cap).order
            except CapExceeded as exc:
                rec["error"] = str(exc)
    except (CapExceeded, NonInvertiblePrime) as exc:
        rec["verdict"] = "error"
        rec["error"] = str(exc)
    rec["metadata"] = {"elapsed_ms": round(1000 * (time.perf_counter() - t0), 3)}
    return rec


def profinite_probe(G: GroupSpec, x: ExactMatrix, m_list: Iterable[int], cap: int = DEFAULT_CAP,
                    full_order: bool = False, workers: int = 1) -> ProbeReport:
    """For each modulus, decide whether the image of ``x`` lies in ``f(C)``.

    Records come back ordered by modulus whatever the completion order.
    """
    if G.in_center(x):
        raise PreconditionFailed("x must lie outside C")
    ms = sorted(set(m_list))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            records = list(pool.map(lambda m: _probe_one(G, x, m, cap, full_order), ms))
    else:
        records = [_probe_one(G, x, m, cap, full_order) for m in ms]
    return ProbeReport(G.name, records)


def is_subgroup(Q: FiniteQuotient, S: Iterable[int]) -> bool:
    S = set(int(s) for s in S)
    if not S:
        return False
    arr = np.fromiter(S, dtype=np.int64)
    return all(set(Q.left_mul_all(a, arr).tolist()) <= S for a in arr)


def normal_core(Q: FiniteQuotient, S: Iterable[int]) -> frozenset:
    """Largest normal subgroup of ``Q`` inside the subgroup ``S``.

    Conjugates ``g S g^-1`` depend only on the coset ``gS``, so one
    representative per coset is enough.
    """
    S = frozenset(int(s) for s in S)
    if not is_subgroup(Q, S):
        raise NotASubgroup("S is not closed under multiplication")
    s_arr = np.fromiter(sorted(S), dtype=np.int64)
    core = set(S)
    seen = set()
    for g in range(Q.order):
        if g in seen:
            continue
        seen.update(Q.left_mul_all(g, s_arr).tolist())
        ginv = Q.inv(g)
        conj = np.matmul(np.matmul(Q.elements[g], Q.elements[s_arr]) % Q.modulus,
                         Q.elements[ginv]) % Q.modulus
        core &= set(Q.lookup(conj).tolist())
    return frozenset(core)
