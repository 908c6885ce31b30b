"""Finite-dimensional unitary representations built from congruence quotients.

Induced representations are stored as :class:`Monomial` data (one row index
and one root-of-unity exponent per column), so scalar-on-centre and
zero-diagonal-off-centre are exact properties of integer arrays rather than
floating point observations.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .characters import (Character, QuotientCharacter, character_on_image, chord,
                         extend_by_zero, k0_for, root_of_unity)
from .errors import (CapExceeded, DimensionCapExceeded, DimensionMismatch, NotPositive,
                     PreconditionFailed, RfdError, SearchExhausted)
from .exact import ExactMatrix
from .groups import GroupSpec, GroupWord, evaluate_word
from .quotients import (DEFAULT_CAP, FiniteQuotient, _check_outside, central_image,
                        enumerate_quotient, separating_conditions_hold)

DIM_CAP = 4096


class Monomial:
    """Unitary monomial matrix: column ``j`` has ``exp(2*pi*i*exps[j]/denom)`` in row ``perm[j]``."""

    __slots__ = ("perm", "exps", "denom")
    __array_ufunc__ = None  # make ndarray @ Monomial defer to __rmatmul__

    def __init__(self, perm, exps, denom: int = 1):
        self.perm = np.asarray(perm, dtype=np.int64)
        self.denom = int(denom)
        self.exps = np.asarray(exps, dtype=np.int64) % self.denom

    @classmethod
    def identity(cls, d: int) -> Monomial:
        return cls(np.arange(d), np.zeros(d, dtype=np.int64), 1)

    @classmethod
    def scalar(cls, d: int, angle: Fraction) -> Monomial:
        angle = Fraction(angle)
        return cls(np.arange(d), np.full(d, angle.numerator), angle.denominator)

    @property
    def dim(self) -> int:
        return len(self.perm)

    def _rescaled(self, D: int) -> np.ndarray:
        return self.exps * (D // self.denom)

    def __matmul__(self, other):
        if isinstance(other, Monomial):
            if other.dim != self.dim:
                raise DimensionMismatch(f"{self.dim} vs {other.dim}")
            D = math.lcm(self.denom, other.denom)
            exps = other._rescaled(D) + self._rescaled(D)[other.perm]
            return Monomial(self.perm[other.perm], exps, D)
        return self.to_dense() @ other

    def __rmatmul__(self, other):
        return other @ self.to_dense()

    def inverse(self) -> Monomial:
        perm = np.empty_like(self.perm)
        perm[self.perm] = np.arange(self.dim)
        # inverse has conj(phase_j) in row j, column perm[j]
        exps = np.empty_like(self.exps)
        exps[self.perm] = -self.exps
        return Monomial(perm, exps, self.denom)

    def __eq__(self, other):
        if not isinstance(other, Monomial) or other.dim != self.dim:
            return NotImplemented
        D = math.lcm(self.denom, other.denom)
        return (np.array_equal(self.perm, other.perm)
                and np.array_equal(self._rescaled(D) % D, other._rescaled(D) % D))

    __hash__ = None

    def phases(self) -> np.ndarray:
        values = np.empty(self.dim, dtype=complex)
        for e in np.unique(self.exps):
            values[self.exps == e] = root_of_unity(Fraction(int(e), self.denom))
        return values

    def to_dense(self) -> np.ndarray:
        M = np.zeros((self.dim, self.dim), dtype=complex)
        M[self.perm, np.arange(self.dim)] = self.phases()
        return M

    def fixed_points(self) -> np.ndarray:
        return np.nonzero(self.perm == np.arange(self.dim))[0]

    def diagonal_is_zero(self) -> bool:
        return len(self.fixed_points()) == 0

    def scalar_angle(self) -> Fraction | None:
        """The angle ``a`` if the matrix is exactly ``exp(2*pi*i*a) I``, else ``None``."""
        if not np.array_equal(self.perm, np.arange(self.dim)):
            return None
        if self.dim and np.all(self.exps == self.exps[0]):
            return Fraction(int(self.exps[0]), self.denom)
        return None

    def is_identity(self) -> bool:
        return self.scalar_angle() == 0

    def trace(self) -> complex:
        fp = self.fixed_points()
        if len(fp) == 0:
            return 0j
        return complex(np.sum(self.phases()[fp]))

    def normalized_trace(self) -> complex:
        a = self.scalar_angle()
        if a is not None:
            return root_of_unity(a)
        return self.trace() / self.dim

    def distance_to_identity(self) -> float:
        """``||M - I||_op`` from the cycle structure.

        A cycle of length ``l`` whose phases multiply to ``exp(2*pi*i*a)`` has
        eigenvalues ``exp(2*pi*i*(a + j)/l)``, ``j = 0..l-1``.
        """
        seen = np.zeros(self.dim, dtype=bool)
        best = 0.0
        for start in range(self.dim):
            if seen[start]:
                continue
            total, length, j = 0, 0, start
            while not seen[j]:
                seen[j] = True
                total += int(self.exps[j])
                length += 1
                j = int(self.perm[j])
            a = Fraction(total, self.denom)
            for r in range(length):
                best = max(best, chord((a + r) / length, Fraction(0)))
        return best


def _as_dense(M) -> np.ndarray:
    return M.to_dense() if isinstance(M, Monomial) else np.asarray(M, dtype=complex)


def op_distance_to_identity(M) -> float:
    if isinstance(M, Monomial):
        return M.distance_to_identity()
    A = np.asarray(M, dtype=complex)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A - np.eye(A.shape[0]), 2))


def is_unitary(M, tol: float = 1e-9) -> bool:
    A = _as_dense(M)
    return float(np.max(np.abs(A.conj().T @ A - np.eye(A.shape[0])), initial=0.0)) <= tol


class FinDimRep:
    """Base class: ``rep(g)`` returns a :class:`Monomial` or a dense unitary."""

    dim: int

    def __call__(self, g):
        raise NotImplementedError

    def matrix(self, g) -> np.ndarray:
        return _as_dense(self(g))

    def normalized_trace(self, g) -> complex:
        M = self(g)
        if isinstance(M, Monomial):
            return M.normalized_trace()
        return complex(np.trace(M)) / self.dim

    def word(self, letters: Sequence) -> np.ndarray | Monomial:
        """Ordered product of the images of ``letters``."""
        out = None
        for g in letters:
            M = self(g)
            out = M if out is None else out @ M
        return Monomial.identity(self.dim) if out is None else out


class InducedRep(FinDimRep):
    """``Ind chi`` on a finite quotient, indexed by the coset transversal."""

    def __init__(self, Q: FiniteQuotient, chi: QuotientCharacter):
        if chi.central.modulus != Q.modulus or chi.central.group is not Q.group \
                or chi.central.order != Q.central.order:
            raise PreconditionFailed("the character does not live on this quotient's central image")
        self.Q = Q
        self.chi = chi
        self.dim = len(Q.transversal)
        self._nums = chi.numerators()
        self._denom = chi.denominator
        self._cache: dict[int, Monomial] = {}
        self._lock = threading.Lock()

    def index_of(self, g) -> int:
        Q = self.Q
        if isinstance(g, (int, np.integer)):
            return int(g)
        if isinstance(g, (GroupWord, str)):
            g = evaluate_word(Q.group, g)
        return Q.image(g)

    def __call__(self, g) -> Monomial:
        q = self.index_of(g)
        M = self._cache.get(q)
        if M is not None:
            return M
        Q = self.Q
        targets = Q.left_mul_all(q, Q.transversal)
        M = Monomial(Q.coset_of[targets], self._nums[Q.central_part[targets]], self._denom)
        with self._lock:
            return self._cache.setdefault(q, M)

    def __repr__(self):
        return f"InducedRep({self.Q!r}, dim={self.dim})"


class ExplicitRep(FinDimRep):
    """Unitary matrices assigned to generator names; elements are words."""

    def __init__(self, group: GroupSpec, images: dict[str, np.ndarray], tol: float = 1e-9):
        self.group = group
        self.images = {k: np.asarray(v, dtype=complex) for k, v in images.items()}
        dims = {v.shape for v in self.images.values()}
        if len(dims) != 1:
            raise DimensionMismatch("generator images have different shapes")
        self.dim = dims.pop()[0]
        for name, U in self.images.items():
            if name not in group.gen_names:
                raise KeyError(name)
            if not is_unitary(U, tol):
                raise ValueError(f"image of {name} is not unitary")

    def __call__(self, g) -> np.ndarray:
        if isinstance(g, str):
            g = GroupWord.parse(g)
        if not isinstance(g, GroupWord):
            raise TypeError("explicit representations evaluate words, not matrices")
        out = np.eye(self.dim, dtype=complex)
        for name, k in g.letters:
            out = out @ np.linalg.matrix_power(self.images[name], k)
        return out


class MultipleRep(FinDimRep):
    """``k``-fold direct sum of a representation (block diagonal)."""

    def __init__(self, base: FinDimRep, k: int):
        self.base = base
        self.k = k
        self.dim = base.dim * k

    def __call__(self, g):
        M = self.base(g)
        if isinstance(M, Monomial):
            d = M.dim
            offs = np.repeat(np.arange(self.k) * d, d)
            return Monomial(np.tile(M.perm, self.k) + offs, np.tile(M.exps, self.k), M.denom)
        return np.kron(np.eye(self.k), M)


class ConjugateRep(FinDimRep):
    """``g -> U* base(g) U``."""

    def __init__(self, base: FinDimRep, U):
        self.base = base
        self.U = U
        if isinstance(U, Monomial):
            self._Uinv = U.inverse()
        else:
            U = np.asarray(U, dtype=complex)
            self.U = U
            self._Uinv = U.conj().T
        dim = self.U.dim if isinstance(self.U, Monomial) else self.U.shape[0]
        if dim != base.dim:
            raise DimensionMismatch(f"unitary of size {dim} for a rep of dimension {base.dim}")
        self.dim = base.dim

    def __call__(self, g):
        M = self.base(g)
        if isinstance(self.U, Monomial) and isinstance(M, Monomial):
            return self._Uinv @ M @ self.U
        return _as_dense(self._Uinv) @ _as_dense(M) @ _as_dense(self.U)


def induce(Q: FiniteQuotient, chi: QuotientCharacter) -> InducedRep:
    return InducedRep(Q, chi)


def normalized_trace(rho: FinDimRep, g) -> complex:
    return rho.normalized_trace(g)


def align_dims(rho1: FinDimRep, rho2: FinDimRep, cap: int = DIM_CAP):
    """Replace both reps by multiples of common dimension ``lcm(d1, d2)``."""
    d = math.lcm(rho1.dim, rho2.dim)
    if d > cap:
        raise DimensionCapExceeded(f"lcm({rho1.dim}, {rho2.dim}) = {d} exceeds {cap}")
    wrap = lambda r: r if r.dim == d else MultipleRep(r, d // r.dim)
    return wrap(rho1), wrap(rho2)


# -- certificates for the character approximation -----------------------------

@dataclass
class Certificate:
    level: int
    epsilon: float
    modulus: int
    dim: int
    rep: InducedRep = field(repr=False)
    central_errors: list[float]
    outside_zero: list[bool]

    @property
    def max_central_error(self) -> float:
        return max(self.central_errors, default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_central_error <= self.epsilon and all(self.outside_zero)

    def to_json(self) -> dict:
        return {"modulus": self.modulus, "dim": self.dim, "epsilon_level": self.level,
                "epsilon": self.epsilon, "max_central_error": self.max_central_error,
                "outside_traces": self.outside_zero,
                "character": self.rep.chi.to_json()}


def certify(G: GroupSpec, lam: Character, rep: InducedRep, level: int, eps: float,
            test_outside, test_central) -> Certificate:
    """Recompute the certificate from the representation alone."""
    errs = []
    for h in test_central:
        M = rep(h)
        a = M.scalar_angle()
        if a is None:
            errs.append(float("inf"))
        else:
            errs.append(chord(a, lam.angle(G.c_coordinates(h))))
    zeros = [rep(a).diagonal_is_zero() for a in test_outside]
    return Certificate(level, eps, rep.Q.modulus, rep.dim, rep, errs, zeros)


def character_approx_sequence(G: GroupSpec, lam: Character, eps: float,
                              test_outside: Sequence[ExactMatrix] = (),
                              test_central: Sequence[ExactMatrix] | None = None,
                              budget: int = 0, m_range=None,
                              cap: int = DEFAULT_CAP) -> list[Certificate]:
    """One certified induced representation per tolerance level ``eps / 2**k``.

    For each level the smallest modulus is chosen whose central image keeps
    ``test_outside`` outside, keeps ``test_central`` pairwise distinct, and
    whose nearest-root character meets the level's tolerance.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    _check_outside(G, test_outside)
    central = list(test_central) if test_central is not None else [c for _, c in G.c_generators]
    pairs = [(a, b) for i, a in enumerate(central) for b in central[i + 1:] if a != b]
    quotients: dict[int, FiniteQuotient] = {}
    certs: list[Certificate] = []
    for level in range(budget + 1):
        eps_k = eps / 2 ** level
        if m_range is None:
            L = max((abs(x) for h in central for x in G.c_coordinates(h)[:G.free_rank]), default=0)
            top = max(64, k0_for(eps_k, max(G.free_rank, 1), L))
            moduli = range(1, top + 1)
        else:
            moduli = m_range
        found = None
        for m in moduli:
            if G.ring.kind == "Zp" and math.gcd(m, G.ring.param) != 1:
                continue
            try:
                C = central_image(G, m, cap)
            except CapExceeded:
                continue
            if not separating_conditions_hold(C, test_outside, pairs):
                continue
            try:
                chi = character_on_image(G, C, lam, eps_k, central, enforce_net=False)
            except PreconditionFailed:
                continue
            if max(chi.approx_errors, default=0.0) > eps_k:
                continue
            try:
                Q = quotients.get(m) or enumerate_quotient(G, m, cap)
            except CapExceeded:
                continue
            quotients[m] = Q
            chi = character_on_image(G, Q.central, lam, eps_k, central, enforce_net=False)
            cert = certify(G, lam, induce(Q, chi), level, eps_k, test_outside, central)
            if cert.passed:
                found = cert
                break
        if found is None:
            raise SearchExhausted(f"no modulus certifies level {level} (eps={eps_k})", certs)
        certs.append(found)
    return certs


# -- GNS ------------------------------------------------------------------------

@dataclass(frozen=True)
class StateVector:
    """Either the normalized trace (``vector is None``) or a vector state."""

    vector: np.ndarray | None = None

    @classmethod
    def normalized_trace(cls) -> StateVector:
        return cls(None)

    @classmethod
    def unit_vector(cls, v) -> StateVector:
        v = np.asarray(v, dtype=complex)
        n = np.linalg.norm(v)
        if abs(n - 1) > 1e-12:
            raise ValueError("state vector must have unit norm")
        return cls(v)

    def __call__(self, A) -> complex:
        if isinstance(A, Monomial):
            if self.vector is None:
                return A.normalized_trace()
            A = A.to_dense()
        A = np.asarray(A)
        if self.vector is None:
            return complex(np.trace(A)) / A.shape[0]
        return complex(self.vector.conj() @ A @ self.vector)


class MatrixRep(FinDimRep):
    """Dense matrices indexed by quotient elements."""

    def __init__(self, Q: FiniteQuotient, matrices: np.ndarray):
        self.Q = Q
        self.matrices = matrices
        self.dim = matrices.shape[1]

    def __call__(self, g) -> np.ndarray:
        if isinstance(g, (GroupWord, str)):
            g = evaluate_word(self.Q.group, g)
        q = int(g) if isinstance(g, (int, np.integer)) else self.Q.image(g)
        return self.matrices[q]


@dataclass
class GNSResult:
    dim: int
    rep: MatrixRep
    cyclic_vector: np.ndarray
    gram_min_eigenvalue: float


def _rep_at(rho: FinDimRep, Q: FiniteQuotient, q: int):
    return rho(q) if isinstance(rho, InducedRep) else rho(Q.element_matrix(q))


def gns_from_state(rho: FinDimRep, f: StateVector, Q: FiniteQuotient,
                   tol: float = 1e-9) -> GNSResult:
    """Finite GNS construction on the span of ``{rho(q) : q in Q}``."""
    N = Q.order
    mats = [_rep_at(rho, Q, q) for q in range(N)]
    dense = [_as_dense(M) for M in mats]
    K = np.empty((N, N), dtype=complex)
    for p in range(N):
        Ap = dense[p].conj().T
        for q in range(N):
            K[p, q] = f(Ap @ dense[q])
    if np.max(np.abs(K - K.conj().T)) > 1e-9:
        raise NotPositive("state is not Hermitian on the represented algebra")
    K = (K + K.conj().T) / 2
    w, V = np.linalg.eigh(K)
    lo = float(w[0])
    if lo < -tol:
        raise NotPositive(f"Gram matrix has eigenvalue {lo}")
    # K = W^H W; norms taken in W-space avoid the cancellation of v^H K v
    W = np.sqrt(np.where(w > tol, w, 0.0))[:, None] * V.conj().T
    coeffs: list[np.ndarray] = []
    images: list[np.ndarray] = []
    for q in range(N):
        c = np.zeros(N, dtype=complex)
        c[q] = 1
        y = W[:, q].copy()
        for _ in range(2):  # second pass removes drift
            for bc, by in zip(coeffs, images):
                proj = by.conj() @ y
                c = c - proj * bc
                y = y - proj * by
        nrm = float(np.linalg.norm(y))
        if nrm > tol:
            coeffs.append(c / nrm)
            images.append(y / nrm)
    r = len(coeffs)
    B = np.array(coeffs).T if r else np.zeros((N, 0), dtype=complex)
    YW = (np.array(images).conj() @ W) if r else np.zeros((0, N), dtype=complex)
    out = np.empty((N, r, r), dtype=complex)
    all_idx = np.arange(N)
    for q in range(N):
        target = Q.left_mul_all(q, all_idx)
        PB = np.zeros_like(B)
        PB[target] = B
        out[q] = YW @ PB
    e = Q.image(Q.group.identity())
    xi = YW[:, e].copy()
    return GNSResult(r, MatrixRep(Q, out), xi, lo)


# -- kernel consistency ------------------------------------------------------------

@dataclass
class KernelCheck:
    status: str  # "pass", "fail" or "skipped"
    norm: float | None = None
    reason: str = ""

    def to_json(self) -> dict:
        return {"status": self.status, "norm": self.norm, "reason": self.reason}


def _rep_matrix(rho: FinDimRep, g: ExactMatrix) -> np.ndarray:
    return _as_dense(rho(g))


def kernel_consistency_check(G: GroupSpec, lam: Character, coefficients: Sequence[tuple],
                             rho: FinDimRep, tol: float = 1e-9) -> KernelCheck:
    """If ``F = sum t_g g`` is null for the zero-extended character, ``rho(F)`` must vanish."""
    terms = [(g, complex(t)) for g, t in coefficients]
    total = 0j
    for g, s in terms:
        gi = g.inv()
        for h, t in terms:
            total += s.conjugate() * t * extend_by_zero(G, lam, gi @ h)
    if abs(total) > 1e-12:
        return KernelCheck("skipped", None, f"lambda~(F*F) = {abs(total):.3e} is not zero")
    for _, c in G.c_generators:
        M = _rep_matrix(rho, c)
        want = lam.value(G.c_coordinates(c)) * np.eye(rho.dim)
        if np.max(np.abs(M - want)) > 1e-12:
            return KernelCheck("skipped", None, "representation is not lambda on C")
    if not terms:
        return KernelCheck("pass", 0.0)
    F = sum(t * _rep_matrix(rho, g) for g, t in terms)
    norm = float(np.linalg.norm(F, 2))
    return KernelCheck("pass" if norm <= tol else "fail", norm)


def exact_level_rep(G: GroupSpec, lam: Character, m: int, cap: int = DEFAULT_CAP) -> InducedRep:
    """Induced rep mod ``m`` whose character equals ``lam`` exactly on ``C``.

    Needs ``lam`` rational with every free angle's order dividing the
    image order of its direction.
    """
    Q = enumerate_quotient(G, m, cap)
    chi = character_on_image(G, Q.central, lam, 1.0, enforce_net=False)
    if any(e != 0.0 for e in chi.approx_errors):
        raise PreconditionFailed(f"lambda is not exactly realised modulo {m}")
    return induce(Q, chi)


__all__ = [
    "Monomial", "FinDimRep", "InducedRep", "ExplicitRep", "MultipleRep", "ConjugateRep",
    "MatrixRep", "StateVector", "Certificate", "GNSResult", "KernelCheck", "induce",
    "normalized_trace", "align_dims", "certify", "character_approx_sequence",
    "gns_from_state", "kernel_consistency_check", "exact_level_rep", "op_distance_to_identity",
    "is_unitary", "DIM_CAP",
]
