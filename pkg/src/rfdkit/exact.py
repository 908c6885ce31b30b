"""Exact ring and matrix arithmetic.

Three coefficient rings are supported: the integers, the residues modulo m,
and the localization Z[1/p].  Integers are plain Python ``int``; the other two
carry their parameters so that mixing rings is caught early.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    NonInvertibleError,
    NonInvertiblePrime,
    RingMismatch,
)


@dataclass(frozen=True, order=True)
class ModInt:
    residue: int
    modulus: int

    def __post_init__(self):
        if self.modulus < 1:
            raise ValueError("modulus must be >= 1")
        object.__setattr__(self, "residue", self.residue % self.modulus)

    def _other(self, other) -> int:
        if isinstance(other, ModInt):
            if other.modulus != self.modulus:
                raise RingMismatch(f"moduli {self.modulus} and {other.modulus}")
            return other.residue
        if isinstance(other, int):
            return other
        return NotImplemented

    def __add__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else ModInt(self.residue + o, self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else ModInt(self.residue - o, self.modulus)

    def __rsub__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else ModInt(o - self.residue, self.modulus)

    def __mul__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else ModInt(self.residue * o, self.modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return ModInt(-self.residue, self.modulus)

    def inverse(self) -> ModInt:
        try:
            return ModInt(pow(self.residue, -1, self.modulus), self.modulus)
        except ValueError:
            raise NonInvertibleError(f"{self.residue} is not a unit mod {self.modulus}") from None

    def __str__(self):
        return str(self.residue)


@dataclass(frozen=True)
class PLocal:
    """The number ``num / p**pexp`` in Z[1/p], kept in lowest terms."""

    num: int
    pexp: int
    p: int

    def __post_init__(self):
        if self.pexp < 0:
            raise ValueError("pexp must be non-negative")
        num, k = self.num, self.pexp
        if num == 0:
            k = 0
        while k and num % self.p == 0:
            num //= self.p
            k -= 1
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "pexp", k)

    @classmethod
    def from_fraction(cls, value, p: int) -> PLocal:
        q = Fraction(value)
        den, k = q.denominator, 0
        while den % p == 0:
            den //= p
            k += 1
        if den != 1:
            raise ValueError(f"{value} is not in Z[1/{p}]")
        return cls(q.numerator, k, p)

    def _other(self, other) -> PLocal:
        if isinstance(other, PLocal):
            if other.p != self.p:
                raise RingMismatch(f"Z[1/{self.p}] vs Z[1/{other.p}]")
            return other
        if isinstance(other, int):
            return PLocal(other, 0, self.p)
        return NotImplemented

    def __add__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        k = max(self.pexp, o.pexp)
        num = self.num * self.p ** (k - self.pexp) + o.num * self.p ** (k - o.pexp)
        return PLocal(num, k, self.p)

    __radd__ = __add__

    def __neg__(self):
        return PLocal(-self.num, self.pexp, self.p)

    def __sub__(self, other):
        o = self._other(other)
        return o if o is NotImplemented else self + (-o)

    def __rsub__(self, other):
        o = self._other(other)
        return o if o is NotImplemented else o + (-self)

    def __mul__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return PLocal(self.num * o.num, self.pexp + o.pexp, self.p)

    __rmul__ = __mul__

    def is_integral(self) -> bool:
        return self.pexp == 0

    def inverse(self) -> PLocal:
        """Inverse of a unit, i.e. of a value ``±p**a / p**k``."""
        a, num = 0, abs(self.num)
        while num > 1 and num % self.p == 0:
            num //= self.p
            a += 1
        if num != 1:
            raise NonInvertibleError(f"{self} is not a unit of Z[1/{self.p}]")
        sign = 1 if self.num > 0 else -1
        # (±p^a / p^k)^-1 = ±p^k / p^a
        return PLocal(sign * self.p**self.pexp, a, self.p)

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, self.p**self.pexp)

    def __str__(self):
        return str(self.to_fraction())


@dataclass(frozen=True)
class Ring:
    """Ring descriptor: ``Z``, ``Z/m`` or ``Z[1/p]``."""

    kind: str
    param: int = 0

    @classmethod
    def integers(cls) -> Ring:
        return cls("Z")

    @classmethod
    def mod(cls, m: int) -> Ring:
        return cls("Zm", m)

    @classmethod
    def localized(cls, p: int) -> Ring:
        return cls("Zp", p)

    def __str__(self):
        if self.kind == "Z":
            return "Z"
        if self.kind == "Zm":
            return f"Z/{self.param}"
        return f"Z[1/{self.param}]"

    def coerce(self, value):
        """Turn an int, Fraction, or string such as ``"1/2"`` into a ring value."""
        if isinstance(value, str):
            value = Fraction(value.strip())
        if self.kind == "Z":
            if isinstance(value, PLocal):
                if not value.is_integral():
                    raise RingMismatch(f"{value} is not an integer")
                return value.num
            q = Fraction(value)
            if q.denominator != 1:
                raise RingMismatch(f"{value} is not an integer")
            return q.numerator
        if self.kind == "Zm":
            if isinstance(value, ModInt):
                if value.modulus != self.param:
                    raise RingMismatch(f"{value.modulus} vs {self.param}")
                return value
            q = Fraction(value)
            res = q.numerator * pow(q.denominator, -1, self.param) if self.param > 1 else 0
            return ModInt(res, self.param)
        if isinstance(value, PLocal):
            if value.p != self.param:
                raise RingMismatch(f"Z[1/{value.p}] vs {self}")
            return value
        return PLocal.from_fraction(value, self.param)

    def zero(self):
        return self.coerce(0)

    def one(self):
        return self.coerce(1)

    def unit_inverse(self, a):
        if self.kind == "Z":
            if a not in (1, -1):
                raise NonInvertibleError(f"{a} is not a unit of Z")
            return a
        return a.inverse()


@dataclass(frozen=True)
class ExactMatrix:
    """Square matrix with exact entries, stored row-major."""

    ring: Ring
    n: int
    entries: tuple

    def __post_init__(self):
        if len(self.entries) != self.n * self.n:
            raise DimensionMismatch(f"{len(self.entries)} entries for n={self.n}")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], ring: Ring | None = None) -> ExactMatrix:
        ring = ring or Ring.integers()
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise DimensionMismatch("matrix must be square")
        return cls(ring, n, tuple(ring.coerce(v) for r in rows for v in r))

    @classmethod
    def identity(cls, n: int, ring: Ring | None = None) -> ExactMatrix:
        ring = ring or Ring.integers()
        one, zero = ring.one(), ring.zero()
        return cls(ring, n, tuple(one if i == j else zero for i in range(n) for j in range(n)))

    @classmethod
    def elementary(cls, n: int, i: int, j: int, value=1, ring: Ring | None = None) -> ExactMatrix:
        """``I + value * E_ij`` with 0-based indices, ``i != j``."""
        ring = ring or Ring.integers()
        ent = list(cls.identity(n, ring).entries)
        ent[i * n + j] = ent[i * n + j] + ring.coerce(value)
        return cls(ring, n, tuple(ent))

    @classmethod
    def diagonal(cls, diag: Iterable, ring: Ring | None = None) -> ExactMatrix:
        ring = ring or Ring.integers()
        d = [ring.coerce(v) for v in diag]
        n = len(d)
        zero = ring.zero()
        return cls(ring, n, tuple(d[i] if i == j else zero for i in range(n) for j in range(n)))

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.n + j]

    def rows(self) -> list[list]:
        n = self.n
        return [list(self.entries[i * n:(i + 1) * n]) for i in range(n)]

    def __matmul__(self, other: ExactMatrix) -> ExactMatrix:
        return mat_mul(self, other)

    def __pow__(self, k: int) -> ExactMatrix:
        base = self if k >= 0 else mat_inv(self)
        k = abs(k)
        result = ExactMatrix.identity(self.n, self.ring)
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def inv(self) -> ExactMatrix:
        return mat_inv(self)

    def is_identity(self) -> bool:
        return self == ExactMatrix.identity(self.n, self.ring)

    def is_upper_triangular(self) -> bool:
        zero = self.ring.zero()
        return all(self[i, j] == zero for i in range(self.n) for j in range(i))

    def reduce_mod(self, m: int) -> ExactMatrix:
        return reduce_mod(self, m)

    def to_array(self) -> np.ndarray:
        """Residues as an int64 array; only for matrices over Z/m."""
        if self.ring.kind != "Zm":
            raise RingMismatch("to_array needs a matrix over Z/m")
        return np.array([e.residue for e in self.entries], dtype=np.int64).reshape(self.n, self.n)

    @classmethod
    def from_array(cls, arr: np.ndarray, m: int) -> ExactMatrix:
        ring = Ring.mod(m)
        n = arr.shape[0]
        return cls(ring, n, tuple(ModInt(int(v), m) for v in arr.reshape(-1)))

    def __str__(self):
        return "[" + "; ".join(" ".join(str(v) for v in row) for row in self.rows()) + "]"


def mat_mul(a: ExactMatrix, b: ExactMatrix) -> ExactMatrix:
    if a.ring != b.ring:
        raise RingMismatch(f"{a.ring} vs {b.ring}")
    if a.n != b.n:
        raise DimensionMismatch(f"{a.n} vs {b.n}")
    n = a.n
    zero = a.ring.zero()
    A, B = a.entries, b.entries
    out = []
    for i in range(n):
        row = A[i * n:(i + 1) * n]
        for j in range(n):
            acc = zero
            for k in range(n):
                x = row[k]
                if x != zero:
                    y = B[k * n + j]
                    if y != zero:
                        acc = acc + x * y
            out.append(acc)
    return ExactMatrix(a.ring, n, tuple(out))


def mat_inv(a: ExactMatrix) -> ExactMatrix:
    """Inverse of an upper-triangular matrix whose diagonal entries are units.

    Back-substitution column by column; no fraction field is needed because
    only the diagonal is ever divided by.
    """
    if not a.is_upper_triangular():
        raise NonInvertibleError("only upper-triangular matrices are inverted")
    n, ring = a.n, a.ring
    zero = ring.zero()
    dinv = [ring.unit_inverse(a[i, i]) for i in range(n)]
    x = [[zero] * n for _ in range(n)]
    for j in range(n):
        x[j][j] = dinv[j]
        for i in range(j - 1, -1, -1):
            acc = zero
            for k in range(i + 1, j + 1):
                acc = acc + a[i, k] * x[k][j]
            x[i][j] = -(dinv[i] * acc)
    return ExactMatrix(ring, n, tuple(v for row in x for v in row))


def reduce_mod(a: ExactMatrix, m: int) -> ExactMatrix:
    """Entry-wise reduction of a matrix over Z or Z[1/p] into Z/m."""
    if m < 1:
        raise ValueError("modulus must be >= 1")
    kind = a.ring.kind
    if kind == "Z":
        ent = tuple(ModInt(v, m) for v in a.entries)
    elif kind == "Zp":
        p = a.ring.param
        if gcd(m, p) != 1:
            raise NonInvertiblePrime(f"gcd({m}, {p}) != 1")
        pinv = pow(p, -1, m) if m > 1 else 0
        ent = tuple(ModInt(v.num * pow(pinv, v.pexp, m), m) for v in a.entries)
    else:
        raise RingMismatch(f"cannot reduce a matrix over {a.ring}")
    return ExactMatrix(Ring.mod(m), a.n, ent)
