"""Exception hierarchy shared by every rfdkit module."""


class RfdError(Exception):
    """Base class for all library errors."""


class RingMismatch(RfdError, ValueError):
    pass


class DimensionMismatch(RfdError, ValueError):
    pass


class NonInvertibleError(RfdError, ValueError):
    pass


class NonInvertiblePrime(NonInvertibleError):
    """Reduction modulo m of a Z[1/p] value with gcd(m, p) != 1."""


class UnknownGenerator(RfdError, KeyError):
    pass


class GroupSpecError(RfdError, ValueError):
    """A group description violates one of its construction checks."""


class BasisError(RfdError, ValueError):
    """A central element cannot be written in the declared basis."""


class CapExceeded(RfdError):
    def __init__(self, modulus, cap, what="quotient"):
        super().__init__(f"{what} modulo {modulus} exceeds cap {cap}")
        self.modulus = modulus
        self.cap = cap


class SearchExhausted(RfdError):
    """No modulus in the searched range satisfied the requested conditions.

    ``partial`` carries whatever results were produced before giving up.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial if partial is not None else []


class PreconditionFailed(RfdError, ValueError):
    pass


class IncompatibleImages(RfdError, ValueError):
    pass


class NotASubgroup(RfdError, ValueError):
    pass


class CommutationFailure(RfdError, ValueError):
    pass


class AmalgamDisagreement(RfdError, ValueError):
    pass


class DimensionCapExceeded(RfdError, ValueError):
    pass


class NotPositive(RfdError, ValueError):
    """Gram matrix of a supposed state has a clearly negative eigenvalue."""


class ConfigError(RfdError, ValueError):
    pass
