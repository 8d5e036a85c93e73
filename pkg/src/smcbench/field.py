"""Exact modular arithmetic over a configurable prime field.

All share payloads live in Z_p. The default modulus is the Mersenne prime
2**61 - 1: elements serialize to 8 bytes, and sums of centimeter-scale
inputs over many peers and sessions stay far from wrapping.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import _kernels

DEFAULT_PRIME = (1 << 61) - 1

# Residues encoding benchmark payloads must keep headroom for the running
# sum: 15 peers x 20000 sessions of centimeter distances.
RECOMMENDED_MIN_PRIME = 1 << 32

MILLER_RABIN_ROUNDS = 64  # error probability below 4**-64


class ModulusMismatchError(ValueError):
    """Operands of a field operation belong to different fields."""


def is_probable_prime(n, rounds=MILLER_RABIN_ROUNDS):
    """Miller-Rabin with a fixed internal seed; error probability < 4**-rounds."""
    if n < 2:
        return False
    for small in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n == small:
            return True
        if n % small == 0:
            return False
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    rng = random.Random(n ^ 0x9E3779B97F4A7C15)
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = (x * x) % n
            if x == n - 1:
                break
        else:
            return False
    return True


class PrimeModulus:
    """A verified prime p together with its serialization width.

    Immutable; instances may be shared freely between threads. User-supplied
    moduli are checked probabilistically at construction, the default prime
    is hard-coded as known. Small primes (< 2**32) are accepted so that the
    share algebra can be exercised over tiny fields; the benchmark workload
    enforces its own overflow bound when encoding inputs.
    """

    __slots__ = ("p", "bit_length", "byte_length", "_kernels")

    def __init__(self, p, *, _trusted=False):
        if not isinstance(p, int) or p < 3:
            raise ValueError(f"modulus must be an integer >= 3, got {p!r}")
        if not _trusted and not is_probable_prime(p):
            raise ValueError(f"{p} is not prime")
        self.p = p
        self.bit_length = p.bit_length()
        self.byte_length = (self.bit_length + 7) // 8
        self._kernels = _kernels.impl_for(p)

    @classmethod
    def from_decimal(cls, text):
        """Parse a decimal string, e.g. from a CLI flag or a config file."""
        try:
            p = int(text.strip(), 10)
        except ValueError as exc:
            raise ValueError(f"not a decimal integer: {text!r}") from exc
        return cls(p)

    def element(self, value):
        """Embed an integer into the field (reduced mod p)."""
        return FieldElement(value % self.p, self)

    def zero(self):
        return FieldElement(0, self)

    def one(self):
        return FieldElement(1, self)

    def __eq__(self, other):
        return isinstance(other, PrimeModulus) and other.p == self.p

    def __hash__(self):
        return hash(self.p)

    def __repr__(self):
        return f"PrimeModulus({self.p})"


DEFAULT_MODULUS = PrimeModulus(DEFAULT_PRIME, _trusted=True)


def _require_same_modulus(a, b):
    if a.modulus != b.modulus:
        raise ModulusMismatchError(
            f"mixed moduli: {a.modulus.p} vs {b.modulus.p}"
        )


@dataclass(frozen=True, slots=True)
class FieldElement:
    """A value in [0, p). Immutable; all operations return new elements."""

    value: int
    modulus: PrimeModulus = field(repr=False)

    def __post_init__(self):
        if not 0 <= self.value < self.modulus.p:
            raise ValueError(
                f"value {self.value} outside [0, {self.modulus.p})"
            )

    def __add__(self, other):
        _require_same_modulus(self, other)
        return FieldElement((self.value + other.value) % self.modulus.p, self.modulus)

    def __sub__(self, other):
        _require_same_modulus(self, other)
        return FieldElement((self.value - other.value) % self.modulus.p, self.modulus)

    def __mul__(self, other):
        _require_same_modulus(self, other)
        k = self.modulus._kernels
        return FieldElement(k.mul_mod(self.value, other.value, self.modulus.p), self.modulus)

    def __neg__(self):
        return FieldElement(-self.value % self.modulus.p, self.modulus)

    def inverse(self):
        if self.value == 0:
            raise ZeroDivisionError("0 has no multiplicative inverse")
        k = self.modulus._kernels
        return FieldElement(k.inv_mod(self.value, self.modulus.p), self.modulus)

    def to_bytes(self):
        """Canonical big-endian fixed-width encoding."""
        return self.value.to_bytes(self.modulus.byte_length, "big")

    @classmethod
    def from_bytes(cls, data, modulus):
        if len(data) != modulus.byte_length:
            raise ValueError(
                f"expected {modulus.byte_length} bytes, got {len(data)}"
            )
        return cls(int.from_bytes(data, "big"), modulus)

    def __repr__(self):
        return f"FieldElement({self.value} mod {self.modulus.p})"


def add(a, b):
    return a + b


def mul(a, b):
    return a * b


def inv(a):
    return a.inverse()


def random_element(rng, modulus):
    """Uniform draw from [0, p); deterministic for a fixed rng state."""
    return FieldElement(rng.randrange(modulus.p), modulus)
