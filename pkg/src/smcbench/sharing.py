"""Shamir polynomial secret sharing and the local share algebra.

Covers the four primitives of a threshold run: turning a secret into n
shares (the input phase), adding shares locally, multiplying shares (which
yields a point on a degree-2t polynomial that must be degree-reduced by the
engine's resharing round), and recombining shares at x=0 (the output phase).
"""

from __future__ import annotations

from dataclasses import dataclass

from .field import FieldElement, ModulusMismatchError

# Share x-coordinates are 1-based party indices carried in a single byte.
MAX_PARTIES = 255

WIRE_SESSION_BYTES = 4
WIRE_ROUND_BYTES = 2


@dataclass(frozen=True, slots=True)
class ThresholdConfig:
    """Party count n and polynomial degree t; 2t < n permits multiplication."""

    n: int
    t: int

    def __post_init__(self):
        if not 3 <= self.n <= MAX_PARTIES:
            raise ValueError(f"party count must be in [3, {MAX_PARTIES}], got {self.n}")
        if self.t < 1:
            raise ValueError(f"threshold must be >= 1, got {self.t}")
        if 2 * self.t >= self.n:
            raise ValueError(
                f"need 2t < n for degree reduction, got n={self.n}, t={self.t}"
            )

    @classmethod
    def for_parties(cls, n):
        """Maximum threshold tolerable with passive security: t = (n-1)//2."""
        return cls(n, max(1, (n - 1) // 2))

    @property
    def parties(self):
        return range(1, self.n + 1)


@dataclass(frozen=True, slots=True)
class Share:
    """One point (x, y) of a sharing. x=0 is the secret and never a share."""

    x: int
    y: FieldElement
    session_tag: int = 0

    def __post_init__(self):
        if not 1 <= self.x <= MAX_PARTIES:
            raise ValueError(f"share index must be in [1, {MAX_PARTIES}], got {self.x}")


class SharePolynomial:
    """A degree-<=t polynomial whose constant term is the secret."""

    __slots__ = ("coefficients", "modulus")

    def __init__(self, coefficients):
        if not coefficients:
            raise ValueError("need at least the constant coefficient")
        self.coefficients = list(coefficients)
        self.modulus = coefficients[0].modulus
        for c in coefficients:
            if c.modulus != self.modulus:
                raise ModulusMismatchError("mixed moduli in coefficients")

    @classmethod
    def random(cls, secret, t, rng):
        """Fresh polynomial with P(0) = secret and t uniform coefficients."""
        p = secret.modulus.p
        coeffs = [secret] + [
            FieldElement(rng.randrange(p), secret.modulus) for _ in range(t)
        ]
        return cls(coeffs)

    @property
    def degree_bound(self):
        return len(self.coefficients) - 1

    def evaluate(self, x):
        k = self.modulus._kernels
        raw = k.poly_eval([c.value for c in self.coefficients], x, self.modulus.p)
        return FieldElement(raw, self.modulus)

    def evaluate_many(self, xs):
        k = self.modulus._kernels
        raw = k.poly_eval_many([c.value for c in self.coefficients], list(xs), self.modulus.p)
        return [FieldElement(v, self.modulus) for v in raw]

    @property
    def secret(self):
        return self.coefficients[0]


def _require_distinct_points(cfg, modulus):
    # evaluation points 1..n must stay distinct and nonzero mod p
    if cfg.n >= modulus.p:
        raise ValueError(
            f"need fewer parties than field elements: n={cfg.n}, p={modulus.p}"
        )


def share_secret(secret, cfg, rng, session_tag=0):
    """Split a secret into n shares at points x = 1..n."""
    _require_distinct_points(cfg, secret.modulus)
    poly = SharePolynomial.random(secret, cfg.t, rng)
    ys = poly.evaluate_many(cfg.parties)
    return [Share(x, y, session_tag) for x, y in zip(cfg.parties, ys)]


def reconstruct(shares, cfg):
    """Value at x=0 of the interpolating polynomial through >= t+1 shares."""
    if len(shares) < cfg.t + 1:
        raise ValueError(
            f"need at least {cfg.t + 1} shares to reconstruct, got {len(shares)}"
        )
    xs = [s.x for s in shares]
    if len(set(xs)) != len(xs):
        raise ValueError("duplicate share indices")
    modulus = shares[0].y.modulus
    k = modulus._kernels
    weights = k.lagrange_at_zero(xs, modulus.p)
    value = k.dot_mod(weights, [s.y.value for s in shares], modulus.p)
    return FieldElement(value, modulus)


def local_add(a, b):
    """Pointwise share addition; communication-free."""
    if a.x != b.x:
        raise ValueError(f"cannot add shares of different parties: {a.x} vs {b.x}")
    return Share(a.x, a.y + b.y, a.session_tag)


def local_mul_raw(a, b):
    """Pointwise share product.

    The result lies on a degree-2t polynomial whose value at 0 is the product
    of the secrets. It must go through a degree-reduction resharing round
    before it can feed another multiplication or a plain Open.
    """
    if a.x != b.x:
        raise ValueError(f"cannot multiply shares of different parties: {a.x} vs {b.x}")
    return Share(a.x, a.y * b.y, a.session_tag)


def reduction_coefficients(cfg, modulus):
    """Recombination weights of the degree-reduction step.

    Weights w_1..w_n with sum(w_i * Q(i)) = Q(0) for every polynomial Q of
    degree <= n-1; in particular for the degree-2t raw product polynomial.
    """
    _require_distinct_points(cfg, modulus)
    k = modulus._kernels
    weights = k.lagrange_at_zero(list(cfg.parties), modulus.p)
    return [FieldElement(w, modulus) for w in weights]


def encode_share(share, round_index, modulus):
    """Wire form: 1 byte x | fixed-width big-endian y | 4 byte tag | 2 byte round."""
    if not 0 <= round_index < 1 << (8 * WIRE_ROUND_BYTES):
        raise ValueError(f"round index out of range: {round_index}")
    return (
        share.x.to_bytes(1, "big")
        + share.y.to_bytes()
        + (share.session_tag & 0xFFFFFFFF).to_bytes(WIRE_SESSION_BYTES, "big")
        + round_index.to_bytes(WIRE_ROUND_BYTES, "big")
    )


def share_wire_size(modulus):
    return 1 + modulus.byte_length + WIRE_SESSION_BYTES + WIRE_ROUND_BYTES


def decode_share(data, modulus):
    """Inverse of encode_share; returns (share, round_index)."""
    expected = share_wire_size(modulus)
    if len(data) != expected:
        raise ValueError(f"expected {expected} wire bytes, got {len(data)}")
    x = data[0]
    w = modulus.byte_length
    y = FieldElement.from_bytes(data[1 : 1 + w], modulus)
    tag = int.from_bytes(data[1 + w : 1 + w + WIRE_SESSION_BYTES], "big")
    round_index = int.from_bytes(data[1 + w + WIRE_SESSION_BYTES :], "big")
    return Share(x, y, tag), round_index
