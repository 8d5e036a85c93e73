import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smcbench.field import (
    DEFAULT_MODULUS,
    FieldElement,
    ModulusMismatchError,
    PrimeModulus,
    is_probable_prime,
    random_element,
)

P61 = (1 << 61) - 1


def fe(value, modulus=DEFAULT_MODULUS):
    return FieldElement(value % modulus.p, modulus)


class TestPrimeModulus:
    def test_default_is_the_mersenne_prime(self):
        assert DEFAULT_MODULUS.p == P61
        assert DEFAULT_MODULUS.bit_length == 61
        assert DEFAULT_MODULUS.byte_length == 8

    def test_rejects_composites(self):
        with pytest.raises(ValueError):
            PrimeModulus(91)  # 7 * 13
        with pytest.raises(ValueError):
            PrimeModulus((1 << 61) - 3)

    def test_rejects_non_integers(self):
        with pytest.raises(ValueError):
            PrimeModulus(2.5)

    def test_from_decimal(self):
        m = PrimeModulus.from_decimal("101")
        assert m.p == 101
        with pytest.raises(ValueError):
            PrimeModulus.from_decimal("0x65")

    def test_miller_rabin_on_known_values(self):
        for p in (3, 5, 97, 101, 2**31 - 1, P61):
            assert is_probable_prime(p)
        for c in (1, 4, 91, 561, 2**31, 2**61 - 2):
            assert not is_probable_prime(c)


class TestArithmetic:
    def test_add_wraps_at_modulus(self):
        m = PrimeModulus(7)
        assert (fe(3, m) + fe(4, m)).value == 0

    def test_additive_identity(self, rng):
        x = random_element(rng, DEFAULT_MODULUS)
        assert (fe(0) + x).value == x.value

    def test_add_below_modulus(self):
        assert (fe(5) + fe(5)).value == 10

    def test_multiplicative_identity(self, rng):
        x = random_element(rng, DEFAULT_MODULUS)
        assert (fe(1) * x).value == x.value

    def test_mul_brute_force_small_field(self):
        m = PrimeModulus(7)
        assert (fe(3, m) * fe(5, m)).value == 15 % 7 == 1

    def test_minus_one_squared(self):
        assert (fe(P61 - 1) * fe(P61 - 1)).value == 1

    def test_modulus_mismatch_raises(self, small_modulus):
        with pytest.raises(ModulusMismatchError):
            fe(1) + fe(1, small_modulus)
        with pytest.raises(ModulusMismatchError):
            fe(1) * fe(1, small_modulus)

    def test_value_range_enforced(self):
        with pytest.raises(ValueError):
            FieldElement(P61, DEFAULT_MODULUS)
        with pytest.raises(ValueError):
            FieldElement(-1, DEFAULT_MODULUS)


class TestInverse:
    def test_inverse_of_one(self):
        assert fe(1).inverse().value == 1

    def test_inverse_brute_force_small_field(self):
        m = PrimeModulus(7)
        expected = next(b for b in range(1, 7) if 3 * b % 7 == 1)
        assert fe(3, m).inverse().value == expected == 5

    def test_inverse_of_two_default_modulus(self):
        half = fe(2).inverse()
        assert half.value == (P61 + 1) // 2
        assert (fe(2) * half).value == 1

    def test_zero_not_invertible(self):
        with pytest.raises(ZeroDivisionError):
            fe(0).inverse()

    def test_double_inverse_roundtrip(self, rng):
        for _ in range(200):
            x = random_element(rng, DEFAULT_MODULUS)
            if x.value == 0:
                continue
            assert x.inverse().inverse().value == x.value


class TestRandomElement:
    def test_deterministic_for_fixed_seed(self):
        a = [random_element(random.Random(99), DEFAULT_MODULUS).value for _ in range(2)]
        b = [random_element(random.Random(99), DEFAULT_MODULUS).value for _ in range(2)]
        assert a == b

    def test_draws_below_modulus(self, rng, tiny_modulus):
        assert all(
            random_element(rng, tiny_modulus).value < tiny_modulus.p
            for _ in range(1000)
        )

    def test_uniformity_chi_square(self, tiny_modulus):
        # 1e5 draws over 101 residues: every frequency within 5 sigma
        draws = 100_000
        rng = random.Random(2024)
        counts = [0] * tiny_modulus.p
        for _ in range(draws):
            counts[random_element(rng, tiny_modulus).value] += 1
        expected = draws / tiny_modulus.p
        sigma = math.sqrt(draws * (1 / tiny_modulus.p) * (1 - 1 / tiny_modulus.p))
        for count in counts:
            assert abs(count - expected) < 5 * sigma


class TestFieldAxioms:
    def test_axioms_on_random_triples(self):
        rng = random.Random(7)
        p = DEFAULT_MODULUS.p
        for _ in range(10_000):
            a, b, c = (random_element(rng, DEFAULT_MODULUS) for _ in range(3))
            assert ((a + b) + c).value == (a + (b + c)).value
            assert (a + b).value == (b + a).value
            assert ((a * b) * c).value == (a * (b * c)).value
            assert (a * b).value == (b * a).value
            assert (a * (b + c)).value == ((a * b) + (a * c)).value

    @settings(max_examples=50, deadline=None)
    @given(
        a=st.integers(min_value=0, max_value=P61 - 1),
        b=st.integers(min_value=1, max_value=P61 - 1),
    )
    def test_mul_then_divide_roundtrips(self, a, b):
        x, y = fe(a), fe(b)
        assert ((x * y) * y.inverse()).value == x.value


class TestSerialization:
    def test_fixed_width_roundtrip(self, rng):
        for _ in range(100):
            x = random_element(rng, DEFAULT_MODULUS)
            blob = x.to_bytes()
            assert len(blob) == 8
            assert FieldElement.from_bytes(blob, DEFAULT_MODULUS).value == x.value

    def test_width_matches_bit_length(self):
        m = PrimeModulus(101)
        assert len(fe(100, m).to_bytes()) == math.ceil(m.bit_length / 8) == 1

    def test_big_endian(self):
        assert fe(1).to_bytes() == b"\x00" * 7 + b"\x01"

    def test_wrong_width_rejected(self):
        with pytest.raises(ValueError):
            FieldElement.from_bytes(b"\x01", DEFAULT_MODULUS)


class TestLargeModulus:
    def test_decimal_configured_modulus_beyond_64_bits(self):
        # 2^89 - 1 is a Mersenne prime; exercises the big-int kernel path
        m = PrimeModulus((1 << 89) - 1)
        assert m.byte_length == 12
        a = FieldElement(m.p - 2, m)
        assert (a * a.inverse()).value == 1
        assert (a + FieldElement(5, m)).value == 3
