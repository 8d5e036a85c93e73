"""Pure-Python modular arithmetic kernels.

Reference implementation of the hot share-math inner loops. The compiled
extension in ``_core.pyx`` mirrors these functions exactly for moduli below
2**62; this module is the fallback (and the only path for larger moduli).
All functions take plain ints and return plain ints reduced mod p.
"""


def add_mod(a, b, p):
    return (a + b) % p


def sub_mod(a, b, p):
    return (a - b) % p


def mul_mod(a, b, p):
    return (a * b) % p


def pow_mod(a, e, p):
    return pow(a, e, p)


def inv_mod(a, p):
    """Multiplicative inverse via the extended Euclidean algorithm."""
    a = a % p
    if a == 0:
        raise ZeroDivisionError("0 has no multiplicative inverse")
    r0, r1 = p, a
    s0, s1 = 0, 1
    while r1:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if r0 != 1:
        raise ZeroDivisionError(f"{a} is not invertible modulo {p}")
    return s0 % p


def poly_eval(coeffs, x, p):
    """Evaluate a polynomial (coeffs[i] is the x**i coefficient) via Horner."""
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc


def poly_eval_many(coeffs, xs, p):
    """Evaluate one polynomial at several points."""
    return [poly_eval(coeffs, x, p) for x in xs]


def lagrange_at_zero(xs, p):
    """Interpolation weights at x=0 for sample points xs.

    Returns w with sum(w[i] * f(xs[i])) == f(0) for every polynomial f of
    degree < len(xs). Points must be distinct and nonzero mod p.
    """
    weights = []
    for i, xi in enumerate(xs):
        num, den = 1, 1
        for j, xj in enumerate(xs):
            if i == j:
                continue
            num = (num * xj) % p
            den = (den * (xj - xi)) % p
        weights.append((num * inv_mod(den, p)) % p)
    return weights


def dot_mod(a, b, p):
    """Inner product of two equal-length int vectors mod p."""
    if len(a) != len(b):
        raise ValueError("vector length mismatch")
    acc = 0
    for x, y in zip(a, b):
        acc += x * y
    return acc % p
