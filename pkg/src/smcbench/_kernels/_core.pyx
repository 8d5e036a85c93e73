# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled modular arithmetic kernels for moduli below 2**62.

Same contracts as ``pure.py``; 64-bit values with 128-bit intermediates.
Callers are responsible for routing larger moduli to the pure backend.
"""

from libc.stdint cimport uint64_t, int64_t

cdef extern from *:
    ctypedef unsigned long long u128 "unsigned __int128"


cdef inline uint64_t _mul(uint64_t a, uint64_t b, uint64_t p) noexcept nogil:
    return <uint64_t>((<u128> a * <u128> b) % <u128> p)


cdef uint64_t _inv(uint64_t a, uint64_t p) except? 0:
    cdef int64_t r0 = <int64_t> p
    cdef int64_t r1 = <int64_t> (a % p)
    cdef int64_t s0 = 0, s1 = 1, q, tmp
    if r1 == 0:
        raise ZeroDivisionError("0 has no multiplicative inverse")
    while r1 != 0:
        q = r0 / r1
        tmp = r0 - q * r1
        r0 = r1
        r1 = tmp
        tmp = s0 - q * s1
        s0 = s1
        s1 = tmp
    if r0 != 1:
        raise ZeroDivisionError("value is not invertible")
    if s0 < 0:
        s0 += <int64_t> p
    return <uint64_t> s0


def add_mod(a, b, p):
    cdef uint64_t pp = p
    return ((<uint64_t> a) + (<uint64_t> b)) % pp


def sub_mod(a, b, p):
    cdef uint64_t pp = p, aa = a, bb = b
    return (aa + pp - bb % pp) % pp


def mul_mod(a, b, p):
    return _mul(a, b, p)


def pow_mod(a, e, p):
    cdef uint64_t base = a % p, pp = p, acc = 1
    cdef unsigned long long ee = e
    while ee:
        if ee & 1:
            acc = _mul(acc, base, pp)
        base = _mul(base, base, pp)
        ee >>= 1
    return acc


def inv_mod(a, p):
    return _inv(a % p, p)


def poly_eval(coeffs, x, p):
    cdef uint64_t acc = 0, xx = x, pp = p
    cdef Py_ssize_t i
    for i in range(len(coeffs) - 1, -1, -1):
        acc = (_mul(acc, xx, pp) + <uint64_t> coeffs[i]) % pp
    return acc


def poly_eval_many(coeffs, xs, p):
    cdef uint64_t pp = p
    cdef Py_ssize_t n = len(coeffs), i, k
    cdef uint64_t acc, xx
    # local C copy of the coefficients; degree t stays tiny in practice
    cdef uint64_t stack[64]
    cdef list out = []
    if n > 64:
        # fall back to per-point Horner straight from the Python list
        for k in range(len(xs)):
            out.append(poly_eval(coeffs, xs[k], p))
        return out
    for i in range(n):
        stack[i] = coeffs[i]
    for k in range(len(xs)):
        xx = xs[k]
        acc = 0
        for i in range(n - 1, -1, -1):
            acc = (_mul(acc, xx, pp) + stack[i]) % pp
        out.append(acc)
    return out


def lagrange_at_zero(xs, p):
    cdef uint64_t pp = p, num, den, xi, xj
    cdef Py_ssize_t n = len(xs), i, j
    cdef list out = []
    for i in range(n):
        xi = xs[i] % pp
        num = 1
        den = 1
        for j in range(n):
            if i == j:
                continue
            xj = xs[j] % pp
            num = _mul(num, xj, pp)
            den = _mul(den, (xj + pp - xi) % pp, pp)
        out.append(_mul(num, _inv(den, pp), pp))
    return out


def dot_mod(a, b, p):
    cdef uint64_t pp = p, acc = 0
    cdef Py_ssize_t i, n = len(a)
    if n != len(b):
        raise ValueError("vector length mismatch")
    for i in range(n):
        acc = (acc + _mul(<uint64_t> a[i], <uint64_t> b[i], pp)) % pp
    return acc
