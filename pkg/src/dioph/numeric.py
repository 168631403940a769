"""Exact integer and rational primitives: roots, directed logarithms.

Everything here returns integers or ``Fraction`` bounds that are
mathematically guaranteed.  Directed means: a returned lower bound is
really below the true value and an upper bound really above, so callers
can build certified inequalities out of them with plain rational
arithmetic.  No floating point is involved anywhere.
"""

from __future__ import annotations

import math
import sys
from fractions import Fraction


def iroot_floor(n: int, k: int) -> int:
    """Largest integer x with x**k <= n, for n >= 0 and k >= 1."""
    if n < 0 or k < 1:
        raise ValueError("iroot_floor requires n >= 0 and k >= 1")
    if k == 1 or n < 2:
        return n
    if k == 2:
        return math.isqrt(n)
    # Newton iteration starting above the root; monotone decreasing.
    x = 1 << -((-n.bit_length()) // k)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            return x
        x = y


def iroot_ceil(n: int, k: int) -> int:
    r = iroot_floor(n, k)
    return r if r**k == n else r + 1


def power_floor(base: int, exponent: Fraction) -> int:
    """floor(base ** exponent) for integer base >= 1, rational exponent >= 0."""
    if base < 1 or exponent < 0:
        raise ValueError("power_floor requires base >= 1 and exponent >= 0")
    return iroot_floor(base**exponent.numerator, exponent.denominator)


def power_ceil(base: int, exponent: Fraction) -> int:
    """ceil(base ** exponent) for integer base >= 1, rational exponent >= 0."""
    if base < 1 or exponent < 0:
        raise ValueError("power_ceil requires base >= 1 and exponent >= 0")
    return iroot_ceil(base**exponent.numerator, exponent.denominator)


_GUARD_BITS = 32


def _frac_log2_chain(mantissa: int, work_bits: int, frac_bits: int, round_up: bool) -> Fraction:
    # mantissa encodes a value in [1, 2) at scale 2**work_bits; repeatedly
    # square and renormalise, emitting one bit of log2 per step.  All
    # intermediate roundings are directed, so the chain value stays on the
    # requested side of the exact one and the emitted bits do too.
    acc = 0
    m = mantissa
    two = 1 << (work_bits + 1)
    for _ in range(frac_bits):
        m2 = m * m
        m = -((-m2) >> work_bits) if round_up else m2 >> work_bits
        acc <<= 1
        if m >= two:
            acc |= 1
            m = -((-m) >> 1) if round_up else m >> 1
    return Fraction(acc, 1 << frac_bits)


def log2_bounds_int(n: int, frac_bits: int = 64) -> tuple[Fraction, Fraction]:
    """Directed bounds lo <= log2(n) <= hi for an integer n >= 1."""
    if n < 1:
        raise ValueError("log2 bounds need n >= 1")
    if n & (n - 1) == 0:
        e = Fraction(n.bit_length() - 1)
        return e, e
    e = n.bit_length() - 1
    w = frac_bits + _GUARD_BITS
    if e <= w:
        m_lo = n << (w - e)
        m_hi = m_lo
    else:
        m_lo = n >> (e - w)
        m_hi = m_lo if (m_lo << (e - w)) == n else m_lo + 1
    lo = e + _frac_log2_chain(m_lo, w, frac_bits, round_up=False)
    hi = e + _frac_log2_chain(m_hi, w, frac_bits, round_up=True) + Fraction(1, 1 << frac_bits)
    return lo, hi


def log2_bounds(x: Fraction, frac_bits: int = 64) -> tuple[Fraction, Fraction]:
    """Directed bounds on log2 of a positive rational."""
    if x <= 0:
        raise ValueError("log2 bounds need x > 0")
    nl, nh = log2_bounds_int(x.numerator, frac_bits)
    dl, dh = log2_bounds_int(x.denominator, frac_bits)
    return nl - dh, nh - dl


def log_ratio_bounds(a: Fraction, b: Fraction, frac_bits: int = 64) -> tuple[Fraction, Fraction]:
    """Directed bounds on log(a)/log(b) for a > 0 and b > 1."""
    la, ha = log2_bounds(a, frac_bits)
    lb, hb = log2_bounds(b, frac_bits)
    if lb <= 0:
        raise ValueError("log_ratio_bounds needs b certified > 1")
    lo = la / (lb if la < 0 else hb)
    hi = ha / (hb if ha < 0 else lb)
    return lo, hi


def certified_exponent_floor(err_hi: Fraction, window: int, frac_bits: int = 64) -> Fraction:
    """Rational nu guaranteed to satisfy err_hi <= window**(-nu).

    This is a certified lower bound of -log(err_hi)/log(window); it may be
    negative when err_hi >= 1 (the caller flags such witnesses vacuous).
    """
    if window < 2:
        raise ValueError("window must be >= 2")
    if err_hi <= 0:
        raise ValueError("err_hi must be positive (zero error means an unbounded exponent)")
    _, hi = log_ratio_bounds(err_hi, Fraction(window), frac_bits)
    return -hi


def allow_big_int_strings(digits: int = 4_000_000) -> None:
    """Raise the int<->str conversion limit so big integers serialise as decimals."""
    setter = getattr(sys, "set_int_max_str_digits", None)
    getter = getattr(sys, "get_int_max_str_digits", None)
    if setter is not None and getter is not None and getter() < digits:
        setter(digits)
