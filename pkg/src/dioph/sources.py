"""Real numbers as certified rational enclosures and partial-quotient streams.

A source models a single real number.  Every source produces nested rational
enclosures ``lo <= value <= hi`` with ``hi - lo <= 2**-bits`` on request;
continued-fraction sources expose their partial quotients directly, while
binary-series and integer-power sources derive quotients from enclosures on
demand.  All enclosure endpoints are exact :class:`~fractions.Fraction`
values, so every comparison routed through them is certified.

Three kinds of numbers cover the toolkit's needs:

* :class:`ExactRationalSource` -- a rational, enclosures are exact points.
* :class:`CFStreamSource` -- a number given by its partial quotients, possibly
  a lazily generated infinite stream.  A finite stream is treated as a
  truncated description: enclosures beyond its resolution raise
  :class:`PrecisionExhausted`.
* :class:`BinarySeriesSource` -- sums of 2**-(a_n) over a strictly increasing
  exponent sequence.
* :class:`PowerSource` -- an integer power of another source (the only real
  arithmetic the package needs; anything fancier is out of scope).

Concurrency: sources memoize quotients and convergents behind a lock, so
parallel readers always observe consistent prefixes.
"""

from __future__ import annotations

import math
import random
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

from .errors import PrecisionExhausted, StreamExhausted
from .numeric import allow_big_int_strings

DEFAULT_PRECISION_BUDGET = 4096


@dataclass(frozen=True)
class Convergent:
    """One truncation r/s of a continued fraction, with its index."""

    index: int
    num: int
    den: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.num, self.den)

    def __str__(self) -> str:
        return f"{self.num}/{self.den}"


class QuotientBuffer:
    """Memoized, lock-protected prefix of an integer stream."""

    def __init__(self, items: Iterable[int]):
        self._iter = iter(items)
        self._known: list[int] = []
        self._done = False
        self._lock = threading.Lock()

    def known(self) -> int:
        return len(self._known)

    def exhausted(self) -> bool:
        return self._done

    def get(self, i: int) -> int:
        with self._lock:
            while i >= len(self._known):
                if self._done:
                    raise StreamExhausted(f"stream ended after {len(self._known)} terms")
                try:
                    self._known.append(int(next(self._iter)))
                except StopIteration:
                    self._done = True
                    raise StreamExhausted(f"stream ended after {len(self._known)} terms") from None
            return self._known[i]

    def prefix(self, n: int) -> list[int]:
        out = []
        for i in range(n):
            try:
                out.append(self.get(i))
            except StreamExhausted:
                break
        return out

    def snapshot(self) -> list[int]:
        with self._lock:
            return list(self._known)


class _ConvergentWalk:
    """Convergents from a quotient buffer via the standard recurrence.

    Seeds are den[-2] = 1, den[-1] = 0 (and num[-2] = 0, num[-1] = 1), so
    num[0]/den[0] = a0/1.
    """

    def __init__(self, quotients: QuotientBuffer):
        self._q = quotients
        self._conv: list[Convergent] = []
        self._lock = threading.Lock()

    def get(self, index: int) -> Convergent:
        with self._lock:
            while index >= len(self._conv):
                i = len(self._conv)
                a = self._q.get(i)
                if i >= 1 and a < 1:
                    raise ValueError(f"partial quotient a_{i} = {a} must be >= 1")
                if i == 0:
                    num, den = a, 1
                elif i == 1:
                    num = a * self._conv[0].num + 1
                    den = a * self._conv[0].den
                else:
                    num = a * self._conv[i - 1].num + self._conv[i - 2].num
                    den = a * self._conv[i - 1].den + self._conv[i - 2].den
                self._conv.append(Convergent(i, num, den))
            return self._conv[index]

    def known(self) -> int:
        return len(self._conv)


class RealSource:
    """Interface for a real number with certified access paths."""

    is_rational = False
    label = ""

    def __init__(self, budget: int = DEFAULT_PRECISION_BUDGET):
        self.budget = budget

    def enclosure(self, bits: int) -> tuple[Fraction, Fraction]:
        """Rationals lo <= value <= hi with hi - lo <= 2**-bits, nested in bits."""
        raise NotImplementedError

    def quotient(self, i: int) -> int:
        raise NotImplementedError

    def convergent(self, index: int) -> Convergent:
        raise NotImplementedError

    def quotients_known(self) -> int:
        raise NotImplementedError

    def to_json(self, quotient_limit: int | None = None) -> dict:
        raise NotImplementedError

    def __repr__(self) -> str:
        name = type(self).__name__
        return f"<{name} {self.label}>" if self.label else f"<{name}>"


def _canonical_quotients(value: Fraction) -> list[int]:
    # Euclidean expansion, normalised so the last quotient is >= 2 whenever
    # the expansion has more than one term (uniqueness matters for the
    # convergent-certification predicates).
    num, den = value.numerator, value.denominator
    out: list[int] = []
    while den:
        a, rem = divmod(num, den)
        out.append(a)
        num, den = den, rem
    if len(out) > 1 and out[-1] == 1:
        out.pop()
        out[-1] += 1
    return out


class ExactRationalSource(RealSource):
    """A rational number; every certified question about it is decidable."""

    is_rational = True

    def __init__(self, value, budget: int = DEFAULT_PRECISION_BUDGET, label: str = ""):
        super().__init__(budget)
        self.value = Fraction(value)
        self.label = label or str(self.value)
        self._quots = _canonical_quotients(self.value)
        self._walk = _ConvergentWalk(QuotientBuffer(self._quots))

    def enclosure(self, bits: int) -> tuple[Fraction, Fraction]:
        return self.value, self.value

    def quotient(self, i: int) -> int:
        if i >= len(self._quots):
            raise StreamExhausted(f"rational expansion has {len(self._quots)} terms")
        return self._quots[i]

    def convergent(self, index: int) -> Convergent:
        return self._walk.get(index)

    def quotients_known(self) -> int:
        return len(self._quots)

    def quotients(self) -> list[int]:
        return list(self._quots)

    def to_json(self, quotient_limit: int | None = None) -> dict:
        allow_big_int_strings()
        return {"kind": "rational", "num": str(self.value.numerator), "den": str(self.value.denominator)}


class CFStreamSource(RealSource):
    """A number presented by its partial quotients a0; a1, a2, ...

    An infinite stream describes an irrational number exactly.  A finite
    stream is understood as a *truncated* description of one: enclosures are
    available down to the resolution of the last convergent pair and degrade
    into :class:`PrecisionExhausted` beyond it.  (Use
    :class:`ExactRationalSource` for numbers that really are rational.)
    """

    def __init__(self, quotients: Iterable[int], budget: int = DEFAULT_PRECISION_BUDGET, label: str = ""):
        super().__init__(budget)
        self.label = label
        self._buf = QuotientBuffer(quotients)
        self._walk = _ConvergentWalk(self._buf)
        self._level = 0  # index of the deepest convergent pair used so far

    def quotient(self, i: int) -> int:
        return self._buf.get(i)

    def convergent(self, index: int) -> Convergent:
        return self._walk.get(index)

    def quotients_known(self) -> int:
        return self._buf.known()

    def enclosure(self, bits: int) -> tuple[Fraction, Fraction]:
        # The value lies strictly between consecutive convergents, whose gap
        # is 1/(s_l * s_{l+1}); walk until that gap is small enough.
        target = 1 << bits
        l = self._level
        try:
            while self._walk.get(l).den * self._walk.get(l + 1).den < target:
                l += 1
        except StreamExhausted:
            have = self._walk.known()
            if have >= 2:
                l = have - 2
                width = Fraction(1, self._walk.get(l).den * self._walk.get(l + 1).den)
                raise PrecisionExhausted(
                    f"{self!r}: stream truncated, best enclosure width {float(width):.3g} "
                    f"> 2^-{bits}"
                ) from None
            raise PrecisionExhausted(f"{self!r}: stream too short for any enclosure") from None
        self._level = max(self._level, l)
        a = self._walk.get(l).value
        b = self._walk.get(l + 1).value
        return (a, b) if a <= b else (b, a)

    def to_json(self, quotient_limit: int | None = None) -> dict:
        allow_big_int_strings()
        if quotient_limit is not None:
            self._buf.prefix(quotient_limit)
        quots = self._buf.snapshot()
        return {"kind": "cf", "quotients": [str(a) for a in quots]}


class _DerivedQuotients:
    """Partial quotients extracted from enclosures of an irrational source.

    Floors are read off interval endpoints; whenever an endpoint pair
    disagrees the whole extraction restarts from a sharper base enclosure.
    Quotients, once confirmed, never change (the true value sits inside every
    enclosure, so an unambiguous floor is the true floor).
    """

    def __init__(self, source: RealSource, start_bits: int = 128):
        self._source = source
        self._quots: list[int] = []
        self._bits = start_bits
        self._lock = threading.Lock()

    def known(self) -> int:
        return len(self._quots)

    def get(self, i: int, budget: int | None = None) -> int:
        budget = budget or self._source.budget
        with self._lock:
            while i >= len(self._quots):
                self._extend(i + 1, budget)
            return self._quots[i]

    def _extend(self, want: int, budget: int) -> None:
        bits = self._bits
        while True:
            if bits > budget:
                raise PrecisionExhausted(
                    f"{self._source!r}: cannot confirm quotient {len(self._quots)} within {budget} bits"
                )
            lo, hi = self._source.enclosure(bits)
            got = self._replay(lo, hi, want)
            if got is not None:
                if got[: len(self._quots)] != self._quots:
                    raise AssertionError("derived quotients changed under refinement")
                self._quots = got
                self._bits = bits
                return
            bits *= 2

    def _replay(self, lo: Fraction, hi: Fraction, want: int) -> list[int] | None:
        out: list[int] = []
        a_lo, a_hi = lo, hi
        while len(out) < want:
            fl = math.floor(a_lo)
            if fl != math.floor(a_hi):
                return None
            out.append(fl)
            a_lo, a_hi = a_lo - fl, a_hi - fl
            if a_lo == 0:  # endpoint on the boundary, cannot invert yet
                return None
            a_lo, a_hi = 1 / a_hi, 1 / a_lo
        return out


class BinarySeriesSource(RealSource):
    """The number sum(2**-a_n) for a strictly increasing exponent stream."""

    def __init__(self, exponents: Iterable[int], budget: int = DEFAULT_PRECISION_BUDGET, label: str = ""):
        super().__init__(budget)
        self.label = label
        self._exp = QuotientBuffer(exponents)
        self._partial: list[Fraction] = [Fraction(0)]  # partial sums, index N = first N terms
        self._lock = threading.Lock()
        self._derived = _DerivedQuotients(self)

    def _exponent(self, i: int) -> int:
        a = self._exp.get(i)
        if a < 1:
            raise ValueError("series exponents must be positive")
        if i > 0 and a <= self._exp.get(i - 1):
            raise ValueError("series exponents must strictly increase")
        return a

    def enclosure(self, bits: int) -> tuple[Fraction, Fraction]:
        # Tail after N terms is at most 2**(1 - a_{N+1}) by the strict growth.
        with self._lock:
            n = 0
            while True:
                try:
                    nxt = self._exponent(n)
                except StreamExhausted:
                    raise PrecisionExhausted(
                        f"{self!r}: exponent stream truncated before width 2^-{bits}"
                    ) from None
                if nxt >= bits + 1:
                    break
                if len(self._partial) <= n + 1:
                    self._partial.append(self._partial[n] + Fraction(1, 1 << nxt))
                n += 1
            s = self._partial[n]
            return s, s + Fraction(1, 1 << (nxt - 1))

    def quotient(self, i: int) -> int:
        return self._derived.get(i)

    def convergent(self, index: int) -> Convergent:
        walk = getattr(self, "_derived_walk", None)
        if walk is None:
            walk = _ConvergentWalk(QuotientBuffer(_derived_iter(self._derived)))
            self._derived_walk = walk
        return walk.get(index)

    def quotients_known(self) -> int:
        return self._derived.known()

    def exponents_prefix(self, n: int) -> list[int]:
        return self._exp.prefix(n)

    def to_json(self, quotient_limit: int | None = None) -> dict:
        allow_big_int_strings()
        return {"kind": "binseries", "exponents": [str(a) for a in self._exp.snapshot()]}


def _derived_iter(derived: _DerivedQuotients) -> Iterator[int]:
    i = 0
    while True:
        yield derived.get(i)
        i += 1


class PowerSource(RealSource):
    """An integer power of a base source (for points on the Veronese curve)."""

    def __init__(self, base: RealSource, power: int, label: str = ""):
        if power < 1:
            raise ValueError("power must be >= 1")
        if base.is_rational:
            raise ValueError("raise rationals directly with ExactRationalSource")
        super().__init__(base.budget)
        self.base = base
        self.power = power
        self.label = label or (f"{base.label}^{power}" if base.label else f"power{power}")
        self._derived = _DerivedQuotients(self)

    def enclosure(self, bits: int) -> tuple[Fraction, Fraction]:
        j = self.power
        if j == 1:
            return self.base.enclosure(bits)
        extra = j.bit_length() + 2
        while True:
            lo, hi = self.base.enclosure(bits + extra)
            plo, phi = _interval_pow(lo, hi, j)
            if phi - plo <= Fraction(1, 1 << bits):
                return plo, phi
            extra *= 2
            if extra > 8 * 64 * j.bit_length() + 4096:
                raise PrecisionExhausted(f"{self!r}: power enclosure did not tighten")

    def quotient(self, i: int) -> int:
        return self._derived.get(i)

    def convergent(self, index: int) -> Convergent:
        walk = getattr(self, "_derived_walk", None)
        if walk is None:
            walk = _ConvergentWalk(QuotientBuffer(_derived_iter(self._derived)))
            self._derived_walk = walk
        return walk.get(index)

    def quotients_known(self) -> int:
        return self._derived.known()

    def to_json(self, quotient_limit: int | None = None) -> dict:
        raise TypeError("power sources are derived at runtime; serialise the base source")


def _interval_pow(lo: Fraction, hi: Fraction, j: int) -> tuple[Fraction, Fraction]:
    if lo >= 0:
        return lo**j, hi**j
    if hi <= 0:
        a, b = lo**j, hi**j
        return (a, b) if a <= b else (b, a)
    if j % 2:
        return lo**j, hi**j
    return Fraction(0), max(lo**j, hi**j)


def veronese_sources(source: RealSource, k: int) -> list[RealSource]:
    """The tuple (x, x^2, ..., x^k) of sources for the Veronese curve."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if source.is_rational:
        return [ExactRationalSource(source.value**j, budget=source.budget) for j in range(1, k + 1)]
    return [source] + [PowerSource(source, j) for j in range(2, k + 1)]


def random_cf_source(seed: int, quotient_bound: int = 30, first: int = 0,
                     budget: int = DEFAULT_PRECISION_BUDGET) -> CFStreamSource:
    """A reproducible pseudo-random infinite continued fraction."""

    def gen() -> Iterator[int]:
        rng = random.Random(seed)
        yield first
        while True:
            yield rng.randint(1, quotient_bound)

    return CFStreamSource(gen(), budget=budget, label=f"random(seed={seed})")


def source_to_json(source: RealSource, quotient_limit: int | None = None) -> dict:
    return source.to_json(quotient_limit)


def source_from_json(data: dict, budget: int = DEFAULT_PRECISION_BUDGET) -> RealSource:
    kind = data.get("kind")
    if kind == "rational":
        return ExactRationalSource(Fraction(int(data["num"]), int(data["den"])), budget=budget)
    if kind == "cf":
        quots = [int(a) for a in data["quotients"]]
        return CFStreamSource(quots, budget=budget)
    if kind == "binseries":
        exps = [int(a) for a in data["exponents"]]
        return BinarySeriesSource(exps, budget=budget)
    raise ValueError(f"unknown source kind: {kind!r}")
