"""Continued-fraction engine: expansions, convergents, certified distances,
and the classical certification predicates as executable checks.

Distances to the nearest integer are produced as exact rational intervals
guaranteed to contain the true value.  The exhaustive sweeps (Legendre
violation search, best-approximation scans, the running-minimum searches
behind the exponent estimators) work on integer "scaled views" of a source:
L <= 2**P * value <= L + W with a tiny integer W.  Every decision made on a
scaled view carries its slack explicitly, and anything ambiguous is
re-decided by exact rational refinement, so the fast path can only make an
answer cheaper, never different.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .errors import PrecisionExhausted, SearchMismatch, StreamExhausted
from .sources import Convergent, RealSource

SCAN_LIMIT = 100_000  # exhaustive best-approximation scans are allowed up to here

HALF = Fraction(1, 2)


# ---------------------------------------------------------------------------
# expansions and convergents


def cf_expand_rational(num: int, den: int) -> list[int]:
    """Canonical continued fraction of num/den (last quotient >= 2 unless trivial)."""
    if den < 1:
        raise ValueError("denominator must be positive")
    out = []
    while den:
        a, rem = divmod(num, den)
        out.append(a)
        num, den = den, rem
    if len(out) > 1 and out[-1] == 1:
        out.pop()
        out[-1] += 1
    return out


class ConvergentList(list):
    """A list of convergents; ``truncated`` marks an early stream end."""

    truncated = False


def convergents(source: RealSource, count: int) -> ConvergentList:
    """First ``count`` convergents of a source (fewer, flagged, if it ends)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    out = ConvergentList()
    for l in range(count):
        try:
            out.append(source.convergent(l))
        except StreamExhausted:
            out.truncated = True
            break
    return out


def convergent_denominators_upto(source: RealSource, X: int):
    """Yield convergents with denominator <= X, deduplicated denominators."""
    l = 0
    last_den = 0
    while True:
        try:
            c = source.convergent(l)
        except StreamExhausted:
            return
        if c.den > X:
            return
        if c.den != last_den:
            yield c
            last_den = c.den
        l += 1


# ---------------------------------------------------------------------------
# distance intervals


@dataclass(frozen=True)
class DistanceInterval:
    """Certified enclosure of a nearest-integer distance, inside [0, 1/2]."""

    lo: Fraction
    hi: Fraction
    bits: int = 0
    indeterminate: bool = False

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def exact(self) -> bool:
        return self.lo == self.hi


def _norm_range(a: Fraction, b: Fraction) -> tuple[Fraction, Fraction, int | None]:
    """Range of ||t|| over t in [a, b], plus the nearest integer if unique.

    The map t -> ||t|| is 1-Lipschitz and 1-periodic, zero on integers,
    maximal (1/2) on half-integers; its extrema over an interval sit either
    at the endpoints or at those lattice points.
    """
    if b - a >= 1:
        return Fraction(0), HALF, None
    fa, fb = math.floor(a), math.floor(b)
    da = min(a - fa, fa + 1 - a)
    db = min(b - fb, fb + 1 - b)
    has_int = fb > fa or a == fa
    lo = Fraction(0) if has_int else min(da, db)
    c, d = math.ceil(2 * a), math.floor(2 * b)
    has_half = c <= d and (c % 2 == 1 or c + 1 <= d)
    hi = HALF if has_half else max(da, db)
    nearest = None
    if not has_half or (a == b and 2 * a == c):
        # every t in [a, b] rounds to the same integer; ties round down
        mid = (a + b) / 2
        nearest = math.floor(mid) if mid - math.floor(mid) <= HALF else math.floor(mid) + 1
    return lo, hi, nearest


def nearest_distance(x: int, source: RealSource, precision: int = 64,
                     budget: int | None = None) -> DistanceInterval:
    """Certified enclosure of ||x * value|| with width <= 2**-precision.

    If the source cannot supply enough bits (a truncated stream, or the
    refinement budget is hit) the best available interval is returned with
    ``indeterminate`` set, never a silently wrong answer.
    """
    di, _ = _distance_with_nearest(x, source, precision, budget)
    return di


def _distance_with_nearest(x: int, source: RealSource, precision: int,
                           budget: int | None) -> tuple[DistanceInterval, int | None]:
    if x < 1:
        raise ValueError("x must be >= 1")
    budget = budget if budget is not None else source.budget
    if source.is_rational:
        lo, hi, nearest = _norm_range(x * source.value, x * source.value)
        return DistanceInterval(lo, hi, precision), nearest
    bits = min(precision + x.bit_length() + 2, budget)
    while bits >= 16:
        try:
            elo, ehi = source.enclosure(bits)
        except PrecisionExhausted:
            bits //= 2
            continue
        lo, hi, nearest = _norm_range(x * elo, x * ehi)
        flagged = hi - lo > Fraction(1, 1 << precision)
        return DistanceInterval(lo, hi, precision, indeterminate=flagged), nearest
    return DistanceInterval(Fraction(0), HALF, precision, indeterminate=True), None


def abs_offset_interval(source: RealSource, x: int, p: int, bits: int) -> tuple[Fraction, Fraction]:
    """Certified enclosure of |x * value - p|."""
    elo, ehi = source.enclosure(bits)
    lo, hi = x * elo - p, x * ehi - p
    if lo >= 0:
        return lo, hi
    if hi <= 0:
        return -hi, -lo
    return Fraction(0), max(-lo, hi)


def offset_le(source: RealSource, x: int, p: int, threshold: Fraction,
              budget: int | None = None) -> bool:
    """Certified decision of |x * value - p| <= threshold."""
    budget = budget if budget is not None else source.budget
    if source.is_rational:
        return abs(x * source.value - p) <= threshold
    bits = 64
    while True:
        lo, hi = abs_offset_interval(source, x, p, bits)
        if hi <= threshold:
            return True
        if lo > threshold:
            return False
        if bits >= budget:
            raise PrecisionExhausted(
                f"|{x}*value - {p}| vs {threshold}: undecided at {bits} bits"
            )
        bits *= 2


class DistanceValue:
    """A refinable certified value of ||x * value|| for one source and x."""

    __slots__ = ("source", "x", "lo", "hi", "bits", "_nearest")

    def __init__(self, source: RealSource, x: int,
                 seed: tuple[Fraction, Fraction] | None = None):
        self.source = source
        self.x = x
        self._nearest: int | None = None
        if source.is_rational:
            lo, hi, nearest = _norm_range(x * source.value, x * source.value)
            self.lo, self.hi = lo, hi
            self._nearest = nearest
            self.bits = 1 << 62
        elif seed is not None:
            self.lo, self.hi = seed
            self.bits = 0
        else:
            self.lo, self.hi = Fraction(0), HALF
            self.bits = 0

    def interval(self) -> DistanceInterval:
        return DistanceInterval(self.lo, self.hi, self.bits)

    @property
    def exact(self) -> bool:
        return self.lo == self.hi

    def refine_to(self, precision: int) -> None:
        """Tighten to absolute width <= 2**-precision (if the source allows)."""
        if self.hi - self.lo <= Fraction(1, 1 << precision):
            return
        di, nearest = _distance_with_nearest(self.x, self.source, precision, None)
        # enclosures are nested, so intersecting never empties the interval
        self.lo = max(self.lo, di.lo)
        self.hi = min(self.hi, di.hi)
        self.bits = max(self.bits, precision)
        if nearest is not None:
            self._nearest = nearest

    def refine_relative(self, rel_bits: int = 40, budget: int | None = None) -> None:
        """Tighten until width <= lo * 2**-rel_bits (or the value is exact)."""
        budget = budget if budget is not None else self.source.budget
        p = max(64, self.bits * 2)
        while True:
            if self.exact:
                return
            if self.lo > 0 and (self.hi - self.lo) * (1 << rel_bits) <= self.lo:
                return
            if p > budget + self.x.bit_length() + 4:
                raise PrecisionExhausted(
                    f"distance at x={self.x} not separated within budget"
                )
            self.refine_to(p)
            p *= 2

    def nearest_int(self, budget: int | None = None) -> int:
        """The nearest integer to x*value (certified unique, ties round down)."""
        budget = budget if budget is not None else self.source.budget
        p = 64
        while self._nearest is None:
            if p > budget:
                raise PrecisionExhausted(f"nearest integer at x={self.x} undecided")
            self.refine_to(p)
            p *= 2
        return self._nearest

    def __repr__(self) -> str:
        return f"DistanceValue(x={self.x}, [{self.lo}, {self.hi}])"


def distance_cmp(a: DistanceValue, b: DistanceValue, budget: int | None = None) -> int:
    """-1/0/+1 comparison of two certified distances.

    Returns 0 only when equality is provable (exact rational values, or
    literally the same source object and multiplier); otherwise refines until
    the intervals separate.
    """
    if a.source is b.source and a.x == b.x:
        return 0
    budget = budget if budget is not None else max(a.source.budget, b.source.budget)
    p = 64
    while True:
        if a.hi < b.lo:
            return -1
        if b.hi < a.lo:
            return 1
        if a.exact and b.exact:
            return -1 if a.lo < b.lo else (1 if a.lo > b.lo else 0)
        if p > budget:
            raise PrecisionExhausted("distance comparison undecided within budget")
        a.refine_to(p)
        b.refine_to(p)
        p *= 2


def distance_le_fraction(a: DistanceValue, t: Fraction, budget: int | None = None) -> bool:
    """Certified decision of (value of a) <= t."""
    budget = budget if budget is not None else a.source.budget
    p = 64
    while True:
        if a.hi <= t:
            return True
        if a.lo > t:
            return False
        if a.exact:
            return a.lo <= t
        if p > budget:
            raise PrecisionExhausted("threshold comparison undecided within budget")
        a.refine_to(p)
        p *= 2


# ---------------------------------------------------------------------------
# scaled views and sweep kernels


@dataclass(frozen=True)
class ScaledView:
    """Integer enclosure L <= 2**P * value <= L + W of one source."""

    P: int
    L: int
    W: int


def scaled_view(source: RealSource, X: int, extra_bits: int = 48) -> ScaledView:
    """A scaled view precise enough for sweeps with multipliers up to X."""
    P = 64 + X.bit_length() + extra_bits
    elo, ehi = source.enclosure(P)
    m = 1 << P
    L = math.floor(elo * m)
    H = math.ceil(ehi * m)
    return ScaledView(P, L, H - L)


def _scaled_dist(v: int, M: int) -> int:
    rem = v % M
    return rem if 2 * rem <= M else M - rem


def _range_min_candidates(P: int, L: int, W: int, x0: int, x1: int) -> tuple[int, list]:
    # One range of the running-minimum sweep.  Returns (cap, candidates):
    # cap is a certified upper bound on min ||x*value||*2**P over the range,
    # candidates are all (x, d_center) that might lie at or below cap.
    M = 1 << P
    v = (x0 - 1) * L
    cap = None
    out = []
    for x in range(x0, x1 + 1):
        v += L
        d = _scaled_dist(v, M)
        hi = d + x * W
        if cap is None or hi < cap:
            cap = hi
            out.append((x, d))
            if len(out) > 64:
                out = [(xx, dd) for (xx, dd) in out if dd - xx * W <= cap]
        elif d - x * W <= cap:
            out.append((x, d))
    out = [(xx, dd) for (xx, dd) in out if dd - xx * W <= cap]
    return cap, out


def _range_legendre(P: int, L: int, W: int, x0: int, x1: int) -> tuple[list, list]:
    # Certified solutions of ||q*value|| <= 1/(2q) over a q-range.  Returns
    # (pairs, ambiguous_qs); pairs were decided purely on the scaled view,
    # ambiguous q's need exact treatment by the caller.
    M = 1 << P
    half = M >> 1
    v = (x0 - 1) * L
    pairs = []
    unsure = []
    for q in range(x0, x1 + 1):
        v += L
        rem = v % M
        d = rem if 2 * rem <= M else M - rem
        s = q * W
        if 2 * q * (d + s) <= M:
            if d + s >= half:  # near a distance tie: let the caller pick p
                unsure.append(q)
            else:
                pairs.append(((v + half) // M, q))
        elif 2 * q * (d - s) > M:
            continue
        else:
            unsure.append(q)
    return pairs, unsure


def _range_records(P: int, L: int, W: int, x0: int, x1: int) -> list:
    # Candidates for strict running-minimum records within one range.
    M = 1 << P
    v = (x0 - 1) * L
    best_hi = None
    out = []
    for q in range(x0, x1 + 1):
        v += L
        d = _scaled_dist(v, M)
        lo, hi = d - q * W, d + q * W
        if best_hi is None or lo < best_hi:
            out.append((q, d))
            if best_hi is None or hi < best_hi:
                best_hi = hi
            if len(out) > 256:
                out = [(qq, dd) for (qq, dd) in out if dd - qq * W < best_hi]
    if best_hi is not None:
        out = [(qq, dd) for (qq, dd) in out if dd - qq * W < best_hi]
    return out


def _range_shared_candidates(P: int, Ls: tuple, Ws: tuple, x0: int, x1: int) -> tuple[int, list]:
    # Rough pass of the shared-denominator search: per x, the max over
    # coordinates of the scaled distances, with explicit slack per side.
    M = 1 << P
    k = len(Ls)
    vs = [(x0 - 1) * L for L in Ls]
    cap = None
    out = []
    for x in range(x0, x1 + 1):
        lo = 0
        hi = 0
        for i in range(k):
            vs[i] += Ls[i]
            d = _scaled_dist(vs[i], M)
            l = d - x * Ws[i]
            h = d + x * Ws[i]
            if l > lo:
                lo = l
            if h > hi:
                hi = h
        if cap is None or hi < cap:
            cap = hi
            out.append((x, lo))
            if len(out) > 64:
                out = [(xx, ll) for (xx, ll) in out if ll <= cap]
        elif lo <= cap:
            out.append((x, lo))
    out = [(xx, ll) for (xx, ll) in out if ll <= cap]
    return cap, out


def _split_range(lo: int, hi: int, parts: int) -> list[tuple[int, int]]:
    n = hi - lo + 1
    parts = max(1, min(parts, n))
    step = -(-n // parts)
    out = []
    a = lo
    while a <= hi:
        b = min(hi, a + step - 1)
        out.append((a, b))
        a = b + 1
    return out


def _run_ranges(worker, common: tuple, lo: int, hi: int, threads: int) -> list:
    """Run a range worker over [lo, hi], possibly split across processes.

    Results come back in range order, so any order-sensitive merge done by
    the caller is deterministic regardless of the worker count.
    """
    if hi < lo:
        return []
    if threads <= 1 or hi - lo + 1 < 4096:
        return [worker(*common, lo, hi)]
    chunks = _split_range(lo, hi, threads * 4)
    with ProcessPoolExecutor(max_workers=threads) as ex:
        futs = [ex.submit(worker, *common, a, b) for a, b in chunks]
        return [f.result() for f in futs]


def scan_min_distance(source: RealSource, X: int, threads: int = 1,
                      budget: int | None = None) -> tuple[int, DistanceValue]:
    """Smallest ||x*value|| over 1 <= x <= X by exhaustive certified sweep.

    Ties (possible only for rational sources) resolve to the smallest x.
    """
    if X < 1:
        raise ValueError("X must be >= 1")
    sv = scaled_view(source, X)
    results = _run_ranges(_range_min_candidates, (sv.P, sv.L, sv.W), 1, X, threads)
    cap = min(c for c, _ in results)
    cand = sorted((x, d) for _, items in results for (x, d) in items if d - x * sv.W <= cap)
    best_x, best = None, None
    for x, _ in cand:
        dv = DistanceValue(source, x)
        if best is None or distance_cmp(dv, best, budget) < 0:
            best_x, best = x, dv
    if not best.exact:
        best.refine_relative(budget=budget)
    return best_x, best


def scan_legendre_pairs(source: RealSource, Q: int, threads: int = 1,
                        budget: int | None = None) -> list[tuple[int, int]]:
    """All (p, q) with 1 <= q <= Q and certified |q*value - p| <= 1/(2q)."""
    budget = budget if budget is not None else source.budget
    if source.is_rational:
        pairs = []
        val = source.value
        for q in range(1, Q + 1):
            t = q * val
            for p in (math.floor(t), math.floor(t) + 1):
                if abs(t - p) <= Fraction(1, 2 * q):
                    pairs.append((p, q))
        return pairs
    sv = scaled_view(source, Q)
    results = _run_ranges(_range_legendre, (sv.P, sv.L, sv.W), 1, Q, threads)
    pairs = [pq for ps, _ in results for pq in ps]
    for q in (q for _, us in results for q in us):
        dv = DistanceValue(source, q)
        if distance_le_fraction(dv, Fraction(1, 2 * q), budget):
            pairs.append((dv.nearest_int(budget), q))
    pairs.sort(key=lambda pq: (pq[1], pq[0]))
    return pairs


def scan_best_denominators(source: RealSource, Q: int, threads: int = 1,
                           budget: int | None = None) -> list[int]:
    """Strict running-minimum records of ||q*value|| for q = 1..Q."""
    if source.is_rational:
        out = []
        best = None
        val = source.value
        for q in range(1, Q + 1):
            t = q * val
            d = min(t - math.floor(t), math.floor(t) + 1 - t)
            if best is None or d < best:
                out.append(q)
                best = d
                if d == 0:
                    break
        return out
    sv = scaled_view(source, Q)
    results = _run_ranges(_range_records, (sv.P, sv.L, sv.W), 1, Q, threads)
    cand = sorted(x for items in results for (x, _) in items)
    records = []
    cur: DistanceValue | None = None
    for q in cand:
        dv = DistanceValue(source, q)
        if cur is None or distance_cmp(dv, cur, budget) < 0:
            records.append(q)
            cur = dv
    return records


# ---------------------------------------------------------------------------
# the certification predicates


@dataclass(frozen=True)
class LegendreResult:
    status: str  # "convergent" | "not_applicable" | "violation"
    index: int | None = None
    reduced: tuple[int, int] | None = None


def convergent_index(source: RealSource, p: int, q: int) -> int | None:
    """Index of p/q in the convergent sequence, or None (p/q must be reduced)."""
    l = 0
    while True:
        try:
            c = source.convergent(l)
        except StreamExhausted:
            return None
        if c.num == p and c.den == q:
            return l
        if c.den > q:
            return None
        l += 1


def legendre_certify(p: int, q: int, source: RealSource,
                     budget: int | None = None) -> LegendreResult:
    """Check |q*value - p| <= 1/(2q); if it holds, certify p/q is a convergent.

    ``violation`` should never occur for an irrational source (it would
    contradict the classical convergent characterisation); it exists as a
    test hook.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    g = gcd(p, q)
    p, q = p // g, q // g
    if not offset_le(source, q, p, Fraction(1, 2 * q), budget):
        return LegendreResult("not_applicable", reduced=(p, q))
    idx = convergent_index(source, p, q)
    if idx is None:
        return LegendreResult("violation", reduced=(p, q))
    return LegendreResult("convergent", index=idx, reduced=(p, q))


def best_approximations(source: RealSource, Q: int, method: str = "auto",
                        budget: int | None = None, threads: int = 1) -> list[tuple[int, DistanceInterval]]:
    """Denominators q <= Q whose distance ||q*value|| beats every smaller q.

    Ties keep the smaller q.  Two routes exist: the exhaustive scan (allowed
    up to Q = 100000) and the convergent-denominator route; ``auto`` runs
    both where legal and cross-checks them, raising SearchMismatch on any
    disagreement.
    """
    if Q < 1:
        raise ValueError("Q must be >= 1")
    if method not in ("auto", "scan", "convergents", "both"):
        raise ValueError(f"unknown method {method!r}")
    if method in ("scan", "both") and Q > SCAN_LIMIT:
        raise ValueError(f"exhaustive scan refused for Q > {SCAN_LIMIT}")
    want_scan = method in ("scan", "both") or (method == "auto" and Q <= SCAN_LIMIT)
    want_conv = method in ("convergents", "both", "auto")

    conv_qs = scan_qs = None
    if want_conv:
        conv_qs = []
        for c in convergent_denominators_upto(source, Q):
            conv_qs.append(c.den)
            if source.is_rational and c.value == source.value:
                break
    if want_scan:
        scan_qs = scan_best_denominators(source, Q, threads=threads, budget=budget)
    if conv_qs is not None and scan_qs is not None and conv_qs != scan_qs:
        raise SearchMismatch(
            f"best approximations disagree for Q={Q}: scan={scan_qs} convergents={conv_qs}"
        )
    out = []
    for q in (scan_qs if scan_qs is not None else conv_qs):
        dv = DistanceValue(source, q)
        if not dv.exact:
            dv.refine_relative(budget=budget)
        out.append((q, dv.interval()))
    return out


@dataclass(frozen=True)
class MinkowskiResult:
    passed: bool
    solutions: tuple[tuple[int, int], ...]
    counterexample: tuple[tuple[int, int], tuple[int, int]] | None = None


def minkowski_2d_check(source: RealSource, Q, budget: int | None = None) -> MinkowskiResult:
    """Solutions of |q| <= Q, |q*value - p| <= 1/(2Q) are pairwise dependent.

    Enumerates all solution pairs with positive q (the map (p,q) -> (-p,-q)
    preserves both the system and linear dependence) and verifies that no two
    are linearly independent.
    """
    Q = Fraction(Q)
    if Q <= 1:
        raise ValueError("Q must be > 1")
    budget = budget if budget is not None else source.budget
    bound = 1 / (2 * Q)
    qmax = math.floor(Q)
    sols: list[tuple[int, int]] = []
    for q in range(1, qmax + 1):
        if source.is_rational:
            t = q * source.value
            for p in (math.floor(t), math.floor(t) + 1):
                if abs(t - p) <= bound:
                    sols.append((p, q))
            continue
        dv = DistanceValue(source, q)
        if distance_le_fraction(dv, bound, budget):
            sols.append((dv.nearest_int(budget), q))
    base = next(((p, q) for p, q in sols if (p, q) != (0, 0)), None)
    if base is not None:
        for p, q in sols:
            if base[0] * q - p * base[1] != 0:
                return MinkowskiResult(False, tuple(sols), (base, (p, q)))
    return MinkowskiResult(True, tuple(sols))
