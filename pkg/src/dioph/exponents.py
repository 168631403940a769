"""Finite-window estimation of simultaneous approximation exponents.

Three exponents are measured over window schedules, always with auditable
integer witnesses:

* ``lambda1`` -- the one-dimensional exponent, profiled along the best
  approximations of a single number;
* ``omega_k`` -- the classical shared-denominator simultaneous exponent:
  one x serves every coordinate and the error is max_j ||x * z_j||;
* ``chi_k`` -- the per-coordinate exponent: each coordinate gets its own
  denominator x_j, all bounded by the window X, and the error is
  max_j ||x_j * z_j|| measured against X.

An achieved exponent is always a certified rational lower bound obtained
from directed logarithms of certified error bounds, so every reported value
is true of the witness that carries it.  Empirical values are maxima over
the window schedule (a finite-window stand-in for a limsup); the window
trend is reported so converged and drifting estimates can be told apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .cf import (
    HALF,
    DistanceValue,
    convergent_denominators_upto,
    distance_cmp,
    offset_le,
    scan_min_distance,
    scaled_view,
    _range_shared_candidates,
    _run_ranges,
)
from .errors import (
    CostGuardExceeded,
    InvalidInput,
    PrecisionExhausted,
    SearchMismatch,
    StreamExhausted,
    VerificationFailed,
)
from .numeric import certified_exponent_floor, log_ratio_bounds
from .sources import RealSource, veronese_sources

EXPONENT_NAMES = ("lambda1", "lambda_k", "omega_k", "chi_k", "uniform_chi_k")

BRUTE_GUARD = 10**8  # refuse brute-force per-coordinate search beyond X_max**k


class RationalInputError(InvalidInput):
    """An operation that needs an irrational source got a rational one."""


# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class WitnessRecord:
    """An integer tuple certifying an approximation inequality at a window.

    ``mode`` is "shared" (one denominator, stored once) or "per_coordinate"
    (one denominator per coordinate).  Error bounds are certified intervals
    for |x_j * z_j - y_j|; the achieved exponent is a certified rational
    lower bound of -log(max error)/log(window), or None for an exact hit
    (``unbounded``).  ``derivation`` records whether the bounds were measured
    from enclosures or derived by the product chain of the witness transform.
    """

    mode: str
    window: int
    denominators: tuple[int, ...]
    numerators: tuple[int, ...]
    error_lo: tuple[Fraction, ...]
    error_hi: tuple[Fraction, ...]
    achieved_exponent: Fraction | None
    unbounded: bool = False
    vacuous: bool = False
    derivation: str = "measured"

    def k(self) -> int:
        return len(self.numerators)

    def denominator_for(self, j: int) -> int:
        return self.denominators[0] if self.mode == "shared" else self.denominators[j]

    def __post_init__(self):
        if self.mode not in ("shared", "per_coordinate"):
            raise InvalidInput(f"unknown witness mode {self.mode!r}")
        want = 1 if self.mode == "shared" else len(self.numerators)
        if len(self.denominators) != want:
            raise InvalidInput("denominator count does not match witness mode")
        for x in self.denominators:
            if not 0 < x <= (self.window if self.mode == "per_coordinate" else self.window):
                raise InvalidInput(f"denominator {x} outside (0, {self.window}]")


@dataclass(frozen=True)
class ProfileRow:
    """One best approximation q with its growth and quality ratios.

    nu is -log||q*z||/log q, eta the log-ratio of consecutive best
    approximations, tau the same with the next denominator replaced by
    a*q for the following partial quotient a.  All three come as certified
    rational bounds.  ``gap_law_ok`` is the exact integer certificate that
    0 < eta - tau <= 1/log q (it follows from q_prev <= a*q and the mean
    value bound for log).
    """

    ordinal: int
    cf_index: int
    q: int
    nu_lo: Fraction
    nu_hi: Fraction
    eta_lo: Fraction
    eta_hi: Fraction
    tau_lo: Fraction
    tau_hi: Fraction
    gap_law_ok: bool


@dataclass
class ExponentEstimate:
    """Windowed empirical estimate of one exponent, with all witnesses."""

    exponent_name: str
    k: int
    windows: tuple[int, ...]
    witnesses: tuple[WitnessRecord | None, ...]
    empirical_value: Fraction | None
    unbounded: bool = False
    method: str = ""
    skipped_windows: tuple[int, ...] = ()
    profile: tuple[ProfileRow, ...] = ()

    def trend(self) -> list[tuple[int, float | None]]:
        out = []
        for X, w in zip(self.windows, self.witnesses):
            if w is None:
                out.append((X, None))
            elif w.unbounded:
                out.append((X, math.inf))
            else:
                out.append((X, float(w.achieved_exponent)))
        return out

    def best_witness(self) -> WitnessRecord | None:
        best = None
        for w in self.witnesses:
            if w is None:
                continue
            if w.unbounded:
                return w
            if best is None or (not best.unbounded and w.achieved_exponent > best.achieved_exponent):
                best = w
        return best


# ---------------------------------------------------------------------------
# schedules and shared helpers


def window_schedule(X_max: int, sources: tuple[RealSource, ...] = (), ratio: int = 2,
                    base: int = 8, extra: tuple[int, ...] = ()) -> list[int]:
    """Geometric windows plus every convergent denominator of the sources.

    The limsup behaviour of the exponents concentrates at the convergent
    scales, so they are always inserted as windows.
    """
    if X_max < 2:
        raise InvalidInput("X_max must be >= 2")
    ws = {X_max}
    x = min(base, X_max)
    while x <= X_max:
        ws.add(x)
        x *= ratio
    for src in sources:
        try:
            for c in convergent_denominators_upto(src, X_max):
                if c.den >= 2:
                    ws.add(c.den)
        except PrecisionExhausted:
            pass
    for x in extra:
        if 2 <= x <= X_max:
            ws.add(x)
    return sorted(ws)


def _canonical_distance(source: RealSource, x: int, budget: int | None) -> DistanceValue:
    dv = DistanceValue(source, x)
    if not dv.exact:
        dv.refine_relative(budget=budget)
    return dv


def _measured_witness(mode: str, window: int, denominators: tuple[int, ...],
                      sources, xs_per_coord: tuple[int, ...], budget) -> WitnessRecord:
    """Assemble a witness by measuring each coordinate error from scratch."""
    dvs = [_canonical_distance(src, x, budget) for src, x in zip(sources, xs_per_coord)]
    numerators = tuple(dv.nearest_int(budget) for dv in dvs)
    his = tuple(dv.hi for dv in dvs)
    los = tuple(dv.lo for dv in dvs)
    max_hi = max(his)
    if max_hi == 0:
        return WitnessRecord(mode, window, denominators, numerators, los, his,
                             None, unbounded=True)
    nu = certified_exponent_floor(max_hi, window)
    return WitnessRecord(mode, window, denominators, numerators, los, his,
                         nu, vacuous=nu <= 0)


# ---------------------------------------------------------------------------
# lambda1 profile


def lambda1_profile(source: RealSource, depth: int, budget: int | None = None) -> ExponentEstimate:
    """Profile nu, eta, tau along the first ``depth`` best approximations.

    Requires an irrational source; the rows start at the first best
    approximation q >= 2 (log q must be positive).  The empirical value is
    the maximum certified nu over the window.
    """
    if source.is_rational:
        raise RationalInputError("lambda1 profile needs an irrational source")
    if depth < 3:
        raise InvalidInput("depth must be >= 3")
    budget = budget if budget is not None else source.budget
    rows: list[ProfileRow] = []
    witnesses: list[WitnessRecord] = []
    l = 1
    prev_den = 0
    while len(rows) < depth:
        try:
            c = source.convergent(l)
            c_next = source.convergent(l + 1)
            a_next = source.quotient(l + 1)
        except StreamExhausted:
            break
        if c.den >= 2 and c.den > prev_den:
            q, s_prev, s_next = c.den, source.convergent(l - 1).den, c_next.den
            dv = DistanceValue(source, q, seed=(Fraction(1, s_next + q), Fraction(1, s_next)))
            dv.refine_relative(rel_bits=40, budget=budget)
            d_lo, d_hi = log_ratio_bounds(dv.hi, Fraction(q)), log_ratio_bounds(dv.lo, Fraction(q))
            nu_lo, nu_hi = -d_lo[1], -d_hi[0]
            eta = log_ratio_bounds(Fraction(s_next), Fraction(q))
            tau = log_ratio_bounds(Fraction(a_next * q), Fraction(q))
            law = (s_next == a_next * q + s_prev) and (0 < s_prev <= a_next * q)
            rows.append(ProfileRow(len(rows), l, q, nu_lo, nu_hi,
                                   eta[0], eta[1], tau[0], tau[1], law))
            witnesses.append(WitnessRecord(
                "shared", q, (q,), (c.num,), (dv.lo,), (dv.hi,),
                certified_exponent_floor(dv.hi, q)))
        prev_den = max(prev_den, c.den)
        l += 1
    if not rows:
        raise PrecisionExhausted("no profile rows could be computed")
    empirical = max(r.nu_lo for r in rows)
    return ExponentEstimate(
        exponent_name="lambda1", k=1,
        windows=tuple(r.q for r in rows),
        witnesses=tuple(witnesses),
        empirical_value=empirical,
        method="profile", profile=tuple(rows))


# ---------------------------------------------------------------------------
# per-coordinate searches (chi)


def _candidate_argmin(source: RealSource, X: int, multiple_bound: int,
                      budget: int | None) -> int:
    """Smallest-distance x <= X among convergent denominators and multiples."""
    best_x = None
    best: DistanceValue | None = None
    cands: list[tuple[int, tuple[Fraction, Fraction] | None]] = []
    seen = set()
    for c in convergent_denominators_upto(source, X):
        seed = None
        if not source.is_rational:
            try:
                nxt = source.convergent(c.index + 1)
                seed = (Fraction(1, nxt.den + c.den), Fraction(1, nxt.den))
            except (StreamExhausted, PrecisionExhausted):
                seed = None
        for m in range(1, min(multiple_bound, X // c.den) + 1):
            x = m * c.den
            if x in seen:
                continue
            seen.add(x)
            mseed = None
            if seed is not None and m * seed[1] < HALF:
                mseed = (m * seed[0], m * seed[1])
            cands.append((x, mseed))
    cands.sort()
    for x, seed in cands:
        dv = DistanceValue(source, x, seed=seed)
        if best is None or distance_cmp(dv, best, budget) < 0:
            best_x, best = x, dv
    return best_x


def _chi_window(sources, X: int, how: str, multiple_bound: int, budget,
                threads: int) -> WitnessRecord:
    xs = []
    for src in sources:
        if how == "brute":
            x, _ = scan_min_distance(src, X, threads=threads, budget=budget)
        else:
            x = _candidate_argmin(src, X, multiple_bound, budget)
        xs.append(x)
    xs = tuple(xs)
    return _measured_witness("per_coordinate", X, xs, sources, xs, budget)


def estimate_chi_k(sources, X_max: int, schedule=None, method: str = "convergents",
                   multiple_bound: int = 64, budget: int | None = None,
                   threads: int = 1, exponent_name: str = "chi_k") -> ExponentEstimate:
    """Windowed estimate of the per-coordinate simultaneous exponent.

    ``method`` is "brute" (exhaustive per-coordinate minima; refused when
    X_max**k exceeds the cost guard), "convergents" (denominator candidates
    restricted to convergent denominators and their small multiples, which
    is exact for this search because per-coordinate minima sit at convergent
    denominators), or "both" (cross-check; any disagreement of the certified
    best exponents is a hard error).
    """
    sources = tuple(sources)
    k = len(sources)
    if k < 1:
        raise InvalidInput("need at least one source")
    if method not in ("brute", "convergents", "both"):
        raise InvalidInput(f"unknown method {method!r}")
    if method in ("brute", "both") and X_max**k > BRUTE_GUARD:
        raise CostGuardExceeded(
            f"brute-force per-coordinate search refused: X_max^k = {X_max**k} > {BRUTE_GUARD}")
    windows = tuple(schedule) if schedule is not None else tuple(window_schedule(X_max, sources))
    witnesses: list[WitnessRecord | None] = []
    skipped: list[int] = []
    for X in windows:
        try:
            wit = conv_wit = brute_wit = None
            if method in ("brute", "both"):
                brute_wit = _chi_window(sources, X, "brute", multiple_bound, budget, threads)
                wit = brute_wit
            if method in ("convergents", "both"):
                conv_wit = _chi_window(sources, X, "convergents", multiple_bound, budget, threads)
                wit = conv_wit
            if brute_wit is not None and conv_wit is not None:
                same = (brute_wit.unbounded == conv_wit.unbounded
                        and brute_wit.achieved_exponent == conv_wit.achieved_exponent)
                if not same:
                    raise SearchMismatch(
                        f"chi search methods disagree at X={X}: "
                        f"brute={brute_wit.achieved_exponent} convergents={conv_wit.achieved_exponent}")
            witnesses.append(wit)
        except PrecisionExhausted:
            witnesses.append(None)
            skipped.append(X)
    return _collect(exponent_name, k, windows, witnesses, method, skipped)


def _collect(name, k, windows, witnesses, method, skipped) -> ExponentEstimate:
    unbounded = any(w is not None and w.unbounded for w in witnesses)
    vals = [w.achieved_exponent for w in witnesses if w is not None and not w.unbounded]
    empirical = max(vals) if vals else None
    return ExponentEstimate(
        exponent_name=name, k=k, windows=tuple(windows), witnesses=tuple(witnesses),
        empirical_value=None if unbounded else empirical,
        unbounded=unbounded, method=method, skipped_windows=tuple(skipped))


# ---------------------------------------------------------------------------
# shared-denominator searches (omega, lambda_k)


def _shared_rough_scan(sources, X: int, threads: int) -> list[int]:
    views = [scaled_view(src, X) for src in sources]
    P = views[0].P
    Ls = tuple(v.L for v in views)
    Ws = tuple(v.W for v in views)
    results = _run_ranges(_range_shared_candidates, (P, Ls, Ws), 1, X, threads)
    cap = min(c for c, _ in results)
    return sorted(x for _, items in results for (x, lo) in items if lo <= cap)


class _SharedMax:
    """max_j ||x * z_j|| over a source tuple, as a refinable interval."""

    def __init__(self, sources, x: int):
        self.x = x
        self.dvs = [DistanceValue(s, x) for s in sources]

    @property
    def lo(self) -> Fraction:
        return max(dv.lo for dv in self.dvs)

    @property
    def hi(self) -> Fraction:
        return max(dv.hi for dv in self.dvs)

    @property
    def exact(self) -> bool:
        return all(dv.exact for dv in self.dvs)

    def refine_to(self, p: int) -> None:
        for dv in self.dvs:
            dv.refine_to(p)


def _shared_cmp(a: _SharedMax, b: _SharedMax, budget: int) -> int:
    p = 64
    while True:
        if a.hi < b.lo:
            return -1
        if b.hi < a.lo:
            return 1
        if a.exact and b.exact:
            return -1 if a.lo < b.lo else (1 if a.lo > b.lo else 0)
        if p > budget:
            raise PrecisionExhausted("shared-max comparison undecided within budget")
        a.refine_to(p)
        b.refine_to(p)
        p *= 2


def _shared_argmin(sources, X: int, exhaustive_limit: int, multiple_bound: int,
                   budget, threads: int) -> int:
    budget_eff = budget if budget is not None else max(s.budget for s in sources)
    if X <= exhaustive_limit:
        cands = _shared_rough_scan(sources, X, threads)
    else:
        seen = set()
        for src in sources:
            for c in convergent_denominators_upto(src, X):
                for m in range(1, min(multiple_bound, X // c.den) + 1):
                    seen.add(m * c.den)
        cands = sorted(seen)
    best_x, best = None, None
    for x in cands:
        sm = _SharedMax(sources, x)
        if best is None or _shared_cmp(sm, best, budget_eff) < 0:
            best_x, best = x, sm
    return best_x


def estimate_omega_k(sources, X_max: int, schedule=None, exhaustive_limit: int = 200_000,
                     multiple_bound: int = 64, budget: int | None = None,
                     threads: int = 1, exponent_name: str = "omega_k") -> ExponentEstimate:
    """Windowed estimate of the shared-denominator simultaneous exponent.

    Windows up to ``exhaustive_limit`` are searched exhaustively over
    1 <= x <= X; beyond that the candidate set is every convergent
    denominator of every coordinate source and their small multiples.
    """
    sources = tuple(sources)
    k = len(sources)
    if k < 1:
        raise InvalidInput("need at least one source")
    windows = tuple(schedule) if schedule is not None else tuple(window_schedule(X_max, sources))
    witnesses: list[WitnessRecord | None] = []
    skipped: list[int] = []
    for X in windows:
        try:
            x = _shared_argmin(sources, X, exhaustive_limit, multiple_bound, budget, threads)
            witnesses.append(_measured_witness("shared", X, (x,), sources, (x,) * k, budget))
        except PrecisionExhausted:
            witnesses.append(None)
            skipped.append(X)
    return _collect(exponent_name, k, windows, witnesses, "exhaustive+convergents", skipped)


def estimate_lambda_k(source: RealSource, k: int, X_max: int, **kwargs) -> ExponentEstimate:
    """lambda_k of a number: omega_k along its Veronese power tuple."""
    powers = veronese_sources(source, k)
    kwargs.setdefault("exponent_name", "lambda_k")
    return estimate_omega_k(powers, X_max, **kwargs)


# ---------------------------------------------------------------------------
# witness transform (per-coordinate -> shared) and re-verification


def chi_witness_to_omega_witness(w: WitnessRecord) -> WitnessRecord:
    """Turn a per-coordinate witness into a shared-denominator witness.

    The product x = x_1 * ... * x_k serves every coordinate inside the window
    Q**k: ||x * z_j|| <= (x/x_j) * |x_j z_j - y_j|, so a witness with exponent
    nu yields exponent (nu - k + 1)/k, by exact rational arithmetic.  A
    result exponent <= 0 is returned flagged vacuous.
    """
    if w.mode == "shared":
        raise InvalidInput("transform expects a per-coordinate witness")
    k = w.k()
    Q = w.window
    x = 1
    for xi in w.denominators:
        x *= xi
    cof = [x // xi for xi in w.denominators]
    his = tuple(min(HALF, c * e) for c, e in zip(cof, w.error_hi))
    los = (Fraction(0),) * k
    nums = tuple(c * y for c, y in zip(cof, w.numerators))
    if w.unbounded:
        return WitnessRecord("shared", Q**k, (x,), nums, los, his, None,
                             unbounded=True, derivation="chain")
    nu = (w.achieved_exponent - (k - 1)) / k
    return WitnessRecord("shared", Q**k, (x,), nums, los, his, nu,
                         vacuous=nu <= 0, derivation="chain")


def reverify_witness(w: WitnessRecord, sources, budget: int | None = None) -> None:
    """Re-check a witness from scratch; raises VerificationFailed on trouble.

    Every coordinate offset |x_j z_j - y_j| is re-certified against the
    recorded upper bound with fresh enclosures, and the recorded exponent is
    re-derived: measured witnesses must reproduce it exactly, chain-derived
    witnesses must satisfy their defining arithmetic.
    """
    sources = tuple(sources)
    if len(sources) != w.k():
        raise VerificationFailed("source count does not match witness")
    for j, src in enumerate(sources):
        x = w.denominator_for(j)
        y = w.numerators[j]
        bud = budget if budget is not None else 2 * src.budget
        if w.error_hi[j] >= HALF and w.derivation == "chain":
            continue  # the bound is the trivial 1/2, nothing to re-check
        try:
            ok = offset_le(src, x, y, w.error_hi[j], bud)
        except PrecisionExhausted as e:
            raise VerificationFailed(f"coordinate {j}: {e}") from None
        if not ok:
            raise VerificationFailed(
                f"coordinate {j}: |{x} z - {y}| exceeds recorded bound {w.error_hi[j]}")
    if w.unbounded:
        for j, src in enumerate(sources):
            if not src.is_rational:
                raise VerificationFailed("unbounded witness over an irrational coordinate")
        return
    if w.derivation == "measured":
        again = certified_exponent_floor(max(w.error_hi), w.window)
        if again != w.achieved_exponent:
            raise VerificationFailed(
                f"recorded exponent {w.achieved_exponent} != recomputed {again}")


# ---------------------------------------------------------------------------
# structural reports


@dataclass(frozen=True)
class SandwichRow:
    window: int
    omega_exponent: Fraction | None
    chi_exponent: Fraction | None
    min_lambda1_exponent: Fraction | None
    degenerate: bool
    ok: bool


@dataclass
class SandwichReport:
    rows: tuple[SandwichRow, ...]
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def sandwich_report(omega_est: ExponentEstimate, chi_est: ExponentEstimate) -> SandwichReport:
    """Window-by-window ordering checks between the two simultaneous exponents.

    At every window the best shared witness is also a per-coordinate witness,
    so its exponent cannot beat the best per-coordinate exponent; and the
    per-coordinate exponent is measured against the max coordinate error, so
    it cannot beat any single coordinate's one-dimensional exponent.  A
    violation indicates an incomplete search, never new mathematics.
    """
    if omega_est.windows != chi_est.windows:
        raise InvalidInput("sandwich report needs identical window schedules")
    rows = []
    violations = []
    for X, ow, cw in zip(omega_est.windows, omega_est.witnesses, chi_est.witnesses):
        if ow is None or cw is None or ow.unbounded or cw.unbounded:
            rows.append(SandwichRow(X, None, None, None, degenerate=True, ok=True))
            continue
        o_exp = ow.achieved_exponent
        c_exp = cw.achieved_exponent
        lam = min(certified_exponent_floor(hi, X) for hi in cw.error_hi if hi > 0) \
            if all(hi > 0 for hi in cw.error_hi) else None
        ok = True
        if o_exp > c_exp:
            ok = False
            violations.append(
                f"X={X}: shared witness exponent {o_exp} exceeds per-coordinate {c_exp}")
        if lam is not None and c_exp > lam:
            ok = False
            violations.append(
                f"X={X}: per-coordinate exponent {c_exp} exceeds a single-coordinate bound {lam}")
        rows.append(SandwichRow(X, o_exp, c_exp, lam, degenerate=False, ok=ok))
    return SandwichReport(tuple(rows), tuple(violations))


@dataclass(frozen=True)
class UniformRow:
    window: int
    denominators: tuple[int, ...]
    exponent: Fraction | None  # None means an exact hit (rational coordinate)


@dataclass
class UniformChiReport:
    rows: tuple[UniformRow, ...]
    worst_window: int
    worst_exponent: Fraction


def uniform_chi_check(sources, X_max: int, base: int = 8,
                      ratio: Fraction = Fraction(5, 4),
                      budget: int | None = None) -> UniformChiReport:
    """Dense-window check that a near-exponent-1 witness exists at every X.

    For each window the largest convergent denominator of each coordinate
    already has error below 1/X, which pins the uniform exponent at 1; the
    report records the worst window actually achieved.
    """
    sources = tuple(sources)
    for s in sources:
        if s.is_rational:
            raise RationalInputError("uniform check needs irrational sources")
    ws = set()
    x = Fraction(max(2, base))
    while x <= X_max:
        ws.add(math.floor(x))
        x *= ratio
    ws.add(X_max)
    for src in sources:
        for c in convergent_denominators_upto(src, X_max):
            if c.den >= 2:
                ws.add(c.den)
    rows = []
    worst = None
    for X in sorted(ws):
        if X < 2:
            continue
        xs = []
        err = Fraction(0)
        for src in sources:
            # last raw convergent index with denominator <= X (not deduplicated,
            # so the follow-up convergent is certain to exceed X)
            l = 0
            last = src.convergent(0)
            while True:
                try:
                    c = src.convergent(l + 1)
                except StreamExhausted:
                    raise PrecisionExhausted(f"{src!r}: stream too short for X={X}") from None
                if c.den > X:
                    break
                last = c
                l += 1
            nxt = src.convergent(last.index + 1)
            xs.append(last.den)
            err = max(err, Fraction(1, nxt.den))
        exp = certified_exponent_floor(err, X)
        rows.append(UniformRow(X, tuple(xs), exp))
        if worst is None or exp < worst[1]:
            worst = (X, exp)
    return UniformChiReport(tuple(rows), worst[0], worst[1])
