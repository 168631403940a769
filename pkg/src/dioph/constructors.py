"""Constructions of numbers with prescribed approximation exponents.

All constructions are deterministic in (plan, salt) and produce lazily
infinite sources: the returned streams keep extending themselves on demand,
while the trace records the first ``depth`` designated stages.

* ``Lambda1CFPlan`` -- a continued fraction whose next partial quotient is
  always ceil(s**(lam-1)) for the current denominator s, pinning the
  one-dimensional exponent at lam.
* ``Lambda1SeriesPlan`` -- the lacunary series sum 2**-floor((1+lam)**n),
  same exponent target by a different mechanism.
* ``VeronesePlan`` -- the curve construction: quotients 0, 1, 2, then
  ceil(s**(k*lam+k-2)) forever; its one-dimensional exponent is
  k*lam+k-1 and its k-dimensional power exponent is lam.
* ``VectorTargetsPlan`` -- k coupled streams of ones with sparse large
  quotients scheduled so coordinate j realises exponent lam_j while the
  designated denominators line up as s_j ~ s_1**(w/lam_j), which pins the
  per-coordinate simultaneous exponent at w.

The salt selects among admissible insertion positions (each stage leaves a
one-step slack that does not affect any of the limits); distinct salts give
distinct numbers.  No linear-independence claim is certified.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .errors import InvalidInput
from .numeric import log_ratio_bounds, power_ceil
from .sources import BinarySeriesSource, CFStreamSource, RealSource

CONSTRUCTED_BUDGET = 1 << 17  # constructed streams are lazily infinite; allow deep refinement


@dataclass(frozen=True)
class Lambda1CFPlan:
    lam: Fraction
    depth: int
    salt: int = 0

    def __post_init__(self):
        if Fraction(self.lam) < 1:
            raise InvalidInput("lambda target must be >= 1")
        if self.depth < 3:
            raise InvalidInput("depth must be >= 3")


@dataclass(frozen=True)
class Lambda1SeriesPlan:
    lam: Fraction
    depth: int
    salt: int = 0

    def __post_init__(self):
        if Fraction(self.lam) < 1:
            raise InvalidInput("lambda target must be >= 1")
        if self.depth < 3:
            raise InvalidInput("depth must be >= 3")


@dataclass(frozen=True)
class VeronesePlan:
    k: int
    lam: Fraction
    depth: int
    salt: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise InvalidInput("k must be >= 1")
        if Fraction(self.lam) < 2:
            raise InvalidInput("the curve construction is proven for lambda >= 2 only")
        if self.depth < 3:
            raise InvalidInput("depth must be >= 3")


@dataclass(frozen=True)
class VectorTargetsPlan:
    k: int
    lambdas: tuple
    w: Fraction
    depth: int
    salt: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise InvalidInput("vector construction needs k >= 2")
        if len(self.lambdas) != self.k:
            raise InvalidInput("need one lambda target per coordinate")
        lams = [Fraction(l) for l in self.lambdas]
        w = Fraction(self.w)
        if any(l < 1 for l in lams):
            raise InvalidInput("lambda targets must be >= 1")
        if not 1 <= w <= min(lams):
            raise InvalidInput("need 1 <= w <= min(lambda_j)")
        if self.depth < 3:
            raise InvalidInput("depth must be >= 3")


Plan = Lambda1CFPlan | Lambda1SeriesPlan | VeronesePlan | VectorTargetsPlan


@dataclass(frozen=True)
class TraceRow:
    """One designated stage of a construction, with certified log ratios."""

    stage: int
    coordinate: int           # 0-based user coordinate (0 for single streams)
    position: int             # index of the inserted quotient in the stream
    inserted: int             # the large quotient h (1 in degenerate cases)
    denominator: int          # designated denominator s just before insertion
    ratio_lo: Fraction | None  # log s / log s_leader at this stage
    ratio_hi: Fraction | None
    nu_lo: Fraction           # realized -log||s*z||/log s at the stage
    nu_hi: Fraction


@dataclass
class ConstructionTrace:
    plan: Plan
    rows: tuple[TraceRow, ...]

    def rows_for(self, coordinate: int) -> list[TraceRow]:
        return [r for r in self.rows if r.coordinate == coordinate]

    def last_stage(self) -> int:
        return max(r.stage for r in self.rows)


def _nu_bounds(s: int, s_next: int) -> tuple[Fraction, Fraction]:
    # |s*z - r| lies strictly between 1/(s_next + s) and 1/s_next, so the
    # realized exponent at s is bracketed by the corresponding log ratios.
    lo = log_ratio_bounds(Fraction(s_next), Fraction(s))
    hi = log_ratio_bounds(Fraction(s_next + s), Fraction(s))
    return lo[0], hi[1]


# ---------------------------------------------------------------------------
# single-stream constructions


def construct_lambda1(plan) -> tuple[RealSource, ConstructionTrace]:
    """Build a number with one-dimensional exponent pinned at plan.lam."""
    if isinstance(plan, Lambda1CFPlan):
        return _lambda1_cf(plan)
    if isinstance(plan, Lambda1SeriesPlan):
        return _lambda1_series(plan)
    raise InvalidInput(f"not a lambda1 plan: {plan!r}")


def _lambda1_cf(plan: Lambda1CFPlan) -> tuple[RealSource, ConstructionTrace]:
    lam = Fraction(plan.lam)

    def gen() -> Iterator[int]:
        yield 0
        yield 1
        s_prev, s_cur = 1, 1
        while True:
            a = power_ceil(s_cur, lam - 1)
            yield a
            s_prev, s_cur = s_cur, a * s_cur + s_prev

    source = CFStreamSource(gen(), budget=CONSTRUCTED_BUDGET, label=f"lambda1cf({lam})")
    rows = []
    for n in range(2, 2 + plan.depth):
        s = source.convergent(n).den
        s_next = source.convergent(n + 1).den
        h = source.quotient(n + 1)
        nu_lo, nu_hi = _nu_bounds(s, s_next)
        rows.append(TraceRow(n - 2, 0, n + 1, h, s, None, None, nu_lo, nu_hi))
    return source, ConstructionTrace(plan, tuple(rows))


def _lambda1_series(plan: Lambda1SeriesPlan) -> tuple[RealSource, ConstructionTrace]:
    lam = Fraction(plan.lam)
    base = 1 + lam

    def exps() -> Iterator[int]:
        n = 1
        while True:
            yield base.numerator**n // base.denominator**n
            n += 1

    source = BinarySeriesSource(exps(), budget=CONSTRUCTED_BUDGET, label=f"lambda1series({lam})")
    rows = []
    exponents = source.exponents_prefix(plan.depth + 1)
    for i in range(plan.depth):
        a_n, a_next = exponents[i], exponents[i + 1]
        # the partial sum has denominator 2**a_n and its error is the series
        # tail, between 2**-a_next and 2**(1-a_next)
        nu_lo = Fraction(a_next - 1, a_n)
        nu_hi = Fraction(a_next, a_n)
        rows.append(TraceRow(i, 0, i + 1, a_next - a_n, 1 << a_n, None, None, nu_lo, nu_hi))
    return source, ConstructionTrace(plan, tuple(rows))


def construct_veronese(plan: VeronesePlan) -> tuple[RealSource, ConstructionTrace]:
    """Build the curve construction: quotients 0,1,2 then ceil(s**(k*lam+k-2))."""
    k, lam = plan.k, Fraction(plan.lam)
    growth = k * lam + k - 2

    def gen() -> Iterator[int]:
        yield 0
        yield 1
        yield 2
        s_prev, s_cur = 1, 3
        while True:
            a = power_ceil(s_cur, growth)
            yield a
            s_prev, s_cur = s_cur, a * s_cur + s_prev

    source = CFStreamSource(gen(), budget=CONSTRUCTED_BUDGET, label=f"veronese(k={k},lam={lam})")
    rows = []
    for n in range(2, 2 + plan.depth):
        s = source.convergent(n).den
        s_next = source.convergent(n + 1).den
        h = source.quotient(n + 1)
        nu_lo, nu_hi = _nu_bounds(s, s_next)
        # growth ratio log s_{n+1}/log s_n approaches k*lam+k-1
        g = log_ratio_bounds(Fraction(s_next), Fraction(s))
        rows.append(TraceRow(n - 2, 0, n + 1, h, s, g[0], g[1], nu_lo, nu_hi))
    return source, ConstructionTrace(plan, tuple(rows))


# ---------------------------------------------------------------------------
# the coupled vector construction


class _Stream:
    __slots__ = ("quots", "s_prev", "s_cur")

    def __init__(self):
        self.quots = [0, 1]
        self.s_prev = 1  # denominator of the second-to-last convergent
        self.s_cur = 1   # denominator of the last convergent

    def push(self, a: int) -> None:
        self.quots.append(a)
        self.s_prev, self.s_cur = self.s_cur, a * self.s_cur + self.s_prev


def _ge_power(s: int, base: int, exponent: Fraction, factor: int = 1) -> bool:
    # s * factor >= base ** exponent, by integer powering
    e = Fraction(exponent)
    return (s * factor) ** e.denominator >= base**e.numerator


class _VectorBuilder:
    """Joint scheduler for the k coupled streams of the vector construction.

    Internally coordinates are ordered by ascending lambda; the leader
    (smallest lambda) sets the stage scale s1, the others stop reading ones
    at staggered targets s1**(w/lam_j) / 4**j, which keeps the designated
    denominators strictly ordered, and then insert their large quotient
    ceil(s**(lam_j - 1)).  The stagger and the ceiling both vanish in the
    log ratios as the scales grow.
    """

    def __init__(self, plan: VectorTargetsPlan):
        self.plan = plan
        lams = [Fraction(l) for l in plan.lambdas]
        self.order = sorted(range(plan.k), key=lambda j: (lams[j], j))
        self.lams = [lams[j] for j in self.order]  # ascending
        self.w = Fraction(plan.w)
        self.streams = [_Stream() for _ in range(plan.k)]  # internal order
        self.rows: list[TraceRow] = []
        self.stages_done = 0
        self.prev_leader_den = 1
        self._rng = random.Random(plan.salt ^ 0x5EED)
        import threading

        self._lock = threading.Lock()

    def ensure(self, stages: int) -> None:
        with self._lock:
            while self.stages_done < stages:
                self._stage()

    def _stage(self) -> None:
        i = self.stages_done + 1
        k, w = self.plan.k, self.w
        lam1, lam_k = self.lams[0], self.lams[-1]
        leader = self.streams[0]
        # the leader grows until the smallest designated target of this stage
        # (s1**(w/lam_k)/4**k) clears prev_leader**lam1 with room to spare
        lead_exp = lam1 * lam_k / w
        factor = 4 ** (k + 1) * (1 << i)
        while not _ge_power(leader.s_cur, self.prev_leader_den * factor, lead_exp) \
                or leader.s_cur <= 4 ** (k + 2):
            leader.push(1)
        if self._rng.getrandbits(1):
            leader.push(1)
        stage_dens = [0] * k
        stage_rows = []
        s1 = leader.s_cur
        for pos_j in range(k):
            st = self.streams[pos_j]
            lam_j = self.lams[pos_j]
            if pos_j > 0:
                target_exp = w / lam_j
                while not _ge_power(st.s_cur, s1, target_exp, factor=4**pos_j):
                    st.push(1)
                if self._rng.getrandbits(1) and 2 * st.s_cur < stage_dens[pos_j - 1]:
                    st.push(1)
                if st.s_cur >= stage_dens[pos_j - 1]:
                    raise InvalidInput(
                        f"infeasible schedule at stage {i}: coordinate order collapsed "
                        f"(lambda targets too close for depth {self.plan.depth})")
            s = st.s_cur
            stage_dens[pos_j] = s
            h = power_ceil(s, lam_j - 1)
            position = len(st.quots)
            st.push(h)
            nu_lo, nu_hi = _nu_bounds(s, st.s_cur)
            if pos_j == 0:
                ratio = (Fraction(1), Fraction(1))
            else:
                ratio = log_ratio_bounds(Fraction(s), Fraction(s1))
            stage_rows.append(TraceRow(i - 1, self.order[pos_j], position, h, s,
                                       ratio[0], ratio[1], nu_lo, nu_hi))
        if not all(stage_dens[a] > stage_dens[a + 1] for a in range(k - 1)):
            raise InvalidInput(f"infeasible schedule at stage {i}: denominators unordered")
        # the smallest designated denominator must clear the previous leader scale
        lam1_f = Fraction(lam1)
        if not stage_dens[-1] ** lam1_f.denominator > self.prev_leader_den ** lam1_f.numerator:
            raise InvalidInput(f"infeasible schedule at stage {i}: separation failed")
        self.prev_leader_den = s1
        self.rows.extend(stage_rows)
        self.stages_done = i

    def quotient_iter(self, internal_j: int) -> Iterator[int]:
        idx = 0
        while True:
            while idx >= len(self.streams[internal_j].quots):
                self.ensure(self.stages_done + 1)
            yield self.streams[internal_j].quots[idx]
            idx += 1


def construct_vector_targets(plan: VectorTargetsPlan) -> tuple[list[RealSource], ConstructionTrace]:
    """Build k numbers with prescribed one-dimensional exponents lam_j whose
    per-coordinate simultaneous exponent is pinned at w."""
    builder = _VectorBuilder(plan)
    builder.ensure(plan.depth)
    internal_for_user = {builder.order[pos]: pos for pos in range(plan.k)}
    sources: list[RealSource] = []
    for j in range(plan.k):
        lam = Fraction(plan.lambdas[j])
        src = CFStreamSource(builder.quotient_iter(internal_for_user[j]),
                             budget=CONSTRUCTED_BUDGET,
                             label=f"vector(j={j},lam={lam},w={Fraction(plan.w)})")
        sources.append(src)
    rows = tuple(sorted(builder.rows, key=lambda r: (r.stage, r.coordinate)))
    return sources, ConstructionTrace(plan, rows)


# ---------------------------------------------------------------------------
# plan serialisation


def plan_to_json(plan: Plan) -> dict:
    if isinstance(plan, Lambda1CFPlan):
        return {"kind": "lambda1_cf", "lambda": str(Fraction(plan.lam)),
                "depth": plan.depth, "salt": plan.salt}
    if isinstance(plan, Lambda1SeriesPlan):
        return {"kind": "lambda1_series", "lambda": str(Fraction(plan.lam)),
                "depth": plan.depth, "salt": plan.salt}
    if isinstance(plan, VeronesePlan):
        return {"kind": "veronese", "k": plan.k, "lambda": str(Fraction(plan.lam)),
                "depth": plan.depth, "salt": plan.salt}
    if isinstance(plan, VectorTargetsPlan):
        return {"kind": "vector_targets", "k": plan.k,
                "lambdas": [str(Fraction(l)) for l in plan.lambdas],
                "w": str(Fraction(plan.w)), "depth": plan.depth, "salt": plan.salt}
    raise InvalidInput(f"unknown plan {plan!r}")


def plan_from_json(data: dict) -> Plan:
    kind = data.get("kind")
    depth = int(data.get("depth", 5))
    salt = int(data.get("salt", 0))
    if kind == "lambda1_cf":
        return Lambda1CFPlan(Fraction(data["lambda"]), depth, salt)
    if kind == "lambda1_series":
        return Lambda1SeriesPlan(Fraction(data["lambda"]), depth, salt)
    if kind == "veronese":
        return VeronesePlan(int(data["k"]), Fraction(data["lambda"]), depth, salt)
    if kind == "vector_targets":
        return VectorTargetsPlan(int(data["k"]),
                                 tuple(Fraction(l) for l in data["lambdas"]),
                                 Fraction(data["w"]), depth, salt)
    raise InvalidInput(f"unknown plan kind {kind!r}")


def construct(plan: Plan):
    """Dispatch a plan to its builder; returns (source or sources, trace)."""
    if isinstance(plan, (Lambda1CFPlan, Lambda1SeriesPlan)):
        return construct_lambda1(plan)
    if isinstance(plan, VeronesePlan):
        return construct_veronese(plan)
    if isinstance(plan, VectorTargetsPlan):
        return construct_vector_targets(plan)
    raise InvalidInput(f"unknown plan {plan!r}")


def trace_csv_rows(trace: ConstructionTrace) -> list[list[str]]:
    """Rows for the trace CSV: stage, coordinate, position, inserted quotient,
    denominator, ratio to the leader scale, realized exponent."""
    out = [["stage", "coordinate", "position", "inserted", "denominator",
            "ratio_to_leader", "realized_nu"]]
    for r in trace.rows:
        ratio = "" if r.ratio_lo is None else f"{float((r.ratio_lo + r.ratio_hi) / 2):.6f}"
        nu = f"{float((r.nu_lo + r.nu_hi) / 2):.6f}"
        out.append([str(r.stage), str(r.coordinate), str(r.position), str(r.inserted),
                    str(r.denominator), ratio, nu])
    return out
