"""Long-term key classes: KT1/KT2 checks, sampling and weak-key families."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .cipher import LongTermKey, round_chain
from .gf2 import Gf2Matrix, gf2_rank

W = frozenset({5, 9, 21, 25, 29, 33})
FIXED_P = {3: 33, 7: 5, 9: 9, 15: 21, 18: 25, 24: 29}
MULTIPLES_OF_4 = tuple(range(4, 37, 4))
D56_PAIRS = frozenset(
    [(a, b) for a in (8, 12, 16) for b in (20, 28, 32)]
    + [(a, b) for a in (24, 28, 32) for b in (8, 12, 16)]
)


@dataclass
class Kt1Report:
    valid: bool
    violations: list[tuple[str, str]]
    witness: tuple[int, ...] | None

    def lines(self) -> list[str]:
        if self.valid:
            return ["KT1: valid"]
        return ["KT1: invalid"] + [f"  {cid}: {text}" for cid, text in self.violations]


def d_chain(D) -> tuple[int, ...] | None:
    """The permutation j1..j8 of 2..9 with D(j1)=4, D(j_{k+1}) = 4 j_k, if any."""
    where = {}
    for i in range(2, 10):
        where.setdefault(D[i - 1], i)
    js = []
    target = 4
    for _ in range(8):
        j = where.get(target)
        if j is None or j in js:
            return None
        js.append(j)
        target = 4 * j
    return tuple(js) if sorted(js) == list(range(2, 10)) else None


def _tu_count(D, P, alpha) -> int:
    low = set(range(13)) - W
    high = set(range(13, 37)) - W
    T = low & (set(P[:24]) | set(D[3:9]) | {alpha})
    U = high & ({P[25], P[26]} | set(D[:3]))
    return len(T - {P[24]}) + len(U - {P[24]})


def validate_kt1(ltk: LongTermKey) -> Kt1Report:
    D, P, a = ltk.D, ltk.P, ltk.alpha
    v: list[tuple[str, str]] = []

    def need(ok, cid, text):
        if not ok:
            v.append((cid, text))

    need(len(set(D)) == 9, "D-injective", "D is injective")
    need(len(set(P)) == 27, "P-injective", "P is injective")
    bad = [f"P({j})={P[j - 1]}" for j, x in FIXED_P.items() if P[j - 1] != x]
    need(not bad, "P-fixed", "P(3)=33, P(7)=5, P(9)=9, P(15)=21, P(18)=25, P(24)=29"
         + (f" (have {', '.join(bad)})" if bad else ""))
    need(not set(D) & W, "D-avoids-W", "D(i) not in W for i = 1..9")
    need(a not in W, "alpha-avoids-W", "alpha not in W")
    tu = _tu_count(D, P, a)
    need(tu <= 12, "TU-bound", f"|T minus P(25)| + |U minus P(25)| <= 12 (have {tu})")
    need(D[0] == 0, "D(1)=0", "D(1)=0")
    js = d_chain(D)
    need(js is not None, "D-chain", "D(j1)=4, D(j_{k+1})=4 j_k for a permutation j1..j8 of 2..9")
    if js is not None:
        need(P[19] == 4 * js[7], "P(20)=4j8", f"P(20)=4 j8 = {4 * js[7]}")
    need((D[4], D[5]) in D56_PAIRS, "D5-D6", "(D(5),D(6)) in {8,12,16}x{20,28,32} or {24,28,32}x{8,12,16}")
    need(P[5] == D[7], "P(6)=D(8)", "P(6)=D(8)")
    need(P[12] == D[6], "P(13)=D(7)", "P(13)=D(7)")
    need(P[26] % 4 != 0, "P(27)-mod-4", "P(27) is not 0 mod 4")
    missing = [m for m in MULTIPLES_OF_4 if m not in P[:26]]
    need(not missing, "P-covers-4l", "every 4l (l=1..9) occurs among P(1..26)"
         + (f" (missing {missing})" if missing else ""))
    need(D[2] in (P[0], P[1], P[3], P[4]), "D(3)-in-P", "D(3) in {P(1),P(2),P(4),P(5)}")
    need(D[3] not in (P[13], P[15], P[16], P[18]), "D(4)-not-in-P", "D(4) not in {P(14),P(16),P(17),P(19)}")
    need(not {P[7], P[9], P[10], P[11]} & {D[3], D[4], D[5]}, "P8-12-disjoint",
         "{P(8),P(10),P(11),P(12)} and {D(4),D(5),D(6)} are disjoint")
    return Kt1Report(not v, v, js)


def is_kt1(ltk: LongTermKey) -> bool:
    return validate_kt1(ltk).valid


# -- KT2 ----------------------------------------------------------------------

def _ov(a: int, b: int) -> set[int]:
    return set(range(a, b + 1))


def fresh_linear_matrix(ltk: LongTermKey) -> np.ndarray:
    """9x9 dependence of U_1..U_9 on u_4, u_8, .., u_36 with every Z output frozen."""
    def v(j):
        return 1 << ltk.P[j - 1]

    def ud(i):
        return 1 << ltk.D[i - 1]

    U = round_chain(v, ud, 1, 0, 0, lambda *x: 0)
    # bit 0 stands for u_0 = s1 and is not a state input
    return np.array([[U[i] >> (4 * k) & 1 for k in range(1, 10)] for i in range(1, 10)], dtype=np.uint8)


def fresh_linear_rank(ltk: LongTermKey) -> int:
    return gf2_rank(Gf2Matrix(fresh_linear_matrix(ltk)))


@dataclass
class Kt2Report:
    valid: bool
    violations: list[tuple[str, str]]
    notes: list[str] = field(default_factory=list)
    rank: int = 0

    def lines(self) -> list[str]:
        head = ["KT2: valid" if self.valid else "KT2: invalid"]
        return head + [f"  {c}: {t}" for c, t in self.violations] + [f"  note: {n}" for n in self.notes]


KT2_READINGS = (
    "overline a,b is read as the integer range a..b",
    "repeated clauses are checked once",
    "the j2..j6 clause is read literally, with D_{j1} = 0 and {8 j2 - 5, 8 j2} a two-element set",
)


def validate_kt2(ltk: LongTermKey) -> Kt2Report:
    D, P, a = ltk.D, ltk.P, ltk.alpha
    v: list[tuple[str, str]] = []

    def need(ok, cid, text):
        if not ok:
            v.append((cid, text))

    need(len(set(D)) == 9, "D-injective", "D is injective")
    need(len(set(P)) == 27, "P-injective", "P is injective")
    need(all(P[j - 1] == x for j, x in FIXED_P.items()), "P-fixed", "fixed P values")
    need(not set(D) & W, "D-avoids-W", "D(i) not in W")
    need(a not in W, "alpha-avoids-W", "alpha not in W")
    need(_tu_count(D, P, a) <= 12, "TU-bound", "|T minus P(25)| + |U minus P(25)| <= 12")
    A = set(D) | {P[5], P[12], P[19], P[26]}
    As = {1: {D[0], D[1], P[26]}, 2: {D[2], D[3], P[19]}, 3: {D[4], D[5], P[12]}, 4: {D[6], D[7], P[5]}}
    need(not set(P) & set(D), "P-D-disjoint", "P(i) != D(j) for all i, j")
    zeros = [j for j in range(1, 8) if D[j - 1] == 0]
    need(bool(zeros), "D-zero", "D(j1) = 0 for some j1 in 1..7")
    m4 = set(MULTIPLES_OF_4)
    need({D[7], D[8]} <= m4 and m4 <= A, "D8-D9-in-4s", "{D(8),D(9)} within {4,..,36} within A")

    def j_clause() -> bool:
        for j1 in zeros:
            cand = [j for j in range(1, 5) if D[j1 - 1] not in As[j]]
            for j2, j3 in itertools.product(cand, repeat=2):
                if j2 == j3:
                    continue
                drop = {j1, 2 * j2 - 1, 2 * j2}
                for j4 in _ov(1, 4) - drop:
                    for j5 in _ov(5, 8) - drop:
                        for j6 in _ov(1, 9) - drop - {j4, j5}:
                            span = _ov(4 * j1 - 3, 4 * j1) | _ov(4 * j6 - 3, 4 * j6)
                            if ({4 * j4, 4 * j5} <= As[j2] and As[j2] & span
                                    and {8 * j2 - 5, 8 * j2} <= As[j3] and As[j3] & span):
                                return True
        return False

    need(j_clause(), "j-clause", "existence of j2..j6 with the stated set conditions")

    def drop(values, *ranges):
        keep = set(values) - {0}
        for lo, hi in ranges:
            keep -= _ov(lo, hi)
        return bool(keep)

    def d(*idx):
        return [D[i - 1] for i in idx]

    def p(n):
        return list(P[:n])

    diffs = [
        ("S1", d(9), [(33, 36)]),
        ("S2", d(8, 9) + p(5), [(29, 32)]),
        ("S3", d(7, 8) + p(6), [(25, 32)]),
        ("S4", d(7, 9) + p(6), [(25, 28), (33, 36)]),
        ("S5", d(6, 7, 8, 9) + p(12), [(21, 36)]),
        ("S6", d(5, 7, 8, 9) + p(13), [(17, 20), (25, 36)]),
        ("S7", d(7, 8, 9) + p(6), [(25, 36)]),
        ("S8", d(5, 6, 8, 9) + p(13), [(17, 24), (29, 36)]),
        ("S9", d(5, 6, 7, 9) + p(13), [(17, 28), (33, 36)]),
        ("S10", d(5, 6, 7, 8) + p(13), [(17, 32)]),
        ("S11", d(5, 6, 7, 8, 9) + p(13), [(17, 36)]),
        ("S12", d(4, 5, 6, 7, 8, 9) + p(19), [(13, 36)]),
        ("S13", d(3, 4, 5, 6, 7, 8, 9) + p(20), [(9, 36)]),
    ]
    for cid, vals, ranges in diffs:
        need(drop(vals, *ranges), cid, f"set difference {cid} is non-empty")
    rank = fresh_linear_rank(ltk)
    need(rank == 9, "rank-9", f"linear part on inputs 4,8,..,36 has rank 9 (have {rank})")
    return Kt2Report(not v, v, list(KT2_READINGS), rank)


# -- sampling -------------------------------------------------------------------

@lru_cache(maxsize=1)
def all_chain_d_vectors() -> tuple[tuple[tuple[int, ...], int], ...]:
    """Every (D, P(20)) allowed by the D-chain alone."""
    out = []
    for js in itertools.permutations(range(2, 10)):
        D = [0] * 9
        prev = 1
        for j in js:
            D[j - 1] = 4 * prev
            prev = j
        out.append((tuple(D), 4 * js[7]))
    return tuple(out)


@lru_cache(maxsize=1)
def all_kt1_d_vectors() -> tuple[tuple[tuple[int, ...], int], ...]:
    """Chain vectors that also meet the (D(5),D(6)) condition."""
    return tuple((D, p20) for D, p20 in all_chain_d_vectors() if (D[4], D[5]) in D56_PAIRS)


class SamplerExhausted(RuntimeError):
    pass


FREE_SLOTS = tuple(j for j in range(1, 28) if j not in FIXED_P and j not in (6, 13, 20))
NON_W_ALPHA = tuple(x for x in range(1, 37) if x not in W)


def _forced_p(D, p20) -> dict[int, int]:
    fixed = dict(FIXED_P)
    fixed[6] = D[7]
    fixed[13] = D[6]
    fixed[20] = p20
    return fixed


def _complete_p(rng, D, p20, extra_fixed=None, members=()):
    """One randomized completion of P, or None when a placement fails.

    Without extra constraints every KT1 key with this D has the same chance.
    """
    slots = _forced_p(D, p20)
    for s, val in (extra_fixed or {}).items():
        if slots.get(s, val) != val:
            return None
        slots[s] = val
    used = set(slots.values())
    if len(used) != len(slots):
        return None
    where = {val: s for s, val in slots.items()}
    for val, allowed in members:
        if val in where:
            if where[val] not in allowed:
                return None
            continue
        free = [s for s in allowed if s not in slots]
        if not free:
            return None
        s = free[rng.integers(len(free))]
        slots[s] = val
        where[val] = s
    if D[2] in where:
        if where[D[2]] not in (1, 2, 4, 5):
            return None
    else:
        free = [s for s in (1, 2, 4, 5) if s not in slots]
        if not free:
            return None
        s = free[rng.integers(len(free))]
        slots[s] = D[2]
        where[D[2]] = s
    rest4 = [m for m in MULTIPLES_OF_4 if m not in where]
    free = [s for s in range(1, 27) if s not in slots]
    if len(free) < len(rest4):
        return None
    picks = rng.permutation(len(free))[:len(rest4)]
    for m, k in zip(rest4, picks):
        slots[free[k]] = m
        where[m] = free[k]
    free = [s for s in range(1, 28) if s not in slots]
    pool = [x for x in range(37) if x not in where]
    if len(pool) < len(free):
        return None
    choice = rng.permutation(len(pool))[:len(free)]
    for s, k in zip(free, choice):
        slots[s] = pool[k]
    return tuple(slots[j] for j in range(1, 28))


def random_kt1(rng: np.random.Generator, max_tries: int = 100_000) -> LongTermKey:
    """Uniform draw from KT1 by restart-on-failure over a constant-size proposal."""
    dvs = all_kt1_d_vectors()
    for _ in range(max_tries):
        D, p20 = dvs[rng.integers(len(dvs))]
        P = _complete_p(rng, D, p20)
        if P is None:
            continue
        key = LongTermKey(D, P, NON_W_ALPHA[rng.integers(len(NON_W_ALPHA))])
        if is_kt1(key):
            return key
    raise SamplerExhausted("random_kt1 retry cap exhausted")


def random_chain_key(rng: np.random.Generator) -> LongTermKey:
    """Structural reference sample: a chain D with the forced P slots, all else uniform.

    No further KT1 condition is imposed.  Published weak-key proportions
    are reproduced against this population rather than against KT1.
    """
    dvs = all_chain_d_vectors()
    D, p20 = dvs[rng.integers(len(dvs))]
    slots = _forced_p(D, p20)
    used = set(slots.values())
    free = [j for j in range(1, 28) if j not in slots]
    pool = [x for x in range(37) if x not in used]
    pick = rng.permutation(len(pool))[:len(free)]
    for j, k in zip(free, pick):
        slots[j] = pool[k]
    return LongTermKey(D, tuple(slots[j] for j in range(1, 28)), NON_W_ALPHA[rng.integers(len(NON_W_ALPHA))])


SAMPLERS = {"kt1": random_kt1, "chain": random_chain_key}


# -- weak classes -------------------------------------------------------------------

P1245 = (1, 2, 4, 5)
P7_12 = tuple(range(7, 13))
P14_19 = tuple(range(14, 20))
P21_26 = tuple(range(21, 27))
P1_12 = tuple(range(1, 13))
Z3_SLOTS = (14, 16, 17, 19)
Z4_SLOTS = (21, 22, 23, 25, 26)


@dataclass(frozen=True)
class WeakClass:
    """One family of weak keys.

    `d_ok(D, p20)` screens the D table; `fixed(D)` returns pinned P slots and
    `members(D)` returns (value, allowed slots) pairs.
    """

    cid: str
    subcase: str
    d_ok: Callable
    fixed: Callable = lambda D: {}
    members: Callable = lambda D: ()
    log2_proportion: float | None = None
    note: str = ""

    @property
    def tag(self) -> str:
        return f"{self.cid}:{self.subcase}" if self.subcase else self.cid

    def matches(self, ltk: LongTermKey) -> bool:
        D, P = ltk.D, ltk.P
        js = d_chain(D)
        p20 = 4 * js[7] if js else P[19]
        if not self.d_ok(D, p20):
            return False
        if any(P[s - 1] != v for s, v in self.fixed(D).items()):
            return False
        return all(val in {P[s - 1] for s in allowed} for val, allowed in self.members(D))

    def bindings(self, ltk: LongTermKey) -> dict[str, int]:
        out = {f"D{i}": ltk.D[i - 1] for i in self.bound_d}
        out.update({f"P{s}": ltk.P[s - 1] for s in self.fixed(ltk.D)})
        return out

    @property
    def bound_d(self) -> tuple[int, ...]:
        return _BOUND_D.get(self.cid, ())


_BOUND_D = {
    "Thm-4.1.1": (6, 7, 8),
    "Thm-4.2.1": (3, 4, 7, 9),
    "Thm-4.2.2": (2, 3, 4, 7, 9),
    "Thm-4.2.3": (2, 5, 6, 7, 9),
    "Thm-4.2.4": (2, 5, 6, 7, 9),
    "Thm-4.2.5": (2, 5, 6, 7, 9),
    "AppC-1a": (6, 8), "AppC-1b": (5, 8), "AppC-2": (4, 5, 8), "AppC-3": (2, 3, 8),
    "AppC-4a": (6, 7, 8), "AppC-4b": (5, 7, 8), "AppC-5": (4, 5, 7, 8), "AppC-6": (2, 3, 7, 8),
    "AppC-7": (5, 6, 8), "AppC-8": (4, 5, 6, 8), "AppC-9": (2, 3, 6, 8),
}


def _thm_classes() -> list[WeakClass]:
    out = [
        WeakClass("Thm-4.1.1", "",
                  lambda D, p20: D[5] == 28 and D[6] == 36 and D[7] == 20,
                  lambda D: {4: 30, 5: 22, 8: 18, 10: 34}),
    ]
    for sub, d7, d9 in (("A", 12, 16), ("B", 16, 12)):
        out.append(WeakClass(
            "Thm-4.2.1", sub,
            lambda D, p20, d7=d7, d9=d9: D[6] == d7 and D[8] == d9 and {D[2], D[3], p20} == {28, 32, 36},
            note="the D-chain rules out P(20) = 32, so D(3) or D(4) is 32"))
    out.append(WeakClass(
        "Thm-4.2.2", "",
        lambda D, p20: D[6] == 16 and {D[2], D[3], p20} == {4, 8, 36} and {D[1], D[8]} == {28, 32},
        lambda D: {27: 10}))
    for cid, p27 in (("Thm-4.2.3", 7), ("Thm-4.2.4", 6), ("Thm-4.2.5", 6)):
        out.append(WeakClass(
            cid, "",
            lambda D, p20: D[1] == 36 and D[8] == 4 and {D[4], D[5], D[6]} <= {8, 20, 24},
            lambda D, p27=p27: {27: p27}))
    return out


def _rows(spec: str) -> list[tuple[int, int, bool, float]]:
    """Parse 'a<->b:-11.55, a,b:-14.6' rows into (first, second, either_order, log2)."""
    rows = []
    for item in spec.split(";"):
        pair, lg = item.strip().rsplit(":", 1)
        both = "<->" in pair
        a, b = pair.split("<->" if both else ",")
        rows.append((int(a), int(b), both, float(lg)))
    return rows


def _appc_classes() -> list[WeakClass]:
    out: list[WeakClass] = []

    # single-parameter cases keyed by D(8)
    single = [
        ("AppC-1a", lambda D: D[5] == 32, ((23, P1245), (31, P1245)), P7_12,
         {4: -14.46, 8: -11.76, 12: -11.76, 16: -14.46, 20: -14.46}),
        ("AppC-1b", lambda D: D[4] == 32, ((19, P1245), (27, P1245)), P7_12,
         {4: -14.46, 8: -11.76, 12: -11.76, 16: -14.46, 20: -14.46}),
        ("AppC-2", lambda D: D[3] == 32, ((15, P1245), (19, P1245)), P14_19,
         {4: -16.94, 16: -16.94, 20: -16.94, 24: -13.88, 28: -13.88}),
        ("AppC-3", lambda D: D[2] == 32, ((7, P1245), (11, P1245)), Z4_SLOTS,
         {4: -16.58, 16: -16.58, 20: -16.58}),
    ]
    extra_member = {
        "AppC-2": lambda D: ((D[4], Z3_SLOTS),),
        "AppC-3": lambda D: ((D[1], Z4_SLOTS),),
    }
    for cid, dpred, vals, d8_slots, table in single:
        extra = extra_member.get(cid, lambda D: ())
        for d8, lg in table.items():
            out.append(WeakClass(
                cid, f"D8={d8}",
                lambda D, p20, dpred=dpred, d8=d8: dpred(D) and D[7] == d8,
                members=lambda D, vals=vals, d8_slots=d8_slots, extra=extra: (
                    *vals, (D[7] - 3, d8_slots), *extra(D)),
                log2_proportion=lg))

    # two-parameter cases; `first`/`second` name the D indices in table order
    double = [
        ("AppC-4a", 7, 8, lambda D: D[5] == 28, ((23, P1245), (31, P1245)), P7_12,
         "4<->8:-16.01;4<->12:-16.01;4<->16:-19.01;4<->20:-19.01;8<->12:-13.36;"
         "8<->16:-16.01;8<->20:-16.01;12<->16:-16.01;12<->20:-16.01;16<->20:-19.01"),
        ("AppC-4b", 7, 8, lambda D: D[4] == 28, ((19, P1245), (27, P1245)), P7_12,
         "4<->8:-16.01;4<->12:-16.01;4<->16:-19.01;4<->20:-19.01;8<->12:-13.36;"
         "8<->16:-16.01;8<->20:-16.01;12<->16:-16.01;12<->20:-16.01;16<->20:-19.01"),
        ("AppC-5", 7, 8, lambda D: D[3] == 28, ((15, P1245), (19, P1245)), P14_19,
         "4<->16:-22.00;4<->20:-22.00;4<->24:-18.48;16<->20:-22.00;16<->24:-18.48;20<->24:-18.48"),
        ("AppC-6", 7, 8, lambda D: D[2] == 28, ((7, P1245), (11, P1245)), P21_26,
         "4<->16:-21.07;4<->20:-21.07;32,4:-19.34;16<->20:-21.07;32,16:-19.34;32,20:-19.34"),
        ("AppC-7", 8, 6, lambda D: D[4] == 24, ((19, P1_12), (27, P1_12)), P7_12,
         "4,8:-15.63;4,12:-15.63;4,16:-19.12;8<->12:-11.55;8<->16:-14.61;20,8:-14.61;"
         "12<->16:-15.63;20,12:-19.12;20,16:-15.63"),
        ("AppC-8", 8, 6, lambda D: D[3] == 24, ((15, P1_12), (19, P1_12)), P14_19,
         "4,16:-19.21;4,20:-19.21;4,28:-15.63;16<->20:-18.20;16<->28:-14.61;20<->28:-14.61"),
        ("AppC-9", 8, 6, lambda D: D[2] == 24, ((7, P1_12), (11, P1_12)), P21_26,
         "4,16:-19.59;4,20:-19.59;4,32:-16.59;16<->20:-18.58;16<->32:-15.58;20<->32:-15.58"),
    ]
    extra_member.update({
        "AppC-5": lambda D: ((D[4], Z3_SLOTS),),
        "AppC-6": lambda D: ((D[1], Z4_SLOTS),),
        "AppC-8": lambda D: ((D[4], Z3_SLOTS),),
        "AppC-9": lambda D: ((D[1], Z4_SLOTS),),
    })
    for cid, i1, i2, dpred, vals, slots, rows in double:
        extra = extra_member.get(cid, lambda D: ())
        for a, b, both, lg in _rows(rows):
            allowed = {(a, b), (b, a)} if both else {(a, b)}
            label = f"{a}<->{b}" if both else f"{a},{b}"
            out.append(WeakClass(
                cid, label,
                lambda D, p20, dpred=dpred, allowed=allowed, i1=i1, i2=i2: (
                    dpred(D) and (D[i1 - 1], D[i2 - 1]) in allowed),
                members=lambda D, vals=vals, slots=slots, i1=i1, i2=i2, extra=extra: (
                    *vals, (D[i1 - 1] - 3, slots), (D[i2 - 1] - 3, slots), *extra(D)),
                log2_proportion=lg))
    return out


WEAK_CLASSES: tuple[WeakClass, ...] = tuple(_thm_classes() + _appc_classes())
CLASS_BY_TAG = {c.tag: c for c in WEAK_CLASSES}


@dataclass(frozen=True)
class WeakClassTag:
    cid: str
    subcase: str
    params: tuple[tuple[str, int], ...]

    def __str__(self):
        tag = f"{self.cid}:{self.subcase}" if self.subcase else self.cid
        return tag + "".join(f" {k}={v}" for k, v in self.params)


def find_class(tag: str) -> WeakClass:
    if tag in CLASS_BY_TAG:
        return CLASS_BY_TAG[tag]
    raise KeyError(f"unknown weak class {tag!r}; known: {', '.join(CLASS_BY_TAG)}")


def matches_class(ltk: LongTermKey, name: str) -> bool:
    """`name` is a full tag ("AppC-7:8<->12") or a class id covering all subcases."""
    if name in CLASS_BY_TAG:
        return CLASS_BY_TAG[name].matches(ltk)
    family = [c for c in WEAK_CLASSES if c.cid == name]
    if not family:
        raise KeyError(f"unknown weak class {name!r}")
    return any(c.matches(ltk) for c in family)


def classify_weak(ltk: LongTermKey) -> list[WeakClassTag]:
    return [WeakClassTag(c.cid, c.subcase, tuple(c.bindings(ltk).items()))
            for c in WEAK_CLASSES if c.matches(ltk)]


class InfeasibleClass(ValueError):
    def __init__(self, tag, condition, detail=""):
        super().__init__(f"{tag} cannot be a KT1 key: conflicts with {condition}" + (f" ({detail})" if detail else ""))
        self.condition = condition


def _override_ok(D, p20, overrides) -> bool:
    for k, val in overrides.items():
        if k == "P20":
            if p20 != val:
                return False
        elif k.startswith("D") and D[int(k[1:]) - 1] != val:
            return False
    return True


def _diagnose(wc: WeakClass, overrides) -> tuple[str, str]:
    # Try the class without the chain: does any D with D(1)=0 satisfy it?
    for vals in itertools.permutations(MULTIPLES_OF_4, 8):
        D = (0, *vals)
        p20 = (set(MULTIPLES_OF_4) - set(vals)).pop()
        if wc.d_ok(D, p20) and _override_ok(D, p20, overrides):
            if d_chain(D) is None:
                return "D-chain", "D(j1)=4, D(j_{k+1})=4 j_k with P(20)=4 j8"
            return "D5-D6", "(D(5),D(6)) set condition"
    return "class preconditions", "no D table meets the stated preconditions"


def construct_weak(tag: str, rng: np.random.Generator, overrides: dict | None = None,
                   max_tries: int = 20_000) -> LongTermKey:
    """A random KT1 key in the named class.  `overrides` pins D<i>/P<j>/alpha values."""
    wc = find_class(tag)
    overrides = dict(overrides or {})
    alpha = overrides.pop("alpha", None)
    pfixed = {int(k[1:]): v for k, v in overrides.items() if k.startswith("P") and k != "P20"}
    dvs = [(D, p20) for D, p20 in all_kt1_d_vectors()
           if wc.d_ok(D, p20) and _override_ok(D, p20, overrides)]
    if not dvs:
        cond, detail = _diagnose(wc, overrides)
        raise InfeasibleClass(tag, cond, detail)
    for _ in range(max_tries):
        D, p20 = dvs[rng.integers(len(dvs))]
        fixed = {**wc.fixed(D), **pfixed}
        P = _complete_p(rng, D, p20, fixed, wc.members(D))
        if P is None:
            continue
        a = alpha if alpha is not None else NON_W_ALPHA[rng.integers(len(NON_W_ALPHA))]
        key = LongTermKey(D, P, a, name=tag)
        if is_kt1(key) and wc.matches(key):
            return key
    raise InfeasibleClass(tag, "P assignment", f"no completion found in {max_tries} tries")


@dataclass
class ProportionEstimate:
    tag: str
    samples: int
    hits: int
    low: float
    high: float
    published_log2: float | None

    @property
    def fraction(self) -> float:
        return self.hits / self.samples

    @property
    def log2(self) -> float:
        return math.log2(self.fraction) if self.hits else float("-inf")


def wilson_interval(hits: int, n: int, z: float = 1.96) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = hits / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, min(p, mid - half)), min(1.0, max(p, mid + half))


def estimate_class_proportions(tags, samples: int, rng: np.random.Generator,
                                base: str = "kt1") -> list[ProportionEstimate]:
    """Fraction of sampled keys in each class; `base` picks the population."""
    draw = SAMPLERS[base]
    classes = [find_class(t) for t in tags]
    hits = [0] * len(classes)
    for _ in range(samples):
        key = draw(rng)
        for i, c in enumerate(classes):
            if c.matches(key):
                hits[i] += 1
    out = []
    for c, h in zip(classes, hits):
        lo, hi = wilson_interval(h, samples)
        out.append(ProportionEstimate(c.tag, samples, h, lo, hi, c.log2_proportion))
    return out


def estimate_class_proportion(tag: str, samples: int, rng: np.random.Generator,
                              base: str = "kt1") -> ProportionEstimate:
    return estimate_class_proportions([tag], samples, rng, base)[0]
