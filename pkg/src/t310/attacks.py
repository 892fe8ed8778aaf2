"""Slide attacks under a decryption-oracle leakage model.

Everything here is a simulation harness.  Keystream leakage is modelled as
independent reveals of each a_i with a fixed probability.  A slid pair is
planted by forcing the second instance's state to the initial constant at
round 120*s, which an attacker would otherwise wait about 2^36 tries for.

Two instances related by 120*s = 127*t + d share key bits at every round,
and instance 2 at round 127*(i + t) sits -d rounds after instance 1 at round
127*i.  With d = 0 (s = 127, t = 120) a'_{i+120} = a_i exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cipher import (
    EXTRACT_EVERY, INITIAL_STATE, KEY_PERIOD, CipherState, KeystreamGenerator, LaneCipher,
    LongTermKey, ShortTermKey, iv_expand, iv_step_back, random_ivs, random_stk_bits,
)
from .gf2 import Gf2Matrix, gf2_rank
from .lincrypt import (
    LinearProperty, check_precondition, infer_aux_terms, measure_bias,
)

GROUP = 13
SLIDE_S, SLIDE_T = 127, 120
MIN_OVERLAP = 20


@dataclass
class OracleTrace:
    """a_1..a_n with hidden positions stored as -1."""

    bits: np.ndarray
    coverage: float

    def __len__(self) -> int:
        return len(self.bits)

    def get(self, i: int) -> int | None:
        b = int(self.bits[i - 1])
        return None if b < 0 else b

    @property
    def revealed(self) -> int:
        return int((self.bits >= 0).sum())


def _reveal(bits: np.ndarray, coverage: float, rng: np.random.Generator) -> np.ndarray:
    if not 0 < coverage <= 1:
        raise ValueError("coverage must lie in (0, 1]")
    out = np.asarray(bits, dtype=np.int8).copy()
    out[rng.random(out.shape) >= coverage] = -1
    return out


def oracle_trace(ltk: LongTermKey, stk: ShortTermKey, iv: int, chars: int, coverage: float,
                 rng: np.random.Generator, state: CipherState = INITIAL_STATE) -> OracleTrace:
    if not 0 < coverage <= 1:
        raise ValueError("coverage must lie in (0, 1]")
    ks = KeystreamGenerator(ltk, stk, iv, state).bits(GROUP * chars)
    return OracleTrace(_reveal(np.array(ks), coverage, rng), coverage)


def backclock_iv(iv: int, steps: int) -> int:
    return iv_step_back(iv, steps)


@dataclass
class SlidePairCandidate:
    base_iv: int
    shifted_iv: int
    s: int
    t: int
    d: int
    overlap: int = 0
    agree: int = 0
    verdict: bool | None = None  # None: too few doubly revealed positions

    def __post_init__(self):
        if self.d != 120 * self.s - 127 * self.t:
            raise ValueError("need 120*s = 127*t + d")


def detect_slid_pair(base: OracleTrace, shifted: OracleTrace, offset: int = SLIDE_T,
                     min_overlap: int = MIN_OVERLAP) -> tuple[bool | None, int, int]:
    """(verdict, doubly revealed, agreeing) comparing a_i with a'_{i+offset}."""
    n = min(len(base), len(shifted) - offset)
    if n <= 0:
        raise ValueError("shifted trace is too short for the offset")
    a = base.bits[:n]
    b = shifted.bits[offset:offset + n]
    both = (a >= 0) & (b >= 0)
    overlap = int(both.sum())
    agree = int((a[both] == b[both]).sum())
    if overlap < min_overlap:
        return None, overlap, agree
    return agree == overlap, overlap, agree


# -- batched instances ---------------------------------------------------------

def _extract(lc: LaneCipher, count: int) -> np.ndarray:
    return lc.keystream(count).T.copy()  # (N, count)


def _initial_lanes(n: int) -> np.ndarray:
    return np.repeat(np.array(INITIAL_STATE.bits(), dtype=np.uint8)[:, None], n, axis=1)


def slid_keystreams(ltk, stk_bits, ivs, base_chars: int, shifted_chars: int, planted: bool,
                    s: int = SLIDE_S):
    """Base and shifted keystreams for many lanes.

    The shifted instance starts from IV' = IV clocked back 120*s steps.  When
    `planted`, its state is reset to the initial constant at round 120*s.
    """
    ivs = np.asarray(ivs, dtype=np.uint64)
    n = len(ivs)
    base = _extract(LaneCipher(ltk, stk_bits, ivs), GROUP * base_chars)
    shifted_ivs = np.array([backclock_iv(int(v), KEY_PERIOD * s) for v in ivs], dtype=np.uint64)
    lc = LaneCipher(ltk, stk_bits, shifted_ivs)
    total = GROUP * shifted_chars
    out = np.empty((n, total), dtype=np.uint8)
    plant_at = KEY_PERIOD * s
    for j in range(total):
        target = EXTRACT_EVERY * (j + 1)
        if planted and lc.rounds < plant_at <= target:
            lc.step(plant_at - lc.rounds)
            if not (lc.iv == ivs).all():
                raise AssertionError("IV registers failed to realign")
            lc.state = _initial_lanes(n)
        lc.step(target - lc.rounds)
        out[:, j] = lc.alpha_bits()
    return base, out, shifted_ivs


@dataclass
class SlideReport:
    planted: int
    detected: int
    missed: int
    inconclusive_planted: int
    random: int
    false_matches: int
    inconclusive_random: int
    mean_overlap: float
    candidates: list = field(default_factory=list, repr=False)

    @property
    def sensitivity(self) -> float:
        return self.detected / self.planted if self.planted else float("nan")

    def lines(self) -> list[str]:
        return [
            f"planted pairs: {self.planted}",
            f"detected: {self.detected} ({self.sensitivity:.2%})",
            f"missed: {self.missed}",
            f"inconclusive (planted): {self.inconclusive_planted}",
            f"random pairs: {self.random}",
            f"false matches: {self.false_matches}",
            f"inconclusive (random): {self.inconclusive_random}",
            f"mean doubly revealed: {self.mean_overlap:.1f}",
        ]


def _lane_batches(n: int, size: int = 4096):
    for lo in range(0, n, size):
        yield lo, min(n, lo + size)


def slide_scenario(ltk: LongTermKey, planted: int, random_pairs: int, coverage: float,
                   rng: np.random.Generator, base_chars: int = 5, shifted_chars: int = 15,
                   s: int = SLIDE_S, t: int = SLIDE_T) -> SlideReport:
    """Planted slid pairs against unrelated IV pairs, same detection rule.

    Only a'_{121..185} is compared, so 15 shifted characters suffice.
    """
    if 120 * s - 127 * t != 0:
        raise ValueError("slid-pair detection needs d = 0")
    if GROUP * shifted_chars < GROUP * base_chars + t:
        raise ValueError("shifted trace too short to cover the offset")
    det = miss = inc_p = fm = inc_r = 0
    overlaps = []
    cands = []
    for kind, count in (("planted", planted), ("random", random_pairs)):
        for lo, hi in _lane_batches(count):
            n = hi - lo
            stk = random_stk_bits(rng, n)
            ivs = random_ivs(rng, n)
            if kind == "planted":
                base, shifted, sivs = slid_keystreams(ltk, stk, ivs, base_chars, shifted_chars, True, s)
            else:
                # unrelated IV for the second message, same keys
                other = random_ivs(rng, n)
                base = _extract(LaneCipher(ltk, stk, ivs), GROUP * base_chars)
                shifted = _extract(LaneCipher(ltk, stk, other), GROUP * shifted_chars)
                sivs = other
            for k in range(n):
                tb = OracleTrace(_reveal(base[k], coverage, rng), coverage)
                ts = OracleTrace(_reveal(shifted[k], coverage, rng), coverage)
                verdict, ov, ag = detect_slid_pair(tb, ts, t)
                overlaps.append(ov)
                if kind == "planted":
                    cands.append(SlidePairCandidate(int(ivs[k]), int(sivs[k]), s, t, 0, ov, ag, verdict))
                    det += verdict is True
                    miss += verdict is False
                    inc_p += verdict is None
                else:
                    fm += verdict is True
                    inc_r += verdict is None
    return SlideReport(planted, det, miss, inc_p, random_pairs, fm, inc_r,
                       float(np.mean(overlaps)) if overlaps else 0.0, cands)


# -- parity-equation key recovery -------------------------------------------

@dataclass
class KeyRecovery:
    equations: list  # (tuple of 1-based s1 round numbers, recovered value)
    truth: list
    rank: int
    solved: dict  # round -> bit for individually determined s1 bits

    @property
    def correct(self) -> int:
        return sum(v == t for (_, v), t in zip(self.equations, self.truth))

    def lines(self) -> list[str]:
        out = []
        for (rounds, v), t in zip(self.equations, self.truth):
            lhs = " + ".join(f"s1({r})" for r in rounds)
            out.append(f"{lhs} = {v}  [{'ok' if v == t else 'WRONG'}]")
        out.append(f"correct: {self.correct}/{len(self.equations)}")
        out.append(f"rank: {self.rank}; single bits determined: {len(self.solved)}")
        return out


def recover_key_bits(prop: LinearProperty, ltk: LongTermKey, stk: ShortTermKey, iv: int,
                     placements: int = 8) -> KeyRecovery:
    """One parity equation per placement of `prop` after the aligned round.

    The aligned round holds the known initial constant.  The states at the
    end of each placement come from the simulator; the attack description
    does not say how an attacker would observe them.
    """
    if not any(sym == "s1" for sym, _ in prop.aux_terms):
        raise ValueError(f"{prop.name} has no s1 terms to solve for")
    if any(sym == "s2" for sym, _ in prop.aux_terms):
        raise ValueError("s2 terms are not handled")
    check_precondition(prop, ltk)
    n = prop.rounds
    gen = KeystreamGenerator(ltk, stk, iv)
    fs = iv_expand(iv, n * placements)
    equations, truth = [], []
    for k in range(placements):
        m0 = k * n
        gen.step(m0 - gen.rounds)
        acc = 0
        for i in prop.input_mask:
            acc ^= gen.u[i]
        gen.step(n)
        for i in prop.output_mask:
            acc ^= gen.u[i]
        rounds = []
        for sym, r in prop.aux_terms:
            if sym == "f":
                acc ^= fs[m0 + r - 1]
            else:
                rounds.append(m0 + r)
        equations.append((tuple(rounds), acc))
        tv = 0
        for r in rounds:
            tv ^= stk.s1(r)
        truth.append(tv)
    rank, solved = _solve(equations)
    return KeyRecovery(equations, truth, rank, solved)


def _solve(equations) -> tuple[int, dict]:
    unknowns = sorted({(r - 1) % KEY_PERIOD + 1 for rounds, _ in equations for r in rounds})
    col = {u: j for j, u in enumerate(unknowns)}
    rows = np.zeros((len(equations), len(unknowns) + 1), dtype=np.uint8)
    for i, (rounds, v) in enumerate(equations):
        for r in rounds:
            rows[i, col[(r - 1) % KEY_PERIOD + 1]] ^= 1
        rows[i, -1] = v
    rank = gf2_rank(Gf2Matrix(rows[:, :-1]))
    solved = {}
    # a bit is determined when its unit vector lies in the row space
    for u, j in col.items():
        e = np.zeros(len(unknowns), dtype=np.uint8)
        e[j] = 1
        if gf2_rank(Gf2Matrix(np.vstack([rows[:, :-1], e]))) == rank:
            solved[u] = _express(rows, j)
    return rank, solved


def _express(rows: np.ndarray, j: int) -> int:
    """Value of unknown j given that it is determined by the system."""
    a = rows.copy()
    r = 0
    ncols = a.shape[1] - 1
    piv = {}
    for c in range(ncols):
        hit = [i for i in range(r, len(a)) if a[i, c]]
        if not hit:
            continue
        a[[r, hit[0]]] = a[[hit[0], r]]
        for i in range(len(a)):
            if i != r and a[i, c]:
                a[i] ^= a[r]
        piv[c] = r
        r += 1
    row = a[piv[j]]
    return int(row[-1])


# -- one-bit distinguisher ----------------------------------------------------

@dataclass
class DistinguisherReport:
    s: int
    t: int
    d: int
    alpha: int
    prop: LinearProperty
    bias: float
    pairs: int
    slid_hold: int
    slid_n: int
    random_hold: int
    random_n: int
    llr_slid: float
    llr_random: float

    @property
    def advantage_sigma(self) -> float:
        p1 = self.slid_hold / self.slid_n
        p0 = self.random_hold / self.random_n
        p = (self.slid_hold + self.random_hold) / (self.slid_n + self.random_n)
        se = math.sqrt(p * (1 - p) * (1 / self.slid_n + 1 / self.random_n))
        sign = 1 if self.bias >= 0 else -1
        return sign * (p1 - p0) / se

    def lines(self) -> list[str]:
        return [
            f"s={self.s} t={self.t} d={self.d} alpha={self.alpha}",
            f"relation: {self.prop.describe()} bias {self.bias:+.5f}",
            f"pairs: {self.pairs}",
            f"slid hold: {self.slid_hold}/{self.slid_n} = {self.slid_hold / self.slid_n:.5f}",
            f"random hold: {self.random_hold}/{self.random_n} = {self.random_hold / self.random_n:.5f}",
            f"mean LLR per pair: slid {self.llr_slid:+.5f} random {self.llr_random:+.5f}",
            f"advantage: {self.advantage_sigma:.1f} sigma",
        ]


def alpha_property(ltk: LongTermKey, rounds: int, rng: np.random.Generator,
                   trials: int = 1 << 16) -> tuple[LinearProperty, float]:
    """[alpha] -> [alpha] over `rounds` with its linear IV terms, and its bias.

    Raises ValueError when the relation shows no usable correlation or needs
    key bits.
    """
    a = ltk.alpha
    rates = infer_aux_terms((a,), (a,), rounds, ltk, 4096, rng)
    aux = tuple(t for t, v in rates.items() if v == 1.0)
    if any(sym != "f" for sym, _ in aux):
        raise ValueError("the alpha relation involves key bits")
    prop = LinearProperty(f"alpha-{a}-{rounds}R", rounds, (a,), (a,), aux)
    est = measure_bias(prop, ltk, trials, rng)
    if est.sigma < 5:
        raise ValueError(f"no alpha->alpha correlation over {rounds} rounds for alpha={a}")
    return prop, est.bias


def onebit_attack_demo(ltk: LongTermKey, s: int, t: int, d: int, pairs: int, rng: np.random.Generator,
                       coverage: float = 0.73, chars: int = 1, prop: LinearProperty | None = None,
                       bias: float | None = None) -> DistinguisherReport:
    """Score slid against unrelated IV pairs with the alpha -> alpha relation.

    Under the slid hypothesis a_i and a'_{i+t} are -d rounds apart on one
    trajectory.  Each pair contributes a log-likelihood ratio summed over its
    doubly revealed positions.
    """
    if 120 * s - 127 * t != d:
        raise ValueError("need 120*s = 127*t + d")
    if d >= 0:
        raise ValueError("the relation runs forward, so d must be negative")
    k = -d
    if prop is None:
        prop, bias = alpha_property(ltk, k, rng)
    elif prop.rounds != k or prop.input_mask != (ltk.alpha,) or prop.output_mask != (ltk.alpha,):
        raise ValueError(f"{prop.name} is not an alpha->alpha relation over {k} rounds")
    if any(sym != "f" for sym, _ in prop.aux_terms):
        raise ValueError("relation needs key bits the attacker does not know")
    if bias is None:
        bias = measure_bias(prop, ltk, 1 << 16, rng, check=False).bias
    n_pos = GROUP * chars
    lw1, lw0 = math.log1p(2 * bias), math.log1p(-2 * bias)
    tot = {"slid": [0, 0, 0.0], "random": [0, 0, 0.0]}
    a = ltk.alpha - 1
    for lo, hi in _lane_batches(pairs, 8192):
        n = hi - lo
        stk = random_stk_bits(rng, n)
        ivs = random_ivs(rng, n)
        # instance 1, plus its state -d rounds after each extraction
        lc = LaneCipher(ltk, stk, ivs)
        base = np.empty((n_pos, n), dtype=np.uint8)
        late = np.empty_like(base)
        faux = np.zeros_like(base)
        for i in range(n_pos):
            lc.step(EXTRACT_EVERY * (i + 1) - lc.rounds)
            base[i] = lc.alpha_bits()
            _, _, f = lc.run_recording(k)
            for sym, r in prop.aux_terms:
                faux[i] ^= f[r - 1]
            late[i] = lc.state[a]
        # honest instance 2 from the back-clocked IV
        sivs = np.array([backclock_iv(int(v), KEY_PERIOD * s) for v in ivs], dtype=np.uint64)
        other = LaneCipher(ltk, stk, sivs).keystream(n_pos + t)[t:]
        for kind, partner in (("slid", late), ("random", other)):
            rb = _reveal(base, coverage, rng)
            rp = _reveal(partner, coverage, rng)
            both = (rb >= 0) & (rp >= 0)
            holds = ((rb ^ rp ^ faux.astype(np.int8)) == 0) & both
            h = int(holds.sum())
            m = int(both.sum())
            tot[kind][0] += h
            tot[kind][1] += m
            tot[kind][2] += h * lw1 + (m - h) * lw0
    return DistinguisherReport(s, t, d, ltk.alpha, prop, bias, pairs,
                               tot["slid"][0], tot["slid"][1], tot["random"][0], tot["random"][1],
                               tot["slid"][2] / pairs, tot["random"][2] / pairs)
