"""Multi-round linear approximations: catalog, exact checks and bias estimates.

A property [A] -> [B] over n rounds states that

    parity(u_A before round 1) + parity(u_B after round n) + aux = 0

where aux is a sum of round inputs tagged ``s1@r``, ``s2@r`` or ``f@r``.  Round
r is the r-th application of the round map, so ``f@1`` is the first IV bit
consumed.  Worked example: for the 4-round class with P(27) = 7 the fresh bit
U1 of the first round reads s1 and U9 reads f, hence aux = {s1@1, f@1}.  A
state-bit superscript (i) in a hand-written trail corresponds to "after i - 1
applications", so the f written with superscript (5) in the six-round key-625
trail is consumed by round 6 and appears here as ``f@6``.

Bias is hold_fraction - 1/2; a deterministic trail has bias exactly +1/2,
written 2^-1.0.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import keyspace
from .boolfn import Z_T310, BooleanFunc6
from .cipher import (
    N_BITS, NAMED_KEYS, CipherState, LaneCipher, LongTermKey, ShortTermKey,
    iv_expand, lane_round, random_ivs, random_lanes, random_stk_bits, round,
)

SYMBOLS = ("s1", "s2", "f")
BATCH = 1 << 15


class PreconditionError(ValueError):
    """The long-term key is outside the property's weak-key class."""


@dataclass(frozen=True)
class LinearProperty:
    name: str
    rounds: int
    input_mask: tuple[int, ...]
    output_mask: tuple[int, ...]
    aux_terms: tuple[tuple[str, int], ...] = ()
    claimed_bias: float | None = None  # log2 of |bias|
    weak_class: str | None = None
    example_key: str | None = None
    note: str = field(default="", compare=False)

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("a property spans at least one round")
        for i in (*self.input_mask, *self.output_mask):
            if not 1 <= i <= N_BITS:
                raise ValueError(f"state bit {i} outside 1..36")
        for sym, r in self.aux_terms:
            if sym not in SYMBOLS:
                raise ValueError(f"unknown aux symbol {sym!r}")
            if not 1 <= r <= self.rounds:
                raise ValueError(f"aux round {r} outside 1..{self.rounds}")
        object.__setattr__(self, "input_mask", tuple(sorted(set(self.input_mask))))
        object.__setattr__(self, "output_mask", tuple(sorted(set(self.output_mask))))
        object.__setattr__(self, "aux_terms", tuple(sorted(set(self.aux_terms), key=lambda t: (t[1], t[0]))))

    def describe(self) -> str:
        aux = "".join(f",{s}@{r}" for s, r in self.aux_terms)
        ins = ",".join(map(str, self.input_mask))
        outs = ",".join(map(str, self.output_mask))
        return f"{self.rounds}R [{ins}{aux}] -> [{outs}]"


@dataclass(frozen=True)
class BiasEstimate:
    trials: int
    holds: int

    @property
    def hold_fraction(self) -> float:
        return self.holds / self.trials

    @property
    def bias(self) -> float:
        return self.hold_fraction - 0.5

    @property
    def abs_bias(self) -> float:
        return abs(self.bias)

    @property
    def stderr(self) -> float:
        p = self.hold_fraction
        return math.sqrt(p * (1 - p) / self.trials)

    @property
    def log2_abs(self) -> float:
        return math.log2(self.abs_bias) if self.abs_bias else float("-inf")

    @property
    def sigma(self) -> float:
        """|bias| in standard errors; the null spread is used when p is 0 or 1."""
        se = self.stderr or 0.5 / math.sqrt(self.trials)
        return self.abs_bias / se


# -- catalog -----------------------------------------------------------------

def _p(name, rounds, ins, outs, aux=(), claimed=None, cls=None, key=None, note=""):
    return LinearProperty(name, rounds, tuple(ins), tuple(outs), tuple(aux), claimed, cls, key, note)


_CATALOG = (
    _p("thm-4.1.1", 6, [25], [25], [("f", 6)], -4.8, "Thm-4.1.1", "625",
       "alpha to alpha; magnitude from piling up the three pieces below"),
    _p("t41-shift", 3, [25], [28], (), -1.0, None, "625", "pure shift lane"),
    _p("t41-mid", 1, [28], [19, 21, 29, 35], (), -3.4, "Thm-4.1.1", "625"),
    _p("t41-tail", 2, [19, 21, 29, 35], [25], [("f", 2)], -2.4, "Thm-4.1.1", "625"),
    _p("thm-4.2.1", 8, [9, 13], [9, 13], [("f", 4)], -1.0, "Thm-4.2.1", "788"),
    _p("thm-4.2.2", 6, [1, 5, 15, 33], [1, 5, 15, 33], [("s1", 6), ("f", 6)], -1.0, "Thm-4.2.2", "706"),
    _p("thm-4.2.3", 4, [4, 8, 19, 20, 23, 24, 36], [4, 8, 19, 20, 23, 24, 36],
       [("s1", 1), ("f", 1)], -1.0, "Thm-4.2.3"),
    _p("thm-4.2.4", 4, [4, 8, 18, 20, 22, 24, 36], [4, 8, 18, 20, 22, 24, 36],
       [("s1", 1), ("f", 1)], -1.0, "Thm-4.2.4"),
    _p("thm-4.2.5", 8, [1, 3, 5, 17, 21], [1, 3, 5, 17, 21],
       [("f", 2), ("f", 4), ("s1", 6), ("s1", 8)], -1.0, "Thm-4.2.5"),
)


def property_catalog() -> dict[str, LinearProperty]:
    return {p.name: p for p in _CATALOG}


def get_property(name: str) -> LinearProperty:
    cat = property_catalog()
    if name not in cat:
        raise KeyError(f"unknown property {name!r}; known: {', '.join(cat)}")
    return cat[name]


def key_for(prop: LinearProperty, rng: np.random.Generator | None = None) -> LongTermKey:
    """The property's reference key, or a freshly constructed class member."""
    if prop.example_key:
        return NAMED_KEYS[prop.example_key]
    if prop.weak_class:
        return keyspace.construct_weak(prop.weak_class, rng or np.random.default_rng(0))
    raise ValueError(f"{prop.name} has neither a reference key nor a class")


def check_precondition(prop: LinearProperty, ltk: LongTermKey) -> None:
    if prop.weak_class and not keyspace.matches_class(ltk, prop.weak_class):
        raise PreconditionError(f"key {ltk.name or '?'} is not in class {prop.weak_class}")


# -- evaluation --------------------------------------------------------------

def _parity_rows(state: np.ndarray, mask) -> np.ndarray:
    out = np.zeros(state.shape[1], dtype=np.uint8)
    for i in mask:
        out ^= state[i - 1]
    return out


def _aux_rows(prop: LinearProperty, s1, s2, f) -> np.ndarray:
    rows = {"s1": s1, "s2": s2, "f": f}
    out = np.zeros(s1.shape[1], dtype=np.uint8)
    for sym, r in prop.aux_terms:
        out ^= rows[sym][r - 1]
    return out


def eval_property_once(prop: LinearProperty, ltk: LongTermKey, stk: ShortTermKey, iv: int,
                       start_state: CipherState, z: BooleanFunc6 = Z_T310,
                       check: bool = True) -> int:
    """Parity of the relation on one concrete run; 0 means it held."""
    if check:
        check_precondition(prop, ltk)
    fs = iv_expand(iv, prop.rounds)
    rec = {"s1": [], "s2": [], "f": []}
    state = start_state
    acc = 0
    for i in prop.input_mask:
        acc ^= state.bit(i)
    for m in range(1, prop.rounds + 1):
        s1, s2, f = stk.s1(m), stk.s2(m), fs[m - 1]
        rec["s1"].append(s1)
        rec["s2"].append(s2)
        rec["f"].append(f)
        state = round(state, s1, s2, f, ltk, z)
    for i in prop.output_mask:
        acc ^= state.bit(i)
    for sym, r in prop.aux_terms:
        acc ^= rec[sym][r - 1]
    return acc


def _batch(prop, ltk, z, n, seed):
    """Relation parity for n random lanes, plus the inputs that produced them."""
    g = np.random.default_rng(seed)
    state = random_lanes(g, n)
    stk = random_stk_bits(g, n)
    ivs = random_ivs(g, n)
    lc = LaneCipher(ltk, stk, ivs, state=state, z=z)
    s1, s2, f = lc.run_recording(prop.rounds)
    par = _parity_rows(state, prop.input_mask) ^ _parity_rows(lc.state, prop.output_mask)
    par ^= _aux_rows(prop, s1, s2, f)
    return par, state, stk, ivs


def _batch_sizes(trials: int) -> list[int]:
    full, rest = divmod(trials, BATCH)
    return [BATCH] * full + ([rest] if rest else [])


def _seeds(rng: np.random.Generator, count: int):
    root = np.random.SeedSequence(int(rng.integers(1 << 63)))
    return root.spawn(count)


def measure_bias(prop: LinearProperty, ltk: LongTermKey, trials: int, rng: np.random.Generator,
                 z: BooleanFunc6 = Z_T310, threads: int = 1, check: bool = True) -> BiasEstimate:
    """Monte Carlo estimate over random states, short-term keys and IVs.

    Trials are cut into fixed batches with spawned seeds, so the result does
    not depend on `threads`.
    """
    if check:
        check_precondition(prop, ltk)
    sizes = _batch_sizes(trials)
    seeds = _seeds(rng, len(sizes))

    def work(args):
        n, seed = args
        return n - int(_batch(prop, ltk, z, n, seed)[0].sum())

    with ThreadPoolExecutor(max(1, threads)) as pool:
        holds = sum(pool.map(work, zip(sizes, seeds)))
    return BiasEstimate(trials, holds)


@dataclass(frozen=True)
class Counterexample:
    state: CipherState
    stk: ShortTermKey
    iv: int


def check_deterministic(prop: LinearProperty, ltk: LongTermKey, trials: int,
                        rng: np.random.Generator, z: BooleanFunc6 = Z_T310
                        ) -> tuple[bool, Counterexample | None]:
    """(True, None) if every trial holds, else the first failing inputs."""
    sizes = _batch_sizes(trials)
    for n, seed in zip(sizes, _seeds(rng, len(sizes))):
        par, state, stk, ivs = _batch(prop, ltk, z, n, seed)
        bad = np.flatnonzero(par)
        if bad.size:
            k = int(bad[0])
            value = int("".join(map(str, stk[:, k])), 2)
            return False, Counterexample(CipherState.from_bits(state[:, k]),
                                         ShortTermKey(value), int(ivs[k]))
    return True, None


def infer_aux_terms(input_mask: Sequence[int], output_mask: Sequence[int], rounds: int,
                    ltk: LongTermKey, trials: int, rng: np.random.Generator,
                    z: BooleanFunc6 = Z_T310) -> dict[tuple[str, int], float]:
    """How often toggling one round input flips the relation's parity.

    A rate of 1.0 marks a linear aux term; 0.0 means the input is not involved.
    """
    state = random_lanes(rng, trials)
    base = {s: rng.integers(0, 2, size=(rounds, trials), dtype=np.uint8) for s in SYMBOLS}

    def parity(rows):
        st = state
        for r in range(rounds):
            st = lane_round(st, rows["s1"][r], rows["s2"][r], rows["f"][r], ltk, z)
        return _parity_rows(state, input_mask) ^ _parity_rows(st, output_mask)

    p0 = parity(base)
    rates = {}
    for sym in SYMBOLS:
        for r in range(rounds):
            rows = {k: v.copy() for k, v in base.items()}
            rows[sym][r] ^= 1
            rates[(sym, r + 1)] = float(np.mean(parity(rows) ^ p0))
    return rates


def rotate_onebit_property(prop: LinearProperty) -> list[LinearProperty]:
    """[4k+1] -> [4k+1] gives [4k+i] -> [4k+i] for i = 1..4.

    The bit enters the nonlinear part i - 1 rounds earlier, so every aux
    round moves back by i - 1.
    """
    if len(prop.input_mask) != 1 or prop.input_mask != prop.output_mask or prop.input_mask[0] % 4 != 1:
        raise ValueError("need a one-bit property of the form [4k+1] -> [4k+1]")
    base = prop.input_mask[0]
    out = [prop]
    for i in range(2, 5):
        aux = tuple((s, r - (i - 1)) for s, r in prop.aux_terms)
        if any(r < 1 for _, r in aux):
            raise ValueError(f"aux term would move before round 1 for [{base + i - 1}]")
        out.append(replace(prop, name=f"{prop.name}+{i - 1}", input_mask=(base + i - 1,),
                           output_mask=(base + i - 1,), aux_terms=aux))
    return out


# -- property files ----------------------------------------------------------

_AUX = re.compile(r"^(s1|s2|f)@(\d+)$")


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in re.split(r"[,\s]+", text.strip()) if t)


def property_to_text(prop: LinearProperty) -> str:
    lines = [f"name: {prop.name}", f"rounds: {prop.rounds}",
             "input: " + ", ".join(map(str, prop.input_mask)),
             "output: " + ", ".join(map(str, prop.output_mask))]
    if prop.aux_terms:
        lines.append("aux: " + ", ".join(f"{s}@{r}" for s, r in prop.aux_terms))
    if prop.claimed_bias is not None:
        lines.append(f"claimed: {prop.claimed_bias}")
    if prop.weak_class:
        lines.append(f"class: {prop.weak_class}")
    if prop.example_key:
        lines.append(f"key: {prop.example_key}")
    return "\n".join(lines) + "\n"


def properties_from_text(text: str) -> list[LinearProperty]:
    """Blocks of `field: value` lines separated by blank lines; `#` starts a comment."""
    out, block = [], {}

    def flush():
        if not block:
            return
        missing = {"name", "rounds", "input", "output"} - set(block)
        if missing:
            raise ValueError(f"property block lacks {', '.join(sorted(missing))}")
        aux = []
        for tok in re.split(r"[,\s]+", block.get("aux", "").strip()):
            if not tok:
                continue
            m = _AUX.match(tok)
            if not m:
                raise ValueError(f"bad aux term {tok!r}; expected e.g. s1@1 or f@3")
            aux.append((m[1], int(m[2])))
        claimed = block.get("claimed")
        out.append(LinearProperty(
            block["name"], int(block["rounds"]), _ints(block["input"]), _ints(block["output"]),
            tuple(aux), float(claimed) if claimed else None,
            block.get("class") or None, block.get("key") or None))
        block.clear()

    known = {"name", "rounds", "input", "output", "aux", "claimed", "class", "key"}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            flush()
            continue
        if ":" not in line:
            raise ValueError(f"expected 'field: value', got {raw!r}")
        k, v = (s.strip() for s in line.split(":", 1))
        if k not in known:
            raise ValueError(f"unknown field {k!r}")
        if k in block:
            raise ValueError(f"duplicate field {k!r}")
        block[k] = v
    flush()
    return out


def load_properties(path) -> list[LinearProperty]:
    return properties_from_text(Path(path).read_text())


def save_properties(props: Sequence[LinearProperty], path) -> None:
    Path(path).write_text("\n".join(property_to_text(p) for p in props))
