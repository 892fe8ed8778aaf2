"""Nonlinear invariants of the round map restricted to a closed bit window.

Window bits are renamed by letters running downward: u36 = a, u35 = b, ...,
so the 12-bit window u25..u36 is l..a and the 20-bit window u17..u36 is t..a.
The IV bit is the symbol F and s2 the symbol L.

Two routes are kept apart on purpose.  `invariant_space` gets the round map
from `lane_round` evaluated on every window state and works with dense
truth tables.  `apply_map` and `verify_invariant` expand polynomials
symbolically through `round_chain`.  Every kernel vector is re-checked on
the symbolic side.

A `WindowMap` holds the one-round map in two directions.  `forward[x]` is the
new value of letter x in old letters.  `back[x]` is the old value of x in new
letters, the direction used in hand derivations such as ``a = F + d`` for
D(9) = 36; it only exists for letters the round does not erase.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .anf import (
    AnfPoly, fix_variables, format_poly, moebius, parse_poly, poly_mul, rename_universe, substitute,
)
from .boolfn import Z_RANDOM, Z_T310, Z_TOY, BooleanFunc6
from .cipher import N_BITS, LongTermKey, lane_round, round_chain
from .gf2 import Gf2Matrix, gf2_kernel, gf2_rank

LETTERS = "abcdefghijklmnopqrst"
WINDOW_12 = 25
WINDOW_20 = 17
MAX_DENSE = 13


def letter(pos: int) -> str:
    return LETTERS[N_BITS - pos]


def position(name: str) -> int:
    return N_BITS - LETTERS.index(name)


class ClosureError(ValueError):
    def __init__(self, index: str, value: int, low: int):
        super().__init__(f"{index} = {value} escapes the window u{low}..u36")
        self.index, self.value = index, value


class NotInvertible(ValueError):
    """Some old letter cannot be written in new letters."""


@dataclass(frozen=True)
class WindowMap:
    low: int
    ltk: LongTermKey
    z: BooleanFunc6
    forward: dict = field(repr=False)
    back: dict = field(repr=False)
    consumed: tuple[str, ...] = ()

    @property
    def letters(self) -> tuple[str, ...]:
        return tuple(LETTERS[: N_BITS - self.low + 1])

    @property
    def universe(self) -> tuple[str, ...]:
        return (*self.letters, "F", "L")

    @property
    def arity(self) -> int:
        return len(self.letters)

    @property
    def invertible(self) -> bool:
        return set(self.back) >= set(self.letters)

    def rows(self) -> list[tuple[str, str]]:
        """(letter, forward image) pairs."""
        return [(x, format_poly(self.forward[x])) for x in self.letters]


def _z_poly(z: BooleanFunc6, universe, args: Sequence[AnfPoly]) -> AnfPoly:
    """z(args) expanded monomial by monomial from the ANF of z."""
    out = AnfPoly.zero(universe)
    cache = {0: AnfPoly.one(universe)}

    def prod(mask):
        if mask not in cache:
            low = mask & -mask
            cache[mask] = poly_mul(prod(mask ^ low), args[low.bit_length() - 1])
        return cache[mask]

    for m in z.anf().terms:
        out = out + prod(m)
    return out


def build_window_map(ltk: LongTermKey, low: int = WINDOW_12, z: BooleanFunc6 = Z_T310) -> WindowMap:
    """Symbolic one-round map on u_low..u36; raises ClosureError on escape."""
    if (low - 1) % 4 or not 1 <= low <= N_BITS:
        raise ValueError("a window starts at a fresh-bit position 4k+1")
    universe = (*LETTERS[: N_BITS - low + 1], "F", "L")
    var = {p: AnfPoly.var(universe, letter(p)) for p in range(low, N_BITS + 1)}
    consumed: list[str] = []

    def v(j):
        pos = ltk.p(j)
        if pos < low:
            raise ClosureError(f"P({j})", pos, low)
        consumed.append(f"P({j})")
        return var[pos]

    def ud(i):
        pos = ltk.d(i)
        if pos < low:
            raise ClosureError(f"D({i})", pos, low)
        consumed.append(f"D({i})")
        return var[pos]

    lowest = (low - 1) // 4 + 1
    zero = AnfPoly.zero(universe)
    U = round_chain(v, ud, zero, AnfPoly.var(universe, "L"), AnfPoly.var(universe, "F"),
                    lambda *a: _z_poly(z, universe, a), lowest)
    branch = {i: U[i] + var[ltk.d(i)] for i in U}  # b_i in old letters

    forward = {}
    for pos in range(low, N_BITS + 1):
        forward[letter(pos)] = U[(pos - 1) // 4 + 1] if pos % 4 == 1 else var[pos - 1]

    # Old letters in new letters.  Shift lanes move up by one; an erased
    # multiple-of-4 letter comes back only as some D(i) of an in-window U_i.
    new = {p: AnfPoly.var(universe, letter(p)) for p in range(low, N_BITS + 1)}
    solved: dict[str, AnfPoly] = {}
    source = {ltk.d(i): i for i in sorted(U, reverse=True)}

    def resolve(pos, stack=()):
        name = letter(pos)
        if name in solved:
            return solved[name]
        if pos % 4:
            solved[name] = new[pos + 1]
            return solved[name]
        i = source.get(pos)
        if i is None or pos in stack:
            raise NotInvertible(name)
        b = branch[i]
        binds = {letter(q): resolve(q, stack + (pos,)) for q in range(low, N_BITS + 1)
                 if letter(q) in _letters_of(b)}
        solved[name] = new[4 * (i - 1) + 1] + substitute(b, binds)
        return solved[name]

    for pos in range(low, N_BITS + 1):
        try:
            resolve(pos)
        except NotInvertible:
            pass
    return WindowMap(low, ltk, z, forward, solved, tuple(dict.fromkeys(consumed)))


def _letters_of(p: AnfPoly) -> set[str]:
    return p.support_vars() - {"F", "L"}


def _lift(wmap: WindowMap, p: AnfPoly) -> AnfPoly:
    return p if p.universe == wmap.universe else rename_universe(p, wmap.universe)


def _fix(p: AnfPoly, F, L) -> AnfPoly:
    vals = {}
    if F is not None:
        vals["F"] = F
    if L is not None:
        vals["L"] = L
    return fix_variables(p, vals) if vals else p


def apply_map(wmap: WindowMap, p: AnfPoly, F: int | None = None, L: int | None = None,
              direction: str = "back") -> AnfPoly:
    """Rewrite p one round on: substitute each letter, expand, then fix F and L.

    "back" replaces old letters by their values in new letters (so d goes to
    c); "forward" composes p with the round map.  Both fix the same
    invariants when the window map is a bijection.
    """
    p = _lift(wmap, p)
    images = wmap.back if direction == "back" else wmap.forward
    missing = _letters_of(p) - set(images)
    if missing:
        raise NotInvertible(f"no {direction} image for {', '.join(sorted(missing))}")
    return _fix(substitute(p, {x: images[x] for x in _letters_of(p)}), F, L)


def parse_window_poly(text: str, wmap_or_letters) -> AnfPoly:
    universe = wmap_or_letters.universe if isinstance(wmap_or_letters, WindowMap) else tuple(wmap_or_letters)
    return parse_poly(text, universe)


# -- dense kernel -------------------------------------------------------------

def concrete_map(wmap: WindowMap, F: int, L: int) -> np.ndarray:
    """y[x] for every window state x; bit k of an index is letter k (a = bit 0)."""
    n = wmap.arity
    xs = np.arange(1 << n, dtype=np.int64)
    state = np.zeros((N_BITS, xs.size), dtype=np.uint8)
    for k in range(n):
        state[position(LETTERS[k]) - 1] = xs >> k & 1
    zero = np.zeros(xs.size, dtype=np.uint8)
    out = lane_round(state, zero, zero | (L & 1), zero | (F & 1), wmap.ltk, wmap.z)
    y = np.zeros(xs.size, dtype=np.int64)
    for k in range(n):
        y |= out[position(LETTERS[k]) - 1].astype(np.int64) << k
    return y


def transition_matrix(wmap: WindowMap, F: int, L: int) -> np.ndarray:
    """Column m holds the ANF coefficients of monomial m composed with the round."""
    n = wmap.arity
    size = 1 << n
    y = concrete_map(wmap, F, L)
    ybits = [(y >> k & 1).astype(np.uint8) for k in range(n)]
    tt = np.empty((size, size), dtype=np.uint8)  # tt[m, x] = m(y(x))
    tt[0] = 1
    for m in range(1, size):
        low = m & -m
        tt[m] = tt[m ^ low] & ybits[low.bit_length() - 1]
    return moebius(tt).T.copy()


@dataclass(frozen=True)
class InvariantBasis:
    F: int
    L: int | str
    basis: tuple[AnfPoly, ...]
    letters: tuple[str, ...]

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def nonconstant_dimension(self) -> int:
        return self.dimension - 1


def _kernel_polys(a: np.ndarray, letters) -> list[AnfPoly]:
    return [AnfPoly.from_dense(v, letters) for v in gf2_kernel(Gf2Matrix(a))]


def invariant_space(wmap: WindowMap, F: int, L: int | str = 0, verify: bool = True) -> InvariantBasis:
    """All p over the window letters with p(round(x)) = p(x).

    L = "both" stacks the two conditions.  The constant 1 is always in the
    space and is counted in `dimension`.
    """
    if wmap.arity > MAX_DENSE:
        raise ValueError(f"{wmap.arity} letters is too many for the dense kernel; use verify_invariant")
    ls = (0, 1) if L == "both" else (L,)
    ident = np.eye(1 << wmap.arity, dtype=np.uint8)
    blocks = [transition_matrix(wmap, F, l) ^ ident for l in ls]
    basis = _kernel_polys(np.vstack(blocks), wmap.letters)
    if verify:
        for p in basis:
            ok, diff = verify_invariant(wmap, p, F, L)
            if not ok:
                raise AssertionError(f"dense and symbolic routes disagree on {p}: {diff}")
    return InvariantBasis(F, L, tuple(basis), wmap.letters)


def verify_invariant(wmap: WindowMap, p: AnfPoly, F: int, L: int | str = 0
                     ) -> tuple[bool, AnfPoly | None]:
    """Symbolic check; returns (True, None) or (False, image + p) for the first failing L.

    Uses the backward images when p's letters have them, otherwise composes
    with the forward map.
    """
    p = _lift(wmap, p)
    direction = "back" if _letters_of(p) <= set(wmap.back) else "forward"
    for l in ((0, 1) if L == "both" else (L,)):
        diff = apply_map(wmap, p, F, l, direction) + _fix(p, F, l)
        if not diff.is_zero():
            return False, diff
    return True, None


def _eval_lanes(p: AnfPoly, state: np.ndarray, F: int, L: np.ndarray) -> np.ndarray:
    bits = []
    for name in p.universe:
        if name == "F":
            bits.append(np.full(state.shape[1], F & 1, dtype=np.uint8))
        elif name == "L":
            bits.append(L)
        else:
            bits.append(state[position(name) - 1])
    acc = np.zeros(state.shape[1], dtype=np.uint8)
    for mask in p.terms:
        term = np.ones(state.shape[1], dtype=np.uint8)
        for k, b in enumerate(bits):
            if mask >> k & 1:
                term &= b
        acc ^= term
    return acc


def check_concrete(wmap: WindowMap, p: AnfPoly, F: int, L: int | str, trials: int,
                   rng: np.random.Generator) -> int:
    """How many of `trials` random full states keep p's value across one cipher round.

    Bits outside the window and s1 are random; L = "both" draws s2 at random.
    """
    p = _lift(wmap, p)
    state = rng.integers(0, 2, size=(N_BITS, trials), dtype=np.uint8)
    s1 = rng.integers(0, 2, size=trials, dtype=np.uint8)
    if L == "both":
        s2 = rng.integers(0, 2, size=trials, dtype=np.uint8)
    else:
        s2 = np.full(trials, L & 1, dtype=np.uint8)
    out = lane_round(state, s1, s2, np.full(trials, F & 1, dtype=np.uint8), wmap.ltk, wmap.z)
    return int(np.sum(_eval_lanes(p, state, F, s2) == _eval_lanes(p, out, F, s2)))


def span_contains(basis: Sequence[AnfPoly], p: AnfPoly, letters) -> bool:
    if not basis:
        return p.is_zero()
    p = rename_universe(p, letters) if p.universe != tuple(letters) else p
    rows = np.array([b.to_dense() for b in basis], dtype=np.uint8)
    return gf2_rank(Gf2Matrix(np.vstack([rows, p.to_dense()]))) == gf2_rank(Gf2Matrix(rows))


@dataclass(frozen=True)
class DualityReport:
    dim_f0: int
    dim_f1: int
    common: int  # constants excluded

    def lines(self) -> list[str]:
        return [f"dim F=0: {self.dim_f0}", f"dim F=1: {self.dim_f1}",
                f"common (without constants): {self.common}"]


def check_f_duality(basis_f0: InvariantBasis, basis_f1: InvariantBasis) -> DualityReport:
    r0 = np.array([b.to_dense() for b in basis_f0.basis], dtype=np.uint8)
    r1 = np.array([b.to_dense() for b in basis_f1.basis], dtype=np.uint8)
    union = gf2_rank(Gf2Matrix(np.vstack([r0, r1])))
    common = len(r0) + len(r1) - union
    return DualityReport(len(r0), len(r1), common - 1)


# -- files --------------------------------------------------------------------

def basis_to_text(polys: Sequence[AnfPoly]) -> str:
    """One `+`-joined polynomial per line, highest degree terms last."""
    return "".join(format_poly(p) + "\n" for p in polys)


def basis_from_text(text: str, letters) -> list[AnfPoly]:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(parse_poly(line, tuple(letters)))
    return out


def save_basis(polys, path) -> None:
    Path(path).write_text(basis_to_text(polys))


def load_basis(path, letters) -> list[AnfPoly]:
    return basis_from_text(Path(path).read_text(), letters)


# -- reference keys and polynomials ----------------------------------------------

def _glc_key(d: str, p: str, name: str) -> LongTermKey:
    # alpha plays no part in one-round invariants
    return LongTermKey(tuple(map(int, d.split(","))), tuple(map(int, p.split(","))), 1, name)


@dataclass(frozen=True)
class GlcCase:
    name: str
    key: LongTermKey
    z: BooleanFunc6
    low: int
    F: int | None = None
    L: int | str | None = None
    invariants: tuple[str, ...] = ()
    expected_dims: dict = field(default_factory=dict)

    def window_map(self) -> WindowMap:
        return build_window_map(self.key, self.low, self.z)


SYMMETRIC_INVARIANTS = ("d+c+b+a", "bd+ac", "cd+bc+ad+ab", "bcd+acd+abd+abc", "abcd")
REFERENCE_ITEMS = SYMMETRIC_INVARIANTS

_EFGH_SYM = "h+g+f+e+gh+fh+eh+fg+eg+ef+fgh+egh+efh+efg+efgh"

GLC_CASES = {
    "thm-5.2.2": GlcCase(
        "thm-5.2.2",
        _glc_key("1,13,3,2,11,12,32,28,36",
                 "35,27,26,34,31,29,25,14,7,22,15,33,8,30,6,10,23,4,24,18,9,20,17,19,16,5,21", "thm-5.2.2"),
        Z_T310, WINDOW_12, expected_dims={(0, 0): 25, (0, 1): 32}),
    "thm-5.2.3": GlcCase(
        "thm-5.2.3",
        _glc_key("1,13,3,2,11,12,32,28,36",
                 "35,27,26,34,31,29,25,14,7,22,15,33,8,30,6,10,23,4,24,18,9,20,17,19,16,5,21", "thm-5.2.3"),
        Z_RANDOM, WINDOW_12, 0, 1, REFERENCE_ITEMS, {(0, 1): 51}),
    "ex-5.2.1": GlcCase(
        "ex-5.2.1",
        _glc_key("1,26,9,34,4,19,28,36,32",
                 "30,35,31,25,33,27,5,22,17,29,13,20,1,9,21,3,24,7,6,28,26,2,32,23,18,4,34", "ex-5.2.1"),
        # holds only with the key bit L fixed at 1
        Z_T310, WINDOW_12, 1, 1,
        ("efghijkl*(1+d)*(1+c)*(1+b)*(1+a)",)),
    "ex-5.2.2": GlcCase(
        "ex-5.2.2",
        _glc_key("0,30,26,6,7,1,28,36,32",
                 "26,30,29,31,27,36,5,18,9,15,10,19,28,13,21,32,17,25,14,7,11,3,20,35,34,33,2", "ex-5.2.2"),
        Z_T310, WINDOW_12, 1, 1,
        ("abcdijkl*(1+h)*(1+g)*(1+f)*(1+e)",)),
    "thm-5.3.1-P": GlcCase(
        "thm-5.3.1-P",
        _glc_key("17,25,26,35,18,34,30,32,28",
                 "27,29,31,21,33,19,26,25,22,32,23,17,24,16,18,9,5,10,35,13,36,30,34,11,2,28,14", "thm-5.3.1"),
        Z_TOY, WINDOW_20, 0, 0, ("h+g+f+e+fgh+egh+efh+efg",)),
    "thm-5.3.1-R": GlcCase(
        "thm-5.3.1-R",
        _glc_key("17,25,26,35,18,34,30,32,28",
                 "27,29,31,21,33,19,26,25,22,32,23,17,24,16,18,9,5,10,35,13,36,30,34,11,2,28,14", "thm-5.3.1"),
        Z_TOY, WINDOW_20, 1, 0, ("g+f+gh+eh+fg+ef",)),
    "thm-5.3.2": GlcCase(
        "thm-5.3.2",
        _glc_key("0,12,16,4,36,28,20,32,24",
                 "22,29,18,31,30,32,35,27,34,28,33,26,20,24,21,17,13,25,27,8,19,36,23,16,4,15,14", "thm-5.3.2"),
        Z_T310, WINDOW_20, 0, 0, (_EFGH_SYM,)),
    "thm-5.3.4": GlcCase(
        "thm-5.3.4",
        _glc_key("0,4,8,12,24,20,28,36,32",
                 "18,29,26,31,30,36,35,19,21,23,24,34,33,15,32,14,12,3,20,16,4,2,13,11,1,12,10", "thm-5.3.4"),
        Z_T310, WINDOW_20, 1, "both", (f"abcdijkl*(1+{_EFGH_SYM})",)),
}


def case_polys(case: GlcCase, wmap: WindowMap | None = None) -> list[AnfPoly]:
    universe = (wmap or case.window_map()).universe
    return [_parse_product(text, universe) for text in case.invariants]


def _parse_product(text: str, universe) -> AnfPoly:
    """Parse `x*(y)*(z)` products of parenthesised sums."""
    out = AnfPoly.one(universe)
    depth, start, parts = 0, 0, []
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "*" and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    for part in parts:
        part = part.strip()
        if part.startswith("(") and part.endswith(")"):
            part = part[1:-1]
        out = out * parse_poly(part, universe)
    return out
