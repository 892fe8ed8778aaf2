"""Polynomials over GF(2) in algebraic normal form.

Two representations live here.  `AnfPoly` is sparse: a frozenset of monomial
masks over an ordered tuple of variable names, where bit ``i`` of a mask is the
``i``-th variable.  Dense coefficient vectors of length ``2**n`` use the same
index convention, so the Moebius transform is a plain butterfly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np


class UniverseError(ValueError):
    """Operands live over different variable sets, or a name is unknown."""


@dataclass(frozen=True)
class AnfPoly:
    universe: tuple[str, ...]
    terms: frozenset[int] = frozenset()

    def __post_init__(self):
        if len(set(self.universe)) != len(self.universe):
            raise UniverseError(f"duplicate variable names in {self.universe}")
        limit = 1 << len(self.universe)
        for t in self.terms:
            if t < 0 or t >= limit:
                raise UniverseError(f"monomial mask {t:#x} outside universe")

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, universe: Sequence[str]) -> "AnfPoly":
        return cls(tuple(universe), frozenset())

    @classmethod
    def one(cls, universe: Sequence[str]) -> "AnfPoly":
        return cls(tuple(universe), frozenset({0}))

    @classmethod
    def var(cls, universe: Sequence[str], name: str) -> "AnfPoly":
        universe = tuple(universe)
        try:
            return cls(universe, frozenset({1 << universe.index(name)}))
        except ValueError:
            raise UniverseError(f"unknown variable {name!r}") from None

    @classmethod
    def monomial(cls, universe: Sequence[str], names: Iterable[str]) -> "AnfPoly":
        universe = tuple(universe)
        mask = 0
        for name in names:
            if name not in universe:
                raise UniverseError(f"unknown variable {name!r}")
            mask |= 1 << universe.index(name)
        return cls(universe, frozenset({mask}))

    @classmethod
    def from_dense(cls, coeffs, universe: Sequence[str]) -> "AnfPoly":
        coeffs = np.asarray(coeffs)
        if coeffs.size != 1 << len(universe):
            raise ValueError("coefficient vector length must be 2**len(universe)")
        return cls(tuple(universe), frozenset(int(i) for i in np.flatnonzero(coeffs & 1)))

    @classmethod
    def parse(cls, text: str, universe: Sequence[str]) -> "AnfPoly":
        return parse_poly(text, universe)

    # -- basic queries ------------------------------------------------------
    @property
    def arity(self) -> int:
        return len(self.universe)

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((t.bit_count() for t in self.terms), default=-1)

    def support_vars(self) -> set[str]:
        used = 0
        for t in self.terms:
            used |= t
        return {name for i, name in enumerate(self.universe) if used >> i & 1}

    def to_dense(self) -> np.ndarray:
        out = np.zeros(1 << self.arity, dtype=np.uint8)
        if self.terms:
            out[list(self.terms)] = 1
        return out

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "AnfPoly") -> "AnfPoly":
        return poly_add(self, other)

    __xor__ = __add__

    def __mul__(self, other: "AnfPoly") -> "AnfPoly":
        return poly_mul(self, other)

    __and__ = __mul__

    def __str__(self) -> str:
        return format_poly(self)

    def __repr__(self) -> str:
        return f"AnfPoly({format_poly(self)!r})"


def _check_same(p: AnfPoly, q: AnfPoly) -> None:
    if p.universe != q.universe:
        raise UniverseError(f"universe mismatch: {p.universe} vs {q.universe}")


def poly_add(p: AnfPoly, q: AnfPoly) -> AnfPoly:
    _check_same(p, q)
    return AnfPoly(p.universe, p.terms ^ q.terms)


def _mul_terms(a: Iterable[int], b: Iterable[int]) -> set[int]:
    out: set[int] = set()
    b = list(b)
    for x in a:
        for y in b:
            m = x | y
            if m in out:
                out.remove(m)
            else:
                out.add(m)
    return out


def poly_mul(p: AnfPoly, q: AnfPoly) -> AnfPoly:
    """Product reduced with x*x = x; coefficients fold mod 2."""
    _check_same(p, q)
    return AnfPoly(p.universe, frozenset(_mul_terms(p.terms, q.terms)))


def poly_eval(p: AnfPoly, assignment: Mapping[str, int]) -> int:
    x = 0
    for i, name in enumerate(p.universe):
        if name in assignment:
            x |= (assignment[name] & 1) << i
    used = 0
    for t in p.terms:
        used |= t
    for i, name in enumerate(p.universe):
        if used >> i & 1 and name not in assignment:
            raise KeyError(f"variable {name!r} is not assigned")
    return sum(1 for t in p.terms if t & x == t) & 1


def substitute(p: AnfPoly, bindings: Mapping[str, AnfPoly]) -> AnfPoly:
    """Replace variables by polynomials over the same universe."""
    index = {name: i for i, name in enumerate(p.universe)}
    images: dict[int, AnfPoly] = {}
    for name, img in bindings.items():
        if name not in index:
            raise UniverseError(f"unknown variable {name!r}")
        if img.universe != p.universe:
            raise UniverseError(f"image of {name!r} is over a different universe")
        images[index[name]] = img
    bound_mask = sum(1 << i for i in images)

    # Memoise partial products of bound variables; monomials share prefixes.
    cache: dict[int, frozenset[int]] = {0: frozenset({0})}

    def product(mask: int) -> frozenset[int]:
        if mask in cache:
            return cache[mask]
        low = mask & -mask
        rest = product(mask ^ low)
        res = frozenset(_mul_terms(rest, images[low.bit_length() - 1].terms))
        cache[mask] = res
        return res

    out: set[int] = set()
    for t in p.terms:
        free = t & ~bound_mask
        for m in product(t & bound_mask):
            m |= free
            if m in out:
                out.remove(m)
            else:
                out.add(m)
    return AnfPoly(p.universe, frozenset(out))


def fix_variables(p: AnfPoly, values: Mapping[str, int]) -> AnfPoly:
    """Set some variables to constants (cheaper than `substitute`)."""
    one_mask = zero_mask = 0
    for name, bit in values.items():
        i = p.universe.index(name)
        if bit & 1:
            one_mask |= 1 << i
        else:
            zero_mask |= 1 << i
    out: set[int] = set()
    for t in p.terms:
        if t & zero_mask:
            continue
        m = t & ~one_mask
        if m in out:
            out.remove(m)
        else:
            out.add(m)
    return AnfPoly(p.universe, frozenset(out))


def rename_universe(p: AnfPoly, universe: Sequence[str]) -> AnfPoly:
    """Re-express `p` over another universe that contains all its used variables."""
    universe = tuple(universe)
    pos = []
    for name in p.universe:
        pos.append(universe.index(name) if name in universe else None)
    out = set()
    for t in p.terms:
        m = 0
        for i, j in enumerate(pos):
            if t >> i & 1:
                if j is None:
                    raise UniverseError(f"variable {p.universe[i]!r} missing from target universe")
                m |= 1 << j
        out.add(m)
    return AnfPoly(universe, frozenset(out))


# -- dense transforms ---------------------------------------------------------

def moebius(values) -> np.ndarray:
    """Binary Moebius transform along the last axis (its own inverse over GF(2))."""
    a = np.array(values, dtype=np.uint8, copy=True) & 1
    size = a.shape[-1]
    if size & (size - 1):
        raise ValueError(f"length {size} is not a power of two")
    h = 1
    lead = a.shape[:-1]
    while h < size:
        v = a.reshape(*lead, size // (2 * h), 2, h)
        v[..., 1, :] ^= v[..., 0, :]
        h *= 2
    return a


def default_universe(n: int) -> tuple[str, ...]:
    return tuple(f"x{i}" for i in range(n))


def truth_table_to_anf(tt, universe: Sequence[str] | None = None) -> AnfPoly:
    tt = np.asarray(tt, dtype=np.uint8)
    n = tt.size.bit_length() - 1
    if tt.ndim != 1 or tt.size != 1 << n:
        raise ValueError(f"truth table length {tt.size} is not a power of two")
    universe = default_universe(n) if universe is None else tuple(universe)
    if len(universe) != n:
        raise UniverseError("universe size does not match table length")
    return AnfPoly.from_dense(moebius(tt), universe)


def anf_to_truth_table(p: AnfPoly) -> np.ndarray:
    return moebius(p.to_dense())


# -- text format -------------------------------------------------------------

_SPLIT = re.compile(r"\s*(?:\+|⊕)\s*")


def _split_juxtaposed(term: str, universe: tuple[str, ...]) -> list[str]:
    """Split `x0x3` or `abc` into names, longest match first."""
    by_len = sorted(universe, key=len, reverse=True)
    out, i = [], 0
    while i < len(term):
        for name in by_len:
            if term.startswith(name, i):
                out.append(name)
                i += len(name)
                break
        else:
            raise UniverseError(f"cannot read variable at {term[i:]!r}")
    return out


def parse_poly(text: str, universe: Sequence[str]) -> AnfPoly:
    """Parse `bd+ac`, `x0*x1 + 1`, `x0x3+x1`, `a ⊕ bc` style text."""
    universe = tuple(universe)
    names = set(universe)
    text = text.strip()
    if text in ("", "0"):
        return AnfPoly.zero(universe)
    acc: set[int] = set()
    for raw in _SPLIT.split(text):
        term = raw.replace(" ", "")
        if not term:
            raise ValueError(f"empty term in {text!r}")
        if term == "1":
            factors: list[str] = []
        elif term == "0":
            continue
        elif "*" in term:
            factors = [f for f in term.split("*") if f != "1"]
        elif term in names:
            factors = [term]
        else:
            factors = _split_juxtaposed(term, universe)
        mask = 0
        for f in factors:
            if f not in names:
                raise UniverseError(f"unknown variable {f!r} in term {raw!r}")
            mask |= 1 << universe.index(f)
        if mask in acc:
            acc.remove(mask)
        else:
            acc.add(mask)
    return AnfPoly(universe, frozenset(acc))


def _term_key(universe: tuple[str, ...], mask: int):
    idx = [i for i in range(len(universe)) if mask >> i & 1]
    return (len(idx), idx)


def format_poly(p: AnfPoly, sep: str = "+") -> str:
    if not p.terms:
        return "0"
    compact = all(len(n) == 1 for n in p.universe)
    parts = []
    for t in sorted(p.terms, key=lambda m: _term_key(p.universe, m)):
        if t == 0:
            parts.append("1")
            continue
        names = [p.universe[i] for i in range(p.arity) if t >> i & 1]
        parts.append("".join(names) if compact else "*".join(names))
    return sep.join(parts)
