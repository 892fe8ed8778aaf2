"""Spectra and annihilators of 6-variable Boolean functions.

The Walsh histogram follows the 0/1 convention that reproduces the published
tables: ``W[a] = sum_x f(x) * (-1)**(a.x)`` with the zero mask left out of the
histogram.  The usual polarity spectrum is available as `polarity_spectrum`.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .anf import AnfPoly, anf_to_truth_table, default_universe, parse_poly, truth_table_to_anf
from .gf2 import Gf2Matrix, gf2_kernel

N_VARS = 6
SIZE = 1 << N_VARS
X_VARS = default_universe(N_VARS)


@dataclass(frozen=True)
class BooleanFunc6:
    """Truth table indexed by x0 + 2*x1 + ... + 32*x5."""

    tt: tuple[int, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        tt = tuple(int(b) & 1 for b in self.tt)
        if len(tt) != SIZE:
            raise ValueError(f"need {SIZE} truth-table entries, got {len(tt)}")
        object.__setattr__(self, "tt", tt)

    @classmethod
    def from_anf(cls, poly: AnfPoly | str, name: str = "") -> "BooleanFunc6":
        if isinstance(poly, str):
            poly = parse_poly(poly, X_VARS)
        return cls(tuple(anf_to_truth_table(poly)), name)

    @classmethod
    def from_hex(cls, text: str, name: str = "") -> "BooleanFunc6":
        text = text.strip().lower().removeprefix("0x")
        if len(text) != 16:
            raise ValueError("truth table hex must be 16 digits")
        value = int(text, 16)
        return cls(tuple(value >> i & 1 for i in range(SIZE)), name)

    def to_hex(self) -> str:
        return f"{self.as_int():016x}"

    def as_int(self) -> int:
        return sum(b << i for i, b in enumerate(self.tt))

    def anf(self) -> AnfPoly:
        return truth_table_to_anf(np.array(self.tt, dtype=np.uint8), X_VARS)

    def table(self) -> np.ndarray:
        return np.array(self.tt, dtype=np.uint8)

    def weight(self) -> int:
        return sum(self.tt)

    def __call__(self, x0, x1, x2, x3, x4, x5):
        return self.tt[x0 | x1 << 1 | x2 << 2 | x3 << 3 | x4 << 4 | x5 << 5]

    def flip(self, index: int) -> "BooleanFunc6":
        tt = list(self.tt)
        tt[index] ^= 1
        return BooleanFunc6(tuple(tt), self.name + f"^{index}")


Z_T310 = BooleanFunc6.from_anf(
    "x0+x4+x5+x0x3+x1x2+x1x4+x3x4+x4x5+x0x2x3+x0x2x5+x0x3x4+x1x2x5+x1x3x5+x2x4x5"
    "+x0x1x2x3+x0x1x2x4+x0x1x4x5+x1x2x3x5+x0x1x2x3x4+x0x2x3x4x5",
    name="z",
)

# The randomly drawn replacement function of the 12-bit invariant experiments.
Z_RANDOM = BooleanFunc6.from_anf(
    "x1+x0x1+x0x3+x2x5+x3x5+x4x5+x0x1x2+x0x2x5+x0x3x4+x0x3x5+x0x4x5+x1x2x5+x1x4x5"
    "+x2x4x5+x0x1x3x4+x0x2x4x5+x0x3x4x5+x1x2x3x4+x1x2x3x5+x1x2x4x5+x1x3x4x5"
    "+x0x1x2x3x4+x0x1x2x3x5+x0x1x3x4x5+x0x2x3x4x5+x1x2x3x4x5",
    name="random",
)

# 20-bit toy experiment: Z = x1 x2 x3 x4 x5.
Z_TOY = BooleanFunc6.from_anf("x1*x2*x3*x4*x5", name="toy")

NAMED_FUNCTIONS = {"z": Z_T310, "random": Z_RANDOM, "toy": Z_TOY}


# -- spectra -----------------------------------------------------------------

def _fwht(values: np.ndarray) -> np.ndarray:
    a = values.astype(np.int64).copy()
    h = 1
    while h < a.size:
        v = a.reshape(-1, 2, h)
        x, y = v[:, 0, :].copy(), v[:, 1, :].copy()
        v[:, 0, :] = x + y
        v[:, 1, :] = x - y
        h *= 2
    return a


def histogram(values, skip_zero_index: bool = False) -> dict[int, int]:
    vals = list(values)[1:] if skip_zero_index else list(values)
    return dict(sorted(Counter(int(v) for v in vals).items()))


def walsh_spectrum(f: BooleanFunc6) -> tuple[np.ndarray, dict[int, int]]:
    """0/1-table Walsh vector and its histogram over the 63 nonzero masks."""
    w = _fwht(f.table())
    return w, histogram(w, skip_zero_index=True)


def polarity_spectrum(f: BooleanFunc6) -> np.ndarray:
    """Standard spectrum of (-1)**f, including the zero mask."""
    return _fwht(1 - 2 * f.table().astype(np.int64))


def autocorrelation_spectrum(f: BooleanFunc6) -> tuple[np.ndarray, dict[int, int]]:
    s = polarity_spectrum(f)
    # Wiener-Khinchin: r = H(S^2) / 2^n
    r = _fwht(s * s) // SIZE
    return r, histogram(r)


# -- annihilators --------------------------------------------------------------

@dataclass(frozen=True)
class AnnihilatorReport:
    side: int
    max_degree: int
    basis: tuple[AnfPoly, ...]

    @property
    def count(self) -> int:
        """Dimension of the solution space (the published count of 32 for Z)."""
        return len(self.basis)

    @property
    def nonzero_solutions(self) -> int:
        return (1 << len(self.basis)) - 1


def monomials_up_to(degree: int, n: int = N_VARS) -> list[int]:
    return sorted((m for m in range(1 << n) if m.bit_count() <= degree),
                  key=lambda m: (m.bit_count(), m))


def annihilator_space(f: BooleanFunc6, a: int, max_degree: int = N_VARS) -> AnnihilatorReport:
    """All g of degree <= max_degree vanishing on {x : f(x) = a}.

    Equivalently (f + 1 + a) * g = 0.
    """
    if not 0 <= max_degree <= N_VARS:
        raise ValueError("max_degree must lie in 0..6")
    a &= 1
    points = [x for x in range(SIZE) if f.tt[x] == a]
    cols = monomials_up_to(max_degree)
    if not points:
        # nothing to vanish on: every g of bounded degree qualifies
        basis = tuple(AnfPoly(X_VARS, frozenset({m})) for m in cols)
        return AnnihilatorReport(a, max_degree, basis)
    rows = np.array([[1 if m & x == m else 0 for m in cols] for x in points], dtype=np.uint8)
    kernel = gf2_kernel(Gf2Matrix(rows))
    basis = tuple(
        AnfPoly(X_VARS, frozenset(cols[i] for i in np.flatnonzero(v))) for v in kernel
    )
    return AnnihilatorReport(a, max_degree, basis)


def annihilates(f: BooleanFunc6, g: AnfPoly, a: int) -> bool:
    """Brute-force check of (f + 1 + a) * g = 0 over all 64 inputs."""
    gt = anf_to_truth_table(g)
    return all(not ((f.tt[x] ^ 1 ^ a) & gt[x]) for x in range(SIZE))


def min_annihilator_degree(f: BooleanFunc6, a: int) -> int:
    for d in range(N_VARS + 1):
        if annihilator_space(f, a, d).count:
            return d
    return -1


def column_count(max_degree: int) -> int:
    return sum(comb(N_VARS, i) for i in range(max_degree + 1))


# Restricted identities used by the 20-bit invariants.  The factor
# (1+x2)(1+x4)(1+x5) expands to 1+x2+x4+x5+x2x4+x2x5+x4x5+x2x4x5.
RESTRICTED_FACTOR = parse_poly("1+x2+x4+x5+x2*x4+x2*x5+x4*x5+x2*x4*x5", X_VARS)


@dataclass(frozen=True)
class IdentityCheck:
    holds: bool
    witness: tuple[int, ...] | None = None
    label: str = ""


def verify_z_restricted_annihilators(f: BooleanFunc6 = Z_T310) -> tuple[IdentityCheck, IdentityCheck]:
    """Brute-force the two product identities over x1..x5.

    With x0 = 0: f * factor = 0.  With x0 = 1: f * factor * x3 = 0.
    """
    factor = anf_to_truth_table(RESTRICTED_FACTOR)
    results = []
    for x0, label, extra in ((0, "x0=0", None), (1, "x0=1 times x3", 3)):
        witness = None
        for rest in range(32):
            x = x0 | rest << 1
            val = f.tt[x] & factor[x]
            if extra is not None:
                val &= x >> extra & 1
            if val:
                witness = tuple(x >> i & 1 for i in range(N_VARS))
                break
        results.append(IdentityCheck(witness is None, witness, label))
    return results[0], results[1]
