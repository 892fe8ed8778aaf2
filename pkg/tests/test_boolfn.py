import numpy as np
import pytest
from hypothesis import given, strategies as st

from t310.anf import parse_poly
from t310.boolfn import (
    RESTRICTED_FACTOR, X_VARS, Z_RANDOM, Z_T310, BooleanFunc6, annihilates, annihilator_space,
    autocorrelation_spectrum, min_annihilator_degree, polarity_spectrum, verify_z_restricted_annihilators,
    walsh_spectrum,
)
from t310.glc import span_contains

Z_TERMS = ("x0 x4 x5 x0x3 x1x2 x1x4 x3x4 x4x5 x0x2x3 x0x2x5 x0x3x4 x1x2x5 x1x3x5 x2x4x5 "
           "x0x1x2x3 x0x1x2x4 x0x1x4x5 x1x2x3x5 x0x1x2x3x4 x0x2x3x4x5").split()

Z_WALSH_HIST = {-10: 1, -8: 2, -6: 8, -4: 5, -2: 10, 0: 16, 2: 8, 4: 7, 6: 5, 8: 1}
Z_AUTO_HIST = {-24: 3, -16: 6, -8: 13, 0: 20, 8: 17, 16: 3, 24: 1, 64: 1}
RANDOM_WALSH_HIST = {-12: 1, -8: 2, -6: 5, -4: 6, -2: 14, 0: 13, 2: 11, 4: 8, 6: 1, 8: 1, 12: 1}
RANDOM_AUTO_HIST = {-32: 2, -24: 5, -16: 6, -8: 10, 0: 17, 8: 11, 16: 9, 24: 2, 32: 1, 64: 1}

LISTED_ANNIHILATORS = (
    "x0x1x4+x0x2x3+x0x2x5+x0x3x4+x0x3x5+x0x4x5+x0+x1x2x3+x1x2x4+x1x2x5+x1x2+x1x3x5+x1x4x5"
    "+x2x3x5+x2x3+x4x5+x4+x5+1",
    "x0x1x2x3+x0x1x4+x0x2x3x4+x0x2x3x5+x0x2x4x5+x0x2x5+x0x3x4x5+x0x3x4+x0x3x5+x0+x1x2x3x4"
    "+x1x2x4x5+x1x2x4+x1x2x5+x1x2+x4x5+x4+x5+1",
    "x0x1x2x3+x0x1x2x4x5+x0x1x4+x0x2x3x5+x0x2x5+x0x3x4x5+x0x3x4+x0x3x5+x0+x1x2x4x5+x1x2x4"
    "+x1x2x5+x1x2+x4x5+x4+x5+1",
    "x0x1x2x3x4x5",
)

funcs = st.lists(st.integers(0, 1), min_size=64, max_size=64).map(lambda t: BooleanFunc6(tuple(t)))


def direct_z(x):
    """Independent evaluation straight from the monomial list."""
    bits = [x >> i & 1 for i in range(6)]
    acc = 0
    for term in Z_TERMS:
        acc ^= all(bits[int(d)] for d in term.replace("x", " ").split())
    return int(acc)


def test_z_matches_monomial_list():
    assert list(Z_T310.tt) == [direct_z(x) for x in range(64)]
    assert len(Z_TERMS) == 20 and Z_T310.anf() == parse_poly("+".join(Z_TERMS), X_VARS)


def test_z_corner_values():
    assert Z_T310.tt[0] == 0
    assert Z_T310.tt[1] == 1  # x0 alone
    assert Z_T310.tt[63] == 0  # twenty monomials, even count


def test_z_histograms():
    assert walsh_spectrum(Z_T310)[1] == Z_WALSH_HIST
    assert autocorrelation_spectrum(Z_T310)[1] == Z_AUTO_HIST


def test_random_z_histograms():
    assert walsh_spectrum(Z_RANDOM)[1] == RANDOM_WALSH_HIST
    assert autocorrelation_spectrum(Z_RANDOM)[1] == RANDOM_AUTO_HIST


def test_constant_zero_spectrum():
    w, hist = walsh_spectrum(BooleanFunc6((0,) * 64))
    assert not w.any() and hist == {0: 63}


@given(funcs)
def test_walsh_against_direct_sum(f):
    w, _ = walsh_spectrum(f)
    for a in (1, 7, 33, 63):
        direct = sum(f.tt[x] * (-1) ** bin(a & x).count("1") for x in range(64))
        assert w[a] == direct


@given(funcs)
def test_parseval_zero_one_convention(f):
    w, _ = walsh_spectrum(f)
    wt = f.weight()
    assert int((w[1:].astype(np.int64) ** 2).sum()) == 64 * wt - wt * wt


@given(funcs)
def test_polarity_parseval(f):
    s = polarity_spectrum(f)
    assert int((s.astype(np.int64) ** 2).sum()) == 64 * 64


@given(funcs)
def test_autocorrelation_definition(f):
    r, _ = autocorrelation_spectrum(f)
    assert r[0] == 64
    for x in (1, 5, 42):
        assert r[x] == sum((-1) ** (f.tt[y] ^ f.tt[y ^ x]) for y in range(64))


def test_annihilator_count_is_32():
    for a in (0, 1):
        assert annihilator_space(Z_T310, a, 6).count == 32
    assert min_annihilator_degree(Z_T310, 1) == 3


@pytest.mark.parametrize("text", LISTED_ANNIHILATORS)
def test_listed_annihilators(text):
    g = parse_poly(text, X_VARS)
    assert annihilates(Z_T310, g, 1)
    assert span_contains(annihilator_space(Z_T310, 1, g.degree()).basis, g, X_VARS)


@given(funcs, st.integers(0, 1), st.integers(0, 6))
def test_annihilator_basis_verifies(f, a, d):
    rep = annihilator_space(f, a, d)
    for g in rep.basis:
        assert g.degree() <= d
        assert annihilates(f, g, a)


def test_constant_one_leaves_nothing():
    assert annihilator_space(BooleanFunc6((1,) * 64), 1, 6).count == 0


def test_restricted_identities():
    c0, c1 = verify_z_restricted_annihilators()
    assert c0.holds and c1.holds
    one = parse_poly("1", X_VARS)
    assert RESTRICTED_FACTOR == (one + parse_poly("x2", X_VARS)) * (one + parse_poly("x4", X_VARS)) * (
        one + parse_poly("x5", X_VARS))


def test_restricted_identity_breaks_on_flip():
    # x0 = x2 = x4 = x5 = 0 makes the factor 1, so Z must vanish there
    x = next(x for x in range(64) if not x & 0b110101)
    broken = Z_T310.flip(x)
    c0, _ = verify_z_restricted_annihilators(broken)
    assert not c0.holds and c0.witness is not None


def test_hex_round_trip():
    for f in (Z_T310, Z_RANDOM):
        assert BooleanFunc6.from_hex(f.to_hex()).tt == f.tt
