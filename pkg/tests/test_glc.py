import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from t310 import glc
from t310.anf import AnfPoly
from t310.cipher import PUBLISHED_KEYS

CASES = glc.GLC_CASES


@pytest.fixture(scope="module")
def map522():
    return CASES["thm-5.2.2"].window_map()


@pytest.fixture(scope="module")
def space522(map522):
    return glc.invariant_space(map522, 0, 0)


def poly(wmap, text):
    return glc.parse_window_poly(text, wmap)


def test_window_images(map522):
    assert map522.back["a"] == poly(map522, "d+F")
    assert map522.forward["d"] == poly(map522, "a+F")
    assert set(map522.forward) == set(map522.letters)
    assert glc.apply_map(map522, poly(map522, "d")) == poly(map522, "c")


def test_sum_and_product_invariant(map522):
    for text in ("a+b+c+d", "abcd"):
        p = poly(map522, text)
        assert glc.apply_map(map522, p, 0, 0) == p


def test_625_window_not_closed():
    with pytest.raises(glc.ClosureError):
        glc.build_window_map(PUBLISHED_KEYS["625"], 25)


def test_window_start_checked():
    with pytest.raises(ValueError):
        glc.build_window_map(PUBLISHED_KEYS["788"], 26)


def test_toy_image_of_e():
    w = CASES["thm-5.3.1-P"].window_map()
    e = w.back["e"]
    rest = e + poly(w, "F+h")
    # what is left is Z = x1x2x3x4x5 on five window letters
    assert len(rest.terms) == 1 and rest.degree() == 5


def test_elementary_symmetric_in_f0_spaces(map522, space522):
    for L in (0, 1):
        space = space522 if L == 0 else glc.invariant_space(map522, 0, 1)
        for text in glc.SYMMETRIC_INVARIANTS:
            assert glc.span_contains(space.basis, poly(map522, text), map522.letters), (L, text)


def test_basis_elements_verify_both_routes(map522, space522):
    rng = np.random.default_rng(5)
    for p in space522.basis:
        assert glc.verify_invariant(map522, p, 0, 0)[0]
        assert glc.check_concrete(map522, p, 0, 0, 500, rng) == 500


def test_random_function_space_has_reference_items():
    case = CASES["thm-5.2.3"]
    w = case.window_map()
    space = glc.invariant_space(w, 0, 1)
    for p in glc.case_polys(case, w):
        assert glc.span_contains(space.basis, p, w.letters)


@pytest.mark.parametrize("name", ["thm-5.3.1-P", "thm-5.3.1-R", "thm-5.3.2", "thm-5.3.4"])
def test_sparse_invariants(name, rng):
    case = CASES[name]
    w = case.window_map()
    (p,) = glc.case_polys(case, w)
    assert glc.verify_invariant(w, p, case.F, case.L)[0]
    assert glc.check_concrete(w, p, case.F, case.L, 10_000, rng) == 10_000


def test_toy_invariants_are_one_sided(rng):
    w = CASES["thm-5.3.1-P"].window_map()
    (p,) = glc.case_polys(CASES["thm-5.3.1-P"], w)
    ok, diff = glc.verify_invariant(w, p, 1, 0)
    assert not ok and not diff.is_zero()


@pytest.mark.parametrize("name", ["ex-5.2.1", "ex-5.2.2"])
def test_examples_hold_only_for_f1(name, rng):
    case = CASES[name]
    w = case.window_map()
    (p,) = glc.case_polys(case, w)
    assert glc.verify_invariant(w, p, 1, 1)[0]
    ok, diff = glc.verify_invariant(w, p, 0, 1)
    assert not ok
    assert glc.check_concrete(w, p, 1, 1, 10_000, rng) == 10_000
    assert glc.check_concrete(w, p, 0, 1, 10_000, rng) < 10_000
    f0 = glc.invariant_space(w, 0, 1)
    f1 = glc.invariant_space(w, 1, 1)
    assert glc.span_contains(f1.basis, p, w.letters)
    assert not glc.span_contains(f0.basis, p, w.letters)
    rep = glc.check_f_duality(f0, f1)
    assert rep.common < min(rep.dim_f0, rep.dim_f1) - 1


def test_duality_of_identical_spaces(space522):
    rep = glc.check_f_duality(space522, space522)
    assert rep.common == space522.nonconstant_dimension


def test_dense_too_large():
    w = CASES["thm-5.3.2"].window_map()
    with pytest.raises(ValueError):
        glc.invariant_space(w, 0, 0)


@settings(max_examples=20)
@given(st.integers(1, 4095))
def test_dense_agrees_with_symbolic(mask):
    # a monomial is invariant in the dense sense iff the symbolic route says so
    w = CASES["thm-5.2.2"].window_map()
    p = AnfPoly(w.universe, frozenset({mask}))
    sym = glc.verify_invariant(w, p, 0, 0)[0]
    t = glc.transition_matrix(w, 0, 0)
    col = t[:, mask].copy()
    col[mask] ^= 1
    assert sym == (not col.any())


def test_basis_file_round_trip(tmp_path, map522, space522):
    glc.save_basis(space522.basis, tmp_path / "b.txt")
    back = glc.load_basis(tmp_path / "b.txt", map522.letters)
    assert back == list(space522.basis)
