import itertools

import numpy as np
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from t310.gf2 import Gf2Matrix, gf2_kernel, gf2_rank, rref


def brute_rank(bits):
    # count distinct row combinations: |row space| = 2**rank
    rows = [int("".join(map(str, r)), 2) for r in bits]
    space = {0}
    for r in rows:
        space |= {s ^ r for s in space}
    return len(space).bit_length() - 1


matrices = st.tuples(st.integers(1, 9), st.integers(1, 9)).flatmap(
    lambda s: arrays(np.uint8, s, elements=st.integers(0, 1)))


@given(matrices)
def test_rank_matches_row_space_size(bits):
    assert gf2_rank(Gf2Matrix(bits)) == brute_rank(bits)


@given(matrices)
def test_kernel_is_null_and_complete(bits):
    m = Gf2Matrix(bits)
    ker = gf2_kernel(m)
    for v in ker:
        assert not (m @ v).any()
    assert len(ker) + gf2_rank(m) == m.cols
    if ker:
        assert gf2_rank(Gf2Matrix(np.array(ker))) == len(ker)


def test_identity_has_empty_kernel():
    assert gf2_kernel(Gf2Matrix(np.eye(7, dtype=np.uint8))) == []


def test_zero_matrix_kernel_is_everything():
    assert len(gf2_kernel(Gf2Matrix(np.zeros((3, 5), dtype=np.uint8)))) == 5


def test_wide_matrix_crosses_word_boundary():
    rng = np.random.default_rng(1)
    bits = rng.integers(0, 2, size=(40, 150), dtype=np.uint8)
    m = Gf2Matrix(bits)
    ker = gf2_kernel(m)
    assert len(ker) == 150 - gf2_rank(m)
    for v in ker:
        assert not (m @ v).any()


def test_rref_pivots_are_unit_columns():
    bits = np.array([[1, 1, 0, 1], [1, 0, 1, 1], [0, 1, 1, 0]], dtype=np.uint8)
    _, piv = rref(Gf2Matrix(bits))
    assert piv == [0, 1]


def test_small_exhaustive():
    for flat in itertools.product((0, 1), repeat=6):
        bits = np.array(flat, dtype=np.uint8).reshape(2, 3)
        assert gf2_rank(Gf2Matrix(bits)) == brute_rank(bits)
