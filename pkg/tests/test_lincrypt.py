import numpy as np
import pytest
from hypothesis import given, strategies as st

from t310 import keyspace as ks
from t310 import lincrypt as lc
from t310.cipher import NAMED_KEYS, PUBLISHED_KEYS, CipherState, ShortTermKey

CAT = lc.property_catalog()


def test_catalog_entries():
    p = CAT["thm-4.2.1"]
    assert (p.rounds, p.input_mask, p.output_mask, p.claimed_bias) == (8, (9, 13), (9, 13), -1.0)
    assert CAT["thm-4.2.3"].aux_terms == (("f", 1), ("s1", 1))
    mid = CAT["t41-mid"]
    assert (mid.rounds, mid.input_mask, mid.output_mask, mid.claimed_bias) == (1, (28,), (19, 21, 29, 35), -3.4)


def test_bad_property_fields():
    with pytest.raises(ValueError):
        lc.LinearProperty("x", 2, (37,), (1,))
    with pytest.raises(ValueError):
        lc.LinearProperty("x", 2, (1,), (1,), (("f", 3),))


masks = st.lists(st.integers(1, 36), max_size=6)


@given(st.integers(1, 9), masks, masks, st.lists(st.tuples(st.sampled_from(lc.SYMBOLS), st.integers(1, 9)),
                                                  max_size=4))
def test_property_text_round_trip(rounds, ins, outs, aux):
    aux = [(s, min(r, rounds)) for s, r in aux]
    p = lc.LinearProperty("p", rounds, tuple(ins), tuple(outs), tuple(aux), -2.0)
    (back,) = lc.properties_from_text(lc.property_to_text(p))
    assert back == p


@pytest.mark.parametrize("name", ["thm-4.2.1", "thm-4.2.2", "thm-4.2.3", "thm-4.2.4", "thm-4.2.5", "t41-shift"])
def test_deterministic_trails(name, rng):
    p = CAT[name]
    ok, cex = lc.check_deterministic(p, lc.key_for(p, rng), 10_000, rng)
    assert ok and cex is None
    est = lc.measure_bias(p, lc.key_for(p, rng), 10_000, rng)
    assert est.bias == 0.5


def test_non_member_key_gives_witness(rng):
    p = CAT["thm-4.2.1"]
    while True:
        key = ks.random_kt1(rng)
        if not ks.matches_class(key, "Thm-4.2.1"):
            break
    with pytest.raises(lc.PreconditionError):
        lc.measure_bias(p, key, 10_000, rng)
    ok, cex = lc.check_deterministic(p, key, 10_000, rng)
    assert not ok
    assert lc.eval_property_once(p, key, cex.stk, cex.iv, cex.state, check=False) == 1


def test_empty_masks_hold():
    p = lc.LinearProperty("empty", 3, (), ())
    assert lc.eval_property_once(p, NAMED_KEYS["788"], ShortTermKey(5), 9, CipherState.from_hex("0FFFFFFFF")) == 0


@given(st.integers(0, 8))
def test_shift_lanes_any_kt1_key(k):
    rng = np.random.default_rng(k)
    key = ks.random_kt1(rng)
    p = lc.LinearProperty("shift", 3, (4 * k + 1,), (4 * k + 4,))
    assert lc.check_deterministic(p, key, 2000, rng)[0]


def test_aux_flip_changes_parity(rng):
    p = CAT["thm-4.2.3"]
    key = lc.key_for(p, rng)
    for _ in range(30):
        state = CipherState.from_bits(rng.integers(0, 2, 36))
        stk = ShortTermKey.random(rng)
        base = lc.eval_property_once(p, key, stk, 12345, state)
        flipped = ShortTermKey(stk.value ^ (1 << 239))  # s1 of round 1
        assert base == 0
        assert lc.eval_property_once(p, key, flipped, 12345, state) == 0
        dropped = lc.LinearProperty("d", p.rounds, p.input_mask, p.output_mask, (("f", 1),))
        assert lc.eval_property_once(dropped, key, stk, 12345, state) == stk.s1(1)


def test_infer_aux_terms_finds_catalog(rng):
    p = CAT["thm-4.2.2"]
    rates = lc.infer_aux_terms(p.input_mask, p.output_mask, p.rounds, PUBLISHED_KEYS["706"], 2000, rng)
    found = {t for t, r in rates.items() if r == 1.0}
    assert found == set(p.aux_terms)


def test_rotations():
    p = CAT["thm-4.1.1"]
    rots = lc.rotate_onebit_property(p)
    assert rots[0] == p
    assert [r.input_mask for r in rots] == [(25,), (26,), (27,), (28,)]
    assert rots[1].aux_terms == (("f", 5),)
    with pytest.raises(ValueError):
        lc.rotate_onebit_property(CAT["thm-4.2.1"])


def test_rotated_bias_close(rng):
    p = CAT["thm-4.1.1"]
    key = NAMED_KEYS["625r"]
    b0 = lc.measure_bias(p, key, 200_000, rng).abs_bias
    b1 = lc.measure_bias(lc.rotate_onebit_property(p)[1], key, 200_000, rng).abs_bias
    assert abs(b1 - b0) <= 0.25 * b0 + 4 * (0.5 / 200_000 ** 0.5)


def test_threads_do_not_change_result():
    p = CAT["t41-mid"]
    key = NAMED_KEYS["625r"]
    a = lc.measure_bias(p, key, 100_000, np.random.default_rng(7), threads=1)
    b = lc.measure_bias(p, key, 100_000, np.random.default_rng(7), threads=3)
    assert a == b


def test_scalar_and_lane_agree(rng):
    p = CAT["t41-mid"]
    key = NAMED_KEYS["625r"]
    ok, cex = lc.check_deterministic(p, key, 1000, rng)
    assert not ok
    assert lc.eval_property_once(p, key, cex.stk, cex.iv, cex.state) == 1


def test_bias_estimate_fields():
    e = lc.BiasEstimate(100, 75)
    assert e.bias == 0.25 and e.log2_abs == -2.0 and e.sigma > 0
    assert lc.BiasEstimate(10, 10).sigma > 0
