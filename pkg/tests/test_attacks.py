import numpy as np
import pytest
from hypothesis import given, strategies as st

from t310 import attacks as at
from t310 import keyspace as ks
from t310.cipher import NAMED_KEYS, PUBLISHED_KEYS, ShortTermKey, iv_advance, keystream, random_ivs, random_stk_bits
from t310.lincrypt import LinearProperty, get_property

K625R = NAMED_KEYS["625r"]


def test_full_coverage_trace_is_keystream(rng):
    stk = ShortTermKey.random(rng)
    tr = at.oracle_trace(K625R, stk, 4242, 5, 1.0, rng)
    assert tr.revealed == 65
    assert [tr.get(i) for i in range(1, 66)] == keystream(K625R, stk, 4242, 65)


def test_zero_coverage_rejected(rng):
    with pytest.raises(ValueError):
        at.oracle_trace(K625R, ShortTermKey(1), 1, 5, 0.0, rng)


def test_partial_trace_reveals_truth(rng):
    stk = ShortTermKey.random(rng)
    tr = at.oracle_trace(K625R, stk, 99, 50, 0.73, rng)
    ks_ = keystream(K625R, stk, 99, 650)
    assert all(tr.get(i) in (None, ks_[i - 1]) for i in range(1, 651))
    assert abs(tr.revealed / 650 - 0.73) < 0.08


@given(st.integers(1, 2**61 - 1), st.integers(0, 20_000))
def test_backclock_identity(iv, k):
    assert iv_advance(at.backclock_iv(iv, k), k) == iv


def test_backclock_full_slide():
    iv = 0x123456789
    assert iv_advance(at.backclock_iv(iv, 120 * 127), 120 * 127) == iv
    assert at.backclock_iv(iv, 0) == iv


def test_candidate_relation():
    at.SlidePairCandidate(1, 2, 127, 120, 0)
    with pytest.raises(ValueError):
        at.SlidePairCandidate(1, 2, 127, 120, 5)


def test_planted_alignment(rng):
    stk = random_stk_bits(rng, 8)
    ivs = random_ivs(rng, 8)
    base, shifted, _ = at.slid_keystreams(K625R, stk, ivs, 5, 15, True)
    assert (base[:, :65] == shifted[:, 120:185]).all()
    _, unplanted, _ = at.slid_keystreams(K625R, stk, ivs, 5, 15, False)
    assert (base[:, :65] != unplanted[:, 120:185]).any()


def test_detection_rule():
    a = at.OracleTrace(np.array([1, 0, -1] * 20, dtype=np.int8), 1.0)
    b = at.OracleTrace(np.concatenate([np.zeros(5, np.int8), a.bits]), 1.0)
    assert at.detect_slid_pair(a, b, 5) == (True, 40, 40)
    c = at.OracleTrace(b.bits.copy(), 1.0)
    c.bits[5] ^= 1
    assert at.detect_slid_pair(a, c, 5)[0] is False
    short = at.OracleTrace(np.array([1, -1] * 10, dtype=np.int8), 1.0)
    assert at.detect_slid_pair(short, short, 0)[0] is None


def test_small_slide_scenario(rng):
    rep = at.slide_scenario(K625R, 20, 300, 0.73, rng)
    assert rep.detected + rep.inconclusive_planted == 20 and rep.missed == 0
    assert rep.false_matches == 0
    assert 28 < rep.mean_overlap < 42
    assert rep.lines()[0] == "planted pairs: 20"


def test_full_coverage_scenario(rng):
    rep = at.slide_scenario(K625R, 5, 5, 1.0, rng)
    assert rep.detected == 5 and rep.mean_overlap == 65


def test_recovery_thm_425(rng):
    prop = get_property("thm-4.2.5")
    for seed in range(3):
        key = ks.construct_weak("Thm-4.2.5", np.random.default_rng(seed))
        rec = at.recover_key_bits(prop, key, ShortTermKey.random(rng), int(random_ivs(rng, 1)[0]))
        assert rec.correct == 8 and len(rec.equations) == 8
        assert all(rounds == (8 * k + 6, 8 * k + 8) for k, (rounds, _) in enumerate(rec.equations))


def test_recovery_needs_key_terms(rng):
    with pytest.raises(ValueError):
        at.recover_key_bits(get_property("thm-4.2.1"), PUBLISHED_KEYS["788"], ShortTermKey(3), 5)


def test_solver_single_bit():
    rank, solved = at._solve([((1,), 1), ((1, 2), 0), ((3, 4), 1)])
    assert rank == 3 and solved == {1: 1, 2: 1}


def test_distinguisher_rejects_bad_d(rng):
    with pytest.raises(ValueError):
        at.onebit_attack_demo(K625R, 19, 18, -7, 100, rng)
    with pytest.raises(ValueError):
        at.onebit_attack_demo(K625R, 127, 120, 0, 100, rng)
    eight = LinearProperty("x", 8, (K625R.alpha,), (K625R.alpha,))
    with pytest.raises(ValueError):
        at.onebit_attack_demo(K625R, 19, 18, -6, 100, rng, prop=eight)


def test_distinguisher_d_minus_7():
    rng = np.random.default_rng(0)
    key = ks.construct_weak("AppC-1a:D8=12", rng, {"alpha": 30})
    rep = at.onebit_attack_demo(key, 1, 1, -7, 20_000, rng)
    assert rep.advantage_sigma >= 3
    assert rep.llr_slid > rep.llr_random


def test_alpha_property_thm411():
    prop, bias = at.alpha_property(K625R, 6, np.random.default_rng(1))
    # alpha = 26 sits one lane above 25, so the IV term moves to round 5
    assert prop.input_mask == (26,) and prop.aux_terms == (("f", 5),)
    assert abs(bias) > 2 ** -6
