import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from t310 import keyspace as ks
from t310.cipher import NAMED_KEYS, PUBLISHED_KEYS, LongTermKey

CONSTRUCTIBLE = []
for _tag in ks.CLASS_BY_TAG:
    try:
        ks.construct_weak(_tag, np.random.default_rng(1))
    except ks.InfeasibleClass:
        continue
    CONSTRUCTIBLE.append(_tag)


def test_published_keys():
    for name in ("729", "788", "706"):
        assert ks.validate_kt1(PUBLISHED_KEYS[name]).valid, name
    assert ks.validate_kt1(NAMED_KEYS["625r"]).valid


def test_printed_625_fails_with_reason():
    rep = ks.validate_kt1(PUBLISHED_KEYS["625"])
    assert not rep.valid and rep.violations
    assert rep.lines()[0] == "KT1: invalid"


def test_d1_violation():
    k = PUBLISHED_KEYS["788"]
    bad = LongTermKey((5, *k.D[1:]), k.P, k.alpha)
    rep = ks.validate_kt1(bad)
    assert not rep.valid


def test_fresh_linear_rank():
    for name in ("625r", "729", "788", "706"):
        assert ks.fresh_linear_rank(NAMED_KEYS[name]) == 9


def test_sampler_keys_are_kt1(rng):
    seen_d5 = set()
    for _ in range(200):
        k = ks.random_kt1(rng)
        rep = ks.validate_kt1(k)
        assert rep.valid and rep.witness is not None
        assert k.P[5] == k.D[7] and k.P[12] == k.D[6]
        seen_d5.add(k.D[4])
    assert len(seen_d5) >= 5


def test_chain_sampler_has_chain(rng):
    for _ in range(100):
        k = ks.random_chain_key(rng)
        assert ks.d_chain(k.D) is not None
        assert k.P[5] == k.D[7] and k.P[12] == k.D[6]


def test_kt1_d_vectors_subset():
    chain = ks.all_chain_d_vectors()
    kt1 = ks.all_kt1_d_vectors()
    assert len(chain) == math.factorial(8)
    assert set(kt1) <= set(chain) and 0 < len(kt1) < len(chain)


def test_classify_reference_keys():
    tags = {str(t).split()[0] for t in ks.classify_weak(NAMED_KEYS["625r"])}
    assert "Thm-4.1.1" in tags
    t788 = [t for t in ks.classify_weak(PUBLISHED_KEYS["788"]) if t.cid == "Thm-4.2.1"]
    assert t788 and t788[0].subcase == "A"
    assert dict(t788[0].params)["D7"] == 12 and dict(t788[0].params)["D9"] == 16
    assert any(t.cid == "Thm-4.2.2" for t in ks.classify_weak(PUBLISHED_KEYS["706"]))


@settings(max_examples=40)
@given(st.sampled_from(CONSTRUCTIBLE), st.integers(0, 2**32 - 1))
def test_construct_then_classify(tag, seed):
    key = ks.construct_weak(tag, np.random.default_rng(seed))
    assert ks.validate_kt1(key).valid
    assert ks.matches_class(key, tag)
    assert tag in {f"{t.cid}:{t.subcase}" if t.subcase else t.cid for t in ks.classify_weak(key)}


def test_construct_appc_4a():
    key = ks.construct_weak("AppC-4a:8<->12", np.random.default_rng(3))
    assert {key.D[6], key.D[7]} == {8, 12}


def test_thm_421_p20_32_infeasible(rng):
    with pytest.raises(ks.InfeasibleClass) as err:
        ks.construct_weak("Thm-4.2.1:A", rng, {"P20": 32})
    assert err.value.condition == "D-chain"


def test_overrides_pin_values(rng):
    key = ks.construct_weak("Thm-4.1.1", rng, {"alpha": 30})
    assert key.alpha == 30


def test_infeasible_class_proportion_zero(rng):
    infeasible = [t for t in ks.CLASS_BY_TAG if t not in CONSTRUCTIBLE]
    assert infeasible
    est = ks.estimate_class_proportion(infeasible[0], 2000, rng)
    assert est.hits == 0 and est.log2 == float("-inf") and est.low == 0.0


def test_unknown_tag():
    with pytest.raises(KeyError):
        ks.find_class("AppC-99")


@given(st.integers(0, 500), st.integers(1, 500))
def test_wilson_contains_point(hits, n):
    hits = min(hits, n)
    lo, hi = ks.wilson_interval(hits, n)
    assert 0 <= lo <= hits / n <= hi <= 1


def test_kt2_report_lines():
    rep = ks.validate_kt2(PUBLISHED_KEYS["788"])
    assert rep.lines()[0].startswith("KT2:")
