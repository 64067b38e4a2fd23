import math
import os

import pytest

import pakemail


def test_five_word_cases_in_band():
    rows = pakemail.five_word_cases()
    assert [r["u"] for r in rows] == [32, 16]
    assert 37 <= rows[0]["log2_effort"] <= 39
    assert 31 <= rows[1]["log2_effort"] <= 33
    # Exact count of usable preimages, checked with Python's own integers.
    assert int(rows[0]["usable_preimages"]) == sum(math.comb(48, k) for k in range(1, 17))


def test_attack_cost_edges():
    half = pakemail.attack_cost(1, 0, 0)
    assert half["q"] == 0.5
    assert half["effort"] == pytest.approx(1.0)
    none = pakemail.attack_cost(80, 16, 48)
    assert none["t"] == 0 and none["q"] == 1.0 and none["log2_effort"] is None
    with pytest.raises(ValueError):
        pakemail.attack_cost(80, 16, 49)


def test_trustwords():
    f = "00" * 20
    assert len(set(pakemail.trustwords(f, f))) == 1
    a, b = os.urandom(20).hex(), os.urandom(20).hex()
    assert pakemail.trustwords(a, b) == pakemail.trustwords(b, a)
    assert len(pakemail.trustwords(a, b, 10)) == 10


@pytest.mark.parametrize("group", ["ristretto255", "toy23"])
def test_session_state_machine(group):
    a = pakemail.PakeSession.start("initiator", "a@x", "b@x", b"pw", group)
    b = pakemail.PakeSession.start("responder", "b@x", "a@x", b"pw", group)
    assert a.phase == "started"
    assert a.finish(b.outbound_message) == b.finish(a.outbound_message)
    xid = os.urandom(16)
    fa, fb = "11" * 20, "22" * 20
    ta = a.confirmation_tag(xid, fa, fb)
    tb = b.confirmation_tag(xid, fa, fb)
    ka, kb = a.verify_peer_tag(tb), b.verify_peer_tag(ta)
    assert ka is not None and ka == kb and a.phase == "confirmed"


def test_session_errors():
    a = pakemail.PakeSession.start("initiator", "a@x", "b@x", b"pw")
    with pytest.raises(pakemail.DecodeError):
        a.finish(b"\x00" * 5)
    with pytest.raises(pakemail.StateError):
        a.finish(b"\x00" * 32)
    with pytest.raises(ValueError):
        pakemail.PakeSession.start("initiator", "a@x", "b@x", b"")


@pytest.mark.parametrize("binding", ["confirmation", "secret"])
def test_loopback_handshake(binding):
    ok = pakemail.loopback_handshake("pw", "pw", binding=binding)
    assert ok["initiator"] == ok["responder"] == "success"
    assert ok["initiator_key"] == ok["responder_key"]
    bad = pakemail.loopback_handshake("pw", "pv", binding=binding)
    assert bad["initiator"] == bad["responder"] == "password-mismatch"
    assert bad["initiator_key"] is None


def test_harness_smoke():
    words = [f"w{i}" for i in range(4)]
    s = pakemail.run_adversary(words, "active-one-guess", 400, 7)
    assert abs(s["success_rate"] - 0.25) <= 3 * s["sigma"]
    g = pakemail.run_adversary(words, "guess-and-abort", 50, 7)
    assert g["honest_outcomes"].get("aborted-by-timeout") == 50
    assert g["history_gaps"] == 0
