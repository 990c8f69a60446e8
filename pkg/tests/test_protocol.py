import dataclasses
from fractions import Fraction
from random import Random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bbsrep import protocol as proto
from bbsrep import group as grp
from bbsrep import star, wire
from bbsrep.errors import DecodeError, DuplicateMember, NoIntervalKey, Revoked, UnknownMember
from bbsrep.reputation import NEGATIVE, POSITIVE, Feedback


@pytest.fixture
def world():
    rng = Random(404)
    as_, store = proto.initialize_scheme(proto.SchemeParams(), rng)
    vs = {vid: proto.register_vehicle(as_, store, vid, rng) for vid in ("a", "b", "c")}
    return as_, store, vs


def _boost(store, vid, n, t=0):
    for _ in range(n):
        store.add_feedback(Feedback(vid, "seed", POSITIVE, t))
    store.aggregate(vid, t)


def test_scheme_params():
    p = proto.SchemeParams(psi=0.5)
    assert p.psi == Fraction(1, 2) and p.initial_score == 5
    with pytest.raises(ValueError):
        proto.SchemeParams(m=grp.ORDER)
    with pytest.raises(ValueError):
        proto.SchemeParams(curve="BN254")


def test_initialize_independent_keys():
    a, _ = proto.initialize_scheme(rng=Random(1))
    b, _ = proto.initialize_scheme(rng=Random(2))
    assert a.gmsk != b.gmsk
    assert "gamma" not in repr(a)


def test_register(world):
    as_, store, vs = world
    assert store.score("a") == 5
    assert vs["a"].gpk == as_.gpk
    assert as_.registry.key_of("a") == vs["a"].gsk
    with pytest.raises(DuplicateMember):
        proto.register_vehicle(as_, store, "a")
    proto.revoke(as_, store, "b")
    with pytest.raises(Revoked):
        proto.register_vehicle(as_, store, "b")


def test_retrieval_levels(world):
    as_, store, vs = world
    _boost(store, "a", 3)
    out = proto.request_reputation(vs["a"], as_, store, now=1)
    assert out.status == "ok"
    assert out.levels == ((1, 8), (2, 6))
    assert vs["a"].key_for(1).level == 8
    assert vs["a"].key_for(2).level == 6


def test_retrieval_reuses_covered_intervals(world):
    as_, store, vs = world
    _boost(store, "a", 3)
    proto.request_reputation(vs["a"], as_, store, now=1)
    before = len(as_.issued)
    out = proto.request_reputation(vs["a"], as_, store, now=2)
    assert out.levels[0] == (2, 6)
    assert len(as_.issued) == before + 1


def test_default_score_yields_one_level(world):
    as_, store, vs = world
    out = proto.request_reputation(vs["b"], as_, store, now=3)
    assert out.levels == ((3, 5),)


def test_revoked_vehicle_gets_nothing(world):
    as_, store, vs = world
    proto.revoke(as_, store, "c", now=0)
    before = dict(as_.issued.entries)
    out = proto.request_reputation(vs["c"], as_, store, now=1)
    assert out.status == "denied-revoked" and out.issued == 0
    assert as_.issued.entries == before
    with pytest.raises(UnknownMember):
        proto.revoke(as_, store, "nobody")


def test_tampered_batch_installs_nothing(world):
    as_, store, vs = world
    noise = grp.random_g1_nonidentity(Random(3))

    def corrupt(batch):
        raws = proto.decode_token_batch(batch)
        tokens = [star.RepUpdateToken.from_bytes(r) for r in raws]
        bad = [dataclasses.replace(t, rcert=t.rcert * noise) for t in tokens]
        return proto.encode_token_batch(bad)

    out = proto.request_reputation(vs["a"], as_, store, now=1, channel=corrupt)
    assert out.issued == out.discarded == 1 and out.installed == 0
    assert vs["a"].keys == {}
    out = proto.request_reputation(vs["a"], as_, store, now=1, channel=lambda b: b[:-3])
    assert out.installed == 0 and vs["a"].keys == {}


def test_request_replay_and_garbage(world):
    as_, store, vs = world
    req = proto.build_reputation_request(vs["a"], 4)
    assert proto.serve_reputation_request(as_, store, req, 4)[0] == "ok"
    assert proto.serve_reputation_request(as_, store, req, 4)[0] == "dropped-replay"
    assert proto.serve_reputation_request(as_, store, req, 5)[0] == "dropped-invalid"
    assert proto.serve_reputation_request(as_, store, b"\x03junk", 4)[0] == "dropped-invalid"


def test_broadcast_and_receive(world):
    as_, store, vs = world
    _boost(store, "a", 3)
    proto.request_reputation(vs["a"], as_, store, now=1)
    proto.request_reputation(vs["b"], as_, store, now=1)
    M = proto.make_announcement(b"accident", b"km 12")
    msg = proto.broadcast(vs["a"], M, 1)
    assert msg.sig.level == 8
    assert star.verify_star(M, msg.sig, as_.gpk)
    d = proto.receive(vs["b"], msg, 1)
    assert d.accepted and d.reason == proto.ACCEPTED and msg in vs["b"].inbox
    assert proto.receive(vs["b"], msg, 2).reason == proto.INTERVAL_MISMATCH
    strict = proto.AcceptancePolicy({b"accident": 9})
    assert proto.receive(vs["b"], msg, 1, strict).reason == proto.BELOW_POLICY
    inflated = proto.broadcast(vs["a"], M, 1, declare_level=9)
    assert proto.receive(vs["b"], inflated, 1).reason == proto.INVALID_SIGNATURE
    with pytest.raises(NoIntervalKey):
        proto.broadcast(vs["c"], M, 1)


def test_message_wire_roundtrip(world):
    as_, store, vs = world
    proto.request_reputation(vs["a"], as_, store, now=1)
    msg = proto.broadcast(vs["a"], proto.make_announcement(b"jam", b""), 1)
    assert proto.MessageTuple.from_bytes(msg.to_bytes()) == msg
    assert proto.message_category(msg.M) == b"jam"
    assert proto.message_category(b"") is None
    with pytest.raises(DecodeError):
        proto.MessageTuple.from_bytes(msg.to_bytes()[:-1])


def test_policy_validation():
    with pytest.raises(ValueError):
        proto.AcceptancePolicy({b"x": 0})
    with pytest.raises(ValueError):
        proto.AcceptancePolicy(default=0)
    with pytest.raises(ValueError):
        proto.AcceptancePolicy({b"x": 11}).check_range(10)
    assert proto.AcceptancePolicy({b"x": 4}).minimum_for(b"y") == 1


def _exchange(as_, store, vs, now=1):
    for v in vs.values():
        proto.request_reputation(v, as_, store, now=now)
    msg = proto.broadcast(vs["a"], b"\x00hello", now)
    assert proto.receive(vs["b"], msg, now).accepted
    assert proto.receive(vs["c"], msg, now).accepted
    return msg


def test_report_feedback(world):
    as_, store, vs = world
    msg = _exchange(as_, store, vs)
    ack = proto.report_feedback(vs["b"], msg, NEGATIVE, as_, store, 1)
    assert ack.status == "recorded" and ack.target == "a"
    ack2 = proto.report_feedback(vs["c"], msg, NEGATIVE, as_, store, 1)
    assert ack2.pseudonym != ack.pseudonym
    assert [f.value for f in store.feedback_entries()] == [NEGATIVE, NEGATIVE]
    assert store.aggregate("a", 1) == 1
    with pytest.raises(ValueError):
        proto.report_feedback(vs["b"], msg, NEGATIVE, as_, store, 1)


def test_forged_reporter_dropped(world):
    as_, store, vs = world
    msg = _exchange(as_, store, vs)
    report = proto.build_feedback_report(vs["b"], msg, NEGATIVE, 1)
    forged = dataclasses.replace(report, f=POSITIVE)
    log_before = list(store.log)
    ack = proto.serve_feedback_report(as_, store, forged.to_bytes(), 1)
    assert ack.status == "dropped-reporter"
    assert store.log == log_before
    assert proto.serve_feedback_report(as_, store, report.to_bytes(), 2).status == "dropped-reporter"
    assert proto.serve_feedback_report(as_, store, b"\x06\x00\x00\x00\x00", 1).status == "dropped-reporter"


def test_feedback_on_bogus_message_dropped(world):
    as_, store, vs = world
    msg = _exchange(as_, store, vs)
    bogus = proto.MessageTuple(b"\x00other", msg.sig)
    report = proto.build_feedback_report(vs["b"], bogus, NEGATIVE, 1)
    assert proto.serve_feedback_report(as_, store, report.to_bytes(), 1).status == "dropped-unopenable"


def test_revocation_is_passive(world):
    as_, store, vs = world
    _boost(store, "a", 5)
    out = proto.request_reputation(vs["a"], as_, store, now=1)
    horizon = max(i for i, _ in out.levels)
    proto.revoke(as_, store, "a", now=1)
    assert proto.request_reputation(vs["a"], as_, store, now=2).status == "denied-revoked"
    msg = proto.broadcast(vs["a"], b"\x00still here", horizon)
    assert proto.receive(vs["b"], msg, horizon).reason != proto.INVALID_SIGNATURE
    with pytest.raises(NoIntervalKey):
        proto.broadcast(vs["a"], b"\x00gone", horizon + 1)


def test_frame_errors():
    with pytest.raises(DecodeError):
        wire.unframe(b"\x01\x00")
    with pytest.raises(DecodeError):
        wire.unframe(b"\x09\x00\x00\x00\x00")
    with pytest.raises(DecodeError):
        wire.unframe(wire.frame(wire.Kind.TOKEN_BATCH, b"ab"), wire.Kind.MESSAGE_TUPLE)
    with pytest.raises(DecodeError):
        wire.unframe(wire.frame(wire.Kind.TOKEN_BATCH, b"ab") + b"c")
    with pytest.raises(DecodeError):
        wire.unpack_bytes(b"\x00\x00\x00\x05abc")
    assert wire.unpack_bytes(wire.pack_bytes(b"xyz") + b"!") == (b"xyz", 7)


@settings(max_examples=8, deadline=None)
@given(boost=st.integers(0, 5), now=st.integers(0, 50), seed=st.integers(0, 1000))
def test_end_to_end_levels_match_scores(boost, now, seed):
    rng = Random(seed)
    as_, store = proto.initialize_scheme(rng=rng)
    a = proto.register_vehicle(as_, store, "a", rng)
    b = proto.register_vehicle(as_, store, "b", rng)
    _boost(store, "a", boost)
    out = proto.request_reputation(a, as_, store, now)
    proto.request_reputation(b, as_, store, now)
    assert out.levels[0] == (now, store.score("a"))
    msg = proto.broadcast(a, b"\x00x", now)
    d = proto.receive(b, msg, now)
    assert d.accepted and d.level == store.score("a")
