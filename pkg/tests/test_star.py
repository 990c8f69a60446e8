import dataclasses
from random import Random

import pytest

from bbsrep import bbs, star
from bbsrep import group as grp
from bbsrep.errors import (
    DecodeError,
    InvalidSignature,
    LevelOutOfRange,
    TamperedToken,
    TokenConflict,
    UnknownMember,
    UnknownSigner,
)


def _issue(s, mid, i, r):
    token = star.issue_update_token(s["gmsk"], s["registry"], mid, i, r, s["log"])
    return token, star.apply_update(s["members"][mid], token, s["gpk"])


def test_interval_base_deterministic_and_distinct():
    assert star.derive_interval_base(3) == star.derive_interval_base(3)
    bases = {grp.encode_g1(star.derive_interval_base(i)) for i in range(200)}
    assert len(bases) == 200
    assert not star.derive_interval_base(0).is_neutral_element()


def test_interval_label_bounds():
    assert star.interval_label(1) == b"\x00\x00\x00\x01"
    for bad in (-1, star.MAX_INTERVAL + 1):
        with pytest.raises(ValueError):
            star.interval_label(bad)


def test_derived_key_shifts_first_generator(scheme):
    gpk = scheme["gpk"]
    assert star.derive_group_public_key(gpk, 4, 0).g1 == gpk.g1
    k = star.derive_interval_base(4)
    for r in range(10):
        a = star.derive_group_public_key(gpk, 4, r)
        b = star.derive_group_public_key(gpk, 4, r + 1)
        assert b.g1 == a.g1 * k
        assert (b.g2, b.u, b.v, b.h, b.w) == (gpk.g2, gpk.u, gpk.v, gpk.h, gpk.w)


@pytest.mark.parametrize("r", [-1, 11, 10**80])
def test_derived_key_level_range(scheme, r):
    with pytest.raises(LevelOutOfRange):
        star.derive_group_public_key(scheme["gpk"], 1, r)


def test_zero_level_token_is_identity(fresh_scheme):
    token, key = _issue(fresh_scheme, "a", 2, 0)
    assert token.rcert.is_neutral_element()
    assert key.A == fresh_scheme["members"]["a"].A
    assert grp.encode_g1(key.A) == grp.encode_g1(fresh_scheme["members"]["a"].A)


def test_token_check(fresh_scheme):
    s = fresh_scheme
    token = star.issue_update_token(s["gmsk"], s["registry"], "a", 5, 7, s["log"])
    assert star.check_update_token(token, s["members"]["a"].x, s["gpk"])
    assert not star.check_update_token(token, s["members"]["b"].x, s["gpk"])
    assert not star.check_update_token(dataclasses.replace(token, level=8), s["members"]["a"].x, s["gpk"])
    assert not star.check_update_token(dataclasses.replace(token, interval=6), s["members"]["a"].x, s["gpk"])


def test_tampered_tokens_fail(fresh_scheme, rng):
    s = fresh_scheme
    x = s["members"]["a"].x
    token = star.issue_update_token(s["gmsk"], s["registry"], "a", 1, 6, s["log"])
    for _ in range(25):
        bad = dataclasses.replace(token, rcert=token.rcert * grp.random_g1_nonidentity(rng))
        assert not star.check_update_token(bad, x, s["gpk"])


def test_apply_update_relation(fresh_scheme):
    s = fresh_scheme
    for r in (1, 5, 10):
        _, key = _issue(s, "b", 10 + r, r)
        gx = (s["gmsk"].gamma + key.x) % grp.ORDER
        assert key.A**gx == s["gpk"].g1 * star.level_base(10 + r, r)
        assert (key.interval, key.level) == (10 + r, r)


def test_apply_update_refuses_tampered(fresh_scheme, rng):
    s = fresh_scheme
    gsk = s["members"]["c"]
    before = grp.encode_g1(gsk.A)
    token = star.issue_update_token(s["gmsk"], s["registry"], "c", 3, 4, s["log"])
    bad = dataclasses.replace(token, rcert=token.rcert * grp.random_g1_nonidentity(rng))
    with pytest.raises(TamperedToken):
        star.apply_update(gsk, bad, s["gpk"])
    assert grp.encode_g1(gsk.A) == before


def test_issue_idempotent_and_conflicts(fresh_scheme):
    s = fresh_scheme
    t1 = star.issue_update_token(s["gmsk"], s["registry"], "a", 9, 3, s["log"])
    t2 = star.issue_update_token(s["gmsk"], s["registry"], "a", 9, 3, s["log"])
    assert t1 == t2 and len(s["log"]) == 1
    with pytest.raises(TokenConflict):
        star.issue_update_token(s["gmsk"], s["registry"], "a", 9, 4, s["log"])
    with pytest.raises(UnknownMember):
        star.issue_update_token(s["gmsk"], s["registry"], "zz", 9, 3, s["log"])
    assert s["log"].horizon("a") == 9 and s["log"].horizon("b") is None


def test_star_sign_verify_levels(fresh_scheme, rng):
    s = fresh_scheme
    _, k8 = _issue(s, "a", 1, 8)
    _, k6 = _issue(s, "a", 2, 6)
    for key in (k8, k6):
        sig = star.sign_star(b"hello", key, s["gpk"], rng)
        assert (sig.interval, sig.level) == (key.interval, key.level)
        assert star.verify_star(b"hello", sig, s["gpk"])
        assert not bbs.verify(b"hello", sig.inner, s["gpk"])
        assert not star.verify_star(b"hello", dataclasses.replace(sig, level=key.level - 1), s["gpk"])
        assert not star.verify_star(b"hello", dataclasses.replace(sig, interval=key.interval + 1), s["gpk"])
        assert not star.verify_star(b"hellp", sig, s["gpk"])


def test_out_of_range_level_is_invalid(fresh_scheme, rng):
    s = fresh_scheme
    _, key = _issue(s, "a", 1, 3)
    sig = star.sign_star(b"m", key, s["gpk"], rng)
    assert not star.verify_star(b"m", dataclasses.replace(sig, level=11), s["gpk"])
    assert not star.verify_star(b"m", dataclasses.replace(sig, interval=-2), s["gpk"])


def test_open_star(fresh_scheme, rng):
    s = fresh_scheme
    for n, mid in enumerate(("a", "b", "c")):
        _, key = _issue(s, mid, 7, n + 2)
        sig = star.sign_star(b"report", key, s["gpk"], rng)
        assert star.open_star(b"report", sig, s["gmsk"], s["gpk"], s["log"]) == mid
    base = star.base_interval_key(s["members"]["b"], 30)
    sig = star.sign_star(b"zero", base, s["gpk"], rng)
    assert star.open_star(b"zero", sig, s["gmsk"], s["gpk"], s["log"], s["registry"]) == "b"
    with pytest.raises(UnknownSigner):
        star.open_star(b"zero", sig, s["gmsk"], s["gpk"], s["log"])
    with pytest.raises(InvalidSignature):
        star.open_star(b"zerp", sig, s["gmsk"], s["gpk"], s["log"], s["registry"])


def test_open_star_unissued_key(fresh_scheme, rng):
    s = fresh_scheme
    # a key derived outside the issuance log cannot be attributed
    ghost = bbs.join(s["gmsk"], bbs.MemberRegistry(), "ghost", rng)
    rcert = star.level_base(4, 2) ** grp.scalar_inv(s["gmsk"].gamma + ghost.x)
    key = star.apply_update(ghost, star.RepUpdateToken(4, 2, rcert), s["gpk"])
    sig = star.sign_star(b"m", key, s["gpk"], rng)
    assert star.verify_star(b"m", sig, s["gpk"])
    with pytest.raises(UnknownSigner):
        star.open_star(b"m", sig, s["gmsk"], s["gpk"], s["log"], s["registry"])


def test_wire_roundtrips(fresh_scheme, rng):
    s = fresh_scheme
    token, key = _issue(s, "a", 12, 5)
    assert len(token.to_bytes()) == star.RepUpdateToken.SIZE
    assert star.RepUpdateToken.from_bytes(token.to_bytes()) == token
    sig = star.sign_star(b"w", key, s["gpk"], rng)
    data = sig.to_bytes()
    assert len(data) == star.StarSignature.SIZE == 372
    assert star.StarSignature.from_bytes(data) == sig
    with pytest.raises(DecodeError):
        star.StarSignature.from_bytes(data + b"\x00")
    with pytest.raises(DecodeError):
        star.RepUpdateToken.from_bytes(token.to_bytes()[:-1])


def test_seeded_signing_reproducible(fresh_scheme):
    key = star.base_interval_key(fresh_scheme["members"]["a"], 1)
    a = star.sign_star(b"m", key, fresh_scheme["gpk"], Random(5))
    b = star.sign_star(b"m", key, fresh_scheme["gpk"], Random(5))
    assert a.to_bytes() == b.to_bytes()
