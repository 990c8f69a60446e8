"""BBS*: group signatures publicly bound to an (interval, reputation level) pair.

Each interval ``i`` has a public base ``k_i = H'(i)`` in G1. A member holding
level ``r`` in interval ``i`` signs as a plain BBS member under the shifted
key ``gpk_ir`` whose first generator is ``g1 * k_i^r``. The manager moves a
member onto that key by publishing ``rcert = (k_i^r)^(1/(gamma + x))``, which
the member multiplies into ``A``.

Note on domain separation: ``(i, r)`` is not hashed into the challenge. The
binding comes entirely from the shifted generator, which enters the
verification equation through ``e(T3, w) / e(g1 * k_i^r, g2)``.

Wire formats::

    StarSignature    BBS signature (336 B) || i (4 B, big-endian) || r (32 B)
    RepUpdateToken   i (4 B, big-endian) || r (32 B) || rcert (48 B, G1)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from random import Random

from . import bbs
from . import group as grp
from .bbs import BbsSignature, GroupManagerSecret, GroupPublicKey, MemberRegistry, MemberSecretKey
from .errors import (
    DecodeError,
    InvalidSignature,
    LevelOutOfRange,
    TamperedToken,
    TokenConflict,
    UnknownMember,
    UnknownSigner,
)
from .group import G1_BYTES, ORDER, SCALAR_BYTES

INTERVAL_BYTES = 4
MAX_INTERVAL = 2**32 - 1
DEFAULT_MAX_LEVEL = 10


def interval_label(i: int) -> bytes:
    if not 0 <= i <= MAX_INTERVAL:
        raise ValueError(f"interval index {i} does not fit in 4 bytes")
    return i.to_bytes(INTERVAL_BYTES, "big")


def check_level(r: int, m: int = DEFAULT_MAX_LEVEL) -> int:
    if not isinstance(r, int) or isinstance(r, bool) or not 0 <= r <= m:
        raise LevelOutOfRange(f"reputation level {r!r} outside 0..{m}")
    return r


@dataclass(frozen=True)
class RepUpdateToken:
    interval: int
    level: int
    rcert: object

    SIZE = INTERVAL_BYTES + SCALAR_BYTES + G1_BYTES

    def to_bytes(self) -> bytes:
        return interval_label(self.interval) + grp.scalar_to_bytes(self.level) + grp.encode_g1(self.rcert)

    @classmethod
    def from_bytes(cls, data: bytes) -> "RepUpdateToken":
        if len(data) != cls.SIZE:
            raise DecodeError(f"update token must be {cls.SIZE} bytes, got {len(data)}")
        i = int.from_bytes(data[:INTERVAL_BYTES], "big")
        r = grp.scalar_from_bytes(data[INTERVAL_BYTES : INTERVAL_BYTES + SCALAR_BYTES])
        return cls(i, r, grp.decode_g1(data[INTERVAL_BYTES + SCALAR_BYTES :]))


@dataclass(frozen=True)
class IntervalMemberKey:
    A: object  # A_b * rcert
    x: int
    interval: int
    level: int

    def __repr__(self):
        return f"IntervalMemberKey(interval={self.interval}, level={self.level})"

    def member_key(self) -> MemberSecretKey:
        return MemberSecretKey(self.A, self.x)


@dataclass(frozen=True)
class StarSignature:
    inner: BbsSignature
    interval: int
    level: int

    SIZE = BbsSignature.SIZE + INTERVAL_BYTES + SCALAR_BYTES

    def to_bytes(self) -> bytes:
        return self.inner.to_bytes() + interval_label(self.interval) + grp.scalar_to_bytes(self.level)

    @classmethod
    def from_bytes(cls, data: bytes) -> "StarSignature":
        if len(data) != cls.SIZE:
            raise DecodeError(f"star signature must be {cls.SIZE} bytes, got {len(data)}")
        n = BbsSignature.SIZE
        inner = BbsSignature.from_bytes(data[:n])
        i = int.from_bytes(data[n : n + INTERVAL_BYTES], "big")
        r = grp.scalar_from_bytes(data[n + INTERVAL_BYTES :])
        return cls(inner, i, r)


@dataclass(frozen=True)
class IssuanceEntry:
    level: int
    token: RepUpdateToken
    A_interval: object


@dataclass
class IssuanceLog:
    """Every token the manager has issued, keyed by (interval, member-id)."""

    entries: dict = field(default_factory=dict)
    _by_key: dict = field(default_factory=dict, repr=False)  # (i, encoded A_bi) -> member-id

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, interval: int, member_id):
        return self.entries.get((interval, member_id))

    def record(self, member_id, entry: IssuanceEntry) -> None:
        i = entry.token.interval
        self.entries[(i, member_id)] = entry
        self._by_key[(i, grp.encode_g1(entry.A_interval))] = member_id

    def resolve(self, interval: int, A_interval):
        return self._by_key.get((interval, grp.encode_g1(A_interval)))

    def horizon(self, member_id):
        """Last interval for which ``member_id`` holds a token, or None."""
        issued = [i for (i, mid) in self.entries if mid == member_id]
        return max(issued) if issued else None


def derive_interval_base(i: int):
    """k_i: hash of the 4-byte interval label onto G1 (never the identity)."""
    return grp.hash_to_g1(interval_label(i))


def level_base(i: int, r: int):
    """R_i = k_i^r."""
    return grp.power(derive_interval_base(i), r)


def derive_group_public_key(gpk: GroupPublicKey, i: int, r: int, m: int = DEFAULT_MAX_LEVEL) -> GroupPublicKey:
    check_level(r, m)
    return bbs.with_first_generator(gpk, grp.mul(gpk.g1, level_base(i, r)))


def issue_update_token(
    gmsk: GroupManagerSecret,
    registry: MemberRegistry,
    member_id,
    i: int,
    r: int,
    log: IssuanceLog,
    m: int = DEFAULT_MAX_LEVEL,
) -> RepUpdateToken:
    """Compute rcert = (k_i^r)^(1/(gamma + x_b)) and record it.

    Re-issuing an identical (i, member, r) token returns the recorded one;
    asking for a different level in an already-covered interval raises
    TokenConflict.
    """
    check_level(r, m)
    if member_id not in registry:
        raise UnknownMember(member_id)
    prior = log.get(i, member_id)
    if prior is not None:
        if prior.level != r:
            raise TokenConflict(f"member {member_id!r} already holds level {prior.level} for interval {i}")
        return prior.token
    key = registry.key_of(member_id)
    rcert = grp.power(level_base(i, r), grp.scalar_inv(gmsk.gamma + key.x))
    token = RepUpdateToken(i, r, rcert)
    log.record(member_id, IssuanceEntry(r, token, grp.mul(key.A, rcert)))
    return token


def check_update_token(token: RepUpdateToken, x: int, gpk: GroupPublicKey) -> bool:
    """e(rcert, w * g2^x) == e(k_i^r, g2)."""
    try:
        if not 0 <= token.level < ORDER:
            return False
        lhs = grp.pair(token.rcert, grp.mul(gpk.w, grp.power(gpk.g2, x)))
        rhs = grp.pair(level_base(token.interval, token.level), gpk.g2)
    except (TypeError, ValueError, AttributeError):
        return False
    return lhs == rhs


def apply_update(gsk: MemberSecretKey, token: RepUpdateToken, gpk: GroupPublicKey) -> IntervalMemberKey:
    if not check_update_token(token, gsk.x, gpk):
        raise TamperedToken(f"update token for interval {token.interval} failed its pairing check")
    return IntervalMemberKey(grp.mul(gsk.A, token.rcert), gsk.x, token.interval, token.level)


def base_interval_key(gsk: MemberSecretKey, i: int) -> IntervalMemberKey:
    """The level-0 key for interval ``i``; k_i^0 = 1 so it is gsk itself."""
    return IntervalMemberKey(gsk.A, gsk.x, i, 0)


def sign_star(M: bytes, key: IntervalMemberKey, gpk: GroupPublicKey, rng: Random | None = None) -> StarSignature:
    # BBS signing never reads the first generator, so gpk_ir is not formed
    inner = bbs.sign(M, key.member_key(), gpk, rng)
    return StarSignature(inner, key.interval, key.level)


def verify_star(M: bytes, sig: StarSignature, gpk: GroupPublicKey, m: int = DEFAULT_MAX_LEVEL) -> bool:
    try:
        shifted = derive_group_public_key(gpk, sig.interval, sig.level, m)
    except (ValueError, TypeError, AttributeError, LevelOutOfRange):
        return False
    return bbs.verify(M, sig.inner, shifted)


def open_star(
    M: bytes,
    sig: StarSignature,
    gmsk: GroupManagerSecret,
    gpk: GroupPublicKey,
    log: IssuanceLog,
    registry: MemberRegistry | None = None,
    m: int = DEFAULT_MAX_LEVEL,
):
    """Identify the signer of a valid star signature.

    Level-0 signatures are made with the unmodified member key and resolve
    through ``registry``; all others through the issuance log entries for
    the signature's interval.
    """
    if not verify_star(M, sig, gpk, m):
        raise InvalidSignature("refusing to open an invalid signature")
    A = bbs.recover_A(sig.inner, gmsk)
    member_id = log.resolve(sig.interval, A)
    if member_id is None and sig.level == 0 and registry is not None:
        member_id = registry.lookup_A(A)
    if member_id is None:
        raise UnknownSigner(f"no issued key for interval {sig.interval} matches the signer")
    return member_id
