"""The BBS short group signature scheme: keygen, join, sign, verify, open."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from random import Random

from . import group as grp
from .errors import DecodeError, DuplicateMember, InvalidSignature, UnknownSigner
from .group import ORDER, G1_BYTES, G2_BYTES, SCALAR_BYTES

CHALLENGE_TAG = b"BBSSTAR-C"


@dataclass(frozen=True)
class GroupPublicKey:
    g1: object
    g2: object
    u: object
    v: object
    h: object
    w: object

    def to_bytes(self) -> bytes:
        return b"".join(
            [
                grp.encode_g1(self.g1),
                grp.encode_g2(self.g2),
                grp.encode_g1(self.u),
                grp.encode_g1(self.v),
                grp.encode_g1(self.h),
                grp.encode_g2(self.w),
            ]
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "GroupPublicKey":
        widths = [G1_BYTES, G2_BYTES, G1_BYTES, G1_BYTES, G1_BYTES, G2_BYTES]
        if len(data) != sum(widths):
            raise DecodeError("group public key has the wrong length")
        parts, pos = [], 0
        for n in widths:
            parts.append(data[pos : pos + n])
            pos += n
        g1, g2, u, v, h, w = parts
        return cls(
            grp.decode_g1(g1),
            grp.decode_g2(g2),
            grp.decode_g1(u),
            grp.decode_g1(v),
            grp.decode_g1(h),
            grp.decode_g2(w),
        )


@dataclass(frozen=True)
class GroupManagerSecret:
    gamma: int
    eta1: int
    eta2: int

    def __post_init__(self):
        for name in ("gamma", "eta1", "eta2"):
            if not 0 < getattr(self, name) < ORDER:
                raise ValueError(f"{name} must be a nonzero scalar")

    def __repr__(self):
        return "GroupManagerSecret(<redacted>)"

    def to_bytes(self) -> bytes:
        return b"".join(grp.scalar_to_bytes(s) for s in (self.gamma, self.eta1, self.eta2))

    @classmethod
    def from_bytes(cls, data: bytes) -> "GroupManagerSecret":
        if len(data) != 3 * SCALAR_BYTES:
            raise DecodeError("manager secret has the wrong length")
        vals = [grp.scalar_from_bytes(data[i : i + SCALAR_BYTES]) for i in range(0, len(data), SCALAR_BYTES)]
        try:
            return cls(*vals)
        except ValueError as exc:
            raise DecodeError(str(exc)) from exc


@dataclass(frozen=True)
class MemberSecretKey:
    A: object
    x: int

    def __repr__(self):
        return "MemberSecretKey(<redacted>)"


@dataclass(frozen=True)
class BbsSignature:
    T1: object
    T2: object
    T3: object
    c: int
    s_alpha: int
    s_beta: int
    s_x: int
    s_delta1: int
    s_delta2: int

    POINT_FIELDS = ("T1", "T2", "T3")
    SCALAR_FIELDS = ("c", "s_alpha", "s_beta", "s_x", "s_delta1", "s_delta2")
    SIZE = 3 * G1_BYTES + 6 * SCALAR_BYTES

    def to_bytes(self) -> bytes:
        points = [grp.encode_g1(getattr(self, f)) for f in self.POINT_FIELDS]
        scalars = [grp.scalar_to_bytes(getattr(self, f)) for f in self.SCALAR_FIELDS]
        return b"".join(points + scalars)

    @classmethod
    def from_bytes(cls, data: bytes) -> "BbsSignature":
        if len(data) != cls.SIZE:
            raise DecodeError(f"BBS signature must be {cls.SIZE} bytes, got {len(data)}")
        points = [grp.decode_g1(data[i * G1_BYTES : (i + 1) * G1_BYTES]) for i in range(3)]
        base = 3 * G1_BYTES
        scalars = [
            grp.scalar_from_bytes(data[base + i * SCALAR_BYTES : base + (i + 1) * SCALAR_BYTES])
            for i in range(6)
        ]
        return cls(*points, *scalars)


@dataclass
class MemberRegistry:
    """Manager-side record of every issued member key."""

    members: dict = field(default_factory=dict)  # member-id -> MemberSecretKey
    _by_A: dict = field(default_factory=dict, repr=False)  # encoded A -> member-id

    def __contains__(self, member_id) -> bool:
        return member_id in self.members

    def __len__(self) -> int:
        return len(self.members)

    def key_of(self, member_id) -> MemberSecretKey:
        return self.members[member_id]

    def lookup_A(self, A):
        return self._by_A.get(grp.encode_g1(A))

    def add(self, member_id, key: MemberSecretKey) -> None:
        if member_id in self.members:
            raise DuplicateMember(f"member {member_id!r} already joined")
        enc = grp.encode_g1(key.A)
        if enc in self._by_A:
            raise DuplicateMember("member key A already issued")
        self.members[member_id] = key
        self._by_A[enc] = member_id


def keygen(rng: Random | None = None) -> tuple[GroupPublicKey, GroupManagerSecret]:
    """Generate (gpk, gmsk) with u^eta1 = v^eta2 = h and w = g2^gamma."""
    g1, g2 = grp.g1_generator(), grp.g2_generator()
    h = grp.random_g1_nonidentity(rng)
    eta1 = grp.random_scalar(rng, nonzero=True)
    eta2 = grp.random_scalar(rng, nonzero=True)
    u = grp.power(h, grp.scalar_inv(eta1))
    v = grp.power(h, grp.scalar_inv(eta2))
    gamma = grp.random_scalar(rng, nonzero=True)
    w = grp.power(g2, gamma)
    return GroupPublicKey(g1, g2, u, v, h, w), GroupManagerSecret(gamma, eta1, eta2)


def join(gmsk: GroupManagerSecret, registry: MemberRegistry, member_id, rng: Random | None = None) -> MemberSecretKey:
    if member_id in registry:
        raise DuplicateMember(f"member {member_id!r} already joined")
    taken = {k.x for k in registry.members.values()}
    while True:
        x = grp.random_scalar(rng, nonzero=True)
        if x in taken or (gmsk.gamma + x) % ORDER == 0:
            continue
        break
    A = grp.power(grp.g1_generator(), grp.scalar_inv(gmsk.gamma + x))
    key = MemberSecretKey(A, x)
    registry.add(member_id, key)
    return key


def is_member_key(key: MemberSecretKey, gpk: GroupPublicKey) -> bool:
    """Check e(A, w * g2^x) == e(g1, g2)."""
    lhs = grp.pair(key.A, grp.mul(gpk.w, grp.power(gpk.g2, key.x)))
    return lhs == grp.pair(gpk.g1, gpk.g2)


def _challenge(M: bytes, T1, T2, T3, R1, R2, R3, R4, R5) -> int:
    parts = [len(M).to_bytes(8, "big"), M]
    parts += [grp.encode_g1(P) for P in (T1, T2, T3, R1, R2)]
    parts.append(grp.encode_gt(R3))
    parts += [grp.encode_g1(P) for P in (R4, R5)]
    return grp.hash_to_scalar(b"".join(parts), tag=CHALLENGE_TAG)


def sign(
    M: bytes,
    gsk: MemberSecretKey,
    gpk: GroupPublicKey,
    rng: Random | None = None,
    *,
    _alpha: int | None = None,
    _beta: int | None = None,
) -> BbsSignature:
    """Sign ``M``. ``_alpha``/``_beta`` pin the blinding exponents (tests only)."""
    u, v, h, w, g2 = gpk.u, gpk.v, gpk.h, gpk.w, gpk.g2
    alpha = grp.random_scalar(rng) if _alpha is None else _alpha % ORDER
    beta = grp.random_scalar(rng) if _beta is None else _beta % ORDER
    T1 = grp.power(u, alpha)
    T2 = grp.power(v, beta)
    T3 = grp.mul(gsk.A, grp.power(h, alpha + beta))

    r_alpha, r_beta, r_x, r_d1, r_d2 = (grp.random_scalar(rng) for _ in range(5))
    R1 = grp.power(u, r_alpha)
    R2 = grp.power(v, r_beta)
    R4 = grp.div(grp.power(T1, r_x), grp.power(u, r_d1))
    R5 = grp.div(grp.power(T2, r_x), grp.power(v, r_d2))
    R3 = grp.mul(
        grp.mul(
            grp.power(grp.pair(T3, g2), r_x),
            grp.power(grp.pair(h, w), -r_alpha - r_beta),
        ),
        grp.power(grp.pair(h, g2), -r_d1 - r_d2),
    )

    c = _challenge(M, T1, T2, T3, R1, R2, R3, R4, R5)
    x = gsk.x
    d1, d2 = x * alpha % ORDER, x * beta % ORDER
    return BbsSignature(
        T1,
        T2,
        T3,
        c,
        (r_alpha + c * alpha) % ORDER,
        (r_beta + c * beta) % ORDER,
        (r_x + c * x) % ORDER,
        (r_d1 + c * d1) % ORDER,
        (r_d2 + c * d2) % ORDER,
    )


def verify(M: bytes, sig: BbsSignature, gpk: GroupPublicKey) -> bool:
    """Return True iff ``sig`` is a valid signature on ``M`` under ``gpk``.

    Anything malformed (wrong types, out-of-range scalars, identity points)
    is reported as an invalid signature rather than raised.
    """
    try:
        return _verify(M, sig, gpk)
    except (TypeError, ValueError, AttributeError, DecodeError):
        return False


def _verify(M: bytes, sig: BbsSignature, gpk: GroupPublicKey) -> bool:
    if not isinstance(M, (bytes, bytearray)):
        return False
    scalars = [getattr(sig, f) for f in BbsSignature.SCALAR_FIELDS]
    if not all(isinstance(s, int) and 0 <= s < ORDER for s in scalars):
        return False
    c, s_alpha, s_beta, s_x, s_d1, s_d2 = scalars
    T1, T2, T3 = sig.T1, sig.T2, sig.T3
    u, v, h, w, g1, g2 = gpk.u, gpk.v, gpk.h, gpk.w, gpk.g1, gpk.g2

    R1 = grp.div(grp.power(u, s_alpha), grp.power(T1, c))
    R2 = grp.div(grp.power(v, s_beta), grp.power(T2, c))
    R4 = grp.div(grp.power(T1, s_x), grp.power(u, s_d1))
    # v here, not u as the original write-up has it: must mirror R5 in sign()
    R5 = grp.div(grp.power(T2, s_x), grp.power(v, s_d2))
    R3 = grp.mul(
        grp.mul(
            grp.power(grp.pair(T3, g2), s_x),
            grp.power(grp.pair(h, w), -s_alpha - s_beta),
        ),
        grp.mul(
            grp.power(grp.pair(h, g2), -s_d1 - s_d2),
            grp.power(grp.div(grp.pair(T3, w), grp.pair(g1, g2)), c),
        ),
    )
    return c == _challenge(bytes(M), T1, T2, T3, R1, R2, R3, R4, R5)


def recover_A(sig: BbsSignature, gmsk: GroupManagerSecret):
    """A = T3 / (T1^eta1 * T2^eta2), without any validity check."""
    blind = grp.mul(grp.power(sig.T1, gmsk.eta1), grp.power(sig.T2, gmsk.eta2))
    return grp.div(sig.T3, blind)


def open(M: bytes, sig: BbsSignature, gmsk: GroupManagerSecret, gpk: GroupPublicKey, registry: MemberRegistry):
    """Return ``(member_id, A)`` for a valid signature.

    Raises InvalidSignature when ``sig`` does not verify and UnknownSigner
    when it verifies but A is not in ``registry``.
    """
    if not verify(M, sig, gpk):
        raise InvalidSignature("refusing to open an invalid signature")
    A = recover_A(sig, gmsk)
    member_id = registry.lookup_A(A)
    if member_id is None:
        raise UnknownSigner("opened key is not in the member registry")
    return member_id, A


def with_first_generator(gpk: GroupPublicKey, g1) -> GroupPublicKey:
    return replace(gpk, g1=g1)
