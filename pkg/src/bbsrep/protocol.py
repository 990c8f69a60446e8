"""The announcement scheme: administrative server, vehicles and the flows
between them (registration, reputation retrieval, broadcast, feedback,
revocation).

Receivers never see vehicle identities: :func:`decide` is a function of the
message tuple, the clock, the policy and the group public key only.

Body layouts (inside :mod:`bbsrep.wire` frames)::

    REGISTRATION_REQUEST   vehicle-id (UTF-8)
    REGISTRATION_RESPONSE  A (48) || x (32) || gpk
    REPUTATION_REQUEST     len-prefixed payload || star signature
                           payload = b"REPREQ" || interval (4) || nonce (16)
    TOKEN_BATCH            count (2) || count * token (84 each)
    MESSAGE_TUPLE          len-prefixed M || star signature
    FEEDBACK_REPORT        f (1 byte, 0x01 or 0xff) || MESSAGE_TUPLE body
                           || reporter star signature
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from random import Random
from typing import Callable

from . import bbs, star
from . import group as grp
from .bbs import GroupManagerSecret, GroupPublicKey, MemberRegistry, MemberSecretKey
from .errors import (
    DecodeError,
    DuplicateMember,
    InvalidSignature,
    NoIntervalKey,
    Revoked,
    TamperedToken,
    UnknownMember,
    UnknownSigner,
)
from .reputation import NEGATIVE, POSITIVE, DiscountParams, Feedback, FeedbackStore, discounted_scores
from .star import IntervalMemberKey, IssuanceLog, RepUpdateToken, StarSignature
from .wire import Kind, frame, pack_bytes, unframe, unpack_bytes

log = logging.getLogger(__name__)

REQUEST_PREFIX = b"REPREQ"
NONCE_BYTES = 16

ACCEPTED = "accepted"
INTERVAL_MISMATCH = "interval-mismatch"
INVALID_SIGNATURE = "invalid-signature"
BELOW_POLICY = "below-policy"
REJECT_REASONS = (INTERVAL_MISMATCH, INVALID_SIGNATURE, BELOW_POLICY)


@dataclass(frozen=True)
class SchemeParams:
    m: int = 10
    psi: Fraction = Fraction(1, 2)
    psi_td: Fraction = Fraction(4)
    interval_length: Fraction = Fraction(1)
    curve: str = grp.CURVE_ID

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 1:
            raise ValueError("m must be a positive integer")
        if self.m >= grp.ORDER:
            raise ValueError("m must be smaller than the group order")
        if self.curve != grp.CURVE_ID:
            raise ValueError(f"unsupported curve {self.curve!r}; only {grp.CURVE_ID} is available")
        discount = DiscountParams(self.psi, self.psi_td, self.interval_length)
        object.__setattr__(self, "psi", discount.psi)
        object.__setattr__(self, "psi_td", discount.psi_td)
        object.__setattr__(self, "interval_length", discount.interval_length)
        object.__setattr__(self, "discount", discount)

    @property
    def initial_score(self) -> int:
        return self.m // 2


# ---------------------------------------------------------------- messages


def make_announcement(category: bytes, body: bytes) -> bytes:
    """M = len(category) (1 byte) || category || body."""
    if len(category) > 255:
        raise ValueError("category tag longer than 255 bytes")
    return bytes([len(category)]) + category + body


def message_category(M: bytes) -> bytes | None:
    if not M or len(M) < 1 + M[0]:
        return None
    return bytes(M[1 : 1 + M[0]])


@dataclass(frozen=True)
class MessageTuple:
    M: bytes
    sig: StarSignature

    def body(self) -> bytes:
        return pack_bytes(self.M) + self.sig.to_bytes()

    def to_bytes(self) -> bytes:
        return frame(Kind.MESSAGE_TUPLE, self.body())

    @classmethod
    def from_body(cls, body: bytes) -> "MessageTuple":
        M, pos = unpack_bytes(body)
        sig_bytes = body[pos:]
        return cls(M, StarSignature.from_bytes(sig_bytes))

    @classmethod
    def from_bytes(cls, data: bytes) -> "MessageTuple":
        _, body = unframe(data, Kind.MESSAGE_TUPLE)
        return cls.from_body(body)


@dataclass(frozen=True)
class FeedbackReport:
    f: int
    msg: MessageTuple
    reporter_sig: StarSignature

    @staticmethod
    def signed_bytes(f: int, msg: MessageTuple) -> bytes:
        if f not in (POSITIVE, NEGATIVE):
            raise ValueError("feedback must be +1 or -1")
        return bytes([f & 0xFF]) + msg.body()

    def to_bytes(self) -> bytes:
        return frame(Kind.FEEDBACK_REPORT, self.signed_bytes(self.f, self.msg) + self.reporter_sig.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "FeedbackReport":
        _, body = unframe(data, Kind.FEEDBACK_REPORT)
        if len(body) < 1 + StarSignature.SIZE:
            raise DecodeError("feedback report too short")
        f = {0x01: POSITIVE, 0xFF: NEGATIVE}.get(body[0])
        if f is None:
            raise DecodeError("feedback byte must be 0x01 or 0xff")
        msg = MessageTuple.from_body(body[1 : -StarSignature.SIZE])
        return cls(f, msg, StarSignature.from_bytes(body[-StarSignature.SIZE :]))


def encode_token_batch(tokens: list[RepUpdateToken]) -> bytes:
    return frame(Kind.TOKEN_BATCH, len(tokens).to_bytes(2, "big") + b"".join(t.to_bytes() for t in tokens))


def decode_token_batch(data: bytes) -> list[bytes]:
    """Split a batch into raw token encodings; decoding each is the receiver's job."""
    _, body = unframe(data, Kind.TOKEN_BATCH)
    n = int.from_bytes(body[:2], "big")
    size = RepUpdateToken.SIZE
    if len(body) != 2 + n * size:
        raise DecodeError("token batch length does not match its count")
    return [body[2 + k * size : 2 + (k + 1) * size] for k in range(n)]


def pseudonym(sig: StarSignature) -> str:
    return hashlib.sha256(sig.to_bytes()).hexdigest()[:16]


# ---------------------------------------------------------------- policy


@dataclass(frozen=True)
class AcceptancePolicy:
    """Minimum reputation level per message category (level 0 never suffices)."""

    minimums: dict = field(default_factory=dict)  # category bytes -> level
    default: int = 1

    def __post_init__(self):
        for level in [self.default, *self.minimums.values()]:
            if not isinstance(level, int) or level < 1:
                raise ValueError("policy minimums must be integers >= 1")

    def check_range(self, m: int) -> None:
        if any(level > m for level in [self.default, *self.minimums.values()]):
            raise ValueError(f"policy minimum exceeds the top level {m}")

    def minimum_for(self, category: bytes | None) -> int:
        return self.minimums.get(category, self.default)


@dataclass(frozen=True)
class Decision:
    accepted: bool
    reason: str
    interval: int | None = None
    level: int | None = None


def decide(msg: MessageTuple, now: int, policy: AcceptancePolicy, gpk: GroupPublicKey, m: int) -> Decision:
    sig = msg.sig
    if sig.interval != now:
        return Decision(False, INTERVAL_MISMATCH, sig.interval, sig.level)
    if not star.verify_star(msg.M, sig, gpk, m):
        return Decision(False, INVALID_SIGNATURE, sig.interval, sig.level)
    if sig.level < policy.minimum_for(message_category(msg.M)):
        return Decision(False, BELOW_POLICY, sig.interval, sig.level)
    return Decision(True, ACCEPTED, sig.interval, sig.level)


# ---------------------------------------------------------------- entities


@dataclass
class AdminServer:
    params: SchemeParams
    gpk: GroupPublicKey
    gmsk: GroupManagerSecret
    registry: MemberRegistry = field(default_factory=MemberRegistry)
    issued: IssuanceLog = field(default_factory=IssuanceLog)
    revoked: dict = field(default_factory=dict)  # vehicle-id -> interval of revocation
    seen_nonces: dict = field(default_factory=dict)  # interval -> set of nonces
    rng: Random | None = None

    def __repr__(self):
        return f"AdminServer(members={len(self.registry)}, issued={len(self.issued)}, revoked={sorted(self.revoked)})"


@dataclass
class VehicleState:
    vehicle_id: str
    gpk: GroupPublicKey
    gsk: MemberSecretKey
    params: SchemeParams
    policy: AcceptancePolicy = field(default_factory=AcceptancePolicy)
    keys: dict = field(default_factory=dict)  # interval -> IntervalMemberKey
    inbox: list = field(default_factory=list)  # accepted MessageTuples awaiting feedback
    rng: Random | None = None

    def __repr__(self):
        return f"VehicleState({self.vehicle_id!r}, intervals={sorted(self.keys)})"

    def key_for(self, interval: int) -> IntervalMemberKey:
        try:
            return self.keys[interval]
        except KeyError:
            raise NoIntervalKey(f"{self.vehicle_id} holds no key for interval {interval}") from None


@dataclass(frozen=True)
class RetrievalOutcome:
    status: str  # ok | denied-revoked | dropped-invalid | dropped-replay | dropped-unopenable
    issued: int = 0
    installed: int = 0
    discarded: int = 0
    levels: tuple = ()  # (interval, level) pairs installed


@dataclass(frozen=True)
class FeedbackAck:
    status: str  # recorded | dropped-reporter | dropped-unopenable
    target: str | None = None
    pseudonym: str | None = None


def initialize_scheme(params: SchemeParams | None = None, rng: Random | None = None) -> tuple[AdminServer, FeedbackStore]:
    params = params or SchemeParams()
    gpk, gmsk = bbs.keygen(rng)
    return AdminServer(params, gpk, gmsk, rng=rng), FeedbackStore(m=params.m)


def register_vehicle(
    as_: AdminServer,
    store: FeedbackStore,
    vehicle_id: str,
    rng: Random | None = None,
    policy: AcceptancePolicy | None = None,
    now: int = 0,
) -> VehicleState:
    """Join a vehicle inside the trusted registration environment."""
    if vehicle_id in as_.revoked:
        raise Revoked(f"{vehicle_id} is revoked")
    if vehicle_id in as_.registry:
        raise DuplicateMember(f"{vehicle_id} is already registered")
    _, body = unframe(frame(Kind.REGISTRATION_REQUEST, vehicle_id.encode()), Kind.REGISTRATION_REQUEST)
    gsk = bbs.join(as_.gmsk, as_.registry, body.decode(), as_.rng)
    store.register(vehicle_id, as_.params.initial_score, now)
    response = frame(
        Kind.REGISTRATION_RESPONSE,
        grp.encode_g1(gsk.A) + grp.scalar_to_bytes(gsk.x) + as_.gpk.to_bytes(),
    )
    _, body = unframe(response, Kind.REGISTRATION_RESPONSE)
    A = grp.decode_g1(body[: grp.G1_BYTES])
    x = grp.scalar_from_bytes(body[grp.G1_BYTES : grp.G1_BYTES + grp.SCALAR_BYTES])
    gpk = GroupPublicKey.from_bytes(body[grp.G1_BYTES + grp.SCALAR_BYTES :])
    policy = policy or AcceptancePolicy()
    policy.check_range(as_.params.m)
    return VehicleState(vehicle_id, gpk, MemberSecretKey(A, x), as_.params, policy, rng=rng)


def build_reputation_request(v: VehicleState, now: int) -> bytes:
    nonce = (v.rng or grp.default_rng()).getrandbits(8 * NONCE_BYTES).to_bytes(NONCE_BYTES, "big")
    payload = REQUEST_PREFIX + star.interval_label(now) + nonce
    sig = star.sign_star(payload, star.base_interval_key(v.gsk, now), v.gpk, v.rng)
    return frame(Kind.REPUTATION_REQUEST, pack_bytes(payload) + sig.to_bytes())


def serve_reputation_request(as_: AdminServer, store: FeedbackStore, request: bytes, now: int) -> tuple[str, bytes | None]:
    """AS side of retrieval. Returns (status, token batch frame or None)."""
    try:
        _, body = unframe(request, Kind.REPUTATION_REQUEST)
        payload, pos = unpack_bytes(body)
        sig = StarSignature.from_bytes(body[pos:])
    except DecodeError:
        return "dropped-invalid", None
    expected_head = REQUEST_PREFIX + star.interval_label(now)
    if (
        len(payload) != len(expected_head) + NONCE_BYTES
        or not payload.startswith(expected_head)
        or sig.interval != now
        or sig.level != 0
    ):
        return "dropped-invalid", None
    try:
        vehicle_id = star.open_star(payload, sig, as_.gmsk, as_.gpk, as_.issued, as_.registry, as_.params.m)
    except InvalidSignature:
        return "dropped-invalid", None
    except UnknownSigner:
        return "dropped-unopenable", None
    nonce = payload[len(expected_head) :]
    seen = as_.seen_nonces.setdefault(now, set())
    if nonce in seen:
        return "dropped-replay", None
    seen.add(nonce)
    if vehicle_id in as_.revoked:
        return "denied-revoked", None

    score = store.score(vehicle_id)
    tokens = []
    for j, level in discounted_scores(score, now, as_.params.discount, as_.params.m):
        prior = as_.issued.get(j, vehicle_id)
        if prior is not None:
            tokens.append(prior.token)  # intervals already covered keep their token
            continue
        tokens.append(
            star.issue_update_token(as_.gmsk, as_.registry, vehicle_id, j, level, as_.issued, as_.params.m)
        )
    return "ok", encode_token_batch(tokens)


def install_tokens(v: VehicleState, batch: bytes) -> tuple[list, int]:
    installed, discarded = [], 0
    for raw in decode_token_batch(batch):
        try:
            token = RepUpdateToken.from_bytes(raw)
            key = star.apply_update(v.gsk, token, v.gpk)
        except (DecodeError, TamperedToken) as exc:
            log.debug("%s discarded a token: %s", v.vehicle_id, exc)
            discarded += 1
            continue
        v.keys[key.interval] = key
        installed.append((key.interval, key.level))
    return installed, discarded


def request_reputation(
    v: VehicleState,
    as_: AdminServer,
    store: FeedbackStore,
    now: int,
    channel: Callable[[bytes], bytes] | None = None,
) -> RetrievalOutcome:
    """Full retrieval round trip over the public channel.

    ``channel`` sees the token batch frame in transit and may rewrite it.
    """
    status, batch = serve_reputation_request(as_, store, build_reputation_request(v, now), now)
    if batch is None:
        return RetrievalOutcome(status)
    issued = len(decode_token_batch(batch))
    if channel is not None:
        batch = channel(batch)
    try:
        installed, discarded = install_tokens(v, batch)
    except DecodeError:
        installed, discarded = [], issued
    return RetrievalOutcome(status, issued, len(installed), discarded, tuple(installed))


def broadcast(
    v: VehicleState,
    M: bytes,
    now: int,
    *,
    key_interval: int | None = None,
    declare_level: int | None = None,
    declare_interval: int | None = None,
) -> MessageTuple:
    """Sign ``M`` with the key for ``now``.

    The keyword hooks model misbehaving senders: signing with another
    interval's key, or relabelling the declared level/interval afterwards.
    """
    key = v.key_for(now if key_interval is None else key_interval)
    sig = star.sign_star(M, key, v.gpk, v.rng)
    if declare_level is not None:
        sig = replace(sig, level=declare_level)
    if declare_interval is not None:
        sig = replace(sig, interval=declare_interval)
    return MessageTuple(M, sig)


def receive(v: VehicleState, msg: MessageTuple, now: int, policy: AcceptancePolicy | None = None) -> Decision:
    decision = decide(msg, now, policy or v.policy, v.gpk, v.params.m)
    if decision.accepted:
        v.inbox.append(msg)
    return decision


def build_feedback_report(v: VehicleState, msg: MessageTuple, f: int, now: int) -> FeedbackReport:
    key = v.key_for(now)
    sig = star.sign_star(FeedbackReport.signed_bytes(f, msg), key, v.gpk, v.rng)
    return FeedbackReport(f, msg, sig)


def serve_feedback_report(as_: AdminServer, store: FeedbackStore, data: bytes, now: int) -> FeedbackAck:
    try:
        report = FeedbackReport.from_bytes(data)
    except DecodeError:
        return FeedbackAck("dropped-reporter")
    rsig = report.reporter_sig
    if (
        rsig.interval != now
        or rsig.level < 1
        or not star.verify_star(FeedbackReport.signed_bytes(report.f, report.msg), rsig, as_.gpk, as_.params.m)
    ):
        return FeedbackAck("dropped-reporter")
    try:
        target = star.open_star(
            report.msg.M, report.msg.sig, as_.gmsk, as_.gpk, as_.issued, as_.registry, as_.params.m
        )
    except (InvalidSignature, UnknownSigner) as exc:
        log.info("feedback dropped: %s", exc)
        return FeedbackAck("dropped-unopenable")
    nym = pseudonym(rsig)
    store.add_feedback(Feedback(target, nym, report.f, now))
    return FeedbackAck("recorded", target, nym)


def report_feedback(
    v: VehicleState,
    msg: MessageTuple,
    f: int,
    as_: AdminServer,
    store: FeedbackStore,
    now: int,
) -> FeedbackAck:
    if msg not in v.inbox:
        raise ValueError("can only report on a message tuple this vehicle accepted")
    report = build_feedback_report(v, msg, f, now)
    ack = serve_feedback_report(as_, store, report.to_bytes(), now)
    v.inbox.remove(msg)
    return ack


def revoke(as_: AdminServer, store: FeedbackStore, vehicle_id: str, now: int = 0) -> AdminServer:
    """Stop issuing tokens to ``vehicle_id``; keys it already holds lapse on their own."""
    if vehicle_id not in as_.registry:
        raise UnknownMember(vehicle_id)
    as_.revoked.setdefault(vehicle_id, now)
    return as_
