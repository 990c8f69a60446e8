"""Framing for messages exchanged between vehicles and servers.

Every frame is ``kind (1 byte) || body length (4 bytes, big-endian) || body``.
Body layouts are defined next to the types in :mod:`bbsrep.protocol`.
"""

from __future__ import annotations

from enum import IntEnum

from .errors import DecodeError

HEADER_BYTES = 5


class Kind(IntEnum):
    REGISTRATION_REQUEST = 0x01
    REGISTRATION_RESPONSE = 0x02
    REPUTATION_REQUEST = 0x03
    TOKEN_BATCH = 0x04
    MESSAGE_TUPLE = 0x05
    FEEDBACK_REPORT = 0x06


def frame(kind: Kind, body: bytes) -> bytes:
    return bytes([kind]) + len(body).to_bytes(4, "big") + body


def unframe(data: bytes, expect: Kind | None = None) -> tuple[Kind, bytes]:
    if len(data) < HEADER_BYTES:
        raise DecodeError("frame shorter than its header")
    try:
        kind = Kind(data[0])
    except ValueError:
        raise DecodeError(f"unknown frame kind 0x{data[0]:02x}") from None
    if expect is not None and kind != expect:
        raise DecodeError(f"expected a {expect.name} frame, got {kind.name}")
    length = int.from_bytes(data[1:HEADER_BYTES], "big")
    body = data[HEADER_BYTES:]
    if len(body) != length:
        raise DecodeError(f"frame declares {length} body bytes but carries {len(body)}")
    return kind, body


def pack_bytes(data: bytes) -> bytes:
    return len(data).to_bytes(4, "big") + data


def unpack_bytes(data: bytes, pos: int = 0) -> tuple[bytes, int]:
    if len(data) < pos + 4:
        raise DecodeError("truncated length prefix")
    n = int.from_bytes(data[pos : pos + 4], "big")
    end = pos + 4 + n
    if len(data) < end:
        raise DecodeError("truncated length-prefixed field")
    return data[pos + 4 : end], end
