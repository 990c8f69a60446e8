"""Bilinear group arithmetic over BLS12-381 (type-3, no G2 -> G1 isomorphism).

Elements are petrelic objects; scalars are plain ints reduced mod ``ORDER``.
All scheme code goes through :func:`pair`, :func:`mul`, :func:`div` and
:func:`power` so that :func:`count_ops` can tally the work an operation does.

Canonical encodings (fixed width)::

    Scalar  32 bytes   big-endian, value < ORDER
    G1      48 bytes   standard BLS12-381 compressed form (flag bits 0x80
                       compressed, 0x40 infinity, 0x20 larger-y)
    G2      97 bytes   RELIC compressed form; identity is 97 zero bytes
    GT     384 bytes   RELIC compressed cyclotomic form
"""

from __future__ import annotations

import hashlib
import secrets
from collections import Counter
from contextlib import contextmanager
from contextvars import ContextVar
from random import Random

from petrelic.multiplicative.pairing import (
    G1,
    G2,
    GT,
    G1Element,
    G2Element,
    GTElement,
)

from .errors import DecodeError

CURVE_ID = "BLS12-381"

#: prime order of G1, G2 and GT
ORDER = int(G1.order())
#: base field modulus of BLS12-381
FIELD_MODULUS = int(
    "1a0111ea397fe69a4b1ba7b6434bacd764774b84f38512bf6730d2a0f6b0f6241eabfffeb153ffffb9feffffffffaaab",
    16,
)

SCALAR_BYTES = 32
G1_BYTES = 48
G2_BYTES = 97
GT_BYTES = 384

SCALAR_BITS = 8 * SCALAR_BYTES
G1_BITS = 8 * G1_BYTES

H_SCALAR_TAG = b"BBSSTAR-H"
H_G1_TAG = b"BBSSTAR-KI"

_HALF_FIELD = (FIELD_MODULUS - 1) // 2
_SQRT_EXP = (FIELD_MODULUS + 1) // 4  # field modulus is 3 mod 4

# ---------------------------------------------------------------- op tally

_tally: ContextVar[Counter | None] = ContextVar("bbsrep_op_tally", default=None)


@contextmanager
def count_ops():
    """Count group operations performed inside the ``with`` block.

    Yields a :class:`collections.Counter` with keys ``pairing``, ``mul``
    (products and quotients of two elements), ``exp`` (raising an element to
    a scalar) and ``hash_to_g1``.
    """
    tally: Counter = Counter()
    token = _tally.set(tally)
    try:
        yield tally
    finally:
        _tally.reset(token)


def _bump(kind: str) -> None:
    tally = _tally.get()
    if tally is not None:
        tally[kind] += 1


# ---------------------------------------------------------------- elements


def g1_generator() -> G1Element:
    return G1.generator()


def g2_generator() -> G2Element:
    return G2.generator()


def g1_identity() -> G1Element:
    return G1.neutral_element()


def gt_identity() -> GTElement:
    return GT.unity()


def is_identity(elem) -> bool:
    if isinstance(elem, GTElement):
        return elem.is_unity()
    return elem.is_neutral_element()


def pair(a: G1Element, b: G2Element) -> GTElement:
    if not isinstance(a, G1Element) or not isinstance(b, G2Element):
        raise TypeError("pairing takes (G1, G2) elements")
    _bump("pairing")
    return a.pair(b)


def mul(a, b):
    _bump("mul")
    return a * b


def div(a, b):
    _bump("mul")
    return a / b


def power(a, k: int):
    _bump("exp")
    return a ** (k % ORDER)


# ---------------------------------------------------------------- scalars


def scalar_inv(x: int) -> int:
    x %= ORDER
    if x == 0:
        raise ZeroDivisionError("zero has no inverse mod the group order")
    return pow(x, -1, ORDER)


def scalar_to_bytes(x: int) -> bytes:
    if not 0 <= x < ORDER:
        raise ValueError("scalar out of range")
    return x.to_bytes(SCALAR_BYTES, "big")


def scalar_from_bytes(data: bytes) -> int:
    if len(data) != SCALAR_BYTES:
        raise DecodeError(f"scalar must be {SCALAR_BYTES} bytes, got {len(data)}")
    x = int.from_bytes(data, "big")
    if x >= ORDER:
        raise DecodeError("scalar not reduced mod the group order")
    return x


def default_rng() -> Random:
    return secrets.SystemRandom()


def random_scalar(rng: Random | None = None, nonzero: bool = False) -> int:
    rng = rng or default_rng()
    return rng.randrange(1 if nonzero else 0, ORDER)


def random_g1_nonidentity(rng: Random | None = None) -> G1Element:
    return G1.generator() ** random_scalar(rng, nonzero=True)


# ---------------------------------------------------------------- hashing


def hash_to_scalar(data: bytes, tag: bytes = H_SCALAR_TAG) -> int:
    """SHA-512 over a length-prefixed domain tag and ``data``, reduced mod ORDER."""
    digest = hashlib.sha512(len(tag).to_bytes(1, "big") + tag + data).digest()
    return int.from_bytes(digest, "big") % ORDER


def hash_to_g1(label: bytes, tag: bytes = H_G1_TAG) -> G1Element:
    """Deterministically map ``label`` to a non-identity element of G1."""
    _bump("hash_to_g1")
    counter = 0
    while True:
        msg = tag + len(label).to_bytes(4, "big") + label
        if counter:
            msg += counter.to_bytes(4, "big")
        elem = G1.hash_to_point(msg)
        if not elem.is_neutral_element():
            return elem
        counter += 1


# ---------------------------------------------------------------- encodings


def encode_g1(elem: G1Element) -> bytes:
    if elem.is_neutral_element():
        return bytes([0xC0]) + bytes(G1_BYTES - 1)
    # RELIC's uncompressed form is 0x04 || x || y in normalized affine coordinates
    raw = elem.to_binary(compressed=False)
    out = bytearray(raw[1 : 1 + G1_BYTES])
    y = int.from_bytes(raw[1 + G1_BYTES :], "big")
    out[0] |= 0x80
    if y > _HALF_FIELD:
        out[0] |= 0x20
    return bytes(out)


def decode_g1(data: bytes) -> G1Element:
    if len(data) != G1_BYTES:
        raise DecodeError(f"G1 encoding must be {G1_BYTES} bytes, got {len(data)}")
    flags = data[0] & 0xE0
    if not flags & 0x80:
        raise DecodeError("G1 encoding lacks the compression flag")
    body = bytes([data[0] & 0x1F]) + data[1:]
    if flags & 0x40:
        if flags & 0x20 or any(body):
            raise DecodeError("non-canonical encoding of the G1 identity")
        return G1.neutral_element()
    x = int.from_bytes(body, "big")
    if x >= FIELD_MODULUS:
        raise DecodeError("G1 x-coordinate not reduced")
    rhs = (pow(x, 3, FIELD_MODULUS) + 4) % FIELD_MODULUS
    y = pow(rhs, _SQRT_EXP, FIELD_MODULUS)
    if y * y % FIELD_MODULUS != rhs:
        raise DecodeError("G1 x-coordinate is not on the curve")
    if (y > _HALF_FIELD) != bool(flags & 0x20):
        y = FIELD_MODULUS - y
    raw = b"\x04" + x.to_bytes(G1_BYTES, "big") + y.to_bytes(G1_BYTES, "big")
    elem = G1Element.from_binary(raw)
    if not elem.is_valid() or not (elem ** ORDER).is_neutral_element():
        raise DecodeError("G1 point outside the prime-order subgroup")
    return elem


def encode_g2(elem: G2Element) -> bytes:
    if elem.is_neutral_element():
        return bytes(G2_BYTES)
    raw = elem.to_binary()
    assert len(raw) == G2_BYTES
    return raw


def decode_g2(data: bytes) -> G2Element:
    if len(data) != G2_BYTES:
        raise DecodeError(f"G2 encoding must be {G2_BYTES} bytes, got {len(data)}")
    if not any(data):
        return G2.neutral_element()
    if data[0] not in (2, 3):
        raise DecodeError("G2 encoding has an invalid prefix byte")
    try:
        elem = G2Element.from_binary(data)
    except Exception as exc:  # RELIC raises a variety of types
        raise DecodeError(f"G2 decoding failed: {exc}") from exc
    if (
        not elem.is_valid()
        or elem.to_binary() != data
        or not (elem ** ORDER).is_neutral_element()
    ):
        raise DecodeError("G2 bytes are not a canonical subgroup element")
    return elem


def encode_gt(elem: GTElement) -> bytes:
    raw = elem.to_binary()
    assert len(raw) == GT_BYTES
    return raw


def decode_gt(data: bytes) -> GTElement:
    if len(data) != GT_BYTES:
        raise DecodeError(f"GT encoding must be {GT_BYTES} bytes, got {len(data)}")
    try:
        elem = GTElement.from_binary(data)
    except Exception as exc:
        raise DecodeError(f"GT decoding failed: {exc}") from exc
    if elem.to_binary() != data:
        raise DecodeError("non-canonical GT encoding")
    return elem
