"""Broadcast message types and the 9-byte wire codec.

Every payload fits nine bytes.  Byte 0 carries the type tag in the high
nibble and per-type flags in the low nibble; bytes 1..8 hold the fields.

Layouts (all multi-byte integers big-endian):

  ID            b1=id
  ID_RELAY      b1=id b2-3=nonce b4=relay_id b5-6=relay_nonce
                flag 0x1 = no relay slot filled yet
                (16-bit nonces: at a thousand robots sharing 256 ids the
                joint id+nonce birthday collision has to stay negligible)
  REPAIR        b1=id b2..b8=up to 7 neighbor ids, flags = id count
  DEGREE        b1=id b2=neighbor count
  TOKEN         flags = token bits 67..64, b1..b8 = token bits 63..0
                (68-bit election token: tag nibble + 68 bits fill 9 bytes)
  AXES          b1=origin_id b2=x b3=y b4=low_id_border
  BORDER_COUNT  b1=id b2-3=count b4-5=c1 b6-7=c2 b8+flags=c3
                (c3 = flags<<8 | b8, 12 bits; count/c1/c2 are 16 bits)
  BORDER_COUNT_NC   same layout; processed by corner robots only
  TOTALS        same layout; count field carries the perimeter total
  COORD         b1=id b2-3=x b4-5=y
  SYNC          b1-2=target phase index
"""

from __future__ import annotations

MSG_ID = 0
MSG_ID_RELAY = 1
MSG_REPAIR = 2
MSG_DEGREE = 3
MSG_TOKEN = 4
MSG_AXES = 5
MSG_BORDER_COUNT = 6
MSG_BORDER_COUNT_NC = 7
MSG_TOTALS = 8
MSG_COORD = 9
MSG_SYNC = 10

KIND_NAMES = [
    "id", "id_relay", "repair", "degree", "token", "axes",
    "border_count", "border_count_nc", "totals", "coord", "sync",
]

PAYLOAD_BYTES = 9
TOKEN_BITS = 68
MAX_REPAIR_IDS = 7
MAX_C3 = 0xFFF


class Msg:
    """One broadcast payload.  Field meaning depends on ``kind``:

    id:        a=id
    id_relay:  a=id b=nonce c=relay_id d=relay_nonce (c is None: empty slot)
    repair:    a=id ids=neighbor ids
    degree:    a=id b=count
    token:     a=token
    axes:      a=origin_id b=x c=y d=low_id_border
    border_count / border_count_nc / totals: a=id b=count ids=(c1, c2, c3)
    coord:     a=id b=x c=y
    sync:      a=target phase
    """

    __slots__ = ("kind", "a", "b", "c", "d", "ids")

    def __init__(self, kind, a=0, b=0, c=0, d=0, ids=()):
        self.kind = kind
        self.a = a
        self.b = b
        self.c = c
        self.d = d
        self.ids = ids

    def __repr__(self):
        name = KIND_NAMES[self.kind]
        return f"Msg({name}, a={self.a}, b={self.b}, c={self.c}, d={self.d}, ids={self.ids})"

    def __eq__(self, other):
        if not isinstance(other, Msg):
            return NotImplemented
        return (self.kind, self.a, self.b, self.c, self.d, tuple(self.ids)) == (
            other.kind, other.a, other.b, other.c, other.d, tuple(other.ids))

    def __hash__(self):
        return hash((self.kind, self.a, self.b, self.c, self.d, tuple(self.ids)))


def _check_u8(value, what):
    if not 0 <= value <= 0xFF:
        raise ValueError(f"{what} out of byte range: {value}")
    return value


def _check_u16(value, what):
    if not 0 <= value <= 0xFFFF:
        raise ValueError(f"{what} out of 16-bit range: {value}")
    return value


def encode(msg: Msg) -> bytes:
    """Pack a message into its 9-byte wire form."""
    k = msg.kind
    buf = bytearray(PAYLOAD_BYTES)
    if k == MSG_ID:
        buf[0] = k << 4
        buf[1] = _check_u8(msg.a, "id")
    elif k == MSG_ID_RELAY:
        no_relay = msg.c is None
        buf[0] = (k << 4) | (1 if no_relay else 0)
        buf[1] = _check_u8(msg.a, "id")
        buf[2:4] = _check_u16(msg.b, "nonce").to_bytes(2, "big")
        if not no_relay:
            buf[4] = _check_u8(msg.c, "relay id")
            buf[5:7] = _check_u16(msg.d, "relay nonce").to_bytes(2, "big")
    elif k == MSG_REPAIR:
        ids = tuple(msg.ids)
        if len(ids) > MAX_REPAIR_IDS:
            raise ValueError(f"repair message carries at most {MAX_REPAIR_IDS} ids")
        buf[0] = (k << 4) | len(ids)
        buf[1] = _check_u8(msg.a, "id")
        for i, v in enumerate(ids):
            buf[2 + i] = _check_u8(v, "neighbor id")
    elif k == MSG_DEGREE:
        buf[0] = k << 4
        buf[1] = _check_u8(msg.a, "id")
        buf[2] = _check_u8(msg.b, "degree")
    elif k == MSG_TOKEN:
        token = msg.a
        if not 0 <= token < (1 << TOKEN_BITS):
            raise ValueError(f"token out of {TOKEN_BITS}-bit range")
        buf[0] = (k << 4) | (token >> 64)
        buf[1:9] = (token & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "big")
    elif k == MSG_AXES:
        buf[0] = k << 4
        buf[1] = _check_u8(msg.a, "origin id")
        buf[2] = _check_u8(msg.b, "x")
        buf[3] = _check_u8(msg.c, "y")
        buf[4] = _check_u8(msg.d, "border id")
    elif k in (MSG_BORDER_COUNT, MSG_BORDER_COUNT_NC, MSG_TOTALS):
        c1, c2, c3 = msg.ids
        if not 0 <= c3 <= MAX_C3:
            raise ValueError(f"c3 out of 12-bit range: {c3}")
        buf[0] = (k << 4) | (c3 >> 8)
        buf[1] = _check_u8(msg.a, "id")
        buf[2:4] = _check_u16(msg.b, "count").to_bytes(2, "big")
        buf[4:6] = _check_u16(c1, "c1").to_bytes(2, "big")
        buf[6:8] = _check_u16(c2, "c2").to_bytes(2, "big")
        buf[8] = c3 & 0xFF
    elif k == MSG_COORD:
        buf[0] = k << 4
        buf[1] = _check_u8(msg.a, "id")
        buf[2:4] = _check_u16(msg.b, "x").to_bytes(2, "big")
        buf[4:6] = _check_u16(msg.c, "y").to_bytes(2, "big")
    elif k == MSG_SYNC:
        buf[0] = k << 4
        buf[1:3] = _check_u16(msg.a, "phase").to_bytes(2, "big")
    else:
        raise ValueError(f"unknown message kind {k}")
    return bytes(buf)


def decode(data: bytes) -> Msg:
    """Unpack a 9-byte wire payload; inverse of :func:`encode`."""
    if len(data) != PAYLOAD_BYTES:
        raise ValueError(f"payload must be {PAYLOAD_BYTES} bytes, got {len(data)}")
    kind = data[0] >> 4
    flags = data[0] & 0xF
    if kind == MSG_ID:
        return Msg(MSG_ID, a=data[1])
    if kind == MSG_ID_RELAY:
        nonce = int.from_bytes(data[2:4], "big")
        if flags & 1:
            return Msg(MSG_ID_RELAY, a=data[1], b=nonce, c=None, d=None)
        return Msg(MSG_ID_RELAY, a=data[1], b=nonce, c=data[4],
                   d=int.from_bytes(data[5:7], "big"))
    if kind == MSG_REPAIR:
        n = flags
        if n > MAX_REPAIR_IDS:
            raise ValueError(f"repair id count {n} exceeds {MAX_REPAIR_IDS}")
        return Msg(MSG_REPAIR, a=data[1], ids=tuple(data[2:2 + n]))
    if kind == MSG_DEGREE:
        return Msg(MSG_DEGREE, a=data[1], b=data[2])
    if kind == MSG_TOKEN:
        token = (flags << 64) | int.from_bytes(data[1:9], "big")
        return Msg(MSG_TOKEN, a=token)
    if kind == MSG_AXES:
        return Msg(MSG_AXES, a=data[1], b=data[2], c=data[3], d=data[4])
    if kind in (MSG_BORDER_COUNT, MSG_BORDER_COUNT_NC, MSG_TOTALS):
        count = int.from_bytes(data[2:4], "big")
        c1 = int.from_bytes(data[4:6], "big")
        c2 = int.from_bytes(data[6:8], "big")
        c3 = (flags << 8) | data[8]
        return Msg(kind, a=data[1], b=count, ids=(c1, c2, c3))
    if kind == MSG_COORD:
        return Msg(MSG_COORD, a=data[1],
                   b=int.from_bytes(data[2:4], "big"),
                   c=int.from_bytes(data[4:6], "big"))
    if kind == MSG_SYNC:
        return Msg(MSG_SYNC, a=int.from_bytes(data[1:3], "big"))
    raise ValueError(f"unknown message tag {kind}")
