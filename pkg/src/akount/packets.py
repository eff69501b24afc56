"""Aggregated packet wire format.

A packet is a 32-bit little-endian header followed by up to 127 little-endian
64-bit body words::

    bits 31..8  final destination PE (24 bits)
    bit  7      type: 1 = HEAVY ((kmer, count) word pairs), 0 = NORMAL (one kmer per word)
    bits 6..0   body length in 64-bit words
"""
from __future__ import annotations

import struct

import numpy as np

NORMAL = 0
HEAVY = 1
HEADER_BYTES = 4
WORD_BYTES = 8
MAX_DEST = (1 << 24) - 1
MAX_WORDS = (1 << 7) - 1

_U32 = struct.Struct("<I")


class CorruptPacketError(ValueError):
    pass


def pack_header(dest: int, kind: int, count: int) -> int:
    if not 0 <= dest <= MAX_DEST:
        raise ValueError(f"destination {dest} does not fit in 24 bits")
    if kind not in (NORMAL, HEAVY):
        raise ValueError(f"bad packet type {kind}")
    if not 0 <= count <= MAX_WORDS:
        raise ValueError(f"element count {count} does not fit in 7 bits")
    return (dest << 8) | (kind << 7) | count


def unpack_header(header: int) -> tuple[int, int, int]:
    return header >> 8, (header >> 7) & 1, header & 0x7F


class Packet:
    __slots__ = ("header", "body")

    def __init__(self, header: int, body: np.ndarray):
        self.header = header
        self.body = body

    @classmethod
    def build(cls, dest: int, kind: int, body) -> Packet:
        body = np.ascontiguousarray(body, dtype=np.uint64)
        if kind == HEAVY and len(body) % 2:
            raise ValueError("HEAVY packet body must hold whole (kmer, count) pairs")
        return cls(pack_header(dest, kind, len(body)), body)

    @property
    def dest(self) -> int:
        return self.header >> 8

    @property
    def kind(self) -> int:
        return (self.header >> 7) & 1

    @property
    def count(self) -> int:
        return self.header & 0x7F

    @property
    def nbytes(self) -> int:
        return HEADER_BYTES + WORD_BYTES * len(self.body)

    def validate(self) -> None:
        if self.count != len(self.body):
            raise CorruptPacketError(
                f"header declares {self.count} words, body holds {len(self.body)}")
        if self.kind == HEAVY and self.count % 2:
            raise CorruptPacketError("HEAVY packet with odd word count")

    def encode(self) -> bytes:
        return _U32.pack(self.header) + self.body.astype("<u8", copy=False).tobytes()

    @classmethod
    def decode(cls, data: bytes, offset: int = 0) -> tuple[Packet, int]:
        """Decode one packet at ``offset``; returns the packet and the next offset."""
        if len(data) - offset < HEADER_BYTES:
            raise CorruptPacketError("truncated header")
        (header,) = _U32.unpack_from(data, offset)
        count = header & 0x7F
        start = offset + HEADER_BYTES
        end = start + count * WORD_BYTES
        if end > len(data):
            raise CorruptPacketError(f"header declares {count} words past end of buffer")
        body = np.frombuffer(data, dtype="<u8", count=count, offset=start).astype(np.uint64)
        pkt = cls(header, body)
        pkt.validate()
        return pkt, end

    def __eq__(self, other) -> bool:
        return (isinstance(other, Packet) and self.header == other.header
                and np.array_equal(self.body, other.body))

    def __repr__(self) -> str:
        kind = "HEAVY" if self.kind == HEAVY else "NORMAL"
        return f"Packet(dest={self.dest}, {kind}, words={self.body.tolist()})"


def encode_stream(packets) -> bytes:
    return b"".join(p.encode() for p in packets)


def decode_stream(data: bytes) -> list[Packet]:
    out = []
    offset = 0
    while offset < len(data):
        pkt, offset = Packet.decode(data, offset)
        out.append(pkt)
    return out
