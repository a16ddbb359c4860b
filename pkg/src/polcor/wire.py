"""Binary stream format for digitized detector samples.

A stream is a 38-byte header followed by fixed 73-byte records, no length
prefixes::

    header:  b"PCOR" | version u8 | party u8 | config digest (32 bytes, SHA-256)
    record:  bin_index u64 | tag u8 | port1 h, port1 v, port2 h, port2 v

Each port coefficient is a complex number stored as two float64 (re, im).
Everything is little-endian. The record layout is also the numpy dtype
:data:`RECORD_DTYPE`, so whole blocks convert with ``tobytes``/``frombuffer``.
"""
from __future__ import annotations

import struct

import numpy as np

from .optics import Party, SourceTag

MAGIC = b"PCOR"
VERSION = 1
HEADER_SIZE = 38
RECORD_SIZE = 73

RECORD_DTYPE = np.dtype([
    ("bin", "<u8"),
    ("tag", "u1"),
    ("p1h", "<c16"),
    ("p1v", "<c16"),
    ("p2h", "<c16"),
    ("p2v", "<c16"),
])
assert RECORD_DTYPE.itemsize == RECORD_SIZE

_HEADER = struct.Struct("<4sBB32s")

EXIT_OK = 0
EXIT_CONFIG_MISMATCH = 2
EXIT_FRAMING = 3
EXIT_STREAM_GAP = 4


class StreamError(Exception):
    """Base class for stream and correlator failures; ``exit_code`` maps to the CLI."""

    exit_code = 1
    code = "stream-error"


class FramingError(StreamError):
    exit_code = EXIT_FRAMING
    code = "framing"


class ShortReadError(FramingError):
    code = "short-read"


class BadMagicError(FramingError):
    code = "bad-magic"


class VersionMismatchError(FramingError):
    code = "version-mismatch"


class UnknownTagError(FramingError):
    code = "unknown-tag"


class ConfigMismatchError(StreamError):
    exit_code = EXIT_CONFIG_MISMATCH
    code = "config-mismatch"


class StreamGapError(StreamError):
    exit_code = EXIT_STREAM_GAP
    code = "stream-gap"


class DuplicatePartyError(StreamError):
    code = "duplicate-party"


def pack_header(party, digest: bytes) -> bytes:
    if len(digest) != 32:
        raise ValueError("config digest must be 32 bytes")
    return _HEADER.pack(MAGIC, VERSION, int(Party.parse(party)), digest)


def unpack_header(buf: bytes) -> tuple[Party, bytes]:
    if len(buf) < HEADER_SIZE:
        raise ShortReadError(f"header truncated: {len(buf)} of {HEADER_SIZE} bytes")
    magic, version, party, digest = _HEADER.unpack(buf[:HEADER_SIZE])
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise VersionMismatchError(f"stream version {version}, expected {VERSION}")
    if party not in (0, 1):
        raise FramingError(f"unknown party byte {party}")
    return Party(party), digest


def records_from_bytes(buf: bytes) -> np.ndarray:
    """Decode a whole number of records; validates tags."""
    if len(buf) % RECORD_SIZE:
        raise ShortReadError(
            f"record payload of {len(buf)} bytes is not a multiple of {RECORD_SIZE}")
    recs = np.frombuffer(buf, dtype=RECORD_DTYPE)
    bad = recs["tag"] > SourceTag.A
    if bad.any():
        i = int(np.argmax(bad))
        raise UnknownTagError(f"unknown source tag {int(recs['tag'][i])} at bin {int(recs['bin'][i])}")
    return recs
