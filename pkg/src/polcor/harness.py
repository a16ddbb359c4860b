"""Two parties and a correlator running as separate endpoints.

Alice and Bob each simulate only their own arm (the shared seed stands in
for the common source) and stream digitized samples to a correlator, over
TCP or through files. The correlator merge-joins the two streams by bin
index and runs exactly the in-process :func:`polcor.measurement.correlate`
path, so its CSV is byte-identical to a local run of the same config.
"""
from __future__ import annotations

import logging
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .measurement import ALL_PAIRS, PairCorrelation, correlate, correlation_csv
from .optics import Party, SourceTag
from .simulator import DetectorSample, OpticalConfig, OverlapMode, SampleStream, simulate_party
from .wire import (
    HEADER_SIZE,
    RECORD_DTYPE,
    RECORD_SIZE,
    ConfigMismatchError,
    DuplicatePartyError,
    FramingError,
    ShortReadError,
    StreamError,
    StreamGapError,
    UnknownTagError,
    pack_header,
    records_from_bytes,
    unpack_header,
)

log = logging.getLogger(__name__)

__all__ = [
    "encode_record",
    "decode_record",
    "stream_bytes",
    "run_party",
    "run_correlator",
    "CorrelatorServer",
    "PartyConnectionError",
    "parse_address",
]

CHUNK_RECORDS = 4096
_RECORD = struct.Struct("<QB8d")


class PartyConnectionError(StreamError):
    """Could not reach the correlator after the allowed retries."""

    code = "connection"


def encode_record(sample: DetectorSample) -> bytes:
    if sample.mode is not OverlapMode.SEPARATED:
        raise ValueError("only separated-mode samples go on the wire")
    coefs = (sample.port1_coef_h, sample.port1_coef_v, sample.port2_coef_h, sample.port2_coef_v)
    flat = [x for z in coefs for x in (z.real, z.imag)]
    return _RECORD.pack(sample.bin, int(sample.tag), *flat)


def decode_record(buf: bytes, party=Party.ALPHA) -> DetectorSample:
    if len(buf) < RECORD_SIZE:
        raise ShortReadError(f"record truncated: {len(buf)} of {RECORD_SIZE} bytes")
    b, tag, *f = _RECORD.unpack(buf[:RECORD_SIZE])
    if tag > SourceTag.A:
        raise UnknownTagError(f"unknown source tag {tag} at bin {b}")
    return DetectorSample(b, Party.parse(party), SourceTag(tag),
                          complex(f[0], f[1]), complex(f[2], f[3]),
                          complex(f[4], f[5]), complex(f[6], f[7]))


def stream_bytes(stream: SampleStream, cfg: OpticalConfig) -> bytes:
    if stream.mode is not OverlapMode.SEPARATED:
        raise ValueError("only separated-mode streams go on the wire")
    return pack_header(stream.party, cfg.shared_digest()) + stream.tobytes()


def parse_address(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"expected HOST:PORT, got {text!r}")
    return host or "127.0.0.1", int(port)


@dataclass(frozen=True)
class PartySummary:
    party: Party
    bins_emitted: int


def _connect(address: tuple[str, int], retries: int, backoff: float) -> socket.socket:
    delay = backoff
    for attempt in range(retries + 1):
        try:
            return socket.create_connection(address, timeout=30)
        except (ConnectionRefusedError, ConnectionResetError, socket.timeout) as exc:
            if attempt == retries:
                raise PartyConnectionError(
                    f"correlator at {address[0]}:{address[1]} unreachable after "
                    f"{retries + 1} attempts: {exc}") from exc
            log.debug("connect attempt %d to %s failed: %s", attempt + 1, address, exc)
            time.sleep(delay)
            delay = min(delay * 2, 1.0)
    raise AssertionError("unreachable")


def run_party(role, cfg: OpticalConfig, sink, retries: int = 20, backoff: float = 0.02) -> PartySummary:
    """Simulate one arm and emit header + records in bin order.

    ``sink`` is a ``(host, port)`` tuple (TCP), a path, or a writable binary
    file object. Over TCP the blocking ``sendall`` is the flow control: the
    party stalls while the correlator lags.
    """
    party = Party.parse(role)
    stream = simulate_party(cfg, party)
    header = pack_header(party, cfg.shared_digest())

    def emit(write):
        write(header)
        recs = stream.records
        for start in range(0, len(recs), CHUNK_RECORDS):
            write(recs[start:start + CHUNK_RECORDS].tobytes())

    if isinstance(sink, tuple):
        sock = _connect(sink, retries, backoff)
        try:
            emit(sock.sendall)
            sock.shutdown(socket.SHUT_WR)
        except (ConnectionResetError, BrokenPipeError) as exc:
            raise PartyConnectionError(f"connection to correlator lost: {exc}") from exc
        finally:
            sock.close()
    elif hasattr(sink, "write"):
        emit(sink.write)
    else:
        with open(sink, "wb") as fh:
            emit(fh.write)
    return PartySummary(party, len(stream))


def _read_exact(fh, n: int) -> bytes:
    buf = fh.read(n)
    return buf if buf is not None else b""


def _reader(idx: int, fh, out: queue.Queue, stop: threading.Event) -> None:
    def put(item):
        while not stop.is_set():
            try:
                out.put(item, timeout=0.1)
                return
            except queue.Full:
                continue

    try:
        head = _read_exact(fh, HEADER_SIZE)
        put((idx, "header", unpack_header(head)))
        while not stop.is_set():
            buf = _read_exact(fh, CHUNK_RECORDS * RECORD_SIZE)
            if not buf:
                break
            if len(buf) % RECORD_SIZE:
                raise ShortReadError(
                    f"stream {idx} ends inside a record ({len(buf) % RECORD_SIZE} trailing bytes)")
            put((idx, "records", records_from_bytes(buf)))
        put((idx, "eof", None))
    except BaseException as exc:  # handed to the merging thread
        put((idx, "error", exc))


def _open_source(src):
    if isinstance(src, socket.socket):
        return src.makefile("rb"), src
    if hasattr(src, "read"):
        return src, None
    fh = open(src, "rb")
    return fh, fh


def run_correlator(sources, cfg: OpticalConfig, pairs: Iterable = ALL_PAIRS,
                   max_buffered_chunks: int = 8) -> tuple[list[PairCorrelation], str]:
    """Merge-join two party streams and correlate them.

    ``sources`` holds two of: a path, a readable binary file object or a
    connected socket, in any order. Returns the pair results and the CSV text.
    """
    sources = list(sources)
    if len(sources) != 2:
        raise ValueError(f"need exactly two streams, got {len(sources)}")
    expected = cfg.shared_digest()
    n = cfg.n_bins
    q: queue.Queue = queue.Queue(maxsize=max_buffered_chunks)
    stop = threading.Event()
    opened = [_open_source(s) for s in sources]
    threads = [threading.Thread(target=_reader, args=(i, fh, q, stop), daemon=True)
               for i, (fh, _) in enumerate(opened)]
    for t in threads:
        t.start()

    party_of: dict[int, Party] = {}
    records = {p: np.zeros(n, dtype=RECORD_DTYPE) for p in Party}
    next_bin = {p: 0 for p in Party}
    finished = set()
    try:
        while len(finished) < 2:
            idx, kind, payload = q.get()
            if kind == "error":
                raise payload
            if kind == "header":
                party, digest = payload
                if party in party_of.values():
                    raise DuplicatePartyError(f"two streams claim party {party.name}")
                if digest != expected:
                    raise ConfigMismatchError(
                        f"{party.name} stream config digest {digest.hex()[:16]}... does not match "
                        f"correlator config {expected.hex()[:16]}...")
                party_of[idx] = party
                continue
            party = party_of[idx]
            if kind == "eof":
                if next_bin[party] < n:
                    raise StreamGapError(
                        f"{party.name} stream ended early: missing bins "
                        f"{next_bin[party]}..{n - 1}")
                finished.add(idx)
                continue
            start = next_bin[party]
            bins = payload["bin"]
            if int(bins[0]) != start:
                if int(bins[0]) < start:
                    raise FramingError(
                        f"{party.name} bin_index not increasing: got {int(bins[0])} after {start - 1}")
                raise StreamGapError(
                    f"{party.name} stream gap: missing bins {start}..{int(bins[0]) - 1}")
            steps = np.diff(bins.astype(np.int64))
            if (steps != 1).any():
                k = int(np.argmax(steps != 1))
                lo, hi = int(bins[k]), int(bins[k + 1])
                if hi <= lo:
                    raise FramingError(f"{party.name} bin_index not increasing at {hi}")
                raise StreamGapError(f"{party.name} stream gap: missing bins {lo + 1}..{hi - 1}")
            stop_at = start + bins.size
            if stop_at > n:
                raise FramingError(f"{party.name} stream has more than {n} records")
            records[party][start:stop_at] = payload
            next_bin[party] = stop_at
    finally:
        stop.set()
        for _, closer in opened:
            if isinstance(closer, socket.socket):
                try:
                    closer.shutdown(socket.SHUT_RDWR)
                except OSError:
                    pass
            if closer is not None:
                closer.close()

    alice = SampleStream(Party.ALPHA, records[Party.ALPHA])
    bob = SampleStream(Party.BETA, records[Party.BETA])
    if not np.array_equal(alice.tags, bob.tags):
        raise ConfigMismatchError("parties report different pulse schedules")
    results = correlate(cfg, alice, bob, pairs)
    return results, correlation_csv(cfg, results)


class CorrelatorServer:
    """TCP endpoint that accepts one Alice and one Bob connection.

    Bind happens in the constructor, so ``address`` is valid (port 0 gives
    an ephemeral port) before parties are launched.
    """

    def __init__(self, cfg: OpticalConfig, host: str = "127.0.0.1", port: int = 0,
                 pairs: Iterable = ALL_PAIRS, accept_timeout: float = 60.0):
        self.cfg = cfg
        self.pairs = tuple(pairs)
        self._sock = socket.create_server((host, port), backlog=2)
        self._sock.settimeout(accept_timeout)

    @property
    def address(self) -> tuple[str, int]:
        host, port = self._sock.getsockname()[:2]
        return host, port

    def serve_once(self) -> tuple[list[PairCorrelation], str]:
        conns = []
        try:
            while len(conns) < 2:
                conn, _ = self._sock.accept()
                conn.settimeout(None)
                conns.append(conn)
            return run_correlator(conns, self.cfg, self.pairs)
        finally:
            for c in conns:
                c.close()
            self._sock.close()

    def close(self) -> None:
        self._sock.close()
