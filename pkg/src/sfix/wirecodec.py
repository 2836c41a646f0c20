"""Bit-exact wire format: index serialization, compression, message framing.

All integers are little-endian.  Message layout:

    type(1) + payload_len(u32) + payload

    0x01 HELLO     width(u32) height(u32) channels(u8) fps_num(u16)
                   fps_den(u16) flags(u8, bit0 = baseline mode)
    0x02 REF_FRAME frame_no(u32) raw_len(u32) + compressed samples
    0x03 DELTA     frame_no(u32), then for index and diff in turn:
                   raw_len(u32) comp_len(u32) + compressed bytes
    0x04 END       empty payload

Index entries serialize to 5 bytes each: code(s8) count(u32).  Buffer
compression is the DEFLATE algorithm in a zlib wrapper, whose adler32 is
the only integrity check on the wire.

The `.sfix` container is magic "SFIX", a version byte, then one session's
message stream verbatim: HELLO first, END last.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Iterator, Union

from .core import FrameDelta, FrameGeometry, IndexCode, IndexEntry

INDEX_ENTRY_SIZE = 5
_ENTRY = struct.Struct("<bI")
_MSG_HEADER = struct.Struct("<BI")
_HELLO_PAYLOAD = struct.Struct("<IIBHHB")

MSG_HELLO = 0x01
MSG_REF_FRAME = 0x02
MSG_DELTA = 0x03
MSG_END = 0x04

SFIX_MAGIC = b"SFIX"
SFIX_VERSION = 1

COMPRESSION_LEVEL = 6  # fixed so identical inputs produce identical streams


class WireFormatError(Exception):
    """Base class for malformed wire data."""


class BadLength(WireFormatError):
    """Serialized index length is not a whole number of entries."""


class UnknownCode(WireFormatError):
    """Index code byte outside the assigned set (-4 is reserved)."""


class CorruptStream(WireFormatError):
    """Compressed data or container structure cannot be decoded."""


class LengthMismatch(WireFormatError):
    """Decompressed data does not match the declared raw length."""


class TruncatedMessage(WireFormatError):
    """Byte stream ended in the middle of a message."""


class UnknownType(WireFormatError):
    """Message type byte outside the assigned set."""


class PayloadLengthMismatch(WireFormatError):
    """Message payload shorter or longer than its fields require."""


class UnsupportedVersion(WireFormatError):
    """Container version byte this implementation does not understand."""


@dataclass(frozen=True)
class Hello:
    geometry: FrameGeometry
    fps_num: int
    fps_den: int
    baseline: bool = False


@dataclass(frozen=True)
class RefFrame:
    frame_no: int
    raw_len: int
    payload: bytes  # compressed samples


@dataclass(frozen=True)
class Delta:
    frame_no: int
    index_raw_len: int
    index_payload: bytes  # compressed serialized index
    diff_raw_len: int
    diff_payload: bytes  # compressed difference buffer


@dataclass(frozen=True)
class End:
    pass


StreamMessage = Union[Hello, RefFrame, Delta, End]


def serialize_index(index: Iterable[IndexEntry]) -> bytes:
    """Pack index entries as consecutive 5-byte code/count records."""
    return b"".join(_ENTRY.pack(int(e.code), e.count) for e in index)


def deserialize_index(data: bytes) -> tuple[IndexEntry, ...]:
    """Inverse of serialize_index."""
    if len(data) % INDEX_ENTRY_SIZE:
        raise BadLength(f"index buffer length {len(data)} not a multiple of {INDEX_ENTRY_SIZE}")
    entries = []
    for offset in range(0, len(data), INDEX_ENTRY_SIZE):
        code, count = _ENTRY.unpack_from(data, offset)
        try:
            entries.append(IndexEntry(IndexCode(code), count))
        except ValueError:
            raise UnknownCode(f"index code {code} is not assigned") from None
    return tuple(entries)


def compress(data: bytes) -> bytes:
    return zlib.compress(data, COMPRESSION_LEVEL)


def decompress(data: bytes, expected_raw_len: int) -> bytes:
    """Decompress, insisting the output is exactly `expected_raw_len` bytes.

    The expected length bounds the allocation: decompression stops one byte
    past it rather than inflating an adversarial stream.
    """
    d = zlib.decompressobj()
    try:
        out = d.decompress(data, expected_raw_len + 1)
    except zlib.error as exc:
        raise CorruptStream(f"deflate stream undecodable: {exc}") from None
    if len(out) > expected_raw_len:
        raise LengthMismatch(f"decompressed past expected {expected_raw_len} bytes")
    if not d.eof:
        raise CorruptStream("deflate stream truncated")
    if d.unused_data:
        raise CorruptStream(f"{len(d.unused_data)} trailing bytes after deflate stream")
    if len(out) != expected_raw_len:
        raise LengthMismatch(f"expected {expected_raw_len} bytes, got {len(out)}")
    return out


def _build_payload(msg: StreamMessage) -> tuple[int, bytes]:
    if isinstance(msg, Hello):
        g = msg.geometry
        flags = 0x01 if msg.baseline else 0x00
        return MSG_HELLO, _HELLO_PAYLOAD.pack(
            g.width, g.height, g.channels, msg.fps_num, msg.fps_den, flags
        )
    if isinstance(msg, RefFrame):
        return MSG_REF_FRAME, struct.pack("<II", msg.frame_no, msg.raw_len) + msg.payload
    if isinstance(msg, Delta):
        return MSG_DELTA, b"".join(
            (
                struct.pack("<I", msg.frame_no),
                struct.pack("<II", msg.index_raw_len, len(msg.index_payload)),
                msg.index_payload,
                struct.pack("<II", msg.diff_raw_len, len(msg.diff_payload)),
                msg.diff_payload,
            )
        )
    if isinstance(msg, End):
        return MSG_END, b""
    raise TypeError(f"not a stream message: {msg!r}")


def frame_message(msg: StreamMessage) -> bytes:
    """Frame one message as header + payload bytes."""
    msg_type, payload = _build_payload(msg)
    return _MSG_HEADER.pack(msg_type, len(payload)) + payload


def wire_size(msg: StreamMessage) -> int:
    """Framed size of a message in bytes."""
    return _MSG_HEADER.size + len(_build_payload(msg)[1])


def _decode_payload(msg_type: int, payload: bytes) -> StreamMessage:
    if msg_type == MSG_HELLO:
        if len(payload) != _HELLO_PAYLOAD.size:
            raise PayloadLengthMismatch(
                f"HELLO payload must be {_HELLO_PAYLOAD.size} bytes, got {len(payload)}"
            )
        width, height, channels, fps_num, fps_den, flags = _HELLO_PAYLOAD.unpack(payload)
        try:
            geometry = FrameGeometry(width, height, channels)
        except ValueError as exc:
            raise PayloadLengthMismatch(f"HELLO geometry invalid: {exc}") from None
        return Hello(geometry, fps_num, fps_den, baseline=bool(flags & 0x01))
    if msg_type == MSG_REF_FRAME:
        if len(payload) < 8:
            raise PayloadLengthMismatch("REF_FRAME payload shorter than its header")
        frame_no, raw_len = struct.unpack_from("<II", payload)
        return RefFrame(frame_no, raw_len, payload[8:])
    if msg_type == MSG_DELTA:
        if len(payload) < 12:
            raise PayloadLengthMismatch("DELTA payload shorter than its header")
        (frame_no,) = struct.unpack_from("<I", payload)
        pos = 4
        parts = []
        for label in ("index", "diff"):
            if pos + 8 > len(payload):
                raise PayloadLengthMismatch(f"DELTA {label} header truncated")
            raw_len, comp_len = struct.unpack_from("<II", payload, pos)
            pos += 8
            if pos + comp_len > len(payload):
                raise PayloadLengthMismatch(f"DELTA {label} payload truncated")
            parts.append((raw_len, payload[pos:pos + comp_len]))
            pos += comp_len
        if pos != len(payload):
            raise PayloadLengthMismatch(f"{len(payload) - pos} stray bytes after DELTA payload")
        (index_raw, index_comp), (diff_raw, diff_comp) = parts
        return Delta(frame_no, index_raw, index_comp, diff_raw, diff_comp)
    if msg_type == MSG_END:
        if payload:
            raise PayloadLengthMismatch("END payload must be empty")
        return End()
    raise UnknownType(f"message type 0x{msg_type:02x} is not assigned")


def _read_exact(stream: BinaryIO, n: int) -> bytes:
    chunks = bytearray()
    while len(chunks) < n:
        chunk = stream.read(n - len(chunks))
        if not chunk:
            raise TruncatedMessage(f"stream ended, needed {n - len(chunks)} more bytes")
        chunks += chunk
    return bytes(chunks)


def parse_message(stream: BinaryIO) -> StreamMessage:
    """Read exactly one framed message from a binary stream."""
    msg_type, payload_len = _MSG_HEADER.unpack(_read_exact(stream, _MSG_HEADER.size))
    payload = _read_exact(stream, payload_len) if payload_len else b""
    return _decode_payload(msg_type, payload)


class MessageParser:
    """Incremental message parser; feed() arbitrary chunks, get whole messages.

    Feeding one byte at a time yields exactly the messages whole-buffer
    feeding would.
    """

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[StreamMessage]:
        self._buf += data
        messages = []
        while len(self._buf) >= _MSG_HEADER.size:
            msg_type, payload_len = _MSG_HEADER.unpack_from(self._buf)
            end = _MSG_HEADER.size + payload_len
            if len(self._buf) < end:
                break
            payload = bytes(self._buf[_MSG_HEADER.size:end])
            del self._buf[:end]
            messages.append(_decode_payload(msg_type, payload))
        return messages

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)


def delta_to_message(frame_no: int, delta: FrameDelta) -> Delta:
    """Compress a frame delta's two buffers into a wire message."""
    raw_index = serialize_index(delta.index)
    return Delta(
        frame_no=frame_no,
        index_raw_len=len(raw_index),
        index_payload=compress(raw_index),
        diff_raw_len=len(delta.diff),
        diff_payload=compress(delta.diff),
    )


def message_to_delta(msg: Delta) -> FrameDelta:
    """Decompress a wire message back into a frame delta."""
    raw_index = decompress(msg.index_payload, msg.index_raw_len)
    diff = decompress(msg.diff_payload, msg.diff_raw_len)
    return FrameDelta(deserialize_index(raw_index), diff)


def samples_to_message(frame_no: int, samples: bytes) -> RefFrame:
    return RefFrame(frame_no, len(samples), compress(samples))


def message_to_samples(msg: RefFrame) -> bytes:
    return decompress(msg.payload, msg.raw_len)


def write_container(stream: BinaryIO, messages: Iterable[StreamMessage]) -> int:
    """Write a `.sfix` container: magic, version, then the message stream.

    The caller supplies the session's messages in order (HELLO first, END
    last).  Returns the number of bytes written.
    """
    written = stream.write(SFIX_MAGIC + bytes([SFIX_VERSION]))
    for msg in messages:
        written += stream.write(frame_message(msg))
    return written


def read_container(stream: BinaryIO) -> Iterator[StreamMessage]:
    """Yield the message stream of a `.sfix` container, END inclusive."""
    try:
        header = _read_exact(stream, len(SFIX_MAGIC) + 1)
    except TruncatedMessage:
        raise CorruptStream("container shorter than its header") from None
    if header[: len(SFIX_MAGIC)] != SFIX_MAGIC:
        raise CorruptStream(f"bad container magic {header[:len(SFIX_MAGIC)]!r}")
    version = header[len(SFIX_MAGIC)]
    if version != SFIX_VERSION:
        raise UnsupportedVersion(f"unsupported container version {version}")
    while True:
        msg = parse_message(stream)
        yield msg
        if isinstance(msg, End):
            return
