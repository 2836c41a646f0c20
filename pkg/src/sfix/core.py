"""Shared domain types for the frame-indexing codec.

Everything here is an immutable value object: frames, index entries,
deltas and encoder configuration.  No I/O happens in this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum

MAX_TOTAL_SAMPLES = 2**32 - 1


class CodecError(Exception):
    """Base class for all codec-level failures."""


class GeometryMismatch(CodecError):
    """Two frames that must share a geometry do not."""


class InvalidDelta(CodecError):
    """A delta fails structural validation against its geometry."""


class CountMismatch(InvalidDelta):
    """Index entry counts do not add up to the frame's sample total."""


class DiffMismatch(InvalidDelta):
    """Difference buffer length disagrees with what the index consumes."""


class BadEntry(InvalidDelta):
    """An index entry carries a count its code does not allow."""


class LoneEqualViolated(InvalidDelta):
    """An equal-frames marker appears alongside other entries or diff data."""


class DiffExhausted(CodecError):
    """Decoder ran out of difference-buffer samples mid-entry."""


class CursorOverrun(CodecError):
    """Decoder output cursor moved past the end of the frame."""


class IndexCode(IntEnum):
    """Wire-level instruction codes for the index buffer.

    -4 is reserved and never emitted.
    """

    EQUAL_FRAMES = -1      # whole frame identical to the reference
    COPY_FROM_DIFF = -2    # copy literal samples from the difference buffer
    COPY_FROM_REF = -3     # copy samples from the reference at the same positions
    REPEAT_FROM_DIFF = -5  # read one diff sample, replicate it count times


class EncoderMode(Enum):
    SPATIO_TEMPORAL = "spatio"
    STANDARD_BASELINE = "standard"


@dataclass(frozen=True)
class FrameGeometry:
    """Fixed grid shape of a frame: width x height x channels, 8-bit samples."""

    width: int
    height: int
    channels: int = 1

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"frame dimensions must be positive, got {self.width}x{self.height}")
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")
        if self.width * self.height * self.channels > MAX_TOTAL_SAMPLES:
            raise ValueError("total sample count does not fit in 32 bits")

    @property
    def total_samples(self) -> int:
        return self.width * self.height * self.channels


@dataclass(frozen=True)
class Frame:
    """One frame: a flat row-major, channel-interleaved stream of 8-bit samples."""

    geometry: FrameGeometry
    samples: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.samples, bytes):
            object.__setattr__(self, "samples", bytes(self.samples))
        if len(self.samples) != self.geometry.total_samples:
            raise ValueError(
                f"expected {self.geometry.total_samples} samples, got {len(self.samples)}"
            )


@dataclass(frozen=True)
class IndexEntry:
    """One index instruction: a code plus the number of output samples it produces.

    The code/count consistency rules (count >= 1 for copy/repeat codes,
    count == 0 for EQUAL_FRAMES) are checked by validate_delta, not here,
    so that entries deserialized from a corrupt stream can still be
    represented and rejected with a precise error.
    """

    code: IndexCode
    count: int

    def __post_init__(self) -> None:
        if not 0 <= self.count <= MAX_TOTAL_SAMPLES:
            raise ValueError(f"entry count out of range: {self.count}")


@dataclass(frozen=True)
class FrameDelta:
    """An encoded frame: the ordered index buffer plus the difference buffer."""

    index: tuple[IndexEntry, ...]
    diff: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.index, tuple):
            object.__setattr__(self, "index", tuple(self.index))
        if not isinstance(self.diff, bytes):
            object.__setattr__(self, "diff", bytes(self.diff))


EQUAL_FRAMES_DELTA = FrameDelta(index=(IndexEntry(IndexCode.EQUAL_FRAMES, 0),), diff=b"")


@dataclass(frozen=True)
class EncoderConfig:
    """Encoder mode plus the minimum run length worth collapsing to a repeat."""

    mode: EncoderMode = EncoderMode.SPATIO_TEMPORAL
    min_repeat_run: int = 3

    def __post_init__(self) -> None:
        if self.min_repeat_run < 2:
            raise ValueError(f"min_repeat_run must be >= 2, got {self.min_repeat_run}")


def validate_delta(delta: FrameDelta, geom: FrameGeometry) -> None:
    """Check a delta's structural invariants against a frame geometry.

    Raises a specific InvalidDelta subclass on the first violation found:

    * BadEntry          -- count rule broken for an entry's code
    * LoneEqualViolated -- EQUAL_FRAMES not the sole entry / diff not empty
    * CountMismatch     -- entry counts do not sum to geom.total_samples
    * DiffMismatch      -- diff length differs from what the index consumes
    """
    for entry in delta.index:
        if entry.code is IndexCode.EQUAL_FRAMES:
            if entry.count != 0:
                raise BadEntry(f"EQUAL_FRAMES entry must carry count 0, got {entry.count}")
        elif entry.count < 1:
            raise BadEntry(f"{entry.code.name} entry must carry count >= 1")

    if any(e.code is IndexCode.EQUAL_FRAMES for e in delta.index):
        if len(delta.index) != 1:
            raise LoneEqualViolated("EQUAL_FRAMES must be the only index entry")
        if delta.diff:
            raise LoneEqualViolated("EQUAL_FRAMES delta must have an empty difference buffer")
        return

    produced = sum(e.count for e in delta.index)
    if produced != geom.total_samples:
        raise CountMismatch(
            f"index produces {produced} samples, geometry needs {geom.total_samples}"
        )

    consumed = sum(
        e.count if e.code is IndexCode.COPY_FROM_DIFF else 1
        for e in delta.index
        if e.code in (IndexCode.COPY_FROM_DIFF, IndexCode.REPEAT_FROM_DIFF)
    )
    if consumed != len(delta.diff):
        raise DiffMismatch(
            f"index consumes {consumed} diff samples, buffer holds {len(delta.diff)}"
        )
