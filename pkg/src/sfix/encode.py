"""Server-side indexing: turn (reference, new frame) into a FrameDelta.

The encoder scans the position-wise equality mask between the two frames
and emits one index entry per maximal run:

* equal run            -> COPY_FROM_REF (temporal redundancy)
* differing run        -> split further on the NEW frame's values: maximal
  stretches of >= min_repeat_run equal samples become REPEAT_FROM_DIFF with
  a single diff sample (spatial redundancy); everything in between becomes
  COPY_FROM_DIFF with the literal samples appended in scan order.

The standard baseline mode skips the spatial split and copies every
differing run literally, so it only ever emits -1/-2/-3.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import (
    EncoderConfig,
    EncoderMode,
    Frame,
    FrameDelta,
    GeometryMismatch,
    IndexCode,
    IndexEntry,
    EQUAL_FRAMES_DELTA,
)


class RunKind(Enum):
    EQUAL = "equal"
    DIFFERING = "differing"


@dataclass(frozen=True)
class RunSegment:
    """A maximal run of the equality mask: [start, start+length) samples."""

    kind: RunKind
    start: int
    length: int


def _require_same_geometry(ref: Frame, new: Frame) -> None:
    if ref.geometry != new.geometry:
        raise GeometryMismatch(f"{ref.geometry} != {new.geometry}")


def _run_bounds(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Start/end indices of maximal runs of equal consecutive values."""
    cuts = np.flatnonzero(values[1:] != values[:-1]) + 1
    starts = np.concatenate(([0], cuts))
    ends = np.concatenate((cuts, [len(values)]))
    return starts, ends


def segment_runs(ref: Frame, new: Frame) -> list[RunSegment]:
    """Split the sample range into maximal alternating equal/differing runs.

    The runs tile [0, total_samples) exactly and adjacent runs always have
    different kinds.
    """
    _require_same_geometry(ref, new)
    a = np.frombuffer(ref.samples, dtype=np.uint8)
    b = np.frombuffer(new.samples, dtype=np.uint8)
    mask = a == b
    starts, ends = _run_bounds(mask)
    return [
        RunSegment(
            RunKind.EQUAL if mask[s] else RunKind.DIFFERING,
            int(s),
            int(e - s),
        )
        for s, e in zip(starts, ends)
    ]


def _split_differing_run(
    entries: list[IndexEntry],
    diff: bytearray,
    run_values: np.ndarray,
    run_bytes: bytes,
    min_repeat_run: int,
) -> None:
    """Emit repeat/literal entries for one differing run, appending diff samples."""
    starts, ends = _run_bounds(run_values)
    literal_from = None
    for s, e in zip(starts, ends):
        if e - s >= min_repeat_run:
            if literal_from is not None:
                entries.append(IndexEntry(IndexCode.COPY_FROM_DIFF, int(s - literal_from)))
                diff += run_bytes[literal_from:s]
                literal_from = None
            entries.append(IndexEntry(IndexCode.REPEAT_FROM_DIFF, int(e - s)))
            diff.append(run_bytes[s])
        elif literal_from is None:
            literal_from = int(s)
    if literal_from is not None:
        entries.append(IndexEntry(IndexCode.COPY_FROM_DIFF, len(run_bytes) - literal_from))
        diff += run_bytes[literal_from:]


def encode_delta(ref: Frame, new: Frame, cfg: EncoderConfig = EncoderConfig()) -> FrameDelta:
    """Encode `new` against `ref` under the given configuration.

    Lossless: decode.decode_delta(ref, result) reproduces `new` exactly.
    Identical frames collapse to the single EQUAL_FRAMES entry.
    """
    _require_same_geometry(ref, new)
    if ref.samples == new.samples:
        return EQUAL_FRAMES_DELTA

    new_values = np.frombuffer(new.samples, dtype=np.uint8)
    entries: list[IndexEntry] = []
    diff = bytearray()
    for seg in segment_runs(ref, new):
        stop = seg.start + seg.length
        if seg.kind is RunKind.EQUAL:
            entries.append(IndexEntry(IndexCode.COPY_FROM_REF, seg.length))
        elif cfg.mode is EncoderMode.STANDARD_BASELINE:
            entries.append(IndexEntry(IndexCode.COPY_FROM_DIFF, seg.length))
            diff += new.samples[seg.start:stop]
        else:
            _split_differing_run(
                entries,
                diff,
                new_values[seg.start:stop],
                new.samples[seg.start:stop],
                cfg.min_repeat_run,
            )
    return FrameDelta(tuple(entries), bytes(diff))


def advance_reference(current_ref: Frame, just_encoded: Frame) -> Frame:
    """Step the reference chain: the frame just encoded becomes the reference.

    Losslessness keeps the encoder- and decoder-side references identical,
    so both ends advance with this same rule.
    """
    _require_same_geometry(current_ref, just_encoded)
    return just_encoded
