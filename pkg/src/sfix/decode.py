"""Client-side reconstruction: rebuild a frame from reference + delta.

The decoder walks the index buffer with an output cursor starting at 0.
COPY_FROM_REF copies from the reference at the cursor position (positional,
never searched), COPY_FROM_DIFF copies literal samples from the difference
buffer, REPEAT_FROM_DIFF reads one diff sample and replicates it.  A delta
is validated before any output is produced.
"""

from __future__ import annotations

from .core import (
    CursorOverrun,
    DiffExhausted,
    Frame,
    FrameDelta,
    IndexCode,
    IndexEntry,
    validate_delta,
)


def _replay(
    ref_samples: bytes,
    entries: tuple[IndexEntry, ...],
    diff: bytes,
    total: int,
) -> bytearray:
    """Execute index entries in order, returning the produced samples."""
    out = bytearray()
    diff_pos = 0
    for entry in entries:
        cursor = len(out)
        count = entry.count
        if entry.code is IndexCode.COPY_FROM_REF:
            if cursor + count > total:
                raise CursorOverrun(f"reference copy past sample {total}")
            out += ref_samples[cursor:cursor + count]
        elif entry.code is IndexCode.COPY_FROM_DIFF:
            if diff_pos + count > len(diff):
                raise DiffExhausted("difference buffer exhausted during literal copy")
            out += diff[diff_pos:diff_pos + count]
            diff_pos += count
        elif entry.code is IndexCode.REPEAT_FROM_DIFF:
            if diff_pos >= len(diff):
                raise DiffExhausted("difference buffer exhausted during repeat")
            out += diff[diff_pos:diff_pos + 1] * count
            diff_pos += 1
        else:  # EQUAL_FRAMES inside a multi-entry index is rejected upstream
            out += ref_samples
        if len(out) > total:
            raise CursorOverrun(f"cursor {len(out)} past frame end {total}")
    return out


def decode_delta(ref: Frame, delta: FrameDelta) -> Frame:
    """Reconstruct the full frame a delta encodes against `ref`.

    Raises an InvalidDelta subclass if the delta fails validation against
    the reference geometry; a validated delta always decodes completely,
    consuming the difference buffer exactly.
    """
    validate_delta(delta, ref.geometry)
    if delta.index[0].code is IndexCode.EQUAL_FRAMES:
        return Frame(ref.geometry, ref.samples)
    out = _replay(ref.samples, delta.index, delta.diff, ref.geometry.total_samples)
    return Frame(ref.geometry, bytes(out))


def decode_prefix(ref: Frame, delta: FrameDelta, n_entries: int) -> bytes:
    """Samples produced by the first `n_entries` index entries.

    Diagnostic replay of a partial reconstruction; n_entries == len(index)
    yields the full frame's samples.
    """
    if not 0 <= n_entries <= len(delta.index):
        raise ValueError(f"n_entries {n_entries} outside [0, {len(delta.index)}]")
    validate_delta(delta, ref.geometry)
    if n_entries and delta.index[0].code is IndexCode.EQUAL_FRAMES:
        return ref.samples
    out = _replay(
        ref.samples, delta.index[:n_entries], delta.diff, ref.geometry.total_samples
    )
    return bytes(out)
