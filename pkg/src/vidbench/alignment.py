"""Temporal alignment of modality artifacts onto a 1-second timeline.

A structured context is an ordered list of timeline slots, each carrying
the frame references, ASR text (alpha channel), and de-duplicated OCR text
(gamma channel) for its span, plus the video's metadata.  Construction is
three steps:

1. Each ASR segment is split at the integer-second boundaries it crosses,
   distributing characters proportionally to sub-span duration (floor per
   sub-span, the last sub-span absorbing the remainder, so concatenation
   is lossless).
2. One slot per second collects its ASR chunks (segment-start order), its
   de-duplicated OCR strings, and its frame index.
3. Consecutive slots with identical (alpha, gamma) text merge into a
   single wider slot.

Renders of a context are byte-stable, so annotation prompts and evaluation
conditions built from the same context are reproducible.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import AsrSegment, FrameEmbeddingSequence, OcrRecord, VideoRecord
from .errors import InputError, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimelineSlot:
    t_start: int
    t_end: int
    frame_refs: tuple[int, ...]
    alpha_text: str
    gamma_text: str

    def __post_init__(self):
        if self.t_end < self.t_start + 1:
            raise ValidationError(
                f"slot span [{self.t_start}, {self.t_end}) must cover at least one second"
            )


@dataclass(frozen=True)
class StructuredContext:
    video_id: str
    slots: tuple[TimelineSlot, ...]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        prev_end = None
        for slot in self.slots:
            if prev_end is not None and slot.t_start != prev_end:
                raise ValidationError(
                    f"slots must be contiguous: gap or overlap at second {slot.t_start}"
                )
            prev_end = slot.t_end

    @property
    def duration_slots(self) -> int:
        return self.slots[-1].t_end if self.slots else 0

    def slot_at(self, second: int) -> TimelineSlot:
        for slot in self.slots:
            if slot.t_start <= second < slot.t_end:
                return slot
        raise IndexError(f"second {second} outside context span")


def chunk_asr_segment(segment: AsrSegment) -> list[tuple[int, str]]:
    """Split a segment's text across the integer seconds its span covers.

    Characters go to each covered sub-span in proportion to its duration
    (floored); the final sub-span absorbs the remainder, so joining the
    chunks reproduces the text exactly.
    """
    if segment.end_s <= segment.start_s:
        raise InputError(
            f"degenerate segment span [{segment.start_s}, {segment.end_s})"
        )
    first = math.floor(segment.start_s)
    last = math.ceil(segment.end_s)  # exclusive bound in whole seconds
    total = segment.end_s - segment.start_s
    text = segment.text
    length = len(text)

    chunks: list[tuple[int, str]] = []
    consumed = 0
    for sec in range(first, last):
        sub_start = max(float(sec), segment.start_s)
        sub_end = min(float(sec + 1), segment.end_s)
        if sec == last - 1:
            quota = length - consumed
        else:
            quota = math.floor(length * (sub_end - sub_start) / total)
            quota = min(max(quota, 0), length - consumed)
        chunks.append((sec, text[consumed : consumed + quota]))
        consumed += quota
    return chunks


def build_timeline(
    record: VideoRecord,
    embeddings: FrameEmbeddingSequence | None,
    asr: list[AsrSegment],
    ocr: list[OcrRecord],
) -> StructuredContext:
    """One slot per second of the video, channels filled from the artifacts.

    Overlapping ASR segments are each chunked independently and concatenated
    within a second in segment-start order (with a warning).  Segments
    running past the video end fold their overflow into the final second.
    """
    n_slots = math.ceil(record.duration_s)
    if n_slots < 1:
        raise ValidationError(f"video {record.video_id} has no whole seconds to align")

    ordered = sorted(enumerate(asr), key=lambda pair: (pair[1].start_s, pair[0]))
    for (_, a), (_, b) in zip(ordered, ordered[1:]):
        if b.start_s < a.end_s:
            logger.warning(
                "overlapping speech segments in %s: [%s, %s) and [%s, %s)",
                record.video_id, a.start_s, a.end_s, b.start_s, b.end_s,
            )
            break

    alpha_parts: list[list[str]] = [[] for _ in range(n_slots)]
    for _, segment in ordered:
        for sec, chunk in chunk_asr_segment(segment):
            # overflow past the video end folds into the last second
            idx = min(sec, n_slots - 1)
            alpha_parts[idx].append(chunk)

    gamma_parts: list[list[str]] = [[] for _ in range(n_slots)]
    for rec in ocr:
        if rec.second_index >= n_slots:
            raise ValidationError(
                f"on-screen text at second {rec.second_index} is outside "
                f"the {n_slots}-second timeline of {record.video_id}"
            )
        seen = set(gamma_parts[rec.second_index])
        for text in rec.texts:
            if text not in seen:
                gamma_parts[rec.second_index].append(text)
                seen.add(text)

    frame_count = embeddings.frame_count if embeddings is not None else 0
    slots = tuple(
        TimelineSlot(
            t_start=t,
            t_end=t + 1,
            frame_refs=(t,) if t < frame_count else (),
            alpha_text="".join(alpha_parts[t]),
            gamma_text=" ".join(gamma_parts[t]),
        )
        for t in range(n_slots)
    )
    return StructuredContext(
        video_id=record.video_id, slots=slots, metadata=dict(record.metadata)
    )


def merge_slots(context: StructuredContext) -> StructuredContext:
    """Collapse maximal runs of consecutive slots with identical channel text."""
    merged: list[TimelineSlot] = []
    for slot in context.slots:
        if (
            merged
            and merged[-1].alpha_text == slot.alpha_text
            and merged[-1].gamma_text == slot.gamma_text
        ):
            prev = merged[-1]
            merged[-1] = TimelineSlot(
                t_start=prev.t_start,
                t_end=slot.t_end,
                frame_refs=prev.frame_refs + slot.frame_refs,
                alpha_text=prev.alpha_text,
                gamma_text=prev.gamma_text,
            )
        else:
            merged.append(slot)
    return StructuredContext(
        video_id=context.video_id, slots=tuple(merged), metadata=dict(context.metadata)
    )


def render_context(
    context: StructuredContext, include_asr: bool = True, include_ocr: bool = True
) -> str:
    """One line per slot: `[t0–t1) ASR: ... | OCR: ...`, channels gated by flags."""
    lines = []
    for slot in context.slots:
        parts = [f"[{slot.t_start}–{slot.t_end})"]
        channels = []
        if include_asr:
            channels.append(f"ASR: {slot.alpha_text}")
        if include_ocr:
            channels.append(f"OCR: {slot.gamma_text}")
        if channels:
            parts.append(" | ".join(channels))
        lines.append(" ".join(parts))
    return "\n".join(lines)


def context_to_json_dict(context: StructuredContext) -> dict:
    return {
        "video_id": context.video_id,
        "metadata": dict(context.metadata),
        "slots": [
            {
                "t_start": slot.t_start,
                "t_end": slot.t_end,
                "alpha": slot.alpha_text,
                "gamma": slot.gamma_text,
                "frame_refs": list(slot.frame_refs),
            }
            for slot in context.slots
        ],
    }


def write_context(context: StructuredContext, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(context_to_json_dict(context), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def load_context(path: str | Path) -> StructuredContext:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    slots = tuple(
        TimelineSlot(
            t_start=s["t_start"],
            t_end=s["t_end"],
            frame_refs=tuple(s["frame_refs"]),
            alpha_text=s["alpha"],
            gamma_text=s["gamma"],
        )
        for s in data["slots"]
    )
    return StructuredContext(
        video_id=data["video_id"], slots=slots, metadata=dict(data["metadata"])
    )
