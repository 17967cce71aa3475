"""Align speech and on-screen text onto a per-second timeline.

Speech segments rarely respect second boundaries, so each one is split
into per-second chunks whose concatenation reproduces the original text
character for character.  On-screen text is deduplicated within each
second only, and quiet stretches merge into wider slots for display.
"""

from vidbench.alignment import build_timeline, chunk_asr_segment, merge_slots, render_context
from vidbench.corpus import AsrSegment, OcrRecord, VideoRecord

# A segment from 0.9s to 2.1s touches three seconds.  The split is
# proportional to the overlap with each second, and nothing is lost.
segment = AsrSegment(0.9, 2.1, "fresh juice in thirty seconds")
for sec, chunk in chunk_asr_segment(segment):
    print(f"  second {sec}: {chunk!r}")
joined = "".join(chunk for _, chunk in chunk_asr_segment(segment))
print("lossless:", joined == segment.text)

# Build the full timeline for a short clip.  The same caption burned into
# both OCR passes of second 0 appears once; the repeat at second 3 stays,
# because deduplication is scoped to a single second.
record = VideoRecord(video_id="juice-ad", duration_s=4.2, category="kitchen",
                     metadata={"title": "Juicer promo"})
asr = [
    AsrSegment(0.9, 2.1, "fresh juice in thirty seconds"),
    AsrSegment(2.1, 3.4, "order now and save"),
]
ocr = [
    OcrRecord(0, ("50% OFF", "50% OFF")),
    OcrRecord(3, ("50% OFF",)),
]
timeline = build_timeline(record, None, asr, ocr)
print(f"\nslots cover [0, {len(timeline.slots)}) one second each")
print(render_context(timeline))

# Consecutive slots with identical channel text collapse into one span.
merged = merge_slots(timeline)
print("\nafter merging quiet stretches:")
print(render_context(merged, include_ocr=False))
