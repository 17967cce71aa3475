"""Shared builders: tiny corpora on disk, scripted backends, reply payloads."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from vidbench.alignment import StructuredContext, TimelineSlot
from vidbench.corpus import (
    AsrSegment,
    FrameEmbeddingSequence,
    Manifest,
    OcrRecord,
    VideoRecord,
    save_asr,
    save_embeddings,
    save_manifest,
    save_ocr,
)


def unit(*coords: float) -> list[float]:
    v = np.asarray(coords, dtype=np.float64)
    return list(v / np.linalg.norm(v))


def write_corpus(root: Path, specs: list[dict]) -> Path:
    """Materialize manifest plus artifact files under root.

    Each spec dict carries video_id, duration_s, category and optionally
    vectors (T x D), asr [(start, end, text)], ocr [(second, [texts])] and
    metadata.  Returns the manifest path.
    """
    records = []
    for spec in specs:
        vid = spec["video_id"]
        emb_ref = asr_ref = ocr_ref = None
        if "vectors" in spec:
            emb_ref = f"emb/{vid}.evem"
            (root / "emb").mkdir(exist_ok=True)
            save_embeddings(
                FrameEmbeddingSequence(
                    video_id=vid, vectors=np.asarray(spec["vectors"], dtype=np.float64)
                ),
                root / emb_ref,
            )
        if "asr" in spec:
            asr_ref = f"asr/{vid}.jsonl"
            (root / "asr").mkdir(exist_ok=True)
            save_asr([AsrSegment(s, e, t) for s, e, t in spec["asr"]], root / asr_ref)
        if "ocr" in spec:
            ocr_ref = f"ocr/{vid}.jsonl"
            (root / "ocr").mkdir(exist_ok=True)
            save_ocr(
                [OcrRecord(sec, tuple(texts)) for sec, texts in spec["ocr"]],
                root / ocr_ref,
            )
        records.append(
            VideoRecord(
                video_id=vid,
                duration_s=spec["duration_s"],
                category=spec.get("category", "general"),
                metadata=spec.get("metadata", {}),
                embedding_ref=emb_ref,
                asr_ref=asr_ref,
                ocr_ref=ocr_ref,
            )
        )
    manifest_path = root / "manifest.jsonl"
    save_manifest(Manifest(records=tuple(records)), manifest_path)
    return manifest_path


def write_scenario(fixtures_dir: Path, name: str, entries: list[dict]) -> Path:
    """Write one scripted-backend scenario file and return its path."""
    mock_dir = fixtures_dir / "mock"
    mock_dir.mkdir(parents=True, exist_ok=True)
    path = mock_dir / f"{name}.jsonl"
    lines = [json.dumps(entry, ensure_ascii=False) for entry in entries]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def fenced(payload) -> str:
    return "```json\n" + json.dumps(payload, ensure_ascii=False, indent=1) + "\n```"


def make_slot(
    t_start: int,
    t_end: int | None = None,
    alpha: str = "",
    gamma: str = "",
    frames=None,
) -> TimelineSlot:
    t_end = t_start + 1 if t_end is None else t_end
    refs = tuple(range(t_start, t_end)) if frames is None else tuple(frames)
    return TimelineSlot(
        t_start=t_start, t_end=t_end, frame_refs=refs, alpha_text=alpha, gamma_text=gamma
    )


def candidate_payload(
    question: str = "What does the narrator say the blender costs?",
    answer: str = "Twenty dollars",
    difficulty: str = "L2",
    evidence: list[dict] | None = None,
    **extra,
) -> dict:
    payload = {
        "question": question,
        "answer": answer,
        "reasoning": "Stated in the narration.",
        "difficulty": difficulty,
        "evidence": evidence
        if evidence is not None
        else [{"modality": "A", "t_start": 1, "t_end": 2, "excerpt": "twenty dollars"}],
    }
    payload.update(extra)
    return payload


@pytest.fixture
def price_context() -> StructuredContext:
    slots = (
        make_slot(0, alpha="the new blender", gamma="SALE 50% OFF"),
        make_slot(1, alpha=" costs twenty dollars", gamma="BUY NOW"),
        make_slot(2, alpha=" today only", gamma=""),
    )
    return StructuredContext(
        video_id="vid-price", slots=slots, metadata={"title": "Blender promo"}
    )
