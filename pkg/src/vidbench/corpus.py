"""Corpus data model: video records, modality artifacts, and their file formats.

File formats (all line-delimited structured text, streamable over large
corpora):

* ``manifest.jsonl``: one video record per line with fields exactly
  ``video_id, duration_s, category, metadata, embedding_ref, asr_ref,
  ocr_ref``.  An optional first line ``{"schema_version": N}`` pins the
  schema; absent means version 1.
* ``*.asr.jsonl``: speech segments, fields ``start_s, end_s, text``.
* ``*.ocr.jsonl``: on-screen text per second, fields ``second_index, texts``.
* embeddings: a dense binary block with magic ``EVEM``, u32 frame count T,
  u32 dimension D, then T*D little-endian f32, plus a small JSON sidecar
  written next to it for human inspection (the binary header is
  authoritative on load).

Loaded values are immutable after construction; loading distinct records
may proceed in parallel.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError, ValidationError

SCHEMA_VERSION = 1

_MANIFEST_FIELDS = (
    "video_id",
    "duration_s",
    "category",
    "metadata",
    "embedding_ref",
    "asr_ref",
    "ocr_ref",
)

_EMBEDDING_MAGIC = b"EVEM"


class ManifestParseError(InputError):
    """A manifest or artifact line failed to parse; carries its locus."""

    def __init__(self, path: str | Path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class DuplicateIdError(ValidationError):
    def __init__(self, duplicates: list[str]):
        super().__init__(f"duplicate video_id(s): {', '.join(sorted(duplicates))}")
        self.duplicates = sorted(duplicates)


class SchemaVersionError(InputError):
    def __init__(self, found: int):
        super().__init__(
            f"unsupported schema_version {found}; this toolkit supports {SCHEMA_VERSION}"
        )
        self.found = found


class ArtifactMissingError(InputError):
    """A record references an artifact file that does not exist."""


class ArtifactShapeError(ValidationError):
    """Embedding vectors disagree on dimension or the binary block is truncated."""


class ArtifactIngestError(ValidationError):
    """An artifact value is unusable (zero or non-finite embedding vector)."""


@dataclass(frozen=True)
class VideoRecord:
    """One corpus entry binding a video id to its modality artifacts."""

    video_id: str
    duration_s: float
    category: str
    metadata: dict[str, str] = field(default_factory=dict)
    embedding_ref: str | None = None
    asr_ref: str | None = None
    ocr_ref: str | None = None

    def __post_init__(self):
        if not self.video_id:
            raise ValidationError("video_id must be non-empty")
        if not (isinstance(self.duration_s, (int, float)) and self.duration_s > 0):
            raise ValidationError(
                f"record {self.video_id!r}: duration_s must be > 0, got {self.duration_s!r}"
            )
        # durations carry millisecond precision; timeline math uses seconds
        object.__setattr__(self, "duration_s", round(float(self.duration_s), 3))
        for key, value in self.metadata.items():
            if not isinstance(key, str) or not isinstance(value, str):
                raise ValidationError(
                    f"record {self.video_id!r}: metadata must map strings to strings"
                )

    def to_json_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "duration_s": self.duration_s,
            "category": self.category,
            "metadata": dict(self.metadata),
            "embedding_ref": self.embedding_ref,
            "asr_ref": self.asr_ref,
            "ocr_ref": self.ocr_ref,
        }


@dataclass(frozen=True)
class FrameEmbeddingSequence:
    """Per-frame feature vectors sampled at 1 frame per second."""

    video_id: str
    vectors: np.ndarray  # (T, D) float32/float64
    fps: int = 1

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=np.float64, copy=True)
        if vectors.ndim != 2 or vectors.shape[0] < 1 or vectors.shape[1] < 1:
            raise ArtifactShapeError(
                f"{self.video_id}: embeddings must be a (T>=1, D>=1) matrix, "
                f"got shape {vectors.shape}"
            )
        if not np.all(np.isfinite(vectors)):
            raise ArtifactIngestError(f"{self.video_id}: embeddings contain non-finite values")
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms == 0.0):
            bad = int(np.argmax(norms == 0.0))
            raise ArtifactIngestError(
                f"{self.video_id}: frame {bad} is the zero vector; cosine undefined"
            )
        vectors.flags.writeable = False
        object.__setattr__(self, "vectors", vectors)

    @property
    def frame_count(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


@dataclass(frozen=True)
class AsrSegment:
    """One transcribed speech span, [start_s, end_s)."""

    start_s: float
    end_s: float
    text: str

    def __post_init__(self):
        if self.start_s < 0:
            raise ValidationError(f"ASR segment start_s must be >= 0, got {self.start_s}")
        if self.end_s <= self.start_s:
            raise ValidationError(
                f"ASR segment must have end_s > start_s, got [{self.start_s}, {self.end_s})"
            )


@dataclass(frozen=True)
class OcrRecord:
    """On-screen text extracted from the frame at one second."""

    second_index: int
    texts: tuple[str, ...]

    def __post_init__(self):
        if self.second_index < 0:
            raise ValidationError(f"OCR second_index must be >= 0, got {self.second_index}")
        object.__setattr__(self, "texts", tuple(self.texts))


@dataclass(frozen=True)
class Manifest:
    records: tuple[VideoRecord, ...]
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if self.schema_version != SCHEMA_VERSION:
            raise SchemaVersionError(self.schema_version)
        seen: dict[str, int] = {}
        for rec in self.records:
            seen[rec.video_id] = seen.get(rec.video_id, 0) + 1
        dupes = [vid for vid, n in seen.items() if n > 1]
        if dupes:
            raise DuplicateIdError(dupes)

    def __len__(self) -> int:
        return len(self.records)

    def by_id(self, video_id: str) -> VideoRecord:
        for rec in self.records:
            if rec.video_id == video_id:
                return rec
        raise KeyError(video_id)

    def categories(self) -> list[str]:
        return sorted({rec.category for rec in self.records})


@dataclass(frozen=True)
class ModalityArtifacts:
    """Artifacts loaded for one record; unreferenced channels are None."""

    embeddings: FrameEmbeddingSequence | None
    asr: tuple[AsrSegment, ...] | None
    ocr: tuple[OcrRecord, ...] | None


def load_manifest(path: str | Path) -> Manifest:
    """Parse and validate a manifest.jsonl file.

    Raises ManifestParseError with a line locus on malformed JSON or
    unknown/missing fields, DuplicateIdError on repeated ids, and
    SchemaVersionError on an unsupported header.
    """
    path = Path(path)
    records: list[VideoRecord] = []
    schema_version = SCHEMA_VERSION
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestParseError(path, line_no, f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ManifestParseError(path, line_no, "expected a JSON object")
            if line_no == 1 and set(obj) == {"schema_version"}:
                schema_version = obj["schema_version"]
                continue
            unknown = set(obj) - set(_MANIFEST_FIELDS)
            if unknown:
                raise ManifestParseError(
                    path, line_no, f"unknown field(s): {', '.join(sorted(unknown))}"
                )
            missing = {"video_id", "duration_s", "category"} - set(obj)
            if missing:
                raise ManifestParseError(
                    path, line_no, f"missing field(s): {', '.join(sorted(missing))}"
                )
            try:
                records.append(
                    VideoRecord(
                        video_id=obj["video_id"],
                        duration_s=obj["duration_s"],
                        category=obj["category"],
                        metadata=obj.get("metadata") or {},
                        embedding_ref=obj.get("embedding_ref"),
                        asr_ref=obj.get("asr_ref"),
                        ocr_ref=obj.get("ocr_ref"),
                    )
                )
            except ValidationError as exc:
                raise ManifestParseError(path, line_no, str(exc)) from exc
    return Manifest(records=tuple(records), schema_version=schema_version)


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    """Write a manifest back out; loading the result round-trips exactly."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"schema_version": manifest.schema_version}) + "\n")
        for rec in manifest.records:
            fh.write(json.dumps(rec.to_json_dict(), ensure_ascii=False) + "\n")


def load_asr(path: str | Path, duration_s: float | None = None) -> tuple[AsrSegment, ...]:
    """Load an *.asr.jsonl file; segments must be sorted by start_s.

    When *duration_s* is given, segments ending more than 1.0 s past it are
    rejected (transcriber overshoot beyond tolerance).
    """
    path = Path(path)
    segments: list[AsrSegment] = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                seg = AsrSegment(
                    start_s=float(obj["start_s"]),
                    end_s=float(obj["end_s"]),
                    text=str(obj["text"]),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ManifestParseError(path, line_no, f"bad ASR segment: {exc}") from exc
            except ValidationError as exc:
                raise ManifestParseError(path, line_no, str(exc)) from exc
            if segments and seg.start_s < segments[-1].start_s:
                raise ManifestParseError(
                    path, line_no, "segments must be sorted by start_s"
                )
            if duration_s is not None and seg.end_s > duration_s + 1.0:
                raise ManifestParseError(
                    path,
                    line_no,
                    f"segment ends at {seg.end_s}s, past duration {duration_s}s + 1.0s tolerance",
                )
            segments.append(seg)
    return tuple(segments)


def save_asr(segments, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for seg in segments:
            fh.write(
                json.dumps(
                    {"start_s": seg.start_s, "end_s": seg.end_s, "text": seg.text},
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_ocr(path: str | Path, duration_s: float | None = None) -> tuple[OcrRecord, ...]:
    """Load an *.ocr.jsonl file; second indices must lie inside the video."""
    path = Path(path)
    records: list[OcrRecord] = []
    limit = None if duration_s is None else math.ceil(duration_s)
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                rec = OcrRecord(
                    second_index=int(obj["second_index"]),
                    texts=tuple(str(t) for t in obj["texts"]),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ManifestParseError(path, line_no, f"bad OCR record: {exc}") from exc
            except ValidationError as exc:
                raise ManifestParseError(path, line_no, str(exc)) from exc
            if limit is not None and rec.second_index >= limit:
                raise ManifestParseError(
                    path,
                    line_no,
                    f"second_index {rec.second_index} out of range [0, {limit})",
                )
            records.append(rec)
    return tuple(records)


def save_ocr(records, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {"second_index": rec.second_index, "texts": list(rec.texts)},
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_embeddings(path: str | Path, video_id: str = "") -> FrameEmbeddingSequence:
    """Load the dense binary embedding block (magic EVEM, u32 T, u32 D, f32 data)."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 12 or raw[:4] != _EMBEDDING_MAGIC:
        raise ArtifactShapeError(f"{path}: not an embedding block (bad magic)")
    t, d = struct.unpack_from("<II", raw, 4)
    expected = 12 + t * d * 4
    if len(raw) != expected:
        raise ArtifactShapeError(
            f"{path}: expected {expected} bytes for T={t}, D={d}, got {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=12).reshape(t, d)
    return FrameEmbeddingSequence(video_id=video_id or path.stem, vectors=data)


def save_embeddings(embeddings: FrameEmbeddingSequence, path: str | Path) -> None:
    """Write the binary block plus a JSON sidecar describing it."""
    path = Path(path)
    t, d = embeddings.vectors.shape
    with path.open("wb") as fh:
        fh.write(_EMBEDDING_MAGIC)
        fh.write(struct.pack("<II", t, d))
        fh.write(np.ascontiguousarray(embeddings.vectors, dtype="<f4").tobytes())
    sidecar = {
        "video_id": embeddings.video_id,
        "fps": embeddings.fps,
        "frames": t,
        "dim": d,
    }
    Path(str(path) + ".json").write_text(json.dumps(sidecar) + "\n", encoding="utf-8")


def load_artifacts(record: VideoRecord, base_dir: str | Path | None = None) -> ModalityArtifacts:
    """Load whatever artifacts *record* references, validated against it.

    Relative refs resolve against *base_dir* (typically the manifest's
    directory).  Unreferenced channels come back None.
    """
    base = Path(base_dir) if base_dir is not None else Path(".")

    def resolve(ref: str) -> Path:
        p = Path(ref)
        return p if p.is_absolute() else base / p

    embeddings = None
    if record.embedding_ref:
        p = resolve(record.embedding_ref)
        if not p.exists():
            raise ArtifactMissingError(f"{record.video_id}: embeddings file not found: {p}")
        embeddings = load_embeddings(p, video_id=record.video_id)

    asr = None
    if record.asr_ref:
        p = resolve(record.asr_ref)
        if not p.exists():
            raise ArtifactMissingError(f"{record.video_id}: ASR file not found: {p}")
        asr = load_asr(p, duration_s=record.duration_s)

    ocr = None
    if record.ocr_ref:
        p = resolve(record.ocr_ref)
        if not p.exists():
            raise ArtifactMissingError(f"{record.video_id}: OCR file not found: {p}")
        ocr = load_ocr(p, duration_s=record.duration_s)

    return ModalityArtifacts(embeddings=embeddings, asr=asr, ocr=ocr)
