"""Multi-modal information density metrics.

Three per-video numbers quantify how much is happening in each channel:

* visual dynamic density, the rate of semantic change between frames,
  measured as ``alpha * mean_i(1 - S_i)`` where ``S_i`` is the decay-weighted
  average cosine similarity of frame ``i`` to its temporal neighborhood,
* audio density, spoken words per second of video,
* textual density, on-screen (OCR) words per second of video.

The neighborhood of frame ``i`` is ``{j : |j - i| <= d}`` clipped to the
video, excluding ``i`` itself, with weights ``w(i, j) = exp(-|j - i| / (2d))``.
Cosines are computed as ``dot(u, v) / sqrt(dot(u, u) * dot(v, v))`` so that
identical frames score exactly 1.0, and are clamped to [0, 1] by default
(self-supervised features rarely anti-correlate; clamping keeps the density
inside [0, alpha]).

All functions here are pure; corpus reports may evaluate per-video profiles
in parallel and merge deterministically by video id.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import textutil
from .corpus import Manifest, load_artifacts
from .errors import ConfigError, InputError
from .textutil import word_count

DEFAULT_ALPHA = 100.0
DEFAULT_NEIGHBORHOOD = 5

# Histogram bucket edges declared in every report for reproducibility.
# The final bucket absorbs overflow.
V_DEN_EDGES = tuple(float(x) for x in range(0, 101, 10))
A_DEN_EDGES = tuple(x / 2 for x in range(0, 21))
O_DEN_EDGES = tuple(float(x) for x in range(0, 42, 2))


class EmptyReportError(InputError):
    """Report requested over an empty manifest."""


@dataclass(frozen=True)
class DensityConfig:
    neighborhood_d: int = DEFAULT_NEIGHBORHOOD
    alpha: float = DEFAULT_ALPHA
    clamp_negative_cosine: bool = True
    token_mode: str = textutil.TOKEN_MODE

    def __post_init__(self):
        if self.neighborhood_d < 1:
            raise ConfigError(f"neighborhood_d must be >= 1, got {self.neighborhood_d}")
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if self.token_mode != textutil.TOKEN_MODE:
            raise ConfigError(f"unsupported token_mode {self.token_mode!r}")


@dataclass(frozen=True)
class DensityProfile:
    """Per-video densities; None marks a modality whose artifact is absent."""

    video_id: str
    v_den: float | None
    a_den: float | None
    o_den: float | None


@dataclass(frozen=True)
class CorpusDensityReport:
    per_video: tuple[DensityProfile, ...]
    mean_v: float | None
    mean_a: float | None
    mean_o: float | None
    histograms: dict = field(default_factory=dict)
    config: DensityConfig = field(default_factory=DensityConfig)


def _pair_cosines(vectors: np.ndarray, offset: int, clamp: bool) -> np.ndarray:
    """Cosine similarity of frame t to frame t+offset, for every valid t."""
    dots = np.einsum("td,td->t", vectors[:-offset], vectors[offset:])
    sq = np.einsum("td,td->t", vectors, vectors)
    cos = dots / np.sqrt(sq[:-offset] * sq[offset:])
    if clamp:
        cos = np.clip(cos, 0.0, 1.0)
    else:
        cos = np.clip(cos, -1.0, 1.0)
    return cos


def _neighborhood_means(vectors: np.ndarray, cfg: DensityConfig) -> np.ndarray:
    """S_i for every frame, vectorized over the diagonal bands of the Gram matrix."""
    t = vectors.shape[0]
    num = np.zeros(t)
    den = np.zeros(t)
    for k in range(1, min(cfg.neighborhood_d, t - 1) + 1):
        w = math.exp(-k / (2.0 * cfg.neighborhood_d))
        cos = _pair_cosines(vectors, k, cfg.clamp_negative_cosine)
        num[:-k] += w * cos
        den[:-k] += w
        num[k:] += w * cos
        den[k:] += w
    # an empty neighborhood (single frame) scores 1 by convention
    return np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 1.0)


def neighborhood_similarity(embeddings, cfg: DensityConfig, i: int) -> float:
    """Weighted mean cosine of frame *i* (1-based) to its neighborhood.

    Returns 1.0 when the neighborhood is empty (single-frame video).
    """
    t = embeddings.frame_count
    if not 1 <= i <= t:
        raise IndexError(f"frame index {i} out of range 1..{t}")
    vectors = embeddings.vectors
    num = 0.0
    den = 0.0
    for j in range(max(1, i - cfg.neighborhood_d), min(t, i + cfg.neighborhood_d) + 1):
        if j == i:
            continue
        w = math.exp(-abs(j - i) / (2.0 * cfg.neighborhood_d))
        u = vectors[i - 1]
        v = vectors[j - 1]
        cos = float(np.dot(u, v) / math.sqrt(float(np.dot(u, u)) * float(np.dot(v, v))))
        if cfg.clamp_negative_cosine:
            cos = min(max(cos, 0.0), 1.0)
        else:
            cos = min(max(cos, -1.0), 1.0)
        num += w * cos
        den += w
    if den == 0.0:
        return 1.0
    return num / den


def visual_dynamic_density(embeddings, cfg: DensityConfig | None = None) -> float:
    """alpha-scaled mean dissimilarity of each frame to its neighborhood.

    0 for a static video, alpha when every neighbor is orthogonal.
    Single-frame input returns 0.
    """
    cfg = cfg or DensityConfig()
    if embeddings.frame_count == 1:
        return 0.0
    s_bar = _neighborhood_means(embeddings.vectors, cfg)
    return float(cfg.alpha * np.mean(1.0 - s_bar))


def text_density(text_units, duration_s: float, cfg: DensityConfig | None = None) -> float:
    """Words per second across *text_units*.

    Units are joined with a single space so unit boundaries always act as
    word boundaries; counting follows the mixed-script tokenizer.
    """
    cfg = cfg or DensityConfig()
    if duration_s <= 0:
        raise InputError(f"duration_s must be positive, got {duration_s}")
    return word_count(" ".join(text_units)) / duration_s


def _histogram(values: list[float], edges: tuple[float, ...]) -> dict:
    counts = [0] * (len(edges) - 1)
    for v in values:
        idx = int(np.searchsorted(edges, v, side="right")) - 1
        idx = min(max(idx, 0), len(counts) - 1)
        counts[idx] += 1
    return {"edges": list(edges), "counts": counts}


def profile_record(record, cfg: DensityConfig, base_dir=None) -> DensityProfile:
    """Compute the density profile for one record from its referenced artifacts."""
    artifacts = load_artifacts(record, base_dir=base_dir)
    v_den = a_den = o_den = None
    if artifacts.embeddings is not None:
        v_den = visual_dynamic_density(artifacts.embeddings, cfg)
    if artifacts.asr is not None:
        a_den = text_density([seg.text for seg in artifacts.asr], record.duration_s, cfg)
    if artifacts.ocr is not None:
        texts = [t for rec in artifacts.ocr for t in rec.texts]
        o_den = text_density(texts, record.duration_s, cfg)
    return DensityProfile(video_id=record.video_id, v_den=v_den, a_den=a_den, o_den=o_den)


def corpus_density_report(
    manifest: Manifest, cfg: DensityConfig | None = None, base_dir=None
) -> CorpusDensityReport:
    """Per-video profiles plus corpus means and histograms.

    Videos missing an artifact contribute an absent entry for that metric
    and are excluded from its mean.  Means are per-video unweighted
    arithmetic means.
    """
    cfg = cfg or DensityConfig()
    if len(manifest) == 0:
        raise EmptyReportError("cannot build a density report over an empty manifest")
    profiles = [profile_record(rec, cfg, base_dir=base_dir) for rec in manifest.records]
    profiles.sort(key=lambda p: p.video_id)

    def mean_of(values: list[float]) -> float | None:
        return float(np.mean(values)) if values else None

    v_vals = [p.v_den for p in profiles if p.v_den is not None]
    a_vals = [p.a_den for p in profiles if p.a_den is not None]
    o_vals = [p.o_den for p in profiles if p.o_den is not None]
    histograms = {
        "v_den": _histogram(v_vals, V_DEN_EDGES),
        "a_den": _histogram(a_vals, A_DEN_EDGES),
        "o_den": _histogram(o_vals, O_DEN_EDGES),
    }
    return CorpusDensityReport(
        per_video=tuple(profiles),
        mean_v=mean_of(v_vals),
        mean_a=mean_of(a_vals),
        mean_o=mean_of(o_vals),
        histograms=histograms,
        config=cfg,
    )


def report_to_json_dict(report: CorpusDensityReport) -> dict:
    return {
        "config": {
            "neighborhood_d": report.config.neighborhood_d,
            "alpha": report.config.alpha,
            "clamp_negative_cosine": report.config.clamp_negative_cosine,
            "token_mode": report.config.token_mode,
        },
        "mean_v": report.mean_v,
        "mean_a": report.mean_a,
        "mean_o": report.mean_o,
        "histograms": report.histograms,
        "per_video": [
            {"video_id": p.video_id, "v_den": p.v_den, "a_den": p.a_den, "o_den": p.o_den}
            for p in report.per_video
        ],
    }


def write_density_report(report: CorpusDensityReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report_to_json_dict(report), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def write_density_table(
    report: CorpusDensityReport, path: str | Path, corpus_name: str = "corpus"
) -> None:
    """Tab-separated one-row summary: corpus name and the three mean densities."""
    def fmt(x: float | None) -> str:
        return "" if x is None else f"{x:.2f}"

    lines = [
        "corpus\tn_videos\tV_den\tA_den\tO_den",
        "\t".join(
            [
                corpus_name,
                str(len(report.per_video)),
                fmt(report.mean_v),
                fmt(report.mean_a),
                fmt(report.mean_o),
            ]
        ),
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
