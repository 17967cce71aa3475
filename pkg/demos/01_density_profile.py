"""Rate how much a clip changes visually and how much it says.

Three synthetic videos stand in for the usual suspects: a static product
shot, a hard-cut montage, and a slow pan that sits in between.  Frame
embeddings drive the visual score; narration and on-screen text are
rated in words per second.  The last section assembles a manifest on
disk and produces the corpus-level report and summary table.
"""

import tempfile
from pathlib import Path

import numpy as np

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
from vidbench.density import (
    DensityConfig,
    corpus_density_report,
    text_density,
    visual_dynamic_density,
    write_density_table,
)


def unit(*coords):
    v = np.asarray(coords, dtype=np.float64)
    return v / np.linalg.norm(v)


cfg = DensityConfig()

# A clip whose frames never change scores exactly 0: every neighborhood
# is perfectly self-similar, so there is no visual motion to measure.
static = FrameEmbeddingSequence("static", np.tile(unit(1.0, 0.0, 0.0), (8, 1)))
print("static clip:      ", visual_dynamic_density(static, cfg))

# Orthogonal frames are as different as the clamped cosine can express,
# so an alternating pair saturates the score at the scale factor.
montage = FrameEmbeddingSequence("montage", np.array([unit(1, 0, 0), unit(0, 1, 0)] * 4))
print("hard-cut montage: ", visual_dynamic_density(montage, DensityConfig(neighborhood_d=1)))

# A slow pan drifts between those extremes.
pan = FrameEmbeddingSequence("pan", np.array([unit(1.0, 0.15 * i, 0.0) for i in range(8)]))
print("slow pan:         ", round(visual_dynamic_density(pan, cfg), 2))

# Speech and caption densities are words per second.  Han characters
# count one word each, so mixed-script ad copy is rated consistently.
print("speech density:   ", text_density(["the new blender", "costs twenty dollars"], 5.0))
print("caption density:  ", text_density(["新品上市八折优惠"], 4.0))

# Corpus-level reporting works off a manifest plus artifact files.
with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    (root / "art").mkdir()
    save_embeddings(static, root / "art" / "static.evem")
    save_embeddings(montage, root / "art" / "montage.evem")
    save_asr([AsrSegment(0.0, 4.0, "the new blender costs twenty dollars")],
             root / "art" / "static.asr.jsonl")
    save_ocr([OcrRecord(0, ("SALE",)), OcrRecord(1, ("BUY NOW",))],
             root / "art" / "static.ocr.jsonl")

    manifest = Manifest(records=(
        VideoRecord(video_id="static", duration_s=4.0, category="kitchen",
                    embedding_ref="art/static.evem",
                    asr_ref="art/static.asr.jsonl", ocr_ref="art/static.ocr.jsonl"),
        VideoRecord(video_id="montage", duration_s=2.0, category="fitness",
                    embedding_ref="art/montage.evem"),
    ))
    save_manifest(manifest, root / "manifest.jsonl")

    report = corpus_density_report(manifest, cfg, base_dir=root)
    print("\nper-video profiles:")
    for profile in report.per_video:
        print(f"  {profile.video_id}: V={profile.v_den} A={profile.a_den} O={profile.o_den}")
    print("corpus means:", report.mean_v, report.mean_a, report.mean_o)

    # the one-row summary table is what lands in writeups
    write_density_table(report, root / "summary.tsv", corpus_name="demo")
    print("\n" + (root / "summary.tsv").read_text(encoding="utf-8"))
