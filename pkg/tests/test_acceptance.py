"""Acceptance gate: one test per binding numeric contract.

Each test prints a single pass or fail line and enforces its own
wall-clock budget.  The oracles are deliberately primitive and kept
independent of the library code they check: rational arithmetic for the
reward grid, a nested-loop recomputation for the density formula, and
flat spreadsheet-style means for the evaluation report.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np

from vidbench.alignment import StructuredContext, build_timeline, chunk_asr_segment, merge_slots
from vidbench.annotate import AnnotationBackends, annotate_task
from vidbench.backends import BackendProfile, MockBackend
from vidbench.cli import main
from vidbench.corpus import AsrSegment, FrameEmbeddingSequence, Manifest, OcrRecord, VideoRecord
from vidbench.density import DensityConfig, visual_dynamic_density
from vidbench.judging import GRID, score_to_metrics
from vidbench.qa import QaStatus, TaskKind, make_qa_id
from vidbench.rewards import (
    RewardConfig,
    granular_reward,
    group_advantages,
    trace_reward,
    validate_format,
)
from vidbench.sampling import SamplingConfig, build_plan, plan_to_json_dict, sampling_ratio

from conftest import candidate_payload, fenced, make_slot, unit, write_corpus, write_scenario


@contextmanager
def criterion(number: int, label: str, budget_s: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"criterion {number} ({label}): FAIL")
        raise
    elapsed = time.perf_counter() - start
    if elapsed >= budget_s:
        print(f"criterion {number} ({label}): FAIL ({elapsed:.2f}s over the {budget_s}s budget)")
        raise AssertionError(f"criterion {number} took {elapsed:.2f}s, budget {budget_s}s")
    print(f"criterion {number} ({label}): PASS in {elapsed:.2f}s")


# ---------------------------------------------------------------- criterion 1


def test_criterion_1_granular_reward_grid():
    with criterion(1, "granular reward grid and top jump", 1.0):
        def oracle(x: Fraction) -> Fraction:
            s = Fraction(1 if x == 1 else 0)
            if x == 1:
                r2 = Fraction(1)
            elif x in (Fraction(3, 4), Fraction(1, 2)):
                r2 = Fraction(1, 2)
            else:
                r2 = Fraction(0)
            return (s + r2 + x) / 3

        grid = [Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)]
        for x in grid:
            assert abs(granular_reward(float(x)) - oracle(x)) <= 1e-9
        assert abs(granular_reward(0.25) - Fraction(1, 12)) <= 1e-9
        assert abs(granular_reward(0.75) - Fraction(5, 12)) <= 1e-9

        increments = [oracle(b) - oracle(a) for a, b in zip(grid, grid[1:])]
        assert increments[2] == Fraction(1, 12)
        jump = increments[-1]
        assert jump == Fraction(7, 12)
        assert all(jump > step for step in increments[:-1])
        floats = [granular_reward(float(x)) for x in grid]
        for (lo, hi), step in zip(zip(floats, floats[1:]), increments):
            assert abs((hi - lo) - step) <= 1e-9


# ---------------------------------------------------------------- criterion 2


def test_criterion_2_composite_reward_over_all_cases():
    with criterion(2, "composite reward bounds over 50 cases", 1.0):
        valid = validate_format("<think>reasoning</think><answer>final</answer>")
        malformed = validate_format("final answer, no tags")
        assert valid.fmt_penalty == 0
        assert malformed.fmt_penalty == -1

        checked = 0
        for x_a in GRID:
            for x_t in GRID:
                for fmt in (valid, malformed):
                    r = trace_reward(x_a, x_t, fmt)
                    checked += 1
                    assert -1.0 <= r <= 1.0
                    if (x_a, x_t, fmt.fmt_penalty) == (1.0, 1.0, 0):
                        assert r == 1.0
                    else:
                        assert r != 1.0
        assert checked == 50
        assert trace_reward(1.0, 1.0, malformed) == 0.0


# ---------------------------------------------------------------- criterion 3


def test_criterion_3_advantage_normalization_moments():
    with criterion(3, "advantage normalization over 1000 groups", 5.0):
        rng = random.Random(20260816)
        cfg = RewardConfig(epsilon=1e-12)
        for trial in range(1000):
            n = rng.randint(2, 16)
            if trial % 10 == 0:
                rewards = [rng.uniform(-1.0, 1.0)] * n
            else:
                rewards = [rng.uniform(-1.0, 1.0) for _ in range(n)]
            advantages = group_advantages(rewards, cfg)
            if max(rewards) == min(rewards):
                assert advantages == [0.0] * n
                continue
            mean = sum(advantages) / n
            pstd = math.sqrt(sum((a - mean) ** 2 for a in advantages) / n)
            assert abs(mean) <= 1e-9
            assert abs(pstd - 1.0) <= 1e-6


# ---------------------------------------------------------------- criterion 4


def naive_density(vectors: np.ndarray, d: int, alpha: float, clamp: bool) -> float:
    """Nested-loop recomputation of the visual density, 1-based indices."""
    t = vectors.shape[0]
    if t == 1:
        return 0.0
    total = 0.0
    for i in range(1, t + 1):
        num = 0.0
        den = 0.0
        for j in range(1, t + 1):
            if j == i or abs(j - i) > d:
                continue
            w = math.exp(-abs(j - i) / (2.0 * d))
            vi, vj = vectors[i - 1], vectors[j - 1]
            cos = float(np.dot(vi, vj)) / math.sqrt(
                float(np.dot(vi, vi)) * float(np.dot(vj, vj))
            )
            if clamp and cos < 0.0:
                cos = 0.0
            num += w * cos
            den += w
        mean_sim = num / den if den > 0.0 else 1.0
        total += 1.0 - mean_sim
    return alpha * total / t


def test_criterion_4_visual_density_matches_naive_oracle():
    with criterion(4, "visual density vs nested-loop oracle", 10.0):
        rng = np.random.default_rng(20260816)
        for trial in range(500):
            t = int(rng.integers(1, 11))
            dim = int(rng.integers(1, 9))
            d = int(rng.integers(1, 4))
            clamp = bool(trial % 2)
            vectors = rng.normal(size=(t, dim))
            norms = np.linalg.norm(vectors, axis=1)
            vectors[norms < 1e-6] += 1.0  # every frame vector must be nonzero
            seq = FrameEmbeddingSequence(video_id=f"t{trial}", vectors=vectors)
            cfg = DensityConfig(neighborhood_d=d, clamp_negative_cosine=clamp)
            got = visual_dynamic_density(seq, cfg)
            want = naive_density(np.asarray(vectors, dtype=np.float64), d, cfg.alpha, clamp)
            assert abs(got - want) <= 1e-9

        static = FrameEmbeddingSequence("static", np.tile(unit(2.0, 1.0), (6, 1)))
        assert visual_dynamic_density(static, DensityConfig()) == 0.0
        alternating = FrameEmbeddingSequence("alt", np.array([unit(1, 0), unit(0, 1)] * 3))
        assert visual_dynamic_density(alternating, DensityConfig(neighborhood_d=1)) == 100.0


# ---------------------------------------------------------------- criterion 5


def test_criterion_5_sampling_law_and_plan_determinism():
    with criterion(5, "sampling law and plan determinism", 5.0):
        rng = random.Random(99)
        for _ in range(100):
            a = rng.uniform(1e-6, 1.0)
            b = rng.randrange(1, 10**6)
            assert sampling_ratio(b, SamplingConfig(a=a, b=float(b))) == a / 2.0

        # below roughly b/37 the law saturates to the upper bound in float64,
        # so strict ordering is checked over the numerically live domain
        for _ in range(10_000):
            b = float(rng.randrange(1, 10**5))
            lo = max(1, math.ceil(b / 30.0))
            x1 = rng.randrange(lo, 10**6)
            x2 = rng.randrange(x1 + 1, 10**6 + 1)
            cfg = SamplingConfig(a=0.5, b=b)
            assert sampling_ratio(x1, cfg) > sampling_ratio(x2, cfg)

        records = tuple(
            VideoRecord(video_id=f"v{i:03d}", duration_s=5.0, category=f"cat-{i % 5}")
            for i in range(200)
        )
        manifest = Manifest(records=records)
        cfg = SamplingConfig(a=0.5, b=40.0, seed=12345)
        digests = {
            hashlib.sha256(
                json.dumps(plan_to_json_dict(build_plan(manifest, cfg)), sort_keys=True).encode()
            ).hexdigest()
            for _ in range(2)
        }
        assert len(digests) == 1


# ---------------------------------------------------------------- criterion 6


_CJK = [chr(c) for c in range(0x4E00, 0x4E00 + 256)]
_LATIN = list("abcdefghijklmnopqrstuvwxyz ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789,.!?")
_POOL = _CJK + _LATIN


def random_text(rng: random.Random, max_len: int = 80) -> str:
    return "".join(rng.choice(_POOL) for _ in range(rng.randrange(0, max_len)))


def test_criterion_6_lossless_chunking_and_timeline_coverage():
    with criterion(6, "lossless chunking and timeline coverage", 10.0):
        rng = random.Random(424242)
        for _ in range(1000):
            start = rng.uniform(0.0, 50.0)
            segment = AsrSegment(start, start + rng.uniform(0.05, 20.0), random_text(rng))
            chunks = chunk_asr_segment(segment)
            assert "".join(text for _, text in chunks) == segment.text
            seconds = [sec for sec, _ in chunks]
            assert seconds[0] == math.floor(segment.start_s)
            assert seconds == list(range(seconds[0], seconds[0] + len(seconds)))

        for vid in range(100):
            record = VideoRecord(
                video_id=f"rand-{vid}", duration_s=rng.uniform(0.5, 12.0), category="x"
            )
            n_slots = math.ceil(record.duration_s)
            asr = []
            cursor = 0.0
            for _ in range(rng.randrange(0, 4)):
                if cursor >= record.duration_s - 0.05:
                    break
                s = rng.uniform(cursor, record.duration_s - 0.01)
                e = rng.uniform(s + 0.01, record.duration_s)
                asr.append(AsrSegment(s, e, random_text(rng, 40)))
                cursor = e
            ocr = [
                OcrRecord(sec, (random_text(rng, 12) or "X",))
                for sec in range(n_slots)
                if rng.random() < 0.4
            ]
            timeline = build_timeline(record, None, asr, ocr)
            spans = [(slot.t_start, slot.t_end) for slot in timeline.slots]
            assert spans == [(i, i + 1) for i in range(n_slots)]
            merged = merge_slots(timeline)
            assert merge_slots(merged) == merged


# ---------------------------------------------------------------- criterion 7


def test_criterion_7_metric_projection():
    with criterion(7, "five-level metric projection", 1.0):
        expected = {
            0.0: (0.0, 0.0, 0.0),
            0.25: (0.0, 0.0, 0.25),
            0.5: (0.0, 0.5, 0.5),
            0.75: (0.0, 0.5, 0.75),
            1.0: (1.0, 1.0, 1.0),
        }
        assert sorted(expected) == sorted(GRID)
        for x, (s, r2, r5) in expected.items():
            metrics = score_to_metrics(x)
            assert (metrics.s, metrics.r2, metrics.r5) == (s, r2, r5)
            assert metrics.s <= metrics.r2 <= metrics.r5


# ---------------------------------------------------------------- criterion 8


class CountingBackend:
    def __init__(self, inner):
        self.inner = inner
        self.name = inner.name
        self.calls = 0

    def complete(self, system: str, user: str, temperature: float = 0.0) -> str:
        self.calls += 1
        return self.inner.complete(system, user, temperature)


def scripted_backends(gen_reply: str, judge_reply: str) -> AnnotationBackends:
    return AnnotationBackends(
        generator=MockBackend(name="generator", script=[{"reply": gen_reply, "times": 0}]),
        generator_profile=BackendProfile("generator", "mock:gen", 5.0, 2),
        judge=CountingBackend(
            MockBackend(name="judge", script=[{"reply": judge_reply, "times": 0}])
        ),
        judge_profile=BackendProfile("judge", "mock:judge", 5.0, 2),
    )


def blender_context() -> StructuredContext:
    slots = (
        make_slot(0, alpha="the new blender", gamma="SALE 50% OFF"),
        make_slot(1, alpha=" costs twenty dollars", gamma="BUY NOW"),
        make_slot(2, alpha=" today only", gamma=""),
    )
    return StructuredContext(video_id="vid-loop", slots=slots)


def test_criterion_8_annotation_loop_outcomes():
    with criterion(8, "annotation loop outcomes with scripted judges", 10.0):
        context = blender_context()
        gen_reply = fenced([candidate_payload()])
        traceable = [{"modality": "A", "t_start": 0, "t_end": 3, "excerpt": "twenty dollars"}]

        rejecting = scripted_backends(gen_reply, fenced(candidate_payload(evidence=[])))
        item = annotate_task(context, TaskKind.BP, rejecting)
        assert item.status is QaStatus.MANUAL_CORRECTION
        assert item.cycle == 3
        # the first attempt plus exactly three regenerations
        assert rejecting.judge.calls == 4

        accepting = scripted_backends(gen_reply, fenced(candidate_payload(evidence=traceable)))
        item = annotate_task(context, TaskKind.BP, accepting)
        assert item.status is QaStatus.PENDING
        assert item.cycle == 0
        assert accepting.judge.calls == 1

        one_modality = scripted_backends(
            gen_reply,
            fenced(
                candidate_payload(
                    evidence=traceable, question_modality="O", decisive_modality="A"
                )
            ),
        )
        item = annotate_task(context, TaskKind.CM, one_modality)
        assert item.status is QaStatus.MANUAL_CORRECTION
        assert item.status not in (QaStatus.PENDING, QaStatus.ACCEPTED)


# ---------------------------------------------------------------- criterion 9


_PROJECTION = {
    1.0: (1.0, 1.0, 1.0),
    0.75: (0.0, 0.5, 0.75),
    0.5: (0.0, 0.5, 0.5),
    0.25: (0.0, 0.0, 0.25),
    0.0: (0.0, 0.0, 0.0),
}


def mean_exact(values: list[float]) -> float:
    # grid values are dyadic, so the sum is exact and only the division rounds
    return float(sum(Fraction(v) for v in values) / len(values))


def run_pipeline(base, run_name: str, manifest, pred_path, fixtures) -> dict[str, bytes]:
    run = base / run_name
    run.mkdir()
    ctx = run / "ctx"
    assert main(["align", "--manifest", str(manifest), "--out-dir", str(ctx)]) == 0
    qa = run / "qa.jsonl"
    assert main(
        ["annotate", "--manifest", str(manifest), "--contexts", str(ctx),
         "--out", str(qa), "--gen-backend", "mock:e2e-gen",
         "--judge-backend", "mock:e2e-adjudicate", "--tasks", "BP,ML",
         "--candidates", "1", "--fixtures-dir", str(fixtures)]
    ) == 0
    report = run / "report.json"
    table = run / "report.tsv"
    assert main(
        ["evaluate", "--manifest", str(manifest), "--qa", str(qa), "--pred", str(pred_path),
         "--judge-backend", "mock:e2e-eval", "--out", str(report), "--table", str(table),
         "--fixtures-dir", str(fixtures)]
    ) == 0
    outputs = {"qa.jsonl": qa.read_bytes(), "report.json": report.read_bytes(),
               "report.tsv": table.read_bytes()}
    for path in sorted(ctx.glob("*.context.json")):
        outputs[f"ctx/{path.name}"] = path.read_bytes()
    return outputs


def test_criterion_9_end_to_end_pipeline(tmp_path):
    with criterion(9, "five-video pipeline with exact recomputation", 30.0):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        manifest = write_corpus(
            corpus,
            [
                {
                    "video_id": f"vid-{i:02d}",
                    "duration_s": 3.0,
                    "category": "kitchen" if i % 2 else "fitness",
                    "vectors": [unit(1, 0), unit(0, 1), unit(1, 1)],
                    "asr": [(0.0, 3.0, "the new blender costs twenty dollars")],
                    "ocr": [(0, ["SALE"]), (2, ["BUY NOW"])],
                }
                for i in range(1, 6)
            ],
        )
        write_scenario(
            tmp_path, "e2e-gen", [{"reply": fenced([candidate_payload()]), "times": 0}]
        )
        traceable = [{"modality": "A", "t_start": 0, "t_end": 3, "excerpt": "twenty dollars"}]
        write_scenario(
            tmp_path, "e2e-adjudicate",
            [{"reply": fenced(candidate_payload(evidence=traceable)), "times": 0}],
        )
        fixtures = tmp_path / "mock"

        # identities are derivable up front, so the judge script and the
        # expected report can both be fixed before anything runs
        question = "What does the narrator say the blender costs?"
        task_by_id = {
            make_qa_id(f"vid-{i:02d}", task, question): task
            for i in range(1, 6)
            for task in (TaskKind.BP, TaskKind.ML)
        }
        scores = [1.0, 0.75, 0.5, 0.25, 0.0, 1.0, 1.0, 0.5, 0.0, 0.75]
        score_by_id = dict(zip(sorted(task_by_id), scores))  # judged in sorted id order
        write_scenario(
            tmp_path, "e2e-eval",
            [{"reply": f"score: {score_by_id[qa_id]}"} for qa_id in sorted(score_by_id)],
        )
        predictions = tmp_path / "pred.jsonl"
        predictions.write_text(
            "".join(
                json.dumps({"qa_id": qa_id, "prediction": f"model answer {qa_id}"}) + "\n"
                for qa_id in task_by_id
            ),
            encoding="utf-8",
        )

        first = run_pipeline(tmp_path, "run1", manifest, predictions, fixtures)
        second = run_pipeline(tmp_path, "run2", manifest, predictions, fixtures)
        assert first == second  # byte-identical reruns, file by file

        qa_rows = [json.loads(line) for line in first["qa.jsonl"].decode().splitlines()]
        assert {row["qa_id"] for row in qa_rows} == set(task_by_id)
        assert all(row["question"] == question for row in qa_rows)

        report = json.loads(first["report.json"].decode())
        per_item = {row["qa_id"]: row for row in report["per_item"]}
        assert set(per_item) == set(task_by_id)
        for qa_id, row in per_item.items():
            assert row["x"] == score_by_id[qa_id]
            assert (row["s"], row["r2"], row["r5"]) == _PROJECTION[score_by_id[qa_id]]

        by_task = {"BP": [], "ML": []}
        for qa_id, task in task_by_id.items():
            by_task[task.value].append(score_by_id[qa_id])
        for task_name, xs in by_task.items():
            block = report["per_task"][task_name]
            assert block["n"] == len(xs)
            for idx, key in ((0, "mean_s"), (1, "mean_r2"), (2, "mean_r5")):
                assert block[key] == mean_exact([_PROJECTION[x][idx] for x in xs])
        all_xs = list(score_by_id.values())
        for idx, key in ((0, "mean_s"), (1, "mean_r2"), (2, "mean_r5")):
            assert report["all"][key] == mean_exact([_PROJECTION[x][idx] for x in all_xs])
            macro = mean_exact(
                [report["per_task"][name][key] for name in ("BP", "ML")]
            )
            assert report["all_macro"][key] == macro
        assert report["all"]["n"] == 10
        assert report["n_excluded"] == 0
