"""Five-tier judged evaluation of model predictions.

A judge backend receives the scoring rubric with the question, ground
truth, evidence chain, and the prediction's answer span, and must reply
with one score from the grid {0, 0.25, 0.5, 0.75, 1}.  Off-grid numbers
are parse errors, never rounded: silent snapping would corrupt the
five-level contract.  Each score projects onto three metrics,

    S(x)  = 1 iff x = 1
    R2(x) = 1 if x = 1, 0.5 if x in {0.75, 0.5}, else 0
    R5(x) = x

so S <= R2 <= R5 pointwise and in every aggregate.  Reports carry the
per-item scores, so means are re-derivable bit-for-bit; the table export
labels the middle metric "R3" for visual parity with common result
tables while the API keeps the name r2.

Judged scores are cached by (qa_id, prediction hash, rubric version,
backend name): re-runs are free and deterministic.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import prompts
from .backends import Backend, BackendError, BackendProfile
from .corpus import Manifest
from .errors import InputError, RuntimeFailure, ValidationError
from .qa import EvidenceItem, QaItem, TaskKind

GRID = (0.0, 0.25, 0.5, 0.75, 1.0)

TIER_LABELS = {
    1.0: "Perfect Match",
    0.75: "Accurate but Generic",
    0.5: "Partially Correct / Missing Info",
    0.25: "Logical Break / Misaligned Evidence",
    0.0: "Completely Incorrect",
}

_SCORE_RE = re.compile(r"score\s*[:=]\s*([01](?:\.\d+)?|0?\.\d+)", re.IGNORECASE)
_BARE_NUMBER_RE = re.compile(r"\A\s*([01](?:\.\d+)?|0?\.\d+)\s*\Z")
_ANSWER_SPAN_RE = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)

_TASK_ORDER = (TaskKind.BP, TaskKind.CM, TaskKind.ML, TaskKind.CI, TaskKind.RC)


class JudgeParseError(RuntimeFailure):
    """Judge reply held no on-grid score through the retry budget."""


class ReconciliationError(InputError):
    """Predictions reference qa_ids absent from the QA set."""


class ReportError(InputError):
    """Aggregation requested over empty input."""


@dataclass(frozen=True)
class JudgeScore:
    x: float
    tier_label: str
    raw_reply: str

    def __post_init__(self):
        if self.x not in GRID:
            raise ValidationError(f"score {self.x} is not on the five-level grid")


@dataclass(frozen=True)
class MetricTriple:
    s: float
    r2: float
    r5: float


@dataclass(frozen=True)
class TaskStats:
    mean_s: float
    mean_r2: float
    mean_r5: float
    n: int


@dataclass(frozen=True)
class ScoredItem:
    qa_id: str
    task: TaskKind
    x: float
    metrics: MetricTriple


@dataclass(frozen=True)
class EvalReport:
    condition: str
    per_task: dict[TaskKind, TaskStats]
    all_micro: TaskStats
    all_macro: TaskStats
    per_item: tuple[ScoredItem, ...]
    excluded: tuple[tuple[str, str], ...]
    template_version: str = prompts.TEMPLATE_VERSION

    @property
    def n_submitted(self) -> int:
        return self.all_micro.n + len(self.excluded)


def score_to_metrics(x: float | JudgeScore) -> MetricTriple:
    value = x.x if isinstance(x, JudgeScore) else float(x)
    if value not in GRID:
        raise InputError(f"score {value} is not on the five-level grid")
    s = 1.0 if value == 1.0 else 0.0
    if value == 1.0:
        r2 = 1.0
    elif value in (0.75, 0.5):
        r2 = 0.5
    else:
        r2 = 0.0
    return MetricTriple(s=s, r2=r2, r5=value)


def parse_score_reply(reply: str) -> float:
    """Extract the grid score from a judge reply; off-grid values are errors."""
    match = _SCORE_RE.search(reply) or _BARE_NUMBER_RE.match(reply)
    if not match:
        raise JudgeParseError(f"no score token in judge reply: {reply[:120]!r}")
    value = float(match.group(1))
    if value not in GRID:
        raise JudgeParseError(f"judge score {value} is off the five-level grid")
    return value


def extract_answer_span(prediction: str) -> str:
    """The <answer> block when present, otherwise the whole prediction."""
    match = _ANSWER_SPAN_RE.search(prediction)
    if match:
        return match.group(1).strip()
    return prediction.strip()


def render_evidence(evidence: tuple[EvidenceItem, ...]) -> str:
    if not evidence:
        return "(none)"
    lines = []
    for ev in evidence:
        span = f"[{ev.t_start}–{ev.t_end})"
        if ev.excerpt:
            lines.append(f"- {ev.modality.value} {span}: \"{ev.excerpt}\"")
        else:
            lines.append(f"- {ev.modality.value} {span}")
    return "\n".join(lines)


class JudgeCache:
    """Score cache keyed by (qa_id, prediction hash, rubric version, backend)."""

    def __init__(self):
        self._scores: dict[tuple[str, str, str, str], float] = {}

    @staticmethod
    def key(qa_id: str, text: str, rubric: str, backend_name: str) -> tuple[str, str, str, str]:
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        return (qa_id, digest, f"{rubric}@{prompts.TEMPLATE_VERSION}", backend_name)

    def get(self, key: tuple[str, str, str, str]) -> float | None:
        return self._scores.get(key)

    def put(self, key: tuple[str, str, str, str], x: float) -> None:
        self._scores[key] = x

    def save(self, path: str | Path) -> None:
        rows = [list(k) + [x] for k, x in sorted(self._scores.items())]
        Path(path).write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "JudgeCache":
        cache = cls()
        for row in json.loads(Path(path).read_text(encoding="utf-8")):
            *key, x = row
            cache._scores[tuple(key)] = float(x)
        return cache


def judge_response(
    question: str,
    ground_truth: str,
    evidence: tuple[EvidenceItem, ...],
    prediction: str,
    backend: Backend,
    profile: BackendProfile,
    rubric: str = "answer",
    qa_id: str = "",
    cache: JudgeCache | None = None,
) -> JudgeScore:
    """Score one response on the five-tier grid.

    The retry budget (max_retries + 1 attempts) covers transport failures
    and unparseable replies alike; exhaustion raises BackendError for the
    former and JudgeParseError for the latter.
    """
    if not prediction.strip():
        raise InputError("prediction is empty")
    if rubric == "answer":
        template = prompts.answer_rubric()
        target_key = "prediction"
    elif rubric == "trace":
        template = prompts.trace_rubric()
        target_key = "trace"
    else:
        raise InputError(f"unknown rubric {rubric!r}")

    cache_key = None
    if cache is not None:
        cache_key = JudgeCache.key(qa_id, prediction, rubric, backend.name)
        hit = cache.get(cache_key)
        if hit is not None:
            return JudgeScore(x=hit, tier_label=TIER_LABELS[hit], raw_reply="(cached)")

    user = prompts.render(
        template,
        {
            "question": question,
            "ground_truth": ground_truth,
            "evidence": render_evidence(evidence),
            target_key: prediction,
        },
    )
    attempts = profile.max_retries + 1
    last_kind = None
    last_exc: Exception | None = None
    for _ in range(attempts):
        try:
            reply = backend.complete(
                "You are a strict scoring judge. Reply with the score line only.",
                user,
                0.0,
            )
        except BackendError as exc:
            last_kind, last_exc = "transport", exc
            continue
        try:
            x = parse_score_reply(reply)
        except JudgeParseError as exc:
            last_kind, last_exc = "parse", exc
            continue
        if cache is not None and cache_key is not None:
            cache.put(cache_key, x)
        return JudgeScore(x=x, tier_label=TIER_LABELS[x], raw_reply=reply)
    if last_kind == "transport":
        raise BackendError(
            f"judge backend {backend.name} unreachable after {attempts} attempts"
        ) from last_exc
    raise JudgeParseError(
        f"judge reply unparseable after {attempts} attempts: {last_exc}"
    )


def _stats(triples: list[MetricTriple]) -> TaskStats:
    n = len(triples)
    return TaskStats(
        mean_s=sum(t.s for t in triples) / n,
        mean_r2=sum(t.r2 for t in triples) / n,
        mean_r5=sum(t.r5 for t in triples) / n,
        n=n,
    )


def aggregate_report(
    scored: list[ScoredItem],
    condition: str,
    excluded: list[tuple[str, str]] | None = None,
) -> EvalReport:
    """Micro-averaged means per task and over ALL, macro mean as auxiliary."""
    if not scored:
        raise ReportError("cannot aggregate an empty score set")
    ordered = sorted(scored, key=lambda item: item.qa_id)
    by_task: dict[TaskKind, list[MetricTriple]] = {}
    for item in ordered:
        by_task.setdefault(item.task, []).append(item.metrics)
    per_task = {task: _stats(triples) for task, triples in by_task.items()}
    all_micro = _stats([item.metrics for item in ordered])
    task_stats = list(per_task.values())
    k = len(task_stats)
    all_macro = TaskStats(
        mean_s=sum(t.mean_s for t in task_stats) / k,
        mean_r2=sum(t.mean_r2 for t in task_stats) / k,
        mean_r5=sum(t.mean_r5 for t in task_stats) / k,
        n=all_micro.n,
    )
    return EvalReport(
        condition=condition,
        per_task=per_task,
        all_micro=all_micro,
        all_macro=all_macro,
        per_item=tuple(ordered),
        excluded=tuple(excluded or ()),
    )


def load_predictions(path: str | Path) -> list[tuple[str, str]]:
    rows = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
        if "qa_id" not in data or "prediction" not in data:
            raise ValidationError(f"{path}:{line_no}: needs fields qa_id and prediction")
        rows.append((str(data["qa_id"]), str(data["prediction"])))
    return rows


def run_evaluation(
    qa_items: list[QaItem],
    predictions: list[tuple[str, str]],
    backend: Backend,
    profile: BackendProfile,
    condition: str = "base",
    manifest: Manifest | None = None,
    cache: JudgeCache | None = None,
) -> EvalReport:
    """Judge every prediction against its QA item and aggregate.

    The condition tag records whether the predictions under test saw ASR
    in their input context; this toolkit does not run the model itself.
    Judge-unparseable predictions are excluded from the means and listed.
    """
    if condition not in ("base", "base_plus_asr"):
        raise InputError(f"condition must be base or base_plus_asr, got {condition!r}")
    by_id = {item.qa_id: item for item in qa_items}
    orphans = sorted({qa_id for qa_id, _ in predictions if qa_id not in by_id})
    if orphans:
        raise ReconciliationError(
            f"predictions reference unknown qa_ids: {', '.join(orphans)}"
        )
    if manifest is not None:
        known = {rec.video_id for rec in manifest.records}
        missing = sorted(
            {item.video_id for item in qa_items if item.video_id not in known}
        )
        if missing:
            raise ReconciliationError(
                f"QA items reference videos not in the manifest: {', '.join(missing)}"
            )

    scored: list[ScoredItem] = []
    excluded: list[tuple[str, str]] = []
    for qa_id, prediction in sorted(predictions, key=lambda pair: pair[0]):
        item = by_id[qa_id]
        answer_span = extract_answer_span(prediction)
        try:
            score = judge_response(
                question=item.question,
                ground_truth=item.answer,
                evidence=item.evidence,
                prediction=answer_span,
                backend=backend,
                profile=profile,
                rubric="answer",
                qa_id=qa_id,
                cache=cache,
            )
        except JudgeParseError as exc:
            excluded.append((qa_id, str(exc)))
            continue
        scored.append(
            ScoredItem(qa_id=qa_id, task=item.task, x=score.x, metrics=score_to_metrics(score))
        )
    if not scored:
        raise ReportError("no predictions survived judging")
    return aggregate_report(scored, condition, excluded)


def report_to_json_dict(report: EvalReport) -> dict:
    def stats_dict(stats: TaskStats) -> dict:
        return {
            "mean_s": stats.mean_s,
            "mean_r2": stats.mean_r2,
            "mean_r5": stats.mean_r5,
            "n": stats.n,
        }

    return {
        "condition": report.condition,
        "template_version": report.template_version,
        "n_submitted": report.n_submitted,
        "n_judged": report.all_micro.n,
        "n_excluded": len(report.excluded),
        "per_task": {
            task.value: stats_dict(stats)
            for task, stats in sorted(report.per_task.items(), key=lambda kv: kv[0].value)
        },
        "all": stats_dict(report.all_micro),
        "all_macro": stats_dict(report.all_macro),
        "excluded": [{"qa_id": qa_id, "reason": reason} for qa_id, reason in report.excluded],
        "per_item": [
            {
                "qa_id": item.qa_id,
                "task": item.task.value,
                "x": item.x,
                "s": item.metrics.s,
                "r2": item.metrics.r2,
                "r5": item.metrics.r5,
            }
            for item in report.per_item
        ],
    }


def write_report(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report_to_json_dict(report), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def write_report_table(report: EvalReport, path: str | Path, run_name: str = "run") -> None:
    """Tab-separated wide table: (BP..RC, ALL) x (S, R3, R5); r2 prints as R3."""
    columns = ["run"]
    values = [run_name]
    for task in _TASK_ORDER:
        stats = report.per_task.get(task)
        for metric, attr in (("S", "mean_s"), ("R3", "mean_r2"), ("R5", "mean_r5")):
            columns.append(f"{task.value}_{metric}")
            values.append("" if stats is None else f"{getattr(stats, attr):.4f}")
    for metric, attr in (("S", "mean_s"), ("R3", "mean_r2"), ("R5", "mean_r5")):
        columns.append(f"ALL_{metric}")
        values.append(f"{getattr(report.all_micro, attr):.4f}")
    lines = ["\t".join(columns), "\t".join(values)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
