"""Multi-agent QA generation over structured contexts.

The pipeline per task is a round table: each persona agent proposes
candidate questions from the rendered context, a judge consolidates them
into one item with an explicit evidence chain, and hard constraints are
then enforced mechanically, never by the model's own claims:

* traceability: at least one evidence item, every quoted excerpt
  literally present in the cited slot's channel text,
* cross-modal gap (CM only): two or more modalities in the chain and a
  question-source modality different from the decisive one,
* normalization: leading filler phrases stripped, whitespace collapsed,
  terminal punctuation reduced to one question mark,
* the 15-word cap and a stop-list of descriptive adjectives (over-cap
  questions are flagged for regeneration, never truncated).

A constraint violation sends the task back for another cycle; after the
third regeneration the item is emitted with status manual_correction and
never touched again.  Backend transport failures abort only the affected
task.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, replace

from . import prompts
from .alignment import StructuredContext, render_context
from .backends import Backend, BackendError, BackendProfile, resolve_backend
from .errors import InputError, RuntimeFailure, ToolkitError
from .qa import (
    EvidenceItem,
    Modality,
    Persona,
    QaItem,
    QaStatus,
    QUESTION_WORD_CAP,
    MAX_CYCLE,
    TaskKind,
    make_qa_id,
    personas_for,
)
from .textutil import tokenize, word_count

logger = logging.getLogger(__name__)

SYSTEM_PROMPT = "Follow the instructions exactly and reply only in the requested format."

DEFAULT_LEADING_PHRASES = (
    "in this video,",
    "in the video,",
    "based on the video,",
    "based on this video,",
    "according to the video,",
)

DEFAULT_DESCRIPTIVE_STOP_LIST = (
    "amazing",
    "awesome",
    "beautiful",
    "breathtaking",
    "fantastic",
    "gorgeous",
    "incredible",
    "lovely",
    "stunning",
    "wonderful",
)

_FENCE_RE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)


class AdjudicationError(RuntimeFailure):
    """Judge reply stayed unparseable through the retry budget."""


class PersonaMismatchError(InputError):
    """Persona requested for a task outside its dimension."""


class NormalizationError(InputError):
    """Question empty after stripping."""


class ConstraintViolation(ToolkitError):
    """Consolidated item failed a hard constraint; drives the regeneration loop."""

    def __init__(self, item: QaItem, reasons: list[str]):
        super().__init__("; ".join(reasons))
        self.item = item
        self.reasons = list(reasons)


class _ParseFailure(ToolkitError):
    """Backend reply lacked a usable fenced block; internal retry signal."""


@dataclass(frozen=True)
class AnnotatorConfig:
    candidates_per_persona: int = 2
    word_cap: int = QUESTION_WORD_CAP
    leading_phrases: tuple[str, ...] = DEFAULT_LEADING_PHRASES
    descriptive_stop_list: tuple[str, ...] = DEFAULT_DESCRIPTIVE_STOP_LIST
    generation_temperature: float = 0.7
    judge_temperature: float = 0.0
    # upper bound on simultaneous in-flight requests per backend; execution
    # here is sequential, the bound matters to parallel drivers
    max_inflight_per_backend: int = 4


@dataclass(frozen=True)
class AnnotationBackends:
    generator: Backend
    generator_profile: BackendProfile
    judge: Backend
    judge_profile: BackendProfile

    @classmethod
    def from_profiles(
        cls,
        generator: BackendProfile,
        judge: BackendProfile,
        fixtures_dir=None,
    ) -> "AnnotationBackends":
        return cls(
            generator=resolve_backend(generator, fixtures_dir=fixtures_dir),
            generator_profile=generator,
            judge=resolve_backend(judge, fixtures_dir=fixtures_dir),
            judge_profile=judge,
        )


def normalize_question(question: str, cfg: AnnotatorConfig | None = None) -> str:
    """Strip leading filler, collapse whitespace, end with a single question mark."""
    cfg = cfg or AnnotatorConfig()
    text = question.strip()
    stripped = True
    while stripped:
        stripped = False
        for phrase in cfg.leading_phrases:
            if text.lower().startswith(phrase):
                text = text[len(phrase):].lstrip()
                stripped = True
    text = re.sub(r"\s+", " ", text).strip()
    text = text.rstrip(" ?.!,;:")
    if not text:
        raise NormalizationError("question is empty after stripping")
    text = text[0].upper() + text[1:]
    return text + "?"


def exceeds_word_cap(question: str, cap: int = QUESTION_WORD_CAP) -> bool:
    return word_count(question) > cap


def check_traceability(item: QaItem, context: StructuredContext) -> list[str]:
    """Empty list means pass; each entry is one independent failure reason."""
    reasons: list[str] = []
    if not item.evidence:
        return ["empty evidence"]
    for ev in item.evidence:
        covering = [
            slot
            for slot in context.slots
            if slot.t_start < ev.t_end and ev.t_start < slot.t_end
        ]
        if not covering or ev.t_end > context.duration_slots:
            reasons.append(f"evidence span [{ev.t_start}, {ev.t_end}) out of range")
            continue
        if ev.modality is Modality.V:
            continue
        if ev.modality is Modality.A:
            channel = "".join(slot.alpha_text for slot in covering)
        else:
            channel = " ".join(slot.gamma_text for slot in covering)
        if not ev.excerpt:
            reasons.append(f"empty excerpt for {ev.modality.value} evidence")
        elif ev.excerpt not in channel:
            reasons.append(
                f"excerpt not found in {ev.modality.value} channel "
                f"of span [{ev.t_start}, {ev.t_end})"
            )
    return reasons


def check_cross_modal_gap(item: QaItem) -> list[str]:
    """CM information-gap rule; calling it on another task kind is a usage error."""
    if item.task is not TaskKind.CM:
        raise InputError(
            f"cross-modal gap check applies to CM items only, got {item.task.value}"
        )
    reasons: list[str] = []
    modalities = {ev.modality for ev in item.evidence}
    if len(modalities) < 2:
        reasons.append("single modality")
    if item.question_modality is None or item.decisive_modality is None:
        reasons.append("question/decisive modality declarations missing")
    elif item.question_modality == item.decisive_modality:
        reasons.append("question and decisive modality identical")
    return reasons


def constraint_reasons(
    item: QaItem, context: StructuredContext, cfg: AnnotatorConfig
) -> list[str]:
    reasons = check_traceability(item, context)
    if item.task is TaskKind.CM:
        reasons.extend(check_cross_modal_gap(item))
    if word_count(item.question) > cfg.word_cap:
        reasons.append(f"question exceeds {cfg.word_cap} words")
    stop = {w.lower() for w in cfg.descriptive_stop_list}
    # edge punctuation must not shield a stop-listed word ("amazing?")
    words = {t.lower().strip("?!.,;:'\"()") for t in tokenize(item.question)}
    hits = sorted(words & stop)
    if hits:
        reasons.append(f"descriptive terms: {', '.join(hits)}")
    return reasons


def _extract_fenced_json(reply: str):
    match = _FENCE_RE.search(reply)
    if not match:
        raise _ParseFailure("no fenced JSON block in reply")
    try:
        return json.loads(match.group(1))
    except json.JSONDecodeError as exc:
        raise _ParseFailure(f"fenced block is not valid JSON: {exc}") from exc


def _evidence_from_payload(raw) -> tuple[EvidenceItem, ...]:
    if not isinstance(raw, list):
        raise _ParseFailure("evidence must be a list")
    items = []
    for entry in raw:
        try:
            items.append(
                EvidenceItem(
                    modality=Modality(entry["modality"]),
                    t_start=int(entry["t_start"]),
                    t_end=int(entry["t_end"]),
                    excerpt=str(entry.get("excerpt", "")),
                )
            )
        except (KeyError, TypeError, ValueError, ToolkitError) as exc:
            raise _ParseFailure(f"bad evidence entry: {exc}") from exc
    return tuple(items)


def _item_from_payload(
    payload: dict,
    video_id: str,
    task: TaskKind,
    provenance: dict[str, str],
) -> QaItem:
    if not isinstance(payload, dict):
        raise _ParseFailure("candidate payload must be an object")
    try:
        question = str(payload["question"])
        answer = str(payload["answer"])
        reasoning = str(payload.get("reasoning", ""))
        difficulty = str(payload["difficulty"])
    except KeyError as exc:
        raise _ParseFailure(f"candidate missing field {exc}") from exc
    evidence = _evidence_from_payload(payload.get("evidence", []))
    q_mod = payload.get("question_modality")
    d_mod = payload.get("decisive_modality")
    try:
        return QaItem(
            qa_id=make_qa_id(video_id, task, question),
            video_id=video_id,
            task=task,
            difficulty=difficulty,
            question=question,
            answer=answer,
            reasoning=reasoning,
            evidence=evidence,
            provenance=provenance,
            question_modality=Modality(q_mod) if q_mod else None,
            decisive_modality=Modality(d_mod) if d_mod else None,
        )
    except (ToolkitError, ValueError) as exc:
        raise _ParseFailure(f"candidate rejected: {exc}") from exc


def _render_metadata(context: StructuredContext) -> str:
    if not context.metadata:
        return "(none)"
    return "\n".join(f"{k}: {v}" for k, v in sorted(context.metadata.items()))


def generate_candidates(
    context: StructuredContext,
    task: TaskKind,
    persona: Persona,
    backend: Backend,
    profile: BackendProfile,
    cfg: AnnotatorConfig | None = None,
) -> list[QaItem]:
    """One backend round for one persona; returns parsed, band-valid candidates.

    Transport and parse failures share the profile's retry budget.  A budget
    exhausted on transport raises; exhausted on parsing logs and returns [].
    """
    cfg = cfg or AnnotatorConfig()
    if persona not in personas_for(task):
        raise PersonaMismatchError(
            f"persona {persona.name} is not valid for task {task.value}"
        )
    template = prompts.persona_template(task.value, persona.name)
    user = prompts.render(
        template,
        {
            "context": render_context(context),
            "metadata": _render_metadata(context),
            "n_candidates": str(cfg.candidates_per_persona),
        },
    )
    provenance = {"persona": persona.name, "backend": backend.name}
    attempts = profile.max_retries + 1
    last_kind = None
    last_exc: Exception | None = None
    for _ in range(attempts):
        try:
            reply = backend.complete(SYSTEM_PROMPT, user, cfg.generation_temperature)
        except BackendError as exc:
            last_kind, last_exc = "transport", exc
            continue
        try:
            payload = _extract_fenced_json(reply)
            if not isinstance(payload, list):
                raise _ParseFailure("candidate block must be a JSON list")
            raw_candidates = [
                _item_from_payload(entry, context.video_id, task, provenance)
                for entry in payload
            ]
        except _ParseFailure as exc:
            last_kind, last_exc = "parse", exc
            continue
        candidates = []
        for cand in raw_candidates:
            if not persona.allows(cand.difficulty):
                logger.info(
                    "dropping %s candidate at %s outside %s band L%d-L%d",
                    task.value, cand.difficulty, persona.name,
                    persona.level_min, persona.level_max,
                )
                continue
            candidates.append(cand)
        return candidates
    if last_kind == "transport":
        raise BackendError(
            f"backend {backend.name} unreachable after {attempts} attempts"
        ) from last_exc
    logger.warning(
        "dropping persona %s round for %s: unparseable after %d attempts (%s)",
        persona.name, task.value, attempts, last_exc,
    )
    return []


def _candidates_digest(candidates: list[QaItem]) -> str:
    blocks = []
    for cand in candidates:
        blocks.append(
            {
                "persona": cand.provenance.get("persona", ""),
                "question": cand.question,
                "answer": cand.answer,
                "reasoning": cand.reasoning,
                "difficulty": cand.difficulty,
                "evidence": [
                    {
                        "modality": ev.modality.value,
                        "t_start": ev.t_start,
                        "t_end": ev.t_end,
                        "excerpt": ev.excerpt,
                    }
                    for ev in cand.evidence
                ],
            }
        )
    return json.dumps(blocks, ensure_ascii=False, indent=2)


def adjudicate(
    candidates: list[QaItem],
    context: StructuredContext,
    task: TaskKind,
    backends: AnnotationBackends,
    cfg: AnnotatorConfig | None = None,
) -> QaItem:
    """Consolidate candidates into one checked item.

    Raises ConstraintViolation when the consolidated item fails the hard
    checks, AdjudicationError when the judge reply never parses, and
    BackendError when transport keeps failing.
    """
    cfg = cfg or AnnotatorConfig()
    if not candidates:
        raise InputError("adjudication requires at least one candidate")
    template = prompts.judge_template()
    user = prompts.render(
        template,
        {
            "task": task.value,
            "context": render_context(context),
            "metadata": _render_metadata(context),
            "candidates": _candidates_digest(candidates),
        },
    )
    provenance = {
        "personas": ",".join(
            sorted({c.provenance.get("persona", "") for c in candidates} - {""})
        ),
        "backend": backends.generator.name,
        "judge": backends.judge.name,
    }
    profile = backends.judge_profile
    attempts = profile.max_retries + 1
    last_kind = None
    last_exc: Exception | None = None
    item = None
    for _ in range(attempts):
        try:
            reply = backends.judge.complete(SYSTEM_PROMPT, user, cfg.judge_temperature)
        except BackendError as exc:
            last_kind, last_exc = "transport", exc
            continue
        try:
            payload = _extract_fenced_json(reply)
            item = _item_from_payload(payload, context.video_id, task, provenance)
        except _ParseFailure as exc:
            last_kind, last_exc = "parse", exc
            continue
        break
    if item is None:
        if last_kind == "transport":
            raise BackendError(
                f"judge backend {backends.judge.name} unreachable after {attempts} attempts"
            ) from last_exc
        raise AdjudicationError(
            f"judge reply unparseable after {attempts} attempts: {last_exc}"
        )
    try:
        question = normalize_question(item.question, cfg)
    except NormalizationError:
        raise ConstraintViolation(item, ["question empty after normalization"])
    item = replace(
        item,
        question=question,
        qa_id=make_qa_id(context.video_id, task, question),
    )
    reasons = constraint_reasons(item, context, cfg)
    if reasons:
        raise ConstraintViolation(item, reasons)
    return item


def _stub_item(context: StructuredContext, task: TaskKind) -> QaItem:
    return QaItem(
        qa_id=make_qa_id(context.video_id, task, ""),
        video_id=context.video_id,
        task=task,
        difficulty="L1",
        question="",
        answer="",
        reasoning="",
        evidence=(),
    )


def annotate_task(
    context: StructuredContext,
    task: TaskKind,
    backends: AnnotationBackends,
    cfg: AnnotatorConfig | None = None,
    qa_id: str | None = None,
    start_cycle: int = 0,
) -> QaItem:
    """Run the generate-adjudicate-check loop for one task.

    Returns a pending item at the cycle that first passed, or a
    manual_correction item when the attempt at cycle 3 still violates a
    constraint.  Passing qa_id pins the identity across review-driven
    regeneration.
    """
    cfg = cfg or AnnotatorConfig()
    cycle = start_cycle
    while True:
        violation: ConstraintViolation | None = None
        try:
            candidates: list[QaItem] = []
            for persona in personas_for(task):
                candidates.extend(
                    generate_candidates(
                        context, task, persona, backends.generator,
                        backends.generator_profile, cfg,
                    )
                )
            if not candidates:
                violation = ConstraintViolation(
                    _stub_item(context, task), ["no parseable candidates"]
                )
            else:
                item = adjudicate(candidates, context, task, backends, cfg)
        except ConstraintViolation as exc:
            violation = exc
        if violation is None:
            final = replace(item, cycle=cycle, status=QaStatus.PENDING)
            if qa_id is not None:
                final = replace(final, qa_id=qa_id)
            return final
        logger.info(
            "task %s cycle %d violated constraints: %s",
            task.value, cycle, "; ".join(violation.reasons),
        )
        if cycle >= MAX_CYCLE:
            final = replace(
                violation.item, cycle=MAX_CYCLE, status=QaStatus.MANUAL_CORRECTION
            )
            if qa_id is not None:
                final = replace(final, qa_id=qa_id)
            return final
        cycle += 1


def run_annotation_cycle(
    context: StructuredContext,
    tasks: list[TaskKind],
    backends: AnnotationBackends,
    cfg: AnnotatorConfig | None = None,
) -> list[QaItem]:
    """Annotate every task; a backend failure aborts only the affected task."""
    cfg = cfg or AnnotatorConfig()
    items: list[QaItem] = []
    for task in tasks:
        try:
            items.append(annotate_task(context, task, backends, cfg))
        except (BackendError, AdjudicationError) as exc:
            logger.error("task %s aborted: %s", task.value, exc)
    return items


def regenerate_item(
    item: QaItem,
    context: StructuredContext,
    backends: AnnotationBackends,
    cfg: AnnotatorConfig | None = None,
) -> QaItem:
    """Re-run generation for a rejected item, keeping its qa_id, cycle + 1."""
    if item.status is not QaStatus.REJECTED:
        raise InputError(
            f"only rejected items are regenerated, {item.qa_id} is {item.status.value}"
        )
    if item.cycle >= MAX_CYCLE:
        raise InputError(f"item {item.qa_id} exhausted its regeneration budget")
    return annotate_task(
        context,
        item.task,
        backends,
        cfg,
        qa_id=item.qa_id,
        start_cycle=item.cycle + 1,
    )
