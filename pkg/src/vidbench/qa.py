"""QA item domain model: tasks, personas, evidence chains, lifecycle.

The benchmark covers five task kinds in two dimensions.  Perception tasks
read directly off the timeline; reasoning tasks require inference across it:

* BP (basic perception): physical attributes such as color, material,
  shape, size, quantity, motion.
* CM (cross-modal matching): grounding spoken or on-screen references
  ("this one") to a specific visual entity.
* ML (marketing logic): funnel analysis, from early hooks through selling
  points mapped to benefits and calls to action.
* CI (consumer insight): backward inference of the target audience from
  scene, presenter style, and soundtrack cues.
* RC (regulatory compliance): separating permissible promotional rhetoric
  from prohibited absolute claims.

Questions are proposed by persona agents (five perception perspectives,
five reasoning personas with difficulty bands), consolidated by a judge,
and must carry a traceable evidence chain: every answer cites at least one
timeline slot, and quoted excerpts must literally appear in the cited
slot's channel text.

An item's lifecycle runs from pending to accepted or rejected; an item
rejected with cycle < 3 re-enters generation with its cycle incremented,
and one rejected at cycle 3 becomes manual_correction, never regenerated.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .errors import ValidationError


class TaskKind(str, Enum):
    BP = "BP"
    CM = "CM"
    ML = "ML"
    CI = "CI"
    RC = "RC"

    @property
    def dimension(self) -> str:
        return "Perception" if self in (TaskKind.BP, TaskKind.CM) else "Cognition and Reasoning"


class Modality(str, Enum):
    V = "V"
    A = "A"
    O = "O"


class QaStatus(str, Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    MANUAL_CORRECTION = "manual_correction"


MAX_CYCLE = 3
QUESTION_WORD_CAP = 15

_LEVELS = ("L1", "L2", "L3", "L4", "L5")


@dataclass(frozen=True)
class Persona:
    name: str
    level_min: int
    level_max: int

    def __post_init__(self):
        if not 1 <= self.level_min <= self.level_max <= 5:
            raise ValidationError(
                f"persona {self.name} has invalid level band L{self.level_min}-L{self.level_max}"
            )

    def allows(self, difficulty: str) -> bool:
        if difficulty not in _LEVELS:
            return False
        level = int(difficulty[1])
        return self.level_min <= level <= self.level_max


PERCEPTION_PERSONAS = (
    Persona("PhysicalAttributes", 1, 3),
    Persona("SymbolicInformation", 1, 3),
    Persona("RelationalEvidence", 1, 3),
    Persona("EnvironmentalContext", 1, 3),
    Persona("ActionableBehaviors", 1, 3),
)

REASONING_PERSONAS = (
    Persona("Consumer", 1, 3),
    Persona("Pragmatist", 2, 3),
    Persona("Skeptic", 2, 4),
    Persona("Expert", 3, 5),
    Persona("CreativeDirector", 4, 5),
)


def personas_for(task: TaskKind) -> tuple[Persona, ...]:
    return PERCEPTION_PERSONAS if task.dimension == "Perception" else REASONING_PERSONAS


def persona_by_name(task: TaskKind, name: str) -> Persona:
    for persona in personas_for(task):
        if persona.name == name:
            return persona
    raise ValidationError(f"persona {name!r} is not valid for task {task.value}")


@dataclass(frozen=True)
class EvidenceItem:
    modality: Modality
    t_start: int
    t_end: int
    excerpt: str

    def __post_init__(self):
        if self.t_end <= self.t_start:
            raise ValidationError(
                f"evidence span [{self.t_start}, {self.t_end}) is empty"
            )
        if self.t_start < 0:
            raise ValidationError(f"evidence span starts before 0: {self.t_start}")


@dataclass(frozen=True)
class QaItem:
    qa_id: str
    video_id: str
    task: TaskKind
    difficulty: str
    question: str
    answer: str
    reasoning: str
    evidence: tuple[EvidenceItem, ...]
    status: QaStatus = QaStatus.PENDING
    cycle: int = 0
    provenance: dict[str, str] = field(default_factory=dict)
    question_modality: Modality | None = None
    decisive_modality: Modality | None = None

    def __post_init__(self):
        if self.difficulty not in _LEVELS:
            raise ValidationError(f"difficulty must be one of {_LEVELS}, got {self.difficulty!r}")
        if not 0 <= self.cycle <= MAX_CYCLE:
            raise ValidationError(f"cycle must be in 0..{MAX_CYCLE}, got {self.cycle}")

    def with_status(self, status: QaStatus) -> "QaItem":
        return replace(self, status=status)

    def with_cycle(self, cycle: int) -> "QaItem":
        return replace(self, cycle=cycle)


def make_qa_id(video_id: str, task: TaskKind, question: str) -> str:
    digest = hashlib.sha256(f"{video_id}|{task.value}|{question}".encode("utf-8"))
    return digest.hexdigest()[:12]


def transition_allowed(old: QaStatus, new: QaStatus, cycle: int) -> bool:
    """The item lifecycle rule shared by the annotator and the review store."""
    if old == QaStatus.PENDING:
        return new in (QaStatus.ACCEPTED, QaStatus.REJECTED)
    if old == QaStatus.REJECTED:
        if cycle < MAX_CYCLE:
            return new == QaStatus.PENDING
        return new == QaStatus.MANUAL_CORRECTION
    return False


def item_to_json_dict(item: QaItem) -> dict:
    data = {
        "qa_id": item.qa_id,
        "video_id": item.video_id,
        "task": item.task.value,
        "difficulty": item.difficulty,
        "question": item.question,
        "answer": item.answer,
        "reasoning": item.reasoning,
        "evidence": [
            {
                "modality": ev.modality.value,
                "t_start": ev.t_start,
                "t_end": ev.t_end,
                "excerpt": ev.excerpt,
            }
            for ev in item.evidence
        ],
        "status": item.status.value,
        "cycle": item.cycle,
        "provenance": dict(item.provenance),
    }
    if item.question_modality is not None:
        data["question_modality"] = item.question_modality.value
    if item.decisive_modality is not None:
        data["decisive_modality"] = item.decisive_modality.value
    return data


def item_from_json_dict(data: dict) -> QaItem:
    try:
        evidence = tuple(
            EvidenceItem(
                modality=Modality(ev["modality"]),
                t_start=ev["t_start"],
                t_end=ev["t_end"],
                excerpt=ev["excerpt"],
            )
            for ev in data["evidence"]
        )
        return QaItem(
            qa_id=data["qa_id"],
            video_id=data["video_id"],
            task=TaskKind(data["task"]),
            difficulty=data["difficulty"],
            question=data["question"],
            answer=data["answer"],
            reasoning=data["reasoning"],
            evidence=evidence,
            status=QaStatus(data["status"]),
            cycle=data["cycle"],
            provenance=dict(data.get("provenance", {})),
            question_modality=(
                Modality(data["question_modality"]) if "question_modality" in data else None
            ),
            decisive_modality=(
                Modality(data["decisive_modality"]) if "decisive_modality" in data else None
            ),
        )
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"malformed QA item record: {exc}") from exc


def save_items(items: list[QaItem], path: str | Path) -> None:
    lines = [json.dumps(item_to_json_dict(item), ensure_ascii=False) for item in items]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_items(path: str | Path) -> list[QaItem]:
    items = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            items.append(item_from_json_dict(json.loads(line)))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
    return items
