"""Reward shaping and group-normalized advantages for judged rollouts.

Policy-optimization groups sample n traces per prompt; each trace is the
raw model output, expected in the structured format

    <think> ... </think> <answer> ... </answer>

with exactly one occurrence of each tag pair, in that order.  Anything
else costs a flat format penalty of -1 and zeroes the content scores.

Scored traces pass through the multi-grained mapping

    G(x) = (S(x) + R2(x) + R5(x)) / 3

which keeps any partial credit strictly positive (G(0.25) = 1/12) while
making the final step to perfection disproportionately valuable
(G(1) - G(0.75) = 7/12, larger than every other adjacent increment).
The trace reward combines the answer and reasoning scores,

    R = alpha1 * G(x_a) + alpha2 * G(x_t) + R_fmt,    R in [-1, 1]

and a group's advantages are its rewards normalized by the group mean
and population standard deviation (divisor n, frozen in config):

    A_i = (R_i - mean(R)) / (std(R) + epsilon)

A zero-variance group gets exactly zero advantages; the epsilon guards
the division, never the semantics.  This module produces the signal an
external trainer would consume; the gradient update itself is out of
scope.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import prompts
from .backends import Backend, BackendError, BackendProfile
from .errors import InputError, RuntimeFailure, ValidationError
from .judging import GRID, JudgeCache, JudgeParseError, JudgeScore, judge_response, score_to_metrics
from .qa import QaItem

DEFAULT_ALPHA1 = 0.8
DEFAULT_ALPHA2 = 0.2
DEFAULT_EPSILON = 1e-4

_FORMAT_RE = re.compile(r"\s*<think>(.*?)</think>\s*<answer>(.*?)</answer>\s*\Z", re.DOTALL)
_TAGS = ("<think>", "</think>", "<answer>", "</answer>")


class GroupSizeError(InputError):
    """Advantage normalization needs at least two rewards."""


class GroupScoringError(RuntimeFailure):
    """Too few traces survived judging to normalize the group."""


@dataclass(frozen=True)
class TraceOutput:
    raw: str
    think: str | None
    answer: str | None
    fmt_penalty: int

    @property
    def well_formed(self) -> bool:
        return self.fmt_penalty == 0


@dataclass(frozen=True)
class RewardConfig:
    alpha1: float = DEFAULT_ALPHA1
    alpha2: float = DEFAULT_ALPHA2
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.alpha1 < 0 or self.alpha2 < 0:
            raise ValidationError("alpha weights must be non-negative")
        if abs(self.alpha1 + self.alpha2 - 1.0) > 1e-9:
            raise ValidationError(
                f"alpha1 + alpha2 must equal 1, got {self.alpha1} + {self.alpha2}"
            )
        if self.epsilon <= 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class GroupRollout:
    """One prompt's sampled traces plus, after scoring, their reward columns.

    Score and reward entries are None for traces excluded by judge failure;
    such traces do not participate in normalization.
    """

    prompt_id: str
    traces: tuple[str, ...]
    question: str = ""
    ground_truth: str = ""
    x_a: tuple[float | None, ...] = ()
    x_t: tuple[float | None, ...] = ()
    rewards: tuple[float | None, ...] = ()
    advantages: tuple[float | None, ...] = ()


def validate_format(raw: str) -> TraceOutput:
    """Structured-format gate; malformation is a value, not an error."""
    counts_ok = all(raw.count(tag) == 1 for tag in _TAGS)
    match = _FORMAT_RE.match(raw) if counts_ok else None
    if match:
        return TraceOutput(raw=raw, think=match.group(1), answer=match.group(2), fmt_penalty=0)
    return TraceOutput(raw=raw, think=None, answer=None, fmt_penalty=-1)


def granular_reward(x: float | JudgeScore) -> float:
    """G(x) = (S + R2 + R5) / 3 on the five-level grid."""
    value = x.x if isinstance(x, JudgeScore) else float(x)
    if value not in GRID:
        raise InputError(f"score {value} is not on the five-level grid")
    m = score_to_metrics(value)
    return (m.s + m.r2 + m.r5) / 3.0


def trace_reward(
    x_a: float | JudgeScore,
    x_t: float | JudgeScore,
    fmt: TraceOutput,
    cfg: RewardConfig | None = None,
) -> float:
    cfg = cfg or RewardConfig()
    return cfg.alpha1 * granular_reward(x_a) + cfg.alpha2 * granular_reward(x_t) + fmt.fmt_penalty


def group_advantages(rewards: list[float], cfg: RewardConfig | None = None) -> list[float]:
    """A_i = (R_i - mean) / (population std + epsilon); zero variance -> zeros."""
    cfg = cfg or RewardConfig()
    n = len(rewards)
    if n < 2:
        raise GroupSizeError(f"advantage normalization needs n >= 2 rewards, got {n}")
    if max(rewards) == min(rewards):
        return [0.0] * n
    mean = sum(rewards) / n
    variance = sum((r - mean) ** 2 for r in rewards) / n
    denom = math.sqrt(variance) + cfg.epsilon
    return [(r - mean) / denom for r in rewards]


def score_group(
    rollout: GroupRollout,
    backend: Backend,
    profile: BackendProfile,
    cfg: RewardConfig | None = None,
    qa_item: QaItem | None = None,
    cache: JudgeCache | None = None,
) -> GroupRollout:
    """Judge every trace and fill the reward and advantage columns.

    Malformed traces are not judged: they take x_a = x_t = 0 plus the -1
    penalty, so R = -1, and they do participate in normalization.  A trace
    whose judge call stays unparseable is excluded (None columns) provided
    at least two traces remain; otherwise the whole group fails.
    """
    cfg = cfg or RewardConfig()
    question = rollout.question or (qa_item.question if qa_item else "")
    ground_truth = rollout.ground_truth or (qa_item.answer if qa_item else "")
    evidence = qa_item.evidence if qa_item else ()
    if not ground_truth:
        raise InputError(
            f"group {rollout.prompt_id} has no ground truth to judge against"
        )

    x_a: list[float | None] = []
    x_t: list[float | None] = []
    rewards: list[float | None] = []
    for index, raw in enumerate(rollout.traces):
        fmt = validate_format(raw)
        if not fmt.well_formed:
            x_a.append(0.0)
            x_t.append(0.0)
            rewards.append(trace_reward(0.0, 0.0, fmt, cfg))
            continue
        def judged(text: str, rubric: str) -> float:
            # an empty span cannot match any ground truth; scoring it 0
            # avoids a judge round trip on degenerate content
            if not text.strip():
                return 0.0
            return judge_response(
                question=question,
                ground_truth=ground_truth,
                evidence=evidence,
                prediction=text,
                backend=backend,
                profile=profile,
                rubric=rubric,
                qa_id=f"{rollout.prompt_id}#{index}",
                cache=cache,
            ).x

        try:
            answer_x = judged(fmt.answer, "answer")
            think_x = judged(fmt.think, "trace")
        except JudgeParseError:
            x_a.append(None)
            x_t.append(None)
            rewards.append(None)
            continue
        x_a.append(answer_x)
        x_t.append(think_x)
        rewards.append(trace_reward(answer_x, think_x, fmt, cfg))

    scored = [r for r in rewards if r is not None]
    if len(scored) < 2:
        raise GroupScoringError(
            f"group {rollout.prompt_id}: only {len(scored)} trace(s) scored, need >= 2"
        )
    normalized = group_advantages(scored, cfg)
    advantages: list[float | None] = []
    cursor = 0
    for r in rewards:
        if r is None:
            advantages.append(None)
        else:
            advantages.append(normalized[cursor])
            cursor += 1
    return replace(
        rollout,
        question=question,
        ground_truth=ground_truth,
        x_a=tuple(x_a),
        x_t=tuple(x_t),
        rewards=tuple(rewards),
        advantages=tuple(advantages),
    )


def load_rollouts(path: str | Path) -> list[GroupRollout]:
    """Read groups from a jsonl file of {prompt_id, traces, question?, ground_truth?}."""
    groups = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
        if "prompt_id" not in data or "traces" not in data:
            raise ValidationError(f"{path}:{line_no}: needs fields prompt_id and traces")
        if not isinstance(data["traces"], list) or not data["traces"]:
            raise ValidationError(f"{path}:{line_no}: traces must be a non-empty list")
        groups.append(
            GroupRollout(
                prompt_id=str(data["prompt_id"]),
                traces=tuple(str(t) for t in data["traces"]),
                question=str(data.get("question", "")),
                ground_truth=str(data.get("ground_truth", "")),
            )
        )
    return groups


def save_rollouts(groups: list[GroupRollout], path: str | Path) -> None:
    """Write groups back with the x_a[], x_t[], R[], A[] columns appended."""
    lines = []
    for group in groups:
        lines.append(
            json.dumps(
                {
                    "prompt_id": group.prompt_id,
                    "traces": list(group.traces),
                    "question": group.question,
                    "ground_truth": group.ground_truth,
                    "x_a": list(group.x_a),
                    "x_t": list(group.x_t),
                    "R": list(group.rewards),
                    "A": list(group.advantages),
                },
                ensure_ascii=False,
            )
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
