"""Versioned prompt templates shipped with the package.

Layout: ``<task>/<persona>.txt`` for the candidate-generation agents and
``judge/*.txt`` for the consolidation judge and the scoring rubrics.
Placeholders use ``{{name}}`` and must all be bound at render time; an
unbound placeholder is a programming error, not a formatting nicety.

TEMPLATE_VERSION participates in judge-score cache keys, so bump it on any
wording change that could alter a backend's replies.
"""

from __future__ import annotations

import re
from importlib import resources

from ..errors import InputError

TEMPLATE_VERSION = "1"

_PLACEHOLDER_RE = re.compile(r"\{\{(\w+)\}\}")


def _read(*relpath: str) -> str:
    node = resources.files(__package__)
    for part in relpath:
        node = node / part
    try:
        return node.read_text(encoding="utf-8")
    except (FileNotFoundError, NotADirectoryError) as exc:
        raise InputError(f"prompt template not found: {'/'.join(relpath)}") from exc


def persona_template(task: str, persona: str) -> str:
    return _read(task, f"{persona}.txt")


def judge_template() -> str:
    return _read("judge", "primary.txt")


def answer_rubric() -> str:
    return _read("judge", "answer_rubric.txt")


def trace_rubric() -> str:
    return _read("judge", "trace_rubric.txt")


def render(template: str, mapping: dict[str, str]) -> str:
    """Substitute every ``{{name}}`` placeholder; unknown names are an error."""

    def sub(match: re.Match) -> str:
        key = match.group(1)
        if key not in mapping:
            raise InputError(f"unbound template placeholder {{{{{key}}}}}")
        return str(mapping[key])

    return _PLACEHOLDER_RE.sub(sub, template)
