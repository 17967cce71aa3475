"""Drive the question-writing loop with scripted model backends.

Persona agents propose candidate questions, a judge consolidates them,
and hard checks gate the result: every quoted excerpt must literally
appear in the cited timeline span.  A consolidated item that keeps
failing is regenerated up to three times and then routed to manual
correction instead of looping forever.
"""

import json

from vidbench.alignment import StructuredContext, TimelineSlot
from vidbench.annotate import AnnotationBackends, annotate_task, check_traceability
from vidbench.backends import BackendProfile, MockBackend
from vidbench.qa import TaskKind


def fenced(payload) -> str:
    return "```json\n" + json.dumps(payload, ensure_ascii=False) + "\n```"


def slot(t, alpha, gamma):
    return TimelineSlot(t_start=t, t_end=t + 1, frame_refs=(t,), alpha_text=alpha,
                        gamma_text=gamma)


def backends(judge_reply: str) -> AnnotationBackends:
    candidate = {
        "question": "What does the narrator say the blender costs?",
        "answer": "Twenty dollars",
        "reasoning": "Stated in the narration.",
        "difficulty": "L2",
        "evidence": [],
    }
    return AnnotationBackends(
        generator=MockBackend("gen", [{"reply": fenced([candidate]), "times": 0}]),
        generator_profile=BackendProfile("gen", "mock:gen", 10.0, 2),
        judge=MockBackend("judge", [{"reply": judge_reply, "times": 0}]),
        judge_profile=BackendProfile("judge", "mock:judge", 10.0, 2),
    )


context = StructuredContext(
    video_id="blender-promo",
    slots=(
        slot(0, "the new blender", "SALE 50% OFF"),
        slot(1, " costs twenty dollars", "BUY NOW"),
        slot(2, " today only", ""),
    ),
)

# A judge whose consolidated item cites a real excerpt passes at cycle 0.
good = {
    "question": "what does the narrator say the blender costs",
    "answer": "Twenty dollars",
    "reasoning": "Price is spoken across seconds 0 to 2.",
    "difficulty": "L2",
    "evidence": [{"modality": "A", "t_start": 0, "t_end": 3, "excerpt": "twenty dollars"}],
}
item = annotate_task(context, TaskKind.BP, backends(fenced(good)))
print("accepted question:", item.question)
print("status/cycle:     ", item.status.value, item.cycle)
print("evidence:         ", [(e.modality.value, e.t_start, e.t_end, e.excerpt)
                             for e in item.evidence])

# The traceability check is the workhorse: a fabricated excerpt fails it.
fabricated = dict(good)
fabricated["evidence"] = [
    {"modality": "A", "t_start": 0, "t_end": 3, "excerpt": "fifty dollars"}
]
bad_item = annotate_task(context, TaskKind.BP, backends(fenced(fabricated)))
print("\nfabricated excerpt reasons:",
      check_traceability(bad_item, context))

# With a judge that never produces a passing item, the loop tries the
# initial cycle plus exactly three regenerations and then gives up.
print("terminal status:  ", bad_item.status.value, "at cycle", bad_item.cycle)
