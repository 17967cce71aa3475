"""Score a small prediction set against a scripted judge.

The judge replies on a five-point grid.  Each grade projects onto three
headline metrics: a strict score, a relaxed-at-half score, and a
relaxed-at-quarter score, so one pass over the items yields the whole
report.  Off-grid replies are excluded rather than rounded.
"""

import tempfile
from pathlib import Path

from vidbench.backends import BackendProfile, MockBackend
from vidbench.judging import (
    GRID,
    report_to_json_dict,
    run_evaluation,
    score_to_metrics,
    write_report_table,
)
from vidbench.qa import EvidenceItem, Modality, QaItem, TaskKind

# The projection table first, on its own.  Anything at or above the
# relaxation threshold rounds up to credit, anything below drops to zero.
print("grade  strict  r@0.50  r@0.25")
for grade in GRID:
    m = score_to_metrics(grade)
    print(f"{grade:5.2f}  {m.s:6.2f}  {m.r2:6.2f}  {m.r5:6.2f}")

# Five hand-built items across two task families.  Manually chosen ids
# sort in construction order, which keeps the scripted judge aligned.
span = EvidenceItem(modality=Modality.A, t_start=0, t_end=2, excerpt="two liters")
items = [
    QaItem(
        qa_id=f"qa-{n:02d}",
        video_id=f"vid-{n:02d}",
        task=task,
        difficulty="L2",
        question=q,
        answer=a,
        reasoning="narration states it",
        evidence=(span,),
    )
    for n, task, q, a in [
        (1, TaskKind.BP, "What size is the bottle?", "Two liters"),
        (2, TaskKind.BP, "What brand is shown on the label?", "Aqua Pura"),
        (3, TaskKind.ML, "Which modality names the price?", "Audio"),
        (4, TaskKind.ML, "Which modality shows the discount?", "Overlay text"),
        (5, TaskKind.BP, "When does the pour start?", "Second three"),
    ]
]

predictions = [
    ("qa-01", "Two liters"),
    ("qa-02", "AquaPura"),
    ("qa-03", "The narration"),
    ("qa-04", "The on-screen text"),
    ("qa-05", "Around second four"),
]

# One reply per item in sorted id order.  The fourth reply is off the
# grid on purpose; the runner excludes that item and says why.
judge = MockBackend.from_replies(
    [
        "score: 1.0",
        "score: 0.75",
        "score: 0.5",
        "score: 0.9",
        "score: 0.25",
    ],
    name="judge",
)
profile = BackendProfile("judge", "mock:eval", 10.0, 0)

report = run_evaluation(items, predictions, judge, profile, condition="base")

payload = report_to_json_dict(report)
print("\njudged:", payload["n_judged"], " excluded:", payload["n_excluded"])
for task_name, block in sorted(payload["per_task"].items()):
    print(f"  {task_name}: mean_s={block['mean_s']:.4f} "
          f"mean_r2={block['mean_r2']:.4f} mean_r5={block['mean_r5']:.4f} "
          f"n={block['n']}")
print("  all:", payload["all"])
print("  exclusions:", payload["excluded"])

# The flat table view renders one row per run with blanks for task
# families that never appeared.
with tempfile.TemporaryDirectory() as tmp:
    table = Path(tmp) / "report.tsv"
    write_report_table(report, table, run_name="bottled-water-demo")
    print("\n" + table.read_text(encoding="utf-8"))
