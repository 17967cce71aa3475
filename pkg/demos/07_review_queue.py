"""Walk a batch of draft items through the human review queue.

The store is a single sqlite file.  Reviewers lease the oldest pending
item, file a verdict against the four rubric pillars, and rejected
items come back as regenerations with the cycle bumped.  An item
rejected at the cycle cap parks in manual correction, and only accepted
items ever reach the export.
"""

import tempfile
from pathlib import Path

from vidbench.qa import EvidenceItem, Modality, QaItem, TaskKind, make_qa_id
from vidbench.review.store import PILLARS, ReviewStore, ReviewVerdict


def draft(video_id: str, question: str, answer: str) -> QaItem:
    return QaItem(
        qa_id=make_qa_id(video_id, TaskKind.BP, question),
        video_id=video_id,
        task=TaskKind.BP,
        difficulty="L2",
        question=question,
        answer=answer,
        reasoning="narration states it",
        evidence=(EvidenceItem(Modality.A, 0, 2, "demo excerpt"),),
    )


def all_pass() -> dict:
    return {pillar: True for pillar in PILLARS}


with tempfile.TemporaryDirectory() as tmp:
    store = ReviewStore(Path(tmp) / "review.sqlite3", lease_ttl_s=1800.0)

    items = [
        draft("vid-espresso", "What roast level does the bag say?", "Dark roast"),
        draft("vid-espresso", "How many shots does the barista pull?", "Two"),
        draft("vid-yoga", "Which pose opens the routine?", "Downward dog"),
    ]
    print("enqueued:", store.enqueue(items))

    # Reviewer A leases the oldest item and accepts it outright.
    first = store.next_pending("reviewer-a")
    print("\nreviewer-a holds:", first.qa_id, "->", first.question)
    status = store.submit_verdict(ReviewVerdict(
        qa_id=first.qa_id,
        decision="accept",
        pillar_flags=all_pass(),
        reason="verbatim on the label",
        reviewer_id="reviewer-a",
    ))
    print("verdict outcome: ", status.value)

    # Reviewer B rejects the next one on the traceability pillar.
    second = store.next_pending("reviewer-b")
    flags = all_pass()
    flags["Traceability"] = False
    status = store.submit_verdict(ReviewVerdict(
        qa_id=second.qa_id,
        decision="reject",
        pillar_flags=flags,
        reason="cited span never mentions shots",
        reviewer_id="reviewer-b",
    ))
    print("\nrejected item:   ", second.qa_id, "->", status.value)

    # The annotation side regenerates the rejected item (same identity,
    # cycle advanced by one) and resubmits it; it returns to pending.
    regenerated = QaItem(
        qa_id=second.qa_id,
        video_id=second.video_id,
        task=second.task,
        difficulty=second.difficulty,
        question=second.question,
        answer=second.answer,
        reasoning="recounted from the pour sequence",
        evidence=(EvidenceItem(Modality.A, 1, 3, "pulls two shots"),),
        cycle=second.cycle + 1,
    )
    store.enqueue([regenerated])
    print("after resubmit:  ", store.stats()["by_status"])

    # Clearing the rest of the queue: reviewer A accepts both leases.
    while (item := store.next_pending("reviewer-a")) is not None:
        store.submit_verdict(ReviewVerdict(
            qa_id=item.qa_id,
            decision="accept",
            pillar_flags=all_pass(),
            reason="checks out against the timeline",
            reviewer_id="reviewer-a",
        ))

    print("\nqueue drained:   ", store.stats()["by_status"])
    print("full history of the regenerated item:")
    _, history = store.get_item(second.qa_id)
    for verdict in history:
        print(f"  {verdict.decision:7s} by {verdict.reviewer_id}: {verdict.reason}")

    # Export ships only accepted items, sorted and byte-stable.
    out = Path(tmp) / "accepted.jsonl"
    count, payload = store.export_accepted(out)
    print(f"\nexported {count} items, {len(payload)} bytes")
    for line in out.read_text(encoding="utf-8").splitlines():
        print("  ", line[:78] + ("..." if len(line) > 78 else ""))

    # An auditor can pull an accepted item back into the queue, on the
    # record: the override lands in the event log with its reason.
    reopened = store.reopen(first.qa_id, actor="auditor-1", reason="price changed in re-shoot")
    print("\nreopened", first.qa_id, "->", reopened.value)
    print("final tally:", store.stats()["by_status"])
    store.close()
