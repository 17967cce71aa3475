"""Persistent review queue backed by a single SQLite file.

The store is the authority for the item state machine:

    pending --accept--> accepted                      (terminal)
    pending --reject--> rejected    (cycle < 3, awaiting regeneration)
    pending --reject--> manual_correction (cycle = 3, terminal)
    rejected --regenerated resubmit (cycle + 1)--> pending

Verdicts check four pillars: Accuracy, Traceability, Discriminability,
and CommercialRelevance.  Accepting requires all four to pass; rejecting
requires at least one failure and a written reason.  Verdict history is
append-only, and a senior auditor may re-open a terminal item with an
audited event.

Reviewers see the queue through time-limited leases: next_pending hands
out the oldest pending item not currently leased, and an expired lease
makes the item visible again.  One SQLite connection behind a process
lock serializes all mutations; restarting the service on the same file
reproduces the queue exactly.
"""

from __future__ import annotations

import json
import sqlite3
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from ..errors import InputError, ValidationError
from ..qa import MAX_CYCLE, QaItem, QaStatus, item_from_json_dict, item_to_json_dict

PILLARS = ("Accuracy", "Traceability", "Discriminability", "CommercialRelevance")

DEFAULT_LEASE_TTL_S = 1800.0


class ConflictError(InputError):
    """qa_id collision with differing content or a terminal item."""


class StateError(InputError):
    """Verdict against an item not leased by this reviewer or not pending."""


@dataclass(frozen=True)
class ReviewVerdict:
    qa_id: str
    decision: str
    pillar_flags: dict[str, bool]
    reason: str
    reviewer_id: str
    timestamp: float = 0.0

    def __post_init__(self):
        if self.decision not in ("accept", "reject"):
            raise ValidationError(f"decision must be accept or reject, got {self.decision!r}")
        missing = [p for p in PILLARS if p not in self.pillar_flags]
        if missing:
            raise ValidationError(f"verdict missing pillar flags: {', '.join(missing)}")
        extra = [p for p in self.pillar_flags if p not in PILLARS]
        if extra:
            raise ValidationError(f"unknown pillar flags: {', '.join(extra)}")
        if self.decision == "accept" and not all(self.pillar_flags.values()):
            failing = sorted(p for p, ok in self.pillar_flags.items() if not ok)
            raise ValidationError(
                f"accept requires all pillars to pass; failing: {', '.join(failing)}"
            )
        if self.decision == "reject":
            if all(self.pillar_flags.values()):
                raise ValidationError("reject requires at least one failing pillar")
            if not self.reason.strip():
                raise ValidationError("reject requires a non-empty reason")


_SCHEMA = """
CREATE TABLE IF NOT EXISTS items (
    qa_id TEXT PRIMARY KEY,
    seq INTEGER NOT NULL,
    content TEXT NOT NULL,
    status TEXT NOT NULL,
    cycle INTEGER NOT NULL,
    lease_reviewer TEXT,
    lease_expires REAL
);
CREATE TABLE IF NOT EXISTS verdicts (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    qa_id TEXT NOT NULL,
    decision TEXT NOT NULL,
    pillar_flags TEXT NOT NULL,
    reason TEXT NOT NULL,
    reviewer_id TEXT NOT NULL,
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS events (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    qa_id TEXT NOT NULL,
    kind TEXT NOT NULL,
    actor TEXT NOT NULL,
    detail TEXT NOT NULL,
    created_at REAL NOT NULL
);
"""


def _canonical(item: QaItem) -> str:
    return json.dumps(item_to_json_dict(item), ensure_ascii=False, sort_keys=True)


class ReviewStore:
    def __init__(
        self,
        path: str | Path,
        lease_ttl_s: float = DEFAULT_LEASE_TTL_S,
        clock: Callable[[], float] = time.time,
    ):
        self._path = str(path)
        self._ttl = lease_ttl_s
        self._clock = clock
        self._lock = threading.Lock()
        self._conn = sqlite3.connect(self._path, check_same_thread=False)
        self._conn.execute("PRAGMA journal_mode=WAL")
        with self._lock, self._conn:
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        self._conn.close()

    def _next_seq(self) -> int:
        row = self._conn.execute("SELECT COALESCE(MAX(seq), 0) + 1 FROM items").fetchone()
        return int(row[0])

    def enqueue(self, items: list[QaItem]) -> int:
        """Insert fresh items; re-enqueueing an identical pending item is a no-op.

        A rejected item resubmitted with cycle + 1 is a regeneration and
        returns to pending.  Any other collision is a conflict.
        """
        count = 0
        with self._lock, self._conn:
            for item in items:
                row = self._conn.execute(
                    "SELECT content, status, cycle FROM items WHERE qa_id = ?",
                    (item.qa_id,),
                ).fetchone()
                if row is None:
                    if item.status not in (QaStatus.PENDING, QaStatus.MANUAL_CORRECTION):
                        raise ConflictError(
                            f"fresh item {item.qa_id} must enqueue as pending or "
                            f"manual_correction, got {item.status.value}"
                        )
                    self._conn.execute(
                        "INSERT INTO items (qa_id, seq, content, status, cycle) "
                        "VALUES (?, ?, ?, ?, ?)",
                        (item.qa_id, self._next_seq(), _canonical(item),
                         item.status.value, item.cycle),
                    )
                    count += 1
                    continue
                content, status, cycle = row
                if status == QaStatus.PENDING.value and content == _canonical(item):
                    continue
                if status == QaStatus.REJECTED.value and item.cycle == cycle + 1:
                    # regeneration resubmit; the loop may have exhausted its
                    # budget, in which case the item arrives terminal already
                    if item.status is QaStatus.MANUAL_CORRECTION:
                        regenerated = item
                    else:
                        regenerated = item.with_status(QaStatus.PENDING)
                    self._conn.execute(
                        "UPDATE items SET content = ?, status = ?, cycle = ?, "
                        "lease_reviewer = NULL, lease_expires = NULL WHERE qa_id = ?",
                        (_canonical(regenerated), regenerated.status.value,
                         item.cycle, item.qa_id),
                    )
                    count += 1
                    continue
                raise ConflictError(
                    f"qa_id {item.qa_id} already stored with status {status}; "
                    f"re-enqueue is only valid as a cycle+1 regeneration of a rejected item"
                )
        return count

    def next_pending(self, reviewer_id: str) -> QaItem | None:
        """Lease the oldest pending item; a reviewer's own lease is renewed."""
        if not reviewer_id:
            raise ValidationError("reviewer_id must be non-empty")
        now = self._clock()
        with self._lock, self._conn:
            row = self._conn.execute(
                "SELECT qa_id, content FROM items WHERE status = ? "
                "AND lease_reviewer = ? AND lease_expires > ? ORDER BY seq LIMIT 1",
                (QaStatus.PENDING.value, reviewer_id, now),
            ).fetchone()
            if row is None:
                row = self._conn.execute(
                    "SELECT qa_id, content FROM items WHERE status = ? "
                    "AND (lease_reviewer IS NULL OR lease_expires <= ?) "
                    "ORDER BY seq LIMIT 1",
                    (QaStatus.PENDING.value, now),
                ).fetchone()
            if row is None:
                return None
            qa_id, content = row
            self._conn.execute(
                "UPDATE items SET lease_reviewer = ?, lease_expires = ? WHERE qa_id = ?",
                (reviewer_id, now + self._ttl, qa_id),
            )
        return item_from_json_dict(json.loads(content))

    def submit_verdict(self, verdict: ReviewVerdict) -> QaStatus:
        now = self._clock()
        with self._lock, self._conn:
            row = self._conn.execute(
                "SELECT content, status, cycle, lease_reviewer, lease_expires "
                "FROM items WHERE qa_id = ?",
                (verdict.qa_id,),
            ).fetchone()
            if row is None:
                raise StateError(f"unknown qa_id {verdict.qa_id}")
            content, status, cycle, lease_reviewer, lease_expires = row
            if status != QaStatus.PENDING.value:
                raise StateError(
                    f"item {verdict.qa_id} is {status}, verdicts apply to pending items"
                )
            if lease_reviewer != verdict.reviewer_id or (lease_expires or 0) <= now:
                raise StateError(
                    f"item {verdict.qa_id} is not actively leased by {verdict.reviewer_id}"
                )
            if verdict.decision == "accept":
                new_status = QaStatus.ACCEPTED
            elif cycle >= MAX_CYCLE:
                new_status = QaStatus.MANUAL_CORRECTION
            else:
                new_status = QaStatus.REJECTED
            item = item_from_json_dict(json.loads(content)).with_status(new_status)
            self._conn.execute(
                "UPDATE items SET content = ?, status = ?, "
                "lease_reviewer = NULL, lease_expires = NULL WHERE qa_id = ?",
                (_canonical(item), new_status.value, verdict.qa_id),
            )
            self._conn.execute(
                "INSERT INTO verdicts (qa_id, decision, pillar_flags, reason, "
                "reviewer_id, created_at) VALUES (?, ?, ?, ?, ?, ?)",
                (verdict.qa_id, verdict.decision,
                 json.dumps(verdict.pillar_flags, sort_keys=True),
                 verdict.reason, verdict.reviewer_id, now),
            )
        return new_status

    def get_item(self, qa_id: str) -> tuple[QaItem, list[ReviewVerdict]]:
        with self._lock:
            row = self._conn.execute(
                "SELECT content FROM items WHERE qa_id = ?", (qa_id,)
            ).fetchone()
            if row is None:
                raise InputError(f"unknown qa_id {qa_id}")
            history = self._conn.execute(
                "SELECT decision, pillar_flags, reason, reviewer_id, created_at "
                "FROM verdicts WHERE qa_id = ? ORDER BY id",
                (qa_id,),
            ).fetchall()
        item = item_from_json_dict(json.loads(row[0]))
        verdicts = [
            ReviewVerdict(
                qa_id=qa_id,
                decision=decision,
                pillar_flags=json.loads(flags),
                reason=reason,
                reviewer_id=reviewer,
                timestamp=created,
            )
            for decision, flags, reason, reviewer, created in history
        ]
        return item, verdicts

    def stats(self) -> dict:
        with self._lock:
            rows = self._conn.execute("SELECT content, status, cycle FROM items").fetchall()
        by_status: dict[str, int] = {}
        by_task: dict[str, int] = {}
        by_cycle: dict[str, int] = {}
        for content, status, cycle in rows:
            by_status[status] = by_status.get(status, 0) + 1
            task = json.loads(content)["task"]
            by_task[task] = by_task.get(task, 0) + 1
            by_cycle[str(cycle)] = by_cycle.get(str(cycle), 0) + 1
        return {
            "total": len(rows),
            "by_status": dict(sorted(by_status.items())),
            "by_task": dict(sorted(by_task.items())),
            "by_cycle": dict(sorted(by_cycle.items())),
        }

    def items_with_status(self, status: QaStatus) -> list[QaItem]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT content FROM items WHERE status = ? ORDER BY seq",
                (status.value,),
            ).fetchall()
        return [item_from_json_dict(json.loads(content)) for (content,) in rows]

    def export_accepted(self, destination: str | Path | None = None) -> tuple[int, str]:
        """Accepted items as jsonl sorted by (video_id, qa_id); byte-deterministic."""
        accepted = sorted(
            self.items_with_status(QaStatus.ACCEPTED),
            key=lambda item: (item.video_id, item.qa_id),
        )
        lines = [json.dumps(item_to_json_dict(i), ensure_ascii=False) for i in accepted]
        payload = "\n".join(lines) + ("\n" if lines else "")
        if destination is not None:
            Path(destination).write_text(payload, encoding="utf-8")
        return len(accepted), payload

    def reopen(self, qa_id: str, actor: str, reason: str) -> QaStatus:
        """Auditor override: re-open a terminal item with an audited event."""
        if not reason.strip():
            raise ValidationError("re-open requires a reason")
        now = self._clock()
        with self._lock, self._conn:
            row = self._conn.execute(
                "SELECT content, status FROM items WHERE qa_id = ?", (qa_id,)
            ).fetchone()
            if row is None:
                raise InputError(f"unknown qa_id {qa_id}")
            content, status = row
            if status not in (QaStatus.ACCEPTED.value, QaStatus.MANUAL_CORRECTION.value):
                raise StateError(f"item {qa_id} is {status}, only terminal items re-open")
            item = item_from_json_dict(json.loads(content)).with_status(QaStatus.PENDING)
            self._conn.execute(
                "UPDATE items SET content = ?, status = ?, "
                "lease_reviewer = NULL, lease_expires = NULL WHERE qa_id = ?",
                (_canonical(item), QaStatus.PENDING.value, qa_id),
            )
            self._conn.execute(
                "INSERT INTO events (qa_id, kind, actor, detail, created_at) "
                "VALUES (?, ?, ?, ?, ?)",
                (qa_id, "reopen", actor, reason, now),
            )
        return QaStatus.PENDING
