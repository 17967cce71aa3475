"""Wire API for the review loop, versioned under /v1.

Endpoints map one-to-one onto the store operations:

    GET  /v1/queue/next?reviewer=ID  lease the oldest pending item
    POST /v1/verdict                 submit an accept/reject verdict
    GET  /v1/items/{qa_id}           item plus its verdict history
    GET  /v1/stats                   counts per status, task, and cycle
    POST /v1/enqueue                 annotator integration
    GET  /v1/export/accepted         benchmark.jsonl stream
    POST /v1/reopen                  auditor override on a terminal item

Queue responses ship the rendered timeline context and its structured
slots next to the item, so a reviewer (or the review UI) can verify each
evidence excerpt against the channel text it cites.  Bodies are JSON;
errors return the standard status codes (400 validation, 404 unknown,
409 state or content conflict).
"""

from __future__ import annotations

from fastapi import FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from ..alignment import StructuredContext, context_to_json_dict, render_context
from ..errors import InputError, ValidationError
from ..qa import QaItem, item_from_json_dict, item_to_json_dict
from .store import ConflictError, ReviewStore, ReviewVerdict, StateError


class VerdictBody(BaseModel):
    qa_id: str
    decision: str
    pillar_flags: dict[str, bool]
    reason: str = ""
    reviewer: str


class EnqueueBody(BaseModel):
    items: list[dict] = Field(default_factory=list)


class ReopenBody(BaseModel):
    qa_id: str
    actor: str
    reason: str


def _context_block(context: StructuredContext | None) -> dict | None:
    if context is None:
        return None
    block = context_to_json_dict(context)
    block["rendered"] = render_context(context)
    return block


def create_app(
    store: ReviewStore,
    contexts: dict[str, StructuredContext] | None = None,
) -> FastAPI:
    """Build the service around an open store; contexts are keyed by video_id."""
    app = FastAPI(title="review-service", version="1")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["X-Accepted-Count"],
    )
    context_map = contexts or {}

    @app.exception_handler(ConflictError)
    @app.exception_handler(StateError)
    async def conflict_handler(request: Request, exc: InputError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(ValidationError)
    async def validation_handler(request: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(InputError)
    async def input_handler(request: Request, exc: InputError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.get("/v1/queue/next")
    def queue_next(reviewer: str = Query(min_length=1)):
        item = store.next_pending(reviewer)
        if item is None:
            return {"item": None, "context": None}
        return {
            "item": item_to_json_dict(item),
            "context": _context_block(context_map.get(item.video_id)),
        }

    @app.post("/v1/verdict")
    def submit_verdict(body: VerdictBody):
        verdict = ReviewVerdict(
            qa_id=body.qa_id,
            decision=body.decision,
            pillar_flags=body.pillar_flags,
            reason=body.reason,
            reviewer_id=body.reviewer,
        )
        status = store.submit_verdict(verdict)
        return {"qa_id": body.qa_id, "status": status.value}

    @app.get("/v1/items/{qa_id}")
    def get_item(qa_id: str):
        item, history = store.get_item(qa_id)
        return {
            "item": item_to_json_dict(item),
            "history": [
                {
                    "decision": v.decision,
                    "pillar_flags": v.pillar_flags,
                    "reason": v.reason,
                    "reviewer": v.reviewer_id,
                    "timestamp": v.timestamp,
                }
                for v in history
            ],
        }

    @app.get("/v1/stats")
    def get_stats():
        return store.stats()

    @app.post("/v1/enqueue")
    def enqueue(body: EnqueueBody):
        items: list[QaItem] = [item_from_json_dict(entry) for entry in body.items]
        count = store.enqueue(items)
        return {"enqueued": count}

    @app.get("/v1/export/accepted")
    def export_accepted():
        count, payload = store.export_accepted()
        return PlainTextResponse(
            payload,
            media_type="application/x-ndjson",
            headers={"X-Accepted-Count": str(count)},
        )

    @app.post("/v1/reopen")
    def reopen(body: ReopenBody):
        status = store.reopen(body.qa_id, body.actor, body.reason)
        return {"qa_id": body.qa_id, "status": status.value}

    return app
