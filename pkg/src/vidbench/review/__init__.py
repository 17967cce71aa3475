"""Human review loop: persistent queue, verdict state machine, wire API."""

from .store import (
    PILLARS,
    ConflictError,
    ReviewStore,
    ReviewVerdict,
    StateError,
)

__all__ = [
    "PILLARS",
    "ConflictError",
    "ReviewStore",
    "ReviewVerdict",
    "StateError",
]
