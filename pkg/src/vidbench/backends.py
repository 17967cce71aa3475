"""Text-generation backends for annotation and judging.

A backend answers a chat-style request (system prompt, user prompt,
temperature) with plain text.  Two implementations ship:

* HttpBackend posts to a remote chat-completion-style endpoint.
* MockBackend replays scripted replies from a scenario file, line by
  line, for deterministic tests and offline runs.

A BackendProfile selects between them by its endpoint string: anything
of the form ``mock:<scenario>`` resolves to the scripted reply file
``fixtures/mock/<scenario>.jsonl``; everything else is treated as an
HTTP URL.

Scenario files hold one JSON object per line:

    {"reply": "..."}                a single scripted reply
    {"reply": "...", "times": 3}    the same reply, three draws
    {"reply": "...", "times": 0}    the same reply, forever
    {"fail": "reason"}              one simulated transport failure

Replies are consumed sequentially across calls, which makes retry
behaviour scriptable (fail, fail, then succeed).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import httpx

from .errors import ConfigError, InputError, RuntimeFailure

logger = logging.getLogger(__name__)

MOCK_FIXTURES_DIR = Path("fixtures") / "mock"


class BackendError(RuntimeFailure):
    """Backend unreachable or persistently failing."""


class ScenarioError(InputError):
    """Mock scenario file missing or malformed."""


@dataclass(frozen=True)
class BackendProfile:
    name: str
    endpoint: str
    timeout_s: float = 30.0
    max_retries: int = 2

    def __post_init__(self):
        if self.max_retries < 0:
            raise ConfigError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.timeout_s <= 0:
            raise ConfigError(f"timeout_s must be positive, got {self.timeout_s}")

    @property
    def is_mock(self) -> bool:
        return self.endpoint.startswith("mock:")

    @property
    def scenario(self) -> str:
        if not self.is_mock:
            raise InputError(f"backend {self.name} is not a mock profile")
        return self.endpoint.split(":", 1)[1]


class Backend:
    """Protocol: complete(system, user, temperature) -> reply text."""

    name: str

    def complete(self, system: str, user: str, temperature: float = 0.0) -> str:
        raise NotImplementedError


class MockBackend(Backend):
    def __init__(self, name: str, script: list[dict]):
        self.name = name
        self._script = list(script)
        self._pos = 0
        self._repeat_forever: str | None = None

    @classmethod
    def from_scenario(cls, profile: BackendProfile, fixtures_dir: str | Path | None = None) -> "MockBackend":
        root = Path(fixtures_dir) if fixtures_dir is not None else MOCK_FIXTURES_DIR
        path = root / f"{profile.scenario}.jsonl"
        if not path.exists():
            raise ScenarioError(f"mock scenario file not found: {path}")
        script = []
        for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ScenarioError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            if "reply" not in entry and "fail" not in entry:
                raise ScenarioError(f"{path}:{line_no}: entry needs 'reply' or 'fail'")
            script.append(entry)
        return cls(name=profile.name, script=script)

    @classmethod
    def from_replies(cls, replies: list[str], name: str = "mock") -> "MockBackend":
        return cls(name=name, script=[{"reply": r} for r in replies])

    def complete(self, system: str, user: str, temperature: float = 0.0) -> str:
        if self._repeat_forever is not None:
            return self._repeat_forever
        while self._pos < len(self._script):
            entry = self._script[self._pos]
            if "fail" in entry:
                self._pos += 1
                raise BackendError(f"scripted failure: {entry['fail']}")
            times = entry.get("times", 1)
            if times == 0:
                self._repeat_forever = entry["reply"]
                return entry["reply"]
            if entry.get("_drawn", 0) + 1 >= times:
                self._pos += 1
            else:
                # mutate a draw counter on the scripted entry
                self._script[self._pos] = {**entry, "_drawn": entry.get("_drawn", 0) + 1}
            return entry["reply"]
        raise BackendError(f"mock scenario for backend {self.name} is exhausted")


class HttpBackend(Backend):
    def __init__(self, profile: BackendProfile, client: httpx.Client | None = None):
        self.name = profile.name
        self._profile = profile
        self._client = client or httpx.Client(timeout=profile.timeout_s)

    def complete(self, system: str, user: str, temperature: float = 0.0) -> str:
        payload = {
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": temperature,
        }
        try:
            response = self._client.post(self._profile.endpoint, json=payload)
            response.raise_for_status()
            data = response.json()
        except httpx.HTTPError as exc:
            raise BackendError(f"backend {self.name} request failed: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise BackendError(f"backend {self.name} returned invalid JSON") from exc
        if isinstance(data, dict):
            if isinstance(data.get("reply"), str):
                return data["reply"]
            choices = data.get("choices")
            if isinstance(choices, list) and choices:
                message = choices[0].get("message", {})
                content = message.get("content")
                if isinstance(content, str):
                    return content
        raise BackendError(f"backend {self.name} reply has no recognizable text field")


def resolve_backend(profile: BackendProfile, fixtures_dir: str | Path | None = None) -> Backend:
    if profile.is_mock:
        return MockBackend.from_scenario(profile, fixtures_dir=fixtures_dir)
    return HttpBackend(profile)


def call_with_retries(backend: Backend, system: str, user: str, profile: BackendProfile,
                      temperature: float = 0.0) -> str:
    """One logical request with the profile's retry budget on transport failure."""
    attempts = profile.max_retries + 1
    last: BackendError | None = None
    for attempt in range(attempts):
        try:
            return backend.complete(system, user, temperature)
        except BackendError as exc:
            last = exc
            logger.warning("backend %s attempt %d/%d failed: %s",
                           backend.name, attempt + 1, attempts, exc)
    raise BackendError(f"backend {backend.name} failed after {attempts} attempts") from last
