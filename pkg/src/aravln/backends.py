"""Pluggable text-completion backends: a live HTTP chat-completion client,
a record/replay backend for deterministic end-to-end runs, and a scripted
backend for unit tests."""

from __future__ import annotations

import difflib
import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Protocol, Sequence, runtime_checkable

from .errors import BackendError, InvariantError, ReplayMiss

log = logging.getLogger(__name__)

KEY_SCHEME = "v1"
RECORD_FORMAT = "aravln-record"

ENV_ENDPOINT = "ARA_LLM_ENDPOINT"
ENV_API_KEY = "ARA_LLM_API_KEY"
ENV_MODEL = "ARA_LLM_MODEL"


@dataclass(frozen=True)
class CompletionRequest:
    """One completion call. All fields participate in the request key."""

    system_text: str
    user_text: str
    model_id: str = "default"
    temperature: float = 0.0
    max_tokens: int = 512

    def __post_init__(self):
        if self.temperature < 0:
            raise InvariantError("request.temperature_nonnegative")
        if self.max_tokens <= 0:
            raise InvariantError("request.max_tokens_positive")

    def to_dict(self) -> dict:
        return {
            "system_text": self.system_text,
            "user_text": self.user_text,
            "model_id": self.model_id,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    @property
    def request_key(self) -> str:
        """Stable, versioned content hash; equal requests hash equal."""
        payload = json.dumps(self.to_dict(), sort_keys=True,
                             ensure_ascii=True, separators=(",", ":"))
        digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
        return f"{KEY_SCHEME}:{digest}"


@runtime_checkable
class CompletionBackend(Protocol):
    id: str

    def complete(self, request: CompletionRequest) -> str: ...


class ScriptedBackend:
    """Unit-test backend: answers from a fixed list (in order) or from a
    callable computed per request. Safe for concurrent use."""

    def __init__(self,
                 script: Sequence[str] | Callable[[CompletionRequest], str],
                 id: str = "scripted"):
        self.id = id
        self._fn = script if callable(script) else None
        self._queue = None if callable(script) else list(script)
        self._lock = threading.Lock()
        self.calls = 0

    def complete(self, request: CompletionRequest) -> str:
        with self._lock:
            self.calls += 1
            if self._fn is not None:
                return self._fn(request)
            if not self._queue:
                raise BackendError("malformed_response",
                                   f"scripted backend {self.id!r} exhausted")
            return self._queue.pop(0)


class HttpBackend:
    """OpenAI-style chat-completion client.

    Endpoint, credential and default model come from arguments or the
    ARA_LLM_ENDPOINT / ARA_LLM_API_KEY / ARA_LLM_MODEL environment
    variables. Transient transport failures (connection errors, 5xx, 429)
    are retried with capped exponential backoff.
    """

    def __init__(self, endpoint: str | None = None,
                 api_key: str | None = None,
                 model: str | None = None, *,
                 attempts: int = 3,
                 backoff_base: float = 0.1,
                 backoff_cap: float = 2.0,
                 timeout: float = 60.0,
                 id: str = "http",
                 session=None):
        self.id = id
        self.endpoint = endpoint or os.environ.get(ENV_ENDPOINT)
        self.api_key = api_key or os.environ.get(ENV_API_KEY)
        self.model = model or os.environ.get(ENV_MODEL)
        self.attempts = max(1, attempts)
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self.timeout = timeout
        self._session = session

    def _require_config(self):
        # Checked before any network activity.
        if not self.api_key:
            raise BackendError("auth", f"no API key (set {ENV_API_KEY})")
        if not self.endpoint:
            raise BackendError("auth", f"no endpoint (set {ENV_ENDPOINT})")

    def complete(self, request: CompletionRequest) -> str:
        self._require_config()
        import requests

        session = self._session or requests
        model = request.model_id if request.model_id != "default" else \
            (self.model or request.model_id)
        body = {
            "model": model,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": request.user_text},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Authorization": f"Bearer {self.api_key}",
                   "Content-Type": "application/json"}
        last_error: BackendError | None = None
        for attempt in range(1, self.attempts + 1):
            try:
                resp = session.post(self.endpoint, json=body,
                                    headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = BackendError("transport", str(exc))
            else:
                if resp.status_code in (401, 403):
                    raise BackendError("auth",
                                       f"HTTP {resp.status_code}: {resp.text}")
                if resp.status_code == 429:
                    last_error = BackendError("rate_limit",
                                              f"HTTP 429: {resp.text}")
                elif resp.status_code >= 500:
                    last_error = BackendError(
                        "transport", f"HTTP {resp.status_code}: {resp.text}")
                elif resp.status_code != 200:
                    raise BackendError(
                        "transport", f"HTTP {resp.status_code}: {resp.text}")
                else:
                    return self._extract_text(resp)
            if attempt < self.attempts:
                delay = min(self.backoff_cap,
                            self.backoff_base * (2 ** (attempt - 1)))
                log.warning("completion attempt %d/%d failed (%s); "
                            "retrying in %.2fs", attempt, self.attempts,
                            last_error, delay)
                time.sleep(delay)
        assert last_error is not None
        raise last_error

    @staticmethod
    def _extract_text(resp) -> str:
        try:
            doc = resp.json()
            content = doc["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise BackendError("malformed_response",
                               f"cannot extract completion: {exc}") from None
        if not isinstance(content, str):
            raise BackendError("malformed_response",
                               "message content is not a string")
        return content


class Recorder:
    """Appends (key, request, response) entries to a JSONL record file.

    The first line is a header carrying the key scheme version. Timestamps
    are stored per entry but never enter the key. Appends are serialized.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, request: CompletionRequest, response: str) -> None:
        entry = {
            "key": request.request_key,
            "request": request.to_dict(),
            "response": response,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        with self._lock:
            new_file = not self.path.exists() or self.path.stat().st_size == 0
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                if new_file:
                    fh.write(json.dumps({"format": RECORD_FORMAT,
                                         "version": 1,
                                         "key_scheme": KEY_SCHEME}) + "\n")
                fh.write(json.dumps(entry) + "\n")


class RecordingBackend:
    """Wraps any backend and appends every successful call to a record
    file, so live runs produce replayable fixtures. Keeps the inner id so
    replayed runs key identically."""

    def __init__(self, inner: CompletionBackend, path: str | Path):
        self.inner = inner
        self.id = inner.id
        self.recorder = Recorder(path)

    def complete(self, request: CompletionRequest) -> str:
        response = self.inner.complete(request)
        self.recorder.append(request, response)
        return response


class ReplayBackend:
    """Answers from a record file; a pure function of the request key.

    Unrecorded requests raise ReplayMiss with a diff against the nearest
    recorded request, which makes prompt drift diagnosable.
    """

    def __init__(self, path: str | Path, id: str = "replay"):
        self.id = id
        self.path = Path(path)
        self._responses: dict[str, str] = {}
        self._requests: dict[str, dict] = {}
        self._load()

    def _load(self):
        if not self.path.exists():
            raise BackendError("transport", f"record file not found: {self.path}")
        for i, line in enumerate(self.path.read_text("utf-8").splitlines()):
            if not line.strip():
                continue
            obj = json.loads(line)
            if "format" in obj:
                if obj.get("key_scheme") not in (None, KEY_SCHEME):
                    raise BackendError(
                        "malformed_response",
                        f"record file uses key scheme {obj.get('key_scheme')!r}, "
                        f"this build speaks {KEY_SCHEME!r}")
                continue
            self._responses[obj["key"]] = obj["response"]
            self._requests[obj["key"]] = obj.get("request", {})

    def __len__(self) -> int:
        return len(self._responses)

    def complete(self, request: CompletionRequest) -> str:
        key = request.request_key
        hit = self._responses.get(key)
        if hit is not None:
            return hit
        raise ReplayMiss(self._miss_message(request))

    def _miss_message(self, request: CompletionRequest) -> str:
        if not self._requests:
            return (f"request {request.request_key} not recorded; "
                    f"record file {self.path} has no entries")
        want = json.dumps(request.to_dict(), indent=2, sort_keys=True)
        best_key = max(
            self._requests,
            key=lambda k: difflib.SequenceMatcher(
                None, want,
                json.dumps(self._requests[k], indent=2, sort_keys=True)
            ).ratio())
        have = json.dumps(self._requests[best_key], indent=2, sort_keys=True)
        diff = "\n".join(difflib.unified_diff(
            have.splitlines(), want.splitlines(),
            fromfile=f"recorded {best_key}",
            tofile=f"requested {request.request_key}", lineterm=""))
        return (f"request {request.request_key} not recorded in {self.path} "
                f"({len(self._responses)} entries); nearest key diff:\n{diff}")
