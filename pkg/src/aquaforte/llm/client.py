"""Chat-completion clients: live HTTP, replay from fixtures, and recording."""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional, Protocol

import httpx

from .prompts import Prompt, prompt_hash

log = logging.getLogger(__name__)

API_KEY_ENV = "AQUAFORTE_API_KEY"


class LlmError(RuntimeError):
    pass


class FixtureMissing(LlmError):
    def __init__(self, digest: str, path: Optional[str] = None):
        where = f" in {path}" if path else ""
        super().__init__(f"fixture missing for prompt sha256 {digest}{where}")
        self.digest = digest


class TransportFailure(LlmError):
    pass


class TruncatedResponse(LlmError):
    """finish_reason was not 'stop'; treated as retriable."""


@dataclass
class LlmConfig:
    base_url: Optional[str] = None
    model: str = "gpt-4.1"
    replay_path: Optional[str] = None
    record_path: Optional[str] = None
    temperature: float = 0.01
    max_retries: int = 3
    backoff: float = 1.0
    request_timeout: float = 120.0
    max_tokens: Optional[int] = None
    api_key_env: str = API_KEY_ENV

    def __post_init__(self):
        if self.replay_path and self.base_url:
            raise ValueError("replay and live modes are mutually exclusive")
        if self.record_path and not self.base_url:
            raise ValueError("recording needs a live endpoint")

    @property
    def mode(self) -> str:
        if self.replay_path:
            return "replay"
        if self.base_url:
            return "record" if self.record_path else "live"
        return "none"


@dataclass
class TranscriptEntry:
    request: str
    response: str
    timestamp: str
    model: str
    prompt_sha256: str
    outcome: Optional[str] = None


class Transcript:
    """Append-only record of exchanges, optionally mirrored to a JSON-lines file.

    Outcome tags arrive after the fact; they are written as separate
    ``{"tag": index, "outcome": ...}`` lines so the file is never rewritten.
    """

    def __init__(self, path: Optional[str] = None):
        self.entries: list[TranscriptEntry] = []
        self.path = Path(path) if path else None
        self._lock = threading.Lock()

    def append(self, entry: TranscriptEntry) -> int:
        with self._lock:
            self.entries.append(entry)
            idx = len(self.entries) - 1
            self._write({"index": idx, **asdict(entry)})
            return idx

    def tag(self, index: int, outcome: str) -> None:
        with self._lock:
            self.entries[index].outcome = outcome
            self._write({"tag": index, "outcome": outcome})

    def _write(self, record: dict) -> None:
        if self.path is None:
            return
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


class ChatClient(Protocol):
    model: str

    def complete(self, prompt: Prompt) -> str: ...


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class ReplayClient:
    """Answers from a JSON map ``{prompt_sha256: response_text}``; never touches the network."""

    def __init__(self, fixtures: Optional[dict[str, str]] = None, path: Optional[str] = None, model: str = "replay"):
        self.path = path
        if fixtures is None:
            fixtures = load_fixtures(path) if path else {}
        self.fixtures = dict(fixtures)
        self.model = model

    def complete(self, prompt: Prompt) -> str:
        digest = prompt_hash(prompt)
        try:
            return self.fixtures[digest]
        except KeyError:
            raise FixtureMissing(digest, self.path) from None


def load_fixtures(path: str) -> dict[str, str]:
    p = Path(path)
    if not p.exists():
        return {}
    data = json.loads(p.read_text(encoding="utf-8"))
    if not isinstance(data, dict) or not all(isinstance(v, str) for v in data.values()):
        raise LlmError(f"{path}: replay file must map prompt hashes to response strings")
    return data


def save_fixtures(path: str, fixtures: dict[str, str]) -> None:
    tmp = Path(path + ".tmp")
    tmp.write_text(json.dumps(fixtures, indent=1, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    os.replace(tmp, path)


class HttpChatClient:
    """OpenAI-compatible ``/chat/completions`` client with retry and exponential backoff."""

    RETRY_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}

    def __init__(
        self,
        config: LlmConfig,
        http: Optional[httpx.Client] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if not config.base_url:
            raise ValueError("live client needs base_url")
        self.config = config
        self.model = config.model
        self._http = http or httpx.Client(timeout=config.request_timeout)
        self._sleep = sleep

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _payload(self, prompt: Prompt) -> dict:
        body = {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt.render()}],
        }
        if self.config.max_tokens:
            body["max_tokens"] = self.config.max_tokens
        return body

    def complete(self, prompt: Prompt) -> str:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        payload = self._payload(prompt)
        last: Exception = TransportFailure("no attempt made")
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self._sleep(self.config.backoff * 2 ** (attempt - 1))
            try:
                resp = self._http.post(url, json=payload, headers=self._headers())
            except httpx.TransportError as err:
                last = TransportFailure(f"{type(err).__name__}: {err}")
                log.warning("LLM request failed (attempt %d): %s", attempt + 1, last)
                continue
            if resp.status_code in self.RETRY_STATUS:
                last = TransportFailure(f"HTTP {resp.status_code}")
                log.warning("LLM request failed (attempt %d): %s", attempt + 1, last)
                continue
            if resp.status_code >= 400:
                raise TransportFailure(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                choice = resp.json()["choices"][0]
                text = choice["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError) as err:
                raise LlmError(f"unexpected completion payload: {err}") from err
            reason = choice.get("finish_reason")
            if reason not in (None, "stop"):
                last = TruncatedResponse(f"finish_reason={reason}")
                log.warning("LLM response truncated (attempt %d): %s", attempt + 1, reason)
                continue
            return text
        raise last


class RecordingClient:
    """Wraps a live client and stores every answer as a replay fixture."""

    def __init__(self, inner: ChatClient, path: str):
        self.inner = inner
        self.model = inner.model
        self.path = path
        self.fixtures = load_fixtures(path)
        self._lock = threading.Lock()

    def complete(self, prompt: Prompt) -> str:
        text = self.inner.complete(prompt)
        with self._lock:
            self.fixtures[prompt_hash(prompt)] = text
            save_fixtures(self.path, self.fixtures)
        return text


class ScriptedClient:
    """Returns canned answers in order; handy for tests and dry runs."""

    def __init__(self, answers, model: str = "scripted"):
        self.answers = list(answers)
        self.model = model
        self.prompts: list[Prompt] = []
        self._lock = threading.Lock()

    def complete(self, prompt: Prompt) -> str:
        with self._lock:
            self.prompts.append(prompt)
            if not self.answers:
                raise LlmError("scripted client ran out of answers")
            return self.answers.pop(0)


@dataclass
class LlmSession:
    """A client plus the transcript every exchange is appended to."""

    client: ChatClient
    transcript: Transcript = field(default_factory=Transcript)

    def ask(self, prompt: Prompt) -> tuple[str, int]:
        text = self.client.complete(prompt)
        idx = self.transcript.append(
            TranscriptEntry(prompt.render(), text, _now(), getattr(self.client, "model", "?"), prompt_hash(prompt))
        )
        return text, idx


def make_client(config: LlmConfig) -> ChatClient:
    if config.mode == "replay":
        return ReplayClient(path=config.replay_path)
    if config.mode == "none":
        return ReplayClient({})
    live = HttpChatClient(config)
    if config.record_path:
        return RecordingClient(live, config.record_path)
    return live


def complete(prompt: Prompt, config: LlmConfig, transcript: Optional[Transcript] = None) -> str:
    text, _ = LlmSession(make_client(config), transcript or Transcript()).ask(prompt)
    return text
