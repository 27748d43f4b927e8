"""Chat-completion client for OpenAI-compatible endpoints, with record/replay cassettes."""

from __future__ import annotations

import datetime as _dt
import enum
import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import httpx

log = logging.getLogger(__name__)

ENV_BASE = "SMELLCC_API_BASE"
ENV_KEY = "SMELLCC_API_KEY"
ENV_MODEL = "SMELLCC_MODEL"
DEFAULT_MODEL = "deepseek-coder-v2"


class LlmError(Exception):
    pass


class AuthError(LlmError):
    pass


class RateLimited(LlmError):
    pass


class TransportError(LlmError):
    pass


class EmptyCompletion(LlmError):
    pass


class CassetteMiss(LlmError):
    pass


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    model: str | None = None
    temperature: float = 0.0
    max_tokens: int = 2048
    timeout: float = 120.0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must not be negative")


@dataclass(frozen=True)
class ClientConfig:
    base_url: str = "http://localhost:8000/v1"
    api_key: str | None = None
    model: str = DEFAULT_MODEL
    max_retries: int = 3
    max_concurrency: int = 4
    backoff: float = 1.0
    backoff_multiplier: float = 2.0
    split_system: bool = False

    def __post_init__(self):
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be at least 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must not be negative")

    def delay(self, retry: int) -> float:
        """Wait before the ``retry``-th retry (1-based)."""
        return self.backoff * self.backoff_multiplier ** (retry - 1)

    @classmethod
    def from_env(cls, env: dict[str, str] | None = None, **overrides) -> "ClientConfig":
        env = os.environ if env is None else env
        values = {}
        if env.get(ENV_BASE):
            values["base_url"] = env[ENV_BASE]
        if env.get(ENV_KEY):
            values["api_key"] = env[ENV_KEY]
        if env.get(ENV_MODEL):
            values["model"] = env[ENV_MODEL]
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def build_messages(prompt: str, split_system: bool = False) -> list[dict]:
    """A single user turn, or the first paragraph as a system turn when ``split_system``."""
    if split_system and "\n\n" in prompt:
        head, rest = prompt.split("\n\n", 1)
        return [{"role": "system", "content": head}, {"role": "user", "content": rest}]
    return [{"role": "user", "content": prompt}]


class LlmClient:
    def __init__(
        self,
        config: ClientConfig | None = None,
        *,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config or ClientConfig.from_env()
        self._http = httpx.Client(transport=transport)
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(self.config.max_concurrency)
        self.calls = 0

    def close(self) -> None:
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def complete(self, request: CompletionRequest) -> str:
        model = request.model or self.config.model
        body = {
            "model": model,
            "messages": build_messages(request.prompt, self.config.split_system),
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        url = self.config.base_url.rstrip("/") + "/chat/completions"

        last: LlmError | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self._sleep(self.config.delay(attempt))
            with self._slots:
                self.calls += 1
                try:
                    resp = self._http.post(url, json=body, headers=headers, timeout=request.timeout)
                except httpx.TimeoutException as exc:
                    last = TransportError(f"timeout: {exc}")
                    continue
                except httpx.HTTPError as exc:
                    last = TransportError(str(exc))
                    continue
            if resp.status_code in (401, 403):
                raise AuthError(f"HTTP {resp.status_code} from {url}")
            if resp.status_code == 429:
                last = RateLimited("HTTP 429")
                continue
            if resp.status_code >= 500:
                last = TransportError(f"HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            return _completion_text(resp)
        log.warning("giving up after %d attempts: %s", self.config.max_retries + 1, last)
        assert last is not None
        raise last


def _completion_text(resp: httpx.Response) -> str:
    try:
        data = resp.json()
        content = data["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise TransportError(f"malformed completion payload: {exc}") from exc
    if not content or not content.strip():
        raise EmptyCompletion("the model returned no text")
    return content


# -- cassettes -----------------------------------------------------------------


class CassetteMode(str, enum.Enum):
    Record = "record"
    Replay = "replay"
    Passthrough = "passthrough"


@dataclass
class Cassette:
    """JSONL file of recorded completions keyed by the SHA-256 of the prompt."""

    path: Path
    entries: dict[str, dict] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Cassette":
        path = Path(path)
        entries = {}
        if path.exists():
            for line in path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    entry = json.loads(line)
                    entries[entry["prompt_sha256"]] = entry
        return cls(path, entries)

    def lookup(self, prompt: str) -> dict | None:
        return self.entries.get(prompt_digest(prompt))

    def append(self, prompt: str, response: str, model: str) -> dict:
        entry = {
            "prompt_sha256": prompt_digest(prompt),
            "response": response,
            "model": model,
            "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "prompt": prompt,
        }
        self.entries[entry["prompt_sha256"]] = entry
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
        return entry


class RecordReplay:
    """Wraps a client (or none, in replay mode) behind a cassette."""

    def __init__(self, cassette: Cassette, mode: CassetteMode, client: LlmClient | None = None):
        mode = CassetteMode(mode)
        if mode is not CassetteMode.Replay and client is None:
            raise ValueError(f"{mode.value} mode needs a live client")
        self.cassette = cassette
        self.mode = mode
        self.client = client
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> str:
        if self.mode is CassetteMode.Passthrough:
            return self.client.complete(request)
        with self._lock:
            hit = self.cassette.lookup(request.prompt)
        if hit is not None:
            return hit["response"]
        if self.mode is CassetteMode.Replay:
            raise CassetteMiss(f"no recorded response for prompt {prompt_digest(request.prompt)[:12]}")
        response = self.client.complete(request)
        model = request.model or self.client.config.model
        with self._lock:
            self.cassette.append(request.prompt, response, model)
        return response


def record_replay(
    client: LlmClient | None, cassette_path: str | os.PathLike, mode: CassetteMode | str
) -> RecordReplay:
    return RecordReplay(Cassette.load(cassette_path), CassetteMode(mode), client)
