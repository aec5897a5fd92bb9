"""Pluggable LLM completion backends.

The backend contract is a single call: send(prompt, salt) -> completion
text. Ensemble runs within an attempt differ only by the salt, which an
HTTP backend maps to a sampling seed and the deterministic stub mixes
into its fixture lookup key.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from typing import Dict, Optional, Protocol

import requests

from ..model import InvariantError


class BackendError(RuntimeError):
    """Backend failed to produce a completion."""


class BackendTimeout(BackendError):
    """Backend did not answer in time; callers may retry."""


class StubFixtureMissing(BackendError):
    """The stub has no completion for this prompt hash."""

    def __init__(self, key: str):
        self.key = key
        super().__init__(f"stub backend has no fixture for prompt hash {key}")


@dataclass(frozen=True)
class LlmBackendConfig:
    endpoint_url: str
    model_name: str
    temperature: float = 0.7
    max_output_tokens: int = 2048
    timeout_seconds: int = 120

    def __post_init__(self):
        if self.temperature < 0:
            raise InvariantError("LlmBackendConfig", "temperature", "must be >= 0")
        if self.timeout_seconds <= 0:
            raise InvariantError("LlmBackendConfig", "timeout_seconds", "must be > 0")


class LlmBackend(Protocol):
    def send(self, prompt: str, salt: str = "") -> str: ...


def prompt_key(prompt: str, salt: str = "") -> str:
    """Stable fixture key: hash of the prompt plus the run salt."""
    return hashlib.sha256((prompt + "\x00" + salt).encode("utf-8")).hexdigest()


def salt_seed(salt: str) -> int:
    """Map a run salt to a deterministic 32-bit sampling seed."""
    digest = hashlib.sha256(salt.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


class HttpLlmBackend:
    """JSON-over-HTTP completion backend.

    POSTs {model, input, temperature, max_tokens, seed} and expects a
    JSON response carrying the completion text under "completion" (or
    "output"/"text" as fallbacks). Secrets come from the environment,
    never from config files.
    """

    def __init__(self, config: LlmBackendConfig, auth_token_env: Optional[str] = None,
                 session: Optional[requests.Session] = None):
        self.config = config
        self.auth_token = os.environ.get(auth_token_env, "") if auth_token_env else ""
        self.session = session or requests.Session()

    def send(self, prompt: str, salt: str = "") -> str:
        body = {
            "model": self.config.model_name,
            "input": prompt,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
            "seed": salt_seed(salt),
        }
        headers = {"Content-Type": "application/json"}
        if self.auth_token:
            headers["Authorization"] = f"Bearer {self.auth_token}"
        try:
            resp = self.session.post(
                self.config.endpoint_url, data=json.dumps(body), headers=headers,
                timeout=self.config.timeout_seconds,
            )
        except requests.Timeout as exc:
            raise BackendTimeout(f"no response within {self.config.timeout_seconds}s") from exc
        except requests.RequestException as exc:
            raise BackendError(f"request failed: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"backend returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            payload = resp.json()
        except ValueError as exc:
            raise BackendError(f"non-JSON response: {resp.text[:200]}") from exc
        for key in ("completion", "output", "text"):
            if isinstance(payload.get(key), str):
                return payload[key]
        raise BackendError(f"response carries no completion text: {list(payload)}")


class StubLlmBackend:
    """Deterministic fixture-backed backend for tests and synthetic runs."""

    def __init__(self, fixtures: Dict[str, str]):
        self.fixtures = dict(fixtures)
        self.calls = []  # (key, salt) in call order, for golden-prompt checks
        self.last_prompt: Optional[str] = None

    @classmethod
    def from_file(cls, path) -> "StubLlmBackend":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        # fixtures may be {key: completion} or {key: {"completion": ...}}
        fixtures = {
            k: (v["completion"] if isinstance(v, dict) else v) for k, v in raw.items()
        }
        return cls(fixtures)

    def send(self, prompt: str, salt: str = "") -> str:
        key = prompt_key(prompt, salt)
        self.calls.append((key, salt))
        self.last_prompt = prompt
        if key not in self.fixtures:
            raise StubFixtureMissing(key)
        return self.fixtures[key]
