"""LLM client boundary: an HTTP chat-completion client plus deterministic
test doubles. Endpoint, model and key come from config or the environment
(RIRAG_LLM_URL, RIRAG_LLM_KEY)."""
from __future__ import annotations

import hashlib
import logging
import os
import time
from dataclasses import dataclass
from typing import Optional

import requests

from .errors import TransportError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LlmConfig:
    endpoint: Optional[str] = None
    model: str = "gpt-4-turbo-1106"
    api_key: Optional[str] = None
    temperature: float = 0.0
    max_tokens: int = 1024
    retries: int = 3
    backoff: float = 0.5

    @staticmethod
    def from_env() -> "LlmConfig":
        return LlmConfig(endpoint=os.environ.get("RIRAG_LLM_URL"),
                         api_key=os.environ.get("RIRAG_LLM_KEY"))


def _log_exchange(request_text: str, response_text: str) -> None:
    digest = hashlib.sha256(
        (request_text + "\x1f" + response_text).encode("utf-8")).hexdigest()
    logger.info("llm exchange hash=%s request_len=%d response_len=%d",
                digest, len(request_text), len(response_text))


class HttpLlmClient:
    """Chat-completion client speaking the common messages JSON protocol."""

    def __init__(self, config: LlmConfig):
        if not config.endpoint:
            raise TransportError("no LLM endpoint configured "
                                 "(set RIRAG_LLM_URL)")
        self.config = config
        self.session = requests.Session()

    def complete(self, system_prompt: str, user_content: str) -> str:
        payload = {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
            "messages": [
                {"role": "system", "content": system_prompt},
                {"role": "user", "content": user_content},
            ],
        }
        headers = {}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        last_exc = None
        for attempt in range(self.config.retries):
            try:
                resp = self.session.post(self.config.endpoint, json=payload,
                                         headers=headers, timeout=180)
                resp.raise_for_status()
                data = resp.json()
                text = data["choices"][0]["message"]["content"]
                _log_exchange(system_prompt + "\n" + user_content, text)
                return text
            except (requests.RequestException, KeyError, IndexError,
                    ValueError) as exc:
                last_exc = exc
                if attempt + 1 < self.config.retries:
                    time.sleep(self.config.backoff * (2 ** attempt))
        raise TransportError(f"LLM endpoint failed after "
                             f"{self.config.retries} attempts: {last_exc}")


class EchoLlmClient:
    """Returns the assembled request text; for plumbing tests."""

    def complete(self, system_prompt: str, user_content: str) -> str:
        text = system_prompt + "\n\n" + user_content
        _log_exchange(text, text)
        return text


class CannedLlmClient:
    """Maps a substring of the user content to a fixed response."""

    def __init__(self, canned: dict, default: str = ""):
        self.canned = dict(canned)
        self.default = default

    def complete(self, system_prompt: str, user_content: str) -> str:
        for needle, response in self.canned.items():
            if needle in user_content:
                _log_exchange(user_content, response)
                return response
        _log_exchange(user_content, self.default)
        return self.default
