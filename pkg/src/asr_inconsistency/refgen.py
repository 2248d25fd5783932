"""Reference transcript generation.

Two routes produce the reference a greedy transcript is scored against:
the LM-fused beam decoder, and a correction client that asks a chat-style
model to repair the greedy text. The deterministic MockCorrector stands in
for the live endpoint in tests and offline runs.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from typing import Protocol

import requests

from .decoder import DecoderConfig, beam_search_decode
from .errors import (
    AuthError,
    EmptyReplyError,
    RateLimitedError,
    TransportError,
    UnknownMethodError,
)
from .ngram import NGramModel
from .posteriors import PosteriorMatrix
from .transcript import Transcript, TranscriptSource
from .vocab import Vocabulary

BRACKETED = "bracketed"
FALLBACK_WHOLE_REPLY = "fallback_whole_reply"

ENV_ENDPOINT = "LLM_ENDPOINT_URL"
ENV_API_KEY = "LLM_API_KEY"
ENV_MODEL = "LLM_MODEL_NAME"

PROMPT_TEMPLATE = (
    "The following is the output of an automatic speech recognition system "
    "for an utterance of a speaker with speech pathology in {language}: {sentence}\n"
    "\n"
    "Please correct the sentence. Please put the corrected sentence within "
    "square brackets [like this].\n"
    "If the sentence is already correct, repeat the sentence within square brackets."
)


def build_prompt(language: str, sentence: str) -> str:
    """Fill the correction prompt frame; nothing but the two slots varies."""
    return PROMPT_TEMPLATE.replace("{language}", language).replace("{sentence}", sentence)


def extract_bracketed(reply: str) -> tuple[str, str]:
    """Contents of the first balanced [...] span, or the whole trimmed reply.

    Returns (text, extraction) with extraction one of BRACKETED or
    FALLBACK_WHOLE_REPLY.
    """
    if not reply.strip():
        raise EmptyReplyError("reply is empty")
    start = reply.find("[")
    if start >= 0:
        depth = 0
        for i in range(start, len(reply)):
            if reply[i] == "[":
                depth += 1
            elif reply[i] == "]":
                depth -= 1
                if depth == 0:
                    return reply[start + 1:i], BRACKETED
    return reply.strip(), FALLBACK_WHOLE_REPLY


@dataclass(frozen=True)
class CorrectionRequest:
    language: str
    sentence: str
    model_name: str
    temperature: float = 0.0
    run_index: int = 0

    def __post_init__(self) -> None:
        if not self.sentence.strip():
            raise ValueError("sentence is empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class CorrectionResult:
    corrected: Transcript
    raw_reply: str
    run_index: int
    extraction: str
    retries: int = 0


class CorrectionClient(Protocol):
    def complete(self, request: CorrectionRequest) -> tuple[str, int]:
        """Return (raw reply text, retry count)."""


class MockCorrector:
    """Deterministic offline stand-in for the live correction endpoint.

    Replies come from an exact-sentence substitution table; sentences not in
    the table are echoed back inside brackets.
    """

    def __init__(self, replies: dict[str, str] | None = None) -> None:
        self.replies = dict(replies or {})

    @classmethod
    def from_json(cls, path: str) -> "MockCorrector":
        with open(path, encoding="utf-8") as fin:
            return cls(json.load(fin))

    def complete(self, request: CorrectionRequest) -> tuple[str, int]:
        reply = self.replies.get(request.sentence)
        if reply is None:
            reply = f"[{request.sentence}]"
        return reply, 0


class HttpChatClient:
    """Chat-completion style HTTP client with bounded retries.

    Transport failures and rate limiting are retried with exponential
    backoff; authentication failures surface immediately.
    """

    def __init__(self, endpoint_url: str, api_key: str,
                 *, max_retries: int = 3, timeout_s: float = 60.0,
                 backoff_base_s: float = 1.0) -> None:
        self.endpoint_url = endpoint_url
        self.api_key = api_key
        self.max_retries = max_retries
        self.timeout_s = timeout_s
        self.backoff_base_s = backoff_base_s

    @classmethod
    def from_env(cls) -> "HttpChatClient":
        endpoint = os.environ.get(ENV_ENDPOINT, "")
        key = os.environ.get(ENV_API_KEY, "")
        if not endpoint or not key:
            raise AuthError(f"{ENV_ENDPOINT} and {ENV_API_KEY} must be set")
        return cls(endpoint, key)

    def complete(self, request: CorrectionRequest) -> tuple[str, int]:
        body = {
            "model": request.model_name,
            "temperature": request.temperature,
            "messages": [
                {"role": "user",
                 "content": build_prompt(request.language, request.sentence)},
            ],
        }
        headers = {"Authorization": f"Bearer {self.api_key}",
                   "Content-Type": "application/json"}
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff_base_s * 2 ** (attempt - 1))
            try:
                resp = requests.post(self.endpoint_url, json=body,
                                     headers=headers, timeout=self.timeout_s)
            except requests.RequestException as exc:
                last_error = TransportError(str(exc))
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"endpoint returned {resp.status_code}")
            if resp.status_code == 429:
                last_error = RateLimitedError("rate limited by endpoint")
                continue
            if resp.status_code >= 500:
                last_error = TransportError(f"server error {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise TransportError(f"unexpected status {resp.status_code}")
            try:
                content = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError) as exc:
                raise TransportError(f"malformed response body: {exc}") from exc
            return content, attempt
        raise last_error if last_error is not None else TransportError("no attempt made")


def correct_with_llm(client: CorrectionClient, w_greedy: Transcript,
                     language: str, model_name: str,
                     *, runs: int = 3, temperature: float = 0.0) -> list[CorrectionResult]:
    """One independent correction request per run.

    Runs are never cached across run_index: the endpoint is stochastic even
    at temperature 0, and the spread across runs is part of the output.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    results: list[CorrectionResult] = []
    for run_index in range(runs):
        request = CorrectionRequest(language=language, sentence=w_greedy.text(),
                                    model_name=model_name,
                                    temperature=temperature, run_index=run_index)
        reply, retries = client.complete(request)
        text, extraction = extract_bracketed(reply)
        results.append(CorrectionResult(
            corrected=Transcript.from_raw(text, TranscriptSource.LLM_REFERENCE),
            raw_reply=reply,
            run_index=run_index,
            extraction=extraction,
            retries=retries,
        ))
    return results


def generate_reference(method: str, *,
                       post: PosteriorMatrix | None = None,
                       vocab: Vocabulary | None = None,
                       lm: NGramModel | None = None,
                       decoder_config: DecoderConfig | None = None,
                       client: CorrectionClient | None = None,
                       w_greedy: Transcript | None = None,
                       language: str = "unknown",
                       model_name: str = "",
                       runs: int = 3,
                       temperature: float = 0.0) -> list[Transcript]:
    """Dispatch to one of the reference-generation routes.

    "ngram" decodes the posteriors with the LM-fused beam search and returns
    a single transcript; "llm" sends the greedy text to the correction
    client and returns one transcript per run.
    """
    if method == "ngram":
        if post is None or vocab is None or decoder_config is None:
            raise ValueError("ngram reference needs posteriors, vocab and decoder config")
        return [beam_search_decode(post, vocab, lm, decoder_config)]
    if method == "llm":
        if client is None or w_greedy is None:
            raise ValueError("llm reference needs a client and the greedy transcript")
        results = correct_with_llm(client, w_greedy, language, model_name,
                                   runs=runs, temperature=temperature)
        return [r.corrected for r in results]
    raise UnknownMethodError(f"unknown reference method {method!r}")
