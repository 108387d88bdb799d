"""Passage retrieval: a local lexical index and a remote retrieval service."""

from __future__ import annotations

import json
import os
import re
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import httpx

from .chat import RETRY_DELAYS, BackendError, TransportError

DEFAULT_K = 5
ENV_RETRIEVAL_URL = "BUDGETTREE_RETRIEVAL_URL"

_WORD = re.compile(r"\w+")
STOPWORDS = frozenset(
    "a an and are as at be by for from has have in is it its of on or that the this to was were what which who whom with".split()
)


def terms(text: str) -> Counter:
    return Counter(w for w in _WORD.findall(text.lower()) if w not in STOPWORDS)


@dataclass(frozen=True)
class Passage:
    title: str
    text: str


@dataclass(frozen=True)
class RetrievalResult:
    passages: tuple[Passage, ...]

    def format(self) -> str:
        return "\n".join(f"Doc {i} (Title: {p.title}) {p.text}" for i, p in enumerate(self.passages, 1))


class Retriever(Protocol):
    def retrieve(self, query: str, k: int = DEFAULT_K) -> RetrievalResult: ...


class LocalCorpus:
    """Term-frequency dot-product ranking over a small in-memory corpus."""

    def __init__(self, docs: list[dict]):
        self.docs = [(str(d.get("id", i)), d["title"], d["text"]) for i, d in enumerate(docs)]
        self._tf = [terms(f"{title} {text}") for _, title, text in self.docs]

    @classmethod
    def from_jsonl(cls, path: str | Path) -> LocalCorpus:
        with open(path, encoding="utf-8") as fh:
            return cls([json.loads(line) for line in fh if line.strip()])

    def __len__(self) -> int:
        return len(self.docs)

    def scores(self, query: str) -> list[int]:
        q = terms(query)
        return [sum(c * tf[w] for w, c in q.items()) for tf in self._tf]

    def retrieve(self, query: str, k: int = DEFAULT_K) -> RetrievalResult:
        if not query or not query.strip():
            raise ValueError("empty query")
        if k < 1:
            raise ValueError("k must be positive")
        scores = self.scores(query)
        order = sorted(range(len(self.docs)), key=lambda i: (-scores[i], i))[:k]
        return RetrievalResult(tuple(Passage(self.docs[i][1], self.docs[i][2]) for i in order))


def _split_contents(contents: str) -> Passage:
    title, _, text = contents.partition("\n")
    return Passage(title.strip().strip('"'), text.strip())


class HttpRetriever:
    """Client for a retrieval service speaking::

        POST {url}/retrieve  {"queries": [q], "topk": k, "return_scores": true}
        -> {"result": [[{"document": {"contents": "\\"Title\\"\\ntext"}, "score": s}, ...]]}
    """

    def __init__(
        self,
        url: str | None = None,
        *,
        timeout: float = 30.0,
        retry_delays: tuple[float, ...] = RETRY_DELAYS,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        url = url or os.environ.get(ENV_RETRIEVAL_URL)
        if not url:
            raise BackendError(f"no retrieval endpoint configured; set {ENV_RETRIEVAL_URL}")
        self.url = url.rstrip("/")
        self.retry_delays = tuple(retry_delays)
        self._sleep = sleep
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def retrieve(self, query: str, k: int = DEFAULT_K) -> RetrievalResult:
        if not query or not query.strip():
            raise ValueError("empty query")
        body = {"queries": [query], "topk": k, "return_scores": True}
        last: TransportError | None = None
        for attempt in range(len(self.retry_delays) + 1):
            try:
                resp = self._client.post(f"{self.url}/retrieve", json=body)
            except httpx.HTTPError as exc:
                last = TransportError(f"retrieval transport error: {exc}")
            else:
                if resp.status_code == 200:
                    try:
                        hits = resp.json()["result"][0]
                        return RetrievalResult(tuple(_split_contents(h["document"]["contents"]) for h in hits[:k]))
                    except (ValueError, KeyError, IndexError, TypeError):
                        raise BackendError("malformed retrieval response")
                last = TransportError(f"retrieval endpoint returned HTTP {resp.status_code}", resp.status_code)
            if attempt < len(self.retry_delays):
                self._sleep(self.retry_delays[attempt])
        assert last is not None
        raise last
