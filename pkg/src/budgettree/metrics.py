"""Exact-match and token-F1 answer metrics (SQuAD-style normalization)."""

from __future__ import annotations

import re
import string
from collections import Counter

_ARTICLES = re.compile(r"\b(a|an|the)\b")
_PUNCT = set(string.punctuation)


def normalize_answer(s: str) -> str:
    """Lowercase, drop punctuation and articles, collapse whitespace."""
    s = (s or "").lower()
    s = "".join(ch for ch in s if ch not in _PUNCT)
    s = _ARTICLES.sub(" ", s)
    return " ".join(s.split())


def _as_list(gold) -> list[str]:
    if isinstance(gold, str):
        return [gold]
    gold = list(gold)
    if not gold:
        raise ValueError("gold answers must be non-empty")
    return gold


def exact_match(prediction: str, gold) -> int:
    pred = normalize_answer(prediction)
    return int(any(pred == normalize_answer(g) for g in _as_list(gold)))


def _f1(pred: str, gold: str) -> float:
    p = normalize_answer(pred).split()
    g = normalize_answer(gold).split()
    if not p or not g:
        return float(p == g)
    common = Counter(p) & Counter(g)
    same = sum(common.values())
    if same == 0:
        return 0.0
    precision = same / len(p)
    recall = same / len(g)
    return 2 * precision * recall / (precision + recall)


def f1_score(prediction: str, gold) -> float:
    return max(_f1(prediction, g) for g in _as_list(gold))
