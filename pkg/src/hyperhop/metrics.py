"""Answer and retrieval metrics: exact match, token F1, recall@k.

Answer strings are normalized the standard MHQA way before comparison:
lowercase, strip punctuation, drop articles, collapse whitespace.
"""

from __future__ import annotations

import re
import string
from collections import Counter
from typing import Sequence

from .errors import ContractError

_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize_answer(text: str) -> str:
    text = text.lower()
    text = text.translate(_PUNCT_TABLE)
    text = _ARTICLE_RE.sub(" ", text)
    return " ".join(text.split())


def exact_match(prediction: str, golds: Sequence[str]) -> int:
    """1 iff the normalized prediction equals any normalized gold."""
    if not golds:
        raise ContractError("golds must be non-empty")
    pred = normalize_answer(prediction)
    return int(any(pred == normalize_answer(g) for g in golds))


def _f1_single(prediction: str, gold: str) -> float:
    pred_tokens = normalize_answer(prediction).split()
    gold_tokens = normalize_answer(gold).split()
    if not pred_tokens and not gold_tokens:
        return 1.0
    if not pred_tokens or not gold_tokens:
        return 0.0
    common = Counter(pred_tokens) & Counter(gold_tokens)
    num_same = sum(common.values())
    if num_same == 0:
        return 0.0
    precision = num_same / len(pred_tokens)
    recall = num_same / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def token_f1(prediction: str, golds: Sequence[str]) -> float:
    """Best token-multiset F1 of the prediction over the gold answers."""
    if not golds:
        raise ContractError("golds must be non-empty")
    return max(_f1_single(prediction, g) for g in golds)


def recall_at_k(retrieved_ids: Sequence[str], gold_ids: Sequence[str], k: int) -> float:
    """Fraction of gold evidence covered by the first k retrieved ids."""
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    if not gold_ids:
        raise ContractError("gold_ids must be non-empty")
    gold = set(gold_ids)
    top = set(retrieved_ids[:k])
    return len(top & gold) / len(gold)


def hit_at_k(retrieved_ids: Sequence[str], gold_ids: Sequence[str], k: int) -> int:
    """Binary variant: 1 iff any gold id appears in the first k retrieved."""
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    if not gold_ids:
        raise ContractError("gold_ids must be non-empty")
    return int(bool(set(retrieved_ids[:k]) & set(gold_ids)))
