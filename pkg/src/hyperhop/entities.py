"""Entity extraction, normalization, and the global entity catalog.

Entities are the fine-grained nodes of the hypergraph. Each passage yields
an ordered, deduplicated set of normalized entity strings; the union over
all passages (in ascending passage-id order) defines the catalog that maps
entity strings to dense row indices.
"""

from __future__ import annotations

import json
import re
import threading
import time
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .corpus import Passage
from .errors import ContractError, ExtractionError

# Tokens that may never start a capitalized span in the offline extractor.
_SPAN_STOPWORDS = frozenset(
    """
    a an the and or but nor so yet if then than as at by for from in into of
    on onto over to under with without is are was were be been being am do
    does did done have has had will would shall should can could may might
    must he she it they them we us you i me his her hers its their theirs
    our ours your yours my mine this that these those there here when where
    why how what which who whom whose while during between after before
    about against not no yes also
    """.split()
)

_TOKEN_RE = re.compile(r"\w[\w'’\-]*", re.UNICODE)


def normalize_entity(raw: str) -> str:
    """Canonicalize an entity string: NFC, lowercase, collapsed whitespace.

    Returns "" when nothing survives, which callers treat as a signal to
    drop the entity.
    """
    text = unicodedata.normalize("NFC", raw).lower()
    return " ".join(text.split())


@dataclass(frozen=True)
class EntitySet:
    """Normalized, deduplicated entities of one passage (order preserved)."""

    passage_id: str
    entities: tuple[str, ...]

    def __post_init__(self):
        seen = set()
        for ent in self.entities:
            if not ent:
                raise ContractError(f"empty entity in set for passage {self.passage_id!r}")
            if ent != normalize_entity(ent):
                raise ContractError(f"entity {ent!r} is not normalized")
            if ent in seen:
                raise ContractError(f"duplicate entity {ent!r} in passage {self.passage_id!r}")
            seen.add(ent)


class EntityCatalog:
    """Bijection between normalized entity strings and indices in [0, n)."""

    def __init__(self, entities: Iterable[str] = ()):
        self._entities: list[str] = []
        self._index: dict[str, int] = {}
        for ent in entities:
            self.add(ent)

    def add(self, entity: str) -> int:
        idx = self._index.get(entity)
        if idx is None:
            idx = len(self._entities)
            self._index[entity] = idx
            self._entities.append(entity)
        return idx

    def index_of(self, entity: str) -> int:
        try:
            return self._index[entity]
        except KeyError:
            raise KeyError(f"entity {entity!r} not in catalog") from None

    def entity_of(self, index: int) -> str:
        return self._entities[index]

    def __contains__(self, entity: str) -> bool:
        return entity in self._index

    def __len__(self) -> int:
        return len(self._entities)

    def __iter__(self):
        return iter(self._entities)

    def to_list(self) -> list[str]:
        return list(self._entities)


def build_catalog(entity_sets: Sequence[EntitySet]) -> EntityCatalog:
    """Union all entity sets into a catalog, indices in first-seen order.

    Callers must pass the sets in the deterministic indexing order
    (ascending passage id) for reproducible index assignment.
    """
    catalog = EntityCatalog()
    for es in entity_sets:
        for ent in es.entities:
            catalog.add(ent)
    return catalog


class ExtractionClient(Protocol):
    def extract(self, title: str, text: str) -> list[str]:
        """Return raw (unnormalized) entity strings for one passage."""
        ...


class OfflineEntityExtractor:
    """Deterministic fallback extractor: runs of capitalized tokens.

    A span is a maximal run of capitalized tokens whose lowercased forms are
    not stopwords. Works without any model and is the extractor used by the
    test fixtures and offline mode.
    """

    def extract(self, title: str, text: str) -> list[str]:
        spans: list[str] = []
        current: list[str] = []
        prev_end = 0
        for match in _TOKEN_RE.finditer(text):
            token = match.group(0)
            # Punctuation between tokens (periods, commas, ...) breaks a span.
            contiguous = text[prev_end : match.start()].isspace() or prev_end == 0
            if not contiguous and current:
                spans.append(" ".join(current))
                current = []
            if token[0].isalpha() and token[0].isupper() and token.lower() not in _SPAN_STOPWORDS:
                current.append(token)
            else:
                if current:
                    spans.append(" ".join(current))
                    current = []
            prev_end = match.end()
        if current:
            spans.append(" ".join(current))
        return spans


class RemoteEntityExtractor:
    """LLM-backed extractor over an OpenAI-compatible chat endpoint.

    Sends the configured one-shot prompt with temperature 0 and parses the
    reply as a JSON array of strings (falling back to one entity per line).
    """

    def __init__(self, chat_client, prompt_template: str):
        if "{text}" not in prompt_template:
            raise ContractError("extraction prompt template must contain {text}")
        self._chat = chat_client
        self._template = prompt_template

    def extract(self, title: str, text: str) -> list[str]:
        prompt = self._template.format(title=title, text=text)
        reply = self._chat.complete(prompt)
        return _parse_entity_reply(reply)


def _parse_entity_reply(reply: str) -> list[str]:
    reply = reply.strip()
    # Tolerate fenced code blocks around the JSON payload.
    if reply.startswith("```"):
        reply = re.sub(r"^```[a-zA-Z]*\n?|```$", "", reply).strip()
    start, end = reply.find("["), reply.rfind("]")
    if start != -1 and end > start:
        try:
            parsed = json.loads(reply[start : end + 1])
            if isinstance(parsed, list):
                return [str(item) for item in parsed]
        except json.JSONDecodeError:
            pass
    return [line.strip(" -*\t") for line in reply.splitlines() if line.strip(" -*\t")]


class ExtractionCache:
    """JSONL cache of per-passage extraction results, keyed by passage id.

    Entries are ``{"passage_id": ..., "entities": [...]}``. Writes go to a
    temp file and are swapped in atomically; concurrent puts are serialized.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._entries: dict[str, list[str]] = {}
        self._lock = threading.Lock()
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    obj = json.loads(line)
                    self._entries[obj["passage_id"]] = list(obj["entities"])

    def get(self, passage_id: str) -> list[str] | None:
        entities = self._entries.get(passage_id)
        return list(entities) if entities is not None else None

    def put(self, passage_id: str, entities: Sequence[str]) -> None:
        with self._lock:
            self._entries[passage_id] = list(entities)

    def __len__(self) -> int:
        return len(self._entries)

    def flush(self) -> None:
        with self._lock:
            tmp = self.path.with_suffix(self.path.suffix + ".tmp")
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with tmp.open("w", encoding="utf-8") as fh:
                for pid in sorted(self._entries):
                    fh.write(
                        json.dumps(
                            {"passage_id": pid, "entities": self._entries[pid]},
                            ensure_ascii=False,
                        )
                        + "\n"
                    )
            tmp.replace(self.path)


@dataclass
class RetryPolicy:
    attempts: int = 3
    backoff_seconds: float = 0.5

    def sleep(self, attempt: int) -> None:
        if self.backoff_seconds > 0:
            time.sleep(self.backoff_seconds * (2**attempt))


def extract_entities(
    passage: Passage,
    extractor: ExtractionClient,
    cache: ExtractionCache | None = None,
    retry: RetryPolicy = RetryPolicy(),
) -> EntitySet:
    """Extract, normalize and deduplicate entities for one passage.

    Cache hits bypass the extractor entirely. Extractor failures are retried
    per ``retry`` and then surfaced as ExtractionError carrying the passage
    id. An empty extraction result is valid and yields an empty EntitySet.
    """
    if cache is not None:
        cached = cache.get(passage.id)
        if cached is not None:
            return EntitySet(passage_id=passage.id, entities=tuple(cached))

    last_error: Exception | None = None
    raw: list[str] | None = None
    for attempt in range(retry.attempts):
        try:
            raw = extractor.extract(passage.title, passage.text)
            break
        except Exception as exc:
            last_error = exc
            if attempt + 1 < retry.attempts:
                retry.sleep(attempt)
    if raw is None:
        raise ExtractionError(
            f"extraction failed for passage {passage.id!r}: {last_error}",
            passage_id=passage.id,
        ) from last_error

    entities = dedup_normalized(raw)
    if cache is not None:
        cache.put(passage.id, entities)
    return EntitySet(passage_id=passage.id, entities=tuple(entities))


def dedup_normalized(raw_entities: Iterable[str]) -> list[str]:
    """Normalize raw entity strings, dropping empties and later duplicates."""
    out: list[str] = []
    seen: set[str] = set()
    for raw in raw_entities:
        ent = normalize_entity(raw)
        if ent and ent not in seen:
            seen.add(ent)
            out.append(ent)
    return out


def extract_corpus_entities(
    passages: Sequence[Passage],
    extractor: ExtractionClient,
    cache: ExtractionCache | None = None,
    max_workers: int = 1,
    retry: RetryPolicy = RetryPolicy(),
) -> list[EntitySet]:
    """Extract entity sets for a whole corpus, preserving passage order.

    ``max_workers`` bounds in-flight extraction requests; results come back
    aligned with ``passages`` regardless of completion order.
    """
    if max_workers <= 1:
        sets = [extract_entities(p, extractor, cache, retry) for p in passages]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            sets = list(pool.map(lambda p: extract_entities(p, extractor, cache, retry), passages))
    if cache is not None:
        cache.flush()
    return sets
