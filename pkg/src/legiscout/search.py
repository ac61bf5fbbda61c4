"""Keyword search over entities and semantic search over bill-text chunks.

Keyword scoring is rule-based (exact name 3, name prefix 2, name or tag
substring 1, ties by id). Semantic search embeds whitespace-token chunk
windows and ranks by exact brute-force cosine similarity; the dot products
are computed with plain Python float arithmetic in index order so the
ranking is reproducible bit-for-bit. The default embedder hashes
lowercased character 3-grams into 256 buckets with log-scaled counts and
L2 normalization; a remote HTTP embedder client is available for external
models. Index files are versioned JSON and rebuild byte-identically.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field

from .errors import (
    EmbedderMismatch,
    EmptyQuery,
    EmptyText,
    ParseError,
    RemoteUnavailable,
)
from .graph import BillRef, LogGraph
from .ingest import CorpusSection

INDEX_SCHEMA = "chunk-index-v1"
HASH_NGRAM_ID = "hash-ngram-v1"
HASH_NGRAM_DIM = 256


@dataclass(frozen=True)
class TextChunk:
    chunk_id: str
    section_id: str
    text: str
    token_count: int
    bill_ref: BillRef
    linked_entities: frozenset = frozenset()

    def __post_init__(self):
        if self.token_count <= 0:
            raise ValueError("token_count must be > 0")
        object.__setattr__(self, "linked_entities", frozenset(self.linked_entities))


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple
    norm: float

    @classmethod
    def from_values(cls, values) -> "EmbeddingVector":
        vals = tuple(float(v) for v in values)
        return cls(values=vals, norm=math.sqrt(sum(v * v for v in vals)))

    def dot(self, other: "EmbeddingVector") -> float:
        return sum(a * b for a, b in zip(self.values, other.values))


@dataclass(frozen=True)
class SearchHit:
    target: str
    score: float
    kind: str  # "keyword_entity" | "semantic_chunk"
    snippet: str | None = None
    match_span: tuple | None = None
    bill_ref: BillRef | None = None
    linked_entities: frozenset = frozenset()


@dataclass
class ChunkIndex:
    embedder_id: str
    dimension: int
    chunks: dict = field(default_factory=dict)  # chunk_id -> (TextChunk, EmbeddingVector)

    def insert(self, chunk: TextChunk, vector: EmbeddingVector):
        if len(vector.values) != self.dimension:
            raise ValueError(
                f"vector dimension {len(vector.values)} does not match index "
                f"dimension {self.dimension}"
            )
        if chunk.chunk_id in self.chunks:
            raise ValueError(f"duplicate chunk_id {chunk.chunk_id!r}")
        self.chunks[chunk.chunk_id] = (chunk, vector)

    def __len__(self) -> int:
        return len(self.chunks)


# ── keyword search ──


def keyword_score(query_lower: str, name: str, tags) -> int:
    """3 exact name, 2 name prefix, 1 name or tag substring, 0 no match."""
    name_lower = name.lower()
    if name_lower == query_lower:
        return 3
    if name_lower.startswith(query_lower):
        return 2
    if query_lower in name_lower:
        return 1
    for tag in tags:
        if query_lower in tag:
            return 1
    return 0


def keyword_search(g: LogGraph, query: str, limit: int = 10) -> list:
    if limit < 1:
        raise ValueError("limit must be >= 1")
    q = query.strip().lower()
    if not q:
        raise EmptyQuery("keyword query is empty")
    hits = []
    for eid in sorted(g.entities):
        e = g.entities[eid]
        score = keyword_score(q, e.name, e.tags)
        if score == 0:
            continue
        name_lower = e.name.lower()
        pos = name_lower.find(q)
        span = (pos, pos + len(q)) if pos >= 0 else None
        hits.append(
            SearchHit(
                target=eid,
                score=float(score),
                kind="keyword_entity",
                snippet=e.name,
                match_span=span,
            )
        )
    hits.sort(key=lambda h: (-h.score, h.target))
    return hits[:limit]


# ── chunking ──


def chunk_corpus(sections, max_tokens: int, overlap_tokens: int) -> list:
    """Splits each section into whitespace-token windows of max_tokens with
    the given overlap; windows never cross section boundaries."""
    if not max_tokens > overlap_tokens >= 0:
        raise ValueError("need max_tokens > overlap_tokens >= 0")
    chunks = []
    for section in sections:
        tokens = section.text.split()
        if not tokens:
            continue
        start = 0
        i = 0
        while True:
            window = tokens[start : start + max_tokens]
            chunks.append(
                TextChunk(
                    chunk_id=f"{section.section_id}#{i:04d}",
                    section_id=section.section_id,
                    text=" ".join(window),
                    token_count=len(window),
                    bill_ref=BillRef(
                        bill_id=section.section_id,
                        document_id=section.document_id,
                        page=section.page,
                    ),
                    linked_entities=section.linked_entities,
                )
            )
            if start + max_tokens >= len(tokens):
                break
            start += max_tokens - overlap_tokens
            i += 1
    return chunks


# ── embedders ──


class HashNgramEmbedder:
    """Self-contained deterministic embedder: lowercased character 3-grams
    hashed into 256 buckets, log-scaled counts, L2 normalized."""

    embedder_id = HASH_NGRAM_ID
    dimension = HASH_NGRAM_DIM

    def embed(self, text: str) -> EmbeddingVector:
        if not text or not text.strip():
            raise EmptyText("cannot embed empty text")
        lowered = text.lower()
        grams = (
            [lowered[i : i + 3] for i in range(len(lowered) - 2)]
            if len(lowered) >= 3
            else [lowered]
        )
        counts = [0] * self.dimension
        for gram in grams:
            bucket = int.from_bytes(
                hashlib.sha1(gram.encode("utf-8")).digest()[:8], "big"
            ) % self.dimension
            counts[bucket] += 1
        values = [math.log1p(c) for c in counts]
        norm = math.sqrt(sum(v * v for v in values))
        if norm > 0.0:
            values = [v / norm for v in values]
        return EmbeddingVector.from_values(values)

    def embed_many(self, texts) -> list:
        return [self.embed(t) for t in texts]


class RemoteEmbedder:
    """Client for an HTTP embedding service.

    Protocol: POST {"texts": [...]} to the endpoint, response
    {"model": id, "vectors": [[...], ...]}. The embedder_id is the model
    name the service reports. Failures retry up to 3 attempts with
    exponential backoff starting at 200 ms.
    """

    MAX_ATTEMPTS = 3
    FIRST_BACKOFF_S = 0.2
    BATCH_SIZE = 64

    def __init__(self, endpoint: str, timeout: float = 10.0, client=None,
                 sleep=time.sleep):
        import httpx

        self.endpoint = endpoint
        self._client = client or httpx.Client(timeout=timeout)
        self._sleep = sleep
        self._model: str | None = None
        self._dimension: int | None = None

    @property
    def embedder_id(self) -> str:
        if self._model is None:
            raise RemoteUnavailable("no response from the embedding service yet")
        return self._model

    @property
    def dimension(self) -> int:
        if self._dimension is None:
            raise RemoteUnavailable("no response from the embedding service yet")
        return self._dimension

    def _post(self, texts) -> list:
        import httpx

        last_error: Exception | None = None
        backoff = self.FIRST_BACKOFF_S
        for attempt in range(self.MAX_ATTEMPTS):
            if attempt > 0:
                self._sleep(backoff)
                backoff *= 2.0
            try:
                resp = self._client.post(self.endpoint, json={"texts": list(texts)})
                resp.raise_for_status()
                payload = resp.json()
                vectors = payload["vectors"]
                model = payload["model"]
            except (httpx.HTTPError, KeyError, ValueError) as exc:
                last_error = exc
                continue
            if len(vectors) != len(texts):
                last_error = RemoteUnavailable(
                    f"service returned {len(vectors)} vectors for {len(texts)} texts"
                )
                continue
            self._model = str(model)
            if vectors and self._dimension is None:
                self._dimension = len(vectors[0])
            return vectors
        raise RemoteUnavailable(
            f"embedding service failed after {self.MAX_ATTEMPTS} attempts: {last_error}"
        )

    def embed(self, text: str) -> EmbeddingVector:
        if not text or not text.strip():
            raise EmptyText("cannot embed empty text")
        return EmbeddingVector.from_values(self._post([text])[0])

    def embed_many(self, texts) -> list:
        for t in texts:
            if not t or not t.strip():
                raise EmptyText("cannot embed empty text")
        out = []
        for start in range(0, len(texts), self.BATCH_SIZE):
            batch = texts[start : start + self.BATCH_SIZE]
            out.extend(EmbeddingVector.from_values(v) for v in self._post(batch))
        return out


# ── index build / query ──


def build_index(chunks, embedder) -> ChunkIndex:
    if not chunks:
        raise ValueError("cannot build an index from zero chunks")
    vectors = []
    for chunk in chunks:
        try:
            vectors.append(embedder.embed(chunk.text))
        except Exception as exc:
            raise type(exc)(f"chunk {chunk.chunk_id!r}: {exc}") from exc
    index = ChunkIndex(embedder_id=embedder.embedder_id, dimension=embedder.dimension)
    for chunk, vector in zip(chunks, vectors):
        index.insert(chunk, vector)
    return index


def semantic_search(index: ChunkIndex, query: str, k: int, embedder) -> list:
    """Exact top-k by cosine similarity; ties broken by chunk_id ascending."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not query or not query.strip():
        raise EmptyQuery("semantic query is empty")
    if embedder.embedder_id != index.embedder_id:
        raise EmbedderMismatch(
            f"query embedder {embedder.embedder_id!r} does not match index "
            f"embedder {index.embedder_id!r}"
        )
    qvec = embedder.embed(query)
    scored = []
    for chunk_id in sorted(index.chunks):
        chunk, vec = index.chunks[chunk_id]
        scored.append((qvec.dot(vec), chunk_id, chunk))
    scored.sort(key=lambda item: (-item[0], item[1]))
    hits = []
    for score, chunk_id, chunk in scored[:k]:
        hits.append(
            SearchHit(
                target=chunk_id,
                score=score,
                kind="semantic_chunk",
                snippet=chunk.text[:120],
                bill_ref=chunk.bill_ref,
                linked_entities=chunk.linked_entities,
            )
        )
    return hits


def link_terms_to_graph(g: LogGraph, index: ChunkIndex, term: str, k: int, embedder) -> list:
    """Entities ranked by the summed scores of supporting chunks returned
    for the term; zero-score chunks support nothing."""
    hits = [h for h in semantic_search(index, term, k, embedder) if h.score > 0.0]
    totals: dict = {}
    support: dict = {}
    for hit in hits:
        for eid in hit.linked_entities:
            totals[eid] = totals.get(eid, 0.0) + hit.score
            support.setdefault(eid, []).append(hit.target)
    ranked = sorted(totals, key=lambda eid: (-totals[eid], eid))
    return [(eid, tuple(support[eid])) for eid in ranked]


# ── index persistence ──


def index_to_dict(index: ChunkIndex) -> dict:
    return {
        "schema": INDEX_SCHEMA,
        "embedder_id": index.embedder_id,
        "dimension": index.dimension,
        "chunks": {
            chunk_id: {
                "section_id": chunk.section_id,
                "text": chunk.text,
                "token_count": chunk.token_count,
                "bill_ref": {
                    "bill_id": chunk.bill_ref.bill_id,
                    "document_id": chunk.bill_ref.document_id,
                    "page": chunk.bill_ref.page,
                },
                "linked_entities": sorted(chunk.linked_entities),
                "vector": list(vector.values),
            }
            for chunk_id, (chunk, vector) in sorted(index.chunks.items())
        },
    }


def save_index(index: ChunkIndex, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(index_to_dict(index), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_index(path, expected_embedder_id: str | None = None) -> ChunkIndex:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(str(exc), line=exc.lineno, offset=exc.colno) from exc
    if not isinstance(data, dict) or data.get("schema") != INDEX_SCHEMA:
        raise ParseError(f"not a {INDEX_SCHEMA} file")
    if expected_embedder_id is not None and data["embedder_id"] != expected_embedder_id:
        raise EmbedderMismatch(
            f"index was built with {data['embedder_id']!r}, expected "
            f"{expected_embedder_id!r}"
        )
    index = ChunkIndex(embedder_id=data["embedder_id"], dimension=int(data["dimension"]))
    for chunk_id, rec in data["chunks"].items():
        chunk = TextChunk(
            chunk_id=chunk_id,
            section_id=rec["section_id"],
            text=rec["text"],
            token_count=int(rec["token_count"]),
            bill_ref=BillRef(
                bill_id=rec["bill_ref"]["bill_id"],
                document_id=rec["bill_ref"]["document_id"],
                page=int(rec["bill_ref"]["page"]),
            ),
            linked_entities=frozenset(rec["linked_entities"]),
        )
        index.insert(chunk, EmbeddingVector.from_values(rec["vector"]))
    return index
