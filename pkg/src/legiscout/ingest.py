"""Parsing, validation, and normalization of dataset bundles.

A bundle is up to three files: the graph (`log-v1` JSON), an optional
bill-text corpus (pre-segmented JSON records, or one text blob split on
section headings), and an optional documents map resolving bill ids to
(document, page). Validation is total: every violation in a file is
reported, not just the first.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, ValidationError
from .graph import (
    ENTITY_TYPES,
    REL_TYPES,
    SCHEMA_VERSION,
    LogGraph,
    entity_from_dict,
    relationship_from_dict,
    validate_entity,
    validate_relationship,
)

# Fallback segmentation for corpus text blobs: "SEC. 1001." style headings.
SECTION_HEADING_RE = re.compile(r"^SEC\.\s*(\d+[A-Za-z]?)\.", re.MULTILINE)

_ENTITY_FIELDS = {"id", "name", "entity_type", "role_description", "tags", "bill_refs", "style_hint"}
# line_style is advisory presentation data (exports carry it); the loader
# accepts and discards it since rendering style derives from rel_type.
_RELATIONSHIP_FIELDS = {
    "id", "source", "target", "rel_type", "directed", "weight", "metadata", "line_style",
}
_BILL_REF_FIELDS = {"bill_id", "document_id", "page"}
_STYLE_FIELDS = {"shape", "size_class", "color_class", "line_style"}
_SECTION_FIELDS = {"section_id", "title", "text", "document_id", "page", "linked_entities"}
_TOP_FIELDS = {"meta", "entities", "relationships"}


@dataclass(frozen=True)
class DatasetBundle:
    graph_file: Path
    corpus_file: Path | None = None
    documents_file: Path | None = None

    def __post_init__(self):
        object.__setattr__(self, "graph_file", Path(self.graph_file))
        if self.corpus_file is not None:
            object.__setattr__(self, "corpus_file", Path(self.corpus_file))
        if self.documents_file is not None:
            object.__setattr__(self, "documents_file", Path(self.documents_file))


@dataclass(frozen=True)
class CorpusSection:
    section_id: str
    title: str
    text: str
    document_id: str
    page: int = 1
    linked_entities: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "linked_entities", frozenset(self.linked_entities))


@dataclass
class LoadResult:
    graph: LogGraph
    corpus: list = field(default_factory=list)
    documents: dict = field(default_factory=dict)  # bill_id -> {"document_id", "page"}
    warnings: list = field(default_factory=list)


def normalize_tags(raw) -> set[str]:
    """Lowercase, trim, dedupe; empty strings are dropped."""
    out = set()
    for tag in raw:
        cleaned = tag.strip().lower()
        if cleaned:
            out.add(cleaned)
    return out


def _read_json(path: Path):
    # OSError propagates: a missing or unreadable file is an environment
    # problem, not a content problem, and callers exit differently on it.
    text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", line=exc.lineno, offset=exc.colno) from exc


def _check_unknown_fields(raw: dict, known: set, where: str, strict: bool,
                          problems: list, warnings: list):
    for key in raw:
        if key not in known:
            if strict:
                problems.append(f"{where}: unknown field {key!r}")
            else:
                warnings.append(f"{where}: dropped unknown field {key!r}")


def load_graph_file(path: Path, strict: bool = True) -> tuple[LogGraph, list[str]]:
    """Parse and fully validate a `log-v1` graph file.

    Returns (graph, warnings). Raises ParseError on malformed JSON and
    ValidationError listing every invariant violation found.
    """
    data = _read_json(path)
    problems: list[str] = []
    warnings: list[str] = []

    if not isinstance(data, dict):
        raise ValidationError(["graph file: top level must be a JSON object"])
    _check_unknown_fields(data, _TOP_FIELDS, "graph file", strict, problems, warnings)

    meta = data.get("meta", {})
    if meta.get("schema") != SCHEMA_VERSION:
        problems.append(
            f"meta.schema must be {SCHEMA_VERSION!r}, got {meta.get('schema')!r}"
        )

    entities = {}
    for i, raw in enumerate(data.get("entities", [])):
        where = f"entities[{i}]"
        _check_unknown_fields(raw, _ENTITY_FIELDS, where, strict, problems, warnings)
        for j, ref in enumerate(raw.get("bill_refs", [])):
            _check_unknown_fields(ref, _BILL_REF_FIELDS, f"{where}.bill_refs[{j}]",
                                  strict, problems, warnings)
        if raw.get("style_hint") is not None:
            _check_unknown_fields(raw["style_hint"], _STYLE_FIELDS, f"{where}.style_hint",
                                  strict, problems, warnings)
        else:
            warnings.append(f"{where} ({raw.get('id')}): missing style hint")
        raw_tags = raw.get("tags", [])
        normalized = normalize_tags(raw_tags)
        if sorted(normalized) != sorted(raw_tags):
            warnings.append(f"{where} ({raw.get('id')}): tags normalized")
        raw = dict(raw, tags=sorted(normalized))
        e = entity_from_dict(raw)
        if e.id in entities:
            problems.append(f"duplicate entity id {e.id!r}")
            continue
        problems.extend(validate_entity(e))
        entities[e.id] = e

    relationships = {}
    seen_triples = set()
    for i, raw in enumerate(data.get("relationships", [])):
        where = f"relationships[{i}]"
        _check_unknown_fields(raw, _RELATIONSHIP_FIELDS, where, strict, problems, warnings)
        r = relationship_from_dict(raw)
        if r.id in relationships:
            problems.append(f"duplicate relationship id {r.id!r}")
            continue
        problems.extend(validate_relationship(r))
        for endpoint in (r.source, r.target):
            if endpoint not in entities:
                problems.append(f"relationship {r.id!r}: dangling endpoint {endpoint!r}")
        triple = (r.source, r.target, r.rel_type)
        if triple in seen_triples:
            problems.append(f"relationship {r.id!r}: duplicate {triple} triple")
        seen_triples.add(triple)
        if not r.directed:
            seen_triples.add((r.target, r.source, r.rel_type))
        relationships[r.id] = r

    if problems:
        raise ValidationError(problems)

    graph_meta = dict(meta)
    graph_meta["entity_types"] = ",".join(
        sorted({e.entity_type for e in entities.values()})
    )
    graph = LogGraph(entities=entities, relationships=relationships, graph_meta=graph_meta)
    return graph, warnings


def load_corpus_file(path: Path, strict: bool = True) -> tuple[list[CorpusSection], list[str]]:
    """Pre-segmented JSON records, or a text blob split on section headings."""
    if path.suffix.lower() == ".json":
        return _load_corpus_records(path, strict)
    return _segment_corpus_blob(path)


def _load_corpus_records(path: Path, strict: bool):
    data = _read_json(path)
    if not isinstance(data, list):
        raise ValidationError(["corpus file: top level must be a JSON list"])
    problems: list[str] = []
    warnings: list[str] = []
    sections = []
    seen_ids = set()
    for i, raw in enumerate(data):
        where = f"corpus[{i}]"
        _check_unknown_fields(raw, _SECTION_FIELDS, where, strict, problems, warnings)
        section_id = str(raw.get("section_id", ""))
        text = raw.get("text", "")
        page = int(raw.get("page", 1))
        if section_id in seen_ids:
            problems.append(f"duplicate section_id {section_id!r}")
            continue
        seen_ids.add(section_id)
        if not text:
            problems.append(f"{where} ({section_id}): empty text")
        if page < 1:
            problems.append(f"{where} ({section_id}): page must be >= 1")
        sections.append(
            CorpusSection(
                section_id=section_id,
                title=raw.get("title", ""),
                text=text,
                document_id=str(raw.get("document_id", "")),
                page=max(page, 1),
                linked_entities=frozenset(raw.get("linked_entities", [])),
            )
        )
    if problems:
        raise ValidationError(problems)
    return sections, warnings


def _segment_corpus_blob(path: Path):
    try:
        blob = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    warnings = [f"{path.name}: segmented text blob on section headings; pages default to 1"]
    matches = list(SECTION_HEADING_RE.finditer(blob))
    if not matches:
        raise ValidationError([f"{path.name}: no section headings found"])
    sections = []
    for k, m in enumerate(matches):
        end = matches[k + 1].start() if k + 1 < len(matches) else len(blob)
        body = blob[m.start():end].strip()
        first_line, _, rest = body.partition("\n")
        sections.append(
            CorpusSection(
                section_id=f"sec-{m.group(1).lower()}",
                title=first_line.strip(),
                text=rest.strip() or first_line.strip(),
                document_id=path.stem,
                page=1,
            )
        )
    return sections, warnings


def load_documents_file(path: Path) -> tuple[dict, list[str]]:
    """Map of bill_id -> {"document_id", "page"}; missing pages default to 1."""
    data = _read_json(path)
    if not isinstance(data, dict):
        raise ValidationError(["documents file: top level must be a JSON object"])
    warnings = []
    documents = {}
    for bill_id, raw in data.items():
        page = raw.get("page")
        if page is None:
            warnings.append(f"documents: bill {bill_id!r} missing page, defaulting to 1")
            page = 1
        documents[bill_id] = {"document_id": str(raw.get("document_id", "")), "page": int(page)}
    return documents, warnings


def load_dataset(bundle: DatasetBundle, strict: bool = True) -> LoadResult:
    """Load and validate a full bundle.

    Either returns a graph satisfying every invariant or raises; a
    partially valid graph is never returned.
    """
    graph, warnings = load_graph_file(bundle.graph_file, strict=strict)
    corpus: list[CorpusSection] = []
    documents: dict = {}
    if bundle.corpus_file is not None:
        corpus, corpus_warnings = load_corpus_file(bundle.corpus_file, strict=strict)
        warnings.extend(corpus_warnings)
        unknown = {
            eid
            for section in corpus
            for eid in section.linked_entities
            if eid not in graph.entities
        }
        if unknown:
            raise ValidationError(
                [f"corpus links unknown entity {eid!r}" for eid in sorted(unknown)]
            )
    if bundle.documents_file is not None:
        documents, doc_warnings = load_documents_file(bundle.documents_file)
        warnings.extend(doc_warnings)
    return LoadResult(graph=graph, corpus=corpus, documents=documents, warnings=warnings)
