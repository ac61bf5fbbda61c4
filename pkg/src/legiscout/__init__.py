"""Interactive explorer for legislative-organizational graphs: data model,
ingestion, force-directed layout, clustering, search, chart extraction,
and an HTTP API."""

from .errors import (
    AlreadyCollapsed,
    DanglingEndpoint,
    DuplicateId,
    EmbedderMismatch,
    EmptyQuery,
    EmptyText,
    InvalidGroupingFile,
    InvalidId,
    LegiscoutError,
    NonBinaryInput,
    NotCollapsed,
    ParseError,
    RemoteUnavailable,
    UnattachedSegment,
    UnknownBill,
    UnknownCluster,
    UnknownEntity,
    UnknownView,
    ValidationError,
)
from .graph import (
    ENTITY_TYPES,
    REL_TYPES,
    BillRef,
    Entity,
    FilterSpec,
    LogGraph,
    Relationship,
    StyleHint,
)
from .ingest import CorpusSection, DatasetBundle, LoadResult, load_dataset, normalize_tags
from .layout import (
    LabelBox,
    LayoutParams,
    LayoutState,
    init_layout,
    resolve_label_overlaps,
    run_to_convergence,
    step,
)
from .cluster import ClusterNode, ClusterTree, ViewGraph, build_cluster_tree, collapse, expand
from .search import (
    ChunkIndex,
    HashNgramEmbedder,
    RemoteEmbedder,
    SearchHit,
    TextChunk,
    build_index,
    chunk_corpus,
    keyword_search,
    link_terms_to_graph,
    semantic_search,
)
from .extract import (
    DetectedBox,
    DetectedSegment,
    ExtractionResult,
    RasterImage,
    binarize,
    detect_boxes,
    detect_segments,
    extract_chart,
    infer_graph,
    morphological_close,
)

__version__ = "0.1.0"
