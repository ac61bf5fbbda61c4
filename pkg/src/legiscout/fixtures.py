"""Accessors for the datasets that ship inside the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .errors import ValidationError
from .ingest import DatasetBundle

_DATASETS = {"aca-case-study": "aca_case_study"}


def dataset_names() -> tuple:
    return tuple(sorted(_DATASETS))


def dataset_dir(name: str = "aca-case-study") -> Path:
    if name not in _DATASETS:
        raise ValidationError([f"unknown dataset {name!r}; have {sorted(_DATASETS)}"])
    root = resources.files("legiscout") / "data" / _DATASETS[name]
    return Path(str(root))


def bundle(name: str = "aca-case-study") -> DatasetBundle:
    root = dataset_dir(name)
    return DatasetBundle(
        graph_file=root / "graph.json",
        corpus_file=root / "corpus.json",
        documents_file=root / "documents.json",
    )


def documents_dir(name: str = "aca-case-study") -> Path:
    return dataset_dir(name) / "documents"
