"""Corpus ingestion: text cleaning, labeled similarity pairs, splits.

File formats: documents are JSON lines with ``id``, ``body`` and optional
``summary`` fields; pair files are UTF-8 tab-separated lines
``text_a<TAB>text_b<TAB>label``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_URL = re.compile(r"(?:https?://|www\.)\S+")
_DIGITS = re.compile(r"[0-9]")
_NON_ASCII = re.compile(r"[^\x00-\x7f]")
_PUNCT = re.compile(r"[^A-Za-z ]")
_SPACES = re.compile(r" +")


def clean_text(raw: str, lowercase: bool = False) -> str:
    """Reduce arbitrary text to ASCII letters separated by single spaces.

    Removal order: line breaks and tabs, URLs, digits, non-ASCII characters,
    punctuation, then whitespace collapse. The result may be empty.
    """
    text = raw.replace("\n", " ").replace("\r", " ").replace("\t", " ")
    text = _URL.sub(" ", text)
    text = _DIGITS.sub("", text)
    text = _NON_ASCII.sub("", text)
    text = _PUNCT.sub(" ", text)
    text = _SPACES.sub(" ", text).strip()
    return text.lower() if lowercase else text


@dataclass
class RawDocument:
    id: str
    body: str
    summary: str | None = None


@dataclass
class StsPair:
    text_a: str
    text_b: str
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
        if not self.text_a or not self.text_b:
            raise ValueError("pair texts must be non-empty")


def build_sts_pairs(docs: list[RawDocument], shuffle_ratio: float,
                    seed: int, lowercase: bool = False) -> list[StsPair]:
    """Pair each body with a summary; a seeded subset gets another document's
    summary (derangement, never its own) and label 0, the rest keep their own
    with label 1."""
    if not 0.0 <= shuffle_ratio <= 1.0:
        raise ValueError("shuffle_ratio must be within [0, 1]")
    for doc in docs:
        if not doc.summary:
            raise ValueError(f"document {doc.id!r} has no summary")
    n = len(docs)
    n_shuffled = int(shuffle_ratio * n)
    if n_shuffled > 0 and n < 2:
        raise ValueError("need at least 2 documents to shuffle summaries")

    rng = np.random.default_rng(seed)
    chosen = rng.permutation(n)[:n_shuffled]
    assignment = {int(i): int(i) for i in chosen}
    if n_shuffled >= 2:
        # Sattolo shuffle: a uniformly random cyclic permutation, hence no
        # fixed points.
        cycle = [int(i) for i in chosen]
        for i in range(len(cycle) - 1, 0, -1):
            j = int(rng.integers(0, i))
            cycle[i], cycle[j] = cycle[j], cycle[i]
        for src, dst in zip([int(i) for i in chosen], cycle):
            assignment[src] = dst
        for src, dst in assignment.items():
            if src == dst:
                raise AssertionError("derangement produced a fixed point")
    elif n_shuffled == 1:
        # A one-element subset has no derangement; borrow any other summary.
        src = int(chosen[0])
        others = [i for i in range(n) if i != src]
        assignment[src] = others[int(rng.integers(0, len(others)))]

    pairs = []
    for i, doc in enumerate(docs):
        if i in assignment:
            pairs.append(StsPair(
                clean_text(doc.body, lowercase),
                clean_text(docs[assignment[i]].summary, lowercase),
                label=0))
        else:
            pairs.append(StsPair(
                clean_text(doc.body, lowercase),
                clean_text(doc.summary, lowercase),
                label=1))
    return pairs


def split_items(items: list, ratios: tuple, seed: int) -> list[list]:
    """Seeded shuffle then partition at cumulative-rounded boundaries."""
    if not items:
        raise ValueError("cannot split an empty collection")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {ratios}")
    order = np.random.default_rng(seed).permutation(len(items))
    shuffled = [items[int(i)] for i in order]
    bounds = [round(sum(ratios[:k + 1]) * len(items))
              for k in range(len(ratios))]
    parts = []
    start = 0
    for stop in bounds:
        parts.append(shuffled[start:stop])
        start = stop
    return parts


@dataclass
class CorpusSplit:
    train: list[StsPair]
    validation: list[StsPair]
    test: list[StsPair]
    seed: int


def split(pairs: list[StsPair], ratios: tuple, seed: int) -> CorpusSplit:
    """Deterministic disjoint train/validation/test partition. Two-way ratios
    leave the test part empty."""
    if len(ratios) not in (2, 3):
        raise ValueError("expected 2 or 3 split ratios")
    parts = split_items(pairs, ratios, seed)
    if len(parts) == 2:
        parts.append([])
    return CorpusSplit(parts[0], parts[1], parts[2], seed)


def load_documents(path) -> list[RawDocument]:
    docs = []
    seen = set()
    for line_no, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        record = json.loads(line)
        doc = RawDocument(str(record["id"]), record["body"],
                          record.get("summary"))
        if not doc.body:
            raise ValueError(f"{path}:{line_no}: empty body")
        if doc.id in seen:
            raise ValueError(f"{path}:{line_no}: duplicate id {doc.id!r}")
        seen.add(doc.id)
        docs.append(doc)
    return docs


def save_documents(path, docs: list[RawDocument]) -> None:
    lines = [json.dumps({"id": d.id, "body": d.body, "summary": d.summary})
             for d in docs]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_pairs(path) -> list[StsPair]:
    pairs = []
    for line_no, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ValueError(f"{path}:{line_no}: expected 3 tab-separated "
                             f"fields, got {len(fields)}")
        pairs.append(StsPair(fields[0], fields[1], int(fields[2])))
    return pairs


def save_pairs(path, pairs: list[StsPair]) -> None:
    lines = [f"{p.text_a}\t{p.text_b}\t{p.label}" for p in pairs]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
