"""Subword vocabulary training and fixed-length integer tokenization.

The vocabulary is built by frequency-greedy pair merging over characters,
with continuation subwords rendered with a ``##`` marker ("walking" ->
"walk" + "##ing" once the merges exist). Ids form a bijection onto
1..|V|; id 0 is reserved for padding and one ``<unk>`` entry (always the
last id) absorbs unsegmentable words.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PAD_ID = 0
UNKNOWN = "<unk>"
CONTINUATION = "##"


@dataclass
class Vocabulary:
    """Bijective subword <-> id lookup. Ids run 1..size; 0 is padding."""

    entries: dict[str, int]
    inverse: dict[int, str] = field(init=False)

    def __post_init__(self):
        ids = sorted(self.entries.values())
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError("vocabulary ids must be a bijection onto 1..|V|")
        self.inverse = {i: s for s, i in self.entries.items()}

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def unknown_id(self) -> int:
        return self.entries[UNKNOWN]

    def __contains__(self, subword: str) -> bool:
        return subword in self.entries


def _word_symbols(word: str) -> list[str]:
    return [word[0]] + [CONTINUATION + c for c in word[1:]]


def _merge_symbol(left: str, right: str) -> str:
    return left + right[len(CONTINUATION):]


def _pair_priority(item):
    """Merge order: highest count, then shortest merged unit, then lexicographic.

    Preferring short units on ties lets common suffixes ("##in" -> "##ing")
    crystallize before whole words swallow them.
    """
    (a, b), count = item
    merged = _merge_symbol(a, b)
    core = merged[len(CONTINUATION):] if merged.startswith(CONTINUATION) else merged
    return (-count, len(core), (a, b))


def train_vocab(corpus: list[str], target_size: int) -> Vocabulary:
    """Greedy pair-merge vocabulary of at most `target_size` subwords."""
    words = Counter()
    for text in corpus:
        words.update(text.split())
    if not words:
        raise ValueError("cannot train a vocabulary on an empty corpus")

    # Stable word order: by descending count, then lexicographic.
    word_list = sorted(words.items(), key=lambda kv: (-kv[1], kv[0]))
    symbols = {w: _word_symbols(w) for w, _ in word_list}

    alphabet = sorted({s for parts in symbols.values() for s in parts})
    specials = [UNKNOWN]
    if target_size < len(alphabet) + len(specials):
        raise ValueError(
            f"target_size {target_size} below alphabet+specials size "
            f"{len(alphabet) + len(specials)}")

    ordered = list(alphabet)
    budget = target_size - len(specials)
    while len(ordered) < budget:
        pairs = Counter()
        for word, count in word_list:
            parts = symbols[word]
            for a, b in zip(parts, parts[1:]):
                pairs[(a, b)] += count
        if not pairs:
            break
        best = min(pairs.items(), key=_pair_priority)[0]
        merged = _merge_symbol(*best)
        ordered.append(merged)
        for word in symbols:
            parts = symbols[word]
            rebuilt = []
            i = 0
            while i < len(parts):
                if (i + 1 < len(parts)
                        and (parts[i], parts[i + 1]) == best):
                    rebuilt.append(merged)
                    i += 2
                else:
                    rebuilt.append(parts[i])
                    i += 1
            symbols[word] = rebuilt

    ordered.extend(specials)
    return Vocabulary({s: i for i, s in enumerate(ordered, start=1)})


@dataclass
class TokenSequence:
    """Padded integer sequence of fixed length; padding is a zero suffix."""

    ids: np.ndarray
    true_length: int

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        if self.ids.ndim != 1:
            raise ValueError("token ids must be one-dimensional")
        n = self.true_length
        if not 0 < n <= self.ids.size:
            raise ValueError(f"true_length {n} outside (0, {self.ids.size}]")
        if (self.ids[:n] == PAD_ID).any() or (self.ids[n:] != PAD_ID).any():
            raise ValueError("padding must be exactly the suffix beyond "
                             "true_length")

    @property
    def length(self) -> int:
        return int(self.ids.size)

    def mask(self) -> np.ndarray:
        return np.arange(self.ids.size) < self.true_length


def _segment_word(word: str, vocab: Vocabulary) -> list[int]:
    """Greedy longest-match segmentation; the whole word falls back to <unk>."""
    ids = []
    pos = 0
    while pos < len(word):
        prefix = "" if pos == 0 else CONTINUATION
        match = None
        for end in range(len(word), pos, -1):
            candidate = prefix + word[pos:end]
            if candidate in vocab:
                match = (candidate, end)
                break
        if match is None:
            return [vocab.unknown_id]
        ids.append(vocab.entries[match[0]])
        pos = match[1]
    return ids


def tokenize(text: str, vocab: Vocabulary, length: int) -> TokenSequence:
    """Segment cleaned text, truncate to `length`, right-pad with zeros."""
    if length < 1:
        raise ValueError("sequence length must be >= 1")
    words = text.split()
    if not words:
        raise ValueError("cannot tokenize empty text")
    ids: list[int] = []
    for word in words:
        ids.extend(_segment_word(word, vocab))
    ids = ids[:length]
    padded = np.zeros(length, dtype=np.int64)
    padded[:len(ids)] = ids
    return TokenSequence(padded, true_length=len(ids))


def detokenize(sequence: TokenSequence, vocab: Vocabulary) -> str:
    """Inverse lookup: strip padding and continuation markers, rejoin words."""
    words: list[str] = []
    for raw in sequence.ids[:sequence.true_length]:
        subword = vocab.inverse[int(raw)]
        if subword.startswith(CONTINUATION) and words:
            words[-1] += subword[len(CONTINUATION):]
        else:
            words.append(subword)
    return " ".join(words)


def save_vocab(path, vocab: Vocabulary) -> None:
    lines = [f"{s}\t{i}" for s, i in
             sorted(vocab.entries.items(), key=lambda kv: kv[1])]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocab(path) -> Vocabulary:
    entries: dict[str, int] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        subword, _, raw_id = line.rpartition("\t")
        entries[subword] = int(raw_id)
    return Vocabulary(entries)
