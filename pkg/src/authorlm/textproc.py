"""Corpus ingestion and preprocessing.

Raw one-sentence-per-line author files are tokenized, optionally stemmed,
frequency-pruned into a per-author vocabulary, encoded to integer ids with
sentence-boundary padding, and split into train/validation/test parts.
Everything downstream (both language model families) consumes the encoded
form produced here.
"""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import porter
from .prng import stream

SENTENCE_START = "<s>"
SENTENCE_END = "</s>"
UNKNOWN = "<unk>"
START_ID, END_ID, UNK_ID = 0, 1, 2
_RESERVED = (SENTENCE_START, SENTENCE_END, UNKNOWN)

_VOCAB_MAGIC = "authorlm-vocab 1"
_CORPUS_MAGIC = "authorlm-corpus 1"


@dataclass(frozen=True)
class RawCorpus:
    """One author's corpus: an id label plus raw sentence lines."""

    author_id: str
    sentences: tuple[str, ...]

    def __post_init__(self):
        if not self.sentences:
            raise ValueError(f"corpus {self.author_id!r} has no sentences")
        for i, s in enumerate(self.sentences):
            if not s.strip():
                raise ValueError(
                    f"corpus {self.author_id!r}: sentence {i} is empty"
                )


def read_corpus_file(path: str | Path) -> RawCorpus:
    """Read a UTF-8 one-sentence-per-line file; the file stem is the author id."""
    path = Path(path)
    lines = [
        line.strip()
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    return RawCorpus(author_id=path.stem, sentences=tuple(lines))


def tokenize(line: str) -> list[str]:
    """Lowercase, split on whitespace, strip surrounding punctuation.

    Digits are kept; tokens that are empty after stripping are dropped.
    """
    out = []
    for tok in line.lower().split():
        tok = tok.strip(string.punctuation)
        if tok:
            out.append(tok)
    return out


def porter_stem(word: str) -> str:
    """Porter stem of a single lowercase word (non a-z tokens unchanged)."""
    return porter.stem(word)


def preprocess_sentences(lines: Iterable[str], stemming: bool = True) -> list[list[str]]:
    """Tokenize (and optionally stem) raw sentence lines.

    Keeps one output list per input line, even when no tokens survive, so
    sentence indices stay aligned with the raw corpus.
    """
    sentences = []
    for line in lines:
        toks = tokenize(line)
        if stemming:
            toks = [porter.stem(t) for t in toks]
        sentences.append(toks)
    return sentences


@dataclass(frozen=True)
class Vocabulary:
    """Bidirectional word/id map with reserved boundary and unknown tokens.

    Ids are dense: 0 = sentence start, 1 = sentence end, 2 = unknown, then
    corpus words ordered by descending count (ties broken lexicographically).
    ``counts`` holds the build-time occurrence count per id (0 for the
    reserved entries).
    """

    words: tuple[str, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if self.words[:3] != _RESERVED:
            raise ValueError("reserved tokens missing or out of order")
        if len(self.words) != len(set(self.words)):
            raise ValueError("duplicate words in vocabulary")
        if len(self.counts) != len(self.words):
            raise ValueError("counts/words length mismatch")
        object.__setattr__(
            self, "_index", {w: i for i, w in enumerate(self.words)}
        )

    @property
    def size(self) -> int:
        return len(self.words)

    def index_of(self, word: str) -> int:
        """Id of a word, or the unknown id if it was pruned/unseen."""
        return self._index.get(word, UNK_ID)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.words[i] for i in ids]


def build_vocabulary(
    token_sentences: Sequence[Sequence[str]], prune_threshold: float = 0.0
) -> Vocabulary:
    """Count tokens and keep those with relative frequency >= the threshold.

    At the usual corpus scale (~1e5 tokens) a threshold of 1e-5 prunes
    exactly the singletons; on small corpora the cutoff count can drop
    below 1, in which case nothing is pruned.
    """
    if not 0.0 <= prune_threshold <= 1.0:
        raise ValueError(f"prune_threshold must be in [0, 1], got {prune_threshold}")
    counts = Counter()
    for sent in token_sentences:
        counts.update(sent)
    total = sum(counts.values())
    if total == 0:
        raise ValueError("cannot build a vocabulary from zero tokens")
    kept = [
        (word, count)
        for word, count in counts.items()
        if count / total >= prune_threshold
    ]
    kept.sort(key=lambda wc: (-wc[1], wc[0]))
    words = _RESERVED + tuple(w for w, _ in kept)
    vocab_counts = (0, 0, 0) + tuple(c for _, c in kept)
    return Vocabulary(words=words, counts=vocab_counts)


@dataclass(frozen=True)
class ProcessedCorpus:
    """Encoded sentences plus the pipeline parameters that produced them.

    Each sentence is a tuple of ids: order-1 start paddings, the content
    ids (unknowns already substituted), and one end id.
    """

    vocabulary: Vocabulary
    sentences: tuple[tuple[int, ...], ...]
    order: int
    stemming: bool
    prune_threshold: float

    def __post_init__(self):
        pad = (START_ID,) * (self.order - 1)
        for s in self.sentences:
            if s[: self.order - 1] != pad or s[-1] != END_ID:
                raise ValueError("sentence not padded for the stated order")
            if max(s) >= self.vocabulary.size:
                raise ValueError("sentence id outside the vocabulary")

    def __len__(self) -> int:
        return len(self.sentences)

    def content_tokens(self, index: int) -> list[str]:
        """Decoded sentence without the boundary padding."""
        s = self.sentences[index]
        return self.vocabulary.decode(s[self.order - 1 : -1])


def encode_sentence(tokens: Sequence[str], vocab: Vocabulary, order: int) -> tuple[int, ...]:
    if order < 2:
        raise ValueError("order must be >= 2")
    ids = tuple(vocab.index_of(t) for t in tokens)
    return (START_ID,) * (order - 1) + ids + (END_ID,)


def encode(
    token_sentences: Sequence[Sequence[str]],
    vocab: Vocabulary,
    order: int,
    stemming: bool = True,
    prune_threshold: float = 0.0,
) -> ProcessedCorpus:
    """Encode preprocessed token sentences against a vocabulary."""
    sentences = tuple(encode_sentence(s, vocab, order) for s in token_sentences)
    return ProcessedCorpus(
        vocabulary=vocab,
        sentences=sentences,
        order=order,
        stemming=stemming,
        prune_threshold=prune_threshold,
    )


@dataclass(frozen=True)
class SplitAssignment:
    """Disjoint train/validation/test sentence indices for one seed."""

    seed: int
    ratios: tuple[Fraction, Fraction, Fraction]
    train: tuple[int, ...]
    validation: tuple[int, ...]
    test: tuple[int, ...]

    def part(self, name: str) -> tuple[int, ...]:
        return {"train": self.train, "validation": self.validation, "test": self.test}[name]


def _as_ratio(r) -> Fraction:
    if isinstance(r, Fraction):
        return r
    return Fraction(r).limit_denominator(10**6)


def split(
    n_sentences: int, seed: int, ratios: Sequence = (Fraction(8, 10), Fraction(1, 10), Fraction(1, 10))
) -> SplitAssignment:
    """Partition sentence indices into train/validation/test.

    Validation and test sizes are floored; the remainder goes to train.
    The permutation is drawn from the seeded PCG64 stream, so one seed
    always yields the same partition.
    """
    if n_sentences < 10:
        raise ValueError(f"need at least 10 sentences to split, got {n_sentences}")
    fracs = tuple(_as_ratio(r) for r in ratios)
    if len(fracs) != 3 or sum(fracs) != 1:
        raise ValueError(f"ratios must be three rationals summing to 1, got {ratios}")
    n_valid = int(n_sentences * fracs[1])
    n_test = int(n_sentences * fracs[2])
    n_train = n_sentences - n_valid - n_test
    perm = stream(seed).permutation(n_sentences)
    return SplitAssignment(
        seed=seed,
        ratios=fracs,
        train=tuple(sorted(int(i) for i in perm[:n_train])),
        validation=tuple(sorted(int(i) for i in perm[n_train : n_train + n_valid])),
        test=tuple(sorted(int(i) for i in perm[n_train + n_valid :])),
    )


class Samples(NamedTuple):
    """A batch of next-word prediction samples.

    ``contexts`` is (M, order-1) int64, ``targets`` is (M,) int64; row i
    pairs a context window with the word that follows it.
    """

    contexts: np.ndarray
    targets: np.ndarray

    def __len__(self) -> int:
        return len(self.targets)


def samples_from_sentences(sentences: Iterable[Sequence[int]], order: int) -> Samples:
    """Sliding-window samples over padded sentences.

    Every non-padding position becomes a target, the sentence end included,
    so a sentence of T content tokens yields T + 1 samples.
    """
    contexts, targets = [], []
    for sent in sentences:
        for pos in range(order - 1, len(sent)):
            contexts.append(tuple(sent[pos - order + 1 : pos]))
            targets.append(sent[pos])
    if not targets:
        return Samples(
            contexts=np.empty((0, order - 1), dtype=np.int64),
            targets=np.empty(0, dtype=np.int64),
        )
    return Samples(
        contexts=np.asarray(contexts, dtype=np.int64),
        targets=np.asarray(targets, dtype=np.int64),
    )


def extract_samples(
    processed: ProcessedCorpus, indices: Sequence[int] | None = None
) -> Samples:
    """Samples for the given sentence indices (all, if None)."""
    if indices is None:
        indices = range(len(processed.sentences))
    return samples_from_sentences(
        (processed.sentences[i] for i in indices), processed.order
    )


def top_k_coverage(processed: ProcessedCorpus, ks: Sequence[int]) -> dict[int, float]:
    """Share of encoded content tokens covered by the k most frequent ids.

    Boundary paddings are excluded; the unknown token competes like any
    other vocabulary entry, so k = vocabulary size always gives 1.0.
    """
    counts = Counter()
    for sent in processed.sentences:
        counts.update(sent[processed.order - 1 : -1])
    total = sum(counts.values())
    ranked = sorted(counts.values(), reverse=True)
    out = {}
    for k in ks:
        out[k] = sum(ranked[:k]) / total if total else 0.0
    return out


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Write the word<TAB>id<TAB>count table with a small header."""
    lines = [f"# {_VOCAB_MAGIC}", f"# size {vocab.size}"]
    for i, (w, c) in enumerate(zip(vocab.words, vocab.counts)):
        lines.append(f"{w}\t{i}\t{c}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocabulary(path: str | Path) -> Vocabulary:
    words, counts = [], []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ValueError(f"{path}:{lineno}: expected word<TAB>id<TAB>count")
        word, idx, count = fields
        if int(idx) != len(words):
            raise ValueError(f"{path}:{lineno}: ids must be dense and in order")
        words.append(word)
        counts.append(int(count))
    return Vocabulary(words=tuple(words), counts=tuple(counts))


def save_processed(processed: ProcessedCorpus, path: str | Path) -> None:
    """Write encoded sentences (one per line, space-separated ids)."""
    lines = [
        f"# {_CORPUS_MAGIC}",
        f"# order {processed.order}",
        f"# stemming {int(processed.stemming)}",
        f"# prune_threshold {processed.prune_threshold!r}",
    ]
    for sent in processed.sentences:
        lines.append(" ".join(str(i) for i in sent))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_processed(path: str | Path, vocab: Vocabulary) -> ProcessedCorpus:
    order = stemming = prune_threshold = None
    sentences = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line:
            continue
        if line.startswith("#"):
            fields = line[1:].split()
            if fields[:1] == ["order"]:
                order = int(fields[1])
            elif fields[:1] == ["stemming"]:
                stemming = bool(int(fields[1]))
            elif fields[:1] == ["prune_threshold"]:
                prune_threshold = float(fields[1])
            continue
        try:
            sentences.append(tuple(int(t) for t in line.split()))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: malformed sentence line") from exc
    if order is None or stemming is None or prune_threshold is None:
        raise ValueError(f"{path}: missing pipeline-parameter header")
    return ProcessedCorpus(
        vocabulary=vocab,
        sentences=tuple(sentences),
        order=order,
        stemming=stemming,
        prune_threshold=prune_threshold,
    )
