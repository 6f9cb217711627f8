"""Interpolated Kneser-Ney n-gram language model.

One absolute discount per order.  The top order discounts raw window
counts; every lower order works on continuation counts (how many distinct
words can precede a sequence), and the recursion bottoms out in the
uniform distribution over the vocabulary, which keeps every probability
strictly positive and every context's distribution summing to one.

Models are stored as plain log10 probability and back-off tables, which is
also exactly what the text serialization contains, so a round-trip through
a file reproduces query results bit for bit.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .textproc import END_ID, START_ID

_KN_MAGIC = "authorlm-kn 1"
_NO_PROB = "na"  # entry kept only for its back-off weight
_LN10 = math.log(10.0)

Gram = tuple[int, ...]


class KnParseError(ValueError):
    """Malformed model file; carries the offending line number."""

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


def _walk_log10(probs, bows, unigram_log10, context: Gram, target: int) -> float:
    """Back-off walk from the longest available context suffix.

    A stored sequence ends the walk; a stored context contributes its
    back-off weight; an unknown context falls through with weight 1.
    """
    acc = 0.0
    k = len(context)
    while k > 0:
        sub = context[len(context) - k :]
        hit = probs[k + 1].get(sub + (target,))
        if hit is not None:
            return acc + hit
        bow = bows[k].get(sub)
        if bow is not None:
            acc += bow
        k -= 1
    return acc + float(unigram_log10[target])


@dataclass(frozen=True)
class CountTables:
    """Raw window counts for orders 1..N plus derived continuation counts.

    ``raw[k]`` maps length-k id tuples to their occurrence count over all
    sliding windows.  ``continuation[k]`` (k < N) maps a length-k tuple to
    the number of distinct ids that appear immediately before it.
    """

    order: int
    raw: tuple[Mapping[Gram, int], ...]
    continuation: tuple[Mapping[Gram, int], ...]

    def raw_counts(self, k: int) -> Mapping[Gram, int]:
        return self.raw[k - 1]

    def continuation_counts(self, k: int) -> Mapping[Gram, int]:
        return self.continuation[k - 1]

    def numerator_table(self, k: int) -> Mapping[Gram, int]:
        """Counts discounted at order k: raw at the top, continuation below."""
        return self.raw_counts(k) if k == self.order else self.continuation_counts(k)


def count(sentences: Iterable[Gram], order: int) -> CountTables:
    """Sliding-window counts over padded sentences.

    Sentences must carry order-1 start paddings and one end marker, the
    form the text pipeline produces; order-N windows then line up one to
    one with next-word prediction events.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    raw = [Counter() for _ in range(order)]
    pad = (START_ID,) * (order - 1)
    for sent in sentences:
        sent = tuple(sent)
        if sent[: order - 1] != pad or sent[-1] != END_ID:
            raise ValueError("sentence is not padded for this order")
        for k in range(1, order + 1):
            table = raw[k - 1]
            for i in range(len(sent) - k + 1):
                table[sent[i : i + k]] += 1
    continuation = []
    for k in range(1, order):
        preceders = defaultdict(set)
        for gram in raw[k]:  # length k+1
            preceders[gram[1:]].add(gram[0])
        continuation.append({g: len(v) for g, v in preceders.items()})
    return CountTables(
        order=order,
        raw=tuple(dict(t) for t in raw),
        continuation=tuple(continuation),
    )


def estimate_discounts(tables: CountTables) -> tuple[float, ...]:
    """Absolute discount per order: n1 / (n1 + 2*n2) over the counts that
    the order actually discounts, clamped to [0.05, 0.95] (0.5 when the
    count-of-counts are empty)."""
    discounts = []
    for k in range(1, tables.order + 1):
        values = Counter(tables.numerator_table(k).values())
        n1, n2 = values[1], values[2]
        if n1 + 2 * n2 == 0:
            d = 0.5
        else:
            d = n1 / (n1 + 2 * n2)
        discounts.append(min(0.95, max(0.05, d)))
    return tuple(discounts)


@dataclass(frozen=True)
class KnModel:
    """Queryable model: dense unigram log10 probabilities, sparse log10
    probabilities per higher order, and log10 back-off weights per context.
    ``tables`` keeps the counts it was built from (dropped on deserialize).
    """

    order: int
    vocab_size: int
    discounts: tuple[float, ...]
    unigram_log10: np.ndarray
    probs: Mapping[int, Mapping[Gram, float]]  # order k (2..N) -> gram -> log10 p
    bows: Mapping[int, Mapping[Gram, float]]   # context len (1..N-1) -> log10 weight
    tables: CountTables | None = None

    @property
    def vocabulary_size(self) -> int:
        return self.vocab_size

    def log10_prob(self, context: Sequence[int], target: int) -> float:
        if not 0 <= target < self.vocab_size:
            raise ValueError(f"target id {target} out of range for V={self.vocab_size}")
        ctx = tuple(int(c) for c in context)
        for c in ctx:
            if not 0 <= c < self.vocab_size:
                raise ValueError(f"context id {c} out of range for V={self.vocab_size}")
        if len(ctx) > self.order - 1:
            ctx = ctx[len(ctx) - (self.order - 1) :]
        return _walk_log10(self.probs, self.bows, self.unigram_log10, ctx, target)

    def log_prob(self, context: Sequence[int], target: int) -> float:
        """Natural log probability of the target after the context."""
        return self.log10_prob(context, target) * _LN10

    def log_probs(self, contexts: np.ndarray, targets: np.ndarray) -> np.ndarray:
        return np.array(
            [self.log_prob(c, int(t)) for c, t in zip(contexts, targets)]
        )

    def distribution(self, context: Sequence[int]) -> np.ndarray:
        """Probabilities of every vocabulary id after the context."""
        return np.array(
            [10.0 ** self.log10_prob(context, w) for w in range(self.vocab_size)]
        )


def build_model(
    tables: CountTables,
    vocab_size: int,
    discounts: Sequence[float] | None = None,
) -> KnModel:
    """Turn count tables into the interpolated probability representation.

    Working from the unigrams up, each order's seen sequences get
    max(count - D, 0) / total plus the context's back-off weight times the
    lower-order probability; the weight is D * distinct / total, which is
    exactly the mass removed by discounting.
    """
    if vocab_size < 1:
        raise ValueError("vocab_size must be >= 1")
    order = tables.order
    if discounts is None:
        discounts = estimate_discounts(tables)
    discounts = tuple(float(d) for d in discounts)
    if len(discounts) != order:
        raise ValueError(f"need {order} discounts, got {len(discounts)}")
    if any(not 0 <= d < 1 for d in discounts):
        raise ValueError("discounts must lie in [0, 1)")

    uniform = 1.0 / vocab_size
    probs: dict[int, dict[Gram, float]] = {k: {} for k in range(2, order + 1)}
    bows: dict[int, dict[Gram, float]] = {k: {} for k in range(1, order)}

    # unigram level: interpolate with the uniform base for every id
    unigram = np.full(vocab_size, uniform)
    table1 = tables.numerator_table(1)
    total1 = sum(table1.values())
    if total1 > 0:
        d1 = discounts[0]
        lam1 = d1 * sum(1 for c in table1.values() if c > 0) / total1
        unigram = np.full(vocab_size, lam1 * uniform)
        for (w,), c in table1.items():
            unigram[w] += max(c - d1, 0.0) / total1
    unigram_log10 = np.log10(unigram)

    for k in range(2, order + 1):
        table = tables.numerator_table(k)
        ctx_total: dict[Gram, int] = defaultdict(int)
        ctx_distinct: dict[Gram, int] = defaultdict(int)
        for gram, c in table.items():
            ctx_total[gram[:-1]] += c
            ctx_distinct[gram[:-1]] += 1
        dk = discounts[k - 1]
        for ctx, total in ctx_total.items():
            bows[k - 1][ctx] = math.log10(dk * ctx_distinct[ctx] / total)
        for gram, c in table.items():
            ctx = gram[:-1]
            lam = dk * ctx_distinct[ctx] / ctx_total[ctx]
            lower = 10.0 ** _walk_log10(probs, bows, unigram_log10, ctx[1:], gram[-1])
            p = max(c - dk, 0.0) / ctx_total[ctx] + lam * lower
            probs[k][gram] = math.log10(p)

    return KnModel(
        order=order,
        vocab_size=vocab_size,
        discounts=discounts,
        unigram_log10=unigram_log10,
        probs=probs,
        bows=bows,
        tables=tables,
    )


def train_model(
    sentences: Iterable[Gram], order: int, vocab_size: int
) -> KnModel:
    """Count, estimate discounts, and build in one call."""
    tables = count(sentences, order)
    return build_model(tables, vocab_size)


def kn_log_prob(model: KnModel, context: Sequence[int], target: int) -> float:
    return model.log_prob(context, target)


def save_model(model: KnModel, path: str | Path) -> None:
    """Write the ARPA-style text form.

    Layout: comment headers (format version, order, vocab size, discounts),
    a \\data\\ section with per-order entry counts, then one section per
    order holding ``log10prob<TAB>ids<TAB>log10bow`` lines.  The bow field
    appears only on entries that are back-off contexts; entries kept only
    for their bow carry ``na`` in the probability field.  Floats use
    ``repr`` so parsing restores them exactly.
    """
    lines = [
        f"# {_KN_MAGIC}",
        f"# order {model.order}",
        f"# vocab {model.vocab_size}",
        "# discounts " + " ".join(repr(d) for d in model.discounts),
    ]
    sections: dict[int, dict[Gram, list[str | None]]] = {}
    for k in range(1, model.order + 1):
        entries: dict[Gram, list[str | None]] = {}
        if k == 1:
            for w in range(model.vocab_size):
                entries[(w,)] = [repr(float(model.unigram_log10[w])), None]
        else:
            for gram, lp in model.probs[k].items():
                entries[gram] = [repr(lp), None]
        if k < model.order:
            for ctx, bow in model.bows[k].items():
                entries.setdefault(ctx, [_NO_PROB, None])[1] = repr(bow)
        sections[k] = entries

    lines.append("\\data\\")
    for k in range(1, model.order + 1):
        lines.append(f"ngram {k}={len(sections[k])}")
    for k in range(1, model.order + 1):
        lines.append(f"\\{k}-grams:")
        for gram in sorted(sections[k]):
            lp, bow = sections[k][gram]
            fields = [lp, " ".join(str(i) for i in gram)]
            if bow is not None:
                fields.append(bow)
            lines.append("\t".join(fields))
    lines.append("\\end\\")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> KnModel:
    """Parse a model file written by save_model."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    order = vocab_size = None
    discounts: tuple[float, ...] = ()
    expected: dict[int, int] = {}
    unigram_log10 = None
    probs: dict[int, dict[Gram, float]] = {}
    bows: dict[int, dict[Gram, float]] = {}

    lineno = 0
    seen_magic = seen_end = False
    section = None
    section_rows = 0
    for lineno, line in enumerate(text, 1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        if line.startswith("#"):
            fields = line[1:].split()
            if not seen_magic:
                if line[1:].strip() != _KN_MAGIC:
                    raise KnParseError(path, lineno, f"expected header {_KN_MAGIC!r}")
                seen_magic = True
            elif fields[:1] == ["order"]:
                order = int(fields[1])
            elif fields[:1] == ["vocab"]:
                vocab_size = int(fields[1])
            elif fields[:1] == ["discounts"]:
                discounts = tuple(float(x) for x in fields[1:])
            continue
        if not seen_magic:
            raise KnParseError(path, lineno, "missing format header")
        if line == "\\data\\":
            if order is None or vocab_size is None:
                raise KnParseError(path, lineno, "order/vocab headers must precede \\data\\")
            unigram_log10 = np.full(vocab_size, np.nan)
            probs = {k: {} for k in range(2, order + 1)}
            bows = {k: {} for k in range(1, order)}
            continue
        if line.startswith("ngram "):
            try:
                k, n = line[len("ngram ") :].split("=")
                expected[int(k)] = int(n)
            except ValueError:
                raise KnParseError(path, lineno, f"bad ngram count line {line!r}")
            continue
        if line.startswith("\\") and line.endswith("-grams:"):
            k = int(line[1:].split("-")[0])
            if order is None or not 1 <= k <= order:
                raise KnParseError(path, lineno, f"unexpected section {line!r}")
            if section is not None and section_rows != expected.get(section, 0):
                raise KnParseError(
                    path, lineno,
                    f"section {section} has {section_rows} entries, header said "
                    f"{expected.get(section, 0)}",
                )
            section, section_rows = k, 0
            continue
        if line == "\\end\\":
            if section is not None and section_rows != expected.get(section, 0):
                raise KnParseError(
                    path, lineno,
                    f"section {section} has {section_rows} entries, header said "
                    f"{expected.get(section, 0)}",
                )
            seen_end = True
            section = None
            continue
        if section is None:
            raise KnParseError(path, lineno, f"unexpected line {line!r}")
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise KnParseError(path, lineno, "expected 2 or 3 tab-separated fields")
        try:
            gram = tuple(int(t) for t in fields[1].split())
        except ValueError:
            raise KnParseError(path, lineno, f"bad id list {fields[1]!r}")
        if len(gram) != section:
            raise KnParseError(path, lineno, f"id list length != section order {section}")
        if any(not 0 <= g < vocab_size for g in gram):
            raise KnParseError(path, lineno, "word id out of range")
        if fields[0] != _NO_PROB:
            try:
                lp = float(fields[0])
            except ValueError:
                raise KnParseError(path, lineno, f"bad probability {fields[0]!r}")
            if section == 1:
                unigram_log10[gram[0]] = lp
            else:
                probs[section][gram] = lp
        elif section == 1:
            raise KnParseError(path, lineno, "unigram entries need a probability")
        if len(fields) == 3:
            if section >= order:
                raise KnParseError(path, lineno, "top-order entries cannot carry a bow")
            try:
                bows[section][gram] = float(fields[2])
            except ValueError:
                raise KnParseError(path, lineno, f"bad back-off weight {fields[2]!r}")
        section_rows += 1

    if not seen_end:
        raise KnParseError(path, lineno or 1, "file ends before \\end\\")
    if unigram_log10 is None:
        raise KnParseError(path, lineno or 1, "missing \\data\\ section")
    if np.isnan(unigram_log10).any():
        missing = int(np.isnan(unigram_log10).argmax())
        raise KnParseError(path, lineno, f"unigram section misses id {missing}")
    if len(discounts) != order:
        discounts = tuple(0.0 for _ in range(order))
    return KnModel(
        order=order,
        vocab_size=vocab_size,
        discounts=discounts,
        unigram_log10=unigram_log10,
        probs=probs,
        bows=bows,
        tables=None,
    )
