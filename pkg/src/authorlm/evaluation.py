"""Perplexity measurement, closed-set attribution, and experiment sweeps.

Perplexity is the exponential of the mean negative log likelihood over
every predicted position (sentence ends included, paddings never targets).
Attribution scores a pooled set of test sentences under every candidate
author's model, each with its own vocabulary, and predicts the author
whose model assigns the lowest perplexity; ties break toward the lowest
author index so repeated runs agree.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from .prng import stream
from .textproc import Samples, Vocabulary, encode_sentence, samples_from_sentences

_CHUNK = 8192


class LanguageModel(Protocol):
    """What evaluation needs from a model: its shape and log probabilities."""

    @property
    def order(self) -> int: ...

    @property
    def vocab_size(self) -> int: ...

    def log_prob(self, context: Sequence[int], target: int) -> float: ...

    def log_probs(self, contexts: np.ndarray, targets: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class PerplexityReport:
    token_count: int
    total_log_prob: float

    @property
    def perplexity(self) -> float:
        return math.exp(-self.total_log_prob / self.token_count)


def perplexity_from_samples(model: LanguageModel, samples: Samples) -> PerplexityReport:
    """Perplexity over prediction samples, summed in log space."""
    n = len(samples)
    if n == 0:
        raise ValueError("no predictable tokens")
    total = 0.0
    for start in range(0, n, _CHUNK):
        total += float(
            model.log_probs(
                samples.contexts[start : start + _CHUNK],
                samples.targets[start : start + _CHUNK],
            ).sum()
        )
    return PerplexityReport(token_count=n, total_log_prob=total)


def perplexity(model: LanguageModel, sentences: Sequence[Sequence[int]]) -> PerplexityReport:
    """Perplexity over encoded, padded sentences."""
    return perplexity_from_samples(model, samples_from_sentences(sentences, model.order))


@dataclass(frozen=True)
class AuthorModel:
    """A candidate author: model plus the vocabulary it was trained with."""

    author_id: str
    model: LanguageModel
    vocabulary: Vocabulary


@dataclass(frozen=True)
class ClassificationResult:
    predicted_author: str
    perplexities: Mapping[str, float]
    true_author: str | None = None

    @property
    def correct(self) -> bool:
        return self.true_author is not None and self.predicted_author == self.true_author


def classify(
    authors: Sequence[AuthorModel],
    token_sentences: Sequence[Sequence[str]],
    true_author: str | None = None,
) -> ClassificationResult:
    """Attribute pooled test sentences to the minimum-perplexity author.

    The sentences arrive as preprocessed tokens and are encoded separately
    under each candidate's vocabulary, so every model sees the same number
    of positions (out-of-vocabulary words become that author's unknown
    token rather than disappearing).
    """
    if not authors:
        raise ValueError("no candidate authors")
    if not token_sentences:
        raise ValueError("no test sentences")
    perps = {}
    best_index = None
    for i, author in enumerate(authors):
        order = author.model.order
        encoded = [
            encode_sentence(sent, author.vocabulary, order) for sent in token_sentences
        ]
        perps[author.author_id] = perplexity(author.model, encoded).perplexity
        if best_index is None or perps[author.author_id] < perps[authors[best_index].author_id]:
            best_index = i
    return ClassificationResult(
        predicted_author=authors[best_index].author_id,
        perplexities=perps,
        true_author=true_author,
    )


@dataclass(frozen=True)
class TrialRecord:
    author_id: str
    sentence_count: int
    trial: int
    predicted_author: str

    @property
    def correct(self) -> bool:
        return self.author_id == self.predicted_author


@dataclass(frozen=True)
class ExperimentReport:
    """All trial outcomes of one sweep (one model family, one split seed)."""

    author_ids: tuple[str, ...]
    sentence_counts: tuple[int, ...]
    trials: int
    seed: int
    excluded_authors: tuple[str, ...]
    records: tuple[TrialRecord, ...]

    def accuracy_by_count(self, include_excluded: bool = False) -> dict[int, float]:
        """Mean accuracy per sentence count over the non-excluded authors."""
        keep = {
            a for a in self.author_ids
            if include_excluded or a not in self.excluded_authors
        }
        hits = {s: 0 for s in self.sentence_counts}
        totals = {s: 0 for s in self.sentence_counts}
        for rec in self.records:
            if rec.author_id in keep:
                totals[rec.sentence_count] += 1
                hits[rec.sentence_count] += rec.correct
        return {
            s: hits[s] / totals[s] if totals[s] else float("nan")
            for s in self.sentence_counts
        }

    def confusion(self, sentence_count: int | None = None) -> np.ndarray:
        """Count matrix: entry (i, j) = trials of author i predicted as j."""
        index = {a: i for i, a in enumerate(self.author_ids)}
        k = len(self.author_ids)
        matrix = np.zeros((k, k), dtype=np.int64)
        for rec in self.records:
            if sentence_count is None or rec.sentence_count == sentence_count:
                matrix[index[rec.author_id], index[rec.predicted_author]] += 1
        return matrix


def confusion_matrix(report: ExperimentReport, sentence_count: int | None = None) -> np.ndarray:
    if not report.records:
        raise ValueError("report has no trials")
    return report.confusion(sentence_count)


def accuracy_sweep(
    authors: Sequence[AuthorModel],
    test_pools: Mapping[str, Sequence[Sequence[str]]],
    sentence_counts: Sequence[int],
    trials: int,
    seed: int,
    excluded_authors: Sequence[str] = (),
    workers: int = 1,
) -> ExperimentReport:
    """Classification accuracy versus test-text length.

    For each (author, sentence count, trial) the trial's own PCG64 stream,
    keyed by (seed, author index, count, trial), draws that many sentences
    from the author's test pool without replacement.  Keying each trial
    independently makes the report identical no matter how many workers
    run it.
    """
    sentence_counts = tuple(int(s) for s in sentence_counts)
    if any(s < 1 for s in sentence_counts):
        raise ValueError("sentence counts must be >= 1")
    max_s = max(sentence_counts, default=0)
    for i, author in enumerate(authors):
        pool = test_pools[author.author_id]
        if len(pool) < max_s:
            raise ValueError(
                f"author {author.author_id!r} has {len(pool)} test sentences, "
                f"need {max_s}"
            )

    tasks = [
        (i, s, t)
        for i, _ in enumerate(authors)
        for s in sentence_counts
        for t in range(trials)
    ]

    def run(task):
        i, s, t = task
        author = authors[i]
        pool = test_pools[author.author_id]
        rng = stream(seed, i, s, t)
        chosen = rng.choice(len(pool), size=s, replace=False)
        sentences = [pool[int(j)] for j in chosen]
        result = classify(authors, sentences, true_author=author.author_id)
        return TrialRecord(
            author_id=author.author_id,
            sentence_count=s,
            trial=t,
            predicted_author=result.predicted_author,
        )

    if workers > 1 and tasks:
        with ThreadPoolExecutor(max_workers=workers) as pool_exec:
            records = tuple(pool_exec.map(run, tasks))
    else:
        records = tuple(run(task) for task in tasks)

    return ExperimentReport(
        author_ids=tuple(a.author_id for a in authors),
        sentence_counts=sentence_counts,
        trials=trials,
        seed=seed,
        excluded_authors=tuple(excluded_authors),
        records=records,
    )


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Sample mean and n-1 standard deviation."""
    if len(values) < 2:
        raise ValueError("aggregation needs at least 2 values")
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std(ddof=1))


def aggregate_over_seeds(
    per_seed: Sequence[Mapping], keys: Sequence | None = None
) -> dict:
    """Mean and std per metric key across per-seed report dictionaries."""
    if len(per_seed) < 2:
        raise ValueError("need reports from at least 2 seeds")
    if keys is None:
        keys = list(per_seed[0].keys())
    return {k: mean_std([m[k] for m in per_seed]) for k in keys}


def format_mean_std(mean: float, std: float) -> str:
    return f"{mean:.1f}±{std:.1f}"


# ---------------------------------------------------------------------------
# report files

def timestamp_line() -> str:
    """Comment line excluded from byte-for-byte output comparisons."""
    return f"# generated {datetime.now(timezone.utc).isoformat()}"


def write_trials_csv(report: ExperimentReport, path: str | Path, method: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(timestamp_line() + "\n")
        writer = csv.writer(f)
        writer.writerow(
            ["method", "seed", "author", "sentence_count", "trial", "predicted", "correct"]
        )
        for rec in report.records:
            writer.writerow(
                [
                    method,
                    report.seed,
                    rec.author_id,
                    rec.sentence_count,
                    rec.trial,
                    rec.predicted_author,
                    int(rec.correct),
                ]
            )


def write_summary_csv(
    rows: Sequence[tuple[str, int, float, float]], path: str | Path
) -> None:
    """Rows of (method, sentence_count, mean_acc, std_acc)."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(timestamp_line() + "\n")
        writer = csv.writer(f)
        writer.writerow(["method", "s", "mean_acc", "std_acc"])
        for method, s, mean, std in rows:
            writer.writerow([method, s, repr(float(mean)), repr(float(std))])


def write_confusion_csv(
    matrix: np.ndarray, author_ids: Sequence[str], path: str | Path
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(timestamp_line() + "\n")
        writer = csv.writer(f)
        writer.writerow(["true\\predicted", *author_ids])
        for author, row in zip(author_ids, matrix):
            writer.writerow([author, *[int(x) for x in row]])


def write_json_summary(obj, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
