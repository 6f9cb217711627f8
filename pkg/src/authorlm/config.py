"""Run configuration: one JSON file drives the whole pipeline.

Values resolve in order: built-in defaults, then the config file, then
``--set key=value`` overrides, then dedicated command-line flags.  Every
command validates the fields it uses before touching the filesystem.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    pass


_DEFAULTS: dict[str, Any] = {
    "corpus_dir": "corpus",
    "output_dir": "outputs",
    "workers": 1,
    "pipeline": {
        "stemming": True,
        "prune_threshold": 1e-5,
        "order": 4,
    },
    "split": {
        "ratios": [0.8, 0.1, 0.1],
        "seeds": [0],
    },
    "nnlm": {
        "embed_dim": 50,
        "hidden_dim": 200,
        "batch_size": 100,
        "learning_rate": 0.1,
        "momentum": 0.9,
        "max_epochs": 20,
        "patience": 5,
        "init_scale": 0.1,
    },
    "experiment": {
        "sentence_counts": list(range(1, 21)),
        "trials": 100,
        "excluded_authors": [],
    },
    "synth": {
        "authors": 8,
        "lexicon_size": 50,
        "sentences": 2000,
        "seed": 7,
        "length_range": [4, 11],
        "concentration": 0.1,
    },
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass
class RunConfig:
    data: dict = field(default_factory=lambda: copy.deepcopy(_DEFAULTS))

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})")
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: top level must be an object")
        unknown = set(loaded) - set(_DEFAULTS)
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
        return cls(data=_merge(_DEFAULTS, loaded))

    def apply_override(self, dotted: str, raw: str) -> None:
        """Apply one ``section.key=value`` override; values parse as JSON
        first and fall back to plain strings."""
        node = self.data
        *parents, last = dotted.split(".")
        for part in parents:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"unknown config section {dotted!r}")
            node = node[part]
        if last not in node:
            raise ConfigError(f"unknown config key {dotted!r}")
        try:
            node[last] = json.loads(raw)
        except json.JSONDecodeError:
            node[last] = raw

    # typed accessors -------------------------------------------------

    @property
    def corpus_dir(self) -> Path:
        return Path(self.data["corpus_dir"])

    @property
    def output_dir(self) -> Path:
        return Path(self.data["output_dir"])

    @property
    def workers(self) -> int:
        return int(self.data["workers"])

    @property
    def pipeline(self) -> dict:
        return self.data["pipeline"]

    @property
    def split(self) -> dict:
        return self.data["split"]

    @property
    def nnlm(self) -> dict:
        return self.data["nnlm"]

    @property
    def experiment(self) -> dict:
        return self.data["experiment"]

    @property
    def synth(self) -> dict:
        return self.data["synth"]

    @property
    def seeds(self) -> list[int]:
        return [int(s) for s in self.split["seeds"]]

    def validate(self, need_corpus: bool = True) -> None:
        p = self.pipeline
        if int(p["order"]) < 2:
            raise ConfigError("pipeline.order must be >= 2")
        if not 0.0 <= float(p["prune_threshold"]) <= 1.0:
            raise ConfigError("pipeline.prune_threshold must be in [0, 1]")
        ratios = self.split["ratios"]
        if len(ratios) != 3:
            raise ConfigError("split.ratios must have three entries")
        if abs(sum(float(r) for r in ratios) - 1.0) > 1e-9:
            raise ConfigError("split.ratios must sum to 1")
        if not self.seeds:
            raise ConfigError("split.seeds must be nonempty")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        exp = self.experiment
        if int(exp["trials"]) < 0:
            raise ConfigError("experiment.trials must be >= 0")
        if any(int(s) < 1 for s in exp["sentence_counts"]):
            raise ConfigError("experiment.sentence_counts must all be >= 1")
        for key in ("embed_dim", "hidden_dim", "batch_size", "max_epochs", "patience"):
            if int(self.nnlm[key]) < 1:
                raise ConfigError(f"nnlm.{key} must be >= 1")
        if float(self.nnlm["learning_rate"]) <= 0:
            raise ConfigError("nnlm.learning_rate must be positive")
        if not 0.0 <= float(self.nnlm["momentum"]) < 1.0:
            raise ConfigError("nnlm.momentum must be in [0, 1)")
        if need_corpus and not self.corpus_dir.is_dir():
            raise ConfigError(f"corpus directory not found: {self.corpus_dir}")
