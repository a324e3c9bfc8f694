"""Experiment orchestration: seeded replication batches and trial-log files.

Trial logs are JSON Lines, one record per line, fixed key order:

    {"i":1,"a":"a","b":"b'","d1":1,"d2":-1}

Replication r of a batch uses seed = base_seed + r (r = 0..replications-1),
so any single replication can be replayed in isolation. Reading streams and
validates line by line; analysis is single-pass with O(1) state, so logs of
arbitrary length can be ingested.
"""

from __future__ import annotations

import json
import math
import os
from collections.abc import Iterable, Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ._jsonfmt import sig_figs
from .stats import QUANTUM_MEAN, AnalysisReport, analyze
from .trials import (
    OUTCOMES,
    SETTINGS_1,
    SETTINGS_2,
    Strategy,
    TrialRecord,
    simulate,
    strategy_from_json,
    strategy_to_json,
    validate_record,
)


class SchemaError(ValueError):
    """A trial-log line does not match the JSONL schema."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def write_log(trials: Iterable[TrialRecord], path: str | os.PathLike) -> int:
    """Write records as JSONL; returns the number of lines written."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for t in trials:
            validate_record(t.index, t.a, t.b, t.d1, t.d2)
            fh.write(f'{{"i":{t.index},"a":"{t.a}","b":"{t.b}","d1":{t.d1},"d2":{t.d2}}}\n')
            count += 1
    return count


_REQUIRED_KEYS = frozenset(("i", "a", "b", "d1", "d2"))


def iter_log(path: str | os.PathLike) -> Iterator[TrialRecord]:
    """Stream records from a JSONL file, validating every line.

    Raises SchemaError with the 1-based line number on the first malformed
    line: bad JSON, missing/unknown keys, unknown setting labels, outcomes
    outside {-1, 1}, or a non-positive trial index.
    """
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                raise SchemaError(line_number, "blank line")
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise SchemaError(line_number, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise SchemaError(line_number, "record must be a JSON object")
            keys = obj.keys()
            if keys != _REQUIRED_KEYS:
                missing = _REQUIRED_KEYS - keys
                extra = keys - _REQUIRED_KEYS
                parts = []
                if missing:
                    parts.append(f"missing fields {sorted(missing)}")
                if extra:
                    parts.append(f"unknown fields {sorted(extra)}")
                raise SchemaError(line_number, ", ".join(parts))
            try:
                validate_record(obj["i"], obj["a"], obj["b"], obj["d1"], obj["d2"])
            except ValueError as exc:
                raise SchemaError(line_number, str(exc)) from exc
            yield TrialRecord(obj["i"], obj["a"], obj["b"], obj["d1"], obj["d2"])


def read_log(path: str | os.PathLike) -> list[TrialRecord]:
    """Load a full JSONL trial log into memory."""
    return list(iter_log(path))


def analyze_log_file(path: str | os.PathLike, seed: int | None = None) -> AnalysisReport:
    """Single-pass analysis straight off the file stream."""
    return analyze(iter_log(path), seed=seed)


@dataclass(frozen=True)
class ExperimentConfig:
    """A replicated experiment: strategy, trials per run, seeds, and cut z."""

    strategy: Strategy
    n: int
    base_seed: int
    replications: int = 1
    z: float = QUANTUM_MEAN

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not isinstance(self.replications, int) or self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications!r}")
        if not isinstance(self.base_seed, int) or self.base_seed < 0:
            raise ValueError(f"base_seed must be a non-negative integer, got {self.base_seed!r}")
        if not -1.0 < self.z <= 1.0:
            raise ValueError(f"z must lie in (-1, 1], got {self.z!r}")

    def seed_for(self, replication: int) -> int:
        return self.base_seed + replication

    def to_dict(self) -> dict:
        return {
            "strategy": strategy_to_json(self.strategy),
            "n": self.n,
            "base_seed": self.base_seed,
            "replications": self.replications,
            "z": self.z,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        return cls(
            strategy=strategy_from_json(doc["strategy"]),
            n=int(doc["n"]),
            base_seed=int(doc["base_seed"]),
            replications=int(doc.get("replications", 1)),
            z=float(doc.get("z", QUANTUM_MEAN)),
        )


@dataclass(frozen=True)
class BatchResult:
    """Per-replication reports plus batch-level aggregates."""

    config: ExperimentConfig
    reports: tuple[AnalysisReport, ...] = field(repr=False)
    rejection_rate: float = 0.0
    c_bar_mean: float = 0.0
    c_bar_std: float = 0.0
    c_bar_min: float = 0.0
    c_bar_max: float = 0.0

    def to_dict(self, include_reports: bool = True) -> dict:
        doc = {
            "config": self.config.to_dict(),
            "rejection_rate": self.rejection_rate,
            "c_bar_summary": {
                "mean": self.c_bar_mean,
                "std": self.c_bar_std,
                "min": self.c_bar_min,
                "max": self.c_bar_max,
            },
            "display": {
                "rejection_rate": sig_figs(self.rejection_rate),
                "c_bar_mean": sig_figs(self.c_bar_mean),
            },
        }
        if include_reports:
            doc["replications"] = [r.to_dict() for r in self.reports]
        return doc


def run_batch(config: ExperimentConfig, max_workers: int = 1,
              log_dir: str | os.PathLike | None = None) -> BatchResult:
    """Run every replication and aggregate.

    Deterministic for a given config: replication r simulates with seed
    base_seed + r and its report records that seed. Replications are
    independent; with max_workers > 1 they run on a thread pool (the
    compiled kernels release the GIL) and are still reduced in replication
    order. With log_dir set, each replication's log is written to
    ``<log_dir>/replication_<r>.jsonl``.
    """
    def one(r: int) -> AnalysisReport:
        seed = config.seed_for(r)
        trials = simulate(config.strategy, config.n, seed)
        if log_dir is not None:
            write_log(trials, os.path.join(log_dir, f"replication_{r}.jsonl"))
        return analyze(trials, seed=seed)

    indices = range(config.replications)
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            reports = list(pool.map(one, indices))
    else:
        reports = [one(r) for r in indices]

    c_bars = [r.c_bar for r in reports]
    mean = math.fsum(c_bars) / len(c_bars)
    var = math.fsum((c - mean) ** 2 for c in c_bars) / len(c_bars)
    rejections = sum(1 for c in c_bars if c > config.z)
    return BatchResult(
        config=config,
        reports=tuple(reports),
        rejection_rate=rejections / config.replications,
        c_bar_mean=mean,
        c_bar_std=math.sqrt(var),
        c_bar_min=min(c_bars),
        c_bar_max=max(c_bars),
    )
