"""Result containers shared by all solvers."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

SCHEMA_VERSION = 1


@dataclass
class StartRecord:
    start: np.ndarray
    weights: np.ndarray
    utility: float
    iterations: int
    utility_trace: list[float]
    termination: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "start": [float(x) for x in self.start],
            "weights": [float(x) for x in self.weights],
            "utility": float(self.utility),
            "iterations": int(self.iterations),
            "termination": self.termination,
            "utility_trace": [float(x) for x in self.utility_trace],
        }
        for key, value in self.extra.items():
            out[key] = _jsonable(value)
        return out


@dataclass
class SolveReport:
    method: str
    records: list[StartRecord]
    timings: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    dataset: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def best_index(self) -> int:
        # first maximizer, so ties resolve to the lowest start index
        return int(np.argmax([r.utility for r in self.records]))

    @property
    def best(self) -> StartRecord:
        return self.records[self.best_index]

    def to_dict(self, include_timings: bool = True) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "method": self.method,
            "config": _jsonable(self.config),
            "dataset": _jsonable(self.dataset),
            "best_index": self.best_index,
            "best": self.best.to_dict(),
            "records": [r.to_dict() for r in self.records],
        }
        if self.extra:
            out["extra"] = _jsonable(self.extra)
        if include_timings:
            out["timings"] = {k: float(v) for k, v in self.timings.items()}
        return out


def merge_reports(method: str, reports: list[SolveReport]) -> SolveReport:
    records = [rec for rep in reports for rec in rep.records]
    timings: dict = {}
    for rep in reports:
        for key, value in rep.timings.items():
            timings[key] = timings.get(key, 0.0) + value
    config = reports[0].config if reports else {}
    return SolveReport(method=method, records=records, timings=timings, config=config)


def dataset_fingerprint(R) -> dict:
    R = np.ascontiguousarray(np.asarray(R, dtype=float))
    return {
        "n_samples": int(R.shape[0]),
        "n_assets": int(R.shape[1]),
        "sha256": hashlib.sha256(R.tobytes()).hexdigest(),
    }


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value
