"""Deterministic run reports.

A report is a pure function of (input file, run configuration): keys are
sorted, floats use their shortest round-trip form, arrays become lists,
and files are written atomically (temp file + rename) so a crashed run
never leaves a half-written report. Each report embeds the sha256 of the
input file, so results cannot be attached to a stale problem file.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field, is_dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "Tolerances",
    "SampleCounts",
    "RunConfig",
    "Report",
    "digest_file",
    "to_jsonable",
    "render_json",
    "render_report",
    "write_text_atomic",
    "write_report",
    "write_csv",
]


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-8
    optimality: float = 1e-6
    boundary_rel: float = 1e-5

    def __post_init__(self):
        for name in ("feasibility", "optimality", "boundary_rel"):
            if not (getattr(self, name) > 0):
                raise DomainError(f"tolerance '{name}' must be positive")


@dataclass(frozen=True)
class SampleCounts:
    convexity_pairs: int = 2000
    certificate_samples: int = 10000
    budget_samples: int = 10000

    def __post_init__(self):
        for name in ("convexity_pairs", "certificate_samples", "budget_samples"):
            if int(getattr(self, name)) <= 0:
                raise DomainError(f"sample count '{name}' must be positive")


@dataclass(frozen=True)
class RunConfig:
    """Everything that, together with the input file, determines a run."""

    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)
    sample_counts: SampleCounts = field(default_factory=SampleCounts)
    output_path: str = "report.json"


@dataclass(frozen=True)
class Report:
    command: str
    inputs_digest: str
    config: RunConfig
    results: dict
    warnings: tuple[str, ...] = ()


def digest_file(path: str) -> str:
    with open(path, "rb") as fh:
        return "sha256:" + hashlib.sha256(fh.read()).hexdigest()


def to_jsonable(obj):
    """Recursively convert dataclasses/numpy values to plain JSON types."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: to_jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def render_json(payload) -> str:
    """The canonical byte form: sorted keys, two-space indent, trailing newline."""
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def render_report(report: Report) -> str:
    return render_json(report)


def _finish_tmp(tmp: str, path: str) -> None:
    # mkstemp files are 0600; give the result normal umask-derived bits
    umask = os.umask(0)
    os.umask(umask)
    os.chmod(tmp, 0o666 & ~umask)
    os.replace(tmp, path)


def write_text_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-report-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        _finish_tmp(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(report: Report, path: str | None = None) -> str:
    path = path or report.config.output_path
    write_text_atomic(path, render_report(report))
    return path


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    """Plain tabular output; floats keep their shortest round-trip form."""
    buf = []
    for row in rows:
        buf.append([repr(v) if isinstance(v, float) else v for v in row])
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-table-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(buf)
        _finish_tmp(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
